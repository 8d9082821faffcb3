//! Scenario files: a TOML rendering of lattice, type spaces, outcomes, valuations,
//! scheme and named draws.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::AwarenessLattice;
use crate::outcome::{OutcomeId, OutcomeInput, OutcomeModel};
use crate::transfers::{Mechanism, SchemeConfig, SchemeKind, TransferError, YTable};
use crate::types::{NatureDraw, StructureInput, TypeStructure};
use crate::value::{format_q, parse_q, Q};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid scenario:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),
}

/// A rational written either as an integer or as `"p/q"`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum QText {
    Int(i64),
    Text(String),
}

impl QText {
    pub fn parse(&self) -> Result<Q, String> {
        match self {
            QText::Int(n) => parse_q(&n.to_string()).map_err(|e| e.to_string()),
            QText::Text(s) => parse_q(s).map_err(|e| e.to_string()),
        }
    }
}

impl From<Q> for QText {
    fn from(q: Q) -> Self {
        if *q.denom() == 1 {
            QText::Int(*q.numer())
        } else {
            QText::Text(format_q(&q))
        }
    }
}

impl From<i64> for QText {
    fn from(n: i64) -> Self {
        QText::Int(n)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub levels: Vec<String>,
    /// Covering pairs `[lower, upper]`; the order is their reflexive-transitive closure.
    #[serde(default)]
    pub edges: Vec<[String; 2]>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypesSpec {
    pub agent: String,
    pub level: String,
    pub ids: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectionSpec {
    pub agent: String,
    pub from: String,
    pub to: String,
    pub map: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AvailabilitySpec {
    pub level: String,
    pub ids: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomesSpec {
    pub ids: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tie_break: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub available: Vec<AvailabilitySpec>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValuationSpec {
    pub agent: String,
    #[serde(rename = "type")]
    pub ty: String,
    pub values: BTreeMap<String, QText>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct YSpec {
    pub agent: String,
    pub level: String,
    /// Opponents' types in agent order.
    pub opponents: Vec<String>,
    pub value: QText,
}

fn yes() -> bool {
    true
}

fn is_true(b: &bool) -> bool {
    *b
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemeSpec {
    pub kind: SchemeKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub y: Vec<YSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_default: Option<QText>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub buyer: Option<String>,
    /// Seller to the outcome in which she supplies.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub suppliers: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "is_false")]
    pub rspa_simplified: bool,
    #[serde(default = "yes", skip_serializing_if = "is_true")]
    pub adjustments: bool,
}

impl Default for SchemeSpec {
    fn default() -> Self {
        SchemeSpec {
            kind: SchemeKind::Clarke,
            y: Vec::new(),
            y_default: None,
            buyer: None,
            suppliers: BTreeMap::new(),
            rspa_simplified: false,
            adjustments: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DrawSpec {
    pub name: String,
    /// Top-level types in agent order.
    pub true_types: Vec<String>,
    /// Awareness levels in agent order.
    pub awareness: Vec<String>,
}

/// The raw file contents, referring to everything by name.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: String,
    pub agents: Vec<String>,
    pub lattice: LatticeSpec,
    #[serde(default)]
    pub types: Vec<TypesSpec>,
    #[serde(default)]
    pub projections: Vec<ProjectionSpec>,
    pub outcomes: OutcomesSpec,
    #[serde(default)]
    pub valuations: Vec<ValuationSpec>,
    #[serde(default)]
    pub scheme: SchemeSpec,
    #[serde(default)]
    pub draws: Vec<DrawSpec>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NamedDraw {
    pub name: String,
    pub draw: NatureDraw,
}

/// A fully validated environment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scenario {
    pub name: String,
    pub types: TypeStructure,
    pub outcomes: OutcomeModel,
    pub scheme: SchemeConfig,
    pub draws: Vec<NamedDraw>,
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self, ScenarioError> {
        let spec: ScenarioSpec = toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
        Self::from_spec(&spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        let p = path.as_ref();
        let text = fs::read_to_string(p).map_err(|source| ScenarioError::Io { path: p.display().to_string(), source })?;
        Self::from_toml_str(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ScenarioError> {
        let p = path.as_ref();
        fs::write(p, self.to_toml_string()).map_err(|source| ScenarioError::Io { path: p.display().to_string(), source })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(&self.to_spec()).expect("scenario specs always serialize")
    }

    /// Validates a spec section by section, reporting every violation found.
    pub fn from_spec(spec: &ScenarioSpec) -> Result<Self, ScenarioError> {
        let invalid = |section: &str, msgs: Vec<String>| {
            ScenarioError::Validation(msgs.into_iter().map(|m| format!("[{section}] {m}")).collect())
        };
        let edges: Vec<(&str, &str)> = spec.lattice.edges.iter().map(|[a, b]| (a.as_str(), b.as_str())).collect();
        let levels: Vec<&str> = spec.lattice.levels.iter().map(String::as_str).collect();
        let lattice = AwarenessLattice::new(&levels, &edges).map_err(|e| invalid("lattice", vec![e.to_string()]))?;

        let sinput = StructureInput {
            agents: spec.agents.clone(),
            spaces: spec.types.iter().map(|t| (t.agent.clone(), t.level.clone(), t.ids.clone())).collect(),
            projections: spec
                .projections
                .iter()
                .map(|p| {
                    let pairs = p.map.iter().map(|(a, b)| (a.clone(), b.clone())).collect();
                    (p.agent.clone(), p.from.clone(), p.to.clone(), pairs)
                })
                .collect(),
        };
        let types = TypeStructure::new(lattice, &sinput).map_err(|e| match e {
            crate::types::StructureError::Invalid(v) => invalid("types", v.iter().map(|x| x.to_string()).collect()),
            other => invalid("types", vec![other.to_string()]),
        })?;

        let mut bad = Vec::new();
        let mut valuations = Vec::new();
        for v in &spec.valuations {
            for (o, q) in &v.values {
                match q.parse() {
                    Ok(q) => valuations.push((v.agent.clone(), v.ty.clone(), o.clone(), q)),
                    Err(e) => bad.push(format!("agent {} type {} outcome {o}: {e}", v.agent, v.ty)),
                }
            }
        }
        if !bad.is_empty() {
            return Err(invalid("valuations", bad));
        }
        let oinput = OutcomeInput {
            outcomes: spec.outcomes.ids.clone(),
            available: spec.outcomes.available.iter().map(|a| (a.level.clone(), a.ids.clone())).collect(),
            tie_break: spec.outcomes.tie_break.clone(),
            valuations,
        };
        let outcomes = OutcomeModel::new(&types, &oinput).map_err(|e| match e {
            crate::outcome::OutcomeError::Invalid(v) => invalid("outcomes", v.iter().map(|x| x.to_string()).collect()),
            other => invalid("outcomes", vec![other.to_string()]),
        })?;

        let scheme = scheme_from_spec(&types, &outcomes, &spec.scheme).map_err(|m| invalid("scheme", m))?;
        let draws = draws_from_spec(&types, &spec.draws).map_err(|m| invalid("draws", m))?;
        let sc = Scenario { name: spec.name.clone(), types, outcomes, scheme, draws };
        sc.mechanism().map_err(|e| invalid("scheme", vec![e.to_string()]))?;
        Ok(sc)
    }

    /// Canonical spec: every covering projection, every availability row and every
    /// stored valuation written out.
    pub fn to_spec(&self) -> ScenarioSpec {
        let ts = &self.types;
        let om = &self.outcomes;
        let l = ts.lattice();
        let lname = |x| l.name(x).to_string();
        let mut types = Vec::new();
        let mut projections = Vec::new();
        let mut valuations = Vec::new();
        for (a, agent) in ts.agents().iter().enumerate() {
            for &lv in l.bottom_up() {
                let ids = ts.space(a, lv).iter().map(|&t| ts.name(t).to_string()).collect();
                types.push(TypesSpec { agent: agent.clone(), level: lname(lv), ids });
            }
            for &(lo, hi) in l.covers() {
                let map = ts
                    .space(a, hi)
                    .iter()
                    .map(|&t| (ts.name(t).to_string(), ts.name(ts.project(t, lo).expect("cover")).to_string()))
                    .collect();
                projections.push(ProjectionSpec { agent: agent.clone(), from: lname(hi), to: lname(lo), map });
            }
            for &lv in l.bottom_up() {
                for &t in ts.space(a, lv) {
                    let values: BTreeMap<String, QText> = (0..om.len())
                        .filter_map(|k| om.raw_value(t, OutcomeId(k)).map(|q| (om.name(OutcomeId(k)).to_string(), q.into())))
                        .collect();
                    if !values.is_empty() {
                        valuations.push(ValuationSpec { agent: agent.clone(), ty: ts.name(t).to_string(), values });
                    }
                }
            }
        }
        let available = l
            .bottom_up()
            .iter()
            .map(|&lv| AvailabilitySpec { level: lname(lv), ids: om.available(lv).iter().map(|&o| om.name(o).to_string()).collect() })
            .collect();
        let outcomes = OutcomesSpec {
            ids: om.names().to_vec(),
            tie_break: om.tie_order().iter().map(|&o| om.name(o).to_string()).collect(),
            available,
        };
        let cfg = &self.scheme;
        let agent = |i: usize| ts.agents()[i].clone();
        let mut y: Vec<YSpec> = cfg
            .y
            .entries
            .iter()
            .map(|((i, lv, opp), q)| YSpec {
                agent: agent(*i),
                level: lname(*lv),
                opponents: opp.iter().map(|&t| ts.name(t).to_string()).collect(),
                value: (*q).into(),
            })
            .collect();
        y.sort_by(|a, b| (&a.agent, &a.level, &a.opponents).cmp(&(&b.agent, &b.level, &b.opponents)));
        let scheme = SchemeSpec {
            kind: cfg.kind,
            y,
            y_default: cfg.y.default.map(QText::from),
            buyer: cfg.buyer.map(agent),
            suppliers: cfg.suppliers.iter().map(|&(i, o)| (agent(i), om.name(o).to_string())).collect(),
            rspa_simplified: cfg.rspa_simplified,
            adjustments: cfg.adjustments,
        };
        let draws = self
            .draws
            .iter()
            .map(|d| DrawSpec {
                name: d.name.clone(),
                true_types: d.draw.true_types.iter().map(|&t| ts.name(t).to_string()).collect(),
                awareness: d.draw.awareness.iter().map(|&x| lname(x)).collect(),
            })
            .collect();
        ScenarioSpec {
            name: self.name.clone(),
            agents: ts.agents().to_vec(),
            lattice: LatticeSpec {
                levels: l.names().to_vec(),
                edges: l.covers().iter().map(|&(a, b)| [lname(a), lname(b)]).collect(),
            },
            types,
            projections,
            outcomes,
            valuations,
            scheme,
            draws,
        }
    }

    /// The mechanism under the scenario's own scheme.
    pub fn mechanism(&self) -> Result<Mechanism<'_>, TransferError> {
        Mechanism::new(&self.types, &self.outcomes, &self.scheme)
    }

    /// The mechanism under another scheme configuration.
    pub fn mechanism_with<'a>(&'a self, cfg: &'a SchemeConfig) -> Result<Mechanism<'a>, TransferError> {
        Mechanism::new(&self.types, &self.outcomes, cfg)
    }

    pub fn draw(&self, name: &str) -> Option<&NatureDraw> {
        self.draws.iter().find(|d| d.name == name).map(|d| &d.draw)
    }
}

fn scheme_from_spec(ts: &TypeStructure, om: &OutcomeModel, s: &SchemeSpec) -> Result<SchemeConfig, Vec<String>> {
    let mut bad = Vec::new();
    let lattice = ts.lattice();
    let agent = |name: &str, bad: &mut Vec<String>| {
        let r = ts.agent_index(name);
        if r.is_none() {
            bad.push(format!("unknown agent `{name}`"));
        }
        r
    };
    let mut y = YTable { entries: Default::default(), default: None };
    if let Some(d) = &s.y_default {
        match d.parse() {
            Ok(q) => y.default = Some(q),
            Err(e) => bad.push(format!("y_default: {e}")),
        }
    }
    for e in &s.y {
        let Some(i) = agent(&e.agent, &mut bad) else { continue };
        let Ok(lv) = lattice.level(&e.level) else {
            bad.push(format!("y entry: unknown level `{}`", e.level));
            continue;
        };
        let others: Vec<usize> = (0..ts.n_agents()).filter(|&j| j != i).collect();
        if others.len() != e.opponents.len() {
            bad.push(format!("y entry for agent {}: expected {} opponent types", e.agent, others.len()));
            continue;
        }
        let mut opp = Vec::new();
        for (&j, name) in others.iter().zip(&e.opponents) {
            match ts.type_id(j, name) {
                Ok(t) if ts.level_of(t) == lv => opp.push(t),
                _ => bad.push(format!("y entry for agent {}: `{name}` is not a type of agent {} at level {}", e.agent, ts.agents()[j], e.level)),
            }
        }
        match e.value.parse() {
            Ok(q) if opp.len() == others.len() => {
                if y.entries.insert((i, lv, opp), q).is_some() {
                    bad.push(format!("duplicate y entry for agent {} at level {}", e.agent, e.level));
                }
            }
            Ok(_) => {}
            Err(err) => bad.push(format!("y entry: {err}")),
        }
    }
    let buyer = s.buyer.as_deref().and_then(|b| agent(b, &mut bad));
    let mut suppliers = Vec::new();
    for (a, o) in &s.suppliers {
        let i = agent(a, &mut bad);
        let oid = om.outcome(o);
        if oid.is_none() {
            bad.push(format!("supplier {a}: unknown outcome `{o}`"));
        }
        if let (Some(i), Some(oid)) = (i, oid) {
            suppliers.push((i, oid));
        }
    }
    suppliers.sort();
    if bad.is_empty() {
        Ok(SchemeConfig { kind: s.kind, y, buyer, suppliers, rspa_simplified: s.rspa_simplified, adjustments: s.adjustments })
    } else {
        Err(bad)
    }
}

fn draws_from_spec(ts: &TypeStructure, draws: &[DrawSpec]) -> Result<Vec<NamedDraw>, Vec<String>> {
    let mut bad = Vec::new();
    let mut out = Vec::new();
    let lattice = ts.lattice();
    for d in draws {
        if d.true_types.len() != ts.n_agents() || d.awareness.len() != ts.n_agents() {
            bad.push(format!("draw {}: expected one type and one level per agent", d.name));
            continue;
        }
        let mut types = Vec::new();
        let mut aw = Vec::new();
        for (i, (t, a)) in d.true_types.iter().zip(&d.awareness).enumerate() {
            match ts.type_id(i, t) {
                Ok(id) if ts.level_of(id) == lattice.top() => types.push(id),
                _ => bad.push(format!("draw {}: `{t}` is not a top-level type of agent {}", d.name, ts.agents()[i])),
            }
            match lattice.level(a) {
                Ok(l) => aw.push(l),
                Err(e) => bad.push(format!("draw {}: {e}", d.name)),
            }
        }
        if out.iter().any(|x: &NamedDraw| x.name == d.name) {
            bad.push(format!("draw {} declared twice", d.name));
        }
        if types.len() == ts.n_agents() && aw.len() == ts.n_agents() {
            out.push(NamedDraw { name: d.name.clone(), draw: NatureDraw { true_types: types, awareness: aw } });
        }
    }
    if bad.is_empty() {
        Ok(out)
    } else {
        Err(bad)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "minimal"
agents = ["solo"]

[lattice]
levels = ["only"]

[[types]]
agent = "solo"
level = "only"
ids = ["t"]

[outcomes]
ids = ["x", "y"]

[[valuations]]
agent = "solo"
type = "t"
values = { x = 1, y = "3/2" }
"#;

    #[test]
    fn minimal_file_loads() {
        let sc = Scenario::from_toml_str(MINIMAL).unwrap();
        assert_eq!(sc.types.n_agents(), 1);
        assert_eq!(sc.scheme.kind, SchemeKind::Clarke);
        let y = sc.outcomes.outcome("y").unwrap();
        assert_eq!(sc.outcomes.efficient_outcome(&sc.types, &[sc.types.type_id(0, "t").unwrap()]).unwrap(), y);
    }

    #[test]
    fn round_trip_is_identity() {
        let sc = Scenario::from_toml_str(MINIMAL).unwrap();
        let text = sc.to_toml_string();
        let back = Scenario::from_toml_str(&text).unwrap();
        assert_eq!(sc, back);
        assert_eq!(text, back.to_toml_string());
    }

    #[test]
    fn missing_projection_is_named() {
        let text = r#"
name = "broken"
agents = ["1"]
[lattice]
levels = ["lo", "hi"]
edges = [["lo", "hi"]]
[[types]]
agent = "1"
level = "lo"
ids = ["a"]
[[types]]
agent = "1"
level = "hi"
ids = ["A"]
[outcomes]
ids = ["x"]
"#;
        match Scenario::from_toml_str(text) {
            Err(ScenarioError::Validation(v)) => {
                assert!(v.iter().any(|m| m.contains("missing projection hi -> lo")), "{v:?}");
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn parse_errors_carry_locations() {
        match Scenario::from_toml_str("name = \"x\"\nagents = [\n") {
            Err(ScenarioError::Parse(m)) => assert!(m.contains("line"), "{m}"),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn bad_rational_is_reported() {
        let text = MINIMAL.replace("\"3/2\"", "\"3/0\"");
        assert!(matches!(Scenario::from_toml_str(&text), Err(ScenarioError::Validation(_))));
    }
}
