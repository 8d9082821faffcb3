//! Physical outcomes, valuations and the efficient outcome functions.

use std::collections::HashMap;
use std::fmt;

use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::Level;
use crate::types::{TypeId, TypeStructure};
use crate::value::Q;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct OutcomeId(pub usize);

/// Declared but unvalidated outcome data, by name.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OutcomeInput {
    pub outcomes: Vec<String>,
    /// `(level, outcomes)`; unlisted levels make every outcome available.
    pub available: Vec<(String, Vec<String>)>,
    /// Highest priority first. Empty means lexicographic by name.
    pub tie_break: Vec<String>,
    /// `(agent, type, outcome, value)`.
    pub valuations: Vec<(String, String, String, Q)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OutcomeViolation {
    NoOutcomes,
    DuplicateOutcome(String),
    UnknownOutcome(String),
    UnknownLevel(String),
    UnknownAgent(String),
    UnknownType { agent: String, ty: String },
    EmptyAvailability(String),
    TieBreakNotTotal,
    DuplicateValuation { agent: String, ty: String, outcome: String },
    MissingValuation { agent: String, ty: String, outcome: String },
}

impl fmt::Display for OutcomeViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use OutcomeViolation::*;
        match self {
            NoOutcomes => write!(f, "no outcomes declared"),
            DuplicateOutcome(o) => write!(f, "outcome `{o}` declared twice"),
            UnknownOutcome(o) => write!(f, "unknown outcome `{o}`"),
            UnknownLevel(l) => write!(f, "unknown level `{l}`"),
            UnknownAgent(a) => write!(f, "unknown agent `{a}`"),
            UnknownType { agent, ty } => write!(f, "agent {agent}: unknown type `{ty}`"),
            EmptyAvailability(l) => write!(f, "no outcome available at level {l}"),
            TieBreakNotTotal => write!(f, "tie-break order must list every outcome exactly once"),
            DuplicateValuation { agent, ty, outcome } => write!(f, "valuation of agent {agent}, type {ty}, outcome {outcome} given twice"),
            MissingValuation { agent, ty, outcome } => write!(f, "missing valuation of agent {agent}, type {ty}, outcome {outcome}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum OutcomeError {
    #[error("invalid outcome model: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<OutcomeViolation>),
    #[error("missing valuation for type {ty} at outcome {outcome}")]
    MissingValuation { ty: String, outcome: String },
}

/// Outcomes `X_0`, availability `X_0^ℓ`, valuations `v_i` and the tie-break order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OutcomeModel {
    names: Vec<String>,
    available: Vec<Vec<OutcomeId>>,
    tie_order: Vec<OutcomeId>,
    val: Vec<Vec<Option<Q>>>,
}

impl OutcomeModel {
    /// Validates outcome data against a type structure. Every type must be valued at
    /// every outcome available at any level weakly below its own.
    pub fn new(ts: &TypeStructure, input: &OutcomeInput) -> Result<Self, OutcomeError> {
        use OutcomeViolation as V;
        let lattice = ts.lattice();
        let mut bad = Vec::new();
        if input.outcomes.is_empty() {
            bad.push(V::NoOutcomes);
        }
        let mut ix = HashMap::new();
        for (k, o) in input.outcomes.iter().enumerate() {
            if ix.insert(o.clone(), OutcomeId(k)).is_some() {
                bad.push(V::DuplicateOutcome(o.clone()));
            }
        }
        let lookup = |o: &String, bad: &mut Vec<V>| -> Option<OutcomeId> {
            let r = ix.get(o).copied();
            if r.is_none() {
                bad.push(V::UnknownOutcome(o.clone()));
            }
            r
        };

        let tie_order: Vec<OutcomeId> = if input.tie_break.is_empty() {
            let mut v: Vec<OutcomeId> = (0..input.outcomes.len()).map(OutcomeId).collect();
            v.sort_by(|a, b| input.outcomes[a.0].cmp(&input.outcomes[b.0]));
            v
        } else {
            let v: Vec<OutcomeId> = input.tie_break.iter().filter_map(|o| lookup(o, &mut bad)).collect();
            let mut seen = v.clone();
            seen.sort();
            seen.dedup();
            if seen.len() != input.outcomes.len() || v.len() != input.outcomes.len() {
                bad.push(V::TieBreakNotTotal);
            }
            v
        };
        let mut rank = vec![usize::MAX; input.outcomes.len()];
        for (r, o) in tie_order.iter().enumerate() {
            rank[o.0] = r;
        }

        let all: Vec<OutcomeId> = tie_order.clone();
        let mut available = vec![all; lattice.len()];
        for (level, outs) in &input.available {
            let Ok(l) = lattice.level(level) else {
                bad.push(V::UnknownLevel(level.clone()));
                continue;
            };
            let mut set: Vec<OutcomeId> = outs.iter().filter_map(|o| lookup(o, &mut bad)).collect();
            set.sort_by_key(|o| rank[o.0]);
            set.dedup();
            if set.is_empty() {
                bad.push(V::EmptyAvailability(level.clone()));
            }
            available[l.0] = set;
        }

        let mut val = vec![vec![None; input.outcomes.len()]; ts.n_types()];
        for (agent, ty, outcome, q) in &input.valuations {
            let Some(a) = ts.agent_index(agent) else {
                bad.push(V::UnknownAgent(agent.clone()));
                continue;
            };
            let Ok(t) = ts.type_id(a, ty) else {
                bad.push(V::UnknownType { agent: agent.clone(), ty: ty.clone() });
                continue;
            };
            let Some(o) = lookup(outcome, &mut bad) else { continue };
            if val[t.0][o.0].replace(*q).is_some() {
                bad.push(V::DuplicateValuation { agent: agent.clone(), ty: ty.clone(), outcome: outcome.clone() });
            }
        }
        if !bad.is_empty() {
            return Err(OutcomeError::Invalid(bad));
        }

        for t in (0..ts.n_types()).map(TypeId) {
            let info = ts.info(t);
            let mut need: Vec<OutcomeId> = lattice.down_set(info.level).iter().flat_map(|l| available[l.0].clone()).collect();
            need.sort();
            need.dedup();
            for o in need {
                if val[t.0][o.0].is_none() {
                    bad.push(V::MissingValuation {
                        agent: ts.agents()[info.agent].clone(),
                        ty: info.name.clone(),
                        outcome: input.outcomes[o.0].clone(),
                    });
                }
            }
        }
        if !bad.is_empty() {
            return Err(OutcomeError::Invalid(bad));
        }
        Ok(OutcomeModel { names: input.outcomes.clone(), available, tie_order, val })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, o: OutcomeId) -> &str {
        &self.names[o.0]
    }

    pub fn outcome(&self, name: &str) -> Option<OutcomeId> {
        self.names.iter().position(|n| n == name).map(OutcomeId)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// `X_0^ℓ`, in tie-break order.
    pub fn available(&self, l: Level) -> &[OutcomeId] {
        &self.available[l.0]
    }

    /// Highest priority first.
    pub fn tie_order(&self) -> &[OutcomeId] {
        &self.tie_order
    }

    /// Stored valuation, if any.
    pub fn raw_value(&self, t: TypeId, o: OutcomeId) -> Option<Q> {
        self.val[t.0][o.0]
    }

    /// `v_i(x_0, t_i)`.
    pub fn value(&self, ts: &TypeStructure, t: TypeId, o: OutcomeId) -> Result<Q, OutcomeError> {
        self.val[t.0][o.0].ok_or_else(|| OutcomeError::MissingValuation {
            ty: ts.name(t).to_string(),
            outcome: self.names[o.0].clone(),
        })
    }

    /// `Σ_i v_i(x_0, t_i)`.
    pub fn welfare(&self, ts: &TypeStructure, o: OutcomeId, profile: &[TypeId]) -> Result<Q, OutcomeError> {
        self.partial_welfare(ts, o, profile, None)
    }

    /// Welfare of everyone except `skip`.
    pub fn partial_welfare(
        &self,
        ts: &TypeStructure,
        o: OutcomeId,
        profile: &[TypeId],
        skip: Option<usize>,
    ) -> Result<Q, OutcomeError> {
        let mut s = Q::zero();
        for (j, &t) in profile.iter().enumerate() {
            if Some(j) != skip {
                s += self.value(ts, t, o)?;
            }
        }
        Ok(s)
    }

    /// `f_0(t)`: welfare argmax over `X_0^{λ̌(t)}`, earliest in tie-break order among maximizers.
    pub fn efficient_outcome(&self, ts: &TypeStructure, profile: &[TypeId]) -> Result<OutcomeId, OutcomeError> {
        self.argmax(ts, profile, None)
    }

    /// `f^{-i}_0(t)`: argmax of opponents' welfare, still over `X_0^{λ̌(t)}` of the full profile.
    pub fn restricted_efficient_outcome(
        &self,
        ts: &TypeStructure,
        i: usize,
        profile: &[TypeId],
    ) -> Result<OutcomeId, OutcomeError> {
        self.argmax(ts, profile, Some(i))
    }

    fn argmax(&self, ts: &TypeStructure, profile: &[TypeId], skip: Option<usize>) -> Result<OutcomeId, OutcomeError> {
        let l = ts.pooled_level(profile);
        let mut best: Option<(OutcomeId, Q)> = None;
        for &o in &self.available[l.0] {
            let w = self.partial_welfare(ts, o, profile, skip)?;
            if best.as_ref().is_none_or(|(_, b)| w > *b) {
                best = Some((o, w));
            }
        }
        Ok(best.expect("availability is nonempty").0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::AwarenessLattice;
    use crate::types::StructureInput;

    fn s(x: &str) -> String {
        x.to_string()
    }

    fn tiny() -> (TypeStructure, OutcomeInput) {
        let l = AwarenessLattice::new(&["lo", "hi"], &[("lo", "hi")]).unwrap();
        let input = StructureInput {
            agents: vec![s("1"), s("2")],
            spaces: vec![
                (s("1"), s("lo"), vec![s("a")]),
                (s("1"), s("hi"), vec![s("A")]),
                (s("2"), s("lo"), vec![s("b")]),
                (s("2"), s("hi"), vec![s("B")]),
            ],
            projections: vec![
                (s("1"), s("hi"), s("lo"), vec![(s("A"), s("a"))]),
                (s("2"), s("hi"), s("lo"), vec![(s("B"), s("b"))]),
            ],
        };
        let ts = TypeStructure::new(l, &input).unwrap();
        let v = |a: &str, t: &str, o: &str, q: i64| (s(a), s(t), s(o), Q::from_integer(q));
        let oi = OutcomeInput {
            outcomes: vec![s("x"), s("y"), s("z")],
            available: vec![(s("lo"), vec![s("x"), s("y")])],
            tie_break: vec![],
            valuations: vec![
                v("1", "a", "x", 1),
                v("1", "a", "y", 2),
                v("2", "b", "x", 2),
                v("2", "b", "y", 1),
                v("1", "A", "x", 0),
                v("1", "A", "y", 0),
                v("1", "A", "z", 5),
                v("2", "B", "x", 0),
                v("2", "B", "y", 4),
                v("2", "B", "z", 0),
            ],
        };
        (ts, oi)
    }

    #[test]
    fn argmax_with_ties_and_levels() {
        let (ts, oi) = tiny();
        let om = OutcomeModel::new(&ts, &oi).unwrap();
        let a = ts.type_id(0, "a").unwrap();
        let b = ts.type_id(1, "b").unwrap();
        // x and y tie at 3; lexicographic tie-break picks x.
        assert_eq!(om.name(om.efficient_outcome(&ts, &[a, b]).unwrap()), "x");
        assert_eq!(om.name(om.restricted_efficient_outcome(&ts, 0, &[a, b]).unwrap()), "x");
        assert_eq!(om.name(om.restricted_efficient_outcome(&ts, 1, &[a, b]).unwrap()), "y");
        let big_a = ts.type_id(0, "A").unwrap();
        let big_b = ts.type_id(1, "B").unwrap();
        assert_eq!(om.name(om.efficient_outcome(&ts, &[big_a, big_b]).unwrap()), "z");
        assert_eq!(om.welfare(&ts, om.outcome("y").unwrap(), &[big_a, big_b]).unwrap(), Q::from_integer(4));
    }

    #[test]
    fn custom_tie_break() {
        let (ts, mut oi) = tiny();
        oi.tie_break = vec![s("y"), s("x"), s("z")];
        let om = OutcomeModel::new(&ts, &oi).unwrap();
        let a = ts.type_id(0, "a").unwrap();
        let b = ts.type_id(1, "b").unwrap();
        assert_eq!(om.name(om.efficient_outcome(&ts, &[a, b]).unwrap()), "y");
    }

    #[test]
    fn widened_domain_is_enforced() {
        let (ts, mut oi) = tiny();
        // A lives at hi, so it must be valued at every outcome available at lo as well.
        oi.valuations.retain(|(a, t, o, _)| !(a == "1" && t == "A" && o == "x"));
        match OutcomeModel::new(&ts, &oi) {
            Err(OutcomeError::Invalid(v)) => assert_eq!(
                v,
                vec![OutcomeViolation::MissingValuation { agent: s("1"), ty: s("A"), outcome: s("x") }]
            ),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_tie_break_and_empty_availability() {
        let (ts, mut oi) = tiny();
        oi.tie_break = vec![s("x"), s("x"), s("y")];
        oi.available = vec![(s("hi"), vec![])];
        match OutcomeModel::new(&ts, &oi) {
            Err(OutcomeError::Invalid(v)) => {
                assert!(v.contains(&OutcomeViolation::TieBreakNotTotal));
                assert!(v.contains(&OutcomeViolation::EmptyAvailability(s("hi"))));
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
