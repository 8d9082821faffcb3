//! Seeded random scenarios within the verifier's size caps.
//!
//! Lattices are chains of up to three levels or the four-element diamond. Each agent draws
//! up to three top-level types; every lower level partitions them into classes, coarser than
//! every partition above it, so projections compose by construction.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scenario::{
    AvailabilitySpec, DrawSpec, LatticeSpec, OutcomesSpec, ProjectionSpec, QText, Scenario, ScenarioSpec, SchemeSpec, TypesSpec,
    ValuationSpec,
};
use crate::transfers::SchemeKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GenParams {
    /// At least two agents are drawn; with one the premium has nobody to charge.
    pub max_agents: usize,
    pub max_types: usize,
    pub max_outcomes: usize,
    /// Largest chain length; the diamond is offered when this is at least 3.
    pub max_levels: usize,
    pub nonnegative: bool,
    /// Valuations are drawn from `-max_value..=max_value`, or `0..=max_value` when nonnegative.
    pub max_value: i64,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams { max_agents: 3, max_types: 3, max_outcomes: 4, max_levels: 3, nonnegative: false, max_value: 6 }
    }
}

impl GenParams {
    /// Sizes small enough for exhaustive dominance checks in seconds.
    pub fn small() -> Self {
        GenParams { max_agents: 2, max_types: 2, max_outcomes: 3, ..GenParams::default() }
    }

    pub fn nonnegative(self) -> Self {
        GenParams { nonnegative: true, ..self }
    }
}

fn s(x: impl ToString) -> String {
    x.to_string()
}

/// `(levels, covering edges)`.
fn random_lattice(rng: &mut ChaCha8Rng, p: &GenParams) -> (Vec<String>, Vec<[String; 2]>) {
    let diamond = p.max_levels >= 3 && rng.gen_bool(0.3);
    if diamond {
        let levels = vec![s("0"), s("x"), s("y"), s("xy")];
        let edges = vec![[s("0"), s("x")], [s("0"), s("y")], [s("x"), s("xy")], [s("y"), s("xy")]];
        return (levels, edges);
    }
    let n = rng.gen_range(1..=p.max_levels.max(1));
    let levels: Vec<String> = (0..n).map(|k| format!("L{k}")).collect();
    let edges = levels.windows(2).map(|w| [w[0].clone(), w[1].clone()]).collect();
    (levels, edges)
}

struct Dsu(Vec<usize>);

impl Dsu {
    fn find(&mut self, x: usize) -> usize {
        if self.0[x] != x {
            let r = self.find(self.0[x]);
            self.0[x] = r;
        }
        self.0[x]
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Class label of each top type at each level, coarsening downward.
fn partitions(rng: &mut ChaCha8Rng, levels: &[String], edges: &[[String; 2]], k: usize) -> BTreeMap<String, Vec<usize>> {
    let mut out: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    // Levels are listed bottom-up, so walk them in reverse.
    for l in levels.iter().rev() {
        let mut dsu = Dsu((0..k).collect());
        let above: Vec<&String> = edges.iter().filter(|[lo, _]| lo == l).map(|[_, hi]| hi).collect();
        for hi in &above {
            let cls = &out[*hi];
            for a in 0..k {
                for b in 0..k {
                    if cls[a] == cls[b] {
                        dsu.union(a, b);
                    }
                }
            }
        }
        if !above.is_empty() {
            for _ in 0..k {
                if rng.gen_bool(0.35) {
                    let a = rng.gen_range(0..k);
                    let b = rng.gen_range(0..k);
                    dsu.union(a, b);
                }
            }
        }
        let roots: Vec<usize> = (0..k).map(|x| dsu.find(x)).collect();
        let mut relabel = BTreeMap::new();
        let cls = roots
            .iter()
            .map(|r| {
                let n = relabel.len();
                *relabel.entry(*r).or_insert(n)
            })
            .collect();
        out.insert(l.clone(), cls);
    }
    out
}

fn value(rng: &mut ChaCha8Rng, p: &GenParams) -> i64 {
    let lo = if p.nonnegative { 0 } else { -p.max_value };
    rng.gen_range(lo..=p.max_value)
}

fn type_name(agent: &str, level: &str, class: usize) -> String {
    format!("t{agent}.{level}.{class}")
}

struct Skeleton {
    levels: Vec<String>,
    edges: Vec<[String; 2]>,
    types: Vec<TypesSpec>,
    projections: Vec<ProjectionSpec>,
    top_types: Vec<Vec<String>>,
}

fn skeleton(rng: &mut ChaCha8Rng, p: &GenParams, agents: &[String], type_counts: &[usize]) -> Skeleton {
    let (levels, edges) = random_lattice(rng, p);
    let top = levels.last().expect("nonempty").clone();
    let mut types = Vec::new();
    let mut projections = Vec::new();
    let mut top_types = Vec::new();
    for (a, &k) in agents.iter().zip(type_counts) {
        let part = partitions(rng, &levels, &edges, k);
        for l in &levels {
            let n = part[l].iter().max().map_or(0, |m| m + 1);
            types.push(TypesSpec { agent: a.clone(), level: l.clone(), ids: (0..n).map(|c| type_name(a, l, c)).collect() });
        }
        for [lo, hi] in &edges {
            let map = (0..k).map(|x| (type_name(a, hi, part[hi][x]), type_name(a, lo, part[lo][x]))).collect();
            projections.push(ProjectionSpec { agent: a.clone(), from: hi.clone(), to: lo.clone(), map });
        }
        let n_top = part[&top].iter().max().map_or(0, |m| m + 1);
        top_types.push((0..n_top).map(|c| type_name(a, &top, c)).collect());
    }
    Skeleton { levels, edges, types, projections, top_types }
}

fn draws(rng: &mut ChaCha8Rng, sk: &Skeleton, n: usize) -> Vec<DrawSpec> {
    (0..n)
        .map(|k| DrawSpec {
            name: format!("d{k}"),
            true_types: sk.top_types.iter().map(|ts| ts.choose(rng).expect("nonempty").clone()).collect(),
            awareness: sk.top_types.iter().map(|_| sk.levels.choose(rng).expect("nonempty").clone()).collect(),
        })
        .collect()
}

/// A general scenario under the Clarke scheme.
pub fn scenario(seed: u64, p: &GenParams) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_agents = rng.gen_range(2..=p.max_agents.max(2));
    let agents: Vec<String> = (1..=n_agents).map(s).collect();
    let counts: Vec<usize> = (0..n_agents).map(|_| rng.gen_range(1..=p.max_types.max(1))).collect();
    let sk = skeleton(&mut rng, p, &agents, &counts);
    let n_out = rng.gen_range(2..=p.max_outcomes.max(2));
    let outcomes: Vec<String> = (0..n_out).map(|k| format!("x{k}")).collect();
    let mut available = Vec::new();
    for l in &sk.levels {
        if rng.gen_bool(0.4) {
            let mut ids: Vec<String> = outcomes.iter().filter(|_| rng.gen_bool(0.6)).cloned().collect();
            if ids.is_empty() {
                ids.push(outcomes.choose(&mut rng).expect("nonempty").clone());
            }
            available.push(AvailabilitySpec { level: l.clone(), ids });
        }
    }
    let mut valuations = Vec::new();
    for t in &sk.types {
        for id in &t.ids {
            let values = outcomes.iter().map(|o| (o.clone(), QText::Int(value(&mut rng, p)))).collect();
            valuations.push(ValuationSpec { agent: t.agent.clone(), ty: id.clone(), values });
        }
    }
    let mut tie_break = outcomes.clone();
    tie_break.shuffle(&mut rng);
    let draws = draws(&mut rng, &sk, 2);
    let spec = ScenarioSpec {
        name: format!("generated-{seed}"),
        agents,
        lattice: LatticeSpec { levels: sk.levels, edges: sk.edges },
        types: sk.types,
        projections: sk.projections,
        outcomes: OutcomesSpec { ids: outcomes, tie_break, available },
        valuations,
        scheme: SchemeSpec::default(),
        draws,
    };
    Scenario::from_spec(&spec).expect("generated scenarios are valid")
}

/// Two sellers and a buyer under the reverse second-price auction. Sellers value their own
/// supply at minus a cost and everything else at zero.
pub fn procurement(seed: u64, p: &GenParams) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let agents = vec![s("1"), s("2"), s("b")];
    let counts = vec![rng.gen_range(1..=p.max_types.max(1)), rng.gen_range(1..=p.max_types.max(1)), 1];
    let sk = skeleton(&mut rng, p, &agents, &counts);
    let outcomes = vec![s("none"), s("supply_1"), s("supply_2")];
    let mut valuations = Vec::new();
    let top = p.max_value.max(2);
    for t in &sk.types {
        for id in &t.ids {
            let values: BTreeMap<String, QText> = match t.agent.as_str() {
                "b" => {
                    let v = rng.gen_range(top..=3 * top);
                    [(s("none"), 0), (s("supply_1"), v), (s("supply_2"), v)].into_iter().map(|(o, v)| (o, QText::Int(v))).collect()
                }
                a => {
                    let own = format!("supply_{a}");
                    let cost = rng.gen_range(1..=top);
                    outcomes.iter().map(|o| (o.clone(), QText::Int(if *o == own { -cost } else { 0 }))).collect()
                }
            };
            valuations.push(ValuationSpec { agent: t.agent.clone(), ty: id.clone(), values });
        }
    }
    let draws = draws(&mut rng, &sk, 2);
    let spec = ScenarioSpec {
        name: format!("procurement-{seed}"),
        agents,
        lattice: LatticeSpec { levels: sk.levels, edges: sk.edges },
        types: sk.types,
        projections: sk.projections,
        outcomes: OutcomesSpec { ids: outcomes, tie_break: vec![], available: vec![] },
        valuations,
        scheme: SchemeSpec {
            kind: SchemeKind::Rspa,
            buyer: Some(s("b")),
            suppliers: [(s("1"), s("supply_1")), (s("2"), s("supply_2"))].into(),
            ..SchemeSpec::default()
        },
        draws,
    };
    Scenario::from_spec(&spec).expect("generated procurement scenarios are valid")
}

/// `n` scenarios with consecutive seeds.
pub fn scenarios(n: usize, seed: u64, p: &GenParams) -> Vec<Scenario> {
    (0..n as u64).map(|k| scenario(seed.wrapping_add(k), p)).collect()
}

pub fn procurements(n: usize, seed: u64, p: &GenParams) -> Vec<Scenario> {
    (0..n as u64).map(|k| procurement(seed.wrapping_add(k), p)).collect()
}

/// A deliberate defect planted in an otherwise valid scenario.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mutation {
    DropProjection,
    StrayTarget,
    UnreachedType,
    BrokenComposition,
    MissingJoin,
    OrderCycle,
}

impl Mutation {
    pub const ALL: [Mutation; 6] = [
        Mutation::DropProjection,
        Mutation::StrayTarget,
        Mutation::UnreachedType,
        Mutation::BrokenComposition,
        Mutation::MissingJoin,
        Mutation::OrderCycle,
    ];

    /// A fragment of the validation message the defect must produce.
    pub fn expected_message(self) -> &'static str {
        match self {
            Mutation::DropProjection => "missing projection",
            Mutation::StrayTarget => "outside the target space",
            Mutation::UnreachedType => "misses",
            Mutation::BrokenComposition => "disagree",
            Mutation::MissingJoin => "no unique join",
            Mutation::OrderCycle => "mutually below",
        }
    }
}

/// Applies `m` to `spec`, or `None` when the shape cannot host the defect (composition
/// needs two paths between levels and two types at the bottom of them).
pub fn mutate(spec: &ScenarioSpec, m: Mutation, seed: u64) -> Option<ScenarioSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = spec.clone();
    let edges = &spec.lattice.edges;
    let bottom = spec.lattice.levels.iter().find(|l| edges.iter().all(|[_, hi]| hi != *l))?.clone();
    let top = spec.lattice.levels.iter().find(|l| edges.iter().all(|[lo, _]| lo != *l))?.clone();
    match m {
        Mutation::DropProjection => {
            if out.projections.is_empty() {
                return None;
            }
            let k = rng.gen_range(0..out.projections.len());
            out.projections.remove(k);
        }
        Mutation::StrayTarget => {
            let p = out.projections.choose_mut(&mut rng)?;
            let key = p.map.keys().next()?.clone();
            // A real type of the agent, but from the upper space.
            p.map.insert(key.clone(), key);
        }
        Mutation::UnreachedType => {
            let edge = out.projections.choose(&mut rng)?.clone();
            let extra = format!("{}.extra", edge.to);
            out.types.iter_mut().find(|t| t.agent == edge.agent && t.level == edge.to)?.ids.push(extra.clone());
            // Keep every downward map total so only surjectivity breaks.
            for p in out.projections.iter_mut().filter(|p| p.agent == edge.agent && p.from == edge.to) {
                let target = p.map.values().next()?.clone();
                p.map.insert(extra.clone(), target);
            }
            let values = spec.outcomes.ids.iter().map(|o| (o.clone(), QText::Int(0))).collect();
            out.valuations.push(ValuationSpec { agent: edge.agent.clone(), ty: extra, values });
        }
        Mutation::BrokenComposition => {
            // Redirect one element of a map on one side of a diamond. Its old image keeps
            // another preimage, so the map stays surjective and only the paths disagree.
            let mut candidates = Vec::new();
            for (k, p) in spec.projections.iter().enumerate() {
                let sibling = edges.iter().any(|[lo, hi]| *lo == p.to && *hi != p.from);
                let has_upper = edges.iter().any(|[lo, _]| *lo == p.from);
                if !(sibling && has_upper) {
                    continue;
                }
                for (key, old) in &p.map {
                    if p.map.values().filter(|v| *v == old).count() >= 2 {
                        if let Some(new) = p.map.values().find(|v| *v != old) {
                            candidates.push((k, key.clone(), new.clone()));
                        }
                    }
                }
            }
            let (k, key, new) = candidates.choose(&mut rng)?.clone();
            out.projections[k].map.insert(key, new);
        }
        Mutation::MissingJoin => {
            for extra in ["u", "v"] {
                let name = format!("{extra}!");
                out.lattice.levels.push(name.clone());
                out.lattice.edges.push([bottom.clone(), name]);
            }
        }
        Mutation::OrderCycle => {
            if top == bottom {
                return None;
            }
            out.lattice.edges.push([top, bottom]);
        }
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_within_caps() {
        let p = GenParams::default();
        for seed in 0..50 {
            let a = scenario(seed, &p);
            assert_eq!(a, scenario(seed, &p));
            let ts = &a.types;
            assert!(ts.n_agents() <= 3);
            assert!(ts.lattice().len() <= 4);
            assert!(a.outcomes.len() <= 4);
            for i in 0..ts.n_agents() {
                for l in ts.lattice().levels() {
                    assert!((1..=3).contains(&ts.space(i, l).len()));
                }
            }
        }
    }

    #[test]
    fn nonnegative_flag() {
        let p = GenParams::default().nonnegative();
        for seed in 0..20 {
            let sc = scenario(seed, &p);
            let ts = &sc.types;
            for a in 0..ts.n_agents() {
                for l in ts.lattice().levels() {
                    for &t in ts.space(a, l) {
                        for k in 0..sc.outcomes.len() {
                            assert!(sc.outcomes.raw_value(t, crate::outcome::OutcomeId(k)).unwrap() >= crate::value::Q::from_integer(0));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn procurement_is_valid() {
        for seed in 0..20 {
            let sc = procurement(seed, &GenParams::default());
            assert_eq!(sc.scheme.kind, SchemeKind::Rspa);
            assert!(sc.mechanism().is_ok());
        }
    }

    #[test]
    fn lattice_shapes_vary() {
        let sizes: std::collections::BTreeSet<usize> =
            (0..40).map(|s| scenario(s, &GenParams::default()).types.lattice().len()).collect();
        assert!(sizes.len() >= 3, "{sizes:?}");
    }

    #[test]
    fn every_mutation_is_rejected_for_its_reason() {
        let mut hosted = [0; Mutation::ALL.len()];
        for seed in 0..60 {
            let spec = scenario(seed, &GenParams::default()).to_spec();
            for (k, m) in Mutation::ALL.into_iter().enumerate() {
                let Some(bad) = mutate(&spec, m, seed) else { continue };
                hosted[k] += 1;
                match Scenario::from_spec(&bad) {
                    Err(crate::scenario::ScenarioError::Validation(msgs)) => {
                        assert!(msgs.iter().any(|x| x.contains(m.expected_message())), "{m:?} seed {seed}: {msgs:?}")
                    }
                    other => panic!("{m:?} seed {seed}: {other:?}"),
                }
            }
        }
        assert!(hosted.iter().all(|&n| n > 0), "{hosted:?}");
    }
}
