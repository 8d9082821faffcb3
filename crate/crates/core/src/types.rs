//! Level-indexed payoff type spaces and their projection system.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{AwarenessLattice, Level};

/// Global index of a payoff type. Each type belongs to exactly one agent and one level.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TypeId(pub usize);

/// One type per agent, indexed by agent position.
pub type Profile = Vec<TypeId>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeInfo {
    pub agent: usize,
    pub level: Level,
    pub name: String,
}

/// Declared but unvalidated structure, by name.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StructureInput {
    pub agents: Vec<String>,
    /// `(agent, level, type names)`.
    pub spaces: Vec<(String, String, Vec<String>)>,
    /// `(agent, from level, to level, [(from type, to type)])`.
    pub projections: Vec<(String, String, String, Vec<(String, String)>)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StructureViolation {
    NoAgents,
    DuplicateAgent(String),
    UnknownAgent(String),
    UnknownLevel(String),
    UnknownType { agent: String, ty: String },
    DuplicateType { agent: String, ty: String },
    EmptySpace { agent: String, level: String },
    NotBelow { agent: String, from: String, to: String },
    BadTarget { agent: String, from: String, to: String, ty: String },
    MissingProjection { agent: String, from: String, to: String },
    NotSurjective { agent: String, from: String, to: String, missed: String },
    NotIdentity { agent: String, level: String, ty: String },
    CompositionFailure { agent: String, upper: String, middle: String, lower: String, witness: String },
}

impl fmt::Display for StructureViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use StructureViolation::*;
        match self {
            NoAgents => write!(f, "no agents declared"),
            DuplicateAgent(a) => write!(f, "agent `{a}` declared twice"),
            UnknownAgent(a) => write!(f, "unknown agent `{a}`"),
            UnknownLevel(l) => write!(f, "unknown level `{l}`"),
            UnknownType { agent, ty } => write!(f, "agent {agent}: unknown type `{ty}`"),
            DuplicateType { agent, ty } => write!(f, "agent {agent}: type `{ty}` declared twice"),
            EmptySpace { agent, level } => write!(f, "agent {agent}: no types at level {level}"),
            NotBelow { agent, from, to } => write!(f, "agent {agent}: projection {from} -> {to} goes upward"),
            BadTarget { agent, from, to, ty } => {
                write!(f, "agent {agent}: projection {from} -> {to} maps into `{ty}` outside the target space")
            }
            MissingProjection { agent, from, to } => write!(f, "agent {agent}: missing projection {from} -> {to}"),
            NotSurjective { agent, from, to, missed } => {
                write!(f, "agent {agent}: projection {from} -> {to} misses `{missed}`")
            }
            NotIdentity { agent, level, ty } => write!(f, "agent {agent}: projection {level} -> {level} moves `{ty}`"),
            CompositionFailure { agent, upper, middle, lower, witness } => write!(
                f,
                "agent {agent}: projections {upper} -> {middle} -> {lower} and {upper} -> {lower} disagree on `{witness}`"
            ),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum StructureError {
    #[error("invalid type structure: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<StructureViolation>),
    #[error("level {level} is not below the level of type {ty}")]
    LevelNotBelow { ty: String, level: String },
    #[error("unknown type `{0}`")]
    UnknownType(String),
}

/// Nature's move in the full game: true top-level types and initial awareness.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct NatureDraw {
    pub true_types: Profile,
    pub awareness: Vec<Level>,
}

/// Nature's move as seen inside the `level`-partial game.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PartialDraw {
    pub level: Level,
    /// Types in `T^level`.
    pub types: Profile,
    /// Awareness levels in `L(level)`.
    pub awareness: Vec<Level>,
}

/// Validated type spaces with every projection `r^k_ℓ` tabulated.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeStructure {
    lattice: AwarenessLattice,
    agents: Vec<String>,
    types: Vec<TypeInfo>,
    spaces: Vec<Vec<Vec<TypeId>>>,
    proj: Vec<Vec<Option<TypeId>>>,
    upsets: Vec<Vec<TypeId>>,
    by_name: Vec<HashMap<String, TypeId>>,
}

impl TypeStructure {
    /// Validates the declared spaces and covering-edge projections against `lattice`.
    pub fn new(lattice: AwarenessLattice, input: &StructureInput) -> Result<Self, StructureError> {
        use StructureViolation as V;
        let mut bad = Vec::new();
        if input.agents.is_empty() {
            bad.push(V::NoAgents);
        }
        let mut agent_ix = HashMap::new();
        for (k, a) in input.agents.iter().enumerate() {
            if agent_ix.insert(a.clone(), k).is_some() {
                bad.push(V::DuplicateAgent(a.clone()));
            }
        }
        let n_agents = input.agents.len();
        let n_levels = lattice.len();

        // Ids are assigned in (agent, level, declaration) order so that equal inputs
        // up to section ordering produce equal structures.
        let mut decl: Vec<Vec<Vec<String>>> = vec![vec![Vec::new(); n_levels]; n_agents];
        let mut seen: Vec<HashMap<String, ()>> = vec![HashMap::new(); n_agents];
        for (agent, level, names) in &input.spaces {
            let Some(&a) = agent_ix.get(agent) else {
                bad.push(V::UnknownAgent(agent.clone()));
                continue;
            };
            let Ok(l) = lattice.level(level) else {
                bad.push(V::UnknownLevel(level.clone()));
                continue;
            };
            for name in names {
                if seen[a].insert(name.clone(), ()).is_some() {
                    bad.push(V::DuplicateType { agent: agent.clone(), ty: name.clone() });
                    continue;
                }
                decl[a][l.0].push(name.clone());
            }
        }
        let mut types: Vec<TypeInfo> = Vec::new();
        let mut spaces = vec![vec![Vec::new(); n_levels]; n_agents];
        let mut by_name: Vec<HashMap<String, TypeId>> = vec![HashMap::new(); n_agents];
        for (a, per_level) in decl.into_iter().enumerate() {
            for (l, names) in per_level.into_iter().enumerate() {
                for name in names {
                    let id = TypeId(types.len());
                    types.push(TypeInfo { agent: a, level: Level(l), name: name.clone() });
                    by_name[a].insert(name, id);
                    spaces[a][l].push(id);
                }
            }
        }
        for (a, name) in input.agents.iter().enumerate() {
            for l in lattice.levels() {
                if spaces.get(a).is_some_and(|s| s[l.0].is_empty()) {
                    bad.push(V::EmptySpace { agent: name.clone(), level: lattice.name(l).to_string() });
                }
            }
        }
        if !bad.is_empty() {
            return Err(StructureError::Invalid(bad));
        }

        // Explicit edge tables keyed by (agent, from, to).
        let mut explicit: HashMap<(usize, Level, Level), HashMap<TypeId, TypeId>> = HashMap::new();
        for (agent, from, to, pairs) in &input.projections {
            let Some(&a) = agent_ix.get(agent) else {
                bad.push(V::UnknownAgent(agent.clone()));
                continue;
            };
            let (Ok(k), Ok(l)) = (lattice.level(from), lattice.level(to)) else {
                for s in [from, to] {
                    if lattice.level(s).is_err() {
                        bad.push(V::UnknownLevel(s.clone()));
                    }
                }
                continue;
            };
            if !lattice.leq(l, k) {
                bad.push(V::NotBelow { agent: agent.clone(), from: from.clone(), to: to.clone() });
                continue;
            }
            let table = explicit.entry((a, k, l)).or_default();
            for (s, t) in pairs {
                let (Some(&s_id), Some(&t_id)) = (by_name[a].get(s), by_name[a].get(t)) else {
                    for x in [s, t] {
                        if !by_name[a].contains_key(x) {
                            bad.push(V::UnknownType { agent: agent.clone(), ty: x.clone() });
                        }
                    }
                    continue;
                };
                if types[s_id.0].level != k {
                    bad.push(V::BadTarget { agent: agent.clone(), from: from.clone(), to: to.clone(), ty: s.clone() });
                    continue;
                }
                if types[t_id.0].level != l {
                    bad.push(V::BadTarget { agent: agent.clone(), from: from.clone(), to: to.clone(), ty: t.clone() });
                    continue;
                }
                table.insert(s_id, t_id);
            }
        }
        if !bad.is_empty() {
            return Err(StructureError::Invalid(bad));
        }

        let agent_name = |a: usize| input.agents[a].clone();
        let lname = |l: Level| lattice.name(l).to_string();

        // Identity diagonal.
        for ((a, k, l), table) in &explicit {
            if k == l {
                for (s, t) in table {
                    if s != t {
                        bad.push(V::NotIdentity { agent: agent_name(*a), level: lname(*k), ty: types[s.0].name.clone() });
                    }
                }
            }
        }

        // Covering maps: complete and surjective.
        for a in 0..n_agents {
            for &(low, high) in lattice.covers() {
                match explicit.get(&(a, high, low)) {
                    None => bad.push(V::MissingProjection { agent: agent_name(a), from: lname(high), to: lname(low) }),
                    Some(table) => {
                        if spaces[a][high.0].iter().any(|t| !table.contains_key(t)) {
                            bad.push(V::MissingProjection { agent: agent_name(a), from: lname(high), to: lname(low) });
                        }
                        for u in &spaces[a][low.0] {
                            if !table.values().any(|v| v == u) {
                                bad.push(V::NotSurjective {
                                    agent: agent_name(a),
                                    from: lname(high),
                                    to: lname(low),
                                    missed: types[u.0].name.clone(),
                                });
                            }
                        }
                    }
                }
            }
        }
        if !bad.is_empty() {
            return Err(StructureError::Invalid(bad));
        }

        // Derive every r^k_ℓ by walking covering edges downward; all paths must agree.
        let top_down: Vec<Level> = lattice.bottom_up().iter().rev().copied().collect();
        let mut proj = vec![vec![None; n_levels]; types.len()];
        for (t, info) in types.iter().enumerate() {
            let a = info.agent;
            proj[t][info.level.0] = Some(TypeId(t));
            for &high in &top_down {
                if !lattice.leq(high, info.level) {
                    continue;
                }
                let Some(here) = proj[t][high.0] else { continue };
                for &(low, h) in lattice.covers() {
                    if h != high {
                        continue;
                    }
                    let next = explicit[&(a, high, low)][&here];
                    match proj[t][low.0] {
                        None => proj[t][low.0] = Some(next),
                        Some(prev) if prev != next => {
                            bad.push(V::CompositionFailure {
                                agent: agent_name(a),
                                upper: lname(info.level),
                                middle: lname(high),
                                lower: lname(low),
                                witness: info.name.clone(),
                            });
                        }
                        _ => {}
                    }
                }
            }
        }
        // Explicit long edges must agree with the composites.
        for ((a, k, l), table) in &explicit {
            if k == l || lattice.covers().contains(&(*l, *k)) {
                continue;
            }
            let middle = lattice
                .covers()
                .iter()
                .find(|(m, h)| h == k && lattice.leq(*l, *m))
                .map(|&(m, _)| m)
                .unwrap_or(*l);
            for (s, t) in table {
                if proj[s.0][l.0] != Some(*t) {
                    bad.push(V::CompositionFailure {
                        agent: agent_name(*a),
                        upper: lname(*k),
                        middle: lname(middle),
                        lower: lname(*l),
                        witness: types[s.0].name.clone(),
                    });
                }
            }
        }
        if !bad.is_empty() {
            bad.dedup();
            return Err(StructureError::Invalid(bad));
        }

        let mut upsets = vec![Vec::new(); types.len()];
        for (u, info) in types.iter().enumerate() {
            for l in lattice.down_set(info.level) {
                if let Some(t) = proj[u][l.0] {
                    upsets[t.0].push(TypeId(u));
                }
            }
        }
        for up in &mut upsets {
            up.sort();
        }

        Ok(TypeStructure { lattice, agents: input.agents.clone(), types, spaces, proj, upsets, by_name })
    }

    pub fn lattice(&self) -> &AwarenessLattice {
        &self.lattice
    }

    pub fn agents(&self) -> &[String] {
        &self.agents
    }

    pub fn n_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn agent_index(&self, name: &str) -> Option<usize> {
        self.agents.iter().position(|a| a == name)
    }

    pub fn n_types(&self) -> usize {
        self.types.len()
    }

    pub fn info(&self, t: TypeId) -> &TypeInfo {
        &self.types[t.0]
    }

    pub fn name(&self, t: TypeId) -> &str {
        &self.types[t.0].name
    }

    pub fn agent_of(&self, t: TypeId) -> usize {
        self.types[t.0].agent
    }

    /// Looks up a type of `agent` by name.
    pub fn type_id(&self, agent: usize, name: &str) -> Result<TypeId, StructureError> {
        self.by_name[agent].get(name).copied().ok_or_else(|| StructureError::UnknownType(name.to_string()))
    }

    /// `T_i^ℓ`.
    pub fn space(&self, agent: usize, l: Level) -> &[TypeId] {
        &self.spaces[agent][l.0]
    }

    /// All types of `agent` at levels in `L(ℓ)`.
    pub fn types_below(&self, agent: usize, l: Level) -> Vec<TypeId> {
        let mut out = Vec::new();
        for k in self.lattice.down_set(l) {
            out.extend_from_slice(&self.spaces[agent][k.0]);
        }
        out.sort();
        out
    }

    /// `λ(t)`.
    pub fn level_of(&self, t: TypeId) -> Level {
        self.types[t.0].level
    }

    /// `r^{λ(t)}_ℓ(t)`.
    pub fn project(&self, t: TypeId, l: Level) -> Result<TypeId, StructureError> {
        self.proj[t.0][l.0].ok_or_else(|| StructureError::LevelNotBelow {
            ty: self.types[t.0].name.clone(),
            level: self.lattice.name(l).to_string(),
        })
    }

    /// `t↑`: every type at a weakly higher level that projects onto `t`, including `t`.
    pub fn upset(&self, t: TypeId) -> &[TypeId] {
        &self.upsets[t.0]
    }

    /// `λ̌(t)`.
    pub fn pooled_level(&self, profile: &[TypeId]) -> Level {
        self.lattice.join_all(profile.iter().map(|&t| self.level_of(t)))
    }

    /// Componentwise projection of a profile.
    pub fn project_profile(&self, profile: &[TypeId], l: Level) -> Result<Profile, StructureError> {
        profile.iter().map(|&t| self.project(t, l)).collect()
    }

    /// The type agent `agent` perceives in the `l`-partial game, with her effective awareness.
    pub fn perceived_type(&self, agent: usize, draw: &NatureDraw, l: Level) -> (TypeId, Level) {
        let eff = self.lattice.meet(draw.awareness[agent], l);
        let t = self.proj[draw.true_types[agent].0][eff.0].expect("true types live at the top level");
        (t, eff)
    }

    /// Restricts a full-game draw to the `l`-partial game.
    pub fn partial_draw(&self, draw: &NatureDraw, l: Level) -> PartialDraw {
        PartialDraw {
            level: l,
            types: draw.true_types.iter().map(|&t| self.proj[t.0][l.0].expect("top-level type")).collect(),
            awareness: draw.awareness.iter().map(|&a| self.lattice.meet(a, l)).collect(),
        }
    }

    /// Every full profile in `T^ℓ`.
    pub fn profiles_at(&self, l: Level) -> Vec<Profile> {
        let sets: Vec<&[TypeId]> = (0..self.n_agents()).map(|a| self.space(a, l)).collect();
        cartesian(&sets)
    }

    /// Every draw of the `l`-partial game: profiles in `T^l` and awareness in `L(l)`.
    pub fn partial_draws(&self, l: Level) -> Vec<PartialDraw> {
        let down = self.lattice.down_set(l);
        let aw_sets: Vec<&[Level]> = (0..self.n_agents()).map(|_| down.as_slice()).collect();
        let awareness = cartesian(&aw_sets);
        let mut out = Vec::new();
        for types in self.profiles_at(l) {
            for aw in &awareness {
                out.push(PartialDraw { level: l, types: types.clone(), awareness: aw.clone() });
            }
        }
        out
    }

    /// Every full-game draw.
    pub fn nature_draws(&self) -> Vec<NatureDraw> {
        self.partial_draws(self.lattice.top())
            .into_iter()
            .map(|d| NatureDraw { true_types: d.types, awareness: d.awareness })
            .collect()
    }

    /// Human-readable profile.
    pub fn show(&self, profile: &[TypeId]) -> String {
        let names: Vec<&str> = profile.iter().map(|&t| self.name(t)).collect();
        format!("({})", names.join(", "))
    }
}

/// Cartesian product of finite sets, in odometer order.
pub fn cartesian<T: Copy>(sets: &[&[T]]) -> Vec<Vec<T>> {
    if sets.iter().any(|s| s.is_empty()) {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut ix = vec![0usize; sets.len()];
    loop {
        out.push(ix.iter().zip(sets).map(|(&k, s)| s[k]).collect());
        let mut pos = sets.len();
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            ix[pos] += 1;
            if ix[pos] < sets[pos].len() {
                break;
            }
            ix[pos] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain3() -> AwarenessLattice {
        AwarenessLattice::new(&["lo", "mid", "hi"], &[("lo", "mid"), ("mid", "hi")]).unwrap()
    }

    fn s(x: &str) -> String {
        x.to_string()
    }

    fn chain_input() -> StructureInput {
        StructureInput {
            agents: vec![s("1")],
            spaces: vec![
                (s("1"), s("lo"), vec![s("a")]),
                (s("1"), s("mid"), vec![s("b1"), s("b2")]),
                (s("1"), s("hi"), vec![s("c1"), s("c2"), s("c3")]),
            ],
            projections: vec![
                (s("1"), s("mid"), s("lo"), vec![(s("b1"), s("a")), (s("b2"), s("a"))]),
                (s("1"), s("hi"), s("mid"), vec![(s("c1"), s("b1")), (s("c2"), s("b2")), (s("c3"), s("b2"))]),
            ],
        }
    }

    #[test]
    fn chain_projections_compose() {
        let ts = TypeStructure::new(chain3(), &chain_input()).unwrap();
        let l = ts.lattice().clone();
        let c3 = ts.type_id(0, "c3").unwrap();
        let lo = l.level("lo").unwrap();
        let mid = l.level("mid").unwrap();
        assert_eq!(ts.name(ts.project(c3, lo).unwrap()), "a");
        assert_eq!(ts.project(ts.project(c3, mid).unwrap(), lo).unwrap(), ts.project(c3, lo).unwrap());
        assert_eq!(ts.project(c3, l.top()).unwrap(), c3);
        let a = ts.type_id(0, "a").unwrap();
        assert_eq!(ts.upset(a).len(), 6);
        assert!(ts.project(a, mid).is_err());
    }

    #[test]
    fn long_edge_disagreement() {
        let mut input = chain_input();
        input.projections.push((s("1"), s("hi"), s("lo"), vec![(s("c1"), s("a"))]));
        assert!(TypeStructure::new(chain3(), &input).is_ok());

        let mut input = chain_input();
        input.spaces[0].2.push(s("a2"));
        input.projections[0].3[1].1 = s("a2");
        input.projections.push((s("1"), s("hi"), s("lo"), vec![(s("c2"), s("a"))]));
        match TypeStructure::new(chain3(), &input) {
            Err(StructureError::Invalid(v)) => {
                assert!(v.iter().any(|x| matches!(x, StructureViolation::CompositionFailure { witness, .. } if witness == "c2")))
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_edge_and_surjectivity() {
        let mut input = chain_input();
        input.projections.remove(0);
        match TypeStructure::new(chain3(), &input) {
            Err(StructureError::Invalid(v)) => assert!(v.contains(&StructureViolation::MissingProjection {
                agent: s("1"),
                from: s("mid"),
                to: s("lo")
            })),
            other => panic!("unexpected {other:?}"),
        }
        let mut input = chain_input();
        input.projections[1].3[2].1 = s("b1");
        input.projections[1].3[1].1 = s("b1");
        match TypeStructure::new(chain3(), &input) {
            Err(StructureError::Invalid(v)) => {
                assert!(v.iter().any(|x| matches!(x, StructureViolation::NotSurjective { missed, .. } if missed == "b2")))
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn one_level_identity() {
        let l = AwarenessLattice::new(&["x"], &[]).unwrap();
        let input = StructureInput {
            agents: vec![s("1"), s("2")],
            spaces: vec![(s("1"), s("x"), vec![s("p")]), (s("2"), s("x"), vec![s("q")])],
            projections: vec![],
        };
        let ts = TypeStructure::new(l, &input).unwrap();
        let p = ts.type_id(0, "p").unwrap();
        assert_eq!(ts.project(p, ts.lattice().top()).unwrap(), p);
        assert_eq!(ts.upset(p), &[p]);
    }

    #[test]
    fn cartesian_counts() {
        let a = [1, 2];
        let b = [3, 4, 5];
        assert_eq!(cartesian(&[&a[..], &b[..]]).len(), 6);
        let e: [i32; 0] = [];
        assert!(cartesian(&[&a[..], &e[..]]).is_empty());
        assert_eq!(cartesian::<i32>(&[]).len(), 1);
    }
}
