//! Finite awareness lattices.
//!
//! Levels are opaque names. Input is a generating relation (usually the Hasse
//! edges); the reflexive-transitive closure is taken before the lattice axioms
//! are checked.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Index of a level inside its lattice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Level(pub usize);

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "L{}", self.0)
    }
}

/// A single failed lattice axiom.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LatticeViolation {
    /// `a ⊴ b` and `b ⊴ a` for distinct names.
    Antisymmetry(String, String),
    /// No unique least upper bound.
    NoJoin(String, String),
    /// No unique greatest lower bound.
    NoMeet(String, String),
}

impl fmt::Display for LatticeViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LatticeViolation::Antisymmetry(a, b) => write!(f, "{a} and {b} are mutually below each other"),
            LatticeViolation::NoJoin(a, b) => write!(f, "{a} and {b} have no unique join"),
            LatticeViolation::NoMeet(a, b) => write!(f, "{a} and {b} have no unique meet"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum LatticeError {
    #[error("lattice has no elements")]
    EmptyLattice,
    #[error("unknown level `{0}`")]
    UnknownLevel(String),
    #[error("level `{0}` declared twice")]
    DuplicateLevel(String),
    #[error("not a lattice: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    NotALattice(Vec<LatticeViolation>),
}

/// A validated finite lattice with precomputed order, join and meet tables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AwarenessLattice {
    names: Vec<String>,
    index: HashMap<String, Level>,
    leq: Vec<Vec<bool>>,
    join: Vec<Vec<Level>>,
    meet: Vec<Vec<Level>>,
    top: Level,
    bottom: Level,
    covers: Vec<(Level, Level)>,
    bottom_up: Vec<Level>,
}

impl AwarenessLattice {
    /// Validates `elements` under the closure of `edges`, where `(a, b)` means `a ⊴ b`.
    pub fn new<S: AsRef<str>>(elements: &[S], edges: &[(S, S)]) -> Result<Self, LatticeError> {
        if elements.is_empty() {
            return Err(LatticeError::EmptyLattice);
        }
        let mut index = HashMap::new();
        let mut names = Vec::with_capacity(elements.len());
        for (k, e) in elements.iter().enumerate() {
            let name = e.as_ref().to_string();
            if index.insert(name.clone(), Level(k)).is_some() {
                return Err(LatticeError::DuplicateLevel(name));
            }
            names.push(name);
        }
        let n = names.len();
        let mut leq = vec![vec![false; n]; n];
        for (k, row) in leq.iter_mut().enumerate() {
            row[k] = true;
        }
        for (a, b) in edges {
            let a = *index
                .get(a.as_ref())
                .ok_or_else(|| LatticeError::UnknownLevel(a.as_ref().to_string()))?;
            let b = *index
                .get(b.as_ref())
                .ok_or_else(|| LatticeError::UnknownLevel(b.as_ref().to_string()))?;
            leq[a.0][b.0] = true;
        }
        // Warshall closure.
        for k in 0..n {
            for i in 0..n {
                if leq[i][k] {
                    for j in 0..n {
                        if leq[k][j] {
                            leq[i][j] = true;
                        }
                    }
                }
            }
        }

        let mut violations = Vec::new();
        for a in 0..n {
            for b in (a + 1)..n {
                if leq[a][b] && leq[b][a] {
                    violations.push(LatticeViolation::Antisymmetry(names[a].clone(), names[b].clone()));
                }
            }
        }
        if !violations.is_empty() {
            return Err(LatticeError::NotALattice(violations));
        }

        let mut join = vec![vec![Level(0); n]; n];
        let mut meet = vec![vec![Level(0); n]; n];
        for a in 0..n {
            for b in a..n {
                match least(&leq, (0..n).filter(|&u| leq[a][u] && leq[b][u])) {
                    Some(u) => {
                        join[a][b] = Level(u);
                        join[b][a] = Level(u);
                    }
                    None => violations.push(LatticeViolation::NoJoin(names[a].clone(), names[b].clone())),
                }
                match greatest(&leq, (0..n).filter(|&l| leq[l][a] && leq[l][b])) {
                    Some(l) => {
                        meet[a][b] = Level(l);
                        meet[b][a] = Level(l);
                    }
                    None => violations.push(LatticeViolation::NoMeet(names[a].clone(), names[b].clone())),
                }
            }
        }
        if !violations.is_empty() {
            return Err(LatticeError::NotALattice(violations));
        }

        let top = (1..n).fold(Level(0), |acc, k| join[acc.0][k]);
        let bottom = (1..n).fold(Level(0), |acc, k| meet[acc.0][k]);

        let mut covers = Vec::new();
        for a in 0..n {
            for b in 0..n {
                if a != b && leq[a][b] && !(0..n).any(|c| c != a && c != b && leq[a][c] && leq[c][b]) {
                    covers.push((Level(a), Level(b)));
                }
            }
        }

        let mut bottom_up: Vec<Level> = (0..n).map(Level).collect();
        bottom_up.sort_by_key(|l| ((0..n).filter(|&k| leq[k][l.0]).count(), l.0));

        Ok(AwarenessLattice { names, index, leq, join, meet, top, bottom, covers, bottom_up })
    }

    /// Number of levels.
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// All levels in declaration order.
    pub fn levels(&self) -> impl Iterator<Item = Level> + '_ {
        (0..self.names.len()).map(Level)
    }

    /// Levels ordered so that every level appears after everything strictly below it.
    pub fn bottom_up(&self) -> &[Level] {
        &self.bottom_up
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, l: Level) -> &str {
        &self.names[l.0]
    }

    pub fn level(&self, name: &str) -> Result<Level, LatticeError> {
        self.index.get(name).copied().ok_or_else(|| LatticeError::UnknownLevel(name.to_string()))
    }

    /// `a ⊴ b`.
    pub fn leq(&self, a: Level, b: Level) -> bool {
        self.leq[a.0][b.0]
    }

    /// `a ◁ b`.
    pub fn lt(&self, a: Level, b: Level) -> bool {
        a != b && self.leq[a.0][b.0]
    }

    pub fn join(&self, a: Level, b: Level) -> Level {
        self.join[a.0][b.0]
    }

    pub fn meet(&self, a: Level, b: Level) -> Level {
        self.meet[a.0][b.0]
    }

    /// Join of an arbitrary family; the bottom for an empty family.
    pub fn join_all<I: IntoIterator<Item = Level>>(&self, it: I) -> Level {
        it.into_iter().fold(self.bottom, |acc, l| self.join(acc, l))
    }

    pub fn top(&self) -> Level {
        self.top
    }

    pub fn bottom(&self) -> Level {
        self.bottom
    }

    /// `L(ℓ)`, including `ℓ`.
    pub fn down_set(&self, l: Level) -> Vec<Level> {
        self.levels().filter(|&k| self.leq(k, l)).collect()
    }

    /// `L(ℓ) \ {ℓ}`.
    pub fn strictly_below(&self, l: Level) -> Vec<Level> {
        self.levels().filter(|&k| self.lt(k, l)).collect()
    }

    /// Levels weakly above `l`.
    pub fn up_set(&self, l: Level) -> Vec<Level> {
        self.levels().filter(|&k| self.leq(l, k)).collect()
    }

    /// Covering pairs `(a, b)` with `a ◁ b` and nothing strictly between.
    pub fn covers(&self) -> &[(Level, Level)] {
        &self.covers
    }

    /// Number of elements on a longest chain.
    pub fn height(&self) -> usize {
        let mut longest = vec![1usize; self.len()];
        for &l in &self.bottom_up {
            for k in self.strictly_below(l) {
                longest[l.0] = longest[l.0].max(longest[k.0] + 1);
            }
        }
        longest.into_iter().max().unwrap_or(0)
    }

    /// The sublattice `L(ℓ)` with the restricted order.
    pub fn restrict(&self, l: Level) -> AwarenessLattice {
        let down = self.down_set(l);
        let names: Vec<&str> = down.iter().map(|&k| self.name(k)).collect();
        let edges: Vec<(&str, &str)> = self
            .covers
            .iter()
            .filter(|(_, b)| self.leq(*b, l))
            .map(|&(a, b)| (self.name(a), self.name(b)))
            .collect();
        AwarenessLattice::new(&names, &edges).expect("a down-set of a lattice is a lattice")
    }
}

fn least<I: Iterator<Item = usize>>(leq: &[Vec<bool>], candidates: I) -> Option<usize> {
    let c: Vec<usize> = candidates.collect();
    c.iter().copied().find(|&u| c.iter().all(|&v| leq[u][v]))
}

fn greatest<I: Iterator<Item = usize>>(leq: &[Vec<bool>], candidates: I) -> Option<usize> {
    let c: Vec<usize> = candidates.collect();
    c.iter().copied().find(|&u| c.iter().all(|&v| leq[v][u]))
}
