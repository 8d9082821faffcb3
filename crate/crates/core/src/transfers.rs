//! Transfer schemes: Groves with awareness premia, its Clarke preset, the reverse
//! second-price auction with a buyer sink, and a one-shot Vickrey baseline.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::Transcript;
use crate::lattice::Level;
use crate::outcome::{OutcomeError, OutcomeId, OutcomeModel};
use crate::types::{TypeId, TypeStructure};
use crate::value::Q;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    Groves,
    Clarke,
    Rspa,
    StaticVickrey,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 4] = [SchemeKind::Groves, SchemeKind::Clarke, SchemeKind::Rspa, SchemeKind::StaticVickrey];

    pub fn as_str(self) -> &'static str {
        match self {
            SchemeKind::Groves => "groves",
            SchemeKind::Clarke => "clarke",
            SchemeKind::Rspa => "rspa",
            SchemeKind::StaticVickrey => "static-vickrey",
        }
    }

    /// One reporting stage and no feedback.
    pub fn is_static(self) -> bool {
        self == SchemeKind::StaticVickrey
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SchemeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SchemeKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown scheme `{s}` (expected groves, clarke, rspa or static-vickrey)"))
    }
}

/// `y_i^ℓ(t_{-i})` as an explicit table with an optional fallback.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct YTable {
    /// Keyed by agent, level and the opponents' profile in agent order.
    pub entries: HashMap<(usize, Level, Vec<TypeId>), Q>,
    pub default: Option<Q>,
}

impl YTable {
    /// The constant table `y ≡ c`.
    pub fn constant(c: Q) -> Self {
        YTable { entries: HashMap::new(), default: Some(c) }
    }

    pub fn get(&self, agent: usize, level: Level, opponents: &[TypeId]) -> Option<Q> {
        self.entries.get(&(agent, level, opponents.to_vec())).copied().or(self.default)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SchemeConfig {
    pub kind: SchemeKind,
    /// Used by `Groves` only.
    pub y: YTable,
    /// Sink agent of the auction.
    pub buyer: Option<usize>,
    /// Seller and the outcome in which she supplies.
    pub suppliers: Vec<(usize, OutcomeId)>,
    /// Use the closed-form premium that assumes every seller can lose at every level.
    pub rspa_simplified: bool,
    /// `false` deletes the `a_i` terms; used to exhibit concealment incentives.
    pub adjustments: bool,
}

impl SchemeConfig {
    pub fn new(kind: SchemeKind) -> Self {
        SchemeConfig {
            kind,
            y: YTable::constant(Q::zero()),
            buyer: None,
            suppliers: Vec::new(),
            rspa_simplified: false,
            adjustments: true,
        }
    }

    pub fn clarke() -> Self {
        Self::new(SchemeKind::Clarke)
    }

    pub fn groves(y: YTable) -> Self {
        SchemeConfig { y, ..Self::new(SchemeKind::Groves) }
    }

    pub fn without_adjustments(mut self) -> Self {
        self.adjustments = false;
        self
    }

    /// Same configuration under another scheme kind.
    pub fn with_kind(&self, kind: SchemeKind) -> Self {
        SchemeConfig { kind, ..self.clone() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum TransferError {
    #[error(transparent)]
    Outcome(#[from] OutcomeError),
    #[error("no y entry for agent {agent} at level {level}")]
    MissingYEntry { agent: String, level: String },
    #[error("the auction needs a buyer")]
    MissingBuyer,
    #[error("the auction needs at least two sellers")]
    FewerThanTwoSellers,
    #[error("invalid procurement context: {0}")]
    NotProcurement(String),
    #[error("transcript has not stopped")]
    TranscriptNotStopped,
}

/// The realized social choice `f` at the end of a play.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransferReport {
    pub outcome: OutcomeId,
    pub transfers: Vec<Q>,
    pub adjustments: Vec<Q>,
    pub premium_recipient: Option<usize>,
    /// `−Σ f_i`; positive means surplus.
    pub operator_balance: Q,
    pub pooled: Level,
}

/// Who reached a level first, tracked stage by stage.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FirstStatus {
    NotYet,
    Unique(usize),
    Tied,
}

/// Folds one reported profile into the per-level first-reporter table.
pub fn update_firsts(ts: &TypeStructure, firsts: &mut [FirstStatus], profile: &[TypeId]) {
    let mut hits: Vec<(Level, usize)> = profile.iter().enumerate().map(|(i, &t)| (ts.level_of(t), i)).collect();
    hits.sort();
    for run in hits.chunk_by(|a, b| a.0 == b.0) {
        let l = run[0].0;
        if firsts[l.0] == FirstStatus::NotYet {
            firsts[l.0] = if run.len() == 1 { FirstStatus::Unique(run[0].1) } else { FirstStatus::Tied };
        }
    }
}

/// `i*`: the unique agent who first reported a type at the final pooled level.
pub fn first_pooled_reporter(ts: &TypeStructure, transcript: &Transcript) -> Result<Option<usize>, TransferError> {
    if !transcript.stopped {
        return Err(TransferError::TranscriptNotStopped);
    }
    let last = transcript.final_profile().ok_or(TransferError::TranscriptNotStopped)?;
    let pooled = ts.pooled_level(last);
    for profile in &transcript.stages {
        let hit: Vec<usize> = (0..profile.len()).filter(|&i| ts.level_of(profile[i]) == pooled).collect();
        match hit.len() {
            0 => continue,
            1 => return Ok(Some(hit[0])),
            _ => return Ok(None),
        }
    }
    Ok(None)
}

/// A scheme bound to a validated environment, with premia precomputed.
#[derive(Clone, Debug)]
pub struct Mechanism<'a> {
    ts: &'a TypeStructure,
    om: &'a OutcomeModel,
    cfg: &'a SchemeConfig,
    /// `m_i(ℓ)` by agent then level.
    premia: Vec<Vec<Q>>,
    /// Auction only: supply outcome of each agent, `None` for the buyer.
    supply: Vec<Option<OutcomeId>>,
    rank: Vec<usize>,
}

impl<'a> Mechanism<'a> {
    pub fn new(ts: &'a TypeStructure, om: &'a OutcomeModel, cfg: &'a SchemeConfig) -> Result<Self, TransferError> {
        let mut rank = vec![0; om.len()];
        for (r, o) in om.tie_order().iter().enumerate() {
            rank[o.0] = r;
        }
        let mut m = Mechanism {
            ts,
            om,
            cfg,
            premia: vec![vec![Q::zero(); ts.lattice().len()]; ts.n_agents()],
            supply: vec![None; ts.n_agents()],
            rank,
        };
        if cfg.kind == SchemeKind::Rspa {
            m.validate_procurement()?;
        }
        if cfg.kind != SchemeKind::StaticVickrey {
            for i in 0..ts.n_agents() {
                m.premia[i] = m.compute_premia(i, cfg.kind == SchemeKind::Rspa && cfg.rspa_simplified)?;
            }
        }
        Ok(m)
    }

    pub fn types(&self) -> &'a TypeStructure {
        self.ts
    }

    pub fn outcomes(&self) -> &'a OutcomeModel {
        self.om
    }

    pub fn config(&self) -> &'a SchemeConfig {
        self.cfg
    }

    fn validate_procurement(&mut self) -> Result<(), TransferError> {
        let ts = self.ts;
        let buyer = self.cfg.buyer.ok_or(TransferError::MissingBuyer)?;
        if buyer >= ts.n_agents() {
            return Err(TransferError::MissingBuyer);
        }
        let bad = |s: String| Err(TransferError::NotProcurement(s));
        for &(i, o) in &self.cfg.suppliers {
            if i == buyer {
                return bad("the buyer cannot be a seller".into());
            }
            if i >= ts.n_agents() || o.0 >= self.om.len() {
                return bad("supplier refers to an unknown agent or outcome".into());
            }
            if self.supply[i].is_some() {
                return bad(format!("agent {} has two supply outcomes", ts.agents()[i]));
            }
            if self.supply.contains(&Some(o)) {
                return bad(format!("outcome {} is shared by two sellers", self.om.name(o)));
            }
            self.supply[i] = Some(o);
        }
        if self.cfg.suppliers.len() < 2 {
            return Err(TransferError::FewerThanTwoSellers);
        }
        for i in 0..ts.n_agents() {
            if i != buyer && self.supply[i].is_none() {
                return bad(format!("agent {} is neither buyer nor seller", ts.agents()[i]));
            }
        }
        for l in ts.lattice().levels() {
            for &(i, o) in &self.cfg.suppliers {
                if !self.om.available(l).contains(&o) {
                    return bad(format!("supply by {} is unavailable at level {}", ts.agents()[i], ts.lattice().name(l)));
                }
            }
        }
        for &(i, own) in &self.cfg.suppliers {
            for l in ts.lattice().levels() {
                for &t in ts.space(i, l) {
                    for k in 0..self.om.len() {
                        let o = OutcomeId(k);
                        if o != own && self.om.raw_value(t, o).is_some_and(|v| !v.is_zero()) {
                            return bad(format!("seller type {} values outcome {} at nonzero", ts.name(t), self.om.name(o)));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// `f_0`: welfare argmax, or the cheapest seller under the auction.
    pub fn outcome(&self, profile: &[TypeId]) -> Result<OutcomeId, TransferError> {
        match self.cfg.kind {
            SchemeKind::Rspa => {
                let w = self.lowest_bidder(profile)?;
                Ok(self.supply[w].expect("winner is a seller"))
            }
            _ => Ok(self.om.efficient_outcome(self.ts, profile)?),
        }
    }

    /// `c_i(t_i) = −v_i(supply_i, t_i)`.
    pub fn cost(&self, i: usize, t: TypeId) -> Result<Q, TransferError> {
        let o = self.supply[i].expect("cost is defined for sellers only");
        Ok(-self.om.value(self.ts, t, o)?)
    }

    fn sellers(&self) -> impl Iterator<Item = usize> + '_ {
        self.cfg.suppliers.iter().map(|&(i, _)| i)
    }

    /// Seller with the lowest reported cost; ties go to the supply outcome earliest in tie order.
    pub fn lowest_bidder(&self, profile: &[TypeId]) -> Result<usize, TransferError> {
        let mut best: Option<(Q, usize, usize)> = None;
        for i in self.sellers() {
            let c = self.cost(i, profile[i])?;
            let r = self.rank[self.supply[i].expect("seller").0];
            if best.as_ref().is_none_or(|&(bc, br, _)| c < bc || (c == bc && r < br)) {
                best = Some((c, r, i));
            }
        }
        Ok(best.expect("at least two sellers").2)
    }

    /// `c_(2)`: second smallest reported cost among sellers.
    pub fn second_lowest_cost(&self, profile: &[TypeId]) -> Result<Q, TransferError> {
        let mut costs = self.sellers().map(|i| self.cost(i, profile[i])).collect::<Result<Vec<_>, _>>()?;
        if costs.len() < 2 {
            return Err(TransferError::FewerThanTwoSellers);
        }
        costs.sort();
        Ok(costs[1])
    }

    /// `y_i^{λ̌(t)}(t_{-i}) = −Σ_{j≠i} v_j(f^{-i}_0(t), t_j)`.
    pub fn clarke_y(&self, i: usize, profile: &[TypeId]) -> Result<Q, TransferError> {
        let o = self.om.restricted_efficient_outcome(self.ts, i, profile)?;
        Ok(-self.om.partial_welfare(self.ts, o, profile, Some(i))?)
    }

    /// The scheme's `y_i` at the pooled level of `profile`.
    pub fn y(&self, i: usize, profile: &[TypeId]) -> Result<Q, TransferError> {
        match self.cfg.kind {
            SchemeKind::Clarke | SchemeKind::StaticVickrey => self.clarke_y(i, profile),
            SchemeKind::Groves => {
                let l = self.ts.pooled_level(profile);
                let opp: Vec<TypeId> = profile.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &t)| t).collect();
                self.cfg.y.get(i, l, &opp).ok_or_else(|| TransferError::MissingYEntry {
                    agent: self.ts.agents()[i].clone(),
                    level: self.ts.lattice().name(l).to_string(),
                })
            }
            SchemeKind::Rspa => Ok(Q::zero()),
        }
    }

    /// `m_i(ℓ)`.
    pub fn premium(&self, i: usize, l: Level) -> Q {
        self.premia[i][l.0]
    }

    /// Premia for `i` at every level, computed bottom-up.
    fn compute_premia(&self, i: usize, simplified: bool) -> Result<Vec<Q>, TransferError> {
        let ts = self.ts;
        let lattice = ts.lattice();
        let mut m = vec![Q::zero(); lattice.len()];
        if self.cfg.kind == SchemeKind::Rspa && Some(i) == self.cfg.buyer {
            return Ok(m);
        }
        for &l in lattice.bottom_up() {
            let below = lattice.strictly_below(l);
            if below.is_empty() {
                continue;
            }
            // floor[t_i]: min over opponents at level l of the realized term, with t_i fixed.
            let mut floor: HashMap<TypeId, Q> = HashMap::new();
            if !simplified {
                for t in ts.profiles_at(l) {
                    let v = self.realized_term(i, &t, t[i])?;
                    floor.entry(t[i]).and_modify(|x| *x = (*x).min(v)).or_insert(v);
                }
            }
            let mut best = Q::zero();
            for &lp in &below {
                for tp in ts.profiles_at(lp) {
                    if simplified {
                        let cand = m[lp.0] + self.realized_term(i, &tp, tp[i])?;
                        best = best.max(cand);
                        continue;
                    }
                    for &ti in ts.space(i, l) {
                        let cand = m[lp.0] + self.realized_term(i, &tp, ti)? - floor[&ti];
                        best = best.max(cand);
                    }
                }
            }
            m[l.0] = best;
        }
        Ok(m)
    }

    /// The bracketed term of the premium recursion for profile `t` with `i`'s true payoff
    /// evaluated at `ti`.
    ///
    /// Groves: `v_i(f_0(t), ti) + Σ_{j≠i} v_j(f_0(t), t_j) + y_i(t_{-i})`.
    /// Auction: `𝕀_i(t) (c_(2)(t) − c_i(ti))`.
    pub fn realized_term(&self, i: usize, t: &[TypeId], ti: TypeId) -> Result<Q, TransferError> {
        match self.cfg.kind {
            SchemeKind::Rspa => {
                if self.lowest_bidder(t)? == i {
                    Ok(self.second_lowest_cost(t)? - self.cost(i, ti)?)
                } else {
                    Ok(Q::zero())
                }
            }
            _ => {
                let x = self.outcome(t)?;
                Ok(self.om.value(self.ts, ti, x)? + self.om.partial_welfare(self.ts, x, t, Some(i))? + self.y(i, t)?)
            }
        }
    }

    /// Pairs `(agent, level, general, simplified)` where the two auction premium forms differ.
    pub fn rspa_premium_discrepancies(&self) -> Result<Vec<(usize, Level, Q, Q)>, TransferError> {
        let mut out = Vec::new();
        if self.cfg.kind != SchemeKind::Rspa {
            return Ok(out);
        }
        for i in 0..self.ts.n_agents() {
            let g = self.compute_premia(i, false)?;
            let s = self.compute_premia(i, true)?;
            for l in self.ts.lattice().levels() {
                if g[l.0] != s[l.0] {
                    out.push((i, l, g[l.0], s[l.0]));
                }
            }
        }
        Ok(out)
    }

    /// `a_i` for every agent given `i*` and the final pooled level.
    pub fn awareness_adjustment(&self, istar: Option<usize>, pooled: Level) -> Vec<Q> {
        let n = self.ts.n_agents();
        let mut a = vec![Q::zero(); n];
        let Some(r) = istar else { return a };
        if !self.cfg.adjustments || self.cfg.kind.is_static() || n == 1 {
            return a;
        }
        let m = self.premium(r, pooled);
        match self.cfg.kind {
            SchemeKind::Rspa => {
                if Some(r) != self.cfg.buyer {
                    a[r] = m;
                }
            }
            _ => {
                let share = m / Q::from_integer(n as i64 - 1);
                for (j, x) in a.iter_mut().enumerate() {
                    *x = if j == r { m } else { -share };
                }
            }
        }
        a
    }

    /// Transfers for a stopped transcript.
    pub fn settle(&self, transcript: &Transcript) -> Result<TransferReport, TransferError> {
        let istar = if self.cfg.kind.is_static() { None } else { first_pooled_reporter(self.ts, transcript)? };
        if self.cfg.kind.is_static() && transcript.is_empty() {
            return Err(TransferError::TranscriptNotStopped);
        }
        let last = transcript.final_profile().ok_or(TransferError::TranscriptNotStopped)?;
        self.settle_final(last, istar)
    }

    /// Transfers from the only data they depend on: `τ*` and `i*`.
    pub fn settle_final(&self, last: &[TypeId], istar: Option<usize>) -> Result<TransferReport, TransferError> {
        let pooled = self.ts.pooled_level(last);
        let outcome = self.outcome(last)?;
        let adjustments = self.awareness_adjustment(istar, pooled);
        let n = self.ts.n_agents();
        let mut transfers = vec![Q::zero(); n];
        match self.cfg.kind {
            SchemeKind::Rspa => {
                let buyer = self.cfg.buyer.expect("validated");
                let c2 = self.second_lowest_cost(last)?;
                let winner = self.lowest_bidder(last)?;
                for i in self.sellers() {
                    transfers[i] = adjustments[i] + if i == winner { c2 } else { Q::zero() };
                }
                let paid: Q = self.sellers().map(|i| adjustments[i]).fold(Q::zero(), |a, b| a + b);
                transfers[buyer] = -c2 - paid;
            }
            _ => {
                for i in 0..n {
                    transfers[i] = self.om.partial_welfare(self.ts, outcome, last, Some(i))? + self.y(i, last)? + adjustments[i];
                }
            }
        }
        let total = transfers.iter().fold(Q::zero(), |a, b| a + b);
        let premium_recipient = if self.cfg.adjustments { istar } else { None };
        Ok(TransferReport { outcome, transfers, adjustments, premium_recipient, operator_balance: -total, pooled })
    }

    /// `u_i = v_i(f_0, t_i) + f_i`, with `t_i` the type the payoff is evaluated at.
    pub fn utility(&self, report: &TransferReport, i: usize, ti: TypeId) -> Result<Q, TransferError> {
        Ok(self.om.value(self.ts, ti, report.outcome)? + report.transfers[i])
    }

    /// Agents whose incentives and participation are checked; the auction buyer is a sink.
    pub fn strategic_agents(&self) -> Vec<usize> {
        (0..self.ts.n_agents()).filter(|&i| !(self.cfg.kind == SchemeKind::Rspa && Some(i) == self.cfg.buyer)).collect()
    }
}
