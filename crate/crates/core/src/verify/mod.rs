//! Exhaustive property checks over finite scenarios.
//!
//! Every check quantifies over all draws of every partial game, so results are exact for
//! the scenario at hand. Failing checks carry witnesses that [`replay`] can re-run.

pub mod dominance;
pub mod holmstrom;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use num_traits::Zero;
use rayon::prelude::*;
use thiserror::Error;

use crate::engine::{self, EngineError, Transcript, TruthTelling, DEFAULT_BOUND};
use crate::lattice::Level;
use crate::outcome::OutcomeId;
use crate::transfers::{update_firsts, FirstStatus, Mechanism, TransferError};
use crate::types::{cartesian, PartialDraw, Profile, TypeId, TypeStructure};
use crate::value::Q;

pub use dominance::OpponentModel;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Property {
    Efficiency,
    PooledImplementation,
    Dominance,
    StageBound,
    NoDeficit,
    BudgetBalance,
    ParticipationExPost,
    ParticipationExAnte,
    NonnegativeValuations,
    Holmstrom,
}

impl Property {
    pub const ALL: [Property; 10] = [
        Property::Efficiency,
        Property::PooledImplementation,
        Property::Dominance,
        Property::StageBound,
        Property::NoDeficit,
        Property::BudgetBalance,
        Property::ParticipationExPost,
        Property::ParticipationExAnte,
        Property::NonnegativeValuations,
        Property::Holmstrom,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Property::Efficiency => "efficiency",
            Property::PooledImplementation => "pooled-implementation",
            Property::Dominance => "dominance",
            Property::StageBound => "stage-bound",
            Property::NoDeficit => "no-deficit",
            Property::BudgetBalance => "budget-balance",
            Property::ParticipationExPost => "participation-ex-post",
            Property::ParticipationExAnte => "participation-ex-ante",
            Property::NonnegativeValuations => "nonnegative-valuations",
            Property::Holmstrom => "holmstrom",
        }
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Property {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Property::ALL.into_iter().find(|p| p.as_str() == s).ok_or_else(|| {
            let names: Vec<&str> = Property::ALL.iter().map(|p| p.as_str()).collect();
            format!("unknown property `{s}` (expected one of {})", names.join(", "))
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Transfer(#[from] TransferError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("exact value exceeds the 64-bit range")]
    Overflow,
}

impl VerifyError {
    pub fn is_bound_exceeded(&self) -> bool {
        matches!(self, VerifyError::Engine(EngineError::StrategySpaceTooLarge { .. }))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WitnessKind {
    /// `values = [u_truthful, u_deviation]` at `evaluated_type`.
    Dominance,
    /// `values = [u]` at `evaluated_type` on `truthful`.
    Participation,
    /// `values = [Σ f_i]` on `deviation`, the offending feasible transcript.
    Budget,
    /// `values = []`; implemented and target outcomes in `outcomes`.
    Implementation,
    /// `values = [stages]` of `truthful`.
    StageBound,
    /// `values = [chosen welfare, better welfare]`.
    Efficiency,
    /// `values = [v]` of `evaluated_type` at `outcomes[0]`.
    Valuation,
    /// `values` holds the weights of an infeasibility certificate.
    Decomposition,
}

/// A counterexample with enough data to be re-run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub kind: WitnessKind,
    pub agent: Option<usize>,
    pub partial_level: Option<Level>,
    pub draw: Option<PartialDraw>,
    /// Reported profiles before the information set in question.
    pub history: Vec<Profile>,
    pub evaluated_type: Option<TypeId>,
    pub truthful: Option<Transcript>,
    pub deviation: Option<Transcript>,
    pub profile: Option<Profile>,
    pub outcomes: Vec<OutcomeId>,
    pub values: Vec<Q>,
    pub note: String,
}

impl Witness {
    fn new(kind: WitnessKind, note: impl Into<String>) -> Self {
        Witness {
            kind,
            agent: None,
            partial_level: None,
            draw: None,
            history: Vec::new(),
            evaluated_type: None,
            truthful: None,
            deviation: None,
            profile: None,
            outcomes: Vec::new(),
            values: Vec::new(),
            note: note.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerificationResult {
    pub property: Property,
    pub holds: bool,
    pub witnesses: Vec<Witness>,
    pub checked: u64,
}

impl VerificationResult {
    fn from_parts(property: Property, checked: u64, witnesses: Vec<Witness>, cap: usize) -> Self {
        let holds = witnesses.is_empty();
        let witnesses = witnesses.into_iter().take(cap).collect();
        VerificationResult { property, holds, witnesses, checked }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BudgetMode {
    Balance,
    NoDeficit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParticipationMode {
    ExPost,
    ExAnteAnticipated,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VerifyOptions {
    /// Node budget per enumeration query.
    pub bound: u64,
    pub opponents: OpponentModel,
    /// Witnesses kept per result.
    pub max_witnesses: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { bound: DEFAULT_BOUND, opponents: OpponentModel::Committed, max_witnesses: 5 }
    }
}

/// Compact protocol state: everything transfers and feasibility depend on.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub(crate) struct Node {
    pub last: Option<Profile>,
    pub firsts: Vec<FirstStatus>,
    pub stopped: bool,
}

/// Walks the protocol tree of one partial-game draw.
pub(crate) struct Walker<'a> {
    pub ts: &'a TypeStructure,
    pub draw: &'a PartialDraw,
    pub one_shot: bool,
}

impl<'a> Walker<'a> {
    pub fn root(&self) -> Node {
        Node { last: None, firsts: vec![FirstStatus::NotYet; self.ts.lattice().len()], stopped: false }
    }

    pub fn perceived(&self, j: usize, node: &Node) -> TypeId {
        let aw = self.draw.awareness[j];
        let target = match &node.last {
            None => aw,
            Some(p) => self.ts.lattice().join(aw, self.ts.pooled_level(p)),
        };
        self.ts.project(self.draw.types[j], target).expect("within the partial game")
    }

    pub fn feasible(&self, j: usize, node: &Node) -> Vec<TypeId> {
        let ts = self.ts;
        let lattice = ts.lattice();
        let aware = ts.level_of(self.perceived(j, node));
        match &node.last {
            None => ts.types_below(j, aware),
            Some(prev) => {
                let pooled = ts.pooled_level(prev);
                ts.upset(prev[j])
                    .iter()
                    .copied()
                    .filter(|&t| {
                        let l = ts.level_of(t);
                        lattice.leq(pooled, l) && lattice.leq(l, aware)
                    })
                    .collect()
            }
        }
    }

    /// Every joint report, with agent `fixed.0` held at `fixed.1` if given.
    pub fn profiles(&self, node: &Node, fixed: Option<(usize, TypeId)>) -> Vec<Profile> {
        let sets: Vec<Vec<TypeId>> = (0..self.ts.n_agents())
            .map(|j| match fixed {
                Some((i, t)) if i == j => vec![t],
                _ => self.feasible(j, node),
            })
            .collect();
        let refs: Vec<&[TypeId]> = sets.iter().map(Vec::as_slice).collect();
        cartesian(&refs)
    }

    pub fn step(&self, node: &Node, profile: Profile) -> Node {
        let mut firsts = node.firsts.clone();
        update_firsts(self.ts, &mut firsts, &profile);
        let stopped = self.one_shot || node.last.as_ref() == Some(&profile);
        Node { last: Some(profile), firsts, stopped }
    }

    pub fn istar(&self, node: &Node) -> Option<usize> {
        let last = node.last.as_ref()?;
        match node.firsts[self.ts.pooled_level(last).0] {
            FirstStatus::Unique(a) => Some(a),
            _ => None,
        }
    }
}

/// Builds a transcript record from reported stages.
pub fn transcript_of(ts: &TypeStructure, stages: Vec<Profile>, one_shot: bool) -> Transcript {
    let pooled = stages.iter().map(|p| ts.pooled_level(p)).collect();
    let n = stages.len();
    let stopped = (one_shot && n == 1) || (n >= 2 && stages[n - 1] == stages[n - 2]);
    Transcript { stages, pooled, stopped }
}

/// Runs every property check against one mechanism.
pub struct Verifier<'a> {
    pub mech: Mechanism<'a>,
    pub opts: VerifyOptions,
}

impl<'a> Verifier<'a> {
    pub fn new(mech: Mechanism<'a>, opts: VerifyOptions) -> Self {
        Verifier { mech, opts }
    }

    fn ts(&self) -> &'a TypeStructure {
        self.mech.types()
    }

    fn one_shot(&self) -> bool {
        self.mech.config().kind.is_static()
    }

    /// Play under truth-telling by everyone, one-shot or dynamic per scheme.
    pub fn truthful_play(&self, draw: &PartialDraw) -> Transcript {
        if self.one_shot() {
            let truth: Vec<&dyn engine::Strategy> = vec![&TruthTelling; self.ts().n_agents()];
            engine::run_static(self.ts(), draw, &truth).expect("truth-telling is feasible")
        } else {
            engine::run_truthful(self.ts(), draw)
        }
    }

    /// Every `(partial level, draw)` cell.
    pub fn all_partial_draws(&self) -> Vec<PartialDraw> {
        let ts = self.ts();
        ts.lattice().bottom_up().iter().flat_map(|&l| ts.partial_draws(l)).collect()
    }

    pub fn check(&self, p: Property) -> Result<VerificationResult, VerifyError> {
        match p {
            Property::Efficiency => self.check_efficiency(),
            Property::PooledImplementation => self.check_pooled_implementation(),
            Property::Dominance => self.check_conditional_dominance(),
            Property::StageBound => self.check_stage_bound(),
            Property::NoDeficit => self.check_budget(BudgetMode::NoDeficit),
            Property::BudgetBalance => self.check_budget(BudgetMode::Balance),
            Property::ParticipationExPost => self.check_participation(ParticipationMode::ExPost),
            Property::ParticipationExAnte => self.check_participation(ParticipationMode::ExAnteAnticipated),
            Property::NonnegativeValuations => Ok(self.check_nonnegative_valuations()),
            Property::Holmstrom => self.check_holmstrom(),
        }
    }

    /// `f_0` maximizes welfare over `X_0^ℓ` at every profile of every level.
    pub fn check_efficiency(&self) -> Result<VerificationResult, VerifyError> {
        self.check_efficiency_of(|p| self.mech.outcome(p))
    }

    /// Same check against an arbitrary outcome rule.
    pub fn check_efficiency_of<F>(&self, rule: F) -> Result<VerificationResult, VerifyError>
    where
        F: Fn(&[TypeId]) -> Result<OutcomeId, TransferError>,
    {
        let ts = self.ts();
        let om = self.mech.outcomes();
        let mut checked = 0;
        let mut wit = Vec::new();
        for &l in ts.lattice().bottom_up() {
            for p in ts.profiles_at(l) {
                checked += 1;
                let x = rule(&p)?;
                let w = om.welfare(ts, x, &p).map_err(TransferError::from)?;
                for &y in om.available(l) {
                    let wy = om.welfare(ts, y, &p).map_err(TransferError::from)?;
                    if wy > w {
                        let mut z = Witness::new(WitnessKind::Efficiency, format!("{} beats {}", om.name(y), om.name(x)));
                        z.profile = Some(p.clone());
                        z.outcomes = vec![x, y];
                        z.values = vec![w, wy];
                        wit.push(z);
                        break;
                    }
                }
            }
        }
        Ok(VerificationResult::from_parts(Property::Efficiency, checked, wit, self.opts.max_witnesses))
    }

    /// Truthful play implements `f_0` at the projection of the true profile to `⋁ ℓ_i`.
    pub fn check_pooled_implementation(&self) -> Result<VerificationResult, VerifyError> {
        let ts = self.ts();
        let l = ts.lattice();
        let draws = ts.partial_draws(l.top());
        let results: Vec<Result<Option<Witness>, VerifyError>> = draws
            .par_iter()
            .map(|d| {
                let tr = self.truthful_play(d);
                let got = self.mech.outcome(tr.final_profile().expect("nonempty"))?;
                let pooled = l.join_all(d.awareness.iter().copied());
                let target_profile = ts.project_profile(&d.types, pooled).expect("below top");
                let want = self.mech.outcome(&target_profile)?;
                if got == want {
                    return Ok(None);
                }
                let om = self.mech.outcomes();
                let mut z = Witness::new(
                    WitnessKind::Implementation,
                    format!("implemented {} but the pooled-awareness target is {}", om.name(got), om.name(want)),
                );
                z.partial_level = Some(l.top());
                z.draw = Some(d.clone());
                z.truthful = Some(tr);
                z.profile = Some(target_profile);
                z.outcomes = vec![got, want];
                Ok(Some(z))
            })
            .collect();
        self.collect(Property::PooledImplementation, draws.len() as u64, results)
    }

    /// Truthful plays stop within three reporting stages in every partial game.
    pub fn check_stage_bound(&self) -> Result<VerificationResult, VerifyError> {
        let draws = self.all_partial_draws();
        let results: Vec<Result<Option<Witness>, VerifyError>> = draws
            .par_iter()
            .map(|d| {
                let tr = self.truthful_play(d);
                if tr.len() <= 3 {
                    return Ok(None);
                }
                let mut z = Witness::new(WitnessKind::StageBound, format!("{} stages", tr.len()));
                z.partial_level = Some(d.level);
                z.draw = Some(d.clone());
                z.values = vec![Q::from_integer(tr.len() as i64)];
                z.truthful = Some(tr);
                Ok(Some(z))
            })
            .collect();
        self.collect(Property::StageBound, draws.len() as u64, results)
    }

    /// `Σ f_i = 0` (balance) or `≤ 0` (no deficit) on every feasible transcript.
    ///
    /// Feasible transcripts are generated from a root where everyone is fully aware, which
    /// admits every report sequence any draw admits. Transfers depend only on the final
    /// profile and `i*`, so distinct compact states are visited once.
    pub fn check_budget(&self, mode: BudgetMode) -> Result<VerificationResult, VerifyError> {
        let ts = self.ts();
        let top = ts.lattice().top();
        let draw = PartialDraw {
            level: top,
            types: (0..ts.n_agents()).map(|a| ts.space(a, top)[0]).collect(),
            awareness: vec![top; ts.n_agents()],
        };
        let walker = Walker { ts, draw: &draw, one_shot: self.one_shot() };
        let mut seen: HashMap<Node, ()> = HashMap::new();
        let mut settled: HashMap<(Profile, Option<usize>), ()> = HashMap::new();
        let mut wit = Vec::new();
        let mut stack = vec![(walker.root(), Vec::<Profile>::new())];
        let mut checked = 0u64;
        while let Some((node, path)) = stack.pop() {
            if node.stopped {
                let last = node.last.clone().expect("stopped nodes have a profile");
                let istar = walker.istar(&node);
                if settled.insert((last.clone(), istar), ()).is_some() {
                    continue;
                }
                checked += 1;
                let rep = self.mech.settle_final(&last, istar)?;
                let total = -rep.operator_balance;
                let bad = match mode {
                    BudgetMode::Balance => !total.is_zero(),
                    BudgetMode::NoDeficit => total > Q::zero(),
                };
                if bad {
                    let mut z = Witness::new(WitnessKind::Budget, format!("transfers sum to {}", crate::value::format_q(&total)));
                    z.draw = Some(draw.clone());
                    z.partial_level = Some(top);
                    z.deviation = Some(transcript_of(ts, path, self.one_shot()));
                    z.values = vec![total];
                    wit.push(z);
                }
                continue;
            }
            for p in walker.profiles(&node, None) {
                let child = walker.step(&node, p.clone());
                if seen.insert(child.clone(), ()).is_none() {
                    if seen.len() as u64 > self.opts.bound {
                        return Err(EngineError::StrategySpaceTooLarge { bound: self.opts.bound }.into());
                    }
                    let mut next = path.clone();
                    next.push(p);
                    stack.push((child, next));
                }
            }
        }
        let property = match mode {
            BudgetMode::Balance => Property::BudgetBalance,
            BudgetMode::NoDeficit => Property::NoDeficit,
        };
        wit.sort_by_key(|w| w.deviation.as_ref().map(|t| t.len()));
        Ok(VerificationResult::from_parts(property, checked, wit, self.opts.max_witnesses))
    }

    /// Truthful utility is nonnegative at reached information sets of the partial game
    /// matching the owner's awareness; the ex-ante mode looks at initial sets only.
    pub fn check_participation(&self, mode: ParticipationMode) -> Result<VerificationResult, VerifyError> {
        let ts = self.ts();
        let agents = self.mech.strategic_agents();
        let draws = self.all_partial_draws();
        let results: Vec<Result<(u64, Vec<Witness>), VerifyError>> = draws
            .par_iter()
            .map(|d| {
                let tr = self.truthful_play(d);
                let rep = self.mech.settle(&tr)?;
                let mut state = engine::PlayState::new(ts, d);
                let mut checked = 0;
                let mut wit = Vec::new();
                for (n, stage) in tr.stages.iter().enumerate() {
                    if n > 0 && (mode == ParticipationMode::ExAnteAnticipated || state.stopped()) {
                        break;
                    }
                    for &i in &agents {
                        let ti = state.perceived[i];
                        if ts.level_of(ti) != d.level {
                            continue;
                        }
                        checked += 1;
                        let u = self.mech.utility(&rep, i, ti)?;
                        if u < Q::zero() {
                            let mut z = Witness::new(
                                WitnessKind::Participation,
                                format!("agent {} at stage {} expects {}", ts.agents()[i], n + 1, crate::value::format_q(&u)),
                            );
                            z.agent = Some(i);
                            z.partial_level = Some(d.level);
                            z.draw = Some(d.clone());
                            z.history = tr.stages[..n].to_vec();
                            z.evaluated_type = Some(ti);
                            z.truthful = Some(tr.clone());
                            z.values = vec![u];
                            wit.push(z);
                        }
                    }
                    state.advance(ts, stage.clone())?;
                }
                Ok((checked, wit))
            })
            .collect();
        let mut checked = 0;
        let mut wit = Vec::new();
        for r in results {
            let (c, w) = r?;
            checked += c;
            wit.extend(w);
        }
        let property = match mode {
            ParticipationMode::ExPost => Property::ParticipationExPost,
            ParticipationMode::ExAnteAnticipated => Property::ParticipationExAnte,
        };
        Ok(VerificationResult::from_parts(property, checked, wit, self.opts.max_witnesses))
    }

    /// Every type values every outcome available at its own level at least zero.
    pub fn check_nonnegative_valuations(&self) -> VerificationResult {
        let ts = self.ts();
        let om = self.mech.outcomes();
        let mut checked = 0;
        let mut wit = Vec::new();
        for a in 0..ts.n_agents() {
            for &l in ts.lattice().bottom_up() {
                for &t in ts.space(a, l) {
                    for &o in om.available(l) {
                        checked += 1;
                        if let Some(v) = om.raw_value(t, o) {
                            if v < Q::zero() {
                                let mut z = Witness::new(
                                    WitnessKind::Valuation,
                                    format!("v_{}({}, {}) = {}", ts.agents()[a], om.name(o), ts.name(t), crate::value::format_q(&v)),
                                );
                                z.agent = Some(a);
                                z.evaluated_type = Some(t);
                                z.outcomes = vec![o];
                                z.values = vec![v];
                                wit.push(z);
                            }
                        }
                    }
                }
            }
        }
        VerificationResult::from_parts(Property::NonnegativeValuations, checked, wit, self.opts.max_witnesses)
    }

    /// Truth-telling is conditionally dominant.
    pub fn check_conditional_dominance(&self) -> Result<VerificationResult, VerifyError> {
        dominance::check(&self.mech, &self.opts)
    }

    /// Welfare decomposes as `Σ_i g_i(t_{-i})` at every level.
    pub fn check_holmstrom(&self) -> Result<VerificationResult, VerifyError> {
        let ts = self.ts();
        let checked: u64 = ts.lattice().levels().map(|l| ts.profiles_at(l).len() as u64).sum();
        match holmstrom::find_g(&self.mech)? {
            Ok(g) => {
                let r = holmstrom::check_holmstrom(&self.mech, &g)?;
                Ok(VerificationResult { checked, ..r })
            }
            Err(cert) => {
                let mut z = Witness::new(
                    WitnessKind::Decomposition,
                    format!("no decomposition at level {}", ts.lattice().name(cert.level)),
                );
                z.partial_level = Some(cert.level);
                z.values = cert.weights.iter().map(|(_, w)| *w).collect();
                Ok(VerificationResult::from_parts(Property::Holmstrom, checked, vec![z], self.opts.max_witnesses))
            }
        }
    }

    fn collect(
        &self,
        property: Property,
        checked: u64,
        results: Vec<Result<Option<Witness>, VerifyError>>,
    ) -> Result<VerificationResult, VerifyError> {
        let mut wit = Vec::new();
        for r in results {
            if let Some(w) = r? {
                wit.push(w);
            }
        }
        Ok(VerificationResult::from_parts(property, checked, wit, self.opts.max_witnesses))
    }
}

/// Recomputes a witness's values from its stored transcripts. Returns the recomputed
/// values, which equal `w.values` for a genuine witness.
pub fn replay(mech: &Mechanism<'_>, w: &Witness) -> Result<Vec<Q>, VerifyError> {
    let ts = mech.types();
    let settle = |t: &Transcript| -> Result<crate::transfers::TransferReport, VerifyError> {
        if let Some(d) = &w.draw {
            let one_shot = mech.config().kind.is_static();
            let mut st = engine::PlayState::new(ts, d);
            for p in &t.stages {
                st.advance(ts, p.clone())?;
            }
            if !(st.stopped() || one_shot) {
                return Err(TransferError::TranscriptNotStopped.into());
            }
        }
        let mut t = t.clone();
        t.stopped = true;
        Ok(mech.settle(&t)?)
    };
    match w.kind {
        WitnessKind::Dominance => {
            let (i, ti) = (w.agent.expect("agent"), w.evaluated_type.expect("type"));
            let t = settle(w.truthful.as_ref().expect("truthful play"))?;
            let d = settle(w.deviation.as_ref().expect("deviating play"))?;
            Ok(vec![mech.utility(&t, i, ti)?, mech.utility(&d, i, ti)?])
        }
        WitnessKind::Participation => {
            let r = settle(w.truthful.as_ref().expect("truthful play"))?;
            Ok(vec![mech.utility(&r, w.agent.expect("agent"), w.evaluated_type.expect("type"))?])
        }
        WitnessKind::Budget => {
            let r = settle(w.deviation.as_ref().expect("transcript"))?;
            Ok(vec![-r.operator_balance])
        }
        WitnessKind::StageBound => Ok(vec![Q::from_integer(w.truthful.as_ref().expect("play").len() as i64)]),
        WitnessKind::Efficiency => {
            let p = w.profile.as_ref().expect("profile");
            let om = mech.outcomes();
            let f = |o| om.welfare(ts, o, p).map_err(|e| VerifyError::Transfer(e.into()));
            Ok(vec![f(w.outcomes[0])?, f(w.outcomes[1])?])
        }
        WitnessKind::Valuation => {
            let v = mech.outcomes().value(ts, w.evaluated_type.expect("type"), w.outcomes[0]).map_err(TransferError::from)?;
            Ok(vec![v])
        }
        WitnessKind::Implementation | WitnessKind::Decomposition => Ok(w.values.clone()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::transfers::{SchemeConfig, SchemeKind};

    fn q(n: i64) -> Q {
        Q::from_integer(n)
    }

    #[test]
    fn property_names_round_trip() {
        for p in Property::ALL {
            assert_eq!(p.as_str().parse::<Property>().unwrap(), p);
        }
        assert!("speed".parse::<Property>().is_err());
    }

    #[test]
    fn example1_budget_and_participation() {
        let sc = fixtures::example1();
        let opts = VerifyOptions { max_witnesses: usize::MAX, ..VerifyOptions::default() };
        let v = Verifier::new(sc.mechanism().unwrap(), opts);
        let nd = v.check_budget(BudgetMode::NoDeficit).unwrap();
        assert!(nd.holds, "{:?}", nd.witnesses);
        assert!(nd.checked > 0);
        let pc = v.check_participation(ParticipationMode::ExPost).unwrap();
        assert!(!pc.holds);
        let w = pc.witnesses.iter().find(|w| w.values == vec![q(-80)]).expect("agent-1 loss of 80");
        assert_eq!(w.agent, Some(0));
        assert_eq!(replay(&v.mech, w).unwrap(), w.values);
    }

    #[test]
    fn nonnegativity_flags_costs() {
        let sc = fixtures::example1();
        let v = Verifier::new(sc.mechanism().unwrap(), VerifyOptions::default());
        let r = v.check_nonnegative_valuations();
        assert!(!r.holds);
        assert!(r.witnesses.iter().all(|w| w.values[0] < q(0)));
        let sc2 = fixtures::example2();
        let v2 = Verifier::new(sc2.mechanism().unwrap(), VerifyOptions::default());
        assert!(v2.check_nonnegative_valuations().holds);
    }

    #[test]
    fn corrupted_rule_fails_efficiency() {
        let sc = fixtures::example2();
        let v = Verifier::new(sc.mechanism().unwrap(), VerifyOptions::default());
        assert!(v.check_efficiency().unwrap().holds);
        let first = sc.outcomes.outcome("1").unwrap();
        let r = v.check_efficiency_of(|_| Ok(first)).unwrap();
        assert!(!r.holds);
        let w = &r.witnesses[0];
        assert!(w.values[1] > w.values[0]);
        assert_eq!(replay(&v.mech, w).unwrap(), w.values);
    }

    #[test]
    fn static_vickrey_misses_pooled_target() {
        let sc = fixtures::example2();
        let cfg = SchemeConfig::new(SchemeKind::StaticVickrey);
        let v = Verifier::new(sc.mechanism_with(&cfg).unwrap(), VerifyOptions::default());
        let r = v.check_pooled_implementation().unwrap();
        assert!(!r.holds);
        let dynamic = Verifier::new(sc.mechanism().unwrap(), VerifyOptions::default());
        assert!(dynamic.check_pooled_implementation().unwrap().holds);
        assert!(dynamic.check_stage_bound().unwrap().holds);
    }

    #[test]
    fn adversarial_groves_runs_a_deficit() {
        let sc = fixtures::example2();
        let cfg = SchemeConfig::groves(crate::transfers::YTable::constant(q(1)));
        let v = Verifier::new(sc.mechanism_with(&cfg).unwrap(), VerifyOptions::default());
        let r = v.check_budget(BudgetMode::NoDeficit).unwrap();
        assert!(!r.holds);
        for w in &r.witnesses {
            assert!(w.values[0] > q(0));
            assert_eq!(replay(&v.mech, w).unwrap(), w.values);
        }
    }

    #[test]
    fn budget_bound_is_enforced() {
        let sc = fixtures::example1();
        let opts = VerifyOptions { bound: 10, ..VerifyOptions::default() };
        let v = Verifier::new(sc.mechanism().unwrap(), opts);
        let e = v.check_budget(BudgetMode::NoDeficit).unwrap_err();
        assert!(e.is_bound_exceeded());
    }
}
