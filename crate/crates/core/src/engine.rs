//! The dynamic direct elaboration protocol: stages, feasible reports,
//! pooled-awareness feedback and stop detection.

use thiserror::Error;

use crate::lattice::Level;
use crate::types::{PartialDraw, Profile, TypeId, TypeStructure};

/// Default cap on enumerated continuations per query.
pub const DEFAULT_BOUND: u64 = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("agent {agent} cannot report type {report} here")]
    InfeasibleReport { agent: usize, report: String },
    #[error("strategy space exceeds the enumeration bound of {bound}")]
    StrategySpaceTooLarge { bound: u64 },
    #[error("information set is not reachable under this draw")]
    Unreachable,
}

/// `h_i^n = (t_i, (t^k)_{k<n})`. The perceived type is already elaborated to the owner's
/// current awareness.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct InformationSet {
    pub owner: usize,
    pub perceived: TypeId,
    pub history: Vec<Profile>,
}

impl InformationSet {
    /// Stage at which this information set is reached, counting from 1.
    pub fn stage(&self) -> usize {
        self.history.len() + 1
    }

    /// The owner's report at the previous stage.
    pub fn previous_report(&self) -> Option<TypeId> {
        self.history.last().map(|p| p[self.owner])
    }
}

/// Reported profiles `t^1, …, t^n` with their pooled levels.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Transcript {
    pub stages: Vec<Profile>,
    pub pooled: Vec<Level>,
    pub stopped: bool,
}

impl Transcript {
    /// `τ*`.
    pub fn final_profile(&self) -> Option<&Profile> {
        self.stages.last()
    }

    pub fn final_pooled(&self) -> Option<Level> {
        self.pooled.last().copied()
    }

    /// Number of reporting stages.
    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }
}

/// A behavioral strategy: a report rule evaluated lazily on reached information sets.
pub trait Strategy: Sync {
    fn report(&self, ts: &TypeStructure, h: &InformationSet) -> TypeId;
}

/// `σ*`: report the currently perceived type.
#[derive(Clone, Copy, Debug, Default)]
pub struct TruthTelling;

impl Strategy for TruthTelling {
    fn report(&self, _ts: &TypeStructure, h: &InformationSet) -> TypeId {
        truth_telling(h)
    }
}

/// Wraps a closure as a strategy.
pub struct FnStrategy<F>(pub F);

impl<F> Strategy for FnStrategy<F>
where
    F: Fn(&TypeStructure, &InformationSet) -> TypeId + Sync,
{
    fn report(&self, ts: &TypeStructure, h: &InformationSet) -> TypeId {
        (self.0)(ts, h)
    }
}

/// `σ*_i(h) = t_i(h)`.
pub fn truth_telling(h: &InformationSet) -> TypeId {
    h.perceived
}

/// Reports admissible at `h`.
///
/// Stage 1: any own type at a level below the perceived one. Later stages: elaborations of
/// the previous report at or above the last pooled level, and never above the owner's
/// current awareness.
pub fn feasible_reports(ts: &TypeStructure, h: &InformationSet) -> Vec<TypeId> {
    let lattice = ts.lattice();
    let aware = ts.level_of(h.perceived);
    match h.history.last() {
        None => ts.types_below(h.owner, aware),
        Some(prev) => {
            let pooled = ts.pooled_level(prev);
            ts.upset(prev[h.owner])
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

/// Protocol state of one play inside a partial game.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlayState {
    pub draw: PartialDraw,
    pub transcript: Transcript,
    /// Each agent's current perceived type.
    pub perceived: Vec<TypeId>,
}

impl PlayState {
    /// Initial information sets: `r^ℓ_{ℓ_i ∧ ℓ}(t_i)` for the partial draw.
    pub fn new(ts: &TypeStructure, draw: &PartialDraw) -> Self {
        let perceived = (0..ts.n_agents())
            .map(|i| ts.project(draw.types[i], draw.awareness[i]).expect("awareness lies below the partial level"))
            .collect();
        PlayState { draw: draw.clone(), transcript: Transcript::default(), perceived }
    }

    pub fn info_set(&self, i: usize) -> InformationSet {
        InformationSet { owner: i, perceived: self.perceived[i], history: self.transcript.stages.clone() }
    }

    pub fn stopped(&self) -> bool {
        self.transcript.stopped
    }

    /// Reports admissible for agent `i` at the current stage.
    pub fn feasible(&self, ts: &TypeStructure, i: usize) -> Vec<TypeId> {
        feasible_reports(ts, &InformationSet { owner: i, perceived: self.perceived[i], history: self.transcript.stages.clone() })
    }

    fn is_feasible(&self, ts: &TypeStructure, i: usize, r: TypeId) -> bool {
        if ts.agent_of(r) != i {
            return false;
        }
        let lattice = ts.lattice();
        let l = ts.level_of(r);
        if !lattice.leq(l, ts.level_of(self.perceived[i])) {
            return false;
        }
        match self.transcript.stages.last() {
            None => true,
            Some(prev) => {
                let pooled = *self.transcript.pooled.last().expect("pooled tracks stages");
                lattice.leq(pooled, l) && ts.project(r, ts.level_of(prev[i])).ok() == Some(prev[i])
            }
        }
    }

    /// Appends a stage, pools awareness, elaborates perceived types and detects the stop.
    pub fn advance(&mut self, ts: &TypeStructure, reports: Profile) -> Result<(), EngineError> {
        for (i, &r) in reports.iter().enumerate() {
            if !self.is_feasible(ts, i, r) {
                return Err(EngineError::InfeasibleReport { agent: i, report: ts.name(r).to_string() });
            }
        }
        let lattice = ts.lattice();
        let pooled = ts.pooled_level(&reports);
        for i in 0..ts.n_agents() {
            let target = lattice.join(self.draw.awareness[i], pooled);
            self.perceived[i] = ts.project(self.draw.types[i], target).expect("pooled level lies within the partial game");
        }
        let stop = self.transcript.stages.last() == Some(&reports);
        self.transcript.stages.push(reports);
        self.transcript.pooled.push(pooled);
        self.transcript.stopped = stop;
        Ok(())
    }

    fn reports(&self, ts: &TypeStructure, strategies: &[&dyn Strategy]) -> Profile {
        (0..ts.n_agents()).map(|i| strategies[i].report(ts, &self.info_set(i))).collect()
    }
}

/// Plays the partial game of `draw` to its stop.
pub fn run(ts: &TypeStructure, draw: &PartialDraw, strategies: &[&dyn Strategy]) -> Result<Transcript, EngineError> {
    let mut state = PlayState::new(ts, draw);
    while !state.stopped() {
        let reports = state.reports(ts, strategies);
        state.advance(ts, reports)?;
    }
    Ok(state.transcript)
}

/// Everybody reports truthfully.
pub fn run_truthful(ts: &TypeStructure, draw: &PartialDraw) -> Transcript {
    let truth: Vec<&dyn Strategy> = vec![&TruthTelling; ts.n_agents()];
    run(ts, draw, &truth).expect("truth-telling is always feasible")
}

/// One-shot protocol: a single stage and no feedback.
pub fn run_static(ts: &TypeStructure, draw: &PartialDraw, strategies: &[&dyn Strategy]) -> Result<Transcript, EngineError> {
    let mut state = PlayState::new(ts, draw);
    let reports = state.reports(ts, strategies);
    state.advance(ts, reports)?;
    state.transcript.stopped = true;
    Ok(state.transcript)
}

/// Rebuilds the protocol state at the end of `history`, checking feasibility on the way.
pub fn replay(ts: &TypeStructure, draw: &PartialDraw, history: &[Profile]) -> Result<PlayState, EngineError> {
    let mut state = PlayState::new(ts, draw);
    for p in history {
        if state.stopped() {
            return Err(EngineError::Unreachable);
        }
        state.advance(ts, p.clone())?;
    }
    Ok(state)
}

/// Every continuation from `h` that some strategy of `h.owner` consistent with `h` can
/// produce against fixed opponent strategies.
///
/// Strategies inducing the same realized reports are identified, so this is a depth-first
/// walk over the owner's feasible reports at each of her reached information sets.
pub fn enumerate_deviation_plays(
    ts: &TypeStructure,
    draw: &PartialDraw,
    h: &InformationSet,
    opponents: &[&dyn Strategy],
    bound: u64,
) -> Result<Vec<Transcript>, EngineError> {
    let state = replay(ts, draw, &h.history)?;
    if state.perceived[h.owner] != h.perceived {
        return Err(EngineError::Unreachable);
    }
    let mut out = Vec::new();
    deviation_dfs(ts, h.owner, state, opponents, bound, &mut out)?;
    Ok(out)
}

fn deviation_dfs(
    ts: &TypeStructure,
    i: usize,
    state: PlayState,
    opponents: &[&dyn Strategy],
    bound: u64,
    out: &mut Vec<Transcript>,
) -> Result<(), EngineError> {
    if state.stopped() {
        if out.len() as u64 >= bound {
            return Err(EngineError::StrategySpaceTooLarge { bound });
        }
        out.push(state.transcript);
        return Ok(());
    }
    let mut base: Profile = (0..ts.n_agents())
        .map(|j| if j == i { TypeId(usize::MAX) } else { opponents[j].report(ts, &state.info_set(j)) })
        .collect();
    for r in state.feasible(ts, i) {
        base[i] = r;
        let mut next = state.clone();
        next.advance(ts, base.clone())?;
        deviation_dfs(ts, i, next, opponents, bound, out)?;
    }
    Ok(())
}
