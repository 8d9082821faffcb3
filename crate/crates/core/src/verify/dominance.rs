//! Conditional dominance of truth-telling.
//!
//! For every strategic agent `i`, partial level `ℓ̂` and draw of the `ℓ̂`-partial game, the
//! checker walks every history reached when `i` is truthful and opponents report anything
//! feasible. At each reached information set whose awareness is `ℓ̂`, truthful continuation
//! is compared with every deviating continuation against the same opponent strategies.
//!
//! Information sets are reached with opponents reporting anything feasible. What opponents
//! may do after the information set depends on the [`OpponentModel`]:
//!
//! * `Committed` (default): each opponent continues as a truth-teller for a fixed pretend
//!   type and awareness consistent with its own past reports, so its later reports are
//!   projections of one type to the pooled awareness. Truthful and deviating plays face the
//!   same commitments.
//! * `AwarenessTrace`: opponents condition on their own type, their own reports and the
//!   pooled level of each stage. While a deviation leaves the pooled levels unchanged they
//!   report the same in both plays; once pooled levels differ the two plays are compared
//!   worst case against best case.
//! * `FullHistory`: opponents see every report, so any changed report decouples.
//!
//! The two reactive models admit opponents who elaborate differently after a concealment
//! that is later undone, and the premium does not cover that gap.

use std::collections::{HashMap, HashSet};

use rayon::prelude::*;

use crate::engine::EngineError;
use crate::transfers::Mechanism;
use crate::lattice::Level;
use crate::types::{cartesian, PartialDraw, Profile, TypeId};
use crate::value::Q;

use super::{transcript_of, Node, Property, VerificationResult, VerifyError, VerifyOptions, Walker, Witness, WitnessKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OpponentModel {
    /// Opponents continue as truth-tellers for a fixed pretend type and awareness.
    Committed,
    /// Opponents condition on own type, own reports and pooled levels.
    AwarenessTrace,
    /// Opponents condition on every reported profile.
    FullHistory,
}

impl OpponentModel {
    pub const ALL: [OpponentModel; 3] = [OpponentModel::Committed, OpponentModel::AwarenessTrace, OpponentModel::FullHistory];

    pub fn as_str(self) -> &'static str {
        match self {
            OpponentModel::Committed => "committed",
            OpponentModel::AwarenessTrace => "awareness-trace",
            OpponentModel::FullHistory => "full-history",
        }
    }
}

impl std::str::FromStr for OpponentModel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        OpponentModel::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown opponent model `{s}` (expected committed, awareness-trace or full-history)"))
    }
}

/// Pretend `(type, awareness)` per agent; the deviator's entry is unused.
type Plan = Vec<(TypeId, Level)>;

struct Cell<'m, 'a> {
    mech: &'m Mechanism<'a>,
    walker: Walker<'m>,
    i: usize,
    model: OpponentModel,
    bound: u64,
    nodes: u64,
    /// Per evaluated type: worst truthful continuation and best continuation overall.
    min_truth: HashMap<(TypeId, Node), (Q, Vec<Profile>)>,
    max_any: HashMap<(TypeId, Node), (Q, Vec<Profile>)>,
    passed: HashSet<(TypeId, Node, Node)>,
    explored: HashSet<Node>,
    checked: u64,
}

type Found = Option<Box<Witness>>;

impl<'m, 'a> Cell<'m, 'a> {
    fn tick(&mut self) -> Result<(), VerifyError> {
        self.nodes += 1;
        if self.nodes > self.bound {
            return Err(EngineError::StrategySpaceTooLarge { bound: self.bound }.into());
        }
        Ok(())
    }

    fn payoff(&self, node: &Node, ti: TypeId) -> Result<Q, VerifyError> {
        let last = node.last.as_ref().expect("stopped nodes have a profile");
        let rep = self.mech.settle_final(last, self.walker.istar(node))?;
        Ok(self.mech.utility(&rep, self.i, ti)?)
    }

    fn truthful_report(&self, node: &Node) -> TypeId {
        self.walker.perceived(self.i, node)
    }

    /// Worst utility at `ti` over opponent continuations with `i` truthful.
    fn min_truth(&mut self, node: &Node, ti: TypeId) -> Result<(Q, Vec<Profile>), VerifyError> {
        if node.stopped {
            return Ok((self.payoff(node, ti)?, Vec::new()));
        }
        let key = (ti, node.clone());
        if let Some(v) = self.min_truth.get(&key) {
            return Ok(v.clone());
        }
        self.tick()?;
        let r = self.truthful_report(node);
        let mut best: Option<(Q, Vec<Profile>)> = None;
        for p in self.walker.profiles(node, Some((self.i, r))) {
            let child = self.walker.step(node, p.clone());
            let (v, mut path) = self.min_truth(&child, ti)?;
            if best.as_ref().is_none_or(|(b, _)| v < *b) {
                path.insert(0, p);
                best = Some((v, path));
            }
        }
        let out = best.expect("truth-telling is always feasible");
        self.min_truth.insert(key, out.clone());
        Ok(out)
    }

    /// Best utility at `ti` over every continuation.
    fn max_any(&mut self, node: &Node, ti: TypeId) -> Result<(Q, Vec<Profile>), VerifyError> {
        if node.stopped {
            return Ok((self.payoff(node, ti)?, Vec::new()));
        }
        let key = (ti, node.clone());
        if let Some(v) = self.max_any.get(&key) {
            return Ok(v.clone());
        }
        self.tick()?;
        let mut best: Option<(Q, Vec<Profile>)> = None;
        for p in self.walker.profiles(node, None) {
            let child = self.walker.step(node, p.clone());
            let (v, mut path) = self.max_any(&child, ti)?;
            if best.as_ref().is_none_or(|(b, _)| v > *b) {
                path.insert(0, p);
                best = Some((v, path));
            }
        }
        let out = best.expect("some report is always feasible");
        self.max_any.insert(key, out.clone());
        Ok(out)
    }

    fn coupled(&self, a: &Profile, b: &Profile) -> bool {
        match self.model {
            OpponentModel::AwarenessTrace => self.walker.ts.pooled_level(a) == self.walker.ts.pooled_level(b),
            OpponentModel::FullHistory | OpponentModel::Committed => a == b,
        }
    }

    /// Compares truthful and deviating play from a pair of coupled states.
    fn check_pair(
        &mut self,
        nt: &Node,
        nd: &Node,
        ti: TypeId,
        ht: &mut Vec<Profile>,
        hd: &mut Vec<Profile>,
    ) -> Result<Found, VerifyError> {
        let key = (ti, nt.clone(), nd.clone());
        if self.passed.contains(&key) {
            return Ok(None);
        }
        self.tick()?;
        let split = |me: &mut Self, nt: &Node, nd: &Node, ht: &[Profile], hd: &[Profile]| -> Result<Found, VerifyError> {
            let (ut, st) = me.min_truth(nt, ti)?;
            let (ud, sd) = me.max_any(nd, ti)?;
            if ut >= ud {
                return Ok(None);
            }
            Ok(Some(Box::new(me.witness(ht, st, hd, sd, ti, ut, ud))))
        };
        let found = if nt.stopped || nd.stopped {
            split(self, nt, nd, ht, hd)?
        } else {
            let rt = self.truthful_report(nt);
            let opponents = self.walker.profiles(nt, Some((self.i, rt)));
            let deviations = self.walker.feasible(self.i, nd);
            let mut found = None;
            'outer: for pt in opponents {
                let ct = self.walker.step(nt, pt.clone());
                for &rd in &deviations {
                    let mut pd = pt.clone();
                    pd[self.i] = rd;
                    let cd = self.walker.step(nd, pd.clone());
                    ht.push(pt.clone());
                    hd.push(pd.clone());
                    let r = if self.coupled(&pt, &pd) {
                        self.check_pair(&ct, &cd, ti, ht, hd)?
                    } else {
                        split(self, &ct, &cd, ht, hd)?
                    };
                    ht.pop();
                    hd.pop();
                    if r.is_some() {
                        found = r;
                        break 'outer;
                    }
                }
            }
            found
        };
        if found.is_none() {
            self.passed.insert(key);
        }
        Ok(found)
    }

    /// Every commitment opponents can make at `node`.
    fn plans(&self, node: &Node) -> Vec<Plan> {
        let ts = self.walker.ts;
        let lattice = ts.lattice();
        let top = self.walker.draw.level;
        let choices: Vec<Vec<(TypeId, Level)>> = (0..ts.n_agents())
            .map(|j| {
                if j == self.i {
                    return vec![(TypeId(0), lattice.bottom())];
                }
                let aware = ts.level_of(self.walker.perceived(j, node));
                let (thetas, floor): (Vec<TypeId>, Level) = match &node.last {
                    None => (ts.space(j, top).to_vec(), lattice.bottom()),
                    Some(p) => (ts.upset(p[j]).iter().copied().filter(|&t| ts.level_of(t) == top).collect(), ts.level_of(p[j])),
                };
                let ks: Vec<Level> = lattice.down_set(aware).into_iter().filter(|&k| lattice.leq(floor, k)).collect();
                thetas.iter().flat_map(|&t| ks.iter().map(move |&k| (t, k))).collect()
            })
            .collect();
        let refs: Vec<&[(TypeId, Level)]> = choices.iter().map(Vec::as_slice).collect();
        cartesian(&refs)
    }

    /// Opponents follow `plan`; `i` reports `ri`.
    fn planned(&self, node: &Node, plan: &Plan, ri: TypeId) -> Profile {
        let ts = self.walker.ts;
        let lattice = ts.lattice();
        let pooled = node.last.as_ref().map_or(lattice.bottom(), |p| ts.pooled_level(p));
        (0..ts.n_agents())
            .map(|j| {
                if j == self.i {
                    ri
                } else {
                    let (theta, k) = plan[j];
                    ts.project(theta, lattice.join(k, pooled)).expect("plans stay inside the partial game")
                }
            })
            .collect()
    }

    fn committed_truth(&mut self, node: &Node, plan: &Plan, ti: TypeId) -> Result<(Q, Vec<Profile>), VerifyError> {
        let mut n = node.clone();
        let mut path = Vec::new();
        while !n.stopped {
            self.tick()?;
            let p = self.planned(&n, plan, self.truthful_report(&n));
            path.push(p.clone());
            n = self.walker.step(&n, p);
        }
        Ok((self.payoff(&n, ti)?, path))
    }

    fn committed_best(
        &mut self,
        node: &Node,
        plan: &Plan,
        ti: TypeId,
        memo: &mut HashMap<Node, (Q, Vec<Profile>)>,
    ) -> Result<(Q, Vec<Profile>), VerifyError> {
        if node.stopped {
            return Ok((self.payoff(node, ti)?, Vec::new()));
        }
        if let Some(v) = memo.get(node) {
            return Ok(v.clone());
        }
        self.tick()?;
        let mut best: Option<(Q, Vec<Profile>)> = None;
        for r in self.walker.feasible(self.i, node) {
            let p = self.planned(node, plan, r);
            let child = self.walker.step(node, p.clone());
            let (v, mut path) = self.committed_best(&child, plan, ti, memo)?;
            if best.as_ref().is_none_or(|(b, _)| v > *b) {
                path.insert(0, p);
                best = Some((v, path));
            }
        }
        let out = best.expect("some report is always feasible");
        memo.insert(node.clone(), out.clone());
        Ok(out)
    }

    fn check_committed(&mut self, node: &Node, ti: TypeId, path: &[Profile]) -> Result<Found, VerifyError> {
        for plan in self.plans(node) {
            let (ut, st) = self.committed_truth(node, &plan, ti)?;
            let (ud, sd) = self.committed_best(node, &plan, ti, &mut HashMap::new())?;
            if ut < ud {
                return Ok(Some(Box::new(self.witness(path, st, path, sd, ti, ut, ud))));
            }
        }
        Ok(None)
    }

    #[allow(clippy::too_many_arguments)]
    fn witness(&self, ht: &[Profile], st: Vec<Profile>, hd: &[Profile], sd: Vec<Profile>, ti: TypeId, ut: Q, ud: Q) -> Witness {
        let ts = self.walker.ts;
        let one_shot = self.walker.one_shot;
        let mut t = ht.to_vec();
        t.extend(st);
        let mut d = hd.to_vec();
        d.extend(sd);
        Witness {
            kind: WitnessKind::Dominance,
            agent: Some(self.i),
            partial_level: Some(self.walker.draw.level),
            draw: Some(self.walker.draw.clone()),
            history: Vec::new(),
            evaluated_type: Some(ti),
            truthful: Some(transcript_of(ts, t, one_shot)),
            deviation: Some(transcript_of(ts, d, one_shot)),
            profile: None,
            outcomes: Vec::new(),
            values: vec![ut, ud],
            note: format!(
                "agent {} gains {} by deviating",
                ts.agents()[self.i],
                crate::value::format_q(&(ud - ut))
            ),
        }
    }

    /// Visits histories reached with `i` truthful and checks those at full awareness.
    fn explore(&mut self, node: &Node, path: &mut Vec<Profile>) -> Result<Found, VerifyError> {
        if node.stopped || !self.explored.insert(node.clone()) {
            return Ok(None);
        }
        self.tick()?;
        let ti = self.truthful_report(node);
        if self.walker.ts.level_of(ti) == self.walker.draw.level {
            self.checked += 1;
            let found = match self.model {
                OpponentModel::Committed => self.check_committed(node, ti, path)?,
                _ => self.check_pair(node, node, ti, &mut path.clone(), &mut path.clone())?,
            };
            if let Some(mut w) = found {
                w.history = path.clone();
                return Ok(Some(w));
            }
        }
        for p in self.walker.profiles(node, Some((self.i, ti))) {
            let child = self.walker.step(node, p.clone());
            path.push(p);
            let r = self.explore(&child, path)?;
            path.pop();
            if r.is_some() {
                return Ok(r);
            }
        }
        Ok(None)
    }
}

/// Runs the dominance check over every `(agent, partial level, draw)` cell in parallel.
pub fn check(mech: &Mechanism<'_>, opts: &VerifyOptions) -> Result<VerificationResult, VerifyError> {
    let ts = mech.types();
    let one_shot = mech.config().kind.is_static();
    let mut cells: Vec<(usize, PartialDraw)> = Vec::new();
    for i in mech.strategic_agents() {
        for &l in ts.lattice().bottom_up() {
            for d in ts.partial_draws(l) {
                // Information sets at awareness `l` need `i` able to reach `l`.
                cells.push((i, d));
            }
        }
    }
    let results: Vec<Result<(u64, Found), VerifyError>> = cells
        .par_iter()
        .map(|(i, d)| {
            let mut cell = Cell {
                mech,
                walker: Walker { ts, draw: d, one_shot },
                i: *i,
                model: opts.opponents,
                bound: opts.bound,
                nodes: 0,
                min_truth: HashMap::new(),
                max_any: HashMap::new(),
                passed: HashSet::new(),
                explored: HashSet::new(),
                checked: 0,
            };
            let root = cell.walker.root();
            let found = cell.explore(&root, &mut Vec::new())?;
            Ok((cell.checked, found))
        })
        .collect();
    let mut checked = 0;
    let mut wit = Vec::new();
    for r in results {
        let (c, f) = r?;
        checked += c;
        if let Some(w) = f {
            wit.push(*w);
        }
    }
    Ok(VerificationResult::from_parts(Property::Dominance, checked, wit, opts.max_witnesses))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::transfers::{SchemeConfig, SchemeKind};
    use crate::verify::{replay, Verifier};

    fn verifier<'a>(sc: &'a crate::scenario::Scenario, cfg: &'a SchemeConfig, model: OpponentModel) -> Verifier<'a> {
        Verifier::new(sc.mechanism_with(cfg).unwrap(), VerifyOptions { opponents: model, ..VerifyOptions::default() })
    }

    #[test]
    fn clarke_is_dominant_on_example2() {
        let sc = fixtures::example2();
        let cfg = SchemeConfig::clarke();
        for model in OpponentModel::ALL {
            let r = verifier(&sc, &cfg, model).check_conditional_dominance().unwrap();
            assert!(r.holds, "{model:?} {:?}", r.witnesses.first());
            assert!(r.checked > 0);
        }
    }

    #[test]
    fn reactive_opponents_break_dominance() {
        // Agent 2 elaborates after agent 1's stage-1 bid and can punish the truthful bid.
        let sc = fixtures::auction(
            "reactive",
            &[("1", "lo", &[("a", 2)]), ("1", "hi", &[("A2", 2), ("A4", 4)]), ("2", "lo", &[("b", 2)]), ("2", "hi", &[("B1", 1), ("B3", 3)])],
            &[("1", &[("A2", "a"), ("A4", "a")]), ("2", &[("B1", "b"), ("B3", "b")])],
            vec![],
        );
        let cfg = SchemeConfig::clarke();
        assert!(verifier(&sc, &cfg, OpponentModel::Committed).check_conditional_dominance().unwrap().holds);
        for model in [OpponentModel::AwarenessTrace, OpponentModel::FullHistory] {
            let v = verifier(&sc, &cfg, model);
            let r = v.check_conditional_dominance().unwrap();
            assert!(!r.holds, "{model:?}");
            let w = &r.witnesses[0];
            assert_eq!(replay(&v.mech, w).unwrap(), w.values);
            let (t, d) = (w.truthful.as_ref().unwrap(), w.deviation.as_ref().unwrap());
            assert_eq!(t.final_pooled(), d.final_pooled());
            assert_ne!(t.final_profile().unwrap()[1], d.final_profile().unwrap()[1]);
        }
    }

    #[test]
    fn reraising_after_concealment_needs_committed_opponents() {
        // Under the awareness trace an opponent elaborates differently once a deviator hides
        // awareness and raises it a stage later; both plays end at the same pooled level, so
        // the premium cancels and cannot pay for the difference.
        let sc = fixtures::example1();
        let cfg = SchemeConfig::clarke();
        assert!(verifier(&sc, &cfg, OpponentModel::Committed).check_conditional_dominance().unwrap().holds);
        let v = verifier(&sc, &cfg, OpponentModel::AwarenessTrace);
        let r = v.check_conditional_dominance().unwrap();
        assert!(!r.holds);
        for w in &r.witnesses {
            assert_eq!(replay(&v.mech, w).unwrap(), w.values);
            let (t, d) = (w.truthful.as_ref().unwrap(), w.deviation.as_ref().unwrap());
            assert_eq!(t.final_pooled(), d.final_pooled());
            assert!(d.len() > t.len());
        }
    }

    #[test]
    fn ablation_shows_concealment() {
        let sc = fixtures::example2();
        let cfg = SchemeConfig::clarke().without_adjustments();
        let v = verifier(&sc, &cfg, OpponentModel::AwarenessTrace);
        let r = v.check_conditional_dominance().unwrap();
        assert!(!r.holds);
        for w in &r.witnesses {
            assert_eq!(replay(&v.mech, w).unwrap(), w.values);
            assert!(w.values[1] > w.values[0]);
        }
    }

    #[test]
    fn bound_is_reported() {
        let sc = fixtures::example2();
        let cfg = SchemeConfig::clarke();
        let v = Verifier::new(sc.mechanism_with(&cfg).unwrap(), VerifyOptions { bound: 3, ..VerifyOptions::default() });
        assert!(v.check_conditional_dominance().unwrap_err().is_bound_exceeded());
    }

    #[test]
    fn static_vickrey_is_checked_in_one_stage() {
        let sc = fixtures::example2();
        let cfg = SchemeConfig::new(SchemeKind::StaticVickrey);
        let r = verifier(&sc, &cfg, OpponentModel::AwarenessTrace).check_conditional_dominance().unwrap();
        assert!(r.checked > 0);
    }
}
