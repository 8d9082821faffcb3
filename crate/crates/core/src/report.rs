//! Serializable reports of runs and verification results.
//!
//! Everything refers to agents, types, levels and outcomes by name. Amounts carry the exact
//! rational and a decimal rendering; only the exact field is authoritative.

use serde::Serialize;

use crate::engine::Transcript;
use crate::transfers::{Mechanism, TransferError, TransferReport};
use crate::types::{PartialDraw, TypeId};
use crate::value::{decimal_q, format_q, Q};
use crate::verify::{Property, VerificationResult, VerifyError, Witness};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Amount {
    pub exact: String,
    pub decimal: String,
}

impl From<Q> for Amount {
    fn from(q: Q) -> Self {
        Amount { exact: format_q(&q), decimal: decimal_q(&q) }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Stage {
    pub reports: Vec<String>,
    pub pooled: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TranscriptReport {
    pub stages: Vec<Stage>,
    pub stopped: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DrawReport {
    pub level: String,
    pub types: Vec<String>,
    pub awareness: Vec<String>,
}

/// Per-agent line of a settlement.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AgentLine {
    pub agent: String,
    pub true_type: String,
    pub transfer: Amount,
    pub adjustment: Amount,
    pub utility: Amount,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RunReport {
    pub scenario: String,
    pub scheme: String,
    pub draw: String,
    pub nature: DrawReport,
    pub transcript: TranscriptReport,
    pub outcome: String,
    pub agents: Vec<AgentLine>,
    pub premium_recipient: Option<String>,
    /// `−Σ f_i`; positive is a surplus.
    pub operator_balance: Amount,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WitnessReport {
    pub kind: String,
    pub agent: Option<String>,
    pub partial_level: Option<String>,
    pub draw: Option<DrawReport>,
    pub history: Vec<Vec<String>>,
    pub evaluated_type: Option<String>,
    pub truthful: Option<TranscriptReport>,
    pub deviation: Option<TranscriptReport>,
    pub profile: Option<Vec<String>>,
    pub outcomes: Vec<String>,
    pub values: Vec<Amount>,
    pub note: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Holds,
    Fails,
    BoundExceeded,
    Error,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PropertyReport {
    pub property: String,
    pub verdict: Verdict,
    /// The caller marked this property as expected to fail.
    pub expected_fail: bool,
    pub checked: u64,
    pub witnesses: Vec<WitnessReport>,
    pub error: Option<String>,
}

impl PropertyReport {
    /// Whether the verdict is the one the caller asked for.
    pub fn as_expected(&self) -> bool {
        match self.verdict {
            Verdict::Holds => !self.expected_fail,
            Verdict::Fails => self.expected_fail,
            Verdict::BoundExceeded | Verdict::Error => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VerifyReport {
    pub scenario: String,
    pub scheme: String,
    pub opponents: String,
    pub bound: u64,
    pub results: Vec<PropertyReport>,
}

/// Names things through the mechanism's structures.
pub struct Namer<'m, 'a> {
    mech: &'m Mechanism<'a>,
}

impl<'m, 'a> Namer<'m, 'a> {
    pub fn new(mech: &'m Mechanism<'a>) -> Self {
        Namer { mech }
    }

    pub fn agent(&self, i: usize) -> String {
        self.mech.types().agents()[i].clone()
    }

    pub fn ty(&self, t: TypeId) -> String {
        self.mech.types().name(t).to_string()
    }

    pub fn profile(&self, p: &[TypeId]) -> Vec<String> {
        p.iter().map(|&t| self.ty(t)).collect()
    }

    pub fn level(&self, l: crate::lattice::Level) -> String {
        self.mech.types().lattice().name(l).to_string()
    }

    pub fn transcript(&self, t: &Transcript) -> TranscriptReport {
        let stages = t.stages.iter().zip(&t.pooled).map(|(p, &l)| Stage { reports: self.profile(p), pooled: self.level(l) }).collect();
        TranscriptReport { stages, stopped: t.stopped }
    }

    pub fn draw(&self, d: &PartialDraw) -> DrawReport {
        DrawReport {
            level: self.level(d.level),
            types: self.profile(&d.types),
            awareness: d.awareness.iter().map(|&l| self.level(l)).collect(),
        }
    }

    pub fn witness(&self, w: &Witness) -> WitnessReport {
        let om = self.mech.outcomes();
        WitnessReport {
            kind: format!("{:?}", w.kind).to_lowercase(),
            agent: w.agent.map(|i| self.agent(i)),
            partial_level: w.partial_level.map(|l| self.level(l)),
            draw: w.draw.as_ref().map(|d| self.draw(d)),
            history: w.history.iter().map(|p| self.profile(p)).collect(),
            evaluated_type: w.evaluated_type.map(|t| self.ty(t)),
            truthful: w.truthful.as_ref().map(|t| self.transcript(t)),
            deviation: w.deviation.as_ref().map(|t| self.transcript(t)),
            profile: w.profile.as_ref().map(|p| self.profile(p)),
            outcomes: w.outcomes.iter().map(|&o| om.name(o).to_string()).collect(),
            values: w.values.iter().map(|&q| q.into()).collect(),
            note: w.note.clone(),
        }
    }
}

/// Settles `transcript` and reports it; utilities are taken at the draw's true types.
pub fn run_report(
    mech: &Mechanism<'_>,
    scenario: &str,
    draw_name: &str,
    draw: &PartialDraw,
    transcript: &Transcript,
) -> Result<(RunReport, TransferReport), TransferError> {
    let n = Namer::new(mech);
    let r = mech.settle(transcript)?;
    let agents = (0..mech.types().n_agents())
        .map(|i| {
            Ok(AgentLine {
                agent: n.agent(i),
                true_type: n.ty(draw.types[i]),
                transfer: r.transfers[i].into(),
                adjustment: r.adjustments[i].into(),
                utility: mech.utility(&r, i, draw.types[i])?.into(),
            })
        })
        .collect::<Result<Vec<_>, TransferError>>()?;
    let report = RunReport {
        scenario: scenario.to_string(),
        scheme: mech.config().kind.to_string(),
        draw: draw_name.to_string(),
        nature: n.draw(draw),
        transcript: n.transcript(transcript),
        outcome: mech.outcomes().name(r.outcome).to_string(),
        agents,
        premium_recipient: r.premium_recipient.map(|i| n.agent(i)),
        operator_balance: r.operator_balance.into(),
    };
    Ok((report, r))
}

pub fn property_report(
    mech: &Mechanism<'_>,
    property: Property,
    result: &Result<VerificationResult, VerifyError>,
    expected_fail: bool,
) -> PropertyReport {
    let n = Namer::new(mech);
    let base = PropertyReport {
        property: property.to_string(),
        verdict: Verdict::Error,
        expected_fail,
        checked: 0,
        witnesses: Vec::new(),
        error: None,
    };
    match result {
        Ok(r) => PropertyReport {
            verdict: if r.holds { Verdict::Holds } else { Verdict::Fails },
            checked: r.checked,
            witnesses: r.witnesses.iter().map(|w| n.witness(w)).collect(),
            ..base
        },
        Err(e) => PropertyReport {
            verdict: if e.is_bound_exceeded() { Verdict::BoundExceeded } else { Verdict::Error },
            error: Some(e.to_string()),
            ..base
        },
    }
}
