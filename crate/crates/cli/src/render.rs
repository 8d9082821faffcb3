//! Plain-text rendering of reports.

use std::fmt::Write;

use elab_core::report::{PropertyReport, RunReport, TranscriptReport, Verdict, VerifyReport, WitnessReport};

fn profile(p: &[String]) -> String {
    format!("({})", p.join(", "))
}

fn transcript(out: &mut String, indent: &str, t: &TranscriptReport) {
    for (k, s) in t.stages.iter().enumerate() {
        let _ = writeln!(out, "{indent}stage {}: {}  pooled {}", k + 1, profile(&s.reports), s.pooled);
    }
}

pub fn run(r: &RunReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "scenario {}  scheme {}  draw {}", r.scenario, r.scheme, r.draw);
    let _ = writeln!(out, "true types {}  awareness {}", profile(&r.nature.types), profile(&r.nature.awareness));
    transcript(&mut out, "", &r.transcript);
    let n = r.transcript.stages.len();
    let _ = writeln!(out, "{} after stage {n}", if r.transcript.stopped { "stopped" } else { "ended" });
    let _ = writeln!(out, "outcome {}", r.outcome);
    for a in &r.agents {
        let _ = writeln!(
            out,
            "agent {}: transfer {}  adjustment {}  utility {}",
            a.agent, a.transfer.exact, a.adjustment.exact, a.utility.exact
        );
    }
    let _ = writeln!(out, "premium recipient {}", r.premium_recipient.as_deref().unwrap_or("none"));
    let _ = writeln!(out, "operator balance {}", r.operator_balance.exact);
    out
}

fn witness(out: &mut String, w: &WitnessReport) {
    let mut head = format!("    witness {}", w.kind);
    if let Some(a) = &w.agent {
        let _ = write!(head, " agent {a}");
    }
    if let Some(l) = &w.partial_level {
        let _ = write!(head, " in the {l}-partial game");
    }
    if !w.values.is_empty() {
        let vals: Vec<&str> = w.values.iter().map(|v| v.exact.as_str()).collect();
        let _ = write!(head, " values [{}]", vals.join(", "));
    }
    let _ = writeln!(out, "{head}: {}", w.note);
    if let Some(d) = &w.draw {
        let _ = writeln!(out, "      draw {} awareness {}", profile(&d.types), profile(&d.awareness));
    }
    if let Some(t) = &w.evaluated_type {
        let _ = writeln!(out, "      evaluated at {t}");
    }
    for (k, h) in w.history.iter().enumerate() {
        let _ = writeln!(out, "      history {}: {}", k + 1, profile(h));
    }
    if let Some(p) = &w.profile {
        let _ = writeln!(out, "      profile {}", profile(p));
    }
    if let Some(t) = &w.truthful {
        let _ = writeln!(out, "      truthful play:");
        transcript(out, "        ", t);
    }
    if let Some(t) = &w.deviation {
        let _ = writeln!(out, "      deviation:");
        transcript(out, "        ", t);
    }
    if !w.outcomes.is_empty() {
        let _ = writeln!(out, "      outcomes {}", w.outcomes.join(", "));
    }
}

fn property(out: &mut String, p: &PropertyReport) {
    let verdict = match p.verdict {
        Verdict::Holds => "holds",
        Verdict::Fails => "FAILS",
        Verdict::BoundExceeded => "BOUND EXCEEDED",
        Verdict::Error => "ERROR",
    };
    let mark = if p.expected_fail { "  (expected to fail)" } else { "" };
    let _ = writeln!(out, "  {:<24} {verdict} after {} checks{mark}", p.property, p.checked);
    if let Some(e) = &p.error {
        let _ = writeln!(out, "    {e}");
    }
    for w in &p.witnesses {
        witness(out, w);
    }
}

pub fn verify(r: &VerifyReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "scenario {}  scheme {}  opponents {}  bound {}", r.scenario, r.scheme, r.opponents, r.bound);
    for p in &r.results {
        property(&mut out, p);
    }
    out
}
