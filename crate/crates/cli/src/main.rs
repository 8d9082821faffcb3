//! `elab`: run elaboration mechanisms on scenario files and verify their properties.
//!
//! Exit status: 0 success, 1 property violation, 2 input error, 3 enumeration bound exceeded.

mod render;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use elab_core::engine::{self, PlayState};
use elab_core::generate::{self, GenParams};
use elab_core::report::{self, PropertyReport, RunReport, Verdict, VerifyReport};
use elab_core::scenario::Scenario;
use elab_core::value::parse_q;
use elab_core::verify::{OpponentModel, Property, Verifier, VerifyOptions};
use elab_core::{fixtures, Mechanism, Profile, SchemeConfig, SchemeKind, Transcript, TruthTelling, Q};

#[derive(Parser)]
#[command(name = "elab", version, about = "Dynamic elaboration mechanisms under unawareness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Play one draw and print the transcript and settlement.
    Run(RunArgs),
    /// Check properties exhaustively.
    Verify(VerifyArgs),
    /// Every draw and every property of one scenario, as JSON.
    Report(ReportArgs),
    /// List the built-in fixtures, or print one as a scenario file.
    Fixtures {
        name: Option<String>,
    },
}

#[derive(Args, Clone)]
struct SchemeArgs {
    /// Override the scenario's scheme: groves, clarke, rspa or static-vickrey.
    #[arg(long)]
    scheme: Option<SchemeKind>,
    /// Drop the awareness adjustments.
    #[arg(long)]
    no_adjustment: bool,
    /// Fallback `y` value for groves entries missing from the scenario.
    #[arg(long, value_parser = parse_rational, allow_hyphen_values = true)]
    y_default: Option<Q>,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file or fixture name.
    scenario: String,
    /// Named draw; defaults to the first one in the scenario.
    #[arg(long)]
    draw: Option<String>,
    #[command(flatten)]
    scheme: SchemeArgs,
    /// `truth`, or a TOML file listing the reported profile of every stage.
    #[arg(long, default_value = "truth")]
    strategy: String,
    /// Also write the JSON report to this file.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Print JSON instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Args, Clone)]
struct CheckArgs {
    #[command(flatten)]
    scheme: SchemeArgs,
    /// Enumeration budget per query.
    #[arg(long, default_value_t = engine::DEFAULT_BOUND)]
    bound: u64,
    /// Opponent strategies in the dominance check: committed, awareness-trace or full-history.
    #[arg(long, default_value = "committed")]
    opponents: OpponentModel,
    /// Witnesses kept per property.
    #[arg(long, default_value_t = 5)]
    witnesses: usize,
}

#[derive(Args)]
struct VerifyArgs {
    /// Scenario file or fixture name; omit with --generated.
    #[arg(required_unless_present = "generated", conflicts_with = "generated")]
    scenario: Option<String>,
    /// Verify this many generated scenarios instead.
    #[arg(long)]
    generated: Option<usize>,
    /// First seed for --generated.
    #[arg(long, default_value_t = 0, requires = "generated")]
    seed: u64,
    /// Property to check; repeatable.
    #[arg(long = "property", required_unless_present = "all")]
    properties: Vec<Property>,
    /// Check every property.
    #[arg(long, conflicts_with = "properties")]
    all: bool,
    /// Property expected to fail; its failure counts as success. Repeatable.
    #[arg(long = "expect-fail")]
    expect_fail: Vec<Property>,
    #[command(flatten)]
    check: CheckArgs,
    /// Also write the JSON report to this file.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Print JSON instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ReportArgs {
    /// Scenario file or fixture name.
    scenario: String,
    #[command(flatten)]
    check: CheckArgs,
    /// Write to this file instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn parse_rational(s: &str) -> Result<Q, String> {
    parse_q(s).map_err(|e| e.to_string())
}

/// Failure classes in exit-status order.
#[derive(Debug)]
enum Failure {
    Violation,
    Input(anyhow::Error),
    Bound,
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Input(e)
    }
}

fn load(arg: &str) -> Result<Scenario> {
    let path = Path::new(arg);
    if path.exists() {
        return Scenario::load(path).with_context(|| format!("loading {arg}"));
    }
    fixtures::by_name(arg).ok_or_else(|| anyhow!("no scenario file or fixture named `{arg}` (fixtures: {})", fixtures::NAMES.join(", ")))
}

fn scheme_config(sc: &Scenario, a: &SchemeArgs) -> SchemeConfig {
    let mut cfg = match a.scheme {
        Some(k) => sc.scheme.with_kind(k),
        None => sc.scheme.clone(),
    };
    if a.no_adjustment {
        cfg = cfg.without_adjustments();
    }
    if let Some(y) = a.y_default {
        cfg.y.default = Some(y);
    }
    cfg
}

fn mechanism<'a>(sc: &'a Scenario, cfg: &'a SchemeConfig) -> Result<Mechanism<'a>> {
    sc.mechanism_with(cfg).with_context(|| format!("scheme {} on {}", cfg.kind, sc.name))
}

/// Writes to standard output; a closed pipe downstream is not an error.
fn out(text: &str) -> Result<()> {
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn write_json<T: serde::Serialize>(value: &T, path: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => out(&text),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Script {
    /// Type names in agent order, one profile per stage.
    stages: Vec<Vec<String>>,
}

fn scripted(sc: &Scenario, d: &elab_core::PartialDraw, path: &str) -> Result<Transcript> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading strategy file {path}"))?;
    let script: Script = toml::from_str(&text).with_context(|| format!("parsing strategy file {path}"))?;
    let ts = &sc.types;
    let mut st = PlayState::new(ts, d);
    for (k, names) in script.stages.iter().enumerate() {
        if st.stopped() {
            bail!("the mechanism stopped after stage {k}; the script has {} stages", script.stages.len());
        }
        if names.len() != ts.n_agents() {
            bail!("stage {}: {} reports for {} agents", k + 1, names.len(), ts.n_agents());
        }
        let p: Profile = names
            .iter()
            .enumerate()
            .map(|(i, n)| ts.type_id(i, n).map_err(|e| anyhow!("stage {}: agent {}: {e}", k + 1, ts.agents()[i])))
            .collect::<Result<_>>()?;
        st.advance(ts, p).with_context(|| format!("stage {}", k + 1))?;
    }
    if !st.stopped() {
        bail!("the script ends before the mechanism stops");
    }
    Ok(st.transcript)
}

fn run(a: &RunArgs) -> Result<(), Failure> {
    let sc = load(&a.scenario)?;
    let cfg = scheme_config(&sc, &a.scheme);
    let m = mechanism(&sc, &cfg)?;
    let named = match &a.draw {
        Some(n) => sc.draws.iter().find(|d| d.name == *n).ok_or_else(|| anyhow!("{} has no draw `{n}`", sc.name))?,
        None => sc.draws.first().ok_or_else(|| anyhow!("{} declares no draws; pass a scenario with a nature section", sc.name))?,
    };
    let ts = &sc.types;
    let d = ts.partial_draw(&named.draw, ts.lattice().top());
    let transcript = if a.strategy == "truth" {
        if cfg.kind.is_static() {
            let truth: Vec<&dyn elab_core::Strategy> = vec![&TruthTelling; ts.n_agents()];
            engine::run_static(ts, &d, &truth).map_err(anyhow::Error::from)?
        } else {
            engine::run_truthful(ts, &d)
        }
    } else if cfg.kind.is_static() {
        return Err(anyhow!("scripted play needs a dynamic scheme").into());
    } else {
        scripted(&sc, &d, &a.strategy)?
    };
    let (rep, _) = report::run_report(&m, &sc.name, &named.name, &d, &transcript).map_err(anyhow::Error::from)?;
    emit_run(&rep, a.json, a.report.as_deref())?;
    Ok(())
}

fn emit_run(rep: &RunReport, json: bool, file: Option<&Path>) -> Result<()> {
    if json {
        write_json(rep, None)?;
    } else {
        out(&render::run(rep))?;
    }
    if let Some(p) = file {
        write_json(rep, Some(p))?;
    }
    Ok(())
}

fn verify_one(sc: &Scenario, props: &[Property], expect_fail: &[Property], c: &CheckArgs) -> Result<VerifyReport> {
    let cfg = scheme_config(sc, &c.scheme);
    let m = mechanism(sc, &cfg)?;
    let opts = VerifyOptions { bound: c.bound, opponents: c.opponents, max_witnesses: c.witnesses };
    let v = Verifier::new(m.clone(), opts);
    let results = props.iter().map(|&p| report::property_report(&m, p, &v.check(p), expect_fail.contains(&p))).collect();
    Ok(VerifyReport {
        scenario: sc.name.clone(),
        scheme: cfg.kind.to_string(),
        opponents: c.opponents.as_str().to_string(),
        bound: c.bound,
        results,
    })
}

fn status(reports: &[VerifyReport]) -> Result<(), Failure> {
    let all: Vec<&PropertyReport> = reports.iter().flat_map(|r| &r.results).collect();
    if all.iter().any(|p| p.verdict == Verdict::BoundExceeded) {
        return Err(Failure::Bound);
    }
    if let Some(p) = all.iter().find(|p| p.verdict == Verdict::Error) {
        return Err(Failure::Input(anyhow!("{}: {}", p.property, p.error.clone().unwrap_or_default())));
    }
    if all.iter().all(|p| p.as_expected()) {
        Ok(())
    } else {
        Err(Failure::Violation)
    }
}

fn verify(a: &VerifyArgs) -> Result<(), Failure> {
    let props: Vec<Property> = if a.all { Property::ALL.to_vec() } else { a.properties.clone() };
    let scenarios = match (&a.scenario, a.generated) {
        (Some(s), _) => vec![load(s)?],
        (None, Some(n)) => generate::scenarios(n, a.seed, &GenParams::default()),
        (None, None) => unreachable!("clap requires one of them"),
    };
    let reports = scenarios.iter().map(|sc| verify_one(sc, &props, &a.expect_fail, &a.check)).collect::<Result<Vec<_>>>()?;
    if a.json {
        write_json(&reports, None)?;
    } else {
        for r in &reports {
            out(&render::verify(r))?;
        }
    }
    if let Some(p) = &a.report {
        write_json(&reports, Some(p))?;
    }
    status(&reports)
}

#[derive(serde::Serialize)]
struct FullReport {
    runs: Vec<RunReport>,
    verification: VerifyReport,
}

fn full_report(a: &ReportArgs) -> Result<(), Failure> {
    let sc = load(&a.scenario)?;
    let cfg = scheme_config(&sc, &a.check.scheme);
    let m = mechanism(&sc, &cfg)?;
    let ts = &sc.types;
    let truth: Vec<&dyn elab_core::Strategy> = vec![&TruthTelling; ts.n_agents()];
    let runs = sc
        .draws
        .iter()
        .map(|named| {
            let d = ts.partial_draw(&named.draw, ts.lattice().top());
            let t = if cfg.kind.is_static() { engine::run_static(ts, &d, &truth)? } else { engine::run_truthful(ts, &d) };
            Ok(report::run_report(&m, &sc.name, &named.name, &d, &t)?.0)
        })
        .collect::<Result<Vec<_>>>()?;
    let verification = verify_one(&sc, &Property::ALL, &[], &a.check)?;
    let outcome = status(std::slice::from_ref(&verification));
    write_json(&FullReport { runs, verification }, a.output.as_deref())?;
    // The report is the product: failing properties are data, not an error.
    match outcome {
        Err(Failure::Violation) => Ok(()),
        other => other,
    }
}

fn fixtures_cmd(name: &Option<String>) -> Result<(), Failure> {
    match name {
        None => {
            for n in fixtures::NAMES {
                let sc = fixtures::by_name(n).expect("listed fixture");
                out(&format!("{n}\t{} agents, {} levels, {} outcomes\n", sc.types.n_agents(), sc.types.lattice().len(), sc.outcomes.len()))?;
            }
        }
        Some(n) => {
            let sc = fixtures::by_name(n).ok_or_else(|| anyhow!("no fixture `{n}` (fixtures: {})", fixtures::NAMES.join(", ")))?;
            out(&sc.to_toml_string())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let r = match &cli.command {
        Command::Run(a) => run(a),
        Command::Verify(a) => verify(a),
        Command::Report(a) => full_report(a),
        Command::Fixtures { name } => fixtures_cmd(name),
    };
    match r {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Violation) => ExitCode::from(1),
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Bound) => {
            eprintln!("error: enumeration bound exceeded; raise --bound or shrink the scenario");
            ExitCode::from(3)
        }
    }
}
