//! `qmeter`: validate Kraus sets, characterize measurements, run the
//! randomized relation suite and the bundled scenarios.
//!
//! Exit codes: 0 success, 1 a check failed, 2 bad input.

mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;

use qmeter_core::backaction::averaged_disturbance;
use qmeter_core::characterize::{characterize, CharacterizationReport, RowStatus};
use qmeter_core::io::{
    cell, disturbance_table, observable_preset, parse_kraus_set, parse_observables, Table,
};
use qmeter_core::measurement::{
    validate_completeness, CompletenessReport, KrausSet, Outcome, COMPLETENESS_TOL, UNCERTAINTY_SLACK,
};
use qmeter_core::scenarios::{
    coherent_projector, parse_scenario_config, photon_detector_preset, run_scenario, ScenarioConfig,
};
use qmeter_core::verify::{run_suite, SuiteConfig, SuiteReport, IDENTITY_TOL};
use qmeter_core::{BosonicSpace, HermitianObservable};

use manifest::RunManifest;

#[derive(Parser)]
#[command(name = "qmeter", version, about = "Resolution and disturbance of generalized quantum measurements")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Completeness tolerance (max-abs deviation of Σ M†M from 1).
    #[arg(long, global = true, default_value_t = COMPLETENESS_TOL)]
    tol: f64,
    /// Seed for randomized commands.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write `<command>.json` and CSV tables into this directory instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Check that a Kraus set is complete.
    Validate { kraus: PathBuf },
    /// Estimates, resolutions, disturbances and uncertainty relations per outcome.
    Characterize(CharacterizeArgs),
    /// Randomized check of every relation and identity.
    Verify(VerifyArgs),
    /// Run a scenario configuration file.
    Scenario { config: PathBuf },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Preset {
    Photon,
    ClassicalTeleport,
}

#[derive(Args)]
struct CharacterizeArgs {
    /// Kraus set file; omit when using `--preset`.
    kraus: Option<PathBuf>,
    #[arg(long, conflicts_with = "kraus")]
    preset: Option<Preset>,
    /// Fock-space truncation for presets.
    #[arg(long)]
    dim: Option<usize>,
    /// Coherent amplitude for `classical-teleport`, e.g. `0.5+0.3i`.
    #[arg(long, default_value = "0")]
    alpha: String,
    /// Observables file (`{"observables": [{"name": .., "observable": ..}]}`).
    #[arg(long)]
    observables: Option<PathBuf>,
    /// Preset observable name (sz, sx, sy, n, x, y); repeatable.
    #[arg(long = "observable")]
    observable: Vec<String>,
    /// Only this outcome label.
    #[arg(long)]
    outcome: Option<String>,
    /// Ordered observable pair `A,B`; repeatable.
    #[arg(long = "pair")]
    pairs: Vec<String>,
    /// A relation fails when its slack is below `−slack_tol`.
    #[arg(long, default_value_t = UNCERTAINTY_SLACK)]
    slack_tol: f64,
}

#[derive(Args)]
struct VerifyArgs {
    /// Inclusive dimension range `lo..hi`, or a single dimension.
    #[arg(long, default_value = "2..6")]
    dims: String,
    /// Random samples per dimension.
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = UNCERTAINTY_SLACK)]
    slack_tol: f64,
    #[arg(long, default_value_t = IDENTITY_TOL)]
    identity_tol: f64,
    #[arg(long, default_value_t = 1.0, hide = true)]
    bound_scale: f64,
}

/// A finished command: its report, CSV tables and whether every check passed.
struct Run {
    name: &'static str,
    manifest: RunManifest,
    report: serde_json::Value,
    tables: Vec<(&'static str, Table)>,
    pass: bool,
}

#[derive(Serialize)]
struct Envelope<'a> {
    manifest: &'a RunManifest,
    report: &'a serde_json::Value,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    let run = match &cli.command {
        Command::Validate { kraus } => validate(&cli.common, kraus),
        Command::Characterize(args) => characterize_cmd(&cli.common, args),
        Command::Verify(args) => verify(&cli.common, args),
        Command::Scenario { config } => scenario(&cli.common, config),
    };
    let run = match run {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    if let Err(e) = emit(&cli.common, &run) {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    if run.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("QMETER_THREADS") {
        let n: usize = v.parse().with_context(|| format!("QMETER_THREADS={v:?} is not a thread count"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn emit(common: &Common, run: &Run) -> Result<()> {
    let json = serde_json::to_string_pretty(&Envelope { manifest: &run.manifest, report: &run.report })?;
    match &common.out {
        Some(dir) => {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            std::fs::write(dir.join(format!("{}.json", run.name)), json + "\n")?;
            for (suffix, table) in &run.tables {
                let file = if suffix.is_empty() {
                    format!("{}.csv", run.name)
                } else {
                    format!("{}_{suffix}.csv", run.name)
                };
                std::fs::write(dir.join(file), csv_text(table)?)?;
            }
            eprintln!("{}: {}", run.name, if run.pass { "pass" } else { "FAIL" });
        }
        None => match common.format {
            Format::Json => println!("{json}"),
            Format::Csv => {
                let text =
                    run.tables.iter().map(|(_, t)| csv_text(t)).collect::<Result<Vec<_>>>()?.join("\n");
                print!("{text}");
            }
        },
    }
    Ok(())
}

fn csv_text(table: &Table) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&table.header)?;
    for row in &table.rows {
        w.write_record(row)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

#[derive(Serialize)]
#[serde(rename_all = "lowercase")]
enum CompletenessStatus {
    Complete,
    /// Declared partial; the deviation is informational.
    Partial,
    Incomplete,
}

#[derive(Serialize)]
struct ValidateReport {
    dim: usize,
    outcomes: usize,
    declared_complete: bool,
    completeness: CompletenessReport,
    status: CompletenessStatus,
}

fn validate(common: &Common, path: &Path) -> Result<Run> {
    let mut manifest = RunManifest::new("validate").tolerance("completeness", common.tol);
    let set = parse_kraus_set(&manifest.read_input(path)?)?;
    let completeness = validate_completeness(&set, common.tol);
    let status = match (completeness.pass, set.is_complete()) {
        (true, _) => CompletenessStatus::Complete,
        (false, false) => CompletenessStatus::Partial,
        (false, true) => CompletenessStatus::Incomplete,
    };
    let pass = !matches!(status, CompletenessStatus::Incomplete);
    let report = ValidateReport {
        dim: set.dim(),
        outcomes: set.len(),
        declared_complete: set.is_complete(),
        completeness,
        status,
    };
    let mut t = Table::new(&["dim", "outcomes", "declared_complete", "max_deviation", "tolerance", "status"]);
    t.push(vec![
        report.dim.to_string(),
        report.outcomes.to_string(),
        report.declared_complete.to_string(),
        report.completeness.max_deviation.to_string(),
        report.completeness.tolerance.to_string(),
        serde_json::to_value(&report.status)?.as_str().unwrap_or_default().to_string(),
    ]);
    Ok(Run {
        name: "validate",
        manifest,
        report: serde_json::to_value(&report)?,
        tables: vec![("", t)],
        pass,
    })
}

fn parse_alpha(s: &str) -> Result<Complex64> {
    s.replace(' ', "").parse::<Complex64>().map_err(|_| anyhow!("cannot parse complex amplitude {s:?}"))
}

fn characterize_cmd(common: &Common, args: &CharacterizeArgs) -> Result<Run> {
    let mut manifest = RunManifest::new("characterize")
        .tolerance("completeness", common.tol)
        .tolerance("slack", args.slack_tol);
    let (set, default_obs, default_pairs): (KrausSet, &[&str], &[&str]) = match (args.preset, &args.kraus) {
        (Some(Preset::Photon), _) => {
            let space = BosonicSpace::new(args.dim.unwrap_or(2))?;
            (photon_detector_preset(space), &["n", "x"], &["n,x", "x,n"])
        }
        (Some(Preset::ClassicalTeleport), _) => {
            let alpha = parse_alpha(&args.alpha)?;
            let space = BosonicSpace::new(args.dim.unwrap_or(60))?;
            let (m, _) = coherent_projector(alpha, space)?;
            let set = KrausSet::new(vec![Outcome { label: format!("alpha={alpha}"), operator: m }], false)?;
            (set, &["x", "y"], &["x,y", "y,x"])
        }
        (None, Some(path)) => (parse_kraus_set(&manifest.read_input(path)?)?, &[], &[]),
        (None, None) => bail!("characterize needs a Kraus set file or --preset"),
    };
    let dim = set.dim();

    let mut observables: Vec<HermitianObservable> = match &args.observables {
        Some(p) => parse_observables(&manifest.read_input(p)?, dim)?,
        None => Vec::new(),
    };
    let explicit = !observables.is_empty() || !args.observable.is_empty();
    let wanted: Vec<String> =
        if explicit { args.observable.clone() } else { default_obs.iter().map(|s| s.to_string()).collect() };
    let pair_specs: Vec<String> = if args.pairs.is_empty() && !explicit {
        default_pairs.iter().map(|s| s.to_string()).collect()
    } else {
        args.pairs.clone()
    };
    let pair_names = pair_specs
        .iter()
        .map(|p| match p.split_once(',') {
            Some((a, b)) => Ok((a.trim().to_string(), b.trim().to_string())),
            None => Err(anyhow!("--pair expects A,B, got {p:?}")),
        })
        .collect::<Result<Vec<_>>>()?;
    let referenced =
        wanted.iter().cloned().chain(pair_names.iter().flat_map(|(a, b)| [a.clone(), b.clone()]));
    for name in referenced {
        if !observables.iter().any(|o| o.name() == Some(name.as_str())) {
            observables.push(observable_preset(&name, dim)?);
        }
    }
    if observables.is_empty() {
        bail!("no observables: pass --observables, --observable or --pair");
    }
    let index = |name: &str| observables.iter().position(|o| o.name() == Some(name)).expect("added above");
    let pairs: Vec<(usize, usize)> = pair_names.iter().map(|(a, b)| (index(a), index(b))).collect();

    let mut report = characterize(&set, &observables, &pairs, args.outcome.as_deref())?;
    report.completeness = validate_completeness(&set, common.tol);
    for p in &mut report.pairs {
        if let (Some(r), Some(d)) = (p.resolution_slack, p.disturbance_slack) {
            p.satisfied = Some(r >= -args.slack_tol && d >= -args.slack_tol);
        }
    }
    let pass = report.pairs.iter().all(|p| p.satisfied != Some(false));

    let mut records = Vec::new();
    for o in set.outcomes() {
        if args.outcome.as_deref().is_some_and(|l| l != o.label) {
            continue;
        }
        for obs in &observables {
            if let Ok(d) = averaged_disturbance(&o.operator, obs) {
                records.push((o.label.clone(), d));
            }
        }
    }
    let tables = vec![
        ("", rows_table(&report)),
        ("pairs", pairs_table(&report)),
        ("disturbance", disturbance_table(&records)),
    ];
    Ok(Run { name: "characterize", manifest, report: serde_json::to_value(&report)?, tables, pass })
}

fn status(s: RowStatus) -> String {
    match s {
        RowStatus::Ok => "ok".into(),
        RowStatus::Unreachable => "unreachable".into(),
    }
}

fn rows_table(r: &CharacterizationReport) -> Table {
    let mut t = Table::new(&["outcome", "observable", "status", "estimate", "resolution", "disturbance"]);
    for row in &r.rows {
        t.push(vec![
            row.outcome.clone(),
            row.observable.clone(),
            status(row.status),
            cell(row.estimate),
            cell(row.resolution),
            cell(row.disturbance),
        ]);
    }
    t
}

fn pairs_table(r: &CharacterizationReport) -> Table {
    let mut t = Table::new(&[
        "outcome",
        "a",
        "b",
        "status",
        "bound",
        "resolution_product",
        "resolution_slack",
        "disturbance_product",
        "disturbance_slack",
        "satisfied",
    ]);
    for p in &r.pairs {
        t.push(vec![
            p.outcome.clone(),
            p.a.clone(),
            p.b.clone(),
            status(p.status),
            cell(p.bound),
            cell(p.resolution_product),
            cell(p.resolution_slack),
            cell(p.disturbance_product),
            cell(p.disturbance_slack),
            cell(p.satisfied),
        ]);
    }
    t
}

fn parse_dims(s: &str) -> Result<Vec<usize>> {
    let dims: Vec<usize> = match s.split_once("..") {
        Some((lo, hi)) => {
            let lo: usize = lo.trim().parse().with_context(|| format!("bad --dims {s:?}"))?;
            let hi: usize =
                hi.trim_start_matches('=').trim().parse().with_context(|| format!("bad --dims {s:?}"))?;
            (lo..=hi).collect()
        }
        None => vec![s.trim().parse().with_context(|| format!("bad --dims {s:?}"))?],
    };
    if dims.is_empty() || dims[0] < 2 {
        bail!("--dims must be a non-empty range of dimensions ≥ 2, got {s:?}");
    }
    Ok(dims)
}

fn verify(common: &Common, args: &VerifyArgs) -> Result<Run> {
    let config = SuiteConfig {
        dims: parse_dims(&args.dims)?,
        samples: args.samples,
        seed: common.seed.unwrap_or(SuiteConfig::default().seed),
        bound_scale: args.bound_scale,
        slack_tolerance: args.slack_tol,
        identity_tolerance: args.identity_tol,
    };
    let manifest = RunManifest::new("verify")
        .tolerance("slack", config.slack_tolerance)
        .tolerance("identity", config.identity_tolerance)
        .seed(config.seed);
    let report = run_suite(&config)?;
    for r in report.relations.iter().filter(|r| r.violations > 0) {
        if let Some(case) = &r.first_violation {
            eprintln!(
                "violation of {:?} (min slack {:e}): {}",
                r.relation,
                r.min_slack,
                serde_json::to_string(case)?
            );
        }
    }
    let tables = vec![("", suite_table(&report))];
    Ok(Run { name: "verify", manifest, pass: report.pass, report: serde_json::to_value(&report)?, tables })
}

fn suite_table(r: &SuiteReport) -> Table {
    let mut t = Table::new(&["kind", "name", "checks", "worst", "violations", "pass"]);
    for s in &r.relations {
        t.push(vec![
            "relation".into(),
            format!("{:?}", s.relation),
            s.checks.to_string(),
            s.min_slack.to_string(),
            s.violations.to_string(),
            (s.violations == 0).to_string(),
        ]);
    }
    for s in &r.identities {
        t.push(vec![
            "identity".into(),
            format!("{:?}", s.identity),
            s.checks.to_string(),
            s.max_error.to_string(),
            String::new(),
            s.pass.to_string(),
        ]);
    }
    t
}

/// `--seed` overrides the seed of an eavesdrop configuration.
fn scenario(common: &Common, path: &Path) -> Result<Run> {
    let mut manifest = RunManifest::new("scenario");
    let mut config = parse_scenario_config(&manifest.read_input(path)?)?;
    if let ScenarioConfig::Eavesdrop { seed, .. } = &mut config {
        *seed = common.seed.unwrap_or(*seed);
        manifest = manifest.seed(*seed);
    }
    let report = run_scenario(&config)?;
    let tables = vec![("", report.table())];
    Ok(Run { name: "scenario", manifest, report: serde_json::to_value(&report)?, tables, pass: true })
}
