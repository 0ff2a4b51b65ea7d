use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use polarlab_core::asymptotics::theorem1_bounds;
use polarlab_core::frames::{isotropy_report, synthesize_untf, ISOTROPY_TOL};
use polarlab_core::planar::{
    conjecture2_scan, equidistributed, prop5_value, riesz_energy, riesz_energy_closed,
    stolarsky_max,
};
use polarlab_core::search::{minimize_polarization, SearchOptions, StructuredStarts};
use polarlab_core::signsum::{conjecture1_harness, max_sign_sum_exact, max_sign_sum_local};
use polarlab_core::verify::{report_json, run_criterion, run_with_determinism, VerifyReport};
use polarlab_core::{certified_max, potential, with_workers, Configuration, Error, Exponent};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

#[derive(Parser, Debug)]
#[command(
    name = "polarlab",
    version,
    about = "Polarization of point configurations on spheres"
)]
struct Cli {
    /// Worker threads for parallel loops; results do not depend on it.
    #[arg(long, global = true, env = "POLARLAB_WORKERS", default_value_t = 1)]
    workers: usize,

    /// Also print a two-column table to standard error.
    #[arg(long, global = true)]
    table: bool,

    /// Write a run manifest (inputs, seed, digests) to this path.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Potential at a direction, or its certified maximum over the sphere.
    Potential(PotentialArgs),
    /// Lower bound n μ and the basis-copies upper bound.
    Bounds {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        p: f64,
    },
    #[command(subcommand)]
    Frame(FrameCommand),
    #[command(subcommand)]
    Signsum(SignsumCommand),
    #[command(subcommand)]
    Planar(PlanarCommand),
    /// Heuristic minimization of the polarization.
    Search(SearchArgs),
    /// Run the acceptance suite.
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
struct PotentialArgs {
    config: PathBuf,
    #[arg(long)]
    p: f64,
    /// Comma-separated direction; the certified maximum is computed without it.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    v: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1e-3)]
    delta: f64,
}

#[derive(Subcommand, Debug)]
enum FrameCommand {
    /// Synthesize a unit norm tight frame.
    Synth {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Isotropy report of a configuration.
    Check {
        config: PathBuf,
        #[arg(long, default_value_t = ISOTROPY_TOL)]
        tol: f64,
    },
}

#[derive(Subcommand, Debug)]
enum SignsumCommand {
    /// Exhaustive maximum of |Σ ε_i u_i|.
    Exact { config: PathBuf },
    /// Multi-start local search with a Bang certificate.
    Local {
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Max signed sums of d + 1 random vectors against √(d+2).
    Conjecture1 {
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Subcommand, Debug)]
enum PlanarCommand {
    /// Distance energy of the n-th roots of unity.
    Energy {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: f64,
    },
    /// Maximum of the distance-sum potential of the n-th roots of unity.
    Stolarsky {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: f64,
    },
    /// Polarization constant of n lines for 0 < p <= 1.
    Prop5 {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: f64,
    },
    /// Search over n lines for each p on a grid, against equal spacing.
    Scan {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        pmin: f64,
        #[arg(long)]
        pmax: f64,
        #[arg(long, default_value_t = 10)]
        steps: usize,
        #[arg(long, default_value_t = 16)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args, Debug)]
struct SearchArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    d: usize,
    #[arg(long)]
    p: f64,
    #[arg(long, default_value_t = 4)]
    restarts: usize,
    #[arg(long, default_value_t = 1e-2)]
    delta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    outer_steps: usize,
    /// Soft-max β; 50/n when absent.
    #[arg(long)]
    smoothing: Option<f64>,
    /// Random starts only.
    #[arg(long)]
    no_structured: bool,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, default_value_t = 20_240_601)]
    seed: u64,
    /// Run only these criteria (1 to 9) on the current pool, skipping the
    /// determinism comparison.
    #[arg(long, value_delimiter = ',')]
    only: Option<Vec<u8>>,
}

/// Failure with the exit code it maps to.
struct Failure {
    code: u8,
    kind: String,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Budget(_) | Error::NoConvergence(_) => 1,
            _ => 2,
        };
        Failure {
            code,
            kind: e.kind().to_string(),
            message: e.to_string(),
        }
    }
}

fn usage(kind: &str, message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        kind: kind.to_string(),
        message: message.into(),
    }
}

/// Command output: the JSON document, two-column table rows and an exit code.
struct Output {
    json: Value,
    table: Vec<(String, String)>,
    code: u8,
}

impl Output {
    fn new(value: impl Serialize) -> Self {
        let json = serde_json::to_value(value).expect("outputs serialize");
        let table = scalar_rows(&json);
        Output {
            json,
            table,
            code: 0,
        }
    }
}

/// Top-level numeric and boolean fields as table rows.
fn scalar_rows(v: &Value) -> Vec<(String, String)> {
    match v {
        Value::Object(m) => m
            .iter()
            .filter(|(_, x)| x.is_number() || x.is_boolean())
            .map(|(k, x)| (k.clone(), x.to_string()))
            .collect(),
        Value::Number(_) => vec![("value".into(), v.to_string())],
        _ => Vec::new(),
    }
}

fn exponent(p: f64) -> Result<Exponent, Failure> {
    Ok(Exponent::new(p)?)
}

/// Reads a configuration file: either the configuration object itself or a
/// report holding one under `configuration`, `best` or `construction`.
fn read_config(
    path: &Path,
    digests: &mut BTreeMap<String, String>,
) -> Result<Configuration, Failure> {
    let bytes = std::fs::read(path).map_err(|e| usage("io", format!("{}: {e}", path.display())))?;
    digests.insert(
        path.display().to_string(),
        hex::encode(Sha256::digest(&bytes)),
    );
    let value: Value = serde_json::from_slice(&bytes)
        .map_err(|e| usage("parse", format!("{}: {e}", path.display())))?;
    let inner = if value.get("vectors").is_some() {
        value
    } else {
        ["configuration", "best", "construction"]
            .iter()
            .find_map(|k| value.get(*k).cloned())
            .ok_or_else(|| {
                usage(
                    "parse",
                    format!("{}: no configuration found", path.display()),
                )
            })?
    };
    serde_json::from_value(inner).map_err(|e| usage("parse", format!("{}: {e}", path.display())))
}

fn run(cli: &Cli, digests: &mut BTreeMap<String, String>) -> Result<Output, Failure> {
    match &cli.command {
        Command::Potential(a) => {
            let c = read_config(&a.config, digests)?;
            let p = exponent(a.p)?;
            match &a.v {
                Some(v) => {
                    let value = potential(&c, v, p)?;
                    Ok(Output::new(json!({ "p": a.p, "v": v, "value": value })))
                }
                None => Ok(Output::new(certified_max(&c, p, a.delta)?)),
            }
        }
        Command::Bounds { n, d, p } => Ok(Output::new(theorem1_bounds(*n, *d, exponent(*p)?)?)),
        Command::Frame(FrameCommand::Synth { n, d, seed }) => {
            let c = synthesize_untf(*n, *d, *seed)?;
            let report = isotropy_report(&c, ISOTROPY_TOL);
            let mut out = Output::new(json!({ "configuration": c, "report": report }));
            out.table = scalar_rows(&serde_json::to_value(&report).expect("serializes"));
            Ok(out)
        }
        Command::Frame(FrameCommand::Check { config, tol }) => {
            let c = read_config(config, digests)?;
            Ok(Output::new(isotropy_report(&c, *tol)))
        }
        Command::Signsum(SignsumCommand::Exact { config }) => Ok(Output::new(max_sign_sum_exact(
            &read_config(config, digests)?,
        )?)),
        Command::Signsum(SignsumCommand::Local { config, seed }) => Ok(Output::new(
            max_sign_sum_local(&read_config(config, digests)?, *seed),
        )),
        Command::Signsum(SignsumCommand::Conjecture1 { d, trials, seed }) => {
            Ok(Output::new(conjecture1_harness(*d, *trials, *seed)?))
        }
        Command::Planar(PlanarCommand::Energy { n, p }) => {
            let e = exponent(*p)?;
            let direct = riesz_energy(&equidistributed(*n)?, e);
            Ok(Output::new(json!({
                "n": n,
                "p": p,
                "direct": direct,
                "closed": riesz_energy_closed(*n, e).ok(),
            })))
        }
        Command::Planar(PlanarCommand::Stolarsky { n, p }) => {
            Ok(Output::new(stolarsky_max(*n, exponent(*p)?)?))
        }
        Command::Planar(PlanarCommand::Prop5 { n, p }) => {
            Ok(Output::new(prop5_value(*n, exponent(*p)?)?))
        }
        Command::Planar(PlanarCommand::Scan {
            n,
            pmin,
            pmax,
            steps,
            restarts,
            seed,
        }) => {
            if *steps == 0 || !(pmin <= pmax) {
                return Err(usage(
                    "invalid_argument",
                    "need steps >= 1 and pmin <= pmax",
                ));
            }
            let grid: Vec<f64> = if *steps == 1 {
                vec![*pmin]
            } else {
                (0..*steps)
                    .map(|k| pmin + (pmax - pmin) * k as f64 / (*steps - 1) as f64)
                    .collect()
            };
            let report = conjecture2_scan(*n, &grid, *restarts, *seed)?;
            let table = report
                .entries
                .iter()
                .filter_map(|e| e.gap.map(|g| (e.p.to_string(), g.to_string())))
                .collect();
            let mut out = Output::new(report);
            out.table = table;
            Ok(out)
        }
        Command::Search(a) => {
            let opts = SearchOptions {
                restarts: a.restarts,
                net_delta: a.delta,
                outer_steps: a.outer_steps,
                smoothing: a.smoothing,
                seed: a.seed,
                structured: if a.no_structured {
                    StructuredStarts::NONE
                } else {
                    StructuredStarts::ALL
                },
                ..SearchOptions::default()
            };
            let r = minimize_polarization(a.n, a.d, exponent(a.p)?, &opts)?;
            let table = r
                .starts
                .iter()
                .map(|s| (s.start.clone(), s.best_upper.to_string()))
                .collect();
            let code = if r.converged { 0 } else { 1 };
            let mut out = Output::new(r);
            out.table = table;
            out.code = code;
            Ok(out)
        }
        Command::Verify(a) => {
            let report = match &a.only {
                Some(ids) => {
                    if let Some(bad) = ids.iter().find(|&&i| !(1..=9).contains(&i)) {
                        return Err(usage(
                            "invalid_argument",
                            format!("no criterion {bad} in 1..=9"),
                        ));
                    }
                    let criteria = ids
                        .iter()
                        .map(|&i| run_criterion(i, a.seed))
                        .collect::<Result<Vec<_>, _>>()?;
                    VerifyReport {
                        seed: a.seed,
                        version: env!("CARGO_PKG_VERSION").to_string(),
                        passed: criteria.iter().all(|c| c.passed),
                        criteria,
                    }
                }
                None => run_with_determinism(a.seed, &[1, 8])?,
            };
            for c in &report.criteria {
                eprintln!(
                    "criterion {:>2} {} {} ({:.1} s)",
                    c.id,
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.elapsed.as_secs_f64()
                );
            }
            let table = report
                .criteria
                .iter()
                .map(|c| (c.id.to_string(), u8::from(c.passed).to_string()))
                .collect();
            let code = if report.passed { 0 } else { 1 };
            let json: Value = serde_json::from_str(&report_json(&report)).expect("report is JSON");
            Ok(Output { json, table, code })
        }
    }
}

fn seed_of(command: &Command) -> Option<u64> {
    match command {
        Command::Frame(FrameCommand::Synth { seed, .. })
        | Command::Signsum(SignsumCommand::Local { seed, .. })
        | Command::Signsum(SignsumCommand::Conjecture1 { seed, .. })
        | Command::Planar(PlanarCommand::Scan { seed, .. }) => Some(*seed),
        Command::Search(a) => Some(a.seed),
        Command::Verify(a) => Some(a.seed),
        _ => None,
    }
}

#[derive(Serialize)]
struct RunManifest {
    command_line: Vec<String>,
    seed: Option<u64>,
    version: String,
    workers: usize,
    wall_time_s: f64,
    input_digests: BTreeMap<String, String>,
    output_digest: String,
    exit_code: u8,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let mut digests = BTreeMap::new();
    let result = match with_workers(cli.workers, || run(&cli, &mut digests)) {
        Ok(r) => r,
        Err(e) => Err(Failure::from(e)),
    };
    let (text, code) = match result {
        Ok(out) => {
            if cli.table {
                for (a, b) in &out.table {
                    eprintln!("{a}\t{b}");
                }
            }
            (
                serde_json::to_string_pretty(&out.json).expect("serializes"),
                out.code,
            )
        }
        Err(f) => {
            let err = json!({ "error": { "kind": f.kind, "message": f.message } });
            (
                serde_json::to_string_pretty(&err).expect("serializes"),
                f.code,
            )
        }
    };
    let text = format!("{text}\n");
    print!("{text}");
    if let Some(path) = &cli.manifest {
        let manifest = RunManifest {
            command_line: std::env::args().collect(),
            seed: seed_of(&cli.command),
            version: env!("CARGO_PKG_VERSION").to_string(),
            workers: cli.workers,
            wall_time_s: start.elapsed().as_secs_f64(),
            input_digests: digests,
            output_digest: hex::encode(Sha256::digest(text.as_bytes())),
            exit_code: code,
        };
        let body = serde_json::to_string_pretty(&manifest).expect("serializes");
        if let Err(e) = std::fs::write(path, body) {
            eprintln!("cannot write manifest {}: {e}", path.display());
            return ExitCode::from(1);
        }
    }
    ExitCode::from(code)
}
