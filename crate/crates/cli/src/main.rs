//! `smc` — statistical verification of Markov chain properties from the
//! command line.
//!
//! Exit codes: 0 = property accepted (H0), 3 = property rejected (H1),
//! 1 = usage or input error, 2 = runtime failure. All diagnostics go to
//! standard error with an `error:` prefix; identical arguments and files
//! produce byte-identical standard output (pass `--no-timing` to drop the
//! wall-clock field from `--json` reports).

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use smc_core::hypothesis::{estimate_strength, ssp_plan, Accepted, TestMethod, TestParams};
use smc_core::logic::CompositionMode;
use smc_core::rng::SampleKey;
use smc_core::sim::{format_trace, parse_traces, sample_path, DepthBound, DEFAULT_HARD_CAP};
use smc_core::text::{parse_formula, parse_model};
use smc_core::verify::{verify, verify_blackbox, Report, VerifyConfig};
use smc_core::{Error, Result, ValidatedModel};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "smc", version, about = "Statistical model checking for DTMCs and CTMCs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Verify a probabilistic property by sampling the model
    Verify(VerifyArgs),
    /// Print the single sampling plan for a threshold pair
    Plan(PlanArgs),
    /// Estimate empirical error rate and sample cost at a given true p
    Strength(StrengthArgs),
    /// Sample traces and print them in the trace text format
    Simulate(SimulateArgs),
    /// Decide a property from pre-recorded traces only
    Blackbox(BlackboxArgs),
}

#[derive(Args)]
struct VerifyArgs {
    /// Model file (.dtmc/.ctmc text format)
    #[arg(long)]
    model: PathBuf,
    /// Property, e.g. "P>=0.9 [ F<=10 goal ]"
    #[arg(long)]
    prop: String,
    /// Type-I error bound
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Type-II error bound
    #[arg(long, default_value_t = 0.05)]
    beta: f64,
    /// Indifference half-width around each threshold
    #[arg(long, default_value_t = 0.01)]
    delta: f64,
    #[arg(long, value_parser = parse_method, default_value = "sprt")]
    method: TestMethod,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Cap on samples drawn by any single test
    #[arg(long, default_value_t = 10_000_000)]
    max_samples: u64,
    /// Strength of nested tests (defaults to the outer values)
    #[arg(long)]
    inner_alpha: Option<f64>,
    #[arg(long)]
    inner_beta: Option<f64>,
    #[arg(long)]
    inner_delta: Option<f64>,
    /// Compose nested error bounds with max/max instead of min/max
    #[arg(long)]
    conservative_composition: bool,
    /// Re-test nested operators on every visit instead of memoizing
    /// verdicts per (state, operator)
    #[arg(long)]
    no_memo: bool,
    #[arg(long)]
    json: bool,
    /// Omit the wall-clock field from --json output
    #[arg(long)]
    no_timing: bool,
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long)]
    p0: f64,
    #[arg(long)]
    p1: f64,
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    beta: f64,
}

#[derive(Args)]
struct StrengthArgs {
    #[arg(long)]
    p0: f64,
    #[arg(long)]
    p1: f64,
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    beta: f64,
    /// Success probability the Bernoulli samples are drawn with
    #[arg(long)]
    true_p: f64,
    #[arg(long)]
    reps: u64,
    #[arg(long, value_parser = parse_method, default_value = "sprt")]
    method: TestMethod,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    model: PathBuf,
    /// Number of traces to print
    #[arg(long)]
    samples: u64,
    /// Step bound per trace (discrete horizons)
    #[arg(long, conflicts_with = "time", required_unless_present = "time")]
    depth: Option<u64>,
    /// Time bound per trace (continuous horizons)
    #[arg(long)]
    time: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct BlackboxArgs {
    /// Trace file: one trace per line
    #[arg(long)]
    traces: PathBuf,
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    prop: String,
    /// Threshold to test against (overrides the one in the property)
    #[arg(long)]
    theta: f64,
    #[arg(long)]
    json: bool,
    /// Omit the wall-clock field from --json output
    #[arg(long)]
    no_timing: bool,
}

fn parse_method(s: &str) -> std::result::Result<TestMethod, String> {
    match s {
        "sprt" => Ok(TestMethod::Sprt),
        "ssp" => Ok(TestMethod::Ssp),
        other => Err(format!("unknown method '{other}' (expected sprt or ssp)")),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let rendered = e.render().to_string();
            let mut lines = rendered.lines();
            let first = lines.next().unwrap_or("invalid usage");
            eprintln!("error: {}", first.trim_start_matches("error: "));
            for line in lines {
                eprintln!("{line}");
            }
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 1 } else { 2 })
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.cmd {
        Cmd::Verify(args) => cmd_verify(args),
        Cmd::Plan(args) => cmd_plan(args),
        Cmd::Strength(args) => cmd_strength(args),
        Cmd::Simulate(args) => cmd_simulate(args),
        Cmd::Blackbox(args) => cmd_blackbox(args),
    }
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| {
        Error::from(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    })
}

fn load_model(path: &Path) -> Result<ValidatedModel> {
    parse_model(&read_file(path)?)
}

fn cmd_verify(args: VerifyArgs) -> Result<ExitCode> {
    let model = load_model(&args.model)?;
    let formula = parse_formula(&args.prop)?;
    let cfg = VerifyConfig {
        alpha: args.alpha,
        beta: args.beta,
        delta: args.delta,
        method: args.method,
        seed: args.seed,
        max_samples: args.max_samples,
        inner_alpha: args.inner_alpha.unwrap_or(args.alpha),
        inner_beta: args.inner_beta.unwrap_or(args.beta),
        inner_delta: args.inner_delta.unwrap_or(args.delta),
        composition: if args.conservative_composition {
            CompositionMode::Conservative
        } else {
            CompositionMode::MinMax
        },
        memo: !args.no_memo,
        hard_cap: DEFAULT_HARD_CAP,
    };
    let report = verify(&model, &formula, &cfg)?;
    emit_report(&report, args.json, args.no_timing);
    Ok(verdict_code(report.verdict))
}

fn cmd_plan(args: PlanArgs) -> Result<ExitCode> {
    TestParams::from_bounds(args.p0, args.p1, args.alpha, args.beta)?;
    let plan = ssp_plan(args.p0, args.p1, args.alpha, args.beta)?;
    println!("n={} c={}", plan.n, plan.c);
    Ok(ExitCode::SUCCESS)
}

fn cmd_strength(args: StrengthArgs) -> Result<ExitCode> {
    let params = TestParams::from_bounds(args.p0, args.p1, args.alpha, args.beta)?;
    if !(0.0..=1.0).contains(&args.true_p) {
        return Err(Error::InvalidParams {
            message: format!("--true-p must lie in [0, 1], got {}", args.true_p),
        });
    }
    let (error_rate, mean_samples) =
        estimate_strength(&params, args.method, args.true_p, args.reps, args.seed)?;
    println!("error_rate={error_rate:.6} mean_samples={mean_samples:.2}");
    Ok(ExitCode::SUCCESS)
}

fn cmd_simulate(args: SimulateArgs) -> Result<ExitCode> {
    let model = load_model(&args.model)?;
    let bound = match (args.depth, args.time) {
        (Some(k), None) => DepthBound::steps(k),
        (None, Some(t)) => {
            if !(t.is_finite() && t >= 0.0) {
                return Err(Error::InvalidParams {
                    message: format!("--time must be finite and non-negative, got {t}"),
                });
            }
            DepthBound::time(t)
        }
        _ => unreachable!("clap enforces exactly one of --depth/--time"),
    };
    let root = SampleKey::new(args.seed);
    let mut out = String::new();
    for i in 0..args.samples {
        let trace = sample_path(&model, model.init(), &root.child(i), &bound)?;
        out.push_str(&format_trace(&trace));
        out.push('\n');
    }
    print!("{out}");
    Ok(ExitCode::SUCCESS)
}

fn cmd_blackbox(args: BlackboxArgs) -> Result<ExitCode> {
    let model = load_model(&args.model)?;
    let formula = parse_formula(&args.prop)?;
    let traces = parse_traces(&read_file(&args.traces)?, model.kind(), model.n_states())?;
    let report = verify_blackbox(&model, &formula, args.theta, &traces)?;
    emit_report(&report, args.json, args.no_timing);
    Ok(verdict_code(report.verdict))
}

fn verdict_code(v: Accepted) -> ExitCode {
    match v {
        Accepted::H0 => ExitCode::SUCCESS,
        Accepted::H1 => ExitCode::from(3),
    }
}

fn emit_report(report: &Report, json: bool, no_timing: bool) {
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    if json {
        let mut value = serde_json::to_value(report).expect("report serializes");
        let obj = value.as_object_mut().expect("report is an object");
        obj.insert("schema".into(), serde_json::Value::from(1));
        if no_timing {
            obj.remove("elapsed_ms");
        }
        println!("{value}");
        return;
    }
    println!("verdict: {}", report.verdict);
    println!("formula: {}", report.formula);
    println!("method: {}", report.method);
    for level in &report.levels {
        println!(
            "level {}: samples={} p0={} p1={}",
            level.level, level.samples, level.p0_effective, level.p1_effective
        );
    }
    if let Some(bb) = &report.blackbox {
        println!(
            "blackbox: n={} c={} type1={:.6} type2={:.6}",
            bb.n, bb.c, bb.achieved_type1, bb.achieved_type2
        );
    }
}
