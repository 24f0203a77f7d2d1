//! `matroidphase` command line.
//!
//! stdout carries only JSON or CSV; logs and errors go to stderr. Exit codes: 0 success,
//! 1 negative result, 2 usage error, 3 runtime error.

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use matroidphase::exp::{Experiment, SweepConfig};
use matroidphase::gf::Field;
use matroidphase::minors::{
    minor_bruteforce, minor_randomized, pipeline_run, MinorError, PipelineParams, RandomizedOutcome,
    TargetSpec,
};
use matroidphase::peel::{hypergraph_of, two_core};
use matroidphase::process::{dist_make, sample_matrix, ColumnDistribution, DistSpec};
use matroidphase::spmat::{parse_matrix, write_matrix, SparseMatrix};
use matroidphase::tanner::{red_components, tanner_of};
use matroidphase::thresholds::{self, ThresholdError};

#[derive(Parser)]
#[command(name = "matroidphase", version, about = "Random matroid phase-transition toolkit")]
#[command(propagate_version = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Threshold constants for support size k, and core predictions at density d.
    Thresholds {
        /// Support size of each column.
        #[arg(long)]
        k: usize,
        /// Density d = k m / n for the core and rank predictions.
        #[arg(long)]
        d: Option<f64>,
        /// Print JSON instead of tab-separated key/value lines.
        #[arg(long)]
        json: bool,
    },
    /// Sample one matrix of the column process and report rank and 2-core sizes.
    Simulate(SimulateArgs),
    /// Run a density sweep described by a JSON config and write CSV.
    Sweep {
        /// Sweep config file.
        #[arg(long)]
        config: PathBuf,
        /// CSV destination; overrides the config's `output`. `-` is stdout.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Also write one JSON record per line here.
        #[arg(long)]
        jsonl: Option<PathBuf>,
        /// Worker threads; defaults to MATROIDPHASE_THREADS or all cores.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Peel a matrix file to its 2-core.
    Peel {
        /// Matrix in the matroidphase-mat text format.
        #[arg(long)]
        input: PathBuf,
        /// Write the core here in the same format.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Look for a fixed minor in a matrix file.
    FindMinor {
        /// Matrix in the matroidphase-mat text format.
        #[arg(long)]
        input: PathBuf,
        /// pg:t:q, u23 or file:PATH.
        #[arg(long)]
        target: String,
        #[arg(long, value_enum, default_value_t = Mode::Random)]
        mode: Mode,
        /// Attempts for the randomized finder.
        #[arg(long, default_value_t = 1000)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the instrumented supercritical construction on a fresh sample.
    Pipeline(PipelineArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Brute,
    Random,
}

#[derive(Args)]
struct ProcessArgs {
    /// Support size of each column.
    #[arg(long, default_value_t = 3)]
    k: usize,
    /// Field order, a prime power.
    #[arg(long, default_value_t = 2)]
    q: u32,
    /// Number of rows.
    #[arg(long)]
    n: usize,
    /// Column law: uniform, all-ones, or a JSON distribution spec.
    #[arg(long, default_value = "uniform")]
    dist: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    process: ProcessArgs,
    /// Number of columns.
    #[arg(long, conflicts_with = "ratio", required_unless_present = "ratio")]
    m: Option<usize>,
    /// Columns as a multiple of n.
    #[arg(long)]
    ratio: Option<f64>,
    /// Write the sampled matrix to this file.
    #[arg(long)]
    emit_matrix: Option<PathBuf>,
    /// Add Tanner-graph statistics of the core and their predicted values.
    #[arg(long)]
    diagnostics: bool,
    /// Also search for this minor (pg:t:q, u23 or file:PATH) with the randomized finder.
    #[arg(long)]
    target: Option<String>,
    #[arg(long, default_value_t = 1000)]
    budget: usize,
}

#[derive(Args)]
struct PipelineArgs {
    #[command(flatten)]
    process: ProcessArgs,
    /// Density of the first matrix, d = k m / n.
    #[arg(long)]
    d: f64,
    /// First sprinkling round as a fraction of n; default n^(-1/8).
    #[arg(long)]
    eta: Option<f64>,
    /// Second sprinkling round as a fraction of n; default n^(-1/4).
    #[arg(long)]
    eps1: Option<f64>,
    /// Dimension of the dense-basis search.
    #[arg(long, default_value_t = 8)]
    r: usize,
    /// Density threshold for the dense basis and the row-combination check.
    #[arg(long, default_value_t = 0.01)]
    delta: f64,
    /// Largest row subset in the row-combination check.
    #[arg(long, default_value_t = 3)]
    max_j: usize,
}

/// An error caused by the invocation rather than the environment.
#[derive(Debug)]
struct Usage(String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(Usage(msg.into()).into())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if e.is::<Usage>() { 2 } else { 3 })
        }
    }
}

fn run(cmd: Command) -> Result<u8> {
    match cmd {
        Command::Thresholds { k, d, json } => cmd_thresholds(k, d, json),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Sweep { config, output, jsonl, threads } => {
            cmd_sweep(&config, output, jsonl, threads)
        }
        Command::Peel { input, output } => cmd_peel(&input, output.as_deref()),
        Command::FindMinor { input, target, mode, budget, seed } => {
            cmd_find_minor(&input, &target, mode, budget, seed)
        }
        Command::Pipeline(a) => cmd_pipeline(a),
    }
}

fn print_json(v: &impl serde::Serialize) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer(&mut out, v)?;
    writeln!(out)?;
    Ok(())
}

fn threshold_error(e: ThresholdError) -> anyhow::Error {
    match e {
        ThresholdError::KTooSmall { .. } | ThresholdError::BadDensity(_) => Usage(e.to_string()).into(),
        other => other.into(),
    }
}

fn cmd_thresholds(k: usize, d: Option<f64>, json: bool) -> Result<u8> {
    let rep = thresholds::report(k, d).map_err(threshold_error)?;
    if json {
        print_json(&rep)?;
        return Ok(0);
    }
    let Value::Object(map) = serde_json::to_value(&rep)? else {
        unreachable!("report serializes to an object")
    };
    let mut out = io::stdout().lock();
    for (key, v) in map {
        match v {
            Value::Null | Value::Object(_) => {}
            Value::Array(xs) => {
                let parts: Vec<String> = xs.iter().map(Value::to_string).collect();
                writeln!(out, "{key}\t{}", parts.join(","))?;
            }
            other => writeln!(out, "{key}\t{other}")?,
        }
    }
    Ok(0)
}

fn field_of(q: u32) -> Result<Field> {
    Field::with_order(q).or_else(|e| usage(format!("--q {q}: {e}")))
}

fn distribution(p: &ProcessArgs) -> Result<ColumnDistribution> {
    let field = field_of(p.q)?;
    let spec = match p.dist.as_str() {
        "uniform" => DistSpec::Uniform,
        "all-ones" => DistSpec::AllOnes,
        json => match serde_json::from_str(json) {
            Ok(s) => s,
            Err(e) => return usage(format!("--dist: {e}")),
        },
    };
    if p.n < p.k {
        return usage(format!("--n {} is smaller than --k {}", p.n, p.k));
    }
    dist_make(&field, p.k, &spec).or_else(|e| usage(format!("--dist: {e}")))
}

fn read_matrix(path: &Path) -> Result<SparseMatrix> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_matrix(&text).with_context(|| format!("parsing {}", path.display()))
}

fn parse_target(s: &str) -> Result<TargetSpec> {
    s.parse().or_else(|e| usage(format!("--target: {e}")))
}

fn cmd_simulate(a: SimulateArgs) -> Result<u8> {
    let dist = distribution(&a.process)?;
    let n = a.process.n;
    let k = a.process.k;
    let m = match (a.m, a.ratio) {
        (Some(m), _) => m,
        (None, Some(r)) if r.is_finite() && r >= 0.0 => (r * n as f64).round() as usize,
        (None, r) => return usage(format!("--ratio must be a nonnegative number, got {r:?}")),
    };
    let target = a.target.as_deref().map(parse_target).transpose()?;
    let mat = sample_matrix(&dist, n, m, a.process.seed)?;
    if let Some(path) = &a.emit_matrix {
        fs::write(path, write_matrix(&mat)).with_context(|| format!("writing {}", path.display()))?;
    }
    let rank = mat.rank();
    let pr = two_core(&mat);
    let d = k as f64 * m as f64 / n as f64;
    let mut out = json!({
        "k": k, "q": dist.field().order(), "n": n, "m": m, "d": d, "seed": a.process.seed,
        "rank": rank, "full_rank": rank == m,
        "core_rows": pr.kept_rows.len(), "core_cols": pr.kept_cols.len(),
    });
    if a.diagnostics {
        let (pred_rows, pred_cols) = thresholds::core_sizes(k, d).map_err(threshold_error)?;
        let mut diag = json!({
            "predicted_core_row_frac": pred_rows,
            "predicted_core_col_frac": pred_cols,
            "core_row_frac": pr.kept_rows.len() as f64 / n as f64,
            "core_col_frac": pr.kept_cols.len() as f64 / n as f64,
        });
        if let Ok(h) = hypergraph_of(&pr) {
            let t = tanner_of(&h);
            let comps = red_components(&t);
            diag["edge_nodes"] = json!(t.n_edge_nodes());
            diag["red_edge_nodes"] = json!(t.red_count());
            diag["red_fraction"] = json!(t.red_fraction());
            diag["red_components"] = json!(comps.len());
            diag["largest_red_component"] = json!(comps.first().copied().unwrap_or(0));
            diag["edge_size_histogram"] = json!(h.edge_size_histogram());
        }
        if k >= 3 {
            if let Ok(mu) = thresholds::core_row_mu(k, d) {
                if mu > 0.0 {
                    diag["predicted_red_fraction"] = json!(thresholds::red_fraction(mu));
                }
            }
            diag["beta"] = json!(thresholds::beta(k).map_err(threshold_error)?);
        }
        out["diagnostics"] = diag;
    }
    if let Some(spec) = target {
        let t = spec.resolve().or_else(|e| usage(format!("--target: {e}")))?;
        let mut rng = ChaCha8Rng::seed_from_u64(a.process.seed ^ 0x6d69_6e6f_7273);
        let outcome = minor_randomized(&mat, &t, a.budget, &mut rng)?;
        out["target"] = json!(spec.to_string());
        out["minor_found"] = json!(outcome.witness().is_some());
        if let RandomizedOutcome::NotFound(r) = outcome {
            out["failure_code"] = json!(r.code());
        }
    }
    print_json(&out)?;
    Ok(0)
}

fn cmd_sweep(
    config: &Path,
    output: Option<PathBuf>,
    jsonl: Option<PathBuf>,
    threads: Option<usize>,
) -> Result<u8> {
    let text =
        fs::read_to_string(config).with_context(|| format!("reading {}", config.display()))?;
    let cfg = SweepConfig::from_json(&text).or_else(|e| usage(format!("{}: {e}", config.display())))?;
    let dest = output.or_else(|| cfg.output.clone());
    let exp = Experiment::new(cfg).or_else(|e| usage(format!("{}: {e}", config.display())))?;
    if threads == Some(0) {
        return usage("--threads must be positive");
    }
    let mut jsonl_file = match &jsonl {
        Some(p) => Some(io::BufWriter::new(
            fs::File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => None,
    };
    let jsonl_dyn = jsonl_file.as_mut().map(|w| w as &mut dyn Write);
    let to_stdout = dest.as_deref().is_none_or(|p| p == Path::new("-"));
    let summary = if to_stdout {
        let mut out = io::BufWriter::new(io::stdout().lock());
        exp.run_sweep(&mut out, jsonl_dyn, threads)?
    } else {
        let p = dest.expect("checked above");
        let mut out = io::BufWriter::new(
            fs::File::create(&p).with_context(|| format!("creating {}", p.display()))?,
        );
        exp.run_sweep(&mut out, jsonl_dyn, threads)?
    };
    if let Some(mut w) = jsonl_file {
        w.flush()?;
    }
    if to_stdout {
        for s in &summary {
            eprintln!(
                "ratio {}: found {}/{}, full rank {}/{}",
                s.ratio, s.found, s.trials, s.full_rank, s.trials
            );
        }
    } else {
        print_json(&summary)?;
    }
    Ok(0)
}

fn cmd_peel(input: &Path, output: Option<&Path>) -> Result<u8> {
    let a = read_matrix(input)?;
    let pr = two_core(&a);
    if let Some(p) = output {
        fs::write(p, write_matrix(&pr.core)).with_context(|| format!("writing {}", p.display()))?;
    }
    print_json(&json!({
        "q": a.field().order(),
        "rows": a.n_rows(),
        "cols": a.n_cols(),
        "nnz": a.nnz(),
        "core_rows": pr.kept_rows.len(),
        "core_cols": pr.kept_cols.len(),
        "core_nnz": pr.core.nnz(),
        "peel_steps": pr.peel_trace.len(),
    }))?;
    Ok(0)
}

fn cmd_find_minor(input: &Path, target: &str, mode: Mode, budget: usize, seed: u64) -> Result<u8> {
    let spec = parse_target(target)?;
    let t = spec.resolve().or_else(|e| usage(format!("--target: {e}")))?;
    let a = read_matrix(input)?;
    let (witness, code) = match mode {
        Mode::Brute => match minor_bruteforce(&a, &t)? {
            Some(w) => (Some(w), None),
            None => (None, Some("not-found")),
        },
        Mode::Random => {
            if budget == 0 {
                return usage("--budget must be positive");
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            match minor_randomized(&a, &t, budget, &mut rng)? {
                RandomizedOutcome::Found(w) => (Some(w), None),
                RandomizedOutcome::NotFound(r) => (None, Some(r.code())),
            }
        }
    };
    let mode_name = match mode {
        Mode::Brute => "brute",
        Mode::Random => "random",
    };
    match witness {
        Some(w) => {
            print_json(&json!({"found": true, "target": spec.to_string(), "mode": mode_name, "witness": w}))?;
            Ok(0)
        }
        None => {
            print_json(&json!({"found": false, "target": spec.to_string(), "mode": mode_name, "failure_code": code}))?;
            Ok(1)
        }
    }
}

fn cmd_pipeline(a: PipelineArgs) -> Result<u8> {
    let dist = distribution(&a.process)?;
    if !a.d.is_finite() || a.d <= 0.0 {
        return usage(format!("--d must be positive, got {}", a.d));
    }
    let n = a.process.n;
    let m1 = (a.d * n as f64 / a.process.k as f64).round() as usize;
    let a1 = sample_matrix(&dist, n, m1, a.process.seed)?;
    let params = PipelineParams {
        eta: a.eta,
        eps1: a.eps1,
        r: a.r,
        delta: a.delta,
        seed: a.process.seed,
        max_j: a.max_j,
    };
    let trace = match pipeline_run(&a1, &dist, &params) {
        Ok(t) => t,
        Err(e @ MinorError::BadParameter(_)) => return usage(e.to_string()),
        Err(MinorError::CoreEmpty) => {
            print_json(&json!({"n": n, "m1": m1, "failure_code": "core-empty"}))?;
            return Ok(1);
        }
        Err(e) => return Err(e.into()),
    };
    let summary = trace.summary();
    print_json(&summary)?;
    if !summary.invariant_violations.is_empty() {
        eprintln!("invariant violations: {:?}", summary.invariant_violations);
        return Ok(3);
    }
    Ok(if summary.failure_code.is_empty() { 0 } else { 1 })
}
