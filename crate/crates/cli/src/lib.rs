//! Batch front end for `nscascade-core`.
//!
//! Each command writes `<command>.csv` (header row first) and
//! `<command>.json` into the output directory. Replicate `i` always runs on
//! `RngStream::new(seed, 0).fork(i)` and reductions happen in fixed chunks, so
//! results never depend on the thread count.

pub mod config;
pub mod verify;

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::path::Path;
use std::time::Instant;

use nscascade_core::analysis::{ks_one_sample, mean_stderr};
use nscascade_core::cascade::{
    simulate_ns_tree, simulate_selfsimilar_tree, zeta_n, zeta_tilde_n, TerminalReason,
};
use nscascade_core::estimator::{
    chunk_count, leray_profile, Accumulator, CoeffVec, EstimateReport, NsProblem, ReplicateOutcome,
    SelfSimilarProblem, REDUCTION_CHUNK,
};
use nscascade_core::integraleq::{
    picard_mtilde, LambdaGrid, MtildeOperator, PicardStart, QuadratureSpec,
};
use nscascade_core::kernels::{
    bessel_radial_survival, dilog_cdf, sample_bessel_radial, sample_dilog_ratio, KernelKind,
};
use nscascade_core::RngStream;
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use config::{clap_command, CommandKind, ConfigError, RunConfig, TreeKind};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Version tag of every CSV layout; bumped when a column changes.
pub const CSV_SCHEMA_VERSION: u32 = 1;

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Core(nscascade_core::Error),
    Io(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "configuration error: {e}"),
            CliError::Core(e) => write!(f, "invalid parameters: {e}"),
            CliError::Io(e) => write!(f, "output error: {e}"),
        }
    }
}

impl From<nscascade_core::Error> for CliError {
    fn from(e: nscascade_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

/// What a command produced, before serialization.
pub struct Outcome {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    pub n_replicates: u64,
    pub mean: Value,
    pub stderr: Value,
    pub truncated_fraction: Value,
    pub pass: Option<bool>,
    pub details: Map<String, Value>,
}

impl Outcome {
    fn new(header: Vec<&'static str>) -> Self {
        Outcome {
            header,
            rows: Vec::new(),
            n_replicates: 0,
            mean: Value::Null,
            stderr: Value::Null,
            truncated_fraction: json!(0.0),
            pass: None,
            details: Map::new(),
        }
    }
}

/// Parse arguments, run, and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match clap_command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    let command = CommandKind::ALL
        .into_iter()
        .find(|c| c.name() == name)
        .expect("registered subcommand");
    let cfg = match RunConfig::from_matches(command, sub) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let start = Instant::now();
    match run(&cfg) {
        Ok(outcome) => {
            eprintln!(
                "{}: wall time {:.3} s",
                command.name(),
                start.elapsed().as_secs_f64()
            );
            if outcome.pass == Some(false) {
                EXIT_VERIFY_FAILED
            } else {
                EXIT_OK
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

/// Run a validated configuration and write its outputs.
pub fn run(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| CliError::Io(format!("cannot start worker pool: {e}")))?;
    let outcome = pool.install(|| compute(cfg))?;
    write_outputs(cfg, &outcome)?;
    Ok(outcome)
}

pub fn compute(cfg: &RunConfig) -> Result<Outcome, CliError> {
    match cfg.command {
        CommandKind::Sample => sample(cfg),
        CommandKind::Cascade => cascade(cfg),
        CommandKind::Explosion => explosion(cfg),
        CommandKind::Estimate => estimate(cfg),
        CommandKind::Selfsim => selfsim(cfg),
        CommandKind::Picard => picard(cfg),
        CommandKind::Verify => verify::run_suite(cfg),
    }
}

/// Master stream of a run.
pub fn master(cfg: &RunConfig) -> RngStream {
    RngStream::new(cfg.seed, 0)
}

/// Evaluate `f(i)` for every replicate, in parallel over reduction chunks,
/// returning results in replicate order.
pub fn par_replicates<T, F>(reps: u64, f: F) -> Result<Vec<T>, nscascade_core::Error>
where
    T: Send,
    F: Fn(u64) -> Result<T, nscascade_core::Error> + Sync,
{
    let parts: Vec<Result<Vec<T>, _>> = (0..chunk_count(reps))
        .into_par_iter()
        .map(|c| {
            let start = c * REDUCTION_CHUNK;
            (start..(start + REDUCTION_CHUNK).min(reps))
                .map(&f)
                .collect()
        })
        .collect();
    let mut out = Vec::with_capacity(reps as usize);
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

/// Chunked reduction of replicate outcomes; matches the core estimators bit for bit.
pub fn reduce_outcomes(
    outcomes: &[ReplicateOutcome],
    dir: nscascade_core::Wavenumber,
) -> Accumulator {
    let mut total = Accumulator::default();
    for chunk in outcomes.chunks(REDUCTION_CHUNK as usize) {
        let mut acc = Accumulator::default();
        for o in chunk {
            acc.push(*o, dir);
        }
        total.merge(&acc);
    }
    total
}

fn num(x: f64) -> String {
    format!("{x}")
}

/// `mean` and `stderr` of the finite entries, plus the fraction of `None`s.
fn scalar_summary(values: &[Option<f64>]) -> (Value, Value, f64) {
    let finite: Vec<f64> = values.iter().flatten().copied().collect();
    let frac = if values.is_empty() {
        0.0
    } else {
        (values.len() - finite.len()) as f64 / values.len() as f64
    };
    if finite.is_empty() {
        return (Value::Null, Value::Null, frac);
    }
    let (m, se) = mean_stderr(&finite);
    (json!(m), json!(se), frac)
}

fn sample(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let rng = master(cfg);
    let u = cfg.xi.norm();
    let values = match cfg.kernel {
        KernelKind::Dilog => {
            par_replicates(cfg.reps, |i| Ok(sample_dilog_ratio(&mut rng.fork(i))))?
        }
        KernelKind::Bessel => {
            par_replicates(cfg.reps, |i| sample_bessel_radial(u, &mut rng.fork(i)))?
        }
    };
    let mut out = Outcome::new(vec!["replicate", "value"]);
    out.rows = values
        .iter()
        .enumerate()
        .map(|(i, v)| vec![i.to_string(), num(*v)])
        .collect();
    let (m, se) = mean_stderr(&values);
    out.n_replicates = cfg.reps;
    out.mean = json!(m);
    out.stderr = json!(se);
    out.details.insert(
        "quantity".into(),
        json!(match cfg.kernel {
            KernelKind::Dilog => "offspring ratio |W1|/|xi|",
            KernelKind::Bessel => "offspring magnitude |W1| given |xi|",
        }),
    );
    if values.len() >= nscascade_core::analysis::KS_MIN_SAMPLE {
        let ks = match cfg.kernel {
            KernelKind::Dilog => {
                ks_one_sample(&values, |x| dilog_cdf(x).unwrap_or(f64::NAN), cfg.alpha)?
            }
            KernelKind::Bessel => ks_one_sample(
                &values,
                |x| 1.0 - bessel_radial_survival(u, x).unwrap_or(f64::NAN),
                cfg.alpha,
            )?,
        };
        out.details
            .insert("ks_statistic".into(), json!(ks.statistic));
        out.details
            .insert("ks_critical".into(), json!(ks.critical_at_alpha));
    }
    Ok(out)
}

fn cascade(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let rng = master(cfg);
    // (nodes, terminal leaves, truncated)
    let trees: Vec<(usize, u64, bool)> = match cfg.tree {
        TreeKind::Ns => par_replicates(cfg.reps, |i| {
            let t = simulate_ns_tree(
                cfg.xi,
                cfg.t,
                cfg.kernel,
                cfg.mode,
                cfg.nu,
                cfg.budget,
                &rng.fork(i),
            )?;
            Ok((t.len(), t.alive_count(), t.is_truncated()))
        })?,
        TreeKind::Selfsim => {
            let e0 = cfg.xi.unit()?;
            par_replicates(cfg.reps, |i| {
                let t = simulate_selfsimilar_tree(e0, cfg.lambda, cfg.budget, &rng.fork(i))?;
                let leaves = t
                    .nodes
                    .iter()
                    .filter(|n| n.terminal == TerminalReason::SurvivedHorizon)
                    .count() as u64;
                Ok((t.len(), leaves, t.is_truncated()))
            })?
        }
    };
    let mut out = Outcome::new(vec!["replicate", "value", "leaves", "truncated"]);
    out.rows = trees
        .iter()
        .enumerate()
        .map(|(i, (n, l, tr))| {
            vec![
                i.to_string(),
                n.to_string(),
                l.to_string(),
                (*tr as u8).to_string(),
            ]
        })
        .collect();
    let sizes: Vec<Option<f64>> = trees
        .iter()
        .map(|&(n, _, tr)| (!tr).then_some(n as f64))
        .collect();
    let (m, se, frac) = scalar_summary(&sizes);
    out.n_replicates = cfg.reps;
    out.mean = m;
    out.stderr = se;
    out.truncated_fraction = json!(frac);
    out.details
        .insert("quantity".into(), json!("nodes per untruncated tree"));
    Ok(out)
}

fn explosion(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let rng = master(cfg);
    let s = cfg.xi.norm_sq();
    let (values, scale) = match cfg.tree {
        TreeKind::Ns => (
            par_replicates(cfg.reps, |i| {
                zeta_n(cfg.xi, cfg.depth, cfg.kernel, &rng.fork(i))
            })?,
            s,
        ),
        TreeKind::Selfsim => (
            par_replicates(cfg.reps, |i| zeta_tilde_n(cfg.depth, &rng.fork(i)))?,
            1.0,
        ),
    };
    let mut out = Outcome::new(vec!["replicate", "value", "scaled"]);
    out.rows = values
        .iter()
        .enumerate()
        .map(|(i, v)| vec![i.to_string(), num(*v), num(v * scale)])
        .collect();
    let (m, se) = mean_stderr(&values);
    out.n_replicates = cfg.reps;
    out.mean = json!(m);
    out.stderr = json!(se);
    Ok(out)
}

fn coeff_json(v: &CoeffVec) -> Value {
    json!(v.0.iter().map(|c| [c.re, c.im]).collect::<Vec<_>>())
}

fn estimate_rows(outcomes: &[ReplicateOutcome], scale: f64) -> Vec<Vec<String>> {
    outcomes
        .iter()
        .enumerate()
        .map(|(i, o)| {
            let mut row = vec![i.to_string()];
            match o {
                ReplicateOutcome::Truncated => row.extend(std::iter::repeat(String::new()).take(7)),
                ReplicateOutcome::Value(x) => {
                    let x = *x * scale;
                    row.push(num(x.norm()));
                    for c in x.0 {
                        row.push(num(c.re));
                        row.push(num(c.im));
                    }
                }
            }
            row
        })
        .collect()
}

fn fill_estimate(out: &mut Outcome, r: &EstimateReport, reps: u64) {
    out.n_replicates = reps;
    out.mean = coeff_json(&r.mean);
    out.stderr = json!(r.stderr);
    out.truncated_fraction = json!(r.truncated_fraction);
    out.details
        .insert("replicates_used".into(), json!(r.replicates));
    out.details
        .insert("divergence_residual".into(), json!(r.divergence_residual));
}

const ESTIMATE_HEADER: [&str; 8] = [
    "replicate",
    "value",
    "re_x",
    "im_x",
    "re_y",
    "im_y",
    "re_z",
    "im_z",
];

fn estimate(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let rng = master(cfg);
    let p = NsProblem {
        xi: cfg.xi,
        t: cfg.t,
        u0: cfg.initial_data(),
        kernel: cfg.kernel,
        mode: cfg.mode,
        nu: cfg.nu,
        budget: cfg.budget,
    };
    p.validate(cfg.reps)?;
    let outcomes = par_replicates(cfg.reps, |i| p.replicate(&rng.fork(i)))?;
    let h = cfg.kernel.h(cfg.xi);
    let report = reduce_outcomes(&outcomes, cfg.xi).report(h);
    let mut out = Outcome::new(ESTIMATE_HEADER.to_vec());
    out.rows = estimate_rows(&outcomes, h);
    fill_estimate(&mut out, &report, cfg.reps);
    out.details.insert(
        "initial_value".into(),
        coeff_json(&p.u0.eval(cfg.xi, cfg.kernel)?),
    );
    Ok(out)
}

fn selfsim(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let rng = master(cfg);
    let p = SelfSimilarProblem {
        e0: cfg.xi.unit()?,
        lambda: cfg.lambda,
        u0: cfg.initial_data(),
        budget: cfg.budget,
    };
    let outcomes = par_replicates(cfg.reps, |i| p.replicate(&rng.fork(i)))?;
    let report = reduce_outcomes(&outcomes, p.e0).report(1.0);
    let mut out = Outcome::new(ESTIMATE_HEADER.to_vec());
    out.rows = estimate_rows(&outcomes, 1.0);
    fill_estimate(&mut out, &report, cfg.reps);
    out.details.insert(
        "leray_profile".into(),
        coeff_json(&leray_profile(report.mean, cfg.lambda)?),
    );
    Ok(out)
}

fn picard(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let op = MtildeOperator::new(QuadratureSpec::default())?;
    let nodes = LambdaGrid::uniform(cfg.lambda_max, cfg.intervals, 0.0)?.nodes;
    let start = if cfg.start_one {
        PicardStart::One
    } else {
        PicardStart::Zero
    };
    let res = picard_mtilde(start, nodes, &op, cfg.max_iters, cfg.tol)?;
    let mut out = Outcome::new(vec!["lambda", "value"]);
    out.rows = res
        .grid
        .nodes
        .iter()
        .zip(&res.grid.values)
        .map(|(l, v)| vec![num(*l), num(*v)])
        .collect();
    out.n_replicates = 0;
    let d = &mut out.details;
    d.insert("iterations".into(), json!(res.iterations));
    d.insert("sup_residual".into(), json!(res.sup_residual));
    d.insert("converged".into(), json!(res.converged));
    d.insert("monotone".into(), json!(res.monotone_flag));
    d.insert("flat_extension".into(), json!(res.flat_extension));
    d.insert(
        "quadrature_normalization".into(),
        json!(op.quadrature().normalization()),
    );
    Ok(out)
}

fn io_err(path: &Path, e: impl fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// The JSON summary of a finished command.
pub fn summary_json(cfg: &RunConfig, out: &Outcome) -> Value {
    let mut s = Map::new();
    s.insert("command".into(), json!(cfg.command.name()));
    s.insert("config".into(), cfg.echo());
    s.insert(
        "csv_schema".into(),
        json!(format!("{}/v{CSV_SCHEMA_VERSION}", cfg.command.name())),
    );
    s.insert("csv_columns".into(), json!(out.header));
    s.insert("n_replicates".into(), json!(out.n_replicates));
    s.insert("mean".into(), out.mean.clone());
    s.insert("stderr".into(), out.stderr.clone());
    s.insert("truncated_fraction".into(), out.truncated_fraction.clone());
    if let Some(p) = out.pass {
        s.insert("pass".into(), json!(p));
    }
    s.insert("details".into(), Value::Object(out.details.clone()));
    Value::Object(s)
}

fn write_outputs(cfg: &RunConfig, out: &Outcome) -> Result<(), CliError> {
    fs::create_dir_all(&cfg.out_dir).map_err(|e| io_err(&cfg.out_dir, e))?;
    let csv_path = cfg.out_dir.join(format!("{}.csv", cfg.command.name()));
    let mut w = csv::Writer::from_path(&csv_path).map_err(|e| io_err(&csv_path, e))?;
    w.write_record(&out.header)
        .map_err(|e| io_err(&csv_path, e))?;
    for row in &out.rows {
        w.write_record(row).map_err(|e| io_err(&csv_path, e))?;
    }
    w.flush().map_err(|e| io_err(&csv_path, e))?;
    let json_path = cfg.out_dir.join(format!("{}.json", cfg.command.name()));
    let mut text =
        serde_json::to_string_pretty(&summary_json(cfg, out)).expect("summary serializes");
    text.push('\n');
    fs::write(&json_path, text).map_err(|e| io_err(&json_path, e))
}
