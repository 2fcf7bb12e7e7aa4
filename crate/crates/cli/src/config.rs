//! Run configuration: a flat `key = value` file overlaid by command-line flags.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Arg, ArgAction, ArgMatches, Command as ClapCommand};
use nscascade_core::cascade::{SimBudget, ThinningMode, DEFAULT_MAX_ZETA_DEPTH};
use nscascade_core::estimator::InitialData;
use nscascade_core::kernels::KernelKind;
use nscascade_core::Wavenumber;
use serde_json::{json, Value};

/// Environment variable supplying the seed when neither flag nor file does.
pub const SEED_ENV: &str = "NSCASCADE_SEED";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Sample,
    Cascade,
    Explosion,
    Estimate,
    Selfsim,
    Picard,
    Verify,
}

impl CommandKind {
    pub const ALL: [CommandKind; 7] = [
        CommandKind::Sample,
        CommandKind::Cascade,
        CommandKind::Explosion,
        CommandKind::Estimate,
        CommandKind::Selfsim,
        CommandKind::Picard,
        CommandKind::Verify,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Sample => "sample",
            CommandKind::Cascade => "cascade",
            CommandKind::Explosion => "explosion",
            CommandKind::Estimate => "estimate",
            CommandKind::Selfsim => "selfsim",
            CommandKind::Picard => "picard",
            CommandKind::Verify => "verify",
        }
    }

    fn about(self) -> &'static str {
        match self {
            CommandKind::Sample => {
                "Draw offspring ratios (dilog) or radial offspring magnitudes (bessel)"
            }
            CommandKind::Cascade => "Simulate cascade trees and report their sizes",
            CommandKind::Explosion => "Sample the explosion functional at a fixed depth",
            CommandKind::Estimate => "Monte Carlo estimate of one Fourier mode",
            CommandKind::Selfsim => "Monte Carlo estimate of the self-similar solution",
            CommandKind::Picard => "Solve the non-explosion integral equation by Picard iteration",
            CommandKind::Verify => "Run verification suites; exit 1 on any failure",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreeKind {
    Ns,
    Selfsim,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    All,
    Samplers,
    Identities,
    Scaling,
    Bounds,
    Fixedpoint,
    Estimator,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::All => "all",
            Suite::Samplers => "samplers",
            Suite::Identities => "identities",
            Suite::Scaling => "scaling",
            Suite::Bounds => "bounds",
            Suite::Fixedpoint => "fixedpoint",
            Suite::Estimator => "estimator",
        }
    }

    pub fn includes(self, other: Suite) -> bool {
        self == Suite::All || self == other
    }
}

/// Every recognized key with its default (`None` when there is none) and help.
pub const KEYS: &[(&str, Option<&str>, &str)] = &[
    ("kernel", Some("dilog"), "Majorizing kernel: dilog | bessel"),
    ("xi-mag", Some("1"), "Wavenumber magnitude; the wavenumber points along the third axis"),
    ("xi", None, "Full wavenumber as x,y,z; overrides xi-mag"),
    ("t", Some("0.3"), "Time horizon"),
    ("lambda", Some("1"), "Similarity horizon for self-similar runs"),
    ("depth", Some("5"), "Depth n of the explosion functional"),
    ("reps", Some("10000"), "Number of replicates"),
    ("nu", Some("1"), "Viscosity"),
    ("mode", Some("nonthinned"), "Branching mode: thinned | nonthinned"),
    ("max-nodes", Some("4194304"), "Node budget per tree"),
    ("max-depth", Some("25"), "Depth budget per tree"),
    ("tree", Some("ns"), "Tree family for cascade and explosion: ns | selfsim"),
    ("data", Some("aligned"), "Initial data profile: zero | aligned | swirl"),
    ("amplitude", Some("1"), "Initial data amplitude"),
    ("lambda-max", Some("10"), "Right end of the Picard grid"),
    ("intervals", Some("800"), "Number of Picard grid intervals"),
    ("tol", Some("1e-8"), "Picard stopping tolerance on the sup residual"),
    ("max-iters", Some("1000"), "Picard iteration cap"),
    ("start", Some("zero"), "Picard starting function: zero | one"),
    ("suite", Some("all"), "Verification suite: all | samplers | identities | scaling | bounds | fixedpoint | estimator"),
    ("alpha", Some("0.001"), "Significance level of KS tests"),
    ("seed", None, "Master seed; defaults to $NSCASCADE_SEED, then 0"),
    ("threads", Some("0"), "Worker threads (0 = all cores); never affects results"),
    ("out-dir", Some("."), "Directory receiving <command>.csv and <command>.json"),
];

fn known(key: &str) -> bool {
    KEYS.iter().any(|(k, _, _)| *k == key)
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: CommandKind,
    pub kernel: KernelKind,
    pub xi: Wavenumber,
    pub t: f64,
    pub lambda: f64,
    pub depth: u32,
    pub reps: u64,
    pub nu: f64,
    pub mode: ThinningMode,
    pub budget: SimBudget,
    pub tree: TreeKind,
    pub data: String,
    pub amplitude: f64,
    pub lambda_max: f64,
    pub intervals: usize,
    pub tol: f64,
    pub max_iters: usize,
    pub start_one: bool,
    pub suite: Suite,
    pub alpha: f64,
    pub seed: u64,
    pub threads: usize,
    pub out_dir: PathBuf,
}

pub fn clap_command() -> ClapCommand {
    let mut root = ClapCommand::new("nscascade")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Stochastic cascade simulations for the Fourier-space Navier-Stokes equations")
        .subcommand_required(true)
        .arg_required_else_help(true);
    for cmd in CommandKind::ALL {
        let mut sub = ClapCommand::new(cmd.name()).about(cmd.about()).arg(
            Arg::new("config")
                .long("config")
                .value_name("FILE")
                .help("Flat key = value file; flags override its entries"),
        );
        for (key, default, help) in KEYS {
            let help = match default {
                Some(d) => format!("{help} [default: {d}]"),
                None => help.to_string(),
            };
            sub = sub.arg(
                Arg::new(*key)
                    .long(*key)
                    .value_name("VALUE")
                    .action(ArgAction::Set)
                    .help(help),
            );
        }
        root = root.subcommand(sub);
    }
    root
}

/// Parse `key = value` lines; `#` starts a comment.
pub fn parse_config_file(
    text: &str,
    origin: &Path,
) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut out = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return err(format!(
                "{}:{}: expected `key = value`",
                origin.display(),
                lineno + 1
            ));
        };
        let key = k.trim().replace('_', "-");
        if !known(&key) {
            return err(format!(
                "{}:{}: unknown key `{}`",
                origin.display(),
                lineno + 1,
                k.trim()
            ));
        }
        if out.insert(key.clone(), v.trim().to_string()).is_some() {
            return err(format!(
                "{}:{}: duplicate key `{key}`",
                origin.display(),
                lineno + 1
            ));
        }
    }
    Ok(out)
}

fn value<T: FromStr>(
    map: &BTreeMap<String, String>,
    key: &str,
    what: &str,
) -> Result<T, ConfigError> {
    let raw = map.get(key).map(String::as_str).or_else(|| {
        KEYS.iter()
            .find(|(k, _, _)| *k == key)
            .and_then(|(_, d, _)| *d)
    });
    let Some(raw) = raw else {
        return err(format!("missing required field `{key}`"));
    };
    raw.parse()
        .map_err(|_| ConfigError(format!("invalid value for `{key}`: `{raw}` is not {what}")))
}

fn positive(key: &str, v: f64) -> Result<f64, ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        err(format!(
            "invalid value for `{key}`: must be positive and finite"
        ))
    }
}

impl RunConfig {
    /// Build from parsed flags, reading `--config` when given.
    pub fn from_matches(command: CommandKind, m: &ArgMatches) -> Result<Self, ConfigError> {
        let mut map = match m.get_one::<String>("config") {
            Some(path) => {
                let path = Path::new(path);
                let text = std::fs::read_to_string(path).map_err(|e| {
                    ConfigError(format!("cannot read config file {}: {e}", path.display()))
                })?;
                parse_config_file(&text, path)?
            }
            None => BTreeMap::new(),
        };
        for (key, _, _) in KEYS {
            if let Some(v) = m.get_one::<String>(key) {
                map.insert(key.to_string(), v.clone());
            }
        }
        if !map.contains_key("seed") {
            if let Ok(s) = std::env::var(SEED_ENV) {
                s.parse::<u64>().map_err(|_| {
                    ConfigError(format!(
                        "invalid value for {SEED_ENV}: `{s}` is not an unsigned integer"
                    ))
                })?;
                map.insert("seed".into(), s);
            }
        }
        Self::from_map(command, &map)
    }

    pub fn from_map(
        command: CommandKind,
        map: &BTreeMap<String, String>,
    ) -> Result<Self, ConfigError> {
        if let Some(k) = map.keys().find(|k| !known(k)) {
            return err(format!("unknown key `{k}`"));
        }
        let kernel: KernelKind = value(map, "kernel", "a kernel name (dilog | bessel)")?;
        let xi = match map.get("xi") {
            Some(raw) => {
                let parts: Vec<f64> = raw
                    .split(',')
                    .map(|p| p.trim().parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| {
                        ConfigError(format!("invalid value for `xi`: `{raw}` is not x,y,z"))
                    })?;
                if parts.len() != 3 {
                    return err(format!(
                        "invalid value for `xi`: `{raw}` must have three components"
                    ));
                }
                Wavenumber::new(parts[0], parts[1], parts[2])
            }
            None => Wavenumber::new(
                0.0,
                0.0,
                positive("xi-mag", value(map, "xi-mag", "a number")?)?,
            ),
        };
        if !xi.is_finite() || xi.norm_sq() == 0.0 {
            return err("invalid value for `xi`: must be finite and nonzero");
        }
        let depth: u32 = value(map, "depth", "a nonnegative integer")?;
        if depth > DEFAULT_MAX_ZETA_DEPTH {
            return err(format!(
                "invalid value for `depth`: {depth} exceeds the branch-and-bound maximum {DEFAULT_MAX_ZETA_DEPTH}"
            ));
        }
        let reps: u64 = value(map, "reps", "a positive integer")?;
        if reps == 0 {
            return err("invalid value for `reps`: must be at least 1");
        }
        let mode: ThinningMode = value(map, "mode", "a mode (thinned | nonthinned)")?;
        let max_nodes: u64 = value(map, "max-nodes", "a positive integer")?;
        let max_depth: u32 = value(map, "max-depth", "a positive integer")?;
        let budget = SimBudget::new(max_nodes, max_depth)
            .map_err(|e| ConfigError(format!("invalid value for `max-nodes`/`max-depth`: {e}")))?;
        let tree = match value::<String>(map, "tree", "")?.as_str() {
            "ns" => TreeKind::Ns,
            "selfsim" => TreeKind::Selfsim,
            other => {
                return err(format!(
                    "invalid value for `tree`: `{other}` is not ns | selfsim"
                ))
            }
        };
        let data: String = value(map, "data", "")?;
        let amplitude: f64 = value(map, "amplitude", "a number")?;
        InitialData::named(&data, amplitude)
            .map_err(|e| ConfigError(format!("invalid value for `data`/`amplitude`: {e}")))?;
        let intervals: usize = value(map, "intervals", "a positive integer")?;
        if intervals == 0 {
            return err("invalid value for `intervals`: must be at least 1");
        }
        let max_iters: usize = value(map, "max-iters", "a nonnegative integer")?;
        let start_one = match value::<String>(map, "start", "")?.as_str() {
            "zero" => false,
            "one" => true,
            other => {
                return err(format!(
                    "invalid value for `start`: `{other}` is not zero | one"
                ))
            }
        };
        let suite = match value::<String>(map, "suite", "")?.as_str() {
            "all" => Suite::All,
            "samplers" => Suite::Samplers,
            "identities" => Suite::Identities,
            "scaling" => Suite::Scaling,
            "bounds" => Suite::Bounds,
            "fixedpoint" => Suite::Fixedpoint,
            "estimator" => Suite::Estimator,
            other => {
                return err(format!(
                    "invalid value for `suite`: unknown suite `{other}`"
                ))
            }
        };
        let alpha: f64 = value(map, "alpha", "a number")?;
        if !(alpha > 0.0 && alpha < 1.0) {
            return err("invalid value for `alpha`: must lie in (0, 1)");
        }
        let seed: u64 = match map.get("seed") {
            Some(_) => value(map, "seed", "an unsigned integer")?,
            None => 0,
        };
        Ok(RunConfig {
            command,
            kernel,
            xi,
            t: positive("t", value(map, "t", "a number")?)?,
            lambda: positive("lambda", value(map, "lambda", "a number")?)?,
            depth,
            reps,
            nu: positive("nu", value(map, "nu", "a number")?)?,
            mode,
            budget,
            tree,
            data,
            amplitude,
            lambda_max: positive("lambda-max", value(map, "lambda-max", "a number")?)?,
            intervals,
            tol: positive("tol", value(map, "tol", "a number")?)?,
            max_iters,
            start_one,
            suite,
            alpha,
            seed,
            threads: value(map, "threads", "a nonnegative integer")?,
            out_dir: PathBuf::from(value::<String>(map, "out-dir", "")?),
        })
    }

    pub fn initial_data(&self) -> InitialData {
        InitialData::named(&self.data, self.amplitude).expect("validated at parse time")
    }

    /// The effective configuration. Thread count and output directory are
    /// left out so that summaries do not depend on them.
    pub fn echo(&self) -> Value {
        let mode = match self.mode {
            ThinningMode::Thinned => "thinned",
            ThinningMode::Nonthinned => "nonthinned",
        };
        json!({
            "kernel": self.kernel.name(),
            "xi": [self.xi.x, self.xi.y, self.xi.z],
            "t": self.t,
            "lambda": self.lambda,
            "depth": self.depth,
            "reps": self.reps,
            "nu": self.nu,
            "mode": mode,
            "max_nodes": self.budget.max_nodes,
            "max_depth": self.budget.max_depth,
            "tree": match self.tree { TreeKind::Ns => "ns", TreeKind::Selfsim => "selfsim" },
            "data": self.data,
            "amplitude": self.amplitude,
            "lambda_max": self.lambda_max,
            "intervals": self.intervals,
            "tol": self.tol,
            "max_iters": self.max_iters,
            "start": if self.start_one { "one" } else { "zero" },
            "suite": self.suite.name(),
            "alpha": self.alpha,
            "seed": self.seed,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Result<RunConfig, ConfigError> {
        let m = clap_command().try_get_matches_from(args).unwrap();
        let (name, sub) = m.subcommand().unwrap();
        let cmd = CommandKind::ALL
            .into_iter()
            .find(|c| c.name() == name)
            .unwrap();
        RunConfig::from_matches(cmd, sub)
    }

    #[test]
    fn explosion_example_parses() {
        let c = parse(&[
            "nscascade",
            "explosion",
            "--kernel",
            "dilog",
            "--xi-mag",
            "1",
            "--depth",
            "5",
            "--reps",
            "10000",
            "--seed",
            "7",
        ])
        .unwrap();
        assert_eq!((c.depth, c.reps, c.seed), (5, 10000, 7));
        assert_eq!(c.xi, Wavenumber::new(0.0, 0.0, 1.0));
        assert_eq!(c.nu, 1.0);
        assert_eq!(c.mode, ThinningMode::Nonthinned);
        assert_eq!(c.budget.max_depth, 25);
    }

    #[test]
    fn depth_beyond_maximum_rejected() {
        let e = parse(&["nscascade", "explosion", "--depth", "40"]).unwrap_err();
        assert!(e.0.contains("depth"), "{e}");
    }

    #[test]
    fn field_specific_messages() {
        let e = parse(&["nscascade", "estimate", "--t", "abc"]).unwrap_err();
        assert!(e.0.contains("`t`"), "{e}");
        let e = parse(&["nscascade", "estimate", "--kernel", "gauss"]).unwrap_err();
        assert!(e.0.contains("`kernel`"), "{e}");
        let e = parse(&["nscascade", "estimate", "--xi", "1,2"]).unwrap_err();
        assert!(e.0.contains("`xi`"), "{e}");
        let e = parse(&["nscascade", "estimate", "--max-depth", "61"]).unwrap_err();
        assert!(e.0.contains("max-depth"), "{e}");
    }

    #[test]
    fn file_keys_and_override() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(
            &path,
            "# comment\nreps = 50\nxi_mag = 2  # trailing\nseed=3\n",
        )
        .unwrap();
        let p = path.to_str().unwrap();
        let c = parse(&["nscascade", "sample", "--config", p]).unwrap();
        assert_eq!((c.reps, c.seed), (50, 3));
        assert_eq!(c.xi.z, 2.0);
        let c = parse(&["nscascade", "sample", "--config", p, "--reps", "70"]).unwrap();
        assert_eq!(c.reps, 70);
    }

    #[test]
    fn unknown_file_key_rejected() {
        let e = parse_config_file("bogus = 1\n", Path::new("x")).unwrap_err();
        assert!(e.0.contains("unknown key"));
        assert!(parse_config_file("reps\n", Path::new("x")).is_err());
        assert!(parse_config_file("reps = 1\nreps = 2\n", Path::new("x")).is_err());
    }

    #[test]
    fn echo_omits_threads_and_out_dir() {
        let c = parse(&["nscascade", "picard", "--threads", "3", "--out-dir", "/tmp"]).unwrap();
        let e = c.echo();
        assert!(e.get("threads").is_none() && e.get("out_dir").is_none());
        assert_eq!(e["intervals"], 800);
    }
}
