//! `sepmix`: spectra, simulation, exact mixing and Monte Carlo estimates for
//! the exclusion process with conductances.
//!
//! Exit codes: 0 ok, 2 invariant failure, 3 state budget exceeded, 4 bad
//! configuration or input.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use sepmix_core::experiments::{parse_value, EstimateKind, ExperimentConfig, VerifySettings};
use sepmix_core::profile::ProfileSpec;
use sepmix_core::Error;

#[derive(Parser, Debug)]
#[command(name = "sepmix", version, about = "Exclusion process with conductances on a segment")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand. Each one overrides a config key.
#[derive(Args, Debug)]
struct Common {
    /// JSON config document; flags below override its keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override any config key, e.g. `--set replicas.wilson=800`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    /// Profile file `{"n_sites": N, "resistances": [...]}` (key `profile.file`).
    #[arg(long, global = true, conflicts_with = "profile_kind")]
    profile: Option<PathBuf>,
    /// Generated profile: `homogeneous`, `iid-uniform:a,b`, `iid-discrete:v/p,...`,
    /// `explicit:c1,c2,...`, `one-slow-bond:pos,r`. Seeded by `--seed`.
    #[arg(long, global = true)]
    profile_kind: Option<String>,
    /// Master seed (key `seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Single system size; replaces the ladder (key `n_ladder`).
    #[arg(long = "n", global = true)]
    n: Option<usize>,
    /// Fixed particle number (key `k_rule`).
    #[arg(long = "k", global = true)]
    k: Option<usize>,
    /// Comma-separated TV levels (key `eps`).
    #[arg(long, global = true, value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    /// Replica count for the subcommand's main estimator.
    #[arg(long, global = true)]
    replicas: Option<usize>,
    /// Output directory (key `output_dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Leading eigenvalues and eigenfunctions of the one-particle problem.
    Spectrum {
        #[arg(long)]
        count: Option<usize>,
        /// `neumann` or `dirichlet`.
        #[arg(long)]
        boundary: Option<String>,
        /// `dense` or `shooting`.
        #[arg(long)]
        method: Option<String>,
    },
    /// Coupled trajectories from given starts, with height snapshots.
    Simulate {
        /// Starting configuration as a 0/1 string; repeat for more members.
        #[arg(long = "start")]
        starts: Vec<String>,
        #[arg(long)]
        horizon: Option<f64>,
        /// `per-column` or `literal`.
        #[arg(long)]
        clock: Option<String>,
        #[arg(long)]
        snapshots: Option<usize>,
        /// Write the event log of replica 0.
        #[arg(long)]
        event_log: bool,
    },
    /// Coalescence times of the maximal and minimal trajectories.
    Coalesce {
        #[arg(long)]
        max_time: Option<f64>,
        /// Write the event log of replica 0.
        #[arg(long)]
        event_log: bool,
    },
    /// Exact total-variation curve and mixing times by uniformization.
    MixExact {
        #[arg(long)]
        points: Option<usize>,
        /// `all` or `extremal-only`.
        #[arg(long)]
        starts: Option<String>,
    },
    /// Monte Carlo estimators.
    Estimate {
        /// `wilson`, `bracket`, `area`, `covariance` or `heat`.
        #[arg(long)]
        what: Option<String>,
        /// Observation time for `heat` and `bracket`.
        #[arg(long)]
        t: Option<f64>,
    },
    /// Lower and upper mixing-time estimates along the N ladder.
    Cutoff,
    /// Self-checks of every module.
    Verify {
        /// `fast` or `full`.
        #[arg(long)]
        suite: Option<String>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Spectrum { .. } => "spectrum",
            Command::Simulate { .. } => "simulate",
            Command::Coalesce { .. } => "coalesce",
            Command::MixExact { .. } => "mix-exact",
            Command::Estimate { .. } => "estimate",
            Command::Cutoff => "cutoff",
            Command::Verify { .. } => "verify",
        }
    }

    /// Config key that `--replicas` sets for this subcommand.
    fn replicas_key(&self, what: Option<EstimateKind>) -> &'static str {
        match self {
            Command::Coalesce { .. } => "replicas.coalescence",
            Command::Estimate { .. } if what == Some(EstimateKind::Wilson) => "replicas.wilson",
            _ => "replicas.general",
        }
    }
}

fn string(s: &str) -> Value {
    Value::String(s.to_string())
}

fn number<T: Into<serde_json::Number>>(v: T) -> Value {
    Value::Number(v.into())
}

fn float(v: f64) -> Result<Value, Error> {
    serde_json::Number::from_f64(v).map(Value::Number).ok_or_else(|| Error::param(format!("`{v}` is not a finite number")))
}

/// Translate flags into `(key, value)` overrides, in flag order after `--set`.
fn overrides(cli: &Cli) -> Result<Vec<(String, Value)>, Error> {
    let mut out = Vec::new();
    for kv in &cli.common.set {
        let (k, v) = kv.split_once('=').ok_or_else(|| Error::param(format!("`--set {kv}` needs KEY=VALUE")))?;
        out.push((k.trim().to_string(), parse_value(v.trim())));
    }
    let c = &cli.common;
    let mut push = |k: &str, v: Value| out.push((k.to_string(), v));
    if let Some(s) = c.seed {
        push("seed", number(s));
    }
    if let Some(f) = &c.profile {
        push("profile", serde_json::json!({ "file": f }));
    }
    if let Some(kind) = &c.profile_kind {
        let spec = ProfileSpec::parse(kind, c.seed.unwrap_or(0))?;
        push("profile", serde_json::to_value(spec)?);
    }
    // A profile file fixes N unless `--n` says otherwise.
    let file_n = c.profile.as_ref().and_then(|f| {
        let text = std::fs::read_to_string(f).ok()?;
        serde_json::from_str::<Value>(&text).ok()?.get("n_sites")?.as_u64()
    });
    if let Some(n) = c.n.map(|n| n as u64).or(file_n) {
        push("n_ladder", serde_json::json!([n]));
    }
    if let Some(k) = c.k {
        push("k_rule", serde_json::json!({ "rule": "fixed", "k": k }));
    }
    if let Some(eps) = &c.eps {
        push("eps", Value::Array(eps.iter().map(|&e| float(e)).collect::<Result<_, _>>()?));
    }
    if let Some(o) = &c.out {
        push("output_dir", serde_json::json!(o));
    }
    let mut what = None;
    match &cli.command {
        Command::Spectrum { count, boundary, method } => {
            if let Some(v) = count {
                push("spectrum.count", number(*v as u64));
            }
            if let Some(v) = boundary {
                push("spectrum.boundary", string(v));
            }
            if let Some(v) = method {
                push("spectrum.method", string(v));
            }
        }
        Command::Simulate { starts, horizon, clock, snapshots, event_log } => {
            if !starts.is_empty() {
                push("simulate.starts", serde_json::json!(starts));
            }
            if let Some(v) = horizon {
                push("simulate.horizon", float(*v)?);
            }
            if let Some(v) = clock {
                push("simulate.clock", string(v));
            }
            if let Some(v) = snapshots {
                push("simulate.snapshots", number(*v as u64));
            }
            if *event_log {
                push("simulate.event_log", Value::Bool(true));
            }
        }
        Command::Coalesce { max_time, event_log } => {
            if let Some(v) = max_time {
                push("coalesce.max_time", float(*v)?);
            }
            if *event_log {
                push("coalesce.event_log", Value::Bool(true));
            }
        }
        Command::MixExact { points, starts } => {
            if let Some(v) = points {
                push("mix_exact.points", number(*v as u64));
            }
            if let Some(v) = starts {
                push("mix_exact.starts", string(v));
            }
        }
        Command::Estimate { what: w, t } => {
            if let Some(v) = w {
                push("estimate.what", string(v));
                what = serde_json::from_value(string(v)).ok();
            }
            if let Some(v) = t {
                push("estimate.t", float(*v)?);
            }
        }
        Command::Cutoff => {}
        Command::Verify { suite } => {
            if let Some(v) = suite {
                push("verify.suite", string(v));
            }
        }
    }
    if let Some(r) = c.replicas {
        // Without `--what`, the kind comes from the config file.
        if what.is_none() && matches!(cli.command, Command::Estimate { .. }) {
            what = Some(ExperimentConfig::load(cli.common.config.as_deref(), &out)?.estimate.what);
        }
        out.push((cli.command.replicas_key(what).to_string(), number(r as u64)));
    }
    Ok(out)
}

fn run(cli: &Cli) -> Result<(), Error> {
    let overrides = overrides(cli)?;
    let cfg = ExperimentConfig::load(cli.common.config.as_deref(), &overrides)?;
    log::info!("{} -> {}", cli.command.name(), cfg.output_dir.display());
    match &cli.command {
        Command::Spectrum { .. } => commands::spectrum(&cfg),
        Command::Simulate { .. } => commands::simulate(&cfg),
        Command::Coalesce { .. } => commands::coalesce(&cfg),
        Command::MixExact { .. } => commands::mix_exact(&cfg),
        Command::Estimate { .. } => commands::estimate(&cfg),
        Command::Cutoff => commands::cutoff(&cfg),
        Command::Verify { .. } => {
            let VerifySettings { suite } = cfg.verify.clone();
            commands::verify(&cfg, suite, cli.common.profile.as_deref())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).format_timestamp(None).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 4 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
