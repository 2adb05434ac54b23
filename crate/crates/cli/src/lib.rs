//! `liblab` command-line front end.
//!
//! Every invocation is reduced to an [`ExperimentSpec`], either read from a
//! JSON file (`--config`) or assembled from inline flags, validated, run, and
//! written out. Exit codes: 0 success, 1 invalid input, 2 numerical failure.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use liblab_core::measures::{MeasureSpec, Preset, TraceParams};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub mod output;
pub mod run;
pub mod spec;

pub use run::{run, Outcome, RunError};
pub use spec::{Command, ExperimentSpec, Format, Pair, SpecError};

#[derive(Debug, Parser)]
#[command(name = "liblab", version, about = "Spectral flows, free mutual information and orbital free entropy of two projections")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Evolve the initial measure and tabulate Fourier moments and densities
    Evolve(Inline),
    /// Free mutual information i* of the liberation flow
    Istar(Inline),
    /// Orbital free entropy of the initial pair
    Chiorb(Inline),
    /// Compare i* with −χ_orb
    Verify(Inline),
    /// Moments from the free unitary Brownian motion recursion (τP = τQ = ½)
    Moments(Inline),
    /// Random-matrix Monte Carlo spectra and KS distances to the flow
    OracleMc(Inline),
    /// Finite-difference residual of the evolution equation for G
    PdeCheck(Inline),
    /// Run a JSON spec; the command is taken from the file
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PairArg {
    Free,
    Equal,
}

/// Inline flags. With `--config` they override the file.
#[derive(Debug, Default, Args)]
pub struct Inline {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// haar_half, free_projections, delta_zero, raised_cosine or bump
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long = "tauP")]
    pub tau_p: Option<f64>,
    #[arg(long = "tauQ")]
    pub tau_q: Option<f64>,
    /// Output times, comma separated or repeated
    #[arg(long = "t", value_delimiter = ',')]
    pub t: Vec<f64>,
    #[arg(long = "t-max")]
    pub t_max: Option<f64>,
    #[arg(long)]
    pub grid: Option<usize>,
    /// Quadrature tolerance for i*
    #[arg(long)]
    pub tol: Option<f64>,
    /// Monte Carlo seed
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Defaults to csv when --out ends in .csv, json otherwise
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    /// Matrix size for oracle-mc
    #[arg(long)]
    pub n: Option<usize>,
    /// Replicas for oracle-mc
    #[arg(long)]
    pub samples: Option<usize>,
    /// Time step for oracle-mc
    #[arg(long)]
    pub dt: Option<f64>,
    /// Initial pair for oracle-mc
    #[arg(long, value_enum)]
    pub pair: Option<PairArg>,
}

fn read_config(path: &Path) -> Result<ExperimentSpec, SpecError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| SpecError::new(format!("cannot read {}: {e}", path.display())))?;
    ExperimentSpec::from_json(&text).map_err(|mut e| {
        e.message = format!("{}: {}", path.display(), e.message);
        e
    })
}

fn parse_preset(name: &str) -> Result<Preset, SpecError> {
    serde_json::from_value(Value::String(name.to_string())).map_err(|_| {
        SpecError::new(format!(
            "unknown preset {name:?}; expected haar_half, free_projections, delta_zero, raised_cosine or bump"
        ))
    })
}

/// Builds the experiment spec for `command` from inline flags, starting from the
/// `--config` file when given.
pub fn spec_from_inline(command: Command, a: &Inline) -> Result<ExperimentSpec, SpecError> {
    let mut spec = match &a.config {
        Some(path) => {
            let s = read_config(path)?;
            if s.command != command {
                return Err(SpecError::new(format!(
                    "{} holds command {:?} but {:?} was requested",
                    path.display(),
                    s.command.name(),
                    command.name()
                )));
            }
            s
        }
        None => {
            let preset = a
                .preset
                .as_deref()
                .ok_or_else(|| SpecError::new("either --config or --preset is required"))?;
            let mut s: ExperimentSpec = serde_json::from_value(json!({
                "command": command,
                "params": {"tau_p": 0.5, "tau_q": 0.5},
                "initial_measure": MeasureSpec::named(parse_preset(preset)?),
            }))
            .expect("default spec deserializes");
            if command == Command::Evolve || command == Command::Moments || command == Command::PdeCheck {
                s.times = vec![1.0];
            }
            if command == Command::OracleMc {
                s.times = vec![0.0, 0.5, 1.0];
            }
            s
        }
    };
    if let Some(p) = &a.preset {
        spec.initial_measure = MeasureSpec::named(parse_preset(p)?);
    }
    if a.tau_p.is_some() || a.tau_q.is_some() {
        let p = a.tau_p.unwrap_or(spec.params.tau_p());
        let q = a.tau_q.unwrap_or(spec.params.tau_q());
        spec.params = TraceParams::new(p, q).map_err(|e| SpecError::new(format!("--tauP/--tauQ: {e}")))?;
    }
    if !a.t.is_empty() {
        spec.times = a.t.clone();
    }
    if let Some(v) = a.t_max {
        spec.t_max = v;
    }
    if let Some(v) = a.grid {
        spec.grid_size = v;
    }
    if let Some(v) = a.tol {
        spec.tolerances.quadrature = v;
    }
    if let Some(v) = a.seed {
        spec.oracle.seed = v;
    }
    if let Some(v) = a.n {
        spec.oracle.n = v;
    }
    if let Some(v) = a.samples {
        spec.oracle.samples = v;
    }
    if let Some(v) = a.dt {
        spec.oracle.dt = v;
    }
    if let Some(v) = a.pair {
        spec.oracle.pair = match v {
            PairArg::Free => Pair::Free,
            PairArg::Equal => Pair::Equal,
        };
    }
    if let Some(out) = &a.out {
        spec.output.path = Some(out.display().to_string());
        if a.format.is_none() && out.extension().is_some_and(|e| e == "csv") {
            spec.output.format = Format::Csv;
        }
    }
    if let Some(f) = a.format {
        spec.output.format = match f {
            FormatArg::Json => Format::Json,
            FormatArg::Csv => Format::Csv,
        };
    }
    spec.validate()?;
    Ok(spec)
}

pub fn spec_from_cli(cli: &Cli) -> Result<ExperimentSpec, SpecError> {
    let (command, inline) = match &cli.command {
        Cmd::Run { config } => return read_config(config),
        Cmd::Evolve(a) => (Command::Evolve, a),
        Cmd::Istar(a) => (Command::Istar, a),
        Cmd::Chiorb(a) => (Command::Chiorb, a),
        Cmd::Verify(a) => (Command::Verify, a),
        Cmd::Moments(a) => (Command::Moments, a),
        Cmd::OracleMc(a) => (Command::OracleMc, a),
        Cmd::PdeCheck(a) => (Command::PdeCheck, a),
    };
    spec_from_inline(command, inline)
}

/// SHA-256 of the compact JSON form of the experiment spec.
pub fn spec_hash(spec: &ExperimentSpec) -> String {
    let canonical = serde_json::to_string(spec).expect("spec serializes");
    Sha256::digest(canonical.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn provenance(spec: &ExperimentSpec, outcome: &Outcome) -> Value {
    let c = outcome.counters;
    json!({
        "spec_sha256": spec_hash(spec),
        "versions": {
            "liblab-cli": env!("CARGO_PKG_VERSION"),
            "liblab-core": liblab_core::VERSION,
            "liblab-matrix-oracle": liblab_matrix_oracle::VERSION,
        },
        "counters": {
            "branch_flips": c.branch_flips,
            "dropped_characteristics": c.dropped,
            "refinements": c.refinements,
            "backtracks": c.backtracks,
            "rejected_steps": c.rejected_steps,
        },
    })
}

/// The JSON document: spec, result and provenance. No timestamps, so reruns
/// are byte-identical.
pub fn document(spec: &ExperimentSpec, outcome: &Outcome) -> String {
    output::to_json_string(&json!({
        "command": spec.command.name(),
        "spec": spec,
        "result": outcome.report,
        "provenance": provenance(spec, outcome),
    }))
}

/// Writes the artifacts; returns the paths written. Without an output path
/// the primary artifact goes to stdout and secondary tables are skipped.
pub fn write_outputs(spec: &ExperimentSpec, outcome: &Outcome) -> std::io::Result<Vec<PathBuf>> {
    let primary = match spec.output.format {
        Format::Json => document(spec, outcome),
        Format::Csv => outcome.table.clone(),
    };
    let Some(path) = &spec.output.path else {
        print!("{primary}");
        return Ok(vec![]);
    };
    let path = PathBuf::from(path);
    std::fs::write(&path, primary)?;
    let mut written = vec![path.clone()];
    for (suffix, body) in &outcome.extra {
        let mut p = path.clone().into_os_string();
        p.push(".");
        p.push(suffix);
        let p = PathBuf::from(p);
        std::fs::write(&p, body)?;
        written.push(p);
    }
    Ok(written)
}

/// Runs a parsed command line and returns the process exit code.
pub fn execute(cli: &Cli) -> i32 {
    let spec = match spec_from_cli(cli) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    match run(&spec) {
        Ok(outcome) => match write_outputs(&spec, &outcome) {
            Ok(_) => 0,
            Err(e) => {
                eprintln!("error: writing output: {e}");
                2
            }
        },
        Err(RunError::Invalid(e)) => {
            eprintln!("error: {e}");
            1
        }
        Err(err @ RunError::Numerical { .. }) => {
            let RunError::Numerical { kind, message } = &err else { unreachable!() };
            eprint!(
                "{}",
                output::to_json_string(&json!({
                    "error": kind,
                    "message": message,
                    "spec": spec,
                }))
            );
            err.exit_code()
        }
    }
}

/// Applies `LIBLAB_THREADS` to the global worker pool.
pub fn configure_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("LIBLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| format!("LIBLAB_THREADS = {v:?} is not a positive integer"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}
