//! Experiment description: parsed from JSON or assembled from flags.

use liblab_core::measures::{MeasureSpec, TraceParams};
use liblab_core::DEFAULT_GRID;
use liblab_matrix_oracle::{MatrixModelConfig, MAX_DT};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Evolve,
    Istar,
    Chiorb,
    Verify,
    Moments,
    OracleMc,
    PdeCheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Evolve => "evolve",
            Command::Istar => "istar",
            Command::Chiorb => "chiorb",
            Command::Verify => "verify",
            Command::Moments => "moments",
            Command::OracleMc => "oracle-mc",
            Command::PdeCheck => "pde-check",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    /// `None` writes the primary artifact to stdout.
    #[serde(default)]
    pub path: Option<String>,
    #[serde(default)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Local tolerance of the `i*` time quadrature.
    #[serde(default = "default_quad")]
    pub quadrature: f64,
    /// Largest `|i* + χ_orb|` accepted by `verify`.
    #[serde(default = "default_gap")]
    pub gap: f64,
    /// Time step of the finite-difference PDE residual (halved once).
    #[serde(default = "default_pde_step")]
    pub pde_step: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            quadrature: default_quad(),
            gap: default_gap(),
            pde_step: default_pde_step(),
        }
    }
}

fn default_quad() -> f64 {
    1e-7
}
fn default_gap() -> f64 {
    2e-3
}
fn default_pde_step() -> f64 {
    1e-2
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pair {
    /// `Q` rotated by an independent Haar unitary.
    #[default]
    Free,
    /// `P = Q`; needs `τP = τQ`.
    Equal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSpec {
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub pair: Pair,
}

impl Default for OracleSpec {
    fn default() -> Self {
        Self {
            n: default_n(),
            samples: default_samples(),
            dt: default_dt(),
            seed: 0,
            pair: Pair::Free,
        }
    }
}

fn default_n() -> usize {
    500
}
fn default_samples() -> usize {
    8
}
fn default_dt() -> f64 {
    MAX_DT
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub command: Command,
    pub params: TraceParams,
    pub initial_measure: MeasureSpec,
    #[serde(default)]
    pub times: Vec<f64>,
    #[serde(default = "default_grid")]
    pub grid_size: usize,
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub oracle: OracleSpec,
    #[serde(default)]
    pub output: Output,
}

fn default_grid() -> usize {
    DEFAULT_GRID
}
fn default_t_max() -> f64 {
    20.0
}
fn default_n_max() -> usize {
    liblab_core::fubm::DEFAULT_N_MAX
}

/// A rejected spec. `line`/`column` point into the JSON source when there is one.
#[derive(Debug, Clone, PartialEq)]
pub struct SpecError {
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl SpecError {
    pub fn new(message: impl Into<String>) -> Self {
        Self {
            line: None,
            column: None,
            message: message.into(),
        }
    }
}

impl std::fmt::Display for SpecError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match (self.line, self.column) {
            (Some(l), Some(c)) => write!(f, "line {l}, column {c}: {}", self.message),
            _ => write!(f, "{}", self.message),
        }
    }
}

impl ExperimentSpec {
    /// Parses and validates. Unknown keys are rejected.
    pub fn from_json(text: &str) -> Result<Self, SpecError> {
        let spec: Self = serde_json::from_str(text).map_err(|e| SpecError {
            line: Some(e.line()),
            column: Some(e.column()),
            message: e.to_string(),
        })?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        let err = |m: String| Err(SpecError::new(m));
        liblab_core::fourier::check_grid(self.grid_size).map_err(|e| SpecError::new(e.to_string()))?;
        if let Some(t) = self.times.iter().find(|t| !(**t >= 0.0 && t.is_finite())) {
            return err(format!("time {t} must be finite and nonnegative"));
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return err(format!("t_max = {} must be positive", self.t_max));
        }
        if self.n_max < 2 {
            return err(format!("n_max = {} must be at least 2", self.n_max));
        }
        let tol = self.tolerances;
        for (name, v) in [("quadrature", tol.quadrature), ("gap", tol.gap), ("pde_step", tol.pde_step)] {
            if !(v > 0.0 && v.is_finite()) {
                return err(format!("tolerances.{name} = {v} must be positive"));
            }
        }
        match self.command {
            Command::Evolve | Command::Moments | Command::OracleMc | Command::PdeCheck if self.times.is_empty() => {
                return err(format!("{} needs at least one time", self.command.name()));
            }
            Command::Moments if !self.params.is_half_trace() => {
                return err("moments runs the recursion for tau_p = tau_q = 0.5 only".into());
            }
            Command::PdeCheck => {
                if let Some(t) = self.times.iter().find(|t| **t < tol.pde_step) {
                    return err(format!("pde-check time {t} is below tolerances.pde_step"));
                }
            }
            Command::OracleMc => {
                self.oracle_config().validate().map_err(|e| SpecError::new(e.to_string()))?;
                let dt = self.oracle.dt;
                if let Some(t) = self.times.iter().find(|t| ((*t / dt).round() * dt - *t).abs() > 1e-9 * t.max(1.0)) {
                    return err(format!("oracle-mc time {t} is not a multiple of oracle.dt = {dt}"));
                }
                if self.oracle.pair == Pair::Equal && self.params.tau_p() != self.params.tau_q() {
                    return err("pair \"equal\" needs tau_p = tau_q".into());
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Matrix model for `oracle-mc`; `t_end` is the last output time.
    pub fn oracle_config(&self) -> MatrixModelConfig {
        let o = self.oracle;
        MatrixModelConfig {
            n: o.n,
            tau_p: self.params.tau_p(),
            tau_q: self.params.tau_q(),
            dt: o.dt,
            t_end: self.times.iter().copied().fold(0.0, f64::max),
            samples: o.samples,
            seed: o.seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
  "command": "verify",
  "params": {"tau_p": 0.5, "tau_q": 0.5},
  "initial_measure": {"density": {"kind": "named", "name": "haar_half"}}
}"#;

    #[test]
    fn defaults_fill_in() {
        let s = ExperimentSpec::from_json(MINIMAL).unwrap();
        assert_eq!(s.grid_size, DEFAULT_GRID);
        assert_eq!(s.output.format, Format::Json);
        assert_eq!(s.oracle.n, 500);
    }

    #[test]
    fn round_trip_is_lossless() {
        let s = ExperimentSpec::from_json(MINIMAL).unwrap();
        let again = ExperimentSpec::from_json(&s.to_json()).unwrap();
        assert_eq!(s, again);
        assert_eq!(s.to_json(), again.to_json());
    }

    #[test]
    fn unknown_keys_point_at_their_position() {
        let bad = MINIMAL.replace("\"command\"", "\"colour\": 1,\n  \"command\"");
        let e = ExperimentSpec::from_json(&bad).unwrap_err();
        assert_eq!(e.line, Some(2));
        assert!(e.message.contains("colour"), "{}", e.message);
        let bad = MINIMAL.replace("\"kind\": \"named\"", "\"kind\": \"named\", \"extra\": 0");
        assert!(ExperimentSpec::from_json(&bad).is_err());
    }

    #[test]
    fn invalid_values_are_rejected() {
        let bad = MINIMAL.replace("\"tau_q\": 0.5", "\"tau_q\": 1.5");
        let e = ExperimentSpec::from_json(&bad).unwrap_err();
        assert_eq!(e.line, Some(3));
        let mut s = ExperimentSpec::from_json(MINIMAL).unwrap();
        s.command = Command::Evolve;
        assert!(s.validate().is_err());
        s.times = vec![1.0];
        s.validate().unwrap();
        s.grid_size = 30;
        assert!(s.validate().is_err());
        s.grid_size = 64;
        s.command = Command::OracleMc;
        s.oracle.dt = 0.1;
        assert!(s.validate().is_err());
        s.oracle.dt = 0.01;
        s.times = vec![0.005];
        assert!(s.validate().is_err());
        s.times = vec![0.05];
        s.validate().unwrap();
        s.times = vec![0.005];
        s.command = Command::PdeCheck;
        assert!(s.validate().is_err());
    }
}
