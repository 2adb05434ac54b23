//! Finite-`n` matrix model of the liberation process `X_t = Q U_t P U_t* Q`.
//!
//! `U_t` is a unitary Brownian motion driven by GUE increments. Only the
//! range of `U_t P U_t*` matters, so the model evolves the `n × rank P`
//! isometry `W_t = U_t V_P` rather than `U_t` itself; `W_t W_t* = U_t P U_t*`.
//! Eigenvalues of the compression are compared with the analytic law
//! `ν_t` through Kolmogorov–Smirnov distances.

use thiserror::Error;

pub mod ks;
pub mod model;

pub use ks::{analytic_laws, compare_to_flow, ks_distance, write_csv, AnalyticCdf, KsPoint};
pub use model::{simulate_spectrum, Initial, Snapshot, Spectrum};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Largest admissible time step.
pub const MAX_DT: f64 = 1e-2;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid matrix model: {0}")]
    InvalidConfig(String),

    #[error("time grids differ: {0}")]
    TimeGridMismatch(String),

    #[error("eigenvalue solver failed: {0}")]
    Eigen(String),

    #[error(transparent)]
    Core(#[from] liblab_core::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatrixModelConfig {
    pub n: usize,
    pub tau_p: f64,
    pub tau_q: f64,
    pub dt: f64,
    pub t_end: f64,
    pub samples: usize,
    pub seed: u64,
}

impl MatrixModelConfig {
    /// `dt = 1e−3`, `t_end = 1`, one sample, seed 0.
    pub fn new(n: usize, tau_p: f64, tau_q: f64) -> Self {
        Self {
            n,
            tau_p,
            tau_q,
            dt: 1e-3,
            t_end: 1.0,
            samples: 1,
            seed: 0,
        }
    }

    pub fn rank_p(&self) -> usize {
        rank(self.n, self.tau_p)
    }

    pub fn rank_q(&self) -> usize {
        rank(self.n, self.tau_q)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.n < 2 {
            return bad(format!("n = {} must be at least 2", self.n));
        }
        for (name, tau) in [("tau_p", self.tau_p), ("tau_q", self.tau_q)] {
            if !tau.is_finite() {
                return bad(format!("{name} = {tau} is not finite"));
            }
            let r = rank(self.n, tau);
            if r < 1 || r > self.n - 1 {
                return bad(format!("{name} = {tau} gives rank {r} outside [1, n−1]"));
            }
        }
        if !(self.dt > 0.0 && self.dt <= MAX_DT) {
            return bad(format!("dt = {} must lie in (0, {MAX_DT}]", self.dt));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end = {} must be finite and nonnegative", self.t_end));
        }
        if self.samples < 1 {
            return bad("samples must be at least 1".into());
        }
        Ok(())
    }
}

fn rank(n: usize, tau: f64) -> usize {
    let r = (n as f64 * tau).round();
    if r <= 0.0 {
        0
    } else {
        r as usize
    }
}
