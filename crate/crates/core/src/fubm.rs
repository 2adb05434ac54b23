//! Moments of the free unitary Brownian motion started from `2μ̂`.
//!
//! For `τP = τQ = ½` the moments `c_n(s) = ∫ e^{inθ} d(2μ̂_{s/2})` obey the
//! triangular system `ċ_1 = −½c_1`, `ċ_n = −(n/2)c_n − Σ_{k<n} k c_k c_{n−k}`.
//! Note the time change: Loewner time `t` is recursion time `s = 2t`.

use serde::Serialize;

use crate::fourier;
use crate::measures::CircleMeasure;
use crate::{Error, Result};

pub const DEFAULT_N_MAX: usize = 32;
/// RK4 step of [`moment_flow`].
pub const FLOW_STEP: f64 = 1e-4;

/// `c_1..c_{N_max}` of `2μ̂` at recursion time `t`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentVector {
    pub t: f64,
    /// `c[n−1] = c_n`
    pub c: Vec<f64>,
}

impl MomentVector {
    pub fn new(t: f64, c: Vec<f64>) -> Self {
        Self { t, c }
    }

    /// `2μ̂ = δ_0`: all moments one.
    pub fn delta(n_max: usize) -> Self {
        Self::new(0.0, vec![1.0; n_max])
    }

    /// Uniform measure: all moments zero.
    pub fn haar(n_max: usize) -> Self {
        Self::new(0.0, vec![0.0; n_max])
    }

    pub fn n_max(&self) -> usize {
        self.c.len()
    }

    /// `c_n`, with `c_0 = 1`.
    pub fn get(&self, n: usize) -> f64 {
        if n == 0 {
            1.0
        } else {
            self.c[n - 1]
        }
    }
}

fn rhs(c: &[f64], out: &mut [f64]) {
    for n in 1..=c.len() {
        let mut s = -0.5 * n as f64 * c[n - 1];
        for k in 1..n {
            s -= k as f64 * c[k - 1] * c[n - k - 1];
        }
        out[n - 1] = s;
    }
}

/// Advances `c0` by recursion time `t` with RK4 (step at most [`FLOW_STEP`]).
pub fn moment_flow(c0: &MomentVector, t: f64) -> MomentVector {
    let n = c0.n_max();
    let steps = (t / FLOW_STEP).ceil().max(0.0) as usize;
    let mut c = c0.c.clone();
    if steps == 0 {
        return MomentVector::new(c0.t + t, c);
    }
    let h = t / steps as f64;
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) =
        (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for _ in 0..steps {
        rhs(&c, &mut k1);
        for i in 0..n {
            tmp[i] = c[i] + 0.5 * h * k1[i];
        }
        rhs(&tmp, &mut k2);
        for i in 0..n {
            tmp[i] = c[i] + 0.5 * h * k2[i];
        }
        rhs(&tmp, &mut k3);
        for i in 0..n {
            tmp[i] = c[i] + h * k3[i];
        }
        rhs(&tmp, &mut k4);
        for i in 0..n {
            c[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    MomentVector::new(c0.t + t, c)
}

/// Moments of `2μ̂` for a measure of mass ½, atoms included.
pub fn moments_of(measure: &CircleMeasure, n_max: usize) -> MomentVector {
    let m = measure.moments(n_max + 1);
    MomentVector::new(0.0, m[1..].iter().map(|v| 2.0 * v).collect())
}

/// Density-level reconstruction of `μ̂` (mass ½) from the moments of `2μ̂`.
///
/// Uses de la Vallée-Poussin means `2σ_{2m} − σ_m` with `2m = N_max`, which
/// reproduce `c_1..c_m` exactly and damp the rest linearly; negative values
/// are clipped and the mass restored.
pub fn measure_from_moments(mv: &MomentVector, grid: usize) -> Result<CircleMeasure> {
    fourier::check_grid(grid)?;
    let n_max = mv.n_max();
    if n_max < 2 {
        return Err(Error::InvalidMeasure("need at least two moments".into()));
    }
    let m = n_max / 2;
    // σ_K with weights (1 − n/K)₊, so 2σ_{2m} − σ_m has weights 1 up to m
    // and 2 − n/m beyond
    let weight = |n: usize| -> f64 {
        if n <= m {
            1.0
        } else {
            (2.0 - n as f64 / m as f64).max(0.0)
        }
    };
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut density: Vec<f64> = fourier::thetas(grid)
        .iter()
        .map(|th| {
            let mut s = 1.0;
            for n in 1..=n_max {
                s += 2.0 * weight(n) * mv.get(n) * (n as f64 * th).cos();
            }
            // μ̂ = ½·(2μ̂)
            (0.5 * s / two_pi).max(0.0)
        })
        .collect();
    let mass: f64 = density.iter().sum::<f64>() * fourier::spacing(grid);
    if mass > 0.0 {
        density.iter_mut().for_each(|v| *v *= 0.5 / mass);
    }
    CircleMeasure::new(0.0, 0.0, density)
}
