//! FFT utilities on the uniform periodic grid `θ_k = −π + 2πk/N`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::{Error, Result};

pub fn check_grid(n: usize) -> Result<()> {
    if n < 8 || !n.is_power_of_two() {
        return Err(Error::InvalidGrid(format!(
            "grid size must be a power of two >= 8, got {n}"
        )));
    }
    Ok(())
}

#[inline]
pub fn theta(k: usize, n: usize) -> f64 {
    -PI + 2.0 * PI * k as f64 / n as f64
}

#[inline]
pub fn spacing(n: usize) -> f64 {
    2.0 * PI / n as f64
}

pub fn thetas(n: usize) -> Vec<f64> {
    (0..n).map(|k| theta(k, n)).collect()
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut planner = FftPlanner::new();
    if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    }
}

/// Fourier coefficients `ĉ_n = (1/N) Σ_k f_k e^{−inθ_k}` for `n = 0..N`,
/// taken with respect to the shifted grid origin `θ_0 = −π`.
pub fn coefficients(values: &[f64]) -> Vec<Complex64> {
    let n = values.len();
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    plan(n, false).process(&mut buf);
    let scale = 1.0 / n as f64;
    for (j, c) in buf.iter_mut().enumerate() {
        // e^{−inθ_k} = e^{inπ} e^{−2πink/N}
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        *c *= sign * scale;
    }
    buf
}

/// Inverse of [`coefficients`]: `f_k = Σ_n ĉ_n e^{inθ_k}`.
pub fn synthesize(coeffs: &[Complex64]) -> Vec<Complex64> {
    let n = coeffs.len();
    let mut buf: Vec<Complex64> = coeffs
        .iter()
        .enumerate()
        .map(|(j, &c)| if j % 2 == 0 { c } else { -c })
        .collect();
    plan(n, true).process(&mut buf);
    buf
}

/// Trigonometric moments `∫ cos(nθ) f(θ) dθ` for `n = 0..count` of a grid
/// density, by the periodic trapezoid rule.
pub fn cosine_moments(density: &[f64], count: usize) -> Vec<f64> {
    let n = density.len();
    let c = coefficients(density);
    let two_pi = 2.0 * PI;
    (0..count.min(n / 2 + 1)).map(|j| two_pi * c[j].re).collect()
}

/// Conjugate function via the multiplier `e^{inθ} ↦ −i·sgn(n)·e^{inθ}`.
/// The mean and the Nyquist mode are annihilated.
pub fn hilbert(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut c = coefficients(values);
    c[0] = Complex64::new(0.0, 0.0);
    c[n / 2] = Complex64::new(0.0, 0.0);
    let minus_i = Complex64::new(0.0, -1.0);
    for (j, cj) in c.iter_mut().enumerate().skip(1) {
        if j < n / 2 {
            *cj *= minus_i;
        } else if j > n / 2 {
            *cj *= -minus_i;
        }
    }
    synthesize(&c).into_iter().map(|z| z.re).collect()
}

/// Trigonometric interpolant evaluated at the half-shifted nodes
/// `θ_k + π/N`. The Nyquist mode is dropped.
pub fn half_shift(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut c = coefficients(values);
    c[n / 2] = Complex64::new(0.0, 0.0);
    let h = spacing(n) / 2.0;
    for (j, cj) in c.iter_mut().enumerate() {
        let freq = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
        *cj *= Complex64::from_polar(1.0, freq * h);
    }
    synthesize(&c).into_iter().map(|z| z.re).collect()
}

/// Values of `a_0 + 2 Σ_{n≥1} a_n r^n e^{inθ_k}` on the grid, where `a` holds
/// real coefficients (at most `N/2` of them are used).
pub fn power_series_on_ring(a: &[f64], r: f64, n: usize) -> Vec<Complex64> {
    let mut c = vec![Complex64::new(0.0, 0.0); n];
    let mut rn = 1.0;
    for (j, &aj) in a.iter().enumerate().take(n / 2) {
        c[j] = Complex64::new(if j == 0 { aj } else { 2.0 * aj * rn }, 0.0);
        rn *= r;
    }
    synthesize(&c)
}
