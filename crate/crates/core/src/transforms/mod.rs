//! Analytic-function machinery on the disk and the slit plane.
//!
//! The Szegő substitution `z = (2 + ζ + ζ⁻¹)/4` maps the unit disk onto
//! `ℂ \ [0, 1]`; on that chart `L(ζ) = −√(z²−z)·F(z)`, where `F` is the
//! Cauchy transform of the interior measure `μ` and `L` is the Herglotz
//! transform of its circle image `μ̂`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::fourier;
use crate::measures::{CircleMeasure, IntervalMeasure, TraceParams};
use crate::{Error, Result};

pub mod pde;

/// Radii of the boundary-recovery ladder, as `1 − ε`.
pub const RECOVERY_EPS: [f64; 2] = [1e-3, 1e-4];

/// Radii sampled by [`hardy_norm_diag`].
pub const HARDY_RADII: [f64; 3] = [0.9, 0.99, 0.999];

const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Maps `z ∉ [0, 1]` to the root of `ζ² − (4z−2)ζ + 1 = 0` inside the disk.
pub fn szego_to_disk(z: Complex64) -> Result<Complex64> {
    let s = (z * z - z).sqrt();
    let c = 2.0 * z - 1.0;
    let r1 = c + 2.0 * s;
    let r2 = c - 2.0 * s;
    let zeta = if r1.norm() <= r2.norm() { r1 } else { r2 };
    if zeta.norm() >= 1.0 - 1e-14 {
        return Err(Error::BranchFailure { z });
    }
    Ok(zeta)
}

/// `z = (2 + ζ + ζ⁻¹)/4`.
pub fn disk_to_plane(zeta: Complex64) -> Complex64 {
    (2.0 + zeta + zeta.inv()) / 4.0
}

/// The branch of `√(z² − z)` selected by the disk chart, `(ζ − ζ⁻¹)/4`.
/// It is negative at `z = 2`.
pub fn szego_sqrt(zeta: Complex64) -> Complex64 {
    (zeta - zeta.inv()) / 4.0
}

/// `a(1−ζ)/(1+ζ) + b(1+ζ)/(1−ζ)` and its derivative.
pub fn pole_terms(params: &TraceParams, zeta: Complex64) -> (Complex64, Complex64) {
    let (a, b) = (params.a(), params.b());
    let mut v = Complex64::new(0.0, 0.0);
    let mut dv = Complex64::new(0.0, 0.0);
    if a != 0.0 {
        let p = ONE + zeta;
        v += a * (ONE - zeta) / p;
        dv += -2.0 * a / (p * p);
    }
    if b != 0.0 {
        let m = ONE - zeta;
        v += b * (ONE + zeta) / m;
        dv += 2.0 * b / (m * m);
    }
    (v, dv)
}

/// An analytic function on the disk with positive real part, given through
/// its values (and derivatives) at interior points.
pub trait Herglotz: Sync {
    fn params(&self) -> &TraceParams;

    /// `(L(ζ), L'(ζ))`.
    fn value_and_derivative(&self, zeta: Complex64) -> Result<(Complex64, Complex64)>;

    fn value(&self, zeta: Complex64) -> Result<Complex64> {
        Ok(self.value_and_derivative(zeta)?.0)
    }

    /// `L(r e^{iθ_k})` on the grid `θ_k = −π + 2πk/n`.
    fn ring(&self, r: f64, n: usize) -> Result<Vec<Complex64>> {
        (0..n)
            .map(|k| self.value(Complex64::from_polar(r, fourier::theta(k, n))))
            .collect()
    }

    /// `H(ζ) = (L + a(1−ζ)/(1+ζ) + b(1+ζ)/(1−ζ))·L`.
    fn h(&self, zeta: Complex64) -> Result<Complex64> {
        let l = self.value(zeta)?;
        Ok(h_from_l(l, zeta, self.params()))
    }
}

/// `H` from a known value of `L` at `ζ`.
pub fn h_from_l(l: Complex64, zeta: Complex64, params: &TraceParams) -> Complex64 {
    (l + pole_terms(params, zeta).0) * l
}

/// Herglotz transform of a circle measure,
/// `L(ζ) = ∫ (e^{iθ}+ζ)/(e^{iθ}−ζ) μ̂(dθ) = m_0 + 2 Σ_{n≥1} m_n ζⁿ` plus the
/// atom kernels.
#[derive(Debug, Clone)]
pub struct HerglotzField {
    measure: CircleMeasure,
    params: TraceParams,
    /// Cosine moments of the density part, trailing negligible terms dropped.
    coeffs: Vec<f64>,
}

impl HerglotzField {
    pub fn new(measure: CircleMeasure, params: TraceParams) -> Self {
        let n = measure.grid_size();
        let mut coeffs = fourier::cosine_moments(measure.density(), n / 2);
        let floor = 1e-16 * coeffs[0].abs().max(1e-300);
        while coeffs.len() > 1 && coeffs.last().is_some_and(|c| c.abs() <= floor) {
            coeffs.pop();
        }
        Self {
            measure,
            params,
            coeffs,
        }
    }

    pub fn measure(&self) -> &CircleMeasure {
        &self.measure
    }

    pub fn into_measure(self) -> CircleMeasure {
        self.measure
    }

    /// Number of retained Fourier modes.
    pub fn modes(&self) -> usize {
        self.coeffs.len()
    }

    /// Moment generating function `ψ(ζ) = L(ζ) − L(0) = Σ_{n≥1} ζⁿ∫e^{inθ} d(2μ̂)`.
    pub fn psi(&self, zeta: Complex64) -> Complex64 {
        self.l(zeta) - self.l(Complex64::new(0.0, 0.0))
    }

    pub fn l(&self, zeta: Complex64) -> Complex64 {
        herglotz_eval(&self.coeffs, &self.measure, zeta).0
    }
}

fn herglotz_eval(coeffs: &[f64], m: &CircleMeasure, zeta: Complex64) -> (Complex64, Complex64) {
    // Horner for p(ζ) = Σ_{n≥1} c_n ζⁿ and p'(ζ).
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in coeffs[1..].iter().rev() {
        dp = dp * zeta + p;
        p = p * zeta + c;
    }
    // p currently holds Σ c_n ζ^{n−1}; dp its derivative
    let series = p * zeta;
    let dseries = p + dp * zeta;
    let mut l = Complex64::new(coeffs[0], 0.0) + 2.0 * series;
    let mut dl = 2.0 * dseries;
    if m.atom_zero > 0.0 {
        let d = ONE - zeta;
        l += m.atom_zero * (ONE + zeta) / d;
        dl += 2.0 * m.atom_zero / (d * d);
    }
    if m.atom_pi > 0.0 {
        let d = ONE + zeta;
        l += m.atom_pi * (ONE - zeta) / d;
        dl += -2.0 * m.atom_pi / (d * d);
    }
    (l, dl)
}

impl Herglotz for HerglotzField {
    fn params(&self) -> &TraceParams {
        &self.params
    }

    fn value_and_derivative(&self, zeta: Complex64) -> Result<(Complex64, Complex64)> {
        Ok(herglotz_eval(&self.coeffs, &self.measure, zeta))
    }

    fn ring(&self, r: f64, n: usize) -> Result<Vec<Complex64>> {
        fourier::check_grid(n)?;
        let mut v = fourier::power_series_on_ring(&self.coeffs, r, n);
        if self.measure.has_atoms() {
            let atoms = CircleMeasure::new(self.measure.atom_zero, self.measure.atom_pi, vec![0.0; 8])?;
            for (k, vk) in v.iter_mut().enumerate() {
                let zeta = Complex64::from_polar(r, fourier::theta(k, n));
                *vk += herglotz_eval(&[0.0], &atoms, zeta).0;
            }
        }
        Ok(v)
    }
}

/// `L(ζ)` of a circle measure at a single point.
pub fn herglotz_l(measure: &CircleMeasure, zeta: Complex64) -> Complex64 {
    HerglotzField::new(measure.clone(), TraceParams::half()).l(zeta)
}

/// `H(ζ)` of a field.
pub fn herglotz_h(field: &dyn Herglotz, zeta: Complex64) -> Result<Complex64> {
    field.h(zeta)
}

/// Solves `(L + A(ζ))·L = H` for `L` with the principal square root,
/// `L = −A/2 + √(A² + 4H)/2`.
pub fn recover_l_from_h(h: Complex64, zeta: Complex64, params: &TraceParams) -> Result<Complex64> {
    let (a, _) = pole_terms(params, zeta);
    let disc = a * a + 4.0 * h;
    if disc.re < 0.0 && disc.im.abs() <= 1e-14 * disc.norm().max(1.0) {
        return Err(Error::BranchAmbiguity {
            zeta,
            discriminant: disc,
        });
    }
    Ok(0.5 * (disc.sqrt() - a))
}

/// Conjugate function of a grid density; `cos nθ ↦ sin nθ`.
pub fn hilbert_transform(density: &[f64]) -> Vec<f64> {
    fourier::hilbert(density)
}

/// `(1/2π) PV ∫ f(φ) / tan((θ − φ)/2) dφ` by the midpoint rule on `m`
/// nodes placed symmetrically about `θ`, so the singular node is skipped.
/// Exact for trigonometric polynomials of degree below `m`.
pub fn hilbert_pv(f: impl Fn(f64) -> f64, theta: f64, m: usize) -> f64 {
    let h = 2.0 * PI / m as f64;
    (0..m)
        .map(|k| {
            let u = (k as f64 + 0.5) * h - PI;
            f(theta - u) / (0.5 * u).tan()
        })
        .sum::<f64>()
        * h
        / (2.0 * PI)
}

/// Result of [`boundary_recovery`].
#[derive(Debug, Clone)]
pub struct BoundaryRecovery {
    pub density: Vec<f64>,
    /// Grid mass of the extrapolated density minus the exact mass `L(0)`,
    /// before the mass correction.
    pub mass_defect: f64,
    /// Nodes where a negative extrapolated value was clipped to 0.
    pub clipped: usize,
}

/// Boundary density `ĥ(θ) = lim_{r↗1} Re L(re^{iθ})/2π`, recovered from the
/// rings `r = 1 − ε`, `ε ∈ {1e-3, 1e-4}`, with Richardson extrapolation in
/// `ε`. Negative values are clipped, the result is symmetrized and its mass
/// set to `L(0)`, which the grid otherwise loses to aliasing when the
/// density is not smooth.
pub fn boundary_recovery(field: &dyn Herglotz, n: usize) -> Result<BoundaryRecovery> {
    fourier::check_grid(n)?;
    let [e1, e2] = RECOVERY_EPS;
    let coarse = field.ring(1.0 - e1, n)?;
    let fine = field.ring(1.0 - e2, n)?;
    let mass = field.value(Complex64::new(0.0, 0.0))?.re.abs().max(1e-300);
    for (k, (c, f)) in coarse.iter().zip(&fine).enumerate() {
        if e2 * f.re > 1e-3 * mass && f.re > 5.0 * c.re.max(0.0) {
            return Err(Error::DivergenceDetected {
                theta: fourier::theta(k, n),
            });
        }
    }
    let two_pi = 2.0 * PI;
    let mut clipped = 0;
    let mut h: Vec<f64> = coarse
        .iter()
        .zip(&fine)
        .map(|(c, f)| (e1 * f.re - e2 * c.re) / (e1 - e2) / two_pi)
        .map(|v| {
            if v < 0.0 {
                clipped += 1;
                0.0
            } else {
                v
            }
        })
        .collect();
    for k in 1..n / 2 {
        let avg = 0.5 * (h[k] + h[n - k]);
        h[k] = avg;
        h[n - k] = avg;
    }
    let grid_mass = h.iter().sum::<f64>() * fourier::spacing(n);
    if grid_mass > 0.0 {
        let scale = mass / grid_mass;
        h.iter_mut().for_each(|v| *v *= scale);
    }
    Ok(BoundaryRecovery {
        density: h,
        mass_defect: grid_mass - mass,
        clipped,
    })
}

pub fn boundary_density(field: &dyn Herglotz, n: usize) -> Result<Vec<f64>> {
    Ok(boundary_recovery(field, n)?.density)
}

/// [`boundary_density`] wrapped as an atom-free circle measure.
pub fn boundary_measure(field: &dyn Herglotz, n: usize) -> Result<CircleMeasure> {
    CircleMeasure::new(0.0, 0.0, boundary_density(field, n)?)
}

fn distance_to_unit_interval(z: Complex64) -> f64 {
    let x = z.re.clamp(0.0, 1.0);
    (z - x).norm()
}

fn interior_cauchy(m: &IntervalMeasure, z: Complex64) -> Complex64 {
    let re = m.integrate_interior(|x| {
        let d = z - x;
        d.re / d.norm_sqr()
    });
    let im = m.integrate_interior(|x| {
        let d = z - x;
        -d.im / d.norm_sqr()
    });
    Complex64::new(re, im)
}

fn check_off_spectrum(z: Complex64) -> Result<()> {
    let distance = distance_to_unit_interval(z);
    if distance <= 1e-10 {
        return Err(Error::TooCloseToSpectrum { z, distance });
    }
    Ok(())
}

/// `G(z) = ∫_{[0,1]} ν(dx)/(z − x)`, atoms included.
pub fn cauchy_g(nu: &IntervalMeasure, z: Complex64) -> Result<Complex64> {
    check_off_spectrum(z)?;
    Ok(nu.atom0 / z + nu.atom1 / (z - 1.0) + interior_cauchy(nu, z))
}

/// Cauchy transform of the interior part only.
pub fn cauchy_f(mu: &IntervalMeasure, z: Complex64) -> Result<Complex64> {
    check_off_spectrum(z)?;
    Ok(interior_cauchy(mu, z))
}

/// `F(z) = −L(ζ)/√(z²−z)` at `ζ = ζ(z)`.
pub fn f_from_l(l: Complex64, zeta: Complex64) -> Complex64 {
    -l / szego_sqrt(zeta)
}

/// `G(z)` of `ν = μ + (1−min τ)δ_0 + max(τP+τQ−1, 0)δ_1` from `L(ζ(z))`.
pub fn g_from_l(l: Complex64, z: Complex64, zeta: Complex64, params: &TraceParams) -> Complex64 {
    params.forced_atom0() / z + params.forced_atom1() / (z - 1.0) + f_from_l(l, zeta)
}

/// `G(z)` of the flow carried by a Herglotz field.
pub fn cauchy_g_of_field(field: &dyn Herglotz, z: Complex64) -> Result<Complex64> {
    check_off_spectrum(z)?;
    let zeta = szego_to_disk(z)?;
    let l = field.value(zeta)?;
    Ok(g_from_l(l, z, zeta, field.params()))
}

/// One sample of the Hardy-class diagnostic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HardySample {
    pub r: f64,
    pub norm: f64,
}

/// `(∫ |H(re^{iθ})|^{3/2} dθ)^{2/3}` for `r ∈ {0.9, 0.99, 0.999}`.
pub fn hardy_norm_diag(field: &dyn Herglotz, n: usize) -> Result<Vec<HardySample>> {
    HARDY_RADII
        .iter()
        .map(|&r| {
            let ring = field.ring(r, n)?;
            let dt = fourier::spacing(n);
            let integral: f64 = ring
                .iter()
                .enumerate()
                .map(|(k, l)| {
                    let zeta = Complex64::from_polar(r, fourier::theta(k, n));
                    h_from_l(*l, zeta, field.params()).norm().powf(1.5)
                })
                .sum::<f64>()
                * dt;
            Ok(HardySample {
                r,
                norm: integral.powf(2.0 / 3.0),
            })
        })
        .collect()
}
