//! Measures on `[0, 1]` and symmetric measures on the circle.
//!
//! A spectral distribution `ν` of `QPQ` on `[0, 1]` splits into the atoms
//! forced by the traces of `P` and `Q` and a remainder `μ`. Through
//! `x = cos²(θ/2)` the remainder becomes an even measure `μ̂` on `(−π, π]`
//! whose interior part has density `ĥ(θ) = h(x)|sin θ|/4` with respect to
//! `dθ`. Atoms of `μ` at `x = 1` and `x = 0` are kept exactly, as atoms of
//! `μ̂` at `θ = 0` and `θ = π`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::fourier::{self, check_grid};
use crate::{Error, Result};

/// Tolerance used to decide whether residual atoms vanish.
pub const GENERIC_POSITION_TOL: f64 = 1e-8;

/// The pair `(τ(P), τ(Q))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTraceParams", into = "RawTraceParams")]
pub struct TraceParams {
    tau_p: f64,
    tau_q: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTraceParams {
    tau_p: f64,
    tau_q: f64,
}

impl TryFrom<RawTraceParams> for TraceParams {
    type Error = Error;
    fn try_from(raw: RawTraceParams) -> Result<Self> {
        TraceParams::new(raw.tau_p, raw.tau_q)
    }
}

impl From<TraceParams> for RawTraceParams {
    fn from(p: TraceParams) -> Self {
        RawTraceParams {
            tau_p: p.tau_p,
            tau_q: p.tau_q,
        }
    }
}

impl TraceParams {
    pub fn new(tau_p: f64, tau_q: f64) -> Result<Self> {
        for (name, v) in [("tau_p", tau_p), ("tau_q", tau_q)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidParams(format!(
                    "{name} must lie in (0, 1), got {v}"
                )));
            }
        }
        Ok(Self { tau_p, tau_q })
    }

    /// `τ(P) = τ(Q) = 1/2`.
    pub fn half() -> Self {
        Self {
            tau_p: 0.5,
            tau_q: 0.5,
        }
    }

    pub fn tau_p(&self) -> f64 {
        self.tau_p
    }

    pub fn tau_q(&self) -> f64 {
        self.tau_q
    }

    /// `|τ(P) − τ(Q)|`, the weight of the driving atom at `θ = π`.
    pub fn a(&self) -> f64 {
        (self.tau_p - self.tau_q).abs()
    }

    /// `|τ(P) + τ(Q) − 1|`, the weight of the driving atom at `θ = 0`.
    pub fn b(&self) -> f64 {
        (self.tau_p + self.tau_q - 1.0).abs()
    }

    pub fn is_half_trace(&self) -> bool {
        self.a() == 0.0 && self.b() == 0.0
    }

    /// Weight of `ν` at `x = 0` forced in generic position.
    pub fn forced_atom0(&self) -> f64 {
        1.0 - self.tau_p.min(self.tau_q)
    }

    /// Weight of `ν` at `x = 1` forced in generic position.
    pub fn forced_atom1(&self) -> f64 {
        (self.tau_p + self.tau_q - 1.0).max(0.0)
    }

    /// Mass of `μ` (and of `μ̂`), `(1 − a − b)/2`.
    pub fn interior_mass(&self) -> f64 {
        (1.0 - self.a() - self.b()) / 2.0
    }

    /// Endpoints `[α, β]` of the interior support of the free-pair law.
    pub fn free_support(&self) -> (f64, f64) {
        let (p, q) = (self.tau_p, self.tau_q);
        let centre = p + q - 2.0 * p * q;
        let radius = 2.0 * (p * q * (1.0 - p) * (1.0 - q)).sqrt();
        ((centre - radius).max(0.0), (centre + radius).min(1.0))
    }
}

/// Lagrange weights evaluating at `u = 0` the polynomial through
/// `u_i = i²`, `i = 1..=5`.
fn even_extrapolation_weights() -> [f64; 5] {
    let mut w = [0.0; 5];
    for (i, wi) in w.iter_mut().enumerate() {
        let ui = ((i + 1) * (i + 1)) as f64;
        *wi = (0..5)
            .filter(|&j| j != i)
            .map(|j| {
                let uj = ((j + 1) * (j + 1)) as f64;
                -uj / (ui - uj)
            })
            .product();
    }
    w
}

#[inline]
fn x_of_theta(theta: f64) -> f64 {
    let c = (theta / 2.0).cos();
    c * c
}

/// Measure on `[0, 1]`: atoms at the endpoints plus a density `h(x)`
/// sampled at `x_j = cos²(θ_j/2)`, `θ_j = πj/M`, `j = 1..M−1`, where
/// `M = grid_size`. The density vector therefore has `M − 1` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalMeasure {
    pub atom0: f64,
    pub atom1: f64,
    density: Vec<f64>,
    grid_size: usize,
}

impl IntervalMeasure {
    pub fn new(atom0: f64, atom1: f64, density: Vec<f64>, grid_size: usize) -> Result<Self> {
        check_grid(grid_size)?;
        if density.len() != grid_size - 1 {
            return Err(Error::InvalidMeasure(format!(
                "expected {} interior samples, got {}",
                grid_size - 1,
                density.len()
            )));
        }
        if atom0 < 0.0 || atom1 < 0.0 || density.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::InvalidMeasure(
                "weights and densities must be nonnegative".into(),
            ));
        }
        Ok(Self {
            atom0,
            atom1,
            density,
            grid_size,
        })
    }

    /// Samples a density function `h` on the interior nodes.
    pub fn from_density_fn(
        atom0: f64,
        atom1: f64,
        grid_size: usize,
        h: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        check_grid(grid_size)?;
        let density = (1..grid_size)
            .map(|j| h(Self::node_x_for(j, grid_size)))
            .collect();
        Self::new(atom0, atom1, density, grid_size)
    }

    fn node_theta_for(j: usize, m: usize) -> f64 {
        PI * j as f64 / m as f64
    }

    fn node_x_for(j: usize, m: usize) -> f64 {
        x_of_theta(Self::node_theta_for(j, m))
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    /// `(x_j, h(x_j))` for the interior nodes, in decreasing `x`.
    pub fn samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.density
            .iter()
            .enumerate()
            .map(move |(i, &h)| (Self::node_x_for(i + 1, self.grid_size), h))
    }

    /// `2ĥ(θ)` on `θ_j = πj/M`, `j = 0..=M`. The two endpoint values are
    /// extrapolated from the even extension (polynomial in `θ²` through the
    /// five nearest interior nodes).
    fn theta_weights(&self) -> Vec<f64> {
        let m = self.grid_size;
        let mut f = vec![0.0; m + 1];
        for j in 1..m {
            let th = Self::node_theta_for(j, m);
            f[j] = self.density[j - 1] * th.sin() / 2.0;
        }
        let w = even_extrapolation_weights();
        f[0] = w.iter().enumerate().map(|(i, wi)| wi * f[i + 1]).sum::<f64>().max(0.0);
        f[m] = w.iter().enumerate().map(|(i, wi)| wi * f[m - 1 - i]).sum::<f64>().max(0.0);
        f
    }

    /// `∫_{(0,1)} h(x) dx`.
    pub fn interior_mass(&self) -> f64 {
        let f = self.theta_weights();
        let m = self.grid_size;
        let dt = PI / m as f64;
        dt * (0.5 * f[0] + f[1..m].iter().sum::<f64>() + 0.5 * f[m])
    }

    pub fn total_mass(&self) -> f64 {
        self.atom0 + self.atom1 + self.interior_mass()
    }

    /// Distribution function at the nodes, in increasing `x`, starting with
    /// `(0, atom0)` and ending with the left limit at `x = 1` (the atom at 1
    /// is not included). Trapezoid rule in `θ`, so the last value equals
    /// `atom0 + interior_mass()`.
    pub fn cdf_nodes(&self) -> Vec<(f64, f64)> {
        let f = self.theta_weights();
        let m = self.grid_size;
        let dt = PI / m as f64;
        let mut out = Vec::with_capacity(m + 1);
        let mut acc = self.atom0;
        out.push((0.0, acc));
        // θ from π down to 0 is x from 0 up to 1
        for j in (0..m).rev() {
            acc += 0.5 * dt * (f[j] + f[j + 1]);
            let x = if j == 0 { 1.0 } else { Self::node_x_for(j, m) };
            out.push((x, acc));
        }
        out
    }

    /// `∫ φ(x) h(x) dx` by the trapezoid rule in `θ`.
    pub fn integrate_interior(&self, phi: impl Fn(f64) -> f64) -> f64 {
        let f = self.theta_weights();
        let m = self.grid_size;
        let dt = PI / m as f64;
        let mut acc = 0.5 * (f[0] * phi(1.0) + f[m] * phi(0.0));
        for (j, fj) in f.iter().enumerate().take(m).skip(1) {
            acc += fj * phi(Self::node_x_for(j, m));
        }
        acc * dt
    }
}

/// Even measure on `(−π, π]`: atoms at `θ = 0` and `θ = π` plus a density
/// w.r.t. `dθ` on the grid `θ_k = −π + 2πk/N`.
#[derive(Debug, Clone, PartialEq)]
pub struct CircleMeasure {
    pub atom_zero: f64,
    pub atom_pi: f64,
    density: Vec<f64>,
}

impl CircleMeasure {
    /// Builds a measure from grid samples. Densities must be nonnegative and
    /// even to within `1e-8` relative; they are then symmetrized exactly.
    pub fn new(atom_zero: f64, atom_pi: f64, mut density: Vec<f64>) -> Result<Self> {
        let n = density.len();
        check_grid(n)?;
        if !(atom_zero >= 0.0 && atom_pi >= 0.0) {
            return Err(Error::InvalidMeasure("atom weights must be nonnegative".into()));
        }
        if density.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::InvalidMeasure("density must be nonnegative".into()));
        }
        let scale = density.iter().fold(0.0_f64, |m, v| m.max(*v)).max(1e-300);
        for k in 1..n / 2 {
            let (lo, hi) = (density[k], density[n - k]);
            if (lo - hi).abs() > 1e-8 * scale {
                return Err(Error::InvalidMeasure(format!(
                    "density is not even: h[{k}] = {lo}, h[{}] = {hi}",
                    n - k
                )));
            }
            let avg = 0.5 * (lo + hi);
            density[k] = avg;
            density[n - k] = avg;
        }
        Ok(Self {
            atom_zero,
            atom_pi,
            density,
        })
    }

    pub fn from_density_fn(
        grid_size: usize,
        atom_zero: f64,
        atom_pi: f64,
        h: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        check_grid(grid_size)?;
        let n = grid_size;
        let mut density = vec![0.0; n];
        for k in 0..=n / 2 {
            let v = h(fourier::theta(k, n).abs());
            density[k] = v;
            if k > 0 && k < n / 2 {
                density[n - k] = v;
            }
        }
        Self::new(atom_zero, atom_pi, density)
    }

    /// The zero measure.
    pub fn zero(grid_size: usize) -> Result<Self> {
        check_grid(grid_size)?;
        Self::new(0.0, 0.0, vec![0.0; grid_size])
    }

    /// Constant density `1/(4π)`: the free pair with `τ(P) = τ(Q) = 1/2`.
    pub fn haar_half(grid_size: usize) -> Result<Self> {
        Self::from_density_fn(grid_size, 0.0, 0.0, |_| 1.0 / (4.0 * PI))
    }

    /// `P = Q`: all of `μ̂` sits at `θ = 0`.
    pub fn delta_zero(params: &TraceParams, grid_size: usize) -> Result<Self> {
        check_grid(grid_size)?;
        Self::new(params.interior_mass(), 0.0, vec![0.0; grid_size])
    }

    /// `ĥ(θ) = (1 + cos θ)/(4π)`.
    pub fn raised_cosine(grid_size: usize) -> Result<Self> {
        Self::from_density_fn(grid_size, 0.0, 0.0, |t| (1.0 + t.cos()) / (4.0 * PI))
    }

    /// Circle form of the free-pair law, `ĥ = √((β−x)(x−α))/(2π|sin θ|)` on
    /// the image of `[α, β]`.
    pub fn free_projections(params: &TraceParams, grid_size: usize) -> Result<Self> {
        let (alpha, beta) = params.free_support();
        let mut m =
            Self::from_density_fn(grid_size, 0.0, 0.0, |t| free_pair_circle_density(alpha, beta, t))?;
        // square-root edges cost the grid O(Δθ^{3/2}) of mass; restore it exactly
        let scale = params.interior_mass() / m.interior_mass();
        m.density.iter_mut().for_each(|v| *v *= scale);
        Ok(m)
    }

    /// Smooth density `∝ (x−α)³(β−x)³` on `[α, β] ⊂ (0, 1)`, scaled to the
    /// generic-position mass.
    pub fn bump(params: &TraceParams, lo: f64, hi: f64, grid_size: usize) -> Result<Self> {
        if !(0.0 < lo && lo < hi && hi < 1.0) {
            return Err(Error::InvalidMeasure(format!(
                "bump support [{lo}, {hi}] must lie inside (0, 1)"
            )));
        }
        let width = hi - lo;
        let norm = params.interior_mass() * 140.0 / width.powi(7);
        Self::from_density_fn(grid_size, 0.0, 0.0, |t| {
            let x = x_of_theta(t);
            if x <= lo || x >= hi {
                0.0
            } else {
                norm * ((x - lo) * (hi - x)).powi(3) * t.sin().abs() / 4.0
            }
        })
    }

    pub fn grid_size(&self) -> usize {
        self.density.len()
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn has_atoms(&self) -> bool {
        self.atom_zero > 0.0 || self.atom_pi > 0.0
    }

    pub fn interior_mass(&self) -> f64 {
        fourier::spacing(self.grid_size()) * self.density.iter().sum::<f64>()
    }

    pub fn total_mass(&self) -> f64 {
        self.interior_mass() + self.atom_zero + self.atom_pi
    }

    /// `m_n = ∫ cos(nθ) μ̂(dθ)` for `n = 0..count`, atoms included.
    pub fn moments(&self, count: usize) -> Vec<f64> {
        let mut m = fourier::cosine_moments(&self.density, count);
        for (n, mn) in m.iter_mut().enumerate() {
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            *mn += self.atom_zero + sign * self.atom_pi;
        }
        m
    }

    /// Density at an arbitrary angle by periodic cubic (Catmull–Rom)
    /// interpolation of the grid values.
    pub fn density_at(&self, theta: f64) -> f64 {
        let n = self.grid_size() as isize;
        let dt = fourier::spacing(n as usize);
        let s = (theta + PI).rem_euclid(2.0 * PI) / dt;
        let k = s.floor() as isize;
        let u = s - k as f64;
        let at = |i: isize| self.density[i.rem_euclid(n) as usize];
        let (p0, p1, p2, p3) = (at(k - 1), at(k), at(k + 1), at(k + 2));
        let v = p1
            + 0.5
                * u
                * (p2 - p0 + u * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + u * (3.0 * (p1 - p2) + p3 - p0)));
        v.max(0.0)
    }
}

/// Circle density of the free-pair law with interior support `[α, β]`.
pub fn free_pair_circle_density(alpha: f64, beta: f64, theta: f64) -> f64 {
    let x = x_of_theta(theta);
    let s = theta.sin().abs();
    if s < 1e-12 {
        // limits at θ = 0 (x = 1) and θ = π (x = 0)
        if x > 0.5 {
            if beta >= 1.0 - 1e-14 {
                (1.0 - alpha).max(0.0).sqrt() / (4.0 * PI)
            } else {
                0.0
            }
        } else if alpha <= 1e-14 {
            beta.sqrt() / (4.0 * PI)
        } else {
            0.0
        }
    } else if x <= alpha || x >= beta {
        0.0
    } else {
        ((beta - x) * (x - alpha)).sqrt() / (2.0 * PI * s)
    }
}

/// Interior density of the free-pair law on `[0, 1]`.
pub fn free_pair_interval_density(params: &TraceParams, x: f64) -> f64 {
    let (alpha, beta) = params.free_support();
    if x <= alpha || x >= beta || x <= 0.0 || x >= 1.0 {
        0.0
    } else {
        ((beta - x) * (x - alpha)).sqrt() / (2.0 * PI * x * (1.0 - x))
    }
}

/// Free-pair law `ν` of `QPQ` on `[0, 1]`.
pub fn free_pair_interval(params: &TraceParams, grid_size: usize) -> Result<IntervalMeasure> {
    let mut m = IntervalMeasure::from_density_fn(
        params.forced_atom0(),
        params.forced_atom1(),
        grid_size,
        |x| free_pair_interval_density(params, x),
    )?;
    let scale = params.interior_mass() / m.interior_mass();
    m.density.iter_mut().for_each(|v| *v *= scale);
    Ok(m)
}

/// Result of [`decompose`].
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub mu: IntervalMeasure,
    pub generic_position: bool,
}

/// Removes the atoms forced by the traces: `μ = ν − (1−min τ)δ_0 − max(τP+τQ−1, 0)δ_1`.
pub fn decompose(nu: &IntervalMeasure, params: &TraceParams) -> Result<Decomposition> {
    let mass = nu.total_mass();
    if (mass - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidMeasure(format!(
            "spectral distribution must have mass 1, got {mass}"
        )));
    }
    let (c0, c1) = (params.forced_atom0(), params.forced_atom1());
    let residual = |at: f64, available: f64, required: f64| {
        let r = available - required;
        if r < -GENERIC_POSITION_TOL {
            Err(Error::NegativeMass {
                at,
                available,
                required,
            })
        } else {
            Ok(r.max(0.0))
        }
    };
    let r0 = residual(0.0, nu.atom0, c0)?;
    let r1 = residual(1.0, nu.atom1, c1)?;
    let generic_position = r0 <= GENERIC_POSITION_TOL && r1 <= GENERIC_POSITION_TOL;
    let (r0, r1) = if generic_position { (0.0, 0.0) } else { (r0, r1) };
    Ok(Decomposition {
        mu: IntervalMeasure {
            atom0: r0,
            atom1: r1,
            density: nu.density.clone(),
            grid_size: nu.grid_size,
        },
        generic_position,
    })
}

/// Pushes `μ` to the circle. The result lives on a grid of `2M` nodes.
/// Atoms at `x = 1` and `x = 0` become atoms at `θ = 0` and `θ = π`.
pub fn to_circle(mu: &IntervalMeasure) -> Result<CircleMeasure> {
    let m = mu.grid_size;
    let n = 2 * m;
    let f = mu.theta_weights();
    let mut density = vec![0.0; n];
    // θ_k = −π + πk/M, so k = M ± j sits at θ = ±πj/M.
    for (j, fj) in f.iter().enumerate() {
        let h = 0.5 * fj;
        density[(m + j) % n] = h;
        if j > 0 && j < m {
            density[m - j] = h;
        }
    }
    CircleMeasure::new(mu.atom1, mu.atom0, density)
}

/// Inverse of [`to_circle`] followed by re-insertion of the forced atoms.
pub fn from_circle(hat_mu: &CircleMeasure, params: &TraceParams) -> Result<IntervalMeasure> {
    let n = hat_mu.grid_size();
    let m = n / 2;
    let density = (1..m)
        .map(|j| {
            let th = PI * j as f64 / m as f64;
            4.0 * hat_mu.density[m + j] / th.sin()
        })
        .collect();
    IntervalMeasure::new(
        params.forced_atom0() + hat_mu.atom_pi,
        params.forced_atom1() + hat_mu.atom_zero,
        density,
        m,
    )
}

/// JSON description of an initial circle measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureSpec {
    #[serde(default)]
    pub atoms: AtomSpec,
    pub density: DensitySpec,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomSpec {
    #[serde(default)]
    pub zero: f64,
    #[serde(default)]
    pub pi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensitySpec {
    /// Grid samples of `ĥ` on `θ_k = −π + 2πk/N`.
    Samples { values: Vec<f64> },
    Named { name: Preset },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// `ĥ = 1/(4π)`.
    HaarHalf,
    /// Free-pair law for the given traces.
    FreeProjections,
    /// `μ̂ = (1−a−b)/2 · δ_0`.
    DeltaZero,
    /// `ĥ = (1 + cos θ)/(4π)`.
    RaisedCosine,
    /// Smooth bump supported in `x ∈ [0.2, 0.8]`.
    Bump,
}

impl Preset {
    pub fn build(self, params: &TraceParams, grid_size: usize) -> Result<CircleMeasure> {
        match self {
            Preset::HaarHalf => CircleMeasure::haar_half(grid_size),
            Preset::FreeProjections => CircleMeasure::free_projections(params, grid_size),
            Preset::DeltaZero => CircleMeasure::delta_zero(params, grid_size),
            Preset::RaisedCosine => CircleMeasure::raised_cosine(grid_size),
            Preset::Bump => CircleMeasure::bump(params, 0.2, 0.8, grid_size),
        }
    }
}

impl MeasureSpec {
    pub fn named(preset: Preset) -> Self {
        Self {
            atoms: AtomSpec::default(),
            density: DensitySpec::Named { name: preset },
        }
    }

    pub fn build(&self, params: &TraceParams, grid_size: usize) -> Result<CircleMeasure> {
        let mut m = match &self.density {
            DensitySpec::Samples { values } => {
                CircleMeasure::new(0.0, 0.0, values.clone())?
            }
            DensitySpec::Named { name } => name.build(params, grid_size)?,
        };
        if self.atoms.zero < 0.0 || self.atoms.pi < 0.0 {
            return Err(Error::InvalidMeasure("atom weights must be nonnegative".into()));
        }
        m.atom_zero += self.atoms.zero;
        m.atom_pi += self.atoms.pi;
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const N: usize = 4096;

    fn arcsine_nu() -> IntervalMeasure {
        // ½δ_0 + ½·arcsine
        IntervalMeasure::from_density_fn(0.5, 0.0, N / 2, |x| {
            0.5 / (PI * (x * (1.0 - x)).sqrt())
        })
        .unwrap()
    }

    #[test]
    fn trace_params_derived_constants() {
        let p = TraceParams::new(0.5, 0.6).unwrap();
        assert!((p.a() - 0.1).abs() < 1e-15);
        assert!((p.b() - 0.1).abs() < 1e-15);
        assert!((p.interior_mass() - 0.4).abs() < 1e-15);
        assert!(p.a() + p.b() < 1.0);
        assert!(TraceParams::new(0.0, 0.5).is_err());
        assert!(TraceParams::new(0.5, 1.0).is_err());
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(serde_json::from_str::<TraceParams>(&json).unwrap(), p);
        assert!(serde_json::from_str::<TraceParams>(r#"{"tau_p":0.5,"tau_q":1.5}"#).is_err());
    }

    #[test]
    fn arcsine_cdf() {
        let nodes = arcsine_nu().cdf_nodes();
        assert_eq!(nodes[0], (0.0, 0.5));
        assert!(nodes.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 <= w[1].1));
        for (x, f) in &nodes {
            let exact = 0.5 + x.sqrt().asin() / PI;
            assert!((f - exact).abs() < 1e-10, "{x}");
        }
    }

    #[test]
    fn decompose_free_half() {
        let nu = arcsine_nu();
        assert!((nu.total_mass() - 1.0).abs() < 1e-10);
        let d = decompose(&nu, &TraceParams::half()).unwrap();
        assert!(d.generic_position);
        assert!((d.mu.interior_mass() - 0.5).abs() < 1e-10);
        assert_eq!(d.mu.atom0, 0.0);
    }

    #[test]
    fn decompose_equal_projections_is_not_generic() {
        // P = Q with τ = ½: ν = ½δ_0 + ½δ_1.
        let nu = IntervalMeasure::from_density_fn(0.5, 0.5, 64, |_| 0.0).unwrap();
        let d = decompose(&nu, &TraceParams::half()).unwrap();
        assert!(!d.generic_position);
        assert_eq!(d.mu.interior_mass(), 0.0);
        assert!((d.mu.atom1 - 0.5).abs() < 1e-15);
        let c = to_circle(&d.mu).unwrap();
        assert!((c.atom_zero - 0.5).abs() < 1e-15);
    }

    #[test]
    fn decompose_rejects_short_atoms() {
        let nu = IntervalMeasure::from_density_fn(0.0, 1.0, 64, |_| 0.0).unwrap();
        assert!(matches!(
            decompose(&nu, &TraceParams::half()),
            Err(Error::NegativeMass { .. })
        ));
        let nu = IntervalMeasure::from_density_fn(0.3, 0.7, 64, |_| 0.0).unwrap();
        assert!(matches!(
            decompose(&nu, &TraceParams::half()),
            Err(Error::NegativeMass { .. })
        ));
    }

    #[test]
    fn arcsine_maps_to_constant() {
        let d = decompose(&arcsine_nu(), &TraceParams::half()).unwrap();
        let c = to_circle(&d.mu).unwrap();
        assert_eq!(c.grid_size(), N);
        let target = 1.0 / (4.0 * PI);
        for v in c.density() {
            assert!((v - target).abs() < 1e-11, "{v}");
        }
        assert!((c.interior_mass() - 0.5).abs() < 1e-10);
    }

    #[test]
    fn zero_density_maps_to_zero() {
        let mu = IntervalMeasure::from_density_fn(0.0, 0.0, 64, |_| 0.0).unwrap();
        let c = to_circle(&mu).unwrap();
        assert!(c.density().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn spike_at_half_maps_to_symmetric_spikes() {
        let m = 64;
        // x = ½ is θ = π/2, node j = M/2
        let mut density = vec![0.0; m - 1];
        density[m / 2 - 1] = 10.0;
        let mu = IntervalMeasure::new(0.0, 0.0, density, m).unwrap();
        let c = to_circle(&mu).unwrap();
        let n = 2 * m;
        let plus = n / 2 + m / 2; // θ = π/2
        let minus = n / 2 - m / 2; // θ = −π/2
        assert!(c.density()[plus] > 0.0);
        assert_eq!(c.density()[plus], c.density()[minus]);
        assert!((c.interior_mass() - mu.interior_mass()).abs() < 1e-12);
    }

    #[test]
    fn from_circle_of_haar_is_arcsine() {
        let c = CircleMeasure::haar_half(N).unwrap();
        let nu = from_circle(&c, &TraceParams::half()).unwrap();
        assert!((nu.atom0 - 0.5).abs() < 1e-15);
        assert_eq!(nu.atom1, 0.0);
        for (x, h) in nu.samples() {
            let exact = 1.0 / (PI * (x * (1.0 - x)).sqrt()) / 2.0;
            assert!((h - exact).abs() < 1e-9 * exact, "{x} {h} {exact}");
        }
        assert!((nu.total_mass() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn atoms_only_round_trip() {
        let p = TraceParams::half();
        let c = CircleMeasure::delta_zero(&p, 64).unwrap();
        let nu = from_circle(&c, &p).unwrap();
        assert_eq!(nu.interior_mass(), 0.0);
        assert!((nu.atom0 - 0.5).abs() < 1e-15 && (nu.atom1 - 0.5).abs() < 1e-15);
    }

    #[test]
    fn decompose_reconstructs_nu() {
        let p = TraceParams::new(0.5, 0.6).unwrap();
        let nu = free_pair_interval(&p, N / 2).unwrap();
        assert!((nu.total_mass() - 1.0).abs() < 1e-6);
        let d = decompose(&nu, &p).unwrap();
        assert!(d.generic_position);
        let back = from_circle(&to_circle(&d.mu).unwrap(), &p).unwrap();
        assert!((back.atom0 - nu.atom0).abs() < 1e-12);
        assert!((back.atom1 - nu.atom1).abs() < 1e-12);
        for (a, b) in back.density().iter().zip(nu.density()) {
            assert!((a - b).abs() < 1e-9 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn free_pair_mass_matches_generic_position() {
        for (tp, tq) in [(0.5, 0.5), (0.5, 0.6), (0.3, 0.3), (0.2, 0.7), (0.35, 0.8)] {
            let p = TraceParams::new(tp, tq).unwrap();
            let c = CircleMeasure::free_projections(&p, N).unwrap();
            assert!(
                (c.interior_mass() - p.interior_mass()).abs() < 1e-12,
                "{tp} {tq}: {} vs {}",
                c.interior_mass(),
                p.interior_mass()
            );
        }
    }

    #[test]
    fn bump_has_generic_mass() {
        let p = TraceParams::new(0.5, 0.6).unwrap();
        let c = CircleMeasure::bump(&p, 0.2, 0.8, N).unwrap();
        assert!((c.interior_mass() - 0.4).abs() < 1e-9);
    }

    #[test]
    fn rejects_odd_density() {
        let n = 16;
        let mut d = vec![1.0; n];
        d[3] = 2.0;
        assert!(CircleMeasure::new(0.0, 0.0, d).is_err());
        assert!(CircleMeasure::new(0.0, 0.0, vec![1.0; 12]).is_err());
    }

    #[test]
    fn measure_spec_json() {
        let s: MeasureSpec = serde_json::from_str(
            r#"{"atoms": {"zero": 0.25}, "density": {"kind": "named", "name": "haar_half"}}"#,
        )
        .unwrap();
        let m = s.build(&TraceParams::half(), 64).unwrap();
        assert_eq!(m.atom_zero, 0.25);
        assert!((m.interior_mass() - 0.5).abs() < 1e-12);
        assert!(serde_json::from_str::<MeasureSpec>(
            r#"{"density": {"kind": "named", "name": "haar_half"}, "extra": 1}"#
        )
        .is_err());
        let s: MeasureSpec =
            serde_json::from_str(r#"{"density": {"kind": "samples", "values": [1,1,1,1,1,1,1,1]}}"#)
                .unwrap();
        assert_eq!(s.build(&TraceParams::half(), 64).unwrap().grid_size(), 8);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn circle_round_trip(c1 in -1.0f64..1.0, c2 in -1.0f64..1.0, c3 in -1.0f64..1.0) {
                // positive trig polynomial in θ
                let n = 256;
                let p = TraceParams::half();
                let norm = 1.0 + c1.abs() + c2.abs() + c3.abs();
                let hat = CircleMeasure::from_density_fn(n, 0.0, 0.0, |t| {
                    (norm + c1 * t.cos() + c2 * (2.0 * t).cos() + c3 * (3.0 * t).cos()) / 100.0
                }).unwrap();
                let nu = from_circle(&hat, &p).unwrap();
                let back = to_circle(&decompose_like(&nu, &p)).unwrap();
                for (a, b) in back.density().iter().zip(hat.density()) {
                    prop_assert!((a - b).abs() < 1e-10);
                }
                prop_assert!((back.interior_mass() - hat.interior_mass()).abs() < 1e-10);
            }
        }

        fn decompose_like(nu: &IntervalMeasure, p: &TraceParams) -> IntervalMeasure {
            IntervalMeasure::new(
                nu.atom0 - p.forced_atom0(),
                nu.atom1 - p.forced_atom1(),
                nu.density().to_vec(),
                nu.grid_size(),
            )
            .unwrap()
        }
    }
}
