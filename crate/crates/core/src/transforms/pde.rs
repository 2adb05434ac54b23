//! Finite-difference residual of the evolution equation for `G(t, z)`,
//! `∂_t G = ∂_z[(z²−z)G² + (2−τP−τQ−z)G − (1−τP)(1−τQ)/z]`.

use num_complex::Complex64;

use crate::measures::TraceParams;
use crate::Result;

/// The bracketed flux on the right-hand side.
pub fn bracket(g: Complex64, z: Complex64, params: &TraceParams) -> Complex64 {
    let (p, q) = (params.tau_p(), params.tau_q());
    (z * z - z) * g * g + (2.0 - p - q - z) * g - (1.0 - p) * (1.0 - q) / z
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdeResidual {
    pub max: f64,
    pub mean: f64,
    pub points: usize,
}

/// `|∂_t G − ∂_z B(G)|` by centred differences at every `(t, z)` pair.
/// `g(t, z)` must be defined on `[t − dt, t + dt]` and `[z − dz, z + dz]`.
pub fn pde_residual_g(
    g: impl Fn(f64, Complex64) -> Result<Complex64>,
    params: &TraceParams,
    times: &[f64],
    zs: &[Complex64],
    dt: f64,
    dz: f64,
) -> Result<PdeResidual> {
    let mut max = 0.0f64;
    let mut sum = 0.0;
    let mut points = 0;
    for &t in times {
        for &z in zs {
            let dg = (g(t + dt, z)? - g(t - dt, z)?) / (2.0 * dt);
            let zp = z + dz;
            let zm = z - dz;
            let db = (bracket(g(t, zp)?, zp, params) - bracket(g(t, zm)?, zm, params)) / (2.0 * dz);
            let r = (dg - db).norm();
            max = max.max(r);
            sum += r;
            points += 1;
        }
    }
    Ok(PdeResidual {
        max,
        mean: if points > 0 { sum / points as f64 } else { 0.0 },
        points,
    })
}
