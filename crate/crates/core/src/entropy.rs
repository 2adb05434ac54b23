//! Liberation Fisher information, free mutual information and orbital free
//! entropy of a pair of projections, expressed through `μ̂`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Mutex, OnceLock};

use rayon::prelude::*;
use serde::Serialize;

use crate::fourier;
use crate::loewner::{self, FlowCounters};
use crate::measures::{CircleMeasure, TraceParams};
use crate::quad::{adaptive_simpson, GaussLegendre};
use crate::{Error, Result, DEFAULT_GRID};

/// Probe times for the small-`t` power-law test.
pub fn divergence_probe_times() -> Vec<f64> {
    (0..=8).map(|j| 1e-4 * 10f64.powf(j as f64 / 4.0)).collect()
}

/// Non-integrability threshold on the fitted exponent of `φ*(t) ~ t^p`.
pub const DIVERGENCE_EXPONENT: f64 = -1.0;
pub const DIVERGENCE_R2: f64 = 0.999;

/// Density next to a pole, relative to the peak, above which `φ*` is `+∞`.
pub const POLE_DENSITY_FLOOR: f64 = 1e-6;
/// Regularization radius of the direct log-energy quadrature.
pub const LOG_ENERGY_S: f64 = 1.0 - 1e-4;

/// `k(θ)` sampled on the half-shifted grid `θ_k + π/N`, which avoids the
/// poles of `tan(θ/2)` and `cot(θ/2)`.
#[derive(Debug, Clone)]
pub struct GradientSamples {
    pub thetas: Vec<f64>,
    pub k: Vec<f64>,
    /// `2ĥ` at the same nodes.
    pub weight: Vec<f64>,
}

/// `k(θ) = 2π·H(2ĥ)(θ) − a·tan(θ/2) + b·cot(θ/2)`.
pub fn liberation_gradient_k(hat_h: &[f64], params: &TraceParams) -> Result<GradientSamples> {
    let n = hat_h.len();
    fourier::check_grid(n)?;
    let two_h: Vec<f64> = hat_h.iter().map(|v| 2.0 * v).collect();
    let conj = fourier::half_shift(&fourier::hilbert(&two_h));
    let mut weight = fourier::half_shift(&two_h);
    // the shift rings into gaps, where the pole terms would amplify it
    for j in 0..n {
        if two_h[j] <= 0.0 && two_h[(j + 1) % n] <= 0.0 {
            weight[j] = 0.0;
        }
    }
    let h = fourier::spacing(n) / 2.0;
    let thetas: Vec<f64> = (0..n).map(|k| fourier::theta(k, n) + h).collect();
    let (a, b) = (params.a(), params.b());
    let mut k: Vec<f64> = thetas
        .iter()
        .zip(&conj)
        .map(|(&th, &hc)| {
            let half = 0.5 * th;
            let mut v = 2.0 * PI * hc;
            if a != 0.0 {
                v -= a * half.tan();
            }
            if b != 0.0 {
                v += b / half.tan();
            }
            v
        })
        .collect();
    // θ'_{N−1−j} = −θ'_j; make the oddness exact
    for j in 0..n / 2 {
        let v = 0.5 * (k[j] - k[n - 1 - j]);
        k[j] = v;
        k[n - 1 - j] = -v;
    }
    Ok(GradientSamples { thetas, k, weight })
}

/// `φ* = ∫ k(θ)²·2ĥ(θ) dθ`, or `+∞` when the pole terms meet mass that
/// does not vanish at the poles.
pub fn fisher_info(measure: &CircleMeasure, params: &TraceParams) -> Result<f64> {
    if measure.has_atoms() {
        return Err(Error::AtomPresent {
            atom_zero: measure.atom_zero,
            atom_pi: measure.atom_pi,
        });
    }
    let n = measure.grid_size();
    let g = liberation_gradient_k(measure.density(), params)?;
    let dt = fourier::spacing(n);
    let cells: Vec<f64> = g
        .k
        .iter()
        .zip(&g.weight)
        .map(|(k, w)| k * k * w.max(0.0) * dt)
        .collect();
    let total: f64 = cells.iter().sum();
    // a·tan(θ/2) is square-integrable against ĥ only if ĥ vanishes at ±π,
    // and b·cot(θ/2) only if it vanishes at 0
    let d = measure.density();
    let peak = d.iter().fold(0.0f64, |m, v| m.max(*v));
    let mut at_poles = 0.0f64;
    if params.a() != 0.0 {
        at_poles = at_poles.max(d[n - 1]).max(d[0]).max(d[1]);
    }
    if params.b() != 0.0 {
        at_poles = at_poles.max(d[n / 2 - 1]).max(d[n / 2]).max(d[n / 2 + 1]);
    }
    if at_poles > POLE_DENSITY_FLOOR * peak {
        return Ok(f64::INFINITY);
    }
    Ok(total)
}

/// `∫|k|·2ĥ dθ` on the full grid and on every other node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegrabilityReport {
    pub fine: f64,
    pub coarse: f64,
    pub converged: bool,
}

pub fn gradient_integrability(measure: &CircleMeasure, params: &TraceParams) -> Result<IntegrabilityReport> {
    let l1 = |density: &[f64]| -> Result<f64> {
        let g = liberation_gradient_k(density, params)?;
        let dt = fourier::spacing(density.len());
        Ok(g.k.iter().zip(&g.weight).map(|(k, w)| k.abs() * w.max(0.0) * dt).sum())
    };
    let fine = l1(measure.density())?;
    let coarse_density: Vec<f64> = measure.density().iter().step_by(2).copied().collect();
    let coarse = l1(&coarse_density)?;
    Ok(IntegrabilityReport {
        fine,
        coarse,
        converged: (fine - coarse).abs() <= 1e-3 * fine.abs().max(1e-12),
    })
}

/// `φ*` sampled along a flow.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct FisherProfile {
    pub times: Vec<f64>,
    pub phi_star: Vec<f64>,
    pub divergent_at_zero: bool,
}

/// Least-squares fit of `log φ = p·log t + c`; returns `(p, R²)`.
pub fn power_law_fit(times: &[f64], values: &[f64]) -> Option<(f64, f64)> {
    if times.len() < 3 || values.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return None;
    }
    let x: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let y: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let p = sxy / sxx;
    let c = my - p * mx;
    let ss_res: f64 = x.iter().zip(&y).map(|(a, b)| (b - (p * a + c)).powi(2)).sum();
    let r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 0.0 };
    Some((p, r2))
}

/// `i* = ½∫_0^∞ φ*(t) dt`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IStar {
    pub value: f64,
    pub error: f64,
    /// Exponent and R² of the small-`t` power-law fit.
    pub fit: Option<(f64, f64)>,
    pub profile: FisherProfile,
    pub counters: FlowCounters,
}

/// `φ*(t)` of the flow started at `mu0`.
pub fn fisher_along_flow(mu0: &CircleMeasure, params: &TraceParams, t: f64) -> Result<(f64, FlowCounters)> {
    if t == 0.0 {
        return Ok((fisher_info(mu0, params)?, FlowCounters::default()));
    }
    let state = loewner::evolve(mu0, params, t)?;
    Ok((fisher_info(&state.measure, params)?, state.counters))
}

pub fn i_star(mu0: &CircleMeasure, params: &TraceParams, t_max: f64, tol: f64) -> Result<IStar> {
    let mut counters = FlowCounters::default();
    let mut profile = FisherProfile::default();

    let probe = divergence_probe_times();
    let samples: Vec<(f64, FlowCounters)> = probe
        .par_iter()
        .map(|&t| fisher_along_flow(mu0, params, t))
        .collect::<Result<_>>()?;
    let phis: Vec<f64> = samples.iter().map(|s| s.0).collect();
    samples.iter().for_each(|s| counters.merge(s.1));
    profile.times.extend(&probe);
    profile.phi_star.extend(&phis);
    let fit = power_law_fit(&probe, &phis);
    let divergent = phis.iter().any(|v| v.is_infinite())
        || fit.is_some_and(|(p, r2)| p <= DIVERGENCE_EXPONENT && r2 > DIVERGENCE_R2);
    if divergent {
        profile.divergent_at_zero = true;
        return Ok(IStar {
            value: f64::INFINITY,
            error: 0.0,
            fit,
            profile,
            counters,
        });
    }

    // φ*(0) needs a density; otherwise the first panel starts just after 0
    let t0 = if mu0.has_atoms() { probe[0] } else { 0.0 };
    let mut edges = vec![t0, 1e-2, 1e-1, 1.0];
    while *edges.last().unwrap() < t_max {
        let next = (edges.last().unwrap() + 1.0).min(t_max);
        edges.push(next);
    }
    let mut value = 0.0;
    let mut error = 0.0;
    let mut evaluations = Vec::new();
    let mut phi_at = |t: f64| -> Result<f64> {
        let (phi, c) = fisher_along_flow(mu0, params, t)?;
        counters.merge(c);
        evaluations.push((t, phi));
        if phi.is_infinite() {
            return Err(Error::InvalidMeasure(format!("Fisher information is infinite at t = {t}")));
        }
        Ok(phi)
    };
    let mut last = f64::NAN;
    let mut prev_edge_phi = f64::NAN;
    let mut end = t0;
    for w in edges.windows(2) {
        let est = adaptive_simpson(&mut phi_at, w[0], w[1], tol, 30)?;
        value += 0.5 * est.value;
        error += 0.5 * est.error;
        end = w[1];
        let phi_end = phi_at(w[1])?;
        prev_edge_phi = last;
        last = phi_end;
        if w[1] >= 1.0 && phi_end < tol {
            break;
        }
    }
    // exponential tail from the last two panel edges
    if last > 0.0 {
        let rate = if prev_edge_phi > last { (prev_edge_phi / last).ln() } else { 0.0 };
        error += if rate > 0.0 { 0.5 * last / rate } else { 0.5 * last * (t_max - end).max(1.0) };
    }
    evaluations.sort_by(|a, b| a.0.total_cmp(&b.0));
    evaluations.dedup_by(|a, b| a.0 == b.0);
    for (t, phi) in evaluations {
        profile.times.push(t);
        profile.phi_star.push(phi);
    }
    Ok(IStar {
        value,
        error,
        fit,
        profile,
        counters,
    })
}

/// `∫∫ log|e^{iα} − e^{iβ}| μ̂(dα)μ̂(dβ) = −Σ_{n≥1} m_n²/n`.
pub fn log_energy_fourier(measure: &CircleMeasure) -> f64 {
    let m = measure.moments(measure.grid_size() / 2);
    let mut e = 0.0;
    for (n, mn) in m.iter().enumerate().skip(1) {
        let term = mn * mn / n as f64;
        e -= term;
    }
    e
}

/// Direct product-integration of `∫∫ log|1 − s·e^{i(α−β)}| μ̂⊗μ̂` with the
/// density taken piecewise constant on grid cells. Atom-free measures only.
pub fn log_energy_direct(measure: &CircleMeasure, s: f64) -> f64 {
    let n = measure.grid_size();
    let dt = fourier::spacing(n);
    let kernel = |phi: f64| 0.5 * (1.0 - 2.0 * s * phi.cos() + s * s).ln();
    let gl = GaussLegendre::new(8);
    // cell-averaged kernel for every offset d (kernel is even in d)
    let kbar: Vec<f64> = (0..=n / 2)
        .map(|d| {
            let c = d as f64 * dt;
            if d <= 2 {
                // resolve the near-diagonal log peak (width 1 − s)
                let mut f = |x: f64| Ok::<_, std::convert::Infallible>(kernel(x));
                let est = adaptive_simpson(&mut f, c - 0.5 * dt, c + 0.5 * dt, 1e-13, 50).unwrap_or_else(|e| match e {});
                est.value / dt
            } else {
                gl.integrate(c - 0.5 * dt, c + 0.5 * dt, kernel) / dt
            }
        })
        .collect();
    let h = measure.density();
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut acc = 0.0;
            for (k, hk) in h.iter().enumerate() {
                let d = j.abs_diff(k);
                let d = d.min(n - d);
                acc += hk * kbar[d];
            }
            h[j] * acc
        })
        .collect();
    rows.iter().sum::<f64>() * dt * dt
}

/// `∫ log|1 + e^{iθ}| μ̂(dθ)` (`sign = +1`) or `∫ log|1 − e^{iθ}| μ̂(dθ)`
/// (`sign = −1`) for an atom-free measure. The logarithmic end is removed
/// by `θ = π − u²` (resp. `θ = u²`).
pub fn log_potential(measure: &CircleMeasure, sign: f64) -> f64 {
    let gl = GaussLegendre::new(16);
    let panels = (measure.grid_size() / 16).max(8);
    // on [0, π] with evenness; x(θ) = distance variable to the singular end
    let value = |theta: f64| -> f64 {
        let g = if sign > 0.0 {
            (2.0 * (0.5 * theta).cos()).ln()
        } else {
            (2.0 * (0.5 * theta).sin()).ln()
        };
        g * measure.density_at(theta)
    };
    let split = 0.5 * PI;
    let um = split.sqrt();
    let (regular, singular) = if sign > 0.0 {
        (
            gl.integrate_composite(0.0, split, panels, value),
            gl.integrate_composite(0.0, um, panels, |u| 2.0 * u * value(PI - u * u)),
        )
    } else {
        (
            gl.integrate_composite(split, PI, panels, value),
            gl.integrate_composite(0.0, um, panels, |u| 2.0 * u * value(u * u)),
        )
    };
    2.0 * (regular + singular)
}

/// Components of `χ_orb`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiOrbReport {
    pub value: f64,
    pub log_energy: f64,
    pub log_energy_direct: f64,
    pub potential_plus: f64,
    pub potential_minus: f64,
    pub z: f64,
}

fn braces(measure: &CircleMeasure, params: &TraceParams) -> (f64, f64, f64, f64) {
    let e = log_energy_fourier(measure);
    let plus = if params.a() != 0.0 { log_potential(measure, 1.0) } else { 0.0 };
    let minus = if params.b() != 0.0 { log_potential(measure, -1.0) } else { 0.0 };
    (e + params.a() * plus + params.b() * minus, e, plus, minus)
}

/// `Z_{τP,τQ}`: minus twice the braced expression on the free-pair measure, so
/// that the free pair has `χ_orb = 0`. Memoized per trace pair.
pub fn calibrate_z(params: &TraceParams) -> Result<f64> {
    if params.a() == 0.0 && params.b() == 0.0 {
        return Ok(0.0);
    }
    static CACHE: OnceLock<Mutex<HashMap<(u64, u64), f64>>> = OnceLock::new();
    let key = (params.tau_p().to_bits(), params.tau_q().to_bits());
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(z) = cache.lock().unwrap().get(&key) {
        return Ok(*z);
    }
    let free = CircleMeasure::free_projections(params, 4 * DEFAULT_GRID)?;
    let z = -2.0 * braces(&free, params).0;
    cache.lock().unwrap().insert(key, z);
    Ok(z)
}

/// `χ_orb = 2{E(μ̂) + a∫log|1+e^{iθ}|dμ̂ + b∫log|1−e^{iθ}|dμ̂} + Z`.
pub fn chi_orb_report(mu0: &CircleMeasure, params: &TraceParams, generic: bool) -> Result<ChiOrbReport> {
    let z = calibrate_z(params)?;
    if !generic || mu0.has_atoms() {
        return Ok(ChiOrbReport {
            value: f64::NEG_INFINITY,
            log_energy: f64::NEG_INFINITY,
            log_energy_direct: f64::NEG_INFINITY,
            potential_plus: f64::NAN,
            potential_minus: f64::NAN,
            z,
        });
    }
    let (b, e, plus, minus) = braces(mu0, params);
    Ok(ChiOrbReport {
        value: 2.0 * b + z,
        log_energy: e,
        log_energy_direct: log_energy_direct(mu0, LOG_ENERGY_S),
        potential_plus: plus,
        potential_minus: minus,
        z,
    })
}

pub fn chi_orb(mu0: &CircleMeasure, params: &TraceParams, generic: bool) -> Result<f64> {
    if !generic || mu0.has_atoms() {
        return Ok(f64::NEG_INFINITY);
    }
    let (b, _, _, _) = braces(mu0, params);
    Ok(2.0 * b + calibrate_z(params)?)
}

/// Both sides of `i* = −χ_orb`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityReport {
    pub i_star: f64,
    pub i_star_error: f64,
    pub chi_orb: f64,
    /// `|i* + χ_orb|` when both are finite.
    pub gap: Option<f64>,
    /// `+∞ = +∞`.
    pub both_infinite: bool,
    /// Verdict at `τP = τQ = ½`; `None` elsewhere, where the identity is
    /// only conjectured and the gap is reported as is.
    pub holds: Option<bool>,
    pub counters: FlowCounters,
}

/// Computes `i*` and `χ_orb` for the same initial law and compares them.
pub fn verify_identity(mu0: &CircleMeasure, params: &TraceParams, t_max: f64, tol: f64, gap_tol: f64) -> Result<IdentityReport> {
    let istar = i_star(mu0, params, t_max, tol)?;
    // a circle measure carries no forced atoms, so the pair is generic
    let chi = chi_orb(mu0, params, true)?;
    let both_infinite = istar.value.is_infinite() && chi == f64::NEG_INFINITY;
    let gap = (istar.value.is_finite() && chi.is_finite()).then(|| (istar.value + chi).abs());
    Ok(IdentityReport {
        i_star: istar.value,
        i_star_error: istar.error,
        chi_orb: chi,
        gap,
        both_infinite,
        holds: params
            .is_half_trace()
            .then(|| both_infinite || gap.is_some_and(|g| g <= gap_tol)),
        counters: istar.counters,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const N: usize = 4096;

    fn half() -> TraceParams {
        TraceParams::half()
    }

    #[test]
    fn gradient_examples() {
        let g = liberation_gradient_k(CircleMeasure::haar_half(N).unwrap().density(), &half()).unwrap();
        assert!(g.k.iter().all(|v| v.abs() < 1e-13));
        let g = liberation_gradient_k(CircleMeasure::raised_cosine(N).unwrap().density(), &half()).unwrap();
        for (th, k) in g.thetas.iter().zip(&g.k) {
            assert!((k - th.sin()).abs() < 1e-12);
        }
        let n = g.k.len();
        for j in 0..n {
            assert_eq!(g.k[j], -g.k[n - 1 - j]);
        }
    }

    #[test]
    fn gradient_against_principal_value_quadrature() {
        // H f(θ) = (1/2π) PV∫ f(φ) cot((θ−φ)/2) dφ, by singularity subtraction
        let f = |x: f64| (1.0 + 0.4 * x.cos() + 0.3 * (2.0 * x).cos()).powi(2) / 20.0;
        let m = CircleMeasure::from_density_fn(N, 0.0, 0.0, f).unwrap();
        let g = liberation_gradient_k(m.density(), &half()).unwrap();
        let gl = GaussLegendre::new(20);
        for j in (0..N).step_by(301) {
            let th = g.thetas[j];
            let integrand = |phi: f64| {
                let d = th - phi;
                if d.abs() < 1e-14 {
                    0.0
                } else {
                    (2.0 * f(phi) - 2.0 * f(th)) / (0.5 * d).tan()
                }
            };
            let pv = gl.integrate_composite(th - PI, th + PI, 64, integrand) / (2.0 * PI);
            assert!((g.k[j] - 2.0 * PI * pv).abs() < 1e-10, "{} vs {}", g.k[j], 2.0 * PI * pv);
        }
    }

    #[test]
    fn fisher_examples() {
        assert_eq!(fisher_info(&CircleMeasure::haar_half(N).unwrap(), &half()).unwrap(), 0.0);
        let phi = fisher_info(&CircleMeasure::raised_cosine(N).unwrap(), &half()).unwrap();
        assert!((phi - 0.5).abs() < 1e-8);
        let delta = CircleMeasure::delta_zero(&half(), N).unwrap();
        assert!(matches!(fisher_info(&delta, &half()), Err(Error::AtomPresent { .. })));
    }

    #[test]
    fn fisher_pole_terms() {
        let p = TraceParams::new(0.5, 0.6).unwrap();
        // density supported away from the poles: finite
        let bump = CircleMeasure::bump(&p, 0.2, 0.8, N).unwrap();
        assert!(fisher_info(&bump, &p).unwrap().is_finite());
        // density that does not vanish at θ = π meets a·tan(θ/2): infinite
        let flat = CircleMeasure::from_density_fn(N, 0.0, 0.0, |_| p.interior_mass() / (2.0 * PI)).unwrap();
        assert_eq!(fisher_info(&flat, &p).unwrap(), f64::INFINITY);
    }

    #[test]
    fn fisher_is_quadratic_in_odd_perturbations() {
        // an odd-in-(θ−π/2) perturbation: amplitude doubling quadruples φ*
        let m = |eps: f64| {
            CircleMeasure::from_density_fn(N, 0.0, 0.0, |t| (1.0 + eps * (2.0 * t).cos()) / (4.0 * PI)).unwrap()
        };
        let f1 = fisher_info(&m(0.05), &half()).unwrap();
        let f2 = fisher_info(&m(0.1), &half()).unwrap();
        assert!((f2 / f1 - 4.0).abs() < 0.08, "{}", f2 / f1);
    }

    #[test]
    fn log_energy_examples() {
        assert!(log_energy_fourier(&CircleMeasure::haar_half(N).unwrap()).abs() < 1e-15);
        let rc = CircleMeasure::raised_cosine(N).unwrap();
        assert!((log_energy_fourier(&rc) + 1.0 / 16.0).abs() < 1e-14);
        assert!((log_energy_direct(&rc, LOG_ENERGY_S) + 1.0 / 16.0).abs() < 1e-5);
    }

    #[test]
    fn log_energy_by_brute_force() {
        // independent double quadrature on a smooth density with many modes
        let f = |x: f64| (1.0 + 0.5 * x.cos()).powi(3) / (2.0 * PI * 1.375) / 2.0;
        let m = CircleMeasure::from_density_fn(N, 0.0, 0.0, f).unwrap();
        let gl = GaussLegendre::new(24);
        let inner = |a: f64| {
            // log|e^{ia} − e^{ib}| = log|2 sin((a−b)/2)|, singular at b = a
            let g = |b: f64| (2.0 * (0.5 * (a - b)).sin().abs()).ln() * f(b);
            // u-substitution b = a ± u², u ∈ [0, √π]
            let r = PI.sqrt();
            gl.integrate_composite(0.0, r, 16, |u| 2.0 * u * (g(a + u * u) + g(a - u * u)))
        };
        let brute = gl.integrate_composite(-PI, PI, 32, |a| f(a) * inner(a));
        assert!((log_energy_fourier(&m) - brute).abs() < 1e-8, "{} {}", log_energy_fourier(&m), brute);
        assert!((log_energy_direct(&m, LOG_ENERGY_S) - brute).abs() < 1e-4);
    }

    #[test]
    fn log_potentials_match_fourier_series() {
        // log|1 ± e^{iθ}| = Σ (∓1)^{n+1} cos(nθ)/n
        let p = TraceParams::new(0.5, 0.6).unwrap();
        let m = CircleMeasure::bump(&p, 0.2, 0.8, N).unwrap();
        let mom = m.moments(N / 2);
        let series = |sign: f64| -> f64 {
            mom.iter()
                .enumerate()
                .skip(1)
                .map(|(n, mn)| {
                    let alt = if n % 2 == 1 { 1.0 } else { -1.0 };
                    if sign > 0.0 { alt * mn / n as f64 } else { -mn / n as f64 }
                })
                .sum()
        };
        assert!((log_potential(&m, 1.0) - series(1.0)).abs() < 1e-9);
        assert!((log_potential(&m, -1.0) - series(-1.0)).abs() < 1e-9);
        // Haar: ∫ log|1 ± e^{iθ}| dθ = 0
        let h = CircleMeasure::haar_half(N).unwrap();
        assert!(log_potential(&h, 1.0).abs() < 1e-9);
        assert!(log_potential(&h, -1.0).abs() < 1e-9);
    }

    #[test]
    fn chi_orb_examples() {
        assert!(chi_orb(&CircleMeasure::haar_half(N).unwrap(), &half(), true).unwrap().abs() < 1e-15);
        let rc = CircleMeasure::raised_cosine(N).unwrap();
        assert!((chi_orb(&rc, &half(), true).unwrap() + 0.125).abs() < 1e-12);
        assert_eq!(chi_orb(&rc, &half(), false).unwrap(), f64::NEG_INFINITY);
        let d = CircleMeasure::delta_zero(&half(), N).unwrap();
        assert_eq!(chi_orb(&d, &half(), true).unwrap(), f64::NEG_INFINITY);
        let r = chi_orb_report(&rc, &half(), true).unwrap();
        assert!((r.log_energy - r.log_energy_direct).abs() < 1e-4);
    }

    #[test]
    fn z_calibration() {
        assert_eq!(calibrate_z(&half()).unwrap(), 0.0);
        for (tp, tq) in [(0.5, 0.6), (0.3, 0.3), (0.2, 0.7)] {
            let p = TraceParams::new(tp, tq).unwrap();
            let free = CircleMeasure::free_projections(&p, 4 * DEFAULT_GRID).unwrap();
            assert!(chi_orb(&free, &p, true).unwrap().abs() < 1e-6);
            // a coarser grid of the same law stays near 0
            let coarse = CircleMeasure::free_projections(&p, N).unwrap();
            assert!(chi_orb(&coarse, &p, true).unwrap().abs() < 1e-4);
        }
    }

    #[test]
    fn power_law_fit_recovers_exponent() {
        let t = divergence_probe_times();
        let v: Vec<f64> = t.iter().map(|t| 3.0 * t.powf(-1.5)).collect();
        let (p, r2) = power_law_fit(&t, &v).unwrap();
        assert!((p + 1.5).abs() < 1e-12 && r2 > 0.999999);
        assert!(power_law_fit(&t, &vec![0.0; t.len()]).is_none());
    }

    #[test]
    fn i_star_of_haar_is_zero() {
        let r = i_star(&CircleMeasure::haar_half(1024).unwrap(), &half(), 10.0, 1e-8).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(!r.profile.divergent_at_zero);
    }

    #[test]
    fn integrability_of_smooth_gradient() {
        let r = gradient_integrability(&CircleMeasure::raised_cosine(N).unwrap(), &half()).unwrap();
        assert!(r.converged);
        // ∫|sinθ|(1+cosθ)/2π = 2/π; the kinks of |sinθ| limit the trapezoid rule
        assert!((r.fine - 2.0 / PI).abs() < 1e-5);
    }
}
