//! Radial Loewner evolution of the Herglotz transform `L(t, ζ)`.
//!
//! With `A(ζ) = a(1−ζ)/(1+ζ) + b(1+ζ)/(1−ζ)` the flow `g_t` obeys
//! `ġ_t = g_t·[2L(t, g_t) + A(g_t)]` and `H = (L + A)·L` is constant along
//! `t ↦ g_t(ζ)`. Two evaluators are provided:
//!
//! * [`SubordinatedField`] (`a = b = 0`): `L(t, ζ) = L(0, f_t(ζ))` where
//!   `f_t = g_t⁻¹` solves `w·e^{2tL(0,w)} = ζ`.
//! * [`CharacteristicField`] (any `a, b`): the characteristic through a
//!   target `w` is traced back to time 0; along it `2L + A = √(A² + 4c)`
//!   with the conserved value `c`, which is fixed by `H(0, ζ(c)) = c`.
//!
//! Both are evaluated on rings by continuation in the angle, with
//! bisection of steps that fail.

use std::sync::atomic::{AtomicUsize, Ordering};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::fourier;
use crate::measures::{CircleMeasure, TraceParams};
use crate::transforms::pde::{pde_residual_g, PdeResidual};
use crate::transforms::{self, pole_terms, Herglotz, HerglotzField};
use crate::{Error, Result};

/// Newton tolerance on `|g_t(w) − ζ|`.
pub const NEWTON_TOL: f64 = 1e-11;
pub const NEWTON_MAX_ITER: usize = 100;
/// Maximum bisection depth of a failed continuation step.
pub const MAX_REFINE_DEPTH: usize = 12;
/// Initial RK4 step of the characteristic integrator.
pub const CHAR_STEP: f64 = 1e-3;
/// Local error accepted per RK4 step.
pub const CHAR_LOCAL_TOL: f64 = 1e-12;
const CHAR_MIN_STEP: f64 = 1e-9;
/// How far (in `log |ζ|`) a trial path may leave the disk. Preimages of
/// points over a gap sit on the circle, where `H_0` continues by reflection.
const CHAR_OUTSIDE: f64 = 1e-2;

const CHUNK: usize = 64;
/// Fraction of a ring that may be dropped and interpolated before the
/// evaluation fails.
pub const MAX_DROPPED_FRACTION: f64 = 0.01;

/// Diagnostic counters accumulated while evaluating a flow.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct FlowCounters {
    /// Continuation steps that had to be bisected.
    pub refinements: usize,
    /// Line-search reductions inside Newton iterations.
    pub backtracks: usize,
    /// Points where continuation reached the unphysical sheet
    /// `Re(2L + A) < 0` and was redone along the ray.
    pub branch_flips: usize,
    /// Integrator steps rejected by the step-doubling test.
    pub rejected_steps: usize,
    /// Ring points with no converged solution, filled from neighbours.
    pub dropped: usize,
}

impl FlowCounters {
    pub fn merge(&mut self, other: FlowCounters) {
        self.refinements += other.refinements;
        self.backtracks += other.backtracks;
        self.branch_flips += other.branch_flips;
        self.rejected_steps += other.rejected_steps;
        self.dropped += other.dropped;
    }
}

#[derive(Debug, Default)]
struct Counters {
    refinements: AtomicUsize,
    backtracks: AtomicUsize,
    branch_flips: AtomicUsize,
    rejected_steps: AtomicUsize,
    dropped: AtomicUsize,
}

impl Counters {
    fn bump(c: &AtomicUsize, by: usize) {
        if by > 0 {
            c.fetch_add(by, Ordering::Relaxed);
        }
    }

    fn snapshot(&self) -> FlowCounters {
        FlowCounters {
            refinements: self.refinements.load(Ordering::Relaxed),
            backtracks: self.backtracks.load(Ordering::Relaxed),
            branch_flips: self.branch_flips.load(Ordering::Relaxed),
            rejected_steps: self.rejected_steps.load(Ordering::Relaxed),
            dropped: self.dropped.load(Ordering::Relaxed),
        }
    }
}

/// Inversion of `g_t` along paths in the disk.
trait Inversion: Sync {
    type State: Copy + Send;
    /// Solution at the target `0`.
    fn origin(&self) -> Self::State;
    /// Solves at `to`, warm-started from the solution at `from`.
    fn step(&self, from_state: &Self::State, from: Complex64, to: Complex64) -> Result<Self::State>;
    /// `(L(t, ζ), ∂_ζ L(t, ζ))` at the solved point.
    fn solved(&self, state: &Self::State) -> (Complex64, Complex64);
    fn counters(&self) -> &Counters;
    /// Whether continuation slipped onto a non-physical solution.
    fn off_sheet(&self, _state: &Self::State) -> bool {
        false
    }
}

fn walk<I: Inversion>(
    inv: &I,
    state: I::State,
    from: Complex64,
    to: Complex64,
    depth: usize,
) -> Result<I::State> {
    match inv.step(&state, from, to) {
        Ok(s) => Ok(s),
        Err(e) if depth >= MAX_REFINE_DEPTH => Err(e),
        Err(_) => {
            Counters::bump(&inv.counters().refinements, 1);
            let mid = 0.5 * (from + to);
            let s_mid = walk(inv, state, from, mid, depth + 1)?;
            walk(inv, s_mid, mid, to, depth + 1)
        }
    }
}

/// Solves at `target` along the ray from 0, halving the distance to the
/// circle at each stage.
fn solve_point<I: Inversion>(inv: &I, target: Complex64) -> Result<I::State> {
    let rho = target.norm();
    let mut state = inv.origin();
    if rho == 0.0 {
        return Ok(state);
    }
    let dir = target / rho;
    let mut from = Complex64::new(0.0, 0.0);
    let mut radius = 0.5;
    while radius < rho {
        let to = dir * radius;
        state = walk(inv, state, from, to, 0)?;
        from = to;
        radius = 1.0 - 0.5 * (1.0 - radius);
    }
    walk(inv, state, from, target, 0)
}

/// `L(t, r e^{iθ_k})` on the full grid. The half circle `θ ∈ [−π, 0]` is
/// solved by angular continuation in independent chunks; the other half
/// follows from `L(ζ̄) = conj L(ζ)`. Points where no solution converges are
/// dropped and interpolated linearly in `θ`.
fn solve_ring<I: Inversion>(inv: &I, r: f64, n: usize) -> Result<Vec<(Complex64, Complex64)>> {
    fourier::check_grid(n)?;
    let half = n / 2;
    let starts: Vec<usize> = (0..=half).step_by(CHUNK).collect();
    let point = |k: usize| Complex64::from_polar(r, fourier::theta(k, n));
    let chunks: Vec<Vec<Result<(Complex64, Complex64)>>> = starts
        .par_iter()
        .map(|&k0| {
            let k1 = (k0 + CHUNK).min(half + 1);
            let mut out = Vec::with_capacity(k1 - k0);
            let mut prev: Option<(Complex64, I::State)> = None;
            for k in k0..k1 {
                let to = point(k);
                let mut state = match prev {
                    Some((from, s)) => walk(inv, s, from, to, 0),
                    None => solve_point(inv, to),
                };
                let retry = match &state {
                    Ok(s) => inv.off_sheet(s),
                    Err(_) => prev.is_some(),
                };
                if retry {
                    // start over along the ray, which stays on the right sheet
                    if state.is_ok() {
                        Counters::bump(&inv.counters().branch_flips, 1);
                    }
                    match solve_point(inv, to) {
                        Ok(fresh) if !inv.off_sheet(&fresh) => state = Ok(fresh),
                        Err(e) if state.is_err() => state = Err(e),
                        _ => {}
                    }
                }
                prev = state.as_ref().ok().map(|s| (to, *s));
                out.push(state.map(|s| inv.solved(&s)));
            }
            out
        })
        .collect();
    let solved: Vec<Result<(Complex64, Complex64)>> = chunks.into_iter().flatten().collect();
    let dropped = solved.iter().filter(|v| v.is_err()).count();
    if dropped as f64 > MAX_DROPPED_FRACTION * (half + 1) as f64 || dropped == solved.len() {
        return solved.into_iter().find(|v| v.is_err()).unwrap().map(|_| Vec::new());
    }
    Counters::bump(&inv.counters().dropped, dropped);
    let good: Vec<usize> = (0..solved.len()).filter(|k| solved[*k].is_ok()).collect();
    let value = |k: usize| *solved[k].as_ref().unwrap();
    let mut ring: Vec<(Complex64, Complex64)> = (0..solved.len())
        .map(|k| {
            if solved[k].is_ok() {
                return value(k);
            }
            let after = good.partition_point(|g| *g < k);
            match (after.checked_sub(1).map(|i| good[i]), good.get(after)) {
                (Some(lo), Some(&hi)) => {
                    let w = (k - lo) as f64 / (hi - lo) as f64;
                    let (a, b) = (value(lo), value(hi));
                    (a.0 + w * (b.0 - a.0), a.1 + w * (b.1 - a.1))
                }
                (Some(lo), None) => value(lo),
                (None, Some(&hi)) => value(hi),
                (None, None) => unreachable!(),
            }
        })
        .collect();
    ring.resize(n, (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)));
    for k in 1..half {
        let (l, d) = ring[k];
        ring[n - k] = (l.conj(), d.conj());
    }
    Ok(ring)
}

// ---------------------------------------------------------------------------
// a = b = 0: subordination

/// `L(t, ·) = L(0, f_t(·))` for an initial field with `a = b = 0`.
pub struct SubordinatedField<'a> {
    l0: &'a dyn Herglotz,
    t: f64,
    counters: Counters,
}

#[derive(Debug, Clone, Copy)]
struct SubState {
    w: Complex64,
    /// `g_t'(w)`
    dg: Complex64,
    l: Complex64,
    dl: Complex64,
}

impl<'a> SubordinatedField<'a> {
    pub fn new(l0: &'a dyn Herglotz, t: f64) -> Result<Self> {
        if !l0.params().is_half_trace() {
            return Err(Error::InvalidParams(
                "subordination requires tau_p = tau_q = 1/2".into(),
            ));
        }
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::InvalidParams(format!("time must be >= 0, got {t}")));
        }
        Ok(Self {
            l0,
            t,
            counters: Counters::default(),
        })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn counters(&self) -> FlowCounters {
        self.counters.snapshot()
    }

    /// `f_t(ζ)`.
    pub fn f(&self, zeta: Complex64) -> Result<Complex64> {
        Ok(solve_point(self, zeta)?.w)
    }

    /// `g_t(w) = w·e^{2tL(0,w)}` and `g_t'(w)`.
    pub fn g(&self, w: Complex64) -> Result<(Complex64, Complex64)> {
        let (l, dl) = self.l0.value_and_derivative(w)?;
        let e = (2.0 * self.t * l).exp();
        Ok((w * e, e * (1.0 + 2.0 * self.t * w * dl)))
    }

    fn newton(&self, zeta: Complex64, seed: Complex64) -> Result<SubState> {
        let t = self.t;
        let eval = |w: Complex64| -> Result<(Complex64, SubState)> {
            let (l, dl) = self.l0.value_and_derivative(w)?;
            let e = (2.0 * t * l).exp();
            let st = SubState {
                w,
                dg: e * (1.0 + 2.0 * t * w * dl),
                l,
                dl,
            };
            Ok((w * e - zeta, st))
        };
        let mut w = seed;
        if w.norm() >= 1.0 {
            w *= 0.999 / w.norm();
        }
        let (mut res, mut st) = eval(w)?;
        let mut backtracks = 0;
        for _ in 0..NEWTON_MAX_ITER {
            let rn = res.norm();
            if rn < 1e-14 {
                break;
            }
            let dw = res / st.dg;
            if !dw.is_finite() {
                break;
            }
            let mut lambda = 1.0;
            let mut accepted = false;
            let mut outside = false;
            for _ in 0..40 {
                let cand = w - lambda * dw;
                if cand.norm() < 1.0 {
                    if let Ok((r2, s2)) = eval(cand) {
                        if r2.is_finite() && r2.norm() < rn {
                            w = cand;
                            res = r2;
                            st = s2;
                            accepted = true;
                            break;
                        }
                    }
                } else {
                    outside = true;
                }
                lambda *= 0.5;
                backtracks += 1;
            }
            if !accepted {
                Counters::bump(&self.counters.backtracks, backtracks);
                if rn < NEWTON_TOL {
                    return Ok(st);
                }
                if outside {
                    return Err(Error::ExitedDisk { zeta, t });
                }
                return Err(Error::NewtonDivergence { zeta, t, residual: rn });
            }
            if (lambda * dw).norm() < 1e-15 && res.norm() < NEWTON_TOL {
                break;
            }
        }
        Counters::bump(&self.counters.backtracks, backtracks);
        let rn = res.norm();
        if rn < NEWTON_TOL {
            Ok(st)
        } else {
            Err(Error::NewtonDivergence { zeta, t, residual: rn })
        }
    }
}

impl Inversion for SubordinatedField<'_> {
    type State = SubState;

    fn origin(&self) -> SubState {
        let (l, dl) = self
            .l0
            .value_and_derivative(Complex64::new(0.0, 0.0))
            .unwrap_or_default();
        SubState {
            w: Complex64::new(0.0, 0.0),
            dg: (2.0 * self.t * l).exp(),
            l,
            dl,
        }
    }

    fn step(&self, s: &SubState, from: Complex64, to: Complex64) -> Result<SubState> {
        let seed = s.w + (to - from) / s.dg;
        self.newton(to, seed)
    }

    fn solved(&self, s: &SubState) -> (Complex64, Complex64) {
        (s.l, s.dl / s.dg)
    }

    fn counters(&self) -> &Counters {
        &self.counters
    }
}

impl Herglotz for SubordinatedField<'_> {
    fn params(&self) -> &TraceParams {
        self.l0.params()
    }

    fn value_and_derivative(&self, zeta: Complex64) -> Result<(Complex64, Complex64)> {
        if self.t == 0.0 {
            return self.l0.value_and_derivative(zeta);
        }
        Ok(self.solved(&solve_point(self, zeta)?))
    }

    fn ring(&self, r: f64, n: usize) -> Result<Vec<Complex64>> {
        if self.t == 0.0 {
            return self.l0.ring(r, n);
        }
        Ok(solve_ring(self, r, n)?.into_iter().map(|v| v.0).collect())
    }
}

/// `f_t(ζ)`, the inverse of `w ↦ w·e^{2tL_0(w)}`, for `a = b = 0`.
pub fn subordinate_f(l0: &dyn Herglotz, t: f64, zeta: Complex64) -> Result<Complex64> {
    if zeta.norm() > 1.0 {
        return Err(Error::ExitedDisk { zeta, t });
    }
    SubordinatedField::new(l0, t)?.f(zeta)
}

// ---------------------------------------------------------------------------
// general a, b: characteristics

/// `L(t, ·)` for arbitrary traces, by backward characteristic shooting on
/// the conserved value of `H`.
pub struct CharacteristicField<'a> {
    l0: &'a dyn Herglotz,
    t: f64,
    counters: Counters,
}

#[derive(Debug, Clone, Copy)]
struct CharState {
    w: Complex64,
    c: Complex64,
    /// `2L + A` at `w`, the branch of `√(A² + 4c)` carried along the path
    root: Complex64,
    /// `d(2L + A)/dw`
    droot: Complex64,
}

/// Backward trace of one characteristic.
struct Trace {
    zeta: Complex64,
    /// `∂ζ/∂c`
    dzeta_dc: Complex64,
    /// `∂ζ/∂w`
    dzeta_dw: Complex64,
}

/// The square root of `disc` closest to `reference`.
fn nearest_root(disc: Complex64, reference: Complex64) -> Complex64 {
    let s = disc.sqrt();
    if (s - reference).norm() > (s + reference).norm() {
        -s
    } else {
        s
    }
}

impl<'a> CharacteristicField<'a> {
    pub fn new(l0: &'a dyn Herglotz, t: f64) -> Result<Self> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::InvalidParams(format!("time must be >= 0, got {t}")));
        }
        Ok(Self {
            l0,
            t,
            counters: Counters::default(),
        })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn counters(&self) -> FlowCounters {
        self.counters.snapshot()
    }

    /// `g_t⁻¹(w)` together with the conserved value `c = H(0, ·)` there.
    pub fn preimage(&self, w: Complex64) -> Result<(Complex64, Complex64)> {
        let s = solve_point(self, w)?;
        let tr = self.trace(s.w, s.c, s.root)?;
        Ok((tr.zeta, s.c))
    }

    /// Right-hand side for `y = (ℓ, ∂ℓ/∂c, ∂ℓ/∂ℓ_t)`, `ℓ = log g`, with the
    /// root taken next to `reference`. Also returns the root used.
    fn rhs(&self, y: &[Complex64; 3], c: Complex64, reference: Complex64) -> ([Complex64; 3], Complex64) {
        let g = y[0].exp();
        let (a, da) = pole_terms(self.l0.params(), g);
        let s = nearest_root(a * a + 4.0 * c, reference);
        let k = a * da * g / s;
        ([s, k * y[1] + 2.0 / s, k * y[2]], s)
    }

    fn rk4(&self, y: &[Complex64; 3], c: Complex64, h: f64, reference: Complex64) -> ([Complex64; 3], Complex64) {
        let add = |y: &[Complex64; 3], k: &[Complex64; 3], s: f64| {
            [y[0] + s * k[0], y[1] + s * k[1], y[2] + s * k[2]]
        };
        let (k1, r1) = self.rhs(y, c, reference);
        let (k2, r2) = self.rhs(&add(y, &k1, 0.5 * h), c, r1);
        let (k3, r3) = self.rhs(&add(y, &k2, 0.5 * h), c, r2);
        let (k4, r4) = self.rhs(&add(y, &k3, h), c, r3);
        let mut out = *y;
        for i in 0..3 {
            out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        (out, r4)
    }

    /// Integrates the characteristic through `w` from time `t` back to 0.
    /// `root` is `2L + A` at `w`; it fixes the starting branch.
    fn trace(&self, w: Complex64, c: Complex64, root: Complex64) -> Result<Trace> {
        let exit = || Error::CharacteristicExit { target: w, t: self.t };
        let mut y = [w.ln(), Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)];
        let mut current = root;
        let mut s = self.t;
        let mut h = CHAR_STEP.min(self.t);
        let mut rejected = 0;
        while s > 0.0 {
            h = h.min(s);
            let (full, _) = self.rk4(&y, c, -h, current);
            let (mid, r_mid) = self.rk4(&y, c, -0.5 * h, current);
            let (half, r_end) = self.rk4(&mid, c, -0.5 * h, r_mid);
            let err = (full[0] - half[0]).norm().max((full[1] - half[1]).norm() * c.norm().max(1e-3));
            // a path that needs vanishing steps or leaves the disk belongs to
            // a wrong trial value
            if h < CHAR_MIN_STEP && s > CHAR_MIN_STEP {
                Counters::bump(&self.counters.rejected_steps, rejected);
                return Err(exit());
            }
            if !(err <= CHAR_LOCAL_TOL) {
                h *= 0.5;
                rejected += 1;
                continue;
            }
            // Richardson-corrected accepted step
            for i in 0..3 {
                y[i] = half[i] + (half[i] - full[i]) / 15.0;
            }
            if y[0].re > CHAR_OUTSIDE {
                Counters::bump(&self.counters.rejected_steps, rejected);
                return Err(exit());
            }
            current = r_end;
            s -= h;
            if err < CHAR_LOCAL_TOL / 64.0 {
                h *= 2.0;
            }
        }
        Counters::bump(&self.counters.rejected_steps, rejected);
        let zeta = y[0].exp();
        if !(y[0].re <= CHAR_OUTSIDE) {
            return Err(exit());
        }
        Ok(Trace {
            zeta,
            dzeta_dc: zeta * y[1],
            dzeta_dw: zeta * y[2] / w,
        })
    }

    fn h0(&self, zeta: Complex64) -> Result<(Complex64, Complex64)> {
        if zeta.norm() > 1.0 {
            // continuation through a gap of μ_0: H_0(ζ) = conj H_0(1/ζ̄)
            let (h, dh) = self.h0(1.0 / zeta.conj())?;
            return Ok((h.conj(), -dh.conj() / (zeta * zeta)));
        }
        let (l, dl) = self.l0.value_and_derivative(zeta)?;
        let (a, da) = pole_terms(self.l0.params(), zeta);
        Ok(((l + a) * l, dl * (2.0 * l + a) + da * l))
    }

    /// Newton on `L(w)` itself rather than on `c = L(L + A)`, so the branch
    /// of `√(A² + 4c)` at the target never has to be chosen.
    fn shoot(&self, w: Complex64, guesses: &[Complex64]) -> Result<CharState> {
        let t = self.t;
        let (a, da) = pole_terms(self.l0.params(), w);
        let c_of = |l: Complex64| l * (l + a);
        let residual = |l: Complex64| -> Result<(Complex64, Trace, Complex64)> {
            let tr = self.trace(w, c_of(l), 2.0 * l + a)?;
            let (h, dh) = self.h0(tr.zeta)?;
            Ok((h - c_of(l), tr, dh))
        };
        let mut start = Err(Error::CharacteristicExit { target: w, t });
        for g in guesses {
            start = residual(*g).map(|r| (*g, r));
            if start.is_ok() {
                break;
            }
        }
        let (mut l_w, (mut phi, mut tr, mut dh)) = start?;
        let mut backtracks = 0;
        let mut converged = false;
        for _ in 0..NEWTON_MAX_ITER {
            let scale = 1.0 + c_of(l_w).norm();
            if phi.norm() < 1e-13 * scale {
                converged = true;
                break;
            }
            let dphi = (dh * tr.dzeta_dc - 1.0) * (2.0 * l_w + a);
            let step = phi / dphi;
            let mut lambda = 1.0;
            let mut accepted = false;
            for _ in 0..30 {
                let cand = l_w - lambda * step;
                if let Ok((p2, t2, d2)) = residual(cand) {
                    if p2.norm() < phi.norm() {
                        l_w = cand;
                        phi = p2;
                        tr = t2;
                        dh = d2;
                        accepted = true;
                        break;
                    }
                }
                lambda *= 0.5;
                backtracks += 1;
            }
            if !accepted {
                converged = phi.norm() < 1e-11 * scale;
                break;
            }
            if (lambda * step).norm() < 1e-15 * (1.0 + l_w.norm()) && phi.norm() < 1e-11 * scale {
                converged = true;
                break;
            }
        }
        Counters::bump(&self.counters.backtracks, backtracks);
        if !converged {
            return Err(Error::NewtonDivergence {
                zeta: w,
                t,
                residual: phi.norm(),
            });
        }
        // dc/dw from Φ(c, w) = H_0(ζ(c, w)) − c = 0
        let dphi_dc = dh * tr.dzeta_dc - 1.0;
        let dc = -(dh * tr.dzeta_dw) / dphi_dc;
        Ok(CharState {
            w,
            c: c_of(l_w),
            root: 2.0 * l_w + a,
            // dc = (2L + A) dL + L dA
            droot: 2.0 * (dc - l_w * da) / (2.0 * l_w + a) + da,
        })
    }

    fn l_of(&self, s: &CharState) -> (Complex64, Complex64) {
        let (a, da) = pole_terms(self.l0.params(), s.w);
        let l = 0.5 * (s.root - a);
        let dl = 0.5 * (s.droot - da);
        (l, dl)
    }
}

impl Inversion for CharacteristicField<'_> {
    type State = CharState;

    fn origin(&self) -> CharState {
        let zero = Complex64::new(0.0, 0.0);
        let c = self.h0(zero).map(|v| v.0).unwrap_or_default();
        let (a, _) = pole_terms(self.l0.params(), zero);
        CharState {
            w: zero,
            c,
            root: (a * a + 4.0 * c).sqrt(),
            droot: zero,
        }
    }

    fn step(&self, s: &CharState, from: Complex64, to: Complex64) -> Result<CharState> {
        let (a0, _) = pole_terms(self.l0.params(), from);
        let (a1, _) = pole_terms(self.l0.params(), to);
        let l = 0.5 * (s.root - a0);
        let dl = 0.5 * (s.droot - (a1 - a0) / (to - from));
        self.shoot(to, &[l + dl * (to - from), l])
    }

    fn solved(&self, s: &CharState) -> (Complex64, Complex64) {
        let (l, dl) = self.l_of(s);
        if s.w.norm() == 0.0 {
            // derivative at the origin is not tracked
            return (l, Complex64::new(0.0, 0.0));
        }
        (l, dl)
    }

    fn counters(&self) -> &Counters {
        &self.counters
    }

    // Re(2L + A) ≥ 0 in the disk. A mirror solution with the other sign
    // meets the physical one over gaps, and continuation can cross to it.
    fn off_sheet(&self, s: &CharState) -> bool {
        s.root.re < 0.0
    }
}

impl Herglotz for CharacteristicField<'_> {
    fn params(&self) -> &TraceParams {
        self.l0.params()
    }

    fn value_and_derivative(&self, zeta: Complex64) -> Result<(Complex64, Complex64)> {
        if self.t == 0.0 {
            return self.l0.value_and_derivative(zeta);
        }
        Ok(self.solved(&solve_point(self, zeta)?))
    }

    fn ring(&self, r: f64, n: usize) -> Result<Vec<Complex64>> {
        if self.t == 0.0 {
            return self.l0.ring(r, n);
        }
        Ok(solve_ring(self, r, n)?.into_iter().map(|v| v.0).collect())
    }
}

// ---------------------------------------------------------------------------
// measure-level API

/// `μ̂_t` together with its parameters and the evaluation diagnostics.
#[derive(Debug, Clone)]
pub struct FlowState {
    pub t: f64,
    pub measure: CircleMeasure,
    pub params: TraceParams,
    pub counters: FlowCounters,
    /// See [`transforms::BoundaryRecovery::mass_defect`].
    pub mass_defect: f64,
}

/// `μ̂_t` for `a = b = 0` via subordination.
pub fn evolve_half_trace(mu0: &CircleMeasure, t: f64) -> Result<CircleMeasure> {
    Ok(evolve(mu0, &TraceParams::half(), t)?.measure)
}

/// `μ̂_t` for arbitrary traces via characteristics.
pub fn evolve_general(mu0: &CircleMeasure, params: &TraceParams, t: f64) -> Result<CircleMeasure> {
    Ok(evolve_characteristic(mu0, params, t)?.measure)
}

/// Evolves `μ̂_0` to time `t` on the grid of `mu0`, choosing subordination
/// when `τP = τQ = ½`.
pub fn evolve(mu0: &CircleMeasure, params: &TraceParams, t: f64) -> Result<FlowState> {
    if !params.is_half_trace() {
        return evolve_characteristic(mu0, params, t);
    }
    check_time(t)?;
    if t == 0.0 {
        return Ok(identity(mu0, params));
    }
    let l0 = HerglotzField::new(mu0.clone(), *params);
    let field = SubordinatedField::new(&l0, t)?;
    let rec = transforms::boundary_recovery(&field, mu0.grid_size())?;
    Ok(FlowState {
        t,
        measure: CircleMeasure::new(0.0, 0.0, rec.density)?,
        params: *params,
        counters: field.counters(),
        mass_defect: rec.mass_defect,
    })
}

/// [`evolve`] forced onto the characteristic evaluator.
pub fn evolve_characteristic(mu0: &CircleMeasure, params: &TraceParams, t: f64) -> Result<FlowState> {
    check_time(t)?;
    if t == 0.0 {
        return Ok(identity(mu0, params));
    }
    let l0 = HerglotzField::new(mu0.clone(), *params);
    let field = CharacteristicField::new(&l0, t)?;
    let rec = transforms::boundary_recovery(&field, mu0.grid_size())?;
    Ok(FlowState {
        t,
        measure: CircleMeasure::new(0.0, 0.0, rec.density)?,
        params: *params,
        counters: field.counters(),
        mass_defect: rec.mass_defect,
    })
}

/// `L(t, ζ)` of the flow from `l0`, evaluated pointwise.
pub fn flow_l(l0: &dyn Herglotz, t: f64, zeta: Complex64) -> Result<Complex64> {
    if l0.params().is_half_trace() {
        SubordinatedField::new(l0, t)?.value(zeta)
    } else {
        CharacteristicField::new(l0, t)?.value(zeta)
    }
}

/// `G(t, z)` of the flow from `l0`.
pub fn flow_cauchy_g(l0: &dyn Herglotz, t: f64, z: Complex64) -> Result<Complex64> {
    let zeta = transforms::szego_to_disk(z)?;
    Ok(transforms::g_from_l(flow_l(l0, t, zeta)?, z, zeta, l0.params()))
}

/// Centred-difference residual of the evolution equation for `G` along the
/// flow from `mu0`; needs `dt ≤ min(times)`.
pub fn pde_check(
    mu0: &CircleMeasure,
    params: &TraceParams,
    times: &[f64],
    zs: &[Complex64],
    dt: f64,
    dz: f64,
) -> Result<PdeResidual> {
    if times.iter().any(|t| *t < dt) {
        return Err(Error::InvalidParams("every time must be at least dt".into()));
    }
    let l0 = HerglotzField::new(mu0.clone(), *params);
    pde_residual_g(|t, z| flow_cauchy_g(&l0, t, z), params, times, zs, dt, dz)
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidParams(format!("time must be >= 0, got {t}")));
    }
    Ok(())
}

fn identity(mu0: &CircleMeasure, params: &TraceParams) -> FlowState {
    FlowState {
        t: 0.0,
        measure: mu0.clone(),
        params: *params,
        counters: FlowCounters::default(),
        mass_defect: 0.0,
    }
}
