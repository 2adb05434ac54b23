//! Unitary Brownian motion by exponential Euler steps, and the spectrum of
//! the compression `Q U_t P U_t* Q`.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::evd::{self, ComputeEigenvectors};
use faer::linalg::matmul::matmul;
use faer::{c64, Accum, Mat, MatRef, Par, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::{Error, MatrixModelConfig, Result};

/// Relative size of the last Taylor term kept in `exp(i√dt G)·W`.
pub const EXP_TOL: f64 = 1e-15;
/// Newton–Schulz stops once `‖W*W − I‖_max` is below this.
pub const POLAR_TOL: f64 = 1e-13;
const POLAR_MAX_ITER: usize = 10;
/// Eigenvalues within this distance of 0 or 1 are snapped onto the endpoint,
/// so that atoms of `ν_t` show up as exact jumps.
pub const SNAP: f64 = 1e-10;

/// Initial pair `(P, Q)`.
#[derive(Debug, Clone)]
pub enum Initial {
    /// `P` diagonal, `Q = V·diag·V*` with `V` Haar: asymptotically free.
    Free,
    /// Explicit orthogonal projections of size `n × n`.
    Explicit { p: Mat<c64>, q: Mat<c64> },
}

impl Initial {
    /// `P = Q = diag(1, …, 1, 0, …, 0)` of the given rank.
    pub fn equal(n: usize, rank: usize) -> Self {
        let p = diagonal_projection(n, rank);
        Self::Explicit { p: p.clone(), q: p }
    }
}

/// Pooled, sorted eigenvalues of all samples at one output time.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub eigenvalues: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub config: MatrixModelConfig,
    pub snapshots: Vec<Snapshot>,
    /// Largest `‖W*W − I‖_max` after re-unitarization, over all steps and samples.
    pub unitarity_drift: f64,
}

/// Runs `config.samples` independent replicas and records the spectrum of
/// `Q U_t P U_t* Q` at each of `times` (increasing multiples of `dt` in
/// `[0, t_end]`). Replica `k` draws from stream `k` of a ChaCha generator
/// seeded with `config.seed`, so the output does not depend on scheduling.
pub fn simulate_spectrum(config: &MatrixModelConfig, initial: &Initial, times: &[f64]) -> Result<Spectrum> {
    config.validate()?;
    let steps = output_steps(config, times)?;
    let (n, rp, rq) = (config.n, config.rank_p(), config.rank_q());
    let fixed = match initial {
        Initial::Free => None,
        Initial::Explicit { p, q } => Some((range_isometry(p, n, rp, "P")?, range_isometry(q, n, rq, "Q")?)),
    };

    let runs: Vec<Result<(Vec<Vec<f64>>, f64)>> = (0..config.samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(k as u64);
            let (w0, vq) = match &fixed {
                Some((vp, vq)) => (vp.clone(), vq.clone()),
                None => (diagonal_isometry(n, rp), haar_isometry(n, rq, &mut rng)),
            };
            replica(config, w0, &vq, &steps, &mut rng)
        })
        .collect();

    let mut snapshots: Vec<Snapshot> = times
        .iter()
        .map(|&t| Snapshot {
            t,
            eigenvalues: Vec::with_capacity(n * config.samples),
        })
        .collect();
    let mut drift: f64 = 0.0;
    for run in runs {
        let (spectra, d) = run?;
        drift = drift.max(d);
        for (snap, ev) in snapshots.iter_mut().zip(spectra) {
            snap.eigenvalues.extend(ev);
        }
    }
    for snap in &mut snapshots {
        snap.eigenvalues.sort_by(f64::total_cmp);
    }
    Ok(Spectrum {
        config: *config,
        snapshots,
        unitarity_drift: drift,
    })
}

fn output_steps(config: &MatrixModelConfig, times: &[f64]) -> Result<Vec<usize>> {
    let mut out = Vec::with_capacity(times.len());
    for (i, &t) in times.iter().enumerate() {
        if !(t >= 0.0 && t <= config.t_end * (1.0 + 1e-12)) {
            return Err(Error::InvalidConfig(format!(
                "output time {t} outside [0, {}]",
                config.t_end
            )));
        }
        let k = (t / config.dt).round();
        if (k * config.dt - t).abs() > 1e-9 * t.max(1.0) {
            return Err(Error::InvalidConfig(format!(
                "output time {t} is not a multiple of dt = {}",
                config.dt
            )));
        }
        if i > 0 && t <= times[i - 1] {
            return Err(Error::InvalidConfig("output times must increase".into()));
        }
        out.push(k as usize);
    }
    Ok(out)
}

fn replica(
    config: &MatrixModelConfig,
    mut w: Mat<c64>,
    vq: &Mat<c64>,
    steps: &[usize],
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<Vec<f64>>, f64)> {
    let n = config.n;
    let a = config.dt.sqrt();
    let mut out = Vec::with_capacity(steps.len());
    let mut drift: f64 = 0.0;
    let mut k = 0;
    for &target in steps {
        while k < target {
            let g = gue(n, rng);
            w = exp_apply(g.as_ref(), a, w.as_ref());
            drift = drift.max(polar(&mut w));
            k += 1;
        }
        out.push(compression_spectrum(w.as_ref(), vq.as_ref(), n)?);
    }
    Ok((out, drift))
}

/// GUE(n): Hermitian, `E|G_ij|² = 1/n` for every entry.
pub fn gue(n: usize, rng: &mut impl Rng) -> Mat<c64> {
    let s = (1.0 / n as f64).sqrt();
    let s2 = (0.5 / n as f64).sqrt();
    let mut g = Mat::<c64>::zeros(n, n);
    for j in 0..n {
        let d: f64 = rng.sample(StandardNormal);
        g[(j, j)] = c64::new(s * d, 0.0);
        for i in j + 1..n {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            let z = c64::new(s2 * re, s2 * im);
            g[(i, j)] = z;
            g[(j, i)] = z.conj();
        }
    }
    g
}

/// `exp(i·a·G)·W` by its Taylor series, summed until the terms drop below
/// `EXP_TOL` relative to `W`.
pub fn exp_apply(g: MatRef<'_, c64>, a: f64, w: MatRef<'_, c64>) -> Mat<c64> {
    let scale = frobenius(w).max(f64::MIN_POSITIVE);
    let mut acc = w.to_owned();
    let mut term = w.to_owned();
    let mut next = Mat::<c64>::zeros(w.nrows(), w.ncols());
    for k in 1..=60 {
        matmul(next.as_mut(), Accum::Replace, g, term.as_ref(), c64::new(0.0, a / k as f64), Par::Seq);
        std::mem::swap(&mut term, &mut next);
        acc += &term;
        if frobenius(term.as_ref()) <= EXP_TOL * scale {
            break;
        }
    }
    acc
}

/// Newton–Schulz polar iteration `W ← W(3I − W*W)/2`, which converges to the
/// unitary polar factor for `‖W*W − I‖ < 1`. Returns the final `‖W*W − I‖_max`.
pub fn polar(w: &mut Mat<c64>) -> f64 {
    let r = w.ncols();
    let mut m = Mat::<c64>::zeros(r, r);
    let mut err = f64::INFINITY;
    for it in 0..=POLAR_MAX_ITER {
        matmul(m.as_mut(), Accum::Replace, w.adjoint(), w.as_ref(), c64::new(1.0, 0.0), Par::Seq);
        err = 0.0;
        for j in 0..r {
            for i in 0..r {
                let e = if i == j { m[(i, j)] - 1.0 } else { m[(i, j)] };
                err = err.max(e.norm());
            }
        }
        if err <= POLAR_TOL || it == POLAR_MAX_ITER {
            break;
        }
        // m ← (3I − m)/2
        for j in 0..r {
            for i in 0..r {
                m[(i, j)] = -0.5 * m[(i, j)];
            }
            m[(j, j)] += 1.5;
        }
        let prev = w.clone();
        matmul(w.as_mut(), Accum::Replace, prev.as_ref(), m.as_ref(), c64::new(1.0, 0.0), Par::Seq);
    }
    err
}

/// First `r` columns of a Haar unitary: QR of a complex Ginibre matrix with
/// the phases of `diag R` divided out.
pub fn haar_isometry(n: usize, r: usize, rng: &mut impl Rng) -> Mat<c64> {
    let z = Mat::<c64>::from_fn(n, r, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c64::new(re, im)
    });
    let qr = z.qr();
    let mut q = qr.compute_thin_Q();
    let rr = qr.thin_R();
    for j in 0..r {
        let d = rr[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c64::new(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

fn diagonal_isometry(n: usize, r: usize) -> Mat<c64> {
    Mat::from_fn(n, r, |i, j| if i == j { c64::new(1.0, 0.0) } else { c64::new(0.0, 0.0) })
}

fn diagonal_projection(n: usize, r: usize) -> Mat<c64> {
    Mat::from_fn(n, n, |i, j| {
        if i == j && i < r {
            c64::new(1.0, 0.0)
        } else {
            c64::new(0.0, 0.0)
        }
    })
}

/// Orthonormal basis of the range of an orthogonal projection of rank `r`.
fn range_isometry(p: &Mat<c64>, n: usize, r: usize, name: &str) -> Result<Mat<c64>> {
    if p.nrows() != n || p.ncols() != n {
        return Err(Error::InvalidConfig(format!(
            "{name} is {}×{}, expected {n}×{n}",
            p.nrows(),
            p.ncols()
        )));
    }
    let mut asym: f64 = 0.0;
    for j in 0..n {
        for i in 0..n {
            asym = asym.max((p[(i, j)] - p[(j, i)].conj()).norm());
        }
    }
    let p2 = p * p;
    let idem = (&p2 - p).norm_max();
    if asym > 1e-10 || idem > 1e-8 {
        return Err(Error::InvalidConfig(format!(
            "{name} is not an orthogonal projection (‖{name}−{name}*‖ = {asym:e}, ‖{name}²−{name}‖ = {idem:e})"
        )));
    }
    let eig = p
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let vals = eig.S().column_vector();
    let k = (0..n).filter(|&i| vals[i].re > 0.5).count();
    if k != r {
        return Err(Error::InvalidConfig(format!(
            "{name} has rank {k} but the trace fraction asks for {r}"
        )));
    }
    // eigenvalues ascend, so the range is spanned by the last r vectors
    let u = eig.U();
    Ok(Mat::from_fn(n, r, |i, j| u[(i, n - r + j)]))
}

/// Eigenvalues of `Q W W* Q` (ascending, snapped into `[0, 1]`), where `Q`
/// projects onto the range of `vq`. These are the squared singular values
/// of `B = V_Q* W`, padded with zeros to `n`.
fn compression_spectrum(w: MatRef<'_, c64>, vq: MatRef<'_, c64>, n: usize) -> Result<Vec<f64>> {
    let (s, r) = (vq.ncols(), w.ncols());
    let mut b = Mat::<c64>::zeros(s, r);
    matmul(b.as_mut(), Accum::Replace, vq.adjoint(), w, c64::new(1.0, 0.0), Par::Seq);
    let k = s.min(r);
    let mut gram = Mat::<c64>::zeros(k, k);
    if s <= r {
        matmul(gram.as_mut(), Accum::Replace, b.as_ref(), b.adjoint(), c64::new(1.0, 0.0), Par::Seq);
    } else {
        matmul(gram.as_mut(), Accum::Replace, b.adjoint(), b.as_ref(), c64::new(1.0, 0.0), Par::Seq);
    }
    let mut vals = hermitian_eigenvalues(gram.as_ref())?;
    for v in &mut vals {
        *v = snap(*v);
    }
    let mut out = vec![0.0; n - k];
    out.extend(vals);
    out.sort_by(f64::total_cmp);
    Ok(out)
}

fn snap(v: f64) -> f64 {
    let v = v.clamp(0.0, 1.0);
    if v < SNAP {
        0.0
    } else if v > 1.0 - SNAP {
        1.0
    } else {
        v
    }
}

fn hermitian_eigenvalues(a: MatRef<'_, c64>) -> Result<Vec<f64>> {
    let n = a.nrows();
    let mut s = faer::diag::Diag::<c64>::zeros(n);
    let par = Par::Seq;
    let req = evd::self_adjoint_evd_scratch::<c64>(n, ComputeEigenvectors::No, par, Default::default());
    evd::self_adjoint_evd(
        a,
        s.as_mut(),
        None,
        par,
        MemStack::new(&mut MemBuffer::new(req)),
        Default::default(),
    )
    .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    Ok(s.column_vector().iter().map(|z| z.re).collect())
}

fn frobenius(a: MatRef<'_, c64>) -> f64 {
    a.norm_l2()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn gue_is_hermitian_with_unit_trace_of_square() {
        let n = 200;
        let g = gue(n, &mut rng(1));
        let mut sq = 0.0;
        for j in 0..n {
            for i in 0..n {
                assert_eq!(g[(i, j)], g[(j, i)].conj());
                sq += g[(i, j)].norm_sqr();
            }
        }
        // tr(G²)/n → 1
        assert!((sq / n as f64 - 1.0).abs() < 0.02);
    }

    #[test]
    fn exponential_of_diagonal() {
        let n = 6;
        let d = [0.3, -0.2, 1.0, 0.0, -1.5, 0.7];
        let g = Mat::from_fn(n, n, |i, j| if i == j { c64::new(d[i], 0.0) } else { c64::new(0.0, 0.0) });
        let w = diagonal_isometry(n, 3);
        let e = exp_apply(g.as_ref(), 0.4, w.as_ref());
        for j in 0..3 {
            let want = c64::new(0.0, 0.4 * d[j]).exp();
            assert!((e[(j, j)] - want).norm() < 1e-14);
        }
    }

    #[test]
    fn haar_columns_are_orthonormal() {
        let mut v = haar_isometry(50, 20, &mut rng(3));
        assert!(polar(&mut v) < 1e-13);
    }

    #[test]
    fn polar_restores_orthonormality() {
        let mut w = haar_isometry(40, 15, &mut rng(4));
        for j in 0..15 {
            for i in 0..40 {
                w[(i, j)] *= 1.0 + 1e-3 * ((i + 2 * j) % 5) as f64;
            }
        }
        assert!(polar(&mut w) < 1e-13);
    }

    #[test]
    fn compression_of_equal_projections() {
        let n = 10;
        let v = diagonal_isometry(n, 4);
        let ev = compression_spectrum(v.as_ref(), v.as_ref(), n).unwrap();
        assert_eq!(ev, [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn explicit_pairs_are_validated() {
        let n = 8;
        let c = MatrixModelConfig::new(n, 0.5, 0.5);
        let p = diagonal_projection(n, 4);
        let mut q = p.clone();
        q[(0, 1)] = c64::new(0.3, 0.0);
        assert!(simulate_spectrum(&c, &Initial::Explicit { p: p.clone(), q }, &[0.0]).is_err());
        let q3 = diagonal_projection(n, 3);
        assert!(simulate_spectrum(&c, &Initial::Explicit { p, q: q3 }, &[0.0]).is_err());
    }

    #[test]
    fn output_times_must_sit_on_the_step_grid() {
        let c = MatrixModelConfig {
            dt: 0.01,
            t_end: 0.1,
            ..MatrixModelConfig::new(8, 0.5, 0.5)
        };
        assert_eq!(output_steps(&c, &[0.0, 0.05, 0.1]).unwrap(), [0, 5, 10]);
        assert!(output_steps(&c, &[0.005]).is_err());
        assert!(output_steps(&c, &[0.2]).is_err());
        assert!(output_steps(&c, &[0.05, 0.05]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn eigenvalues_lie_in_the_unit_interval(seed in 0u64..1000, n in 4usize..24, tp in 0.2..0.8f64, tq in 0.2..0.8f64) {
            let c = MatrixModelConfig {
                dt: 0.01,
                t_end: 0.05,
                seed,
                ..MatrixModelConfig::new(n, tp, tq)
            };
            prop_assume!(c.validate().is_ok());
            let s = simulate_spectrum(&c, &Initial::Free, &[0.0, 0.05]).unwrap();
            for snap in &s.snapshots {
                prop_assert_eq!(snap.eigenvalues.len(), n);
                prop_assert!(snap.eigenvalues.iter().all(|v| (0.0..=1.0).contains(v)));
            }
            prop_assert!(s.unitarity_drift < 1e-10);
        }

        #[test]
        fn exponential_is_unitary(seed in 0u64..1000, a in 0.01..0.3f64) {
            let g = gue(30, &mut rng(seed));
            let mut u = exp_apply(g.as_ref(), a, diagonal_isometry(30, 30).as_ref());
            // already unitary to truncation accuracy before any correction
            let m = u.adjoint() * &u;
            let mut err: f64 = 0.0;
            for j in 0..30 {
                for i in 0..30 {
                    let e = if i == j { m[(i, j)] - 1.0 } else { m[(i, j)] };
                    err = err.max(e.norm());
                }
            }
            prop_assert!(err < 1e-12);
            prop_assert!(polar(&mut u) < 1e-13);
        }
    }
}
