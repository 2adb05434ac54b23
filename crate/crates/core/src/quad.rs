//! One-dimensional quadrature.

use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on `[−1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "need at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `∫_a^b f`.
    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let (m, h) = (0.5 * (a + b), 0.5 * (b - a));
        h * self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(m + h * x))
            .sum::<f64>()
    }

    /// Composite rule on `panels` equal subintervals.
    pub fn integrate_composite(&self, a: f64, b: f64, panels: usize, f: impl Fn(f64) -> f64) -> f64 {
        let h = (b - a) / panels as f64;
        (0..panels)
            .map(|k| self.integrate(a + k as f64 * h, a + (k + 1) as f64 * h, &f))
            .sum()
    }
}

/// `(P_n(x), P_n'(x))`.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

/// Adaptive Simpson quadrature with Richardson correction. Fails soft:
/// subintervals that hit `max_depth` contribute their error estimate.
pub fn adaptive_simpson<E>(
    f: &mut impl FnMut(f64) -> Result<f64, E>,
    a: f64,
    b: f64,
    tol: f64,
    max_depth: usize,
) -> Result<Estimate, E> {
    let fa = f(a)?;
    let fm = f(0.5 * (a + b))?;
    let fb = f(b)?;
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut est = Estimate {
        value: 0.0,
        error: 0.0,
        evaluations: 3,
    };
    simpson_rec(f, a, b, fa, fm, fb, whole, tol, max_depth, &mut est)?;
    Ok(est)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<E>(
    f: &mut impl FnMut(f64) -> Result<f64, E>,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: usize,
    est: &mut Estimate,
) -> Result<(), E> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm)?;
    let frm = f(rm)?;
    est.evaluations += 2;
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        est.value += left + right + delta / 15.0;
        est.error += delta.abs() / 15.0;
        return Ok(());
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, est)?;
    simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, est)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::convert::Infallible;

    #[test]
    fn gauss_weights_sum_to_two() {
        for n in [1, 2, 5, 16, 40] {
            let g = GaussLegendre::new(n);
            assert!((g.weights.iter().sum::<f64>() - 2.0).abs() < 1e-13);
        }
    }

    #[test]
    fn gauss_exact_for_polynomials() {
        let g = GaussLegendre::new(6);
        // exact up to degree 11
        let v = g.integrate(0.0, 2.0, |x| x.powi(11));
        assert!((v - 2f64.powi(12) / 12.0).abs() < 1e-10);
        let v = g.integrate_composite(0.0, PI, 8, f64::sin);
        assert!((v - 2.0).abs() < 1e-14);
    }

    #[test]
    fn simpson_smooth_and_singular() {
        let mut f = |x: f64| Ok::<_, Infallible>(x.exp());
        let e = adaptive_simpson(&mut f, 0.0, 1.0, 1e-12, 40).unwrap();
        assert!((e.value - (1f64.exp() - 1.0)).abs() < 1e-11);
        let mut g = |x: f64| Ok::<_, Infallible>(x.sqrt());
        let e = adaptive_simpson(&mut g, 0.0, 1.0, 1e-10, 50).unwrap();
        assert!((e.value - 2.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn simpson_propagates_errors() {
        let mut f = |x: f64| if x > 0.5 { Err("boom") } else { Ok(x) };
        assert_eq!(adaptive_simpson(&mut f, 0.0, 1.0, 1e-8, 20), Err("boom"));
    }

    proptest! {
        #[test]
        fn gauss_integrates_cubics(c0 in -3.0..3.0f64, c3 in -3.0..3.0f64, b in 0.1..4.0f64) {
            let g = GaussLegendre::new(2);
            let v = g.integrate(0.0, b, |x| c0 + c3 * x * x * x);
            let exact = c0 * b + c3 * b.powi(4) / 4.0;
            prop_assert!((v - exact).abs() < 1e-11 * (1.0 + exact.abs()));
        }
    }
}
