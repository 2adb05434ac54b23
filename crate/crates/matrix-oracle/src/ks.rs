//! Kolmogorov–Smirnov distances between pooled eigenvalues and `ν_t`.

use std::io::Write;

use liblab_core::loewner;
use liblab_core::measures::{from_circle, CircleMeasure, IntervalMeasure, TraceParams};

use crate::model::Snapshot;
use crate::{Error, Result};

/// Distribution function of a measure on `[0, 1]` with atoms at the ends,
/// piecewise linear between the density nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticCdf {
    nodes: Vec<(f64, f64)>,
    atom1: f64,
}

impl AnalyticCdf {
    pub fn new(nu: &IntervalMeasure) -> Self {
        Self {
            nodes: nu.cdf_nodes(),
            atom1: nu.atom1,
        }
    }

    pub fn total(&self) -> f64 {
        self.nodes.last().map_or(0.0, |n| n.1) + self.atom1
    }

    /// `F(x) = ν([0, x])`.
    pub fn at(&self, x: f64) -> f64 {
        if x < 0.0 {
            0.0
        } else if x >= 1.0 {
            self.total()
        } else {
            self.interp(x)
        }
    }

    /// `F(x−) = ν([0, x))`.
    pub fn left(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else if x > 1.0 {
            self.total()
        } else {
            self.interp(x)
        }
    }

    fn interp(&self, x: f64) -> f64 {
        let i = self.nodes.partition_point(|n| n.0 <= x);
        if i == 0 {
            return self.nodes[0].1;
        }
        if i == self.nodes.len() {
            return self.nodes[i - 1].1;
        }
        let (x0, f0) = self.nodes[i - 1];
        let (x1, f1) = self.nodes[i];
        f0 + (f1 - f0) * (x - x0) / (x1 - x0)
    }
}

/// `sup_x |F_emp(x) − F(x)|` for sorted samples. Both functions are
/// monotone, so the supremum is attained at a sample point or at one of the
/// analytic jumps `x ∈ {0, 1}`, from the left or the right.
pub fn ks_distance(sorted: &[f64], cdf: &AnalyticCdf) -> f64 {
    let n = sorted.len() as f64;
    let count_le = |x: f64| sorted.partition_point(|v| *v <= x) as f64 / n;
    let count_lt = |x: f64| sorted.partition_point(|v| *v < x) as f64 / n;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let x = sorted[i];
        let mut j = i;
        while j < sorted.len() && sorted[j] == x {
            j += 1;
        }
        d = d
            .max((j as f64 / n - cdf.at(x)).abs())
            .max((i as f64 / n - cdf.left(x)).abs());
        i = j;
    }
    for x in [0.0, 1.0] {
        d = d
            .max((count_le(x) - cdf.at(x)).abs())
            .max((count_lt(x) - cdf.left(x)).abs());
    }
    d
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsPoint {
    pub t: f64,
    pub distance: f64,
}

/// KS distance per output time. Times must agree to `1e−9`.
pub fn compare_to_flow(snapshots: &[Snapshot], analytic: &[(f64, IntervalMeasure)]) -> Result<Vec<KsPoint>> {
    if snapshots.len() != analytic.len() {
        return Err(Error::TimeGridMismatch(format!(
            "{} empirical times vs {} analytic",
            snapshots.len(),
            analytic.len()
        )));
    }
    snapshots
        .iter()
        .zip(analytic)
        .map(|(s, (t, nu))| {
            if (s.t - t).abs() > 1e-9 {
                return Err(Error::TimeGridMismatch(format!("empirical t = {} vs analytic t = {t}", s.t)));
            }
            Ok(KsPoint {
                t: s.t,
                distance: ks_distance(&s.eigenvalues, &AnalyticCdf::new(nu)),
            })
        })
        .collect()
}

/// `ν_t` at each time, evolved from `μ̂_0` and with the forced atoms restored.
pub fn analytic_laws(mu0: &CircleMeasure, params: &TraceParams, times: &[f64]) -> Result<Vec<(f64, IntervalMeasure)>> {
    times
        .iter()
        .map(|&t| {
            let state = loewner::evolve(mu0, params, t)?;
            Ok((t, from_circle(&state.measure, params)?))
        })
        .collect()
}

/// CSV with columns `t, eigenvalue_index, value`, 17 significant digits.
pub fn write_csv(mut out: impl Write, snapshots: &[Snapshot]) -> std::io::Result<()> {
    writeln!(out, "t,eigenvalue_index,value")?;
    for s in snapshots {
        for (i, v) in s.eigenvalues.iter().enumerate() {
            writeln!(out, "{:.16e},{i},{:.16e}", s.t, v)?;
        }
    }
    Ok(())
}
