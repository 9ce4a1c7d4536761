//! Mutual information of a consistent Gaussian LLR, `J(sigma)`, and its
//! inverse.
//!
//! `1 - J(sigma) = E[log2(1 + exp(-L))]` with `L ~ N(sigma^2 / 2, sigma^2)`.
//! [`j_fun`] integrates this directly; [`JTable`] is a cubic-spline table in
//! the variance `x = sigma^2` used inside the PEXIT loops; [`j_inv`] is the
//! usual two-branch closed-form approximation of the inverse.

use std::f64::consts::LN_2;
use std::sync::OnceLock;

use crate::error::{Error, Result};

const GL_POINTS: usize = 16;

/// Gauss-Legendre nodes and weights on [-1, 1].
fn gauss_legendre() -> &'static ([f64; GL_POINTS], [f64; GL_POINTS]) {
    static RULE: OnceLock<([f64; GL_POINTS], [f64; GL_POINTS])> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GL_POINTS;
        let mut x = [0.0; GL_POINTS];
        let mut w = [0.0; GL_POINTS];
        for i in 0..n {
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            loop {
                // Legendre recurrence for P_n(z) and P_{n-1}(z)
                let (mut p0, mut p1) = (1.0, 0.0);
                for k in 0..n {
                    let p2 = p1;
                    p1 = p0;
                    p0 = ((2 * k + 1) as f64 * z * p1 - k as f64 * p2) / (k + 1) as f64;
                }
                let dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
                let dz = p0 / dp;
                z -= dz;
                if dz.abs() < 1e-15 {
                    x[i] = z;
                    w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
                    break;
                }
            }
        }
        (x, w)
    })
}

/// `ln(1 + e^t)` without overflow.
#[inline]
fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// `1 - J(sigma)` by composite Gauss-Legendre quadrature over the
/// standardised variable `z = (L - sigma^2/2) / sigma`.
fn one_minus_j(sigma: f64) -> f64 {
    if sigma == 0.0 {
        return 1.0;
    }
    let (nodes, weights) = gauss_legendre();
    // Mass sits in the Gaussian core and, for large sigma, around
    // z = -sigma/2 where the LLR changes sign.
    let lo = -(sigma / 2.0) - 14.0;
    let hi = 14.0;
    let width = (1.0 / sigma).clamp(0.05, 0.5);
    let panels = ((hi - lo) / width).ceil() as usize;
    let h = (hi - lo) / panels as f64;
    let norm = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    let mut total = 0.0;
    for p in 0..panels {
        let mid = lo + (p as f64 + 0.5) * h;
        let mut acc = 0.0;
        for (&t, &w) in nodes.iter().zip(weights) {
            let z = mid + 0.5 * h * t;
            let llr = 0.5 * sigma * sigma + sigma * z;
            acc += w * (-0.5 * z * z).exp() * softplus(-llr);
        }
        total += 0.5 * h * acc;
    }
    (norm * total / LN_2).clamp(0.0, 1.0)
}

/// Mutual information between a BPSK bit and a consistent Gaussian LLR of
/// standard deviation `sigma`, by numerical quadrature.
pub fn j_fun(sigma: f64) -> Result<f64> {
    if !(sigma >= 0.0) {
        return Err(Error::param(format!("J requires sigma >= 0, got {sigma}")));
    }
    if sigma.is_infinite() {
        return Ok(1.0);
    }
    Ok(1.0 - one_minus_j(sigma))
}

const ETA1: f64 = 1.09542;
const ETA2: f64 = 0.214217;
const ETA3: f64 = 2.33737;
const ETA4: f64 = -0.706692;
const ETA5: f64 = 0.386013;
const ETA6: f64 = 1.75017;
const JINV_SPLIT: f64 = 0.3646;

/// Closed-form approximation of `J^-1(I)` for `0 <= I < 1`.
pub fn j_inv(mi: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&mi) {
        return Err(Error::param(format!("J^-1 requires 0 <= I < 1, got {mi}")));
    }
    Ok(j_inv_unchecked(mi))
}

#[inline]
fn j_inv_unchecked(mi: f64) -> f64 {
    if mi <= JINV_SPLIT {
        ETA1 * mi * mi + ETA2 * mi + ETA3 * mi.sqrt()
    } else {
        ETA4 * (ETA5 * (1.0 - mi)).ln() + ETA6 * mi
    }
}

/// Largest MI handed to [`j_inv`] inside the recursions; values at or above
/// it map to `J^-1 ~ 27`, where `J` is 1 to machine precision.
pub const MI_CEILING: f64 = 1.0 - 1e-15;

/// `J^-1` clamped to `[0, MI_CEILING]`, for MI values produced by the
/// recursions that may round to exactly 1.
#[inline]
pub fn j_inv_saturating(mi: f64) -> f64 {
    j_inv_unchecked(mi.clamp(0.0, MI_CEILING))
}

/// Variance step of the table (1/32).
const TABLE_STEP: f64 = 1.0 / 32.0;
/// Beyond this variance `1 - J < 1e-21`.
const TABLE_MAX_VAR: f64 = 400.0;

/// Natural cubic spline of `J` as a function of the LLR variance.
#[derive(Debug, Clone)]
pub struct JTable {
    values: Vec<f64>,
    second: Vec<f64>,
}

impl JTable {
    /// Shared table, built on first use.
    pub fn global() -> &'static JTable {
        static TABLE: OnceLock<JTable> = OnceLock::new();
        TABLE.get_or_init(JTable::build)
    }

    fn build() -> JTable {
        let n = (TABLE_MAX_VAR / TABLE_STEP).round() as usize + 1;
        let values: Vec<f64> = (0..n)
            .map(|k| 1.0 - one_minus_j((k as f64 * TABLE_STEP).sqrt()))
            .collect();
        // Tridiagonal solve for second derivatives. J has non-zero curvature
        // at x = 0, so that end is pinned to a one-sided difference estimate;
        // the far end is flat.
        let h = TABLE_STEP;
        let mut second = vec![0.0; n];
        second[0] = (2.0 * values[0] - 5.0 * values[1] + 4.0 * values[2] - values[3]) / (h * h);
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        for k in 1..n - 1 {
            let mut rhs = 6.0 * (values[k + 1] - 2.0 * values[k] + values[k - 1]) / (h * h);
            if k == 1 {
                rhs -= second[0];
            }
            let denom = 4.0 - c[k - 1];
            c[k] = 1.0 / denom;
            d[k] = (rhs - d[k - 1]) / denom;
        }
        for k in (1..n - 1).rev() {
            second[k] = d[k] - c[k] * second[k + 1];
        }
        JTable { values, second }
    }

    /// `J(sqrt(var))`.
    #[inline]
    pub fn j_of_var(&self, var: f64) -> f64 {
        if var <= 0.0 {
            return 0.0;
        }
        if var >= TABLE_MAX_VAR {
            return 1.0;
        }
        let pos = var * (1.0 / TABLE_STEP);
        let k = pos as usize;
        let b = pos - k as f64;
        let a = 1.0 - b;
        let h2 = TABLE_STEP * TABLE_STEP / 6.0;
        a * self.values[k]
            + b * self.values[k + 1]
            + ((a * a * a - a) * self.second[k] + (b * b * b - b) * self.second[k + 1]) * h2
    }

    /// `J(sigma)`.
    #[inline]
    pub fn j(&self, sigma: f64) -> f64 {
        self.j_of_var(sigma * sigma)
    }
}
