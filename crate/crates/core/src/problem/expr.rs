use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::linalg::dot;
use crate::{Error, Result};

/// Smallest admissible eigenvalue of a quadratic form.
pub const PSD_TOL: f64 = 1e-9;

/// A convex function of the decision vector with a structural convexity
/// certificate.
///
/// `Quadratic` is `x^T Q x + b^T x + d`. `SqDist` and `Norm2` subtract `rhs`,
/// so `‖x − a‖ ≤ r` is written as `Norm2 { center: a, rhs: r }` with the
/// usual `≤ 0` constraint convention.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConvexExpr {
    Affine {
        c: Vec<f64>,
        #[serde(default)]
        d: f64,
    },
    Quadratic {
        #[serde(rename = "Q")]
        q: Vec<Vec<f64>>,
        b: Vec<f64>,
        #[serde(default)]
        d: f64,
    },
    SqDist {
        center: Vec<f64>,
        #[serde(default)]
        rhs: f64,
    },
    Norm2 {
        center: Vec<f64>,
        #[serde(default)]
        rhs: f64,
    },
    WeightedSum {
        weights: Vec<f64>,
        terms: Vec<ConvexExpr>,
    },
}

impl ConvexExpr {
    /// Checks dimensions and the convexity certificate.
    pub fn validate(&self, n: usize) -> Result<()> {
        let dim = |len: usize, what: &str| {
            if len == n {
                Ok(())
            } else {
                Err(Error::Validation(format!(
                    "{what} has length {len}, expected {n}"
                )))
            }
        };
        let finite = |xs: &[f64], what: &str| {
            if xs.iter().all(|x| x.is_finite()) {
                Ok(())
            } else {
                Err(Error::Validation(format!(
                    "{what} contains non-finite values"
                )))
            }
        };
        match self {
            ConvexExpr::Affine { c, d } => {
                dim(c.len(), "affine coefficient vector")?;
                finite(c, "affine coefficients")?;
                finite(&[*d], "affine constant")
            }
            ConvexExpr::Quadratic { q, b, d } => {
                dim(q.len(), "Q")?;
                for row in q {
                    dim(row.len(), "Q row")?;
                    finite(row, "Q")?;
                }
                dim(b.len(), "b")?;
                finite(b, "b")?;
                finite(&[*d], "d")?;
                let m = DMatrix::from_fn(n, n, |i, j| q[i][j]);
                let asym = (&m - m.transpose()).abs().max();
                if asym > 1e-12 * (1.0 + m.abs().max()) {
                    return Err(Error::Validation("Q is not symmetric".into()));
                }
                let min_eig = SymmetricEigen::new(m).eigenvalues.min();
                if min_eig < -PSD_TOL {
                    return Err(Error::Validation(format!(
                        "Q is not positive semidefinite (smallest eigenvalue {min_eig})"
                    )));
                }
                Ok(())
            }
            ConvexExpr::SqDist { center, rhs } | ConvexExpr::Norm2 { center, rhs } => {
                dim(center.len(), "center")?;
                finite(center, "center")?;
                finite(&[*rhs], "rhs")
            }
            ConvexExpr::WeightedSum { weights, terms } => {
                if weights.len() != terms.len() {
                    return Err(Error::Validation(
                        "weighted_sum weights/terms length mismatch".into(),
                    ));
                }
                if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
                    return Err(Error::Validation(
                        "weighted_sum weights must be nonnegative".into(),
                    ));
                }
                terms.iter().try_for_each(|t| t.validate(n))
            }
        }
    }

    pub fn is_affine(&self) -> bool {
        match self {
            ConvexExpr::Affine { .. } => true,
            ConvexExpr::Quadratic { q, .. } => q.iter().flatten().all(|&v| v == 0.0),
            ConvexExpr::SqDist { .. } | ConvexExpr::Norm2 { .. } => false,
            ConvexExpr::WeightedSum { weights, terms } => weights
                .iter()
                .zip(terms)
                .all(|(w, t)| *w == 0.0 || t.is_affine()),
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.value_smoothed(x, 0.0)
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        self.add_gradient(x, 0.0, 1.0, &mut g);
        g
    }

    /// Value with `‖x − a‖` replaced by `sqrt(‖x − a‖² + delta²)`.
    pub fn value_smoothed(&self, x: &[f64], delta: f64) -> f64 {
        match self {
            ConvexExpr::Affine { c, d } => dot(c, x) + d,
            ConvexExpr::Quadratic { q, b, d } => {
                let mut s = dot(b, x) + d;
                for (i, row) in q.iter().enumerate() {
                    s += x[i] * dot(row, x);
                }
                s
            }
            ConvexExpr::SqDist { center, rhs } => sq_dist(x, center) - rhs,
            ConvexExpr::Norm2 { center, rhs } => (sq_dist(x, center) + delta * delta).sqrt() - rhs,
            ConvexExpr::WeightedSum { weights, terms } => weights
                .iter()
                .zip(terms)
                .map(|(w, t)| w * t.value_smoothed(x, delta))
                .sum(),
        }
    }

    /// Adds `weight * ∇f(x)` into `g[..n]`.
    pub fn add_gradient(&self, x: &[f64], delta: f64, weight: f64, g: &mut [f64]) {
        match self {
            ConvexExpr::Affine { c, .. } => {
                for (gi, ci) in g.iter_mut().zip(c) {
                    *gi += weight * ci;
                }
            }
            ConvexExpr::Quadratic { q, b, .. } => {
                let n = x.len();
                for i in 0..n {
                    let mut s = b[i];
                    for j in 0..n {
                        s += (q[i][j] + q[j][i]) * x[j];
                    }
                    g[i] += weight * s;
                }
            }
            ConvexExpr::SqDist { center, .. } => {
                for i in 0..x.len() {
                    g[i] += weight * 2.0 * (x[i] - center[i]);
                }
            }
            ConvexExpr::Norm2 { center, .. } => {
                let r = (sq_dist(x, center) + delta * delta).sqrt();
                if r > 0.0 {
                    for i in 0..x.len() {
                        g[i] += weight * (x[i] - center[i]) / r;
                    }
                }
            }
            ConvexExpr::WeightedSum { weights, terms } => {
                for (w, t) in weights.iter().zip(terms) {
                    t.add_gradient(x, delta, weight * w, g);
                }
            }
        }
    }

    /// Adds `weight * ∇²f(x)` into the leading `n × n` block of `h`.
    pub fn add_hessian(&self, x: &[f64], delta: f64, weight: f64, h: &mut DMatrix<f64>) {
        let n = x.len();
        match self {
            ConvexExpr::Affine { .. } => {}
            ConvexExpr::Quadratic { q, .. } => {
                for i in 0..n {
                    for j in 0..n {
                        h[(i, j)] += weight * (q[i][j] + q[j][i]);
                    }
                }
            }
            ConvexExpr::SqDist { .. } => {
                for i in 0..n {
                    h[(i, i)] += 2.0 * weight;
                }
            }
            ConvexExpr::Norm2 { center, .. } => {
                let r2 = sq_dist(x, center) + delta * delta;
                let r = r2.sqrt();
                if r > 0.0 {
                    for i in 0..n {
                        let di = x[i] - center[i];
                        for j in 0..n {
                            let dj = x[j] - center[j];
                            let id = if i == j { 1.0 } else { 0.0 };
                            h[(i, j)] += weight * (id / r - di * dj / (r2 * r));
                        }
                    }
                }
            }
            ConvexExpr::WeightedSum { weights, terms } => {
                for (w, t) in weights.iter().zip(terms) {
                    t.add_hessian(x, delta, weight * w, h);
                }
            }
        }
    }

    /// Interval upper bound of the expression over the box `[lo, hi]`.
    pub fn upper_bound(&self, lo: &[f64], hi: &[f64]) -> f64 {
        self.bounds(lo, hi).1
    }

    /// Interval lower bound of the expression over the box `[lo, hi]`.
    pub fn lower_bound(&self, lo: &[f64], hi: &[f64]) -> f64 {
        self.bounds(lo, hi).0
    }

    fn bounds(&self, lo: &[f64], hi: &[f64]) -> (f64, f64) {
        match self {
            ConvexExpr::Affine { c, d } => {
                let mut iv = (*d, *d);
                for i in 0..c.len() {
                    iv = iv_add(iv, iv_scale((lo[i], hi[i]), c[i]));
                }
                iv
            }
            ConvexExpr::Quadratic { q, b, d } => {
                let n = lo.len();
                let mut iv = (*d, *d);
                for i in 0..n {
                    let xi = (lo[i], hi[i]);
                    iv = iv_add(iv, iv_scale(xi, b[i]));
                    iv = iv_add(iv, iv_scale(iv_sq(xi), q[i][i]));
                    for j in 0..n {
                        if j != i {
                            iv = iv_add(iv, iv_scale(iv_mul(xi, (lo[j], hi[j])), q[i][j]));
                        }
                    }
                }
                iv
            }
            ConvexExpr::SqDist { center, rhs } => {
                let s = sq_dist_bounds(lo, hi, center);
                (s.0 - rhs, s.1 - rhs)
            }
            ConvexExpr::Norm2 { center, rhs } => {
                let s = sq_dist_bounds(lo, hi, center);
                (s.0.sqrt() - rhs, s.1.sqrt() - rhs)
            }
            ConvexExpr::WeightedSum { weights, terms } => {
                weights.iter().zip(terms).fold((0.0, 0.0), |acc, (w, t)| {
                    iv_add(acc, iv_scale(t.bounds(lo, hi), *w))
                })
            }
        }
    }
}

fn sq_dist(x: &[f64], a: &[f64]) -> f64 {
    x.iter().zip(a).map(|(p, q)| (p - q) * (p - q)).sum()
}

fn sq_dist_bounds(lo: &[f64], hi: &[f64], a: &[f64]) -> (f64, f64) {
    let mut s = (0.0, 0.0);
    for i in 0..a.len() {
        s = iv_add(s, iv_sq((lo[i] - a[i], hi[i] - a[i])));
    }
    s
}

// Interval helpers. Products with 0 * inf are taken as 0.
fn mul0(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        0.0
    } else {
        a * b
    }
}

fn iv_add(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    (a.0 + b.0, a.1 + b.1)
}

fn iv_scale(a: (f64, f64), s: f64) -> (f64, f64) {
    let (p, q) = (mul0(a.0, s), mul0(a.1, s));
    (p.min(q), p.max(q))
}

fn iv_mul(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    let c = [
        mul0(a.0, b.0),
        mul0(a.0, b.1),
        mul0(a.1, b.0),
        mul0(a.1, b.1),
    ];
    (
        c.iter().copied().fold(f64::INFINITY, f64::min),
        c.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    )
}

fn iv_sq(a: (f64, f64)) -> (f64, f64) {
    let hi = (a.0 * a.0).max(a.1 * a.1);
    if a.0 <= 0.0 && a.1 >= 0.0 {
        (0.0, hi)
    } else {
        ((a.0 * a.0).min(a.1 * a.1), hi)
    }
}
