//! Convex vector optimization instances: minimize `Γ(x)` with respect to the
//! order induced by a polyhedral cone `C`, over a compact convex set `X`
//! given by a box and convex inequalities `g_i(x) <= 0`.

mod builtin;
mod expr;
mod file;

pub use builtin::{builtin, BUILTIN_NAMES};
pub use expr::{ConvexExpr, PSD_TOL};
pub use file::{parse_problem, BoxTable, ConeTable, ProblemFile};

use rand::Rng;

use crate::geometry::{NormSpec, PolyCone};
use crate::scalarization::ipm::{self, Affine, ExprCombo, ScalarProgram, SmoothFn};
use crate::scalarization::SolverConfig;
use crate::vertex_enum::{is_bounded, HPolytope};
use crate::{geometry::Halfspace, Error, Result};

/// Value and gradient of a scalar oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleEval {
    pub value: f64,
    pub gradient: Vec<f64>,
}

/// A validated bounded convex vector optimization problem.
#[derive(Debug, Clone)]
pub struct CvopInstance {
    name: String,
    n: usize,
    q: usize,
    objective: Vec<ConvexExpr>,
    constraints: Vec<ConvexExpr>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    cone: PolyCone,
    norm: NormSpec,
    beta: Option<f64>,
    declared_slater: Option<Vec<f64>>,
    slater: Vec<f64>,
    bound_lo: Vec<f64>,
    bound_hi: Vec<f64>,
}

impl CvopInstance {
    /// Validates a problem description.
    pub fn new(spec: ProblemFile) -> Result<Self> {
        let ProblemFile {
            name,
            n,
            q,
            norm,
            cone,
            objective,
            constraints,
            bounds,
            beta,
            slater_point,
        } = spec;
        if n == 0 || q == 0 {
            return Err(Error::Validation("n and q must be positive".into()));
        }
        if objective.len() != q {
            return Err(Error::Validation(format!(
                "objective has {} components, expected q = {q}",
                objective.len()
            )));
        }
        for (i, e) in objective.iter().enumerate() {
            e.validate(n)
                .map_err(|e| Error::Validation(format!("objective[{i}]: {e}")))?;
        }
        for (i, e) in constraints.iter().enumerate() {
            e.validate(n)
                .map_err(|e| Error::Validation(format!("constraints[{i}]: {e}")))?;
        }
        let cone = PolyCone::new(cone.dual_generators, cone.generators, norm)?;
        if cone.dim() != q {
            return Err(Error::Validation(format!(
                "cone dimension {} differs from q = {q}",
                cone.dim()
            )));
        }
        // C-convexity: w^T Γ must be convex for every dual generator w.
        for (j, w) in cone.dual_generators().iter().enumerate() {
            for (i, wi) in w.iter().enumerate() {
                if *wi < -1e-12 && !objective[i].is_affine() {
                    return Err(Error::Validation(format!(
                        "cannot certify C-convexity: dual generator {j} has a negative weight on \
                         the non-affine objective {i}"
                    )));
                }
            }
        }
        let bounds = bounds.unwrap_or_else(|| BoxTable {
            lower: vec![f64::NEG_INFINITY; n],
            upper: vec![f64::INFINITY; n],
        });
        let (lower, upper) = (bounds.lower, bounds.upper);
        if lower.len() != n || upper.len() != n {
            return Err(Error::Validation("box bounds must have length n".into()));
        }
        for k in 0..n {
            if lower[k].is_nan() || upper[k].is_nan() {
                return Err(Error::Validation("box bounds must not be NaN".into()));
            }
            if !(lower[k] < upper[k]) {
                return Err(Error::Validation(format!(
                    "box has empty interior in coordinate {k} ({} >= {})",
                    lower[k], upper[k]
                )));
            }
        }
        if let Some(b) = beta {
            if !b.is_finite() {
                return Err(Error::Validation("beta must be finite".into()));
            }
        }
        let mut inst = CvopInstance {
            name: name.unwrap_or_else(|| "problem".into()),
            n,
            q,
            objective,
            constraints,
            lower: lower.clone(),
            upper: upper.clone(),
            cone,
            norm,
            beta,
            declared_slater: slater_point.clone(),
            slater: Vec::new(),
            bound_lo: lower,
            bound_hi: upper,
        };
        inst.tighten_bounds_analytically();
        let slater = match slater_point {
            Some(p) => {
                if p.len() != n {
                    return Err(Error::Validation("slater_point must have length n".into()));
                }
                if !inst.strictly_feasible(&p) {
                    return Err(Error::Validation(
                        "declared slater_point is not strictly feasible".into(),
                    ));
                }
                p
            }
            None => {
                if inst
                    .bound_lo
                    .iter()
                    .chain(&inst.bound_hi)
                    .any(|v| !v.is_finite())
                {
                    return Err(Error::Validation(
                        "missing Slater witness: X has no finite bounding box to take a center from; \
                         declare slater_point"
                            .into(),
                    ));
                }
                let mid: Vec<f64> = inst
                    .bound_lo
                    .iter()
                    .zip(&inst.bound_hi)
                    .map(|(a, b)| 0.5 * (a + b))
                    .collect();
                if !inst.strictly_feasible(&mid) {
                    return Err(Error::Validation(
                        "missing Slater witness: the box center is not strictly feasible; declare \
                         slater_point"
                            .into(),
                    ));
                }
                mid
            }
        };
        inst.slater = slater;
        if inst
            .bound_lo
            .iter()
            .chain(&inst.bound_hi)
            .any(|v| !v.is_finite())
        {
            inst.tighten_bounds_numerically()?;
        }
        Ok(inst)
    }

    /// The same problem measured in a different norm.
    pub fn with_norm(&self, norm: NormSpec) -> Result<Self> {
        let mut out = self.clone();
        out.cone = self.cone.renormalized(norm)?;
        out.norm = norm;
        Ok(out)
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn q(&self) -> usize {
        self.q
    }
    pub fn objective(&self) -> &[ConvexExpr] {
        &self.objective
    }
    pub fn constraints(&self) -> &[ConvexExpr] {
        &self.constraints
    }
    pub fn lower(&self) -> &[f64] {
        &self.lower
    }
    pub fn upper(&self) -> &[f64] {
        &self.upper
    }
    pub fn cone(&self) -> &PolyCone {
        &self.cone
    }
    pub fn norm(&self) -> NormSpec {
        self.norm
    }
    pub fn declared_beta(&self) -> Option<f64> {
        self.beta
    }
    pub fn slater_point(&self) -> &[f64] {
        &self.slater
    }
    /// A finite box containing `X`.
    pub fn bounding_box(&self) -> (&[f64], &[f64]) {
        (&self.bound_lo, &self.bound_hi)
    }

    /// `w̄ = sum_j w^j / ‖sum_j w^j‖_*`.
    pub fn w_bar(&self) -> Vec<f64> {
        self.cone.interior_dual(self.norm)
    }

    /// An upper bound `β >= sup_{x ∈ X} w̄^T Γ(x)`: the declared value, or an
    /// interval-arithmetic bound over the bounding box.
    pub fn beta(&self) -> f64 {
        if let Some(b) = self.beta {
            return b;
        }
        let wbar = self.w_bar();
        let (lo, hi) = self.bounding_box();
        self.objective
            .iter()
            .zip(&wbar)
            .map(|(e, &w)| {
                if w >= 0.0 {
                    w * e.upper_bound(lo, hi)
                } else {
                    w * e.lower_bound(lo, hi)
                }
            })
            .sum()
    }

    /// `Γ_i(x)` and its gradient (`i` is zero-based).
    pub fn eval_objective(&self, i: usize, x: &[f64]) -> Result<OracleEval> {
        let e = self.objective.get(i).ok_or_else(|| {
            Error::Invalid(format!("objective index {i} out of range 0..{}", self.q))
        })?;
        self.check_x(x)?;
        Ok(OracleEval {
            value: e.value(x),
            gradient: e.gradient(x),
        })
    }

    /// `w^T Γ(x)` and its gradient, for `w ∈ C+`.
    pub fn eval_scalarized(&self, w: &[f64], x: &[f64]) -> Result<OracleEval> {
        if w.len() != self.q {
            return Err(Error::Invalid("weight vector has wrong length".into()));
        }
        if !self.cone.dual_contains(w, 1e-12) {
            return Err(Error::Invalid(
                "weight vector is not in the dual cone".into(),
            ));
        }
        self.check_x(x)?;
        let mut gradient = vec![0.0; self.n];
        let mut value = 0.0;
        for (e, &wi) in self.objective.iter().zip(w) {
            value += wi * e.value(x);
            e.add_gradient(x, 0.0, wi, &mut gradient);
        }
        Ok(OracleEval { value, gradient })
    }

    /// `Γ(x)`.
    pub fn image(&self, x: &[f64]) -> Vec<f64> {
        self.objective.iter().map(|e| e.value(x)).collect()
    }

    fn check_x(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::Invalid(format!(
                "x has length {}, expected {}",
                x.len(),
                self.n
            )));
        }
        Ok(())
    }

    /// `x ∈ X` within `tol` (constraints and box).
    pub fn is_feasible(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.n
            && x.iter().zip(&self.lower).all(|(v, l)| *v >= l - tol)
            && x.iter().zip(&self.upper).all(|(v, u)| *v <= u + tol)
            && self.constraints.iter().all(|g| g.value(x) <= tol)
    }

    pub fn strictly_feasible(&self, x: &[f64]) -> bool {
        x.len() == self.n
            && x.iter().zip(&self.lower).all(|(v, l)| v > l)
            && x.iter().zip(&self.upper).all(|(v, u)| v < u)
            && self.constraints.iter().all(|g| g.value(x) < 0.0)
    }

    /// Draws `count` points uniformly from `X` by rejection in the bounding box.
    pub fn sample_feasible<R: Rng>(&self, rng: &mut R, count: usize) -> Result<Vec<Vec<f64>>> {
        let (lo, hi) = self.bounding_box();
        let mut out = Vec::with_capacity(count);
        let max_tries = 1000 * count.max(1) + 10_000;
        let mut tries = 0;
        while out.len() < count {
            tries += 1;
            if tries > max_tries {
                return Err(Error::Invalid("rejection sampling of X failed".into()));
            }
            let x: Vec<f64> = (0..self.n)
                .map(|k| rng.random_range(lo[k]..=hi[k]))
                .collect();
            if self.is_feasible(&x, 0.0) {
                out.push(x);
            }
        }
        Ok(out)
    }

    /// Serializable description of this instance.
    pub fn to_file(&self) -> ProblemFile {
        ProblemFile {
            name: Some(self.name.clone()),
            n: self.n,
            q: self.q,
            norm: self.norm,
            cone: ConeTable {
                dual_generators: self.cone.dual_generators().to_vec(),
                generators: self.cone.generators().to_vec(),
            },
            objective: self.objective.clone(),
            constraints: self.constraints.clone(),
            bounds: Some(BoxTable {
                lower: self.lower.clone(),
                upper: self.upper.clone(),
            }),
            beta: self.beta,
            slater_point: self.declared_slater.clone(),
        }
    }

    pub fn to_toml(&self) -> String {
        self.to_file().to_toml()
    }

    /// Intersects the box with boxes implied by ball- and ellipsoid-shaped constraints.
    fn tighten_bounds_analytically(&mut self) {
        let n = self.n;
        for g in &self.constraints {
            let implied: Option<(Vec<f64>, Vec<f64>)> = match g {
                ConvexExpr::Norm2 { center, rhs } if *rhs >= 0.0 => Some((
                    center.iter().map(|c| c - rhs).collect(),
                    center.iter().map(|c| c + rhs).collect(),
                )),
                ConvexExpr::SqDist { center, rhs } if *rhs >= 0.0 => {
                    let r = rhs.sqrt();
                    Some((
                        center.iter().map(|c| c - r).collect(),
                        center.iter().map(|c| c + r).collect(),
                    ))
                }
                ConvexExpr::Quadratic { q, b, d } => ellipsoid_box(q, b, *d),
                ConvexExpr::Affine { c, d } => {
                    let nz: Vec<usize> = (0..n).filter(|&k| c[k] != 0.0).collect();
                    if nz.len() == 1 {
                        let k = nz[0];
                        let mut lo = vec![f64::NEG_INFINITY; n];
                        let mut hi = vec![f64::INFINITY; n];
                        if c[k] > 0.0 {
                            hi[k] = -d / c[k];
                        } else {
                            lo[k] = -d / c[k];
                        }
                        Some((lo, hi))
                    } else {
                        None
                    }
                }
                _ => None,
            };
            if let Some((lo, hi)) = implied {
                for k in 0..n {
                    self.bound_lo[k] = self.bound_lo[k].max(lo[k]);
                    self.bound_hi[k] = self.bound_hi[k].min(hi[k]);
                }
            }
        }
    }

    /// Computes the missing box sides as `min/max x_k` over `X`, after
    /// checking that the affine constraints and finite box sides have a
    /// trivial recession cone.
    fn tighten_bounds_numerically(&mut self) -> Result<()> {
        let n = self.n;
        let mut rows = Vec::new();
        for k in 0..n {
            let mut e = vec![0.0; n];
            if self.bound_lo[k].is_finite() {
                e[k] = 1.0;
                rows.push(Halfspace::new(e.clone(), 0.0)?);
            }
            if self.bound_hi[k].is_finite() {
                e[k] = -1.0;
                rows.push(Halfspace::new(e, 0.0)?);
            }
        }
        for g in &self.constraints {
            if let ConvexExpr::Affine { c, .. } = g {
                if c.iter().any(|&v| v != 0.0) {
                    rows.push(Halfspace::new(c.iter().map(|v| -v).collect(), 0.0)?);
                }
            }
        }
        if rows.is_empty() || !is_bounded(&HPolytope::new(n, rows)?) {
            return Err(Error::Validation("feasible set X is unbounded".into()));
        }
        let cfg = SolverConfig::default();
        for k in 0..n {
            for sign in [1.0, -1.0] {
                let need = if sign > 0.0 {
                    !self.bound_lo[k].is_finite()
                } else {
                    !self.bound_hi[k].is_finite()
                };
                if !need {
                    continue;
                }
                let prog = ScalarProgram {
                    dim: n,
                    objective: Box::new(Affine {
                        coeffs: vec![(k, sign)],
                        constant: 0.0,
                    }),
                    constraints: self.feasible_set_rows(0.0),
                    start: self.slater.clone(),
                };
                let sol = ipm::solve(&prog, &cfg)?;
                drop(prog);
                let margin = 1e-6 * (1.0 + sol.objective.abs());
                if sign > 0.0 {
                    self.bound_lo[k] = sol.objective - margin;
                } else {
                    self.bound_hi[k] = -sol.objective + margin;
                }
            }
        }
        Ok(())
    }

    /// Constraint rows describing `X` on the leading `n` lifted coordinates.
    pub(crate) fn feasible_set_rows(&self, delta: f64) -> Vec<Box<dyn SmoothFn + '_>> {
        let mut rows: Vec<Box<dyn SmoothFn + '_>> = Vec::new();
        for g in &self.constraints {
            rows.push(Box::new(ExprCombo {
                n: self.n,
                terms: vec![(1.0, g)],
                linear: Vec::new(),
                constant: 0.0,
                delta,
            }));
        }
        for k in 0..self.n {
            if self.lower[k].is_finite() {
                rows.push(Box::new(Affine {
                    coeffs: vec![(k, -1.0)],
                    constant: self.lower[k],
                }));
            }
            if self.upper[k].is_finite() {
                rows.push(Box::new(Affine {
                    coeffs: vec![(k, 1.0)],
                    constant: -self.upper[k],
                }));
            }
        }
        rows
    }

    /// Largest `|Γ_i|` bound over the box; used to scale tolerances.
    pub fn objective_scale(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        1.0 + self
            .objective
            .iter()
            .map(|e| e.upper_bound(lo, hi).abs().max(e.lower_bound(lo, hi).abs()))
            .fold(0.0, f64::max)
    }
}

impl PartialEq for CvopInstance {
    fn eq(&self, other: &Self) -> bool {
        self.to_file() == other.to_file()
    }
}

/// Bounding box of `{x : x^T Q x + b^T x + d <= 0}` when `Q` is positive definite.
fn ellipsoid_box(q: &[Vec<f64>], b: &[f64], d: f64) -> Option<(Vec<f64>, Vec<f64>)> {
    use nalgebra::{DMatrix, DVector};
    let n = b.len();
    let m = DMatrix::from_fn(n, n, |i, j| 0.5 * (q[i][j] + q[j][i]));
    let chol = m.clone().cholesky()?;
    let inv = chol.inverse();
    // center c = -Q^{-1} b / 2, and (x-c)^T Q (x-c) <= c^T Q c - d =: r2
    let c = -(&inv * DVector::from_column_slice(b)) * 0.5;
    let r2 = (c.transpose() * &m * &c)[(0, 0)] - d;
    if !(r2 >= 0.0) {
        return None;
    }
    let lo = (0..n).map(|k| c[k] - (r2 * inv[(k, k)]).sqrt()).collect();
    let hi = (0..n).map(|k| c[k] + (r2 * inv[(k, k)]).sqrt()).collect();
    Some((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example2_objective_evaluations() {
        let inst = builtin("example2").unwrap();
        let e = inst.eval_objective(0, &[1.0, 1.0]).unwrap();
        assert_eq!(e.value, 0.0);
        assert_eq!(e.gradient, vec![0.0, 0.0]);
        let e = inst.eval_objective(1, &[0.0, 0.0]).unwrap();
        assert_eq!(e.value, 13.0);
        assert_eq!(e.gradient, vec![-4.0, -6.0]);
        assert!(inst.eval_objective(3, &[0.0, 0.0]).is_err());
        let s = inst.eval_scalarized(&[1.0, 1.0, 1.0], &[1.0, 1.0]).unwrap();
        assert_eq!(s.value, 15.0);
        assert!(inst
            .eval_scalarized(&[-1.0, 1.0, 1.0], &[1.0, 1.0])
            .is_err());
    }

    #[test]
    fn example1_objective_evaluations() {
        let inst = builtin("example1_q2").unwrap();
        let e = inst.eval_objective(0, &[0.3, 0.9]).unwrap();
        assert_eq!(e.value, 0.3);
        assert_eq!(e.gradient, vec![1.0, 0.0]);
        assert_eq!(
            inst.eval_scalarized(&[1.0, 0.0], &[0.0, 1.0])
                .unwrap()
                .value,
            0.0
        );
        // bounding box inferred from the ball constraint
        let (lo, hi) = inst.bounding_box();
        assert_eq!(lo, &[0.0, 0.0]);
        assert_eq!(hi, &[2.0, 2.0]);
        assert!(inst.beta() >= 2f64.sqrt() + 1.0);
    }

    #[test]
    fn example3_scalarized_at_origin() {
        let inst = builtin("example3").unwrap();
        assert_eq!(
            inst.eval_scalarized(&[1.0, 0.0, 0.0], &[0.0, 0.0, 0.0])
                .unwrap()
                .value,
            0.0
        );
    }

    #[test]
    fn collapsed_box_is_rejected() {
        let mut f = builtin("example2").unwrap().to_file();
        f.bounds = Some(BoxTable {
            lower: vec![0.0, 1.0],
            upper: vec![10.0, 1.0],
        });
        let err = CvopInstance::new(f).unwrap_err();
        assert!(err.to_string().contains("empty interior"));
    }

    #[test]
    fn unbounded_set_is_rejected() {
        let mut f = builtin("example2").unwrap().to_file();
        f.bounds = None;
        f.constraints = vec![ConvexExpr::Affine {
            c: vec![1.0, 2.0],
            d: -10.0,
        }];
        f.slater_point = Some(vec![0.0, 0.0]);
        let err = CvopInstance::new(f).unwrap_err();
        assert!(err.to_string().contains("unbounded"), "{err}");
    }

    #[test]
    fn polyhedral_set_bounds_found_numerically() {
        // x >= 0 (as affine rows), x1 + x2 <= 1, no box
        let mut f = builtin("example2").unwrap().to_file();
        f.bounds = None;
        f.constraints = vec![
            ConvexExpr::Affine {
                c: vec![1.0, 1.0],
                d: -1.0,
            },
            ConvexExpr::Affine {
                c: vec![-1.0, 0.5],
                d: 0.0,
            },
            ConvexExpr::Affine {
                c: vec![0.5, -1.0],
                d: 0.0,
            },
        ];
        f.slater_point = Some(vec![0.3, 0.3]);
        let inst = CvopInstance::new(f).unwrap();
        let (lo, hi) = inst.bounding_box();
        assert!(lo.iter().all(|v| v.is_finite() && *v <= 1e-9 && *v > -0.1));
        assert!(hi.iter().all(|v| (*v - 2.0 / 3.0).abs() < 1e-4));
    }

    #[test]
    fn mixed_sign_cone_requires_affine_objectives() {
        let mut f = builtin("example2").unwrap().to_file();
        f.cone = ConeTable {
            dual_generators: vec![
                vec![1.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.0],
                vec![0.0, 0.0, 1.0],
                vec![1.0, -0.1, 0.0],
            ],
            generators: vec![
                vec![1.0, 0.0, 0.0],
                vec![0.0, 0.0, 1.0],
                vec![1.0, 1.0, 0.0],
            ],
        };
        let err = CvopInstance::new(f).unwrap_err();
        assert!(err.to_string().contains("C-convexity"), "{err}");
    }

    #[test]
    fn non_strict_slater_point_rejected() {
        let mut f = builtin("example2").unwrap().to_file();
        f.slater_point = Some(vec![0.0, 1.0]);
        assert!(CvopInstance::new(f).is_err());
    }

    #[test]
    fn sampling_yields_feasible_points() {
        use rand::SeedableRng;
        let inst = builtin("example3").unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let pts = inst.sample_feasible(&mut rng, 100).unwrap();
        assert_eq!(pts.len(), 100);
        assert!(pts.iter().all(|x| inst.is_feasible(x, 0.0)));
    }
}
