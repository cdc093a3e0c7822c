//! Scalar subproblems: weighted sums, norm-minimizing scalarizations (with
//! and without the compactifying halfspace `S(γ) = {y : w̄^T y <= γ}`), their
//! duals, and point-to-polytope projections.
//!
//! All programs are lifted to smooth form and handed to the log-barrier
//! interior point method in [`ipm`]. Lagrange multipliers of the cone rows
//! `w^j^T (Γ(x) − z − v) <= 0` give the dual vector `w = Σ μ_j w^j`, the
//! multiplier of the `S(γ)` row gives `λ`, and `w̃ = w − λ w̄`.

pub mod ipm;

use crate::geometry::{dual_norm_eval, norm_eval, Halfspace, NormSpec, PolyCone};
use crate::linalg::dot;
use crate::problem::CvopInstance;
use crate::{Error, Result};

use ipm::{Affine, ExprCombo, ScalarProgram, SmoothFn, SmoothNorm};

/// Solver tolerances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Relative duality gap `m / t` at exit.
    pub tol_gap: f64,
    /// Feasibility tolerance used when checking returned points.
    pub tol_feas: f64,
    /// Cap on barrier weight increases.
    pub max_barrier_iters: usize,
    /// Barrier weight growth factor.
    pub mu: f64,
    /// Smoothing of Euclidean norms: `‖u‖ ≈ sqrt(‖u‖² + δ²)`.
    pub delta_smooth: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol_gap: 1e-7,
            tol_feas: 1e-8,
            max_barrier_iters: 60,
            mu: 10.0,
            delta_smooth: 1e-9,
        }
    }
}

impl SolverConfig {
    /// A tighter configuration for verification and geometry queries.
    pub fn precise() -> Self {
        SolverConfig {
            tol_gap: 1e-10,
            tol_feas: 1e-10,
            max_barrier_iters: 100,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.tol_gap > 0.0
            && self.tol_feas > 0.0
            && self.max_barrier_iters > 0
            && self.mu > 1.0
            && self.delta_smooth > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Invalid(
                "solver tolerances must be positive (and mu > 1)".into(),
            ))
        }
    }
}

/// Solution of a weighted-sum scalarization.
#[derive(Debug, Clone)]
pub struct WeightedSumSolution {
    pub x: Vec<f64>,
    pub value: f64,
    /// Certified bound on `value − inf`.
    pub gap: f64,
}

/// Primal and dual solutions of a norm-minimizing scalarization at `v`.
#[derive(Debug, Clone)]
pub struct PrimalDualSolution {
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    /// `‖z‖`.
    pub objective_value: f64,
    /// Dual vector in `C+`.
    pub w: Vec<f64>,
    /// Multiplier of the `S(γ)` row (0 for the unmodified problem).
    pub lambda: f64,
    /// `w − λ w̄`.
    pub w_tilde: Vec<f64>,
    /// Duality gap of the lifted program at exit.
    pub gap: f64,
    pub iterations: usize,
}

impl PrimalDualSolution {
    /// `y^v = v + z^v`, a weakly minimal point of the upper image.
    pub fn y(&self, v: &[f64]) -> Vec<f64> {
        v.iter().zip(&self.z).map(|(a, b)| a + b).collect()
    }

    /// The supporting halfspace `{y : w̃^T y >= w̃^T y^v}` with `w̃`
    /// rescaled to unit dual norm.
    pub fn cut(&self, v: &[f64], norm: NormSpec) -> Result<Halfspace> {
        let s = dual_norm_eval(norm, &self.w_tilde);
        if !(s > 0.0) {
            return Err(Error::Invalid(
                "zero dual direction; no cut available".into(),
            ));
        }
        let normal: Vec<f64> = self.w_tilde.iter().map(|x| x / s).collect();
        Halfspace::supporting(normal, &self.y(v))
    }
}

/// Solves `minimize w^T Γ(x) subject to x ∈ X`.
pub fn solve_weighted_sum(
    inst: &CvopInstance,
    w: &[f64],
    cfg: &SolverConfig,
) -> Result<WeightedSumSolution> {
    if w.len() != inst.q() {
        return Err(Error::Invalid("weight vector has wrong length".into()));
    }
    if !inst.cone().dual_contains(w, 1e-9) {
        return Err(Error::Invalid(
            "weight vector is not in the dual cone".into(),
        ));
    }
    let n = inst.n();
    let prog = ScalarProgram {
        dim: n,
        objective: Box::new(ExprCombo {
            n,
            terms: w
                .iter()
                .copied()
                .zip(inst.objective())
                .filter(|(c, _)| *c != 0.0)
                .collect(),
            linear: Vec::new(),
            constant: 0.0,
            delta: cfg.delta_smooth,
        }),
        constraints: inst.feasible_set_rows(cfg.delta_smooth),
        start: inst.slater_point().to_vec(),
    };
    let sol = ipm::solve(&prog, cfg)?;
    let x = sol.y;
    let value = inst
        .objective()
        .iter()
        .zip(w)
        .map(|(e, wi)| wi * e.value(&x))
        .sum();
    Ok(WeightedSumSolution {
        x,
        value,
        gap: sol.gap,
    })
}

/// Solves the norm-minimizing scalarization at `v`: the distance from `v`
/// to the upper image.
pub fn solve_norm_min(
    inst: &CvopInstance,
    v: &[f64],
    cfg: &SolverConfig,
) -> Result<PrimalDualSolution> {
    solve_lifted(inst, v, None, cfg)
}

/// Solves the modified scalarization with the extra row `w̄^T (v + z) <= γ`:
/// the distance from `v` to `P ∩ S(γ)`.
pub fn solve_modified(
    inst: &CvopInstance,
    v: &[f64],
    gamma: f64,
    w_bar: &[f64],
    cfg: &SolverConfig,
) -> Result<PrimalDualSolution> {
    solve_lifted(inst, v, Some((gamma, w_bar)), cfg)
}

fn solve_lifted(
    inst: &CvopInstance,
    v: &[f64],
    halfspace: Option<(f64, &[f64])>,
    cfg: &SolverConfig,
) -> Result<PrimalDualSolution> {
    let (n, q) = (inst.n(), inst.q());
    if v.len() != q {
        return Err(Error::Invalid("point v has wrong length".into()));
    }
    let norm = inst.norm();
    let zs = n;
    let epi = n + q;
    let n_epi = if norm == NormSpec::L1 { q } else { 1 };
    let dim = n + q + n_epi;
    let cone = inst.cone();
    let duals = cone.dual_generators();

    let mut constraints: Vec<Box<dyn SmoothFn + '_>> = Vec::new();
    for wj in duals {
        constraints.push(Box::new(ExprCombo {
            n,
            terms: wj
                .iter()
                .copied()
                .zip(inst.objective())
                .filter(|(c, _)| *c != 0.0)
                .collect(),
            linear: (0..q).map(|i| (zs + i, -wj[i])).collect(),
            constant: -dot(wj, v),
            delta: cfg.delta_smooth,
        }));
    }
    let s_row = halfspace.map(|(gamma, wbar)| {
        constraints.push(Box::new(Affine {
            coeffs: (0..q).map(|i| (zs + i, wbar[i])).collect(),
            constant: dot(wbar, v) - gamma,
        }));
        constraints.len() - 1
    });
    match norm {
        NormSpec::L2 => constraints.push(Box::new(SmoothNorm {
            start: zs,
            center: vec![0.0; q],
            delta: cfg.delta_smooth,
            epi: Some(epi),
        })),
        NormSpec::L1 => {
            for i in 0..q {
                constraints.push(Box::new(Affine {
                    coeffs: vec![(zs + i, 1.0), (epi + i, -1.0)],
                    constant: 0.0,
                }));
                constraints.push(Box::new(Affine {
                    coeffs: vec![(zs + i, -1.0), (epi + i, -1.0)],
                    constant: 0.0,
                }));
            }
        }
        NormSpec::LInf => {
            for i in 0..q {
                constraints.push(Box::new(Affine {
                    coeffs: vec![(zs + i, 1.0), (epi, -1.0)],
                    constant: 0.0,
                }));
                constraints.push(Box::new(Affine {
                    coeffs: vec![(zs + i, -1.0), (epi, -1.0)],
                    constant: 0.0,
                }));
            }
        }
    }
    constraints.extend(inst.feasible_set_rows(cfg.delta_smooth));

    // Strictly feasible start: Γ(x0) pushed into the interior of C, kept
    // strictly inside S(γ).
    let x0 = inst.slater_point();
    let g0 = inst.image(x0);
    let dir = cone.interior_direction();
    let mut step = 1e-3 * inst.objective_scale();
    if let Some((gamma, wbar)) = halfspace {
        let room = gamma - dot(wbar, &g0);
        if !(room > 0.0) {
            return Err(Error::Infeasible(format!(
                "Γ(x0) violates S(γ) by {:.3e}; γ is too small",
                -room
            )));
        }
        step = step.min(0.5 * room / dot(wbar, &dir).max(f64::MIN_POSITIVE));
    }
    let mut start = vec![0.0; dim];
    start[..n].copy_from_slice(x0);
    for i in 0..q {
        start[zs + i] = g0[i] + step * dir[i] - v[i];
    }
    let z0 = &start[zs..zs + q].to_vec();
    match norm {
        NormSpec::L2 => start[epi] = 1.1 * crate::linalg::norm2(z0) + 1.0,
        NormSpec::L1 => {
            for i in 0..q {
                start[epi + i] = z0[i].abs() + 1.0;
            }
        }
        NormSpec::LInf => start[epi] = norm_eval(NormSpec::LInf, z0) + 1.0,
    }
    let objective: Box<dyn SmoothFn> = Box::new(Affine {
        coeffs: (0..n_epi).map(|k| (epi + k, 1.0)).collect(),
        constant: 0.0,
    });
    let prog = ScalarProgram {
        dim,
        objective,
        constraints,
        start,
    };
    let sol = ipm::solve(&prog, cfg)?;

    let x = sol.y[..n].to_vec();
    let z = sol.y[zs..zs + q].to_vec();
    let mut w = vec![0.0; q];
    for (j, wj) in duals.iter().enumerate() {
        let mu = sol.multipliers[j];
        for i in 0..q {
            w[i] += mu * wj[i];
        }
    }
    let mut lambda = s_row.map_or(0.0, |k| sol.multipliers[k]);
    let mut w_tilde: Vec<f64> = match halfspace {
        Some((_, wbar)) => w.iter().zip(wbar).map(|(a, b)| a - lambda * b).collect(),
        None => w.clone(),
    };
    // At the optimum the multiplier of the objective's epigraph row is
    // exactly 1, which makes ‖w̃‖_* = 1 whenever z ≠ 0. The barrier's estimate
    // of that multiplier is only accurate to the gap, while the direction of
    // w̃ is far more accurate, so the dual triple is rescaled jointly.
    let objective_value = norm_eval(norm, &z);
    let dn = dual_norm_eval(norm, &w_tilde);
    if objective_value > crate::metrics::TOL_ZERO && dn > 0.0 {
        for a in w.iter_mut().chain(w_tilde.iter_mut()) {
            *a /= dn;
        }
        lambda /= dn;
    }
    Ok(PrimalDualSolution {
        objective_value,
        x,
        z,
        w,
        lambda,
        w_tilde,
        gap: sol.gap,
        iterations: sol.iterations,
    })
}

/// Value of the dual objective at `(w, λ)`:
/// `inf_{x∈X} w^T Γ(x) − w^T v + λ (w̄^T v − γ)`, after scaling `(w, λ)` so
/// that `‖w − λ w̄‖_* <= 1`. The infimum is replaced by a certified lower
/// bound, so the result is a valid lower bound on the primal optimum.
pub fn dual_value(
    inst: &CvopInstance,
    v: &[f64],
    halfspace: Option<(f64, &[f64])>,
    w: &[f64],
    lambda: f64,
    cfg: &SolverConfig,
) -> Result<f64> {
    let q = inst.q();
    let w_tilde: Vec<f64> = match halfspace {
        Some((_, wbar)) => (0..q).map(|i| w[i] - lambda * wbar[i]).collect(),
        None => w.to_vec(),
    };
    let s = dual_norm_eval(inst.norm(), &w_tilde).max(1.0);
    let w: Vec<f64> = w.iter().map(|x| x / s).collect();
    let lambda = lambda.max(0.0) / s;
    let ws = solve_weighted_sum(inst, &w, cfg)?;
    let inf_lower = ws.value - ws.gap;
    let mut val = inf_lower - dot(&w, v);
    if let Some((gamma, wbar)) = halfspace {
        val += lambda * (dot(wbar, v) - gamma);
    }
    Ok(val)
}

/// Nearest point of `conv(vertices) + cone` to `point` in the given norm.
#[derive(Debug, Clone)]
pub struct Projection {
    pub nearest: Vec<f64>,
    /// `‖point − nearest‖`, an upper bound on the distance.
    pub dist: f64,
    /// Dual lower bound on the distance.
    pub lower_bound: f64,
}

/// Projects `point` onto `conv(vertices) + cone` (cone optional).
///
/// Solved as a conic program over the convex weights `θ` and cone
/// coefficients `μ`, in the frame centred at `point`. The returned nearest
/// point is rebuilt from the clamped, renormalized weights, so it always lies
/// in the set and `dist` is a true upper bound; `lower_bound` is the dual
/// objective. The barrier solver used for the scalarizations is not used
/// here: after many cuts the vertex set contains tight clusters whose nearly
/// identical rows make its Newton systems too ill-conditioned to certify the
/// distance.
pub fn project_onto_polytope(
    point: &[f64],
    vertices: &[Vec<f64>],
    cone: Option<&PolyCone>,
    norm: NormSpec,
    cfg: &SolverConfig,
) -> Result<Projection> {
    use clarabel::algebra::CscMatrix;
    use clarabel::solver::{
        DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus,
        SupportedConeT::{NonnegativeConeT, SecondOrderConeT, ZeroConeT},
    };

    if vertices.is_empty() {
        return Err(Error::Invalid(
            "cannot project onto an empty vertex set".into(),
        ));
    }
    let q = point.len();
    if vertices.iter().any(|v| v.len() != q) {
        return Err(Error::Invalid("vertex dimension mismatch".into()));
    }
    let gens: &[Vec<f64>] = cone.map_or(&[], |c| c.generators());
    let (nv, nc) = (vertices.len(), gens.len());
    // Columns: θ, μ, t, then u (L1 only).
    let t_col = nv + nc;
    let n_cols = t_col + 1 + if norm == NormSpec::L1 { q } else { 0 };
    // Coefficients of coordinate k of `nearest − point` in the columns.
    let coord = |k: usize| -> Vec<(usize, f64)> {
        let mut c: Vec<(usize, f64)> = vertices
            .iter()
            .enumerate()
            .map(|(i, v)| (i, v[k] - point[k]))
            .collect();
        c.extend(gens.iter().enumerate().map(|(j, g)| (nv + j, g[k])));
        c
    };

    let (mut ri, mut ci, mut vals, mut b) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let mut push_row = |coeffs: &[(usize, f64)], rhs: f64, b: &mut Vec<f64>| {
        let r = b.len();
        for &(c, v) in coeffs {
            if v != 0.0 {
                ri.push(r);
                ci.push(c);
                vals.push(v);
            }
        }
        b.push(rhs);
    };
    // A x + s = b with s in the cones below, in this order.
    let simplex: Vec<(usize, f64)> = (0..nv).map(|i| (i, 1.0)).collect();
    push_row(&simplex, 1.0, &mut b);
    for c in 0..nv + nc {
        push_row(&[(c, -1.0)], 0.0, &mut b);
    }
    let neg = |c: Vec<(usize, f64)>| -> Vec<(usize, f64)> {
        c.into_iter().map(|(i, v)| (i, -v)).collect()
    };
    let mut cones = vec![ZeroConeT(1)];
    match norm {
        NormSpec::L2 => {
            cones.push(NonnegativeConeT(nv + nc));
            push_row(&[(t_col, -1.0)], 0.0, &mut b);
            for k in 0..q {
                push_row(&neg(coord(k)), 0.0, &mut b);
            }
            cones.push(SecondOrderConeT(q + 1));
        }
        NormSpec::L1 => {
            for k in 0..q {
                let u = t_col + 1 + k;
                let mut up = coord(k);
                up.push((u, -1.0));
                push_row(&up, 0.0, &mut b);
                let mut dn = neg(coord(k));
                dn.push((u, -1.0));
                push_row(&dn, 0.0, &mut b);
            }
            let mut total: Vec<(usize, f64)> = (0..q).map(|k| (t_col + 1 + k, 1.0)).collect();
            total.push((t_col, -1.0));
            push_row(&total, 0.0, &mut b);
            cones.push(NonnegativeConeT(nv + nc + 2 * q + 1));
        }
        NormSpec::LInf => {
            for k in 0..q {
                let mut up = coord(k);
                up.push((t_col, -1.0));
                push_row(&up, 0.0, &mut b);
                let mut dn = neg(coord(k));
                dn.push((t_col, -1.0));
                push_row(&dn, 0.0, &mut b);
            }
            cones.push(NonnegativeConeT(nv + nc + 2 * q));
        }
    }

    let a = CscMatrix::new_from_triplets(b.len(), n_cols, ri, ci, vals);
    let p = CscMatrix::zeros((n_cols, n_cols));
    let mut obj = vec![0.0; n_cols];
    obj[t_col] = 1.0;
    let tol = cfg.tol_gap.min(1e-8);
    let settings = DefaultSettingsBuilder::default()
        .verbose(false)
        .tol_gap_abs(tol)
        .tol_gap_rel(tol)
        .tol_feas(cfg.tol_feas.min(1e-8))
        .max_iter(500)
        .build()
        .expect("valid settings");
    let mut solver = DefaultSolver::new(&p, &obj, &a, &b, &cones, settings)
        .map_err(|e| Error::Invalid(format!("projection setup failed: {e}")))?;
    solver.solve();
    let sol = &solver.solution;
    if !matches!(
        sol.status,
        SolverStatus::Solved | SolverStatus::AlmostSolved
    ) {
        return Err(Error::NonConvergence(format!(
            "projection solver ended with {:?}",
            sol.status
        )));
    }

    let theta: Vec<f64> = sol.x[..nv].iter().map(|t| t.max(0.0)).collect();
    let total: f64 = theta.iter().sum();
    if !(total > 0.0) {
        return Err(Error::NonConvergence(
            "projection returned no convex weights".into(),
        ));
    }
    let mut nearest = vec![0.0; q];
    for (v, t) in vertices.iter().zip(&theta) {
        for k in 0..q {
            nearest[k] += t / total * v[k];
        }
    }
    for (g, m) in gens.iter().zip(&sol.x[nv..nv + nc]) {
        for k in 0..q {
            nearest[k] += m.max(0.0) * g[k];
        }
    }
    let diff: Vec<f64> = point.iter().zip(&nearest).map(|(a, b)| a - b).collect();
    let dist = norm_eval(norm, &diff);
    Ok(Projection {
        dist,
        lower_bound: sol.obj_val_dual.clamp(0.0, dist),
        nearest,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::builtin;
    use approx::assert_abs_diff_eq;

    const R2: f64 = std::f64::consts::SQRT_2;

    #[test]
    fn weighted_sum_on_the_ball() {
        let inst = builtin("example1_q2").unwrap();
        let cfg = SolverConfig::precise();
        let ws = solve_weighted_sum(&inst, &[1.0, 0.0], &cfg).unwrap();
        assert_abs_diff_eq!(ws.x[0], 0.0, epsilon = 1e-6);
        assert_abs_diff_eq!(ws.x[1], 1.0, epsilon = 1e-4);
        assert_abs_diff_eq!(ws.value, 0.0, epsilon = 1e-8);

        // minimizer of w^T x over the ball is e - w/‖w‖
        let w = [1.0 / R2, 1.0 / R2];
        let ws = solve_weighted_sum(&inst, &w, &cfg).unwrap();
        let expect = 1.0 - 1.0 / R2;
        assert_abs_diff_eq!(ws.x[0], expect, epsilon = 1e-6);
        assert_abs_diff_eq!(ws.x[1], expect, epsilon = 1e-6);
        assert_abs_diff_eq!(ws.value, 2.0 * expect / R2, epsilon = 1e-8);
    }

    #[test]
    fn weighted_sum_interior_minimum() {
        let inst = builtin("example2").unwrap();
        let ws = solve_weighted_sum(&inst, &[1.0, 0.0, 0.0], &SolverConfig::precise()).unwrap();
        assert_abs_diff_eq!(ws.x[0], 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(ws.x[1], 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(ws.value, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn norm_min_distance_to_ball() {
        let inst = builtin("example1_q2").unwrap();
        let sol = solve_norm_min(&inst, &[0.0, 0.0], &SolverConfig::default()).unwrap();
        assert_abs_diff_eq!(sol.objective_value, R2 - 1.0, epsilon = 1e-6);
        let zdir = (R2 - 1.0) / R2;
        assert_abs_diff_eq!(sol.z[0], zdir, epsilon = 1e-6);
        assert_abs_diff_eq!(sol.z[1], zdir, epsilon = 1e-6);
        assert_abs_diff_eq!(sol.w_tilde[0], 1.0 / R2, epsilon = 1e-6);
        assert_abs_diff_eq!(sol.w_tilde[1], 1.0 / R2, epsilon = 1e-6);
        assert_eq!(sol.lambda, 0.0);
    }

    #[test]
    fn norm_min_zero_on_the_upper_image() {
        let inst = builtin("example2").unwrap();
        let v = inst.image(&[3.0, 1.5]);
        let sol = solve_norm_min(&inst, &v, &SolverConfig::default()).unwrap();
        assert!(sol.objective_value < 1e-6, "{}", sol.objective_value);

        let ball = builtin("example1_q2").unwrap();
        let sol = solve_norm_min(&ball, &[1.0, 0.0], &SolverConfig::default()).unwrap();
        assert!(sol.objective_value < 1e-6);
    }

    #[test]
    fn modified_matches_norm_min_when_halfspace_inactive() {
        let inst = builtin("example1_q2").unwrap();
        let wbar = inst.w_bar();
        let cfg = SolverConfig::default();
        let a = solve_norm_min(&inst, &[0.0, 0.0], &cfg).unwrap();
        let b = solve_modified(&inst, &[0.0, 0.0], 100.0, &wbar, &cfg).unwrap();
        assert_abs_diff_eq!(a.objective_value, b.objective_value, epsilon = 1e-7);
        assert!(b.lambda.abs() < 1e-6);
        for i in 0..2 {
            assert_abs_diff_eq!(a.w_tilde[i], b.w_tilde[i], epsilon = 1e-6);
        }
    }

    #[test]
    fn modified_inside_gives_zero() {
        let inst = builtin("example2").unwrap();
        let wbar = inst.w_bar();
        // Γ(x) + c for interior x and c ∈ Int C lies in Int P
        let v: Vec<f64> = inst.image(&[2.0, 2.0]).iter().map(|y| y + 0.5).collect();
        let gamma = inst.beta().max(dot(&wbar, &v)) + 1.0;
        let sol = solve_modified(&inst, &v, gamma, &wbar, &SolverConfig::default()).unwrap();
        assert!(sol.objective_value < 1e-6);
        assert!(sol.w.iter().all(|x| x.abs() < 1e-5), "{:?}", sol.w);
    }

    #[test]
    fn modified_respects_the_halfspace() {
        let inst = builtin("example1_q2").unwrap();
        let wbar = inst.w_bar();
        // v far above P on the boundary of S(γ)
        let gamma = 4.0;
        let v = [gamma / R2 + 2.0, gamma / R2 - 2.0];
        let v = [v[0] - 0.0, v[1]];
        assert_abs_diff_eq!(dot(&wbar, &v), gamma, epsilon = 1e-12);
        let sol = solve_modified(&inst, &v, gamma, &wbar, &SolverConfig::default()).unwrap();
        let y = sol.y(&v);
        assert!(dot(&wbar, &y) <= gamma + 1e-7);
    }

    #[test]
    fn infeasible_gamma_is_reported() {
        let inst = builtin("example1_q2").unwrap();
        let wbar = inst.w_bar();
        let err =
            solve_modified(&inst, &[0.0, 0.0], 0.5, &wbar, &SolverConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Infeasible(_)));
    }

    #[test]
    fn projection_examples() {
        let cfg = SolverConfig::precise();
        let square = vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
            vec![0.0, 1.0],
        ];
        let p = project_onto_polytope(&[0.5, 0.25], &square, None, NormSpec::L2, &cfg).unwrap();
        assert!(p.dist < 1e-7);

        let seg = vec![vec![0.0, 0.0], vec![0.0, 1.0]];
        let p = project_onto_polytope(&[2.0, 0.0], &seg, None, NormSpec::L2, &cfg).unwrap();
        assert_abs_diff_eq!(p.dist, 2.0, epsilon = 1e-8);
        assert_abs_diff_eq!(p.nearest[0], 0.0, epsilon = 1e-8);
        assert_abs_diff_eq!(p.nearest[1], 0.0, epsilon = 1e-4);

        let orth = PolyCone::orthant(2, NormSpec::L2);
        let p = project_onto_polytope(
            &[-1.0, -1.0],
            &[vec![0.0, 0.0]],
            Some(&orth),
            NormSpec::L2,
            &cfg,
        )
        .unwrap();
        assert_abs_diff_eq!(p.dist, R2, epsilon = 1e-8);
        assert_abs_diff_eq!(p.nearest[0], 0.0, epsilon = 1e-7);

        // a point dominated through the cone is at distance 0
        let p = project_onto_polytope(
            &[3.0, 5.0],
            &[vec![0.0, 0.0]],
            Some(&orth),
            NormSpec::L2,
            &cfg,
        )
        .unwrap();
        assert!(p.dist < 1e-6, "{p:?}");
    }

    #[test]
    fn projection_in_other_norms() {
        let cfg = SolverConfig::precise();
        let seg = vec![vec![0.0, 0.0], vec![0.0, 1.0]];
        for (norm, expect) in [(NormSpec::L1, 3.0), (NormSpec::LInf, 2.0)] {
            let p = project_onto_polytope(&[2.0, 2.0], &seg, None, norm, &cfg).unwrap();
            assert_abs_diff_eq!(p.dist, expect, epsilon = 1e-7);
            assert!(p.lower_bound <= p.dist + 1e-9 && p.lower_bound > expect - 1e-7);
        }
    }
}
