//! Log-barrier interior point method for small dense smooth convex programs
//!
//! ```text
//!     minimize f0(y)  subject to  f_i(y) <= 0,  i = 1..m
//! ```
//!
//! started from a strictly feasible point. For an increasing weight `t` the
//! barrier function `t f0 − Σ log(−f_i)` is minimized by damped Newton steps;
//! at the final center the multipliers are `λ_i = 1 / (t (−f_i))`, which are
//! dual feasible with duality gap `m / t`. A least-squares correction on the
//! active rows then removes the remaining stationarity residual.

use nalgebra::{DMatrix, DVector};

use crate::problem::ConvexExpr;
use crate::{Error, Result};

use super::SolverConfig;

/// A twice differentiable convex function of the lifted variable.
pub trait SmoothFn: Send + Sync {
    fn value(&self, y: &[f64]) -> f64;
    /// Adds `weight * ∇f(y)` into `g`.
    fn add_gradient(&self, y: &[f64], weight: f64, g: &mut [f64]);
    /// Adds `weight * ∇²f(y)` into `h`. Affine functions keep the default.
    fn add_hessian(&self, _y: &[f64], _weight: f64, _h: &mut DMatrix<f64>) {}
}

/// `a^T y + b`, with `a` stored sparsely.
pub struct Affine {
    pub coeffs: Vec<(usize, f64)>,
    pub constant: f64,
}

impl SmoothFn for Affine {
    fn value(&self, y: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(i, a)| a * y[i]).sum::<f64>() + self.constant
    }

    fn add_gradient(&self, _y: &[f64], weight: f64, g: &mut [f64]) {
        for &(i, a) in &self.coeffs {
            g[i] += weight * a;
        }
    }
}

/// `sum_k c_k * e_k(x) + a^T y + b` where the expressions act on the leading
/// `n` coordinates of `y`. Negative `c_k` are only sound for affine `e_k`.
pub struct ExprCombo<'a> {
    pub n: usize,
    pub terms: Vec<(f64, &'a ConvexExpr)>,
    pub linear: Vec<(usize, f64)>,
    pub constant: f64,
    pub delta: f64,
}

impl SmoothFn for ExprCombo<'_> {
    fn value(&self, y: &[f64]) -> f64 {
        let x = &y[..self.n];
        self.terms
            .iter()
            .map(|(c, e)| c * e.value_smoothed(x, self.delta))
            .sum::<f64>()
            + self.linear.iter().map(|&(i, a)| a * y[i]).sum::<f64>()
            + self.constant
    }

    fn add_gradient(&self, y: &[f64], weight: f64, g: &mut [f64]) {
        let x = &y[..self.n];
        for (c, e) in &self.terms {
            e.add_gradient(x, self.delta, weight * c, &mut g[..self.n]);
        }
        for &(i, a) in &self.linear {
            g[i] += weight * a;
        }
    }

    fn add_hessian(&self, y: &[f64], weight: f64, h: &mut DMatrix<f64>) {
        let x = &y[..self.n];
        for (c, e) in &self.terms {
            e.add_hessian(x, self.delta, weight * c, h);
        }
    }
}

/// `sqrt(‖y[start..start+len] − center‖² + delta²) − y[epi]` (epigraph row of
/// a smoothed Euclidean norm); the `epi` term is omitted when `None`.
pub struct SmoothNorm {
    pub start: usize,
    pub center: Vec<f64>,
    pub delta: f64,
    pub epi: Option<usize>,
}

impl SmoothNorm {
    fn radius(&self, y: &[f64]) -> f64 {
        let s: f64 = self
            .center
            .iter()
            .enumerate()
            .map(|(k, c)| (y[self.start + k] - c).powi(2))
            .sum();
        (s + self.delta * self.delta).sqrt()
    }
}

impl SmoothFn for SmoothNorm {
    fn value(&self, y: &[f64]) -> f64 {
        self.radius(y) - self.epi.map_or(0.0, |i| y[i])
    }

    fn add_gradient(&self, y: &[f64], weight: f64, g: &mut [f64]) {
        let r = self.radius(y);
        if r > 0.0 {
            for (k, c) in self.center.iter().enumerate() {
                g[self.start + k] += weight * (y[self.start + k] - c) / r;
            }
        }
        if let Some(i) = self.epi {
            g[i] -= weight;
        }
    }

    fn add_hessian(&self, y: &[f64], weight: f64, h: &mut DMatrix<f64>) {
        let r = self.radius(y);
        if r <= 0.0 {
            return;
        }
        let len = self.center.len();
        for a in 0..len {
            let da = y[self.start + a] - self.center[a];
            for b in 0..len {
                let db = y[self.start + b] - self.center[b];
                let id = if a == b { 1.0 } else { 0.0 };
                h[(self.start + a, self.start + b)] += weight * (id / r - da * db / (r * r * r));
            }
        }
    }
}

/// `‖y[start..start+len] − center‖² + constant − y[epi]`.
pub struct SquaredDist {
    pub start: usize,
    pub center: Vec<f64>,
    pub constant: f64,
    pub epi: Option<usize>,
}

impl SmoothFn for SquaredDist {
    fn value(&self, y: &[f64]) -> f64 {
        self.center
            .iter()
            .enumerate()
            .map(|(k, c)| (y[self.start + k] - c).powi(2))
            .sum::<f64>()
            + self.constant
            - self.epi.map_or(0.0, |i| y[i])
    }

    fn add_gradient(&self, y: &[f64], weight: f64, g: &mut [f64]) {
        for (k, c) in self.center.iter().enumerate() {
            g[self.start + k] += weight * 2.0 * (y[self.start + k] - c);
        }
        if let Some(i) = self.epi {
            g[i] -= weight;
        }
    }

    fn add_hessian(&self, _y: &[f64], weight: f64, h: &mut DMatrix<f64>) {
        for k in 0..self.center.len() {
            h[(self.start + k, self.start + k)] += 2.0 * weight;
        }
    }
}

/// A convex program in canonical form with a strictly feasible start.
pub struct ScalarProgram<'a> {
    pub dim: usize,
    pub objective: Box<dyn SmoothFn + 'a>,
    pub constraints: Vec<Box<dyn SmoothFn + 'a>>,
    pub start: Vec<f64>,
}

/// Primal point, multipliers and certificates returned by [`solve`].
#[derive(Debug, Clone)]
pub struct IpmSolution {
    pub y: Vec<f64>,
    pub multipliers: Vec<f64>,
    pub objective: f64,
    /// Surrogate duality gap `-f^T lambda`.
    pub gap: f64,
    /// Euclidean norm of the Lagrangian gradient.
    pub dual_residual: f64,
    pub iterations: usize,
}

const LS_ALPHA: f64 = 0.01;
const LS_BETA: f64 = 0.5;
const MAX_NEWTON: usize = 200;
/// Centering stops once half the squared Newton decrement drops below this.
const NEWTON_TOL: f64 = 1e-12;

fn constraint_values(prog: &ScalarProgram, y: &[f64]) -> Option<DVector<f64>> {
    let f = DVector::from_iterator(
        prog.constraints.len(),
        prog.constraints.iter().map(|c| c.value(y)),
    );
    f.iter().all(|&v| v < 0.0).then_some(f)
}

fn barrier_value(prog: &ScalarProgram, y: &[f64], t: f64) -> Option<f64> {
    let f = constraint_values(prog, y)?;
    Some(t * prog.objective.value(y) - f.iter().map(|v| (-v).ln()).sum::<f64>())
}

fn lagrangian_gradient(prog: &ScalarProgram, y: &[f64], lambda: &[f64]) -> DVector<f64> {
    let mut g = vec![0.0; prog.dim];
    prog.objective.add_gradient(y, 1.0, &mut g);
    for (c, &l) in prog.constraints.iter().zip(lambda) {
        c.add_gradient(y, l, &mut g);
    }
    DVector::from_vec(g)
}

fn solve_spd(m: DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    // Symmetric diagonal scaling; the barrier Hessian's diagonal spans many
    // orders of magnitude when objective values are large.
    let n = m.nrows();
    let d: Vec<f64> = (0..n)
        .map(|i| {
            let v = m[(i, i)];
            if v > 0.0 && v.is_finite() {
                1.0 / v.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    let ms = DMatrix::from_fn(n, n, |i, j| m[(i, j)] * d[i] * d[j]);
    let rs = DVector::from_iterator(n, rhs.iter().zip(&d).map(|(r, s)| r * s));
    let x = solve_spd_unscaled(ms, &rs)?;
    Some(DVector::from_iterator(
        n,
        x.iter().zip(&d).map(|(x, s)| x * s),
    ))
}

fn solve_spd_unscaled(m: DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    if let Some(ch) = m.clone().cholesky() {
        return Some(ch.solve(rhs));
    }
    let n = m.nrows();
    let diag_max = (0..n).map(|i| m[(i, i)].abs()).fold(0.0, f64::max).max(1.0);
    let mut reg = 1e-14 * diag_max;
    for _ in 0..8 {
        let mut mr = m.clone();
        for i in 0..n {
            mr[(i, i)] += reg;
        }
        if let Some(ch) = mr.cholesky() {
            return Some(ch.solve(rhs));
        }
        reg *= 100.0;
    }
    m.lu().solve(rhs)
}

/// Newton minimization of `t f0 − Σ log(−f_i)` from a strictly feasible `y`.
fn center(prog: &ScalarProgram, y: &mut Vec<f64>, t: f64) -> Result<usize> {
    let n = prog.dim;
    for it in 0..MAX_NEWTON {
        let f = constraint_values(prog, y).expect("iterates stay strictly feasible");
        let mut g = vec![0.0; n];
        prog.objective.add_gradient(y, t, &mut g);
        let mut h = DMatrix::<f64>::zeros(n, n);
        prog.objective.add_hessian(y, t, &mut h);
        for (c, &fi) in prog.constraints.iter().zip(f.iter()) {
            let mut gi = vec![0.0; n];
            c.add_gradient(y, 1.0, &mut gi);
            c.add_hessian(y, 1.0 / -fi, &mut h);
            let gi = DVector::from_vec(gi);
            h.ger(1.0 / (fi * fi), &gi, &gi, 1.0);
            for k in 0..n {
                g[k] += gi[k] / -fi;
            }
        }
        let g = DVector::from_vec(g);
        let dy = solve_spd(h, &(-&g))
            .ok_or_else(|| Error::NonConvergence("singular Newton system".into()))?;
        let slope = g.dot(&dy);
        if !slope.is_finite() {
            return Err(Error::NonConvergence("non-finite Newton step".into()));
        }
        if -slope / 2.0 <= NEWTON_TOL {
            return Ok(it);
        }
        let phi = barrier_value(prog, y, t).expect("feasible");
        let mut s = 1.0;
        loop {
            let trial: Vec<f64> = y.iter().zip(dy.iter()).map(|(a, d)| a + s * d).collect();
            if let Some(pt) = barrier_value(prog, &trial, t) {
                if pt <= phi + LS_ALPHA * s * slope {
                    *y = trial;
                    break;
                }
            }
            s *= LS_BETA;
            if s < 1e-14 {
                // Round-off floor: the point is as centered as it can get.
                return Ok(it);
            }
        }
    }
    Ok(MAX_NEWTON)
}

/// Least-squares correction of the multipliers of clearly active rows so
/// that the Lagrangian gradient vanishes; kept only if it stays nonnegative
/// and lowers the residual.
fn refine_multipliers(prog: &ScalarProgram, y: &[f64], lambda: &mut [f64]) {
    let r = lagrangian_gradient(prog, y, lambda);
    let lmax = lambda.iter().copied().fold(0.0, f64::max);
    let active: Vec<usize> = (0..lambda.len())
        .filter(|&i| lambda[i] >= 1e-6 * lmax)
        .collect();
    if active.is_empty() || r.norm() == 0.0 {
        return;
    }
    let n = prog.dim;
    let mut g = DMatrix::<f64>::zeros(n, active.len());
    for (col, &i) in active.iter().enumerate() {
        let mut gi = vec![0.0; n];
        prog.constraints[i].add_gradient(y, 1.0, &mut gi);
        for k in 0..n {
            g[(k, col)] = gi[k];
        }
    }
    let mut gtg = g.transpose() * &g;
    let scale = (0..active.len())
        .map(|i| gtg[(i, i)])
        .fold(0.0, f64::max)
        .max(1e-300);
    for i in 0..active.len() {
        gtg[(i, i)] += 1e-12 * scale;
    }
    let Some(delta) = solve_spd(gtg, &(-(g.transpose() * &r))) else {
        return;
    };
    let mut cand = lambda.to_vec();
    for (col, &i) in active.iter().enumerate() {
        cand[i] += delta[col];
    }
    if cand.iter().all(|&l| l >= 0.0) && lagrangian_gradient(prog, y, &cand).norm() < r.norm() {
        lambda.copy_from_slice(&cand);
    }
}

/// Runs the barrier method from `prog.start`.
pub fn solve(prog: &ScalarProgram, cfg: &SolverConfig) -> Result<IpmSolution> {
    let n = prog.dim;
    let m = prog.constraints.len();
    if prog.start.len() != n {
        return Err(Error::Invalid("start point has wrong dimension".into()));
    }
    let mut y = prog.start.clone();
    let Some(f) = constraint_values(prog, &y) else {
        let f: Vec<f64> = prog.constraints.iter().map(|c| c.value(&y)).collect();
        let i = f.iter().position(|&v| !(v < 0.0)).unwrap_or(0);
        return Err(Error::Infeasible(format!(
            "start point is not strictly feasible (constraint {i} = {})",
            f[i]
        )));
    };
    if m == 0 {
        return Err(Error::Invalid("program has no constraints".into()));
    }

    // Initial weight from the least-squares fit of the centrality condition.
    let mut g0 = vec![0.0; n];
    prog.objective.add_gradient(&y, 1.0, &mut g0);
    let g0 = DVector::from_vec(g0);
    let mut gb = DVector::<f64>::zeros(n);
    for (c, &fi) in prog.constraints.iter().zip(f.iter()) {
        let mut gi = vec![0.0; n];
        c.add_gradient(&y, 1.0 / -fi, &mut gi);
        gb += DVector::from_vec(gi);
    }
    let f0 = prog.objective.value(&y);
    let floor = 1e-3 * m as f64 / (1.0 + f0.abs());
    let mut t = if g0.norm_squared() > 0.0 {
        (-g0.dot(&gb) / g0.norm_squared()).max(floor)
    } else {
        1.0
    };

    let mut newton_total = 0;
    for outer in 0..cfg.max_barrier_iters {
        newton_total += center(prog, &mut y, t)?;
        let obj = prog.objective.value(&y);
        let gap = m as f64 / t;
        log::trace!("barrier outer {outer}: t {t:.3e} obj {obj:.9e} gap {gap:.3e}");
        if gap <= cfg.tol_gap * (1.0 + obj.abs()) {
            let f = constraint_values(prog, &y).expect("feasible");
            let mut lambda: Vec<f64> = f.iter().map(|v| 1.0 / (t * -v)).collect();
            refine_multipliers(prog, &y, &mut lambda);
            let dual_residual = lagrangian_gradient(prog, &y, &lambda).norm();
            let gap = -f.iter().zip(&lambda).map(|(a, b)| a * b).sum::<f64>();
            return Ok(IpmSolution {
                objective: obj,
                multipliers: lambda,
                gap: gap.max(0.0),
                dual_residual,
                iterations: newton_total,
                y,
            });
        }
        t *= cfg.mu;
    }
    Err(Error::NonConvergence(format!(
        "duality gap above tolerance after {} barrier iterations",
        cfg.max_barrier_iters
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> SolverConfig {
        SolverConfig {
            tol_gap: 1e-10,
            tol_feas: 1e-10,
            ..SolverConfig::default()
        }
    }

    #[test]
    fn linear_program_on_a_box() {
        // minimize -y0 - 2 y1 over [0,1]^2 -> (1,1), value -3
        let prog = ScalarProgram {
            dim: 2,
            objective: Box::new(Affine {
                coeffs: vec![(0, -1.0), (1, -2.0)],
                constant: 0.0,
            }),
            constraints: vec![
                Box::new(Affine {
                    coeffs: vec![(0, 1.0)],
                    constant: -1.0,
                }),
                Box::new(Affine {
                    coeffs: vec![(1, 1.0)],
                    constant: -1.0,
                }),
                Box::new(Affine {
                    coeffs: vec![(0, -1.0)],
                    constant: 0.0,
                }),
                Box::new(Affine {
                    coeffs: vec![(1, -1.0)],
                    constant: 0.0,
                }),
            ],
            start: vec![0.5, 0.5],
        };
        let sol = solve(&prog, &cfg()).unwrap();
        assert!((sol.objective + 3.0).abs() < 1e-8);
        assert!((sol.multipliers[0] - 1.0).abs() < 1e-6);
        assert!((sol.multipliers[1] - 2.0).abs() < 1e-6);
        assert!(sol.multipliers[2].abs() < 1e-6);
    }

    #[test]
    fn distance_to_disc() {
        // minimize t s.t. ||y - p|| <= t, ||y - c|| <= 1 with p=(3,0), c=(0,0)
        let prog = ScalarProgram {
            dim: 3,
            objective: Box::new(Affine {
                coeffs: vec![(2, 1.0)],
                constant: 0.0,
            }),
            constraints: vec![
                Box::new(SmoothNorm {
                    start: 0,
                    center: vec![3.0, 0.0],
                    delta: 1e-9,
                    epi: Some(2),
                }),
                Box::new(SquaredDist {
                    start: 0,
                    center: vec![0.0, 0.0],
                    constant: -1.0,
                    epi: None,
                }),
            ],
            start: vec![0.0, 0.0, 10.0],
        };
        let sol = solve(&prog, &cfg()).unwrap();
        assert!((sol.objective - 2.0).abs() < 1e-8, "{sol:?}");
        assert!((sol.y[0] - 1.0).abs() < 1e-6 && sol.y[1].abs() < 1e-6);
        assert!((sol.multipliers[0] - 1.0).abs() < 1e-7);
    }

    #[test]
    fn infeasible_start_is_rejected() {
        let prog = ScalarProgram {
            dim: 1,
            objective: Box::new(Affine {
                coeffs: vec![(0, 1.0)],
                constant: 0.0,
            }),
            constraints: vec![Box::new(Affine {
                coeffs: vec![(0, 1.0)],
                constant: 0.0,
            })],
            start: vec![1.0],
        };
        assert!(matches!(solve(&prog, &cfg()), Err(Error::Infeasible(_))));
    }
}
