//! Independent checks of a finished run: duality certificates, validity of
//! every cut, the Hausdorff identity for consecutive polytopes, nestedness,
//! the `S(γ)` precondition, and the final `ε` sandwich.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::algorithm::{result_scale, SolveResult, Status};
use crate::geometry::{dual_norm_eval, Halfspace};
use crate::linalg::dot;
use crate::parallel::{self, Parallelism};
use crate::problem::CvopInstance;
use crate::scalarization::{dual_value, project_onto_polytope, SolverConfig};
use crate::vertex_enum::{brute_vertices, cut_in_place, EnumTolerances, HPolytope, VRep};
use crate::Result;

#[derive(Debug, Clone)]
pub struct VerifyConfig {
    /// Feasible points sampled for the cut-validity and `γ` checks.
    pub samples: usize,
    pub seed: u64,
    pub parallelism: Parallelism,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            samples: 500,
            seed: 0,
            parallelism: Parallelism::available(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    /// Number of individual comparisons made.
    pub checked: usize,
    /// Largest violation relative to the allowed tolerance (≤ 1 passes).
    pub worst_ratio: f64,
    /// Iteration of the first failure, if any.
    pub offending_k: Option<usize>,
    pub detail: String,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<16} checked={} worst_ratio={:.3e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.checked,
            self.worst_ratio
        )?;
        if let Some(k) = self.offending_k {
            write!(f, " first_failure_k={k}")?;
        }
        if !self.detail.is_empty() {
            write!(f, " ({})", self.detail)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Accumulates `(k, value, allowed)` comparisons.
struct Tally {
    name: &'static str,
    checked: usize,
    worst_ratio: f64,
    offending_k: Option<usize>,
    detail: String,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Tally {
            name,
            checked: 0,
            worst_ratio: 0.0,
            offending_k: None,
            detail: String::new(),
        }
    }

    fn add(&mut self, k: Option<usize>, violation: f64, allowed: f64) {
        self.checked += 1;
        let ratio = if violation <= 0.0 {
            0.0
        } else {
            violation / allowed
        };
        let ratio = if ratio.is_nan() { f64::INFINITY } else { ratio };
        if ratio > 1.0 && self.offending_k.is_none() && self.worst_ratio <= 1.0 {
            self.offending_k = k;
        }
        self.worst_ratio = self.worst_ratio.max(ratio);
    }

    fn finish(self) -> CheckResult {
        CheckResult {
            name: self.name,
            passed: self.worst_ratio <= 1.0,
            checked: self.checked,
            worst_ratio: self.worst_ratio,
            offending_k: self.offending_k,
            detail: self.detail,
        }
    }
}

/// Configuration for the weighted-sum solves that bound the dual objective.
fn certificate_cfg(base: &SolverConfig) -> SolverConfig {
    SolverConfig {
        tol_gap: 1e-13,
        max_barrier_iters: 200,
        ..*base
    }
}

/// Primal–dual gap of every cut's scalarization plus the identities
/// `‖w̃‖_* = 1` and `‖z‖ = w̃^T z` (for `‖z‖ > 1e-5`).
pub fn check_duality(
    inst: &CvopInstance,
    res: &SolveResult,
    solver: &SolverConfig,
    mode: Parallelism,
) -> Result<CheckResult> {
    let mut t = Tally::new("duality_gap");
    let cfg = certificate_cfg(solver);
    let duals = parallel::map(mode, &res.cuts, |c| {
        dual_value(
            inst,
            &c.vertex,
            Some((res.gamma, &res.w_bar)),
            &c.solution.w,
            c.solution.lambda,
            &cfg,
        )
    });
    for (c, d) in res.cuts.iter().zip(duals) {
        let s = &c.solution;
        let primal = s.objective_value;
        t.add(Some(c.k), primal - d?, 1e-6 * (1.0 + primal.abs()));
        if primal > 1e-5 {
            let dn = dual_norm_eval(inst.norm(), &s.w_tilde);
            t.add(Some(c.k), (dn - 1.0).abs(), 1e-6);
            t.add(
                Some(c.k),
                (primal - dot(&s.w_tilde, &s.z)).abs(),
                1e-6 * (1.0 + primal),
            );
        }
        t.add(Some(c.k), -s.lambda, 1e-9);
    }
    Ok(t.finish())
}

/// Every halfspace of every outer polytope contains `Γ(x)` for sampled and
/// returned feasible `x`; also checks `w̄^T Γ(x) < γ`.
pub fn check_cuts_and_gamma(
    inst: &CvopInstance,
    res: &SolveResult,
    cfg: &VerifyConfig,
) -> Result<(CheckResult, CheckResult)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut images: Vec<Vec<f64>> = inst
        .sample_feasible(&mut rng, cfg.samples)?
        .iter()
        .map(|x| inst.image(x))
        .collect();
    images.extend(res.images());
    let scale = result_scale(res);
    let rows = res.outer.halfspaces();
    let n_init = res.n_initial_rows;
    let s_row = n_init - 1;

    let mut cuts = Tally::new("cut_validity");
    let worst: Vec<(usize, f64)> = parallel::map(cfg.parallelism, rows, |h| {
        images
            .iter()
            .map(|y| -h.slack(y))
            .fold((0, f64::NEG_INFINITY), |acc, v| (acc.0 + 1, acc.1.max(v)))
    });
    for (i, (n, w)) in worst.into_iter().enumerate() {
        let k = i.checked_sub(n_init);
        cuts.checked += n.saturating_sub(1);
        cuts.add(k, w, 1e-6 * scale);
    }
    cuts.detail = format!("{} halfspaces x {} points", rows.len(), images.len());

    let mut gamma = Tally::new("gamma_sanity");
    for y in &images {
        gamma.add(
            None,
            dot(&res.w_bar, y) - (res.gamma - 1e-9),
            f64::MIN_POSITIVE,
        );
    }
    debug_assert!((rows[s_row].offset + res.gamma).abs() <= 1e-12 * (1.0 + res.gamma.abs()));
    Ok((cuts.finish(), gamma.finish()))
}

/// `|δ^H(P_k, P_{k+1}) − ‖z^{v^k}‖| <= 1e-5 (1 + ‖z^{v^k}‖)` for every
/// recorded iteration.
pub fn check_hausdorff_sequence(res: &SolveResult) -> CheckResult {
    let mut t = Tally::new("h_sequence");
    let mut missing = 0;
    for r in &res.log {
        match r.hausdorff_consecutive {
            Some(h) => t.add(Some(r.k), (h - r.max_dist).abs(), 1e-5 * (1.0 + r.max_dist)),
            None => missing += 1,
        }
    }
    if missing > 0 {
        t.detail = format!("{missing} iterations without a recorded distance");
        t.worst_ratio = f64::INFINITY;
    }
    t.finish()
}

/// Replays the cut sequence from a brute-force enumeration of the initial
/// polytope: each polytope's vertices satisfy every earlier halfspace, the
/// replay reproduces the recorded removals, and the final vertex set matches
/// a brute-force enumeration of the final halfspaces.
pub fn check_nestedness(res: &SolveResult, mode: Parallelism) -> Result<CheckResult> {
    let mut t = Tally::new("nestedness");
    let q = res.outer.dim();
    let tol = EnumTolerances::default();
    let scale = result_scale(res);
    let init_rows = res.outer_rows_at(0).to_vec();
    let mut p = HPolytope::new(q, init_rows)?;
    let mut v: VRep = brute_vertices(q, p.halfspaces(), tol, mode);
    for c in &res.cuts {
        let prev_rows: Vec<Halfspace> = p.halfspaces().to_vec();
        let report = cut_in_place(&mut v, &mut p, c.halfspace.clone(), tol)?;
        if report.removed.len() != c.removed.len() {
            t.add(Some(c.k), f64::INFINITY, 1.0);
        }
        for x in &v.vertices {
            let viol = prev_rows
                .iter()
                .map(|h| -h.slack(x))
                .fold(f64::NEG_INFINITY, f64::max);
            t.add(Some(c.k), viol, 1e-7 * scale);
        }
    }
    // Long runs produce clusters of vertices a few 1e-7 apart, where brute
    // force and the incremental update may keep different representatives,
    // so the final sets are compared as point sets within a tolerance.
    let brute = brute_vertices(q, res.outer.halfspaces(), tol, mode);
    let gap = set_distance(&brute.vertices, &res.vertices.vertices)
        .max(set_distance(&res.vertices.vertices, &brute.vertices));
    t.add(Some(res.cuts.len()), gap, 1e-6 * scale);
    t.detail = format!(
        "final vertices {} vs brute force {}, max mismatch {gap:.3e}",
        res.vertices.len(),
        brute.len()
    );
    Ok(t.finish())
}

/// Largest max-norm distance from a point of `a` to its nearest point in `b`.
fn set_distance(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .map(|x| {
            b.iter()
                .map(|y| {
                    x.iter()
                        .zip(y)
                        .map(|(p, q)| (p - q).abs())
                        .fold(0.0, f64::max)
                })
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

/// Every final outer vertex is within `ε + 1e-6` of `conv Γ(X̄) + C`.
pub fn check_sandwich(
    inst: &CvopInstance,
    res: &SolveResult,
    epsilon: f64,
    mode: Parallelism,
) -> Result<CheckResult> {
    let mut t = Tally::new("sandwich");
    if res.status != Status::Converged {
        t.detail = format!("not applicable: run ended with {:?}", res.status);
        return Ok(t.finish());
    }
    let images = res.images();
    let cfg = SolverConfig::precise();
    let dists = parallel::map(mode, &res.vertices.vertices, |v| {
        project_onto_polytope(v, &images, Some(inst.cone()), inst.norm(), &cfg)
    });
    let mut worst: f64 = 0.0;
    for d in dists {
        let d = d?.dist;
        worst = worst.max(d);
        t.add(None, d - epsilon, 1e-6);
    }
    t.detail = format!("max distance {worst:.6e}, epsilon {epsilon}");
    Ok(t.finish())
}

/// Runs every check on a finished run.
pub fn verify_run(
    inst: &CvopInstance,
    res: &SolveResult,
    epsilon: f64,
    solver: &SolverConfig,
    cfg: &VerifyConfig,
) -> Result<VerifyReport> {
    let (cuts, gamma) = check_cuts_and_gamma(inst, res, cfg)?;
    let checks = vec![
        check_duality(inst, res, solver, cfg.parallelism)?,
        cuts,
        check_hausdorff_sequence(res),
        check_nestedness(res, cfg.parallelism)?,
        gamma,
        check_sandwich(inst, res, epsilon, cfg.parallelism)?,
    ];
    Ok(VerifyReport { checks })
}
