//! The outer approximation loop.
//!
//! Starting from the polyhedron cut out by the weighted-sum supporting
//! halfspaces and the compactifying halfspace `S(γ)`, every iteration solves
//! the modified norm-minimizing scalarization at each new vertex of the outer
//! polytope, picks the vertex farthest from the upper image, and cuts it off
//! with the supporting halfspace given by the dual solution. Minimizers of
//! vertices within `ε` of the upper image form the returned weak
//! `ε`-solution.

use std::collections::HashMap;
use std::sync::Arc;
use std::time::Instant;

use crate::geometry::{Halfspace, NormSpec};
use crate::linalg::{dot, max_abs};
use crate::metrics::{max_distance_to, IterationRecord, TOL_ZERO};
use crate::parallel::{self, Parallelism};
use crate::problem::CvopInstance;
use crate::scalarization::{
    solve_modified, solve_norm_min, solve_weighted_sum, PrimalDualSolution, SolverConfig,
};
use crate::vertex_enum::{
    brute_vertices, cut_in_place, enumerate_brute_with, lex_cmp, EnumTolerances, HPolytope, VRep,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Stop once every vertex is within `ε` of the upper image.
    Terminate,
    /// Apply exactly this many cuts regardless of `ε`.
    Indefinite(usize),
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub epsilon: f64,
    /// Safety cap on the number of iterations.
    pub max_iters: usize,
    pub mode: Mode,
    pub solver: SolverConfig,
    /// Seed for sampling-based checks; the algorithm itself is deterministic.
    pub seed: u64,
    /// Measure the Hausdorff distance between consecutive outer polytopes.
    pub track_consecutive: bool,
    pub parallelism: Parallelism,
}

pub const DEFAULT_MAX_ITERS: usize = 100_000;

impl RunConfig {
    pub fn new(epsilon: f64) -> Self {
        RunConfig {
            epsilon,
            max_iters: DEFAULT_MAX_ITERS,
            mode: Mode::Terminate,
            solver: SolverConfig::default(),
            seed: 0,
            track_consecutive: false,
            parallelism: Parallelism::available(),
        }
    }

    pub fn indefinite(epsilon: f64, cuts: usize) -> Self {
        RunConfig {
            mode: Mode::Indefinite(cuts),
            track_consecutive: true,
            ..Self::new(epsilon)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Invalid("epsilon must be positive".into()));
        }
        if self.mode == Mode::Indefinite(0) {
            return Err(Error::Invalid(
                "indefinite mode needs at least one cut".into(),
            ));
        }
        if self.max_iters == 0 {
            return Err(Error::Invalid("max_iters must be positive".into()));
        }
        self.solver.validate()
    }
}

/// A weak minimizer together with its image.
#[derive(Debug, Clone, PartialEq)]
pub struct Minimizer {
    pub x: Vec<f64>,
    pub image: Vec<f64>,
}

/// Everything recorded about one applied cut.
#[derive(Debug, Clone)]
pub struct CutEvent {
    pub k: usize,
    /// The selected vertex `v^k`.
    pub vertex: Vec<f64>,
    pub solution: Arc<PrimalDualSolution>,
    pub halfspace: Halfspace,
    pub removed: Vec<Vec<f64>>,
}

/// Vertex identity: coordinates rounded to 12 digits in the frame scaled by
/// the initial polytope size.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct VertexKey(Vec<i64>);

#[derive(Debug, Clone)]
pub struct AlgoState {
    pub k: usize,
    pub outer: HPolytope,
    pub vertices: VRep,
    /// Number of leading rows of `outer` that are not cuts (the `J`
    /// weighted-sum rows plus the `S(γ)` row).
    pub n_initial_rows: usize,
    pub minimizers: Vec<Minimizer>,
    pub gamma: f64,
    pub beta: f64,
    pub w_bar: Vec<f64>,
    pub log: Vec<IterationRecord>,
    pub cuts: Vec<CutEvent>,
    /// Vertices of the polytope before the `S(γ)` row was added.
    pub initial_vertices: Vec<Vec<f64>>,
    known: HashMap<VertexKey, Arc<PrimalDualSolution>>,
    known2: HashMap<VertexKey, Arc<PrimalDualSolution>>,
    key_scale: f64,
    norm: NormSpec,
}

#[derive(Debug, Clone)]
pub enum StepOutcome {
    CutApplied {
        vertex: Vec<f64>,
        halfspace: Halfspace,
        dist: f64,
    },
    /// Every vertex is within `ε` (terminate mode).
    Converged { max_dist: f64 },
    /// Indefinite mode performed all requested cuts.
    CutLimitReached { max_dist: f64 },
    /// Indefinite mode found every vertex on the upper image: `P ∩ S(γ)` is
    /// polyhedral and has been reproduced exactly.
    PolyhedralReached { max_dist: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    CutLimitReached,
    PolyhedralReached,
    /// `max_iters` was hit; the result is partial.
    SafetyCap,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: Status,
    pub minimizers: Vec<Minimizer>,
    pub outer: HPolytope,
    pub vertices: VRep,
    pub n_initial_rows: usize,
    pub log: Vec<IterationRecord>,
    pub cuts: Vec<CutEvent>,
    pub initial_vertices: Vec<Vec<f64>>,
    pub gamma: f64,
    pub beta: f64,
    pub w_bar: Vec<f64>,
    /// Largest vertex distance of the final outer polytope.
    pub final_max_dist: f64,
    pub iterations: usize,
}

impl SolveResult {
    /// Errors with [`Error::SafetyCap`] if the run did not finish.
    pub fn ensure_complete(&self) -> Result<&Self> {
        match self.status {
            Status::SafetyCap => Err(Error::SafetyCap(self.iterations)),
            _ => Ok(self),
        }
    }

    /// Images `Γ(x)` of the returned minimizers.
    pub fn images(&self) -> Vec<Vec<f64>> {
        self.minimizers.iter().map(|m| m.image.clone()).collect()
    }

    /// Halfspaces of the outer polytope after `k` cuts.
    pub fn outer_rows_at(&self, k: usize) -> &[Halfspace] {
        &self.outer.halfspaces()[..self.n_initial_rows + k.min(self.cuts.len())]
    }
}

fn gamma_margin(beta: f64) -> f64 {
    (1e-6 * (1.0 + beta.abs())).max(1e-9)
}

/// Builds the initial outer polytope and `γ`.
pub fn initialize(inst: &CvopInstance, cfg: &RunConfig) -> Result<AlgoState> {
    cfg.validate()?;
    let q = inst.q();
    let duals = inst.cone().dual_generators().to_vec();
    let ws = parallel::map(cfg.parallelism, &duals, |w| {
        solve_weighted_sum(inst, w, &cfg.solver)
    });
    let mut minimizers = Vec::with_capacity(duals.len());
    let mut rows = Vec::with_capacity(duals.len() + 1);
    for (w, sol) in duals.iter().zip(ws) {
        let sol = sol?;
        let image = inst.image(&sol.x);
        rows.push(Halfspace::supporting(w.clone(), &image)?);
        minimizers.push(Minimizer { x: sol.x, image });
    }
    let tol = EnumTolerances::default();
    let initial = brute_vertices(q, &rows, tol, cfg.parallelism);
    if initial.is_empty() {
        return Err(Error::Unbounded);
    }

    let w_bar = inst.w_bar();
    let beta = inst.beta();
    let dists = parallel::map(cfg.parallelism, &initial.vertices, |v| {
        solve_norm_min(inst, v, &cfg.solver)
    });
    let mut max_d: f64 = 0.0;
    for d in dists {
        max_d = max_d.max(d?.objective_value);
    }
    let excess = initial
        .vertices
        .iter()
        .map(|v| (dot(&w_bar, v) - beta).max(0.0))
        .fold(0.0, f64::max);
    let gamma = beta + excess + max_d + gamma_margin(beta);
    log::debug!("beta {beta:.6e}, max initial distance {max_d:.6e}, gamma {gamma:.6e}");

    rows.push(Halfspace::new(w_bar.iter().map(|x| -x).collect(), -gamma)?);
    let n_initial_rows = rows.len();
    let outer = HPolytope::new(q, rows)?;
    let vertices = enumerate_brute_with(&outer, tol, cfg.parallelism)?;
    let key_scale = vertices.scale();
    Ok(AlgoState {
        k: 0,
        outer,
        vertices,
        n_initial_rows,
        minimizers,
        gamma,
        beta,
        w_bar,
        log: Vec::new(),
        cuts: Vec::new(),
        initial_vertices: initial.vertices,
        known: HashMap::new(),
        known2: HashMap::new(),
        key_scale,
        norm: inst.norm(),
    })
}

impl AlgoState {
    fn key(&self, v: &[f64]) -> VertexKey {
        VertexKey(
            v.iter()
                .map(|x| (x / self.key_scale * 1e12).round() as i64)
                .collect(),
        )
    }

    fn cached(&self, key: &VertexKey) -> Option<&Arc<PrimalDualSolution>> {
        self.known.get(key).or_else(|| self.known2.get(key))
    }

    /// Number of cached vertex solutions.
    pub fn cache_len(&self) -> usize {
        self.known.len() + self.known2.len()
    }
}

/// One iteration: solve new vertices, select the farthest one, and cut.
pub fn step(state: &mut AlgoState, inst: &CvopInstance, cfg: &RunConfig) -> Result<StepOutcome> {
    let started = Instant::now();
    let keys: Vec<VertexKey> = state
        .vertices
        .vertices
        .iter()
        .map(|v| state.key(v))
        .collect();
    let fresh: Vec<usize> = (0..keys.len())
        .filter(|&i| state.cached(&keys[i]).is_none())
        .collect();
    let n_cache_hits = keys.len() - fresh.len();

    let verts = &state.vertices.vertices;
    let solved = parallel::map(cfg.parallelism, &fresh, |&i| {
        solve_modified(inst, &verts[i], state.gamma, &state.w_bar, &cfg.solver)
    });
    for (&i, sol) in fresh.iter().zip(solved) {
        let sol = Arc::new(sol?);
        if sol.objective_value <= cfg.epsilon {
            state.minimizers.push(Minimizer {
                image: inst.image(&sol.x),
                x: sol.x.clone(),
            });
            state.known.insert(keys[i].clone(), sol);
        } else {
            state.known2.insert(keys[i].clone(), sol);
        }
    }

    // Farthest vertex; ties go to the lexicographically smallest one.
    let mut best: Option<(usize, f64)> = None;
    for (i, key) in keys.iter().enumerate() {
        let d = state
            .cached(key)
            .expect("all vertices solved")
            .objective_value;
        best = match best {
            Some((j, bd))
                if bd > d
                    || (bd == d && lex_cmp(verts_at(state, j), verts_at(state, i)).is_le()) =>
            {
                Some((j, bd))
            }
            _ => Some((i, d)),
        };
    }
    let (sel, max_dist) = best.ok_or(Error::EmptyPolytope)?;

    match cfg.mode {
        Mode::Terminate if max_dist <= cfg.epsilon => {
            return Ok(StepOutcome::Converged { max_dist })
        }
        Mode::Indefinite(n) if state.cuts.len() >= n => {
            return Ok(StepOutcome::CutLimitReached { max_dist })
        }
        Mode::Indefinite(_) if max_dist <= TOL_ZERO => {
            return Ok(StepOutcome::PolyhedralReached { max_dist })
        }
        _ => {}
    }

    let vertex = state.vertices.vertices[sel].clone();
    let solution = state
        .cached(&keys[sel])
        .expect("selected vertex solved")
        .clone();
    let halfspace = solution.cut(&vertex, state.norm)?;
    let report = cut_in_place(
        &mut state.vertices,
        &mut state.outer,
        halfspace.clone(),
        EnumTolerances::default(),
    )?;

    let hausdorff_consecutive = if cfg.track_consecutive {
        let precise = SolverConfig::precise();
        Some(max_distance_to(
            &report.removed,
            &state.vertices.vertices,
            state.norm,
            &precise,
            cfg.parallelism,
        )?)
    } else {
        None
    };
    for v in &report.removed {
        let key = state.key(v);
        state.known.remove(&key);
        state.known2.remove(&key);
    }

    state.log.push(IterationRecord {
        k: state.k,
        max_dist,
        hausdorff_consecutive,
        n_vertices: keys.len(),
        n_solves: fresh.len(),
        n_cache_hits,
        wall_ms: started.elapsed().as_secs_f64() * 1e3,
    });
    log::debug!(
        "k={} max_dist={:.6e} vertices={} solves={} removed={} added={}",
        state.k,
        max_dist,
        keys.len(),
        fresh.len(),
        report.removed.len(),
        report.added
    );
    state.cuts.push(CutEvent {
        k: state.k,
        vertex: vertex.clone(),
        solution,
        halfspace: halfspace.clone(),
        removed: report.removed,
    });
    state.k += 1;
    Ok(StepOutcome::CutApplied {
        vertex,
        halfspace,
        dist: max_dist,
    })
}

fn verts_at(state: &AlgoState, i: usize) -> &[f64] {
    &state.vertices.vertices[i]
}

/// Runs the outer approximation to completion (or to the cut limit in
/// indefinite mode). Hitting `max_iters` yields a partial result with
/// [`Status::SafetyCap`].
pub fn run(inst: &CvopInstance, cfg: &RunConfig) -> Result<SolveResult> {
    let mut state = initialize(inst, cfg)?;
    let mut iterations = 0;
    let (status, final_max_dist) = loop {
        if iterations >= cfg.max_iters {
            let d = state.log.last().map_or(f64::INFINITY, |r| r.max_dist);
            break (Status::SafetyCap, d);
        }
        iterations += 1;
        match step(&mut state, inst, cfg)? {
            StepOutcome::CutApplied { .. } => {}
            StepOutcome::Converged { max_dist } => break (Status::Converged, max_dist),
            StepOutcome::CutLimitReached { max_dist } => break (Status::CutLimitReached, max_dist),
            StepOutcome::PolyhedralReached { max_dist } => {
                break (Status::PolyhedralReached, max_dist)
            }
        }
    };
    log::info!(
        "{}: {:?} after {} cuts, {} minimizers, max distance {:.3e}",
        inst.name(),
        status,
        state.cuts.len(),
        state.minimizers.len(),
        final_max_dist
    );
    Ok(SolveResult {
        status,
        minimizers: state.minimizers,
        outer: state.outer,
        vertices: state.vertices,
        n_initial_rows: state.n_initial_rows,
        log: state.log,
        cuts: state.cuts,
        initial_vertices: state.initial_vertices,
        gamma: state.gamma,
        beta: state.beta,
        w_bar: state.w_bar,
        final_max_dist,
        iterations,
    })
}

/// Largest coordinate magnitude of the final outer vertices plus one; the
/// natural scale for absolute tolerances on a result.
pub fn result_scale(res: &SolveResult) -> f64 {
    1.0 + res
        .vertices
        .vertices
        .iter()
        .map(|v| max_abs(v))
        .fold(0.0, f64::max)
}
