//! Halfspace and vertex representations of polytopes in objective space.
//!
//! The production path keeps the vertex list in sync with the halfspace list
//! by incremental cutting ([`cut_update`]). Full re-enumeration over every
//! q-subset of rows ([`enumerate_brute`]) serves as initialization and as the
//! test oracle.

use crate::geometry::Halfspace;
use crate::linalg::{kernel_direction, max_abs, rank, solve_square};
use crate::parallel::{self, Parallelism};
use crate::{Error, Result};

/// Tolerances for vertex classification. Coordinates are compared in a
/// frame scaled by `1 + max |coordinate|`.
#[derive(Debug, Clone, Copy)]
pub struct EnumTolerances {
    pub feas: f64,
    pub act: f64,
    pub dedup: f64,
    pub pivot: f64,
}

impl Default for EnumTolerances {
    fn default() -> Self {
        EnumTolerances {
            feas: 1e-9,
            act: 1e-9,
            dedup: 1e-8,
            pivot: 1e-10,
        }
    }
}

/// A polyhedron `{y : w_i^T y >= b_i for all i}` in H-representation.
#[derive(Debug, Clone, PartialEq)]
pub struct HPolytope {
    dim: usize,
    halfspaces: Vec<Halfspace>,
}

impl HPolytope {
    pub fn new(dim: usize, halfspaces: Vec<Halfspace>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Invalid("polytope dimension must be positive".into()));
        }
        if halfspaces.iter().any(|h| h.dim() != dim) {
            return Err(Error::Invalid("halfspace dimension mismatch".into()));
        }
        Ok(HPolytope { dim, halfspaces })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn halfspaces(&self) -> &[Halfspace] {
        &self.halfspaces
    }

    pub fn len(&self) -> usize {
        self.halfspaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.halfspaces.is_empty()
    }

    pub fn push(&mut self, h: Halfspace) -> Result<()> {
        if h.dim() != self.dim {
            return Err(Error::Invalid("halfspace dimension mismatch".into()));
        }
        self.halfspaces.push(h);
        Ok(())
    }

    /// Smallest slack over all rows, i.e. how deep inside `y` lies.
    pub fn min_slack(&self, y: &[f64]) -> f64 {
        self.halfspaces
            .iter()
            .map(|h| h.slack(y))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn contains(&self, y: &[f64], tol: f64) -> bool {
        self.halfspaces.iter().all(|h| h.contains(y, tol))
    }
}

/// Vertex list with, for each vertex, the sorted indices of active halfspaces.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VRep {
    pub vertices: Vec<Vec<f64>>,
    pub incidence: Vec<Vec<usize>>,
}

impl VRep {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// `1 + max |coordinate|` over all vertices.
    pub fn scale(&self) -> f64 {
        1.0 + self.vertices.iter().map(|v| max_abs(v)).fold(0.0, f64::max)
    }

    fn sort_lex(&mut self) {
        let mut idx: Vec<usize> = (0..self.vertices.len()).collect();
        idx.sort_by(|&a, &b| lex_cmp(&self.vertices[a], &self.vertices[b]));
        self.vertices = idx
            .iter()
            .map(|&i| std::mem::take(&mut self.vertices[i]))
            .collect();
        self.incidence = idx
            .iter()
            .map(|&i| std::mem::take(&mut self.incidence[i]))
            .collect();
    }
}

pub fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

/// Activity tolerance used to collect rows that may bound a new vertex.
const CANDIDATE_ROW_TOL: f64 = 1e-6;

fn point_scale(v: &[f64]) -> f64 {
    1.0 + max_abs(v)
}

fn row_tol(h: &Halfspace, scale: f64, tol: f64) -> f64 {
    tol * scale * max_abs(&h.normal).max(1.0)
}

fn active_set(halfspaces: &[Halfspace], v: &[f64], tol: f64) -> Vec<usize> {
    let s = point_scale(v);
    halfspaces
        .iter()
        .enumerate()
        .filter(|(_, h)| h.slack(v).abs() <= row_tol(h, s, tol))
        .map(|(i, _)| i)
        .collect()
}

fn same_point(a: &[f64], b: &[f64], tol: f64) -> bool {
    let s = point_scale(a).max(point_scale(b));
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * s)
}

fn subsets(m: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > m {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let Some(i) = (0..k).rev().find(|&i| idx[i] < m - k + i) else {
            return out;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Vertices of a pointed polyhedron by solving every q-subset of boundary
/// equations. Works for unbounded polyhedra too; rays are not reported.
pub fn brute_vertices(
    dim: usize,
    halfspaces: &[Halfspace],
    tol: EnumTolerances,
    mode: Parallelism,
) -> VRep {
    let combos = subsets(halfspaces.len(), dim);
    let candidates: Vec<Option<Vec<f64>>> = parallel::map(mode, &combos, |c| {
        let rows: Vec<&[f64]> = c.iter().map(|&i| halfspaces[i].normal.as_slice()).collect();
        let rhs: Vec<f64> = c.iter().map(|&i| halfspaces[i].offset).collect();
        let v = solve_square(&rows, &rhs, tol.pivot)?;
        let s = point_scale(&v);
        halfspaces
            .iter()
            .all(|h| h.slack(&v) >= -row_tol(h, s, tol.feas))
            .then_some(v)
    });
    let mut found: Vec<Vec<f64>> = candidates.into_iter().flatten().collect();
    found.sort_by(|a, b| lex_cmp(a, b));
    let mut unique: Vec<Vec<f64>> = Vec::new();
    for v in found {
        if !unique.iter().any(|u| same_point(u, &v, tol.dedup)) {
            unique.push(v);
        }
    }
    let incidence = unique
        .iter()
        .map(|v| active_set(halfspaces, v, tol.act))
        .collect();
    let mut rep = VRep {
        vertices: unique,
        incidence,
    };
    rep.sort_lex();
    rep
}

/// Exact vertex set of a bounded polytope.
pub fn enumerate_brute(p: &HPolytope) -> Result<VRep> {
    enumerate_brute_with(p, EnumTolerances::default(), Parallelism::available())
}

pub fn enumerate_brute_with(p: &HPolytope, tol: EnumTolerances, mode: Parallelism) -> Result<VRep> {
    if !is_bounded(p) {
        return Err(Error::Unbounded);
    }
    let rep = brute_vertices(p.dim, &p.halfspaces, tol, mode);
    if rep.is_empty() {
        return Err(Error::EmptyPolytope);
    }
    Ok(rep)
}

/// True iff the recession cone `{d : w^T d >= 0 for all rows}` is `{0}`.
///
/// A nonzero recession direction exists iff the row normals do not span the
/// space (a line) or some (q-1)-subset of rows of rank q-1 has a kernel
/// direction `d` with `±d` in the cone (an extreme ray).
pub fn is_bounded(p: &HPolytope) -> bool {
    let q = p.dim;
    let tol = 1e-10;
    let rows: Vec<&[f64]> = p.halfspaces.iter().map(|h| h.normal.as_slice()).collect();
    if rank(&rows, q, tol) < q {
        return false;
    }
    let in_cone = |d: &[f64]| {
        p.halfspaces.iter().all(|h| {
            let s: f64 = h.normal.iter().zip(d).map(|(a, b)| a * b).sum();
            s >= -1e-9 * max_abs(&h.normal)
        })
    };
    for c in subsets(rows.len(), q - 1) {
        let sub: Vec<&[f64]> = c.iter().map(|&i| rows[i]).collect();
        if let Some(d) = kernel_direction(&sub, q, tol) {
            let neg: Vec<f64> = d.iter().map(|x| -x).collect();
            if in_cone(&d) || in_cone(&neg) {
                return false;
            }
        }
    }
    true
}

/// Result of an incremental cut.
#[derive(Debug, Clone)]
pub struct CutReport {
    /// Vertices of the previous polytope strictly cut off.
    pub removed: Vec<Vec<f64>>,
    /// Vertices created on the cutting hyperplane.
    pub added: usize,
}

/// Intersects `(v, p)` with `h`, returning the new pair.
pub fn cut_update(v: &VRep, p: &HPolytope, h: Halfspace) -> Result<(VRep, HPolytope)> {
    let mut v = v.clone();
    let mut p = p.clone();
    cut_in_place(&mut v, &mut p, h, EnumTolerances::default())?;
    Ok((v, p))
}

/// In-place variant of [`cut_update`]. On error both inputs are left untouched.
pub fn cut_in_place(
    v: &mut VRep,
    p: &mut HPolytope,
    h: Halfspace,
    tol: EnumTolerances,
) -> Result<CutReport> {
    if h.dim() != p.dim {
        return Err(Error::Invalid("halfspace dimension mismatch".into()));
    }
    let q = p.dim;
    let new_idx = p.halfspaces.len();
    let slacks: Vec<f64> = v.vertices.iter().map(|x| h.slack(x)).collect();
    let tols: Vec<f64> = v
        .vertices
        .iter()
        .map(|x| row_tol(&h, point_scale(x), tol.act))
        .collect();
    let is_out = |i: usize| slacks[i] < -tols[i];
    let is_in = |i: usize| slacks[i] > tols[i];

    if (0..v.len()).all(|i| !is_in(i) && is_out(i)) {
        return Err(Error::EmptyPolytope);
    }

    let mut all_rows = p.halfspaces.clone();
    all_rows.push(h);

    let outs: Vec<usize> = (0..v.len()).filter(|&i| is_out(i)).collect();

    // New vertices lie on edges leaving a removed vertex, so they are cut out
    // by q-1 rows active there plus `h`. Solving those systems directly (as
    // opposed to walking the recorded incidence graph) stays correct when a
    // near-degenerate earlier cut left the incidence slightly inconsistent.
    // Vertices within tolerance of `h` count too: an edge lying almost inside
    // the hyperplane can start at one of them and end at a new vertex.
    let near: Vec<usize> = (0..v.len())
        .filter(|&i| {
            slacks[i]
                <= row_tol(
                    &all_rows[new_idx],
                    point_scale(&v.vertices[i]),
                    CANDIDATE_ROW_TOL,
                )
        })
        .collect();
    let mut cand_rows: Vec<usize> = near
        .iter()
        .flat_map(|&b| {
            active_set(
                &p.halfspaces,
                &v.vertices[b],
                CANDIDATE_ROW_TOL.max(tol.act),
            )
        })
        .collect();
    cand_rows.sort_unstable();
    cand_rows.dedup();
    let mut new_points: Vec<Vec<f64>> = Vec::new();
    for combo in subsets(cand_rows.len(), q - 1) {
        let mut rows: Vec<&[f64]> = combo
            .iter()
            .map(|&i| all_rows[cand_rows[i]].normal.as_slice())
            .collect();
        let mut rhs: Vec<f64> = combo
            .iter()
            .map(|&i| all_rows[cand_rows[i]].offset)
            .collect();
        rows.push(all_rows[new_idx].normal.as_slice());
        rhs.push(all_rows[new_idx].offset);
        let Some(pt) = solve_square(&rows, &rhs, tol.pivot) else {
            continue;
        };
        let s = point_scale(&pt);
        if all_rows
            .iter()
            .all(|r| r.slack(&pt) >= -row_tol(r, s, tol.feas))
        {
            new_points.push(pt);
        }
    }

    let mut removed = Vec::with_capacity(outs.len());
    let mut vertices = Vec::with_capacity(v.len() + new_points.len());
    let mut incidence = Vec::with_capacity(v.len() + new_points.len());
    for i in 0..v.len() {
        if is_out(i) {
            removed.push(v.vertices[i].clone());
            continue;
        }
        let mut inc = v.incidence[i].clone();
        if !is_in(i) {
            inc.push(new_idx);
        }
        vertices.push(v.vertices[i].clone());
        incidence.push(inc);
    }
    let retained = vertices.len();
    let mut added = 0;
    new_points.sort_by(|a, b| lex_cmp(a, b));
    for pt in new_points {
        if vertices.iter().any(|u| same_point(u, &pt, tol.dedup)) {
            continue;
        }
        incidence.push(active_set(&all_rows, &pt, tol.act));
        vertices.push(pt);
        added += 1;
    }
    debug_assert_eq!(vertices.len(), retained + added);

    *v = VRep {
        vertices,
        incidence,
    };
    v.sort_lex();
    p.halfspaces = all_rows;
    Ok(CutReport { removed, added })
}
