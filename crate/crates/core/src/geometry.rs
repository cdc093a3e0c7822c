//! Norms, halfspaces and polyhedral ordering cones.

use serde::{Deserialize, Serialize};

use crate::linalg::{dot, norm2, rank};
use crate::{Error, Result};

/// Default tolerance for cone consistency checks.
pub const TOL_CONE: f64 = 1e-9;

/// The norm used in objective space. Its dual norm follows from the kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormSpec {
    L1,
    L2,
    #[serde(rename = "linf")]
    LInf,
}

impl NormSpec {
    pub fn dual(self) -> NormSpec {
        match self {
            NormSpec::L1 => NormSpec::LInf,
            NormSpec::L2 => NormSpec::L2,
            NormSpec::LInf => NormSpec::L1,
        }
    }

    pub fn eval(self, z: &[f64]) -> f64 {
        norm_eval(self, z)
    }

    pub fn dual_eval(self, w: &[f64]) -> f64 {
        dual_norm_eval(self, w)
    }

    pub fn name(self) -> &'static str {
        match self {
            NormSpec::L1 => "l1",
            NormSpec::L2 => "l2",
            NormSpec::LInf => "linf",
        }
    }
}

impl std::str::FromStr for NormSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(NormSpec::L1),
            "l2" => Ok(NormSpec::L2),
            "linf" => Ok(NormSpec::LInf),
            other => Err(Error::Invalid(format!("unknown norm '{other}'"))),
        }
    }
}

impl std::fmt::Display for NormSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

pub fn norm_eval(spec: NormSpec, z: &[f64]) -> f64 {
    match spec {
        NormSpec::L1 => z.iter().map(|x| x.abs()).sum(),
        NormSpec::L2 => norm2(z),
        NormSpec::LInf => z.iter().fold(0.0, |m, x| m.max(x.abs())),
    }
}

/// Evaluates the dual of the norm `spec` at `w`.
pub fn dual_norm_eval(spec: NormSpec, w: &[f64]) -> f64 {
    norm_eval(spec.dual(), w)
}

/// The closed halfspace `{y : normal^T y >= offset}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Halfspace {
    pub fn new(normal: Vec<f64>, offset: f64) -> Result<Self> {
        if normal.iter().all(|&x| x == 0.0) || normal.iter().any(|x| !x.is_finite()) {
            return Err(Error::Invalid(
                "halfspace normal must be finite and nonzero".into(),
            ));
        }
        if !offset.is_finite() {
            return Err(Error::Invalid("halfspace offset must be finite".into()));
        }
        Ok(Halfspace { normal, offset })
    }

    /// The halfspace `{y : w^T y >= w^T anchor}` supporting at `anchor`.
    pub fn supporting(normal: Vec<f64>, anchor: &[f64]) -> Result<Self> {
        let offset = dot(&normal, anchor);
        Halfspace::new(normal, offset)
    }

    pub fn dim(&self) -> usize {
        self.normal.len()
    }

    /// `normal^T y - offset`; nonnegative exactly on the halfspace.
    pub fn slack(&self, y: &[f64]) -> f64 {
        dot(&self.normal, y) - self.offset
    }

    pub fn contains(&self, y: &[f64], tol: f64) -> bool {
        self.slack(y) >= -tol
    }
}

/// `{z : w^T z >= w^T anchor - eps/2}`, which contains
/// `{z : w^T z >= w^T anchor} + B_{eps/2}(0)` whenever `||w||_* <= 1`.
pub fn shifted_halfspace(
    normal: &[f64],
    anchor: &[f64],
    eps: f64,
    norm: NormSpec,
) -> Result<Halfspace> {
    if !(eps > 0.0) {
        return Err(Error::Invalid("eps must be positive".into()));
    }
    if normal.iter().all(|&x| x == 0.0) {
        return Err(Error::Invalid("zero normal".into()));
    }
    if dual_norm_eval(norm, normal) > 1.0 + 1e-9 {
        return Err(Error::Invalid(
            "normal must have dual norm at most 1".into(),
        ));
    }
    Halfspace::new(normal.to_vec(), dot(normal, anchor) - 0.5 * eps)
}

/// A polyhedral ordering cone given by generators of both `C` and `C+`.
///
/// Dual generators are stored with unit dual norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyCone {
    dual_generators: Vec<Vec<f64>>,
    generators: Vec<Vec<f64>>,
}

impl PolyCone {
    /// Validates the generator sets and rescales the dual generators to unit
    /// dual norm under `norm`.
    pub fn new(
        dual_generators: Vec<Vec<f64>>,
        generators: Vec<Vec<f64>>,
        norm: NormSpec,
    ) -> Result<Self> {
        let q = dual_generators
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::Validation("cone needs dual generators".into()))?;
        if q == 0 {
            return Err(Error::Validation("cone dimension must be positive".into()));
        }
        if dual_generators
            .iter()
            .chain(&generators)
            .any(|g| g.len() != q)
        {
            return Err(Error::Validation(
                "cone generators have inconsistent lengths".into(),
            ));
        }
        if dual_generators.len() < q {
            return Err(Error::Validation(format!(
                "need at least q = {q} dual generators, got {}",
                dual_generators.len()
            )));
        }
        if generators.is_empty() {
            return Err(Error::Validation("cone needs primal generators".into()));
        }
        let mut duals = Vec::with_capacity(dual_generators.len());
        for w in dual_generators {
            let n = dual_norm_eval(norm, &w);
            if !(n > 0.0) || !n.is_finite() {
                return Err(Error::Validation(
                    "dual generator must be finite and nonzero".into(),
                ));
            }
            duals.push(w.iter().map(|x| x / n).collect::<Vec<_>>());
        }
        let rows: Vec<&[f64]> = duals.iter().map(Vec::as_slice).collect();
        if rank(&rows, q, 1e-10) < q {
            return Err(Error::Validation("dual cone is not solid".into()));
        }
        for c in &generators {
            let cn = norm2(c);
            if !(cn > 0.0) || !cn.is_finite() {
                return Err(Error::Validation(
                    "primal generator must be finite and nonzero".into(),
                ));
            }
            for w in &duals {
                if dot(w, c) < -TOL_CONE * (1.0 + cn) {
                    return Err(Error::Validation(
                        "primal generator lies outside the cone described by the dual generators"
                            .into(),
                    ));
                }
            }
        }
        let cone = PolyCone {
            dual_generators: duals,
            generators,
        };
        let wbar: Vec<f64> = cone.dual_sum();
        for c in &cone.generators {
            if dot(&wbar, c) <= TOL_CONE * norm2(c) {
                return Err(Error::Validation("cone is not pointed".into()));
            }
        }
        Ok(cone)
    }

    /// The nonnegative orthant of dimension `q`.
    pub fn orthant(q: usize, norm: NormSpec) -> Self {
        let eye: Vec<Vec<f64>> = (0..q)
            .map(|i| (0..q).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        PolyCone::new(eye.clone(), eye, norm).expect("orthant is a valid cone")
    }

    pub fn dim(&self) -> usize {
        self.dual_generators[0].len()
    }

    pub fn dual_generators(&self) -> &[Vec<f64>] {
        &self.dual_generators
    }

    pub fn generators(&self) -> &[Vec<f64>] {
        &self.generators
    }

    /// Rescales dual generators for a different norm.
    pub fn renormalized(&self, norm: NormSpec) -> Result<Self> {
        PolyCone::new(self.dual_generators.clone(), self.generators.clone(), norm)
    }

    fn dual_sum(&self) -> Vec<f64> {
        let q = self.dim();
        let mut s = vec![0.0; q];
        for w in &self.dual_generators {
            for (a, b) in s.iter_mut().zip(w) {
                *a += b;
            }
        }
        s
    }

    /// `sum_j w^j / ||sum_j w^j||_*`, an interior direction of `C+`.
    pub fn interior_dual(&self, norm: NormSpec) -> Vec<f64> {
        let s = self.dual_sum();
        let n = dual_norm_eval(norm, &s);
        s.iter().map(|x| x / n).collect()
    }

    /// A direction in the interior of `C`: the normalized sum of the primal generators.
    pub fn interior_direction(&self) -> Vec<f64> {
        let q = self.dim();
        let mut s = vec![0.0; q];
        for c in &self.generators {
            let n = norm2(c);
            for (a, b) in s.iter_mut().zip(c) {
                *a += b / n;
            }
        }
        let n = norm2(&s);
        s.iter().map(|x| x / n).collect()
    }

    pub fn contains(&self, y: &[f64], tol: f64) -> bool {
        cone_contains(self, y, tol)
    }

    /// Membership in the dual cone `C+`.
    pub fn dual_contains(&self, w: &[f64], tol: f64) -> bool {
        self.generators.iter().all(|c| dot(w, c) >= -tol * norm2(c))
    }
}

/// `y ∈ C` within `tol`, tested against every dual generator.
pub fn cone_contains(cone: &PolyCone, y: &[f64], tol: f64) -> bool {
    cone.dual_generators.iter().all(|w| dot(w, y) >= -tol)
}
