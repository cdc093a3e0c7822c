//! Convergence measurements: Hausdorff distances between consecutive outer
//! polytopes, circumradius and rate constants, log-log slope fits, and the
//! per-iteration CSV log.

use std::io::{Read, Write};

use crate::geometry::NormSpec;
use crate::linalg::{norm2, sub};
use crate::parallel::{self, Parallelism};
use crate::scalarization::ipm::{self, Affine, ScalarProgram, SmoothFn, SquaredDist};
use crate::scalarization::{project_onto_polytope, SolverConfig};
use crate::vertex_enum::VRep;
use crate::{Error, Result};

/// Distances at or below this are treated as zero (point on the upper image).
pub const TOL_ZERO: f64 = 1e-7;

/// One iteration (one cut) of the outer approximation.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    /// `‖z^{v^k}‖`, the largest vertex distance. This equals the Hausdorff
    /// distance between the current outer polytope and `P ∩ S(γ)`.
    pub max_dist: f64,
    /// Hausdorff distance between the outer polytopes before and after the
    /// cut, when tracked.
    pub hausdorff_consecutive: Option<f64>,
    pub n_vertices: usize,
    pub n_solves: usize,
    pub n_cache_hits: usize,
    pub wall_ms: f64,
}

impl IterationRecord {
    pub fn hausdorff_outer_to_upper(&self) -> f64 {
        self.max_dist
    }
}

/// Hausdorff distance between nested polytopes `cur ⊆ prev`: the largest
/// distance from a vertex of `prev` to `cur`.
pub fn hausdorff_consecutive(
    prev: &VRep,
    cur: &VRep,
    norm: NormSpec,
    cfg: &SolverConfig,
    mode: Parallelism,
) -> Result<f64> {
    if prev.is_empty() || cur.is_empty() {
        return Err(Error::Invalid(
            "Hausdorff distance needs nonempty polytopes".into(),
        ));
    }
    let scale = prev.scale().max(cur.scale());
    let back = parallel::map(mode, &cur.vertices, |v| {
        project_onto_polytope(v, &prev.vertices, None, norm, cfg)
    });
    for p in back {
        if p?.lower_bound > 1e-7 * scale {
            return Err(Error::Invalid(
                "polytopes are not nested (cur ⊄ prev)".into(),
            ));
        }
    }
    max_distance_to(&prev.vertices, &cur.vertices, norm, cfg, mode)
}

/// `max_{p ∈ points} d(p, conv vertices)`; 0 for an empty point set.
pub fn max_distance_to(
    points: &[Vec<f64>],
    vertices: &[Vec<f64>],
    norm: NormSpec,
    cfg: &SolverConfig,
    mode: Parallelism,
) -> Result<f64> {
    let dists = parallel::map(mode, points, |p| {
        project_onto_polytope(p, vertices, None, norm, cfg)
    });
    let mut best: f64 = 0.0;
    for d in dists {
        best = best.max(d?.dist);
    }
    Ok(best)
}

/// Smallest Euclidean ball containing `points`: `(center, radius)`.
pub fn min_enclosing_ball(points: &[Vec<f64>], cfg: &SolverConfig) -> Result<(Vec<f64>, f64)> {
    let first = points
        .first()
        .ok_or_else(|| Error::Invalid("no points".into()))?;
    let q = first.len();
    if points.iter().any(|p| p.len() != q) {
        return Err(Error::Invalid("point dimension mismatch".into()));
    }
    if points.iter().all(|p| p == first) {
        return Ok((first.clone(), 0.0));
    }
    let mut centroid = vec![0.0; q];
    for p in points {
        for k in 0..q {
            centroid[k] += p[k] / points.len() as f64;
        }
    }
    let far = points
        .iter()
        .map(|p| norm2(&sub(p, &centroid)))
        .fold(0.0, f64::max);
    let mut start = centroid;
    start.push(far * far * 1.5 + 1.0);
    let constraints: Vec<Box<dyn SmoothFn>> = points
        .iter()
        .map(|p| {
            Box::new(SquaredDist {
                start: 0,
                center: p.clone(),
                constant: 0.0,
                epi: Some(q),
            }) as Box<dyn SmoothFn>
        })
        .collect();
    let prog = ScalarProgram {
        dim: q + 1,
        objective: Box::new(Affine {
            coeffs: vec![(q, 1.0)],
            constant: 0.0,
        }),
        constraints,
        start,
    };
    let sol = ipm::solve(&prog, cfg)?;
    let center = sol.y[..q].to_vec();
    let radius = points
        .iter()
        .map(|p| norm2(&sub(p, &center)))
        .fold(0.0, f64::max);
    Ok((center, radius))
}

/// Volume of the Euclidean unit ball in dimension `q`.
pub fn unit_ball_volume(q: usize) -> f64 {
    let (mut even, mut odd) = (1.0, 2.0);
    let mut d = 0;
    while d + 2 <= q {
        d += 2;
        even *= 2.0 * std::f64::consts::PI / d as f64;
        odd *= 2.0 * std::f64::consts::PI / (d + 1) as f64;
    }
    if q % 2 == 0 {
        even
    } else {
        odd
    }
}

/// Constants of the improved Euclidean rate bound.
#[derive(Debug, Clone, PartialEq)]
pub struct RateConstants {
    /// Circumradius of the final outer polytope's vertices. This is an upper
    /// bound on the circumradius of `P ∩ S(γ)`.
    pub r: f64,
    pub pi_q: f64,
    pub pi_qminus1: f64,
    /// `16 R (q π_q / π_{q−1})^{2/(q−1)}`.
    pub lambda_bar: f64,
    pub theoretical_exponent: f64,
}

impl RateConstants {
    pub fn new(r: f64, q: usize, euclidean: bool) -> Result<Self> {
        if q < 2 {
            return Err(Error::Invalid("rate constants need q >= 2".into()));
        }
        let pi_q = unit_ball_volume(q);
        let pi_qminus1 = unit_ball_volume(q - 1);
        let lambda_bar = 16.0 * r * (q as f64 * pi_q / pi_qminus1).powf(2.0 / (q as f64 - 1.0));
        Ok(RateConstants {
            r,
            pi_q,
            pi_qminus1,
            lambda_bar,
            theoretical_exponent: theoretical_exponent(q, euclidean)?,
        })
    }

    pub fn from_vertices(
        vertices: &[Vec<f64>],
        euclidean: bool,
        cfg: &SolverConfig,
    ) -> Result<Self> {
        let q = vertices.first().map_or(0, |v| v.len());
        let (_, r) = min_enclosing_ball(vertices, cfg)?;
        Self::new(r, q, euclidean)
    }
}

/// `2/(1−q)` for the Euclidean norm, `1/(1−q)` otherwise.
pub fn theoretical_exponent(q: usize, euclidean: bool) -> Result<f64> {
    if q < 2 {
        return Err(Error::Invalid("theoretical rate needs q >= 2".into()));
    }
    let base = 1.0 / (1.0 - q as f64);
    Ok(if euclidean { 2.0 * base } else { base })
}

/// `c k^e` for each `k`.
pub fn theoretical_curve(q: usize, euclidean: bool, c: f64, ks: &[f64]) -> Result<Vec<f64>> {
    let e = theoretical_exponent(q, euclidean)?;
    Ok(ks.iter().map(|&k| c * k.powf(e)).collect())
}

/// Least-squares line through `(ln k, ln δ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub n_used: usize,
}

impl SlopeFit {
    pub fn predict(&self, k: f64) -> f64 {
        (self.intercept + self.slope * k.ln()).exp()
    }
}

pub const DEFAULT_BURN_IN: f64 = 0.2;

/// Fits `ln max_dist` against `ln k` after dropping the first `burn_in`
/// fraction of records. Records with `k = 0` or distance below
/// [`TOL_ZERO`] are skipped.
pub fn fit_slope(log: &[IterationRecord], burn_in: f64) -> Result<SlopeFit> {
    let pts: Vec<(f64, f64)> = log.iter().map(|r| (r.k as f64, r.max_dist)).collect();
    fit_power_law(&pts, burn_in)
}

/// [`fit_slope`] on raw `(k, δ)` pairs.
pub fn fit_power_law(points: &[(f64, f64)], burn_in: f64) -> Result<SlopeFit> {
    if !(0.0..1.0).contains(&burn_in) {
        return Err(Error::Invalid("burn-in fraction must lie in [0, 1)".into()));
    }
    let skip = (burn_in * points.len() as f64).floor() as usize;
    let data: Vec<(f64, f64)> = points[skip..]
        .iter()
        .filter(|(k, d)| *k >= 1.0 && d.is_finite() && *d > TOL_ZERO)
        .map(|(k, d)| (k.ln(), d.ln()))
        .collect();
    if data.len() < 10 {
        return Err(Error::InsufficientData(format!(
            "{} usable records after burn-in; at least 10 are needed",
            data.len()
        )));
    }
    let n = data.len() as f64;
    let mx = data.iter().map(|p| p.0).sum::<f64>() / n;
    let my = data.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = data.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = data.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = data.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::InsufficientData(
            "all usable records share the same k".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy > 0.0 {
        sxy * sxy / (sxx * syy)
    } else {
        1.0
    };
    Ok(SlopeFit {
        slope,
        intercept,
        r2,
        n_used: data.len(),
    })
}

pub const CSV_HEADER: [&str; 7] = [
    "k",
    "max_dist",
    "hausdorff_consecutive",
    "n_vertices",
    "n_solves",
    "n_cache_hits",
    "wall_ms",
];

/// Fixed 17-significant-digit float format used in every emitted file.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes the iteration log as CSV.
pub fn write_log_csv<W: Write>(records: &[IterationRecord], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in records {
        w.write_record([
            r.k.to_string(),
            fmt_f64(r.max_dist),
            r.hausdorff_consecutive.map(fmt_f64).unwrap_or_default(),
            r.n_vertices.to_string(),
            r.n_solves.to_string(),
            r.n_cache_hits.to_string(),
            fmt_f64(r.wall_ms),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a log written by [`write_log_csv`].
pub fn read_log_csv<R: Read>(input: R) -> Result<Vec<IterationRecord>> {
    let mut rd = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    let header = rd
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    if header.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header {}", CSV_HEADER.join(",")),
        });
    }
    let mut out = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        let bad = |field: &str| Error::Parse {
            line,
            message: format!("invalid value in column '{field}'"),
        };
        let float = |j: usize| rec[j].trim().parse::<f64>().map_err(|_| bad(CSV_HEADER[j]));
        let int = |j: usize| {
            rec[j]
                .trim()
                .parse::<usize>()
                .map_err(|_| bad(CSV_HEADER[j]))
        };
        out.push(IterationRecord {
            k: int(0)?,
            max_dist: float(1)?,
            hausdorff_consecutive: if rec[2].trim().is_empty() {
                None
            } else {
                Some(float(2)?)
            },
            n_vertices: int(3)?,
            n_solves: int(4)?,
            n_cache_hits: int(5)?,
            wall_ms: float(6)?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Halfspace;
    use crate::vertex_enum::{cut_update, enumerate_brute, HPolytope};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn square() -> (VRep, HPolytope) {
        let rows = vec![
            Halfspace::new(vec![1.0, 0.0], 0.0).unwrap(),
            Halfspace::new(vec![0.0, 1.0], 0.0).unwrap(),
            Halfspace::new(vec![-1.0, 0.0], -1.0).unwrap(),
            Halfspace::new(vec![0.0, -1.0], -1.0).unwrap(),
        ];
        let p = HPolytope::new(2, rows).unwrap();
        (enumerate_brute(&p).unwrap(), p)
    }

    fn hd(prev: &VRep, cur: &VRep) -> f64 {
        hausdorff_consecutive(
            prev,
            cur,
            NormSpec::L2,
            &SolverConfig::precise(),
            Parallelism::Sequential,
        )
        .unwrap()
    }

    #[test]
    fn hausdorff_examples() {
        let (v, p) = square();
        assert!(hd(&v, &v) < 1e-9);

        let diag = Halfspace::new(vec![1.0, 1.0], 0.5).unwrap();
        let (cut, _) = cut_update(&v, &p, diag).unwrap();
        assert_abs_diff_eq!(hd(&v, &cut), 0.5 / 2f64.sqrt(), epsilon = 1e-8);

        let axis = Halfspace::new(vec![1.0, 0.0], 0.25).unwrap();
        let (cut, _) = cut_update(&v, &p, axis).unwrap();
        assert_abs_diff_eq!(hd(&v, &cut), 0.25, epsilon = 1e-8);
    }

    #[test]
    fn hausdorff_rejects_non_nested() {
        let (v, p) = square();
        let (cut, _) = cut_update(&v, &p, Halfspace::new(vec![1.0, 0.0], 0.25).unwrap()).unwrap();
        let err = hausdorff_consecutive(
            &cut,
            &v,
            NormSpec::L2,
            &SolverConfig::precise(),
            Parallelism::Sequential,
        );
        assert!(err.is_err());
    }

    #[test]
    fn enclosing_ball_examples() {
        let cfg = SolverConfig::precise();
        let (c, r) = min_enclosing_ball(&[vec![0.0, 0.0], vec![2.0, 0.0]], &cfg).unwrap();
        assert_abs_diff_eq!(r, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(c[0], 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(c[1], 0.0, epsilon = 1e-8);

        let (v, _) = square();
        let (c, r) = min_enclosing_ball(&v.vertices, &cfg).unwrap();
        assert_abs_diff_eq!(r, 2f64.sqrt() / 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(c[0], 0.5, epsilon = 1e-8);

        let (_, r) = min_enclosing_ball(&[vec![3.0, -1.0, 2.0]], &cfg).unwrap();
        assert_eq!(r, 0.0);
        assert!(min_enclosing_ball(&[], &cfg).is_err());
    }

    /// Brute-force circumcircle oracle in the plane: the smallest ball is
    /// spanned by two or three of the points.
    fn brute_ball_2d(pts: &[Vec<f64>]) -> f64 {
        let covers = |c: &[f64], r: f64| {
            pts.iter()
                .all(|p| norm2(&sub(p, c)) <= r * (1.0 + 1e-12) + 1e-12)
        };
        let mut best = f64::INFINITY;
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                let c = vec![(pts[i][0] + pts[j][0]) / 2.0, (pts[i][1] + pts[j][1]) / 2.0];
                let r = norm2(&sub(&pts[i], &c));
                if covers(&c, r) {
                    best = best.min(r);
                }
                for k in j + 1..pts.len() {
                    let (a, b, cc) = (&pts[i], &pts[j], &pts[k]);
                    let d = 2.0
                        * (a[0] * (b[1] - cc[1]) + b[0] * (cc[1] - a[1]) + cc[0] * (a[1] - b[1]));
                    if d.abs() < 1e-12 {
                        continue;
                    }
                    let sq = |p: &Vec<f64>| p[0] * p[0] + p[1] * p[1];
                    let ux =
                        (sq(a) * (b[1] - cc[1]) + sq(b) * (cc[1] - a[1]) + sq(cc) * (a[1] - b[1]))
                            / d;
                    let uy =
                        (sq(a) * (cc[0] - b[0]) + sq(b) * (a[0] - cc[0]) + sq(cc) * (b[0] - a[0]))
                            / d;
                    let c = vec![ux, uy];
                    let r = norm2(&sub(a, &c));
                    if covers(&c, r) {
                        best = best.min(r);
                    }
                }
            }
        }
        best
    }

    #[test]
    fn enclosing_ball_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let cfg = SolverConfig::precise();
        for _ in 0..30 {
            let n = rng.random_range(2..9);
            let pts: Vec<Vec<f64>> = (0..n)
                .map(|_| vec![rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)])
                .collect();
            let (_, r) = min_enclosing_ball(&pts, &cfg).unwrap();
            let oracle = brute_ball_2d(&pts);
            assert!(
                (r - oracle).abs() <= 1e-7 * (1.0 + oracle),
                "{r} vs {oracle}"
            );
        }
    }

    #[test]
    fn unit_ball_volumes() {
        let pi = std::f64::consts::PI;
        assert_abs_diff_eq!(unit_ball_volume(0), 1.0);
        assert_abs_diff_eq!(unit_ball_volume(1), 2.0);
        assert_abs_diff_eq!(unit_ball_volume(2), pi, epsilon = 1e-14);
        assert_abs_diff_eq!(unit_ball_volume(3), 4.0 * pi / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(unit_ball_volume(4), pi * pi / 2.0, epsilon = 1e-14);
    }

    #[test]
    fn rate_constants() {
        // q = 2: 16 R (2π / 2)^2 = 16 R π²
        let rc = RateConstants::new(1.0, 2, true).unwrap();
        assert_abs_diff_eq!(
            rc.lambda_bar,
            16.0 * std::f64::consts::PI.powi(2),
            epsilon = 1e-10
        );
        assert_eq!(rc.theoretical_exponent, -2.0);
        assert!(RateConstants::new(1.0, 1, true).is_err());
    }

    #[test]
    fn theoretical_curve_reference_lines() {
        let v = theoretical_curve(2, true, 1.5, &[2.0]).unwrap();
        assert_abs_diff_eq!(v[0], 0.375, epsilon = 1e-15);
        let v = theoretical_curve(3, true, 2.5, &[5.0]).unwrap();
        assert_abs_diff_eq!(v[0], 0.5, epsilon = 1e-15);
        let v = theoretical_curve(4, true, 4.0, &[8.0]).unwrap();
        assert_abs_diff_eq!(v[0], 1.0, epsilon = 1e-14);
        let v = theoretical_curve(3, false, 1.0, &[4.0]).unwrap();
        assert_abs_diff_eq!(v[0], 0.5, epsilon = 1e-15);
        assert!(theoretical_curve(1, true, 1.0, &[1.0]).is_err());
    }

    fn records(ds: impl Iterator<Item = (usize, f64)>) -> Vec<IterationRecord> {
        ds.map(|(k, d)| IterationRecord {
            k,
            max_dist: d,
            hausdorff_consecutive: None,
            n_vertices: 0,
            n_solves: 0,
            n_cache_hits: 0,
            wall_ms: 0.0,
        })
        .collect()
    }

    #[test]
    fn slope_of_exact_power_law() {
        let log = records((1..=100).map(|k| (k, 1.5 * (k as f64).powi(-2))));
        let fit = fit_slope(&log, DEFAULT_BURN_IN).unwrap();
        assert_abs_diff_eq!(fit.slope, -2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(fit.intercept, 1.5f64.ln(), epsilon = 1e-9);
        assert_abs_diff_eq!(fit.r2, 1.0, epsilon = 1e-12);
        assert_eq!(fit.n_used, 80);
    }

    #[test]
    fn slope_with_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let log = records((1..=300).map(|k| {
            (
                k,
                25.0 / k as f64 * (1.0 + 0.01 * rng.random_range(-1.0..1.0)),
            )
        }));
        let fit = fit_slope(&log, DEFAULT_BURN_IN).unwrap();
        assert!((fit.slope + 1.0).abs() < 0.02, "{fit:?}");
    }

    #[test]
    fn slope_needs_data() {
        let log = records((1..=50).map(|k| (k, 0.0)));
        assert!(matches!(
            fit_slope(&log, 0.2),
            Err(Error::InsufficientData(_))
        ));
        assert!(matches!(
            fit_slope(&[], 0.2),
            Err(Error::InsufficientData(_))
        ));
        assert!(fit_slope(&log, 1.0).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let mut log = records((0..5).map(|k| (k, 1.0 / (k as f64 + 1.0))));
        log[2].hausdorff_consecutive = Some(0.125);
        log[3].n_cache_hits = 7;
        let mut buf = Vec::new();
        write_log_csv(&log, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(
            "k,max_dist,hausdorff_consecutive,n_vertices,n_solves,n_cache_hits,wall_ms\n"
        ));
        assert!(text.contains("1.2500000000000000e-1"));
        assert!(!text.contains('\r'));
        assert_eq!(read_log_csv(buf.as_slice()).unwrap(), log);
    }

    #[test]
    fn csv_errors_carry_lines() {
        assert!(matches!(
            read_log_csv("a,b\n1,2\n".as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));
        let text = "k,max_dist,hausdorff_consecutive,n_vertices,n_solves,n_cache_hits,wall_ms\n0,1,,1,1,0,0\n1,x,,1,1,0,0\n";
        assert!(matches!(
            read_log_csv(text.as_bytes()),
            Err(Error::Parse { line: 3, .. })
        ));
    }

    proptest! {
        #[test]
        fn float_format_round_trips(x in proptest::num::f64::NORMAL) {
            prop_assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }
}
