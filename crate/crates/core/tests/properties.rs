use proptest::prelude::*;

use cvop_core::geometry::{norm_eval, Halfspace, NormSpec, PolyCone};
use cvop_core::metrics::{read_log_csv, write_log_csv, IterationRecord};
use cvop_core::parallel::Parallelism;
use cvop_core::problem::builtin;
use cvop_core::scalarization::{project_onto_polytope, solve_norm_min, SolverConfig};
use cvop_core::vertex_enum::{
    brute_vertices, cut_update, enumerate_brute, is_bounded, lex_cmp, EnumTolerances, HPolytope,
};

fn unit(v: Vec<f64>) -> Option<Vec<f64>> {
    let n = norm_eval(NormSpec::L2, &v);
    (n > 0.2).then(|| v.into_iter().map(|x| x / n).collect())
}

/// Rows `w^T y >= -b` with `b > 0`, so the origin is strictly inside.
fn rows_strategy(q: usize, max_rows: usize) -> impl Strategy<Value = Vec<Halfspace>> {
    prop::collection::vec(
        (prop::collection::vec(-1.0..1.0f64, q), 0.3..2.0f64),
        q + 1..=max_rows,
    )
    .prop_map(|rows| {
        rows.into_iter()
            .filter_map(|(w, b)| unit(w).map(|w| Halfspace::new(w, -b).unwrap()))
            .collect()
    })
}

fn box_rows(q: usize, r: f64) -> Vec<Halfspace> {
    (0..q)
        .flat_map(|i| {
            [1.0, -1.0].map(|s| {
                let mut w = vec![0.0; q];
                w[i] = s;
                Halfspace::new(w, -r).unwrap()
            })
        })
        .collect()
}

fn sorted(mut v: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    v.sort_by(|a, b| lex_cmp(a, b));
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn incremental_cuts_match_brute_force(q in 2usize..=3, cuts in rows_strategy(3, 8)) {
        let cuts: Vec<Halfspace> = cuts
            .into_iter()
            .map(|h| Halfspace::new(h.normal[..q].to_vec(), h.offset))
            .filter_map(Result::ok)
            .collect();
        let mut p = HPolytope::new(q, box_rows(q, 3.0)).unwrap();
        let mut v = enumerate_brute(&p).unwrap();
        for h in cuts {
            let (nv, np) = cut_update(&v, &p, h).unwrap();
            v = nv;
            p = np;
            let brute = enumerate_brute(&p).unwrap();
            prop_assert_eq!(v.len(), brute.len());
            for (a, b) in sorted(v.vertices.clone()).iter().zip(sorted(brute.vertices)) {
                for (x, y) in a.iter().zip(&b) {
                    prop_assert!((x - y).abs() <= 1e-8);
                }
            }
        }
    }

    #[test]
    fn vertices_satisfy_every_row_and_are_tight(rows in rows_strategy(3, 10)) {
        let p = HPolytope::new(3, rows).unwrap();
        prop_assume!(is_bounded(&p));
        let v = brute_vertices(3, p.halfspaces(), EnumTolerances::default(), Parallelism::Sequential);
        prop_assert!(!v.is_empty());
        for (x, inc) in v.vertices.iter().zip(&v.incidence) {
            prop_assert!(p.min_slack(x) >= -1e-9);
            prop_assert!(inc.len() >= 3);
        }
    }

    #[test]
    fn sequential_and_parallel_enumeration_agree(rows in rows_strategy(3, 10)) {
        let tol = EnumTolerances::default();
        let a = brute_vertices(3, &rows, tol, Parallelism::Sequential);
        let b = brute_vertices(3, &rows, tol, Parallelism::Rayon);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn projection_is_feasible_and_certified(
        pts in prop::collection::vec(prop::collection::vec(-2.0..2.0f64, 2), 1..6),
        y in prop::collection::vec(-4.0..4.0f64, 2),
        norm in prop_oneof![Just(NormSpec::L1), Just(NormSpec::L2), Just(NormSpec::LInf)],
    ) {
        let cone = PolyCone::orthant(2, norm);
        let p = project_onto_polytope(&y, &pts, Some(&cone), norm, &SolverConfig::precise()).unwrap();
        prop_assert!(p.lower_bound <= p.dist + 1e-12);
        prop_assert!(p.dist - p.lower_bound <= 1e-6 * (1.0 + p.dist));
        // No listed point does better than the projection.
        for q in &pts {
            let d: Vec<f64> = y.iter().zip(q).map(|(a, b)| a - b).collect();
            prop_assert!(norm_eval(norm, &d) >= p.lower_bound - 1e-7);
        }
        let d: Vec<f64> = y.iter().zip(&p.nearest).map(|(a, b)| a - b).collect();
        prop_assert!((norm_eval(norm, &d) - p.dist).abs() <= 1e-9 * (1.0 + p.dist));
    }

    #[test]
    fn distance_to_disc_upper_image(angle in 0.0..std::f64::consts::FRAC_PI_2, r in 0.0..3.0f64) {
        // Points below-left of the centre of B((1,1),1) + R²₊.
        let inst = builtin("example1_q2").unwrap();
        let v = [1.0 - r * angle.cos(), 1.0 - r * angle.sin()];
        let sol = solve_norm_min(&inst, &v, &SolverConfig::precise()).unwrap();
        prop_assert!((sol.objective_value - (r - 1.0).max(0.0)).abs() <= 1e-6);
        // v + z lies in the upper image.
        let y = sol.y(&v);
        let d = ((y[0] - 1.0).min(0.0).powi(2) + (y[1] - 1.0).min(0.0).powi(2)).sqrt();
        prop_assert!(d <= 1.0 + 1e-6);
    }

    #[test]
    fn log_csv_round_trips(
        recs in prop::collection::vec(
            (1e-12..1e3f64, prop::option::of(0.0..1e3f64), 1usize..500, 0usize..50, 0usize..50, 0.0..1e4f64),
            1..20,
        )
    ) {
        let log: Vec<IterationRecord> = recs
            .into_iter()
            .enumerate()
            .map(|(k, (max_dist, h, n_vertices, n_solves, n_cache_hits, wall_ms))| IterationRecord {
                k,
                max_dist,
                hausdorff_consecutive: h,
                n_vertices,
                n_solves,
                n_cache_hits,
                wall_ms,
            })
            .collect();
        let mut buf = Vec::new();
        write_log_csv(&log, &mut buf).unwrap();
        let back = read_log_csv(buf.as_slice()).unwrap();
        prop_assert_eq!(back, log);
    }
}
