//! Text and CSV files emitted by `solve` and `trace`.

use std::fmt::Write;

use cvop_core::algorithm::{SolveResult, Status};
use cvop_core::metrics::fmt_f64;
use cvop_core::problem::CvopInstance;
use cvop_core::verify::CheckResult;

pub fn status_name(s: Status) -> &'static str {
    match s {
        Status::Converged => "converged",
        Status::CutLimitReached => "cut limit reached",
        Status::PolyhedralReached => "polyhedral upper image reached",
        Status::SafetyCap => "safety cap reached",
    }
}

fn header(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (1..=n).map(move |i| format!("{prefix}{i}"))
}

fn row(values: &[f64]) -> impl Iterator<Item = String> + '_ {
    values.iter().map(|&v| fmt_f64(v))
}

/// One row per weak minimizer: `x1..xn, f1..fq`.
pub fn solution_csv(inst: &CvopInstance, res: &SolveResult) -> String {
    let mut out = String::new();
    let cols: Vec<String> = header("x", inst.n()).chain(header("f", inst.q())).collect();
    writeln!(out, "{}", cols.join(",")).unwrap();
    for m in &res.minimizers {
        let vals: Vec<String> = row(&m.x).chain(row(&m.image)).collect();
        writeln!(out, "{}", vals.join(",")).unwrap();
    }
    out
}

/// Halfspaces `{y : w^T y >= b}` then vertices; `kind,b,c1..cq` where `c`
/// holds the normal for halfspaces and the coordinates for vertices.
pub fn outer_csv(res: &SolveResult) -> String {
    let q = res.outer.dim();
    let mut out = String::new();
    let cols: Vec<String> = ["kind".to_string(), "offset".to_string()]
        .into_iter()
        .chain(header("c", q))
        .collect();
    writeln!(out, "{}", cols.join(",")).unwrap();
    for h in res.outer.halfspaces() {
        let vals: Vec<String> = row(&h.normal).collect();
        writeln!(out, "halfspace,{},{}", fmt_f64(h.offset), vals.join(",")).unwrap();
    }
    for v in &res.vertices.vertices {
        let vals: Vec<String> = row(v).collect();
        writeln!(out, "vertex,,{}", vals.join(",")).unwrap();
    }
    out
}

pub fn summary(
    inst: &CvopInstance,
    res: &SolveResult,
    epsilon: f64,
    checks: &[CheckResult],
) -> String {
    let mut s = String::new();
    writeln!(s, "problem {}", inst.name()).unwrap();
    writeln!(s, "n {}", inst.n()).unwrap();
    writeln!(s, "q {}", inst.q()).unwrap();
    writeln!(s, "norm {}", inst.norm()).unwrap();
    writeln!(s, "epsilon {}", fmt_f64(epsilon)).unwrap();
    writeln!(s, "status {}", status_name(res.status)).unwrap();
    writeln!(s, "k {}", res.cuts.len()).unwrap();
    writeln!(s, "beta {}", fmt_f64(res.beta)).unwrap();
    writeln!(s, "gamma {}", fmt_f64(res.gamma)).unwrap();
    writeln!(s, "minimizers {}", res.minimizers.len()).unwrap();
    writeln!(s, "outer_vertices {}", res.vertices.len()).unwrap();
    writeln!(s, "outer_halfspaces {}", res.outer.len()).unwrap();
    writeln!(s, "final_max_dist {}", fmt_f64(res.final_max_dist)).unwrap();
    for c in checks {
        writeln!(s, "{c}").unwrap();
    }
    s
}
