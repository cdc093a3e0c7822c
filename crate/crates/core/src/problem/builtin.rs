use super::{BoxTable, ConeTable, ConvexExpr, CvopInstance, ProblemFile};
use crate::geometry::NormSpec;
use crate::{Error, Result};

pub const BUILTIN_NAMES: [&str; 5] = [
    "example1_q2",
    "example1_q3",
    "example1_q4",
    "example2",
    "example3",
];

fn eye(q: usize) -> Vec<Vec<f64>> {
    (0..q)
        .map(|i| (0..q).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

fn orthant(q: usize) -> ConeTable {
    ConeTable {
        dual_generators: eye(q),
        generators: eye(q),
    }
}

/// Identity objective over the unit ball centered at `(1, ..., 1)`.
fn ball(q: usize) -> ProblemFile {
    ProblemFile {
        name: Some(format!("example1_q{q}")),
        n: q,
        q,
        norm: NormSpec::L2,
        beta: None,
        slater_point: None,
        cone: orthant(q),
        bounds: None,
        objective: eye(q)
            .into_iter()
            .map(|c| ConvexExpr::Affine { c, d: 0.0 })
            .collect(),
        constraints: vec![ConvexExpr::Norm2 {
            center: vec![1.0; q],
            rhs: 1.0,
        }],
    }
}

/// Squared distances to three anchor points over a polygon.
fn anchors() -> ProblemFile {
    let pts = [[1.0, 1.0], [2.0, 3.0], [4.0, 2.0]];
    ProblemFile {
        name: Some("example2".into()),
        n: 2,
        q: 3,
        norm: NormSpec::L2,
        beta: None,
        slater_point: None,
        cone: orthant(3),
        bounds: Some(BoxTable {
            lower: vec![0.0, 0.0],
            upper: vec![10.0, 4.0],
        }),
        objective: pts
            .iter()
            .map(|a| ConvexExpr::SqDist {
                center: a.to_vec(),
                rhs: 0.0,
            })
            .collect(),
        constraints: vec![ConvexExpr::Affine {
            c: vec![1.0, 2.0],
            d: -10.0,
        }],
    }
}

/// `‖x‖² + b^i x` over the ball of radius 10 intersected with `[0, 10]^3`.
fn shifted_paraboloids() -> ProblemFile {
    let bs = [
        [0.0, 10.0, -120.0],
        [80.0, -448.0, 80.0],
        [-448.0, 80.0, 80.0],
    ];
    ProblemFile {
        name: Some("example3".into()),
        n: 3,
        q: 3,
        norm: NormSpec::L2,
        beta: None,
        slater_point: None,
        cone: orthant(3),
        bounds: Some(BoxTable {
            lower: vec![0.0; 3],
            upper: vec![10.0; 3],
        }),
        objective: bs
            .iter()
            .map(|b| ConvexExpr::Quadratic {
                q: eye(3),
                b: b.to_vec(),
                d: 0.0,
            })
            .collect(),
        constraints: vec![ConvexExpr::SqDist {
            center: vec![0.0; 3],
            rhs: 100.0,
        }],
    }
}

/// One of the built-in test problems.
pub fn builtin(name: &str) -> Result<CvopInstance> {
    let file = match name {
        "example1_q2" => ball(2),
        "example1_q3" => ball(3),
        "example1_q4" => ball(4),
        "example2" => anchors(),
        "example3" => shifted_paraboloids(),
        other => {
            return Err(Error::Invalid(format!(
                "unknown builtin '{other}' (expected one of {})",
                BUILTIN_NAMES.join(", ")
            )))
        }
    };
    CvopInstance::new(file)
}
