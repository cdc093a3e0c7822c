use serde::{Deserialize, Serialize};

use super::{ConvexExpr, CvopInstance};
use crate::geometry::NormSpec;
use crate::{Error, Result};

/// Problem file schema (TOML).
///
/// ```toml
/// n = 2
/// q = 3
/// norm = "l2"
///
/// [cone]
/// dual_generators = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
/// generators = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
///
/// [box]
/// lower = [0.0, 0.0]
/// upper = [10.0, 4.0]
///
/// [[objective]]
/// kind = "sq_dist"
/// center = [1.0, 1.0]
///
/// [[constraints]]
/// kind = "affine"
/// c = [1.0, 2.0]
/// d = -10.0
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub n: usize,
    pub q: usize,
    pub norm: NormSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slater_point: Option<Vec<f64>>,
    pub cone: ConeTable,
    #[serde(rename = "box", default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<BoxTable>,
    pub objective: Vec<ConvexExpr>,
    #[serde(default)]
    pub constraints: Vec<ConvexExpr>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConeTable {
    pub dual_generators: Vec<Vec<f64>>,
    pub generators: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxTable {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl ProblemFile {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("problem files always serialize")
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())]
        .bytes()
        .filter(|&b| b == b'\n')
        .count()
        + 1
}

/// Parses and validates a problem file.
pub fn parse_problem(text: &str) -> Result<CvopInstance> {
    let file: ProblemFile = toml::from_str(text).map_err(|e| Error::Parse {
        line: e.span().map_or(0, |s| line_of(text, s.start)),
        message: e.message().to_string(),
    })?;
    CvopInstance::new(file)
}
