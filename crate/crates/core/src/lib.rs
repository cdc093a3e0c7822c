//! Outer approximation of the upper image of convex vector optimization
//! problems by polyhedral cutting planes obtained from norm-minimizing
//! scalarizations.
//!
//! The entry point is [`algorithm::run`]; problems come from
//! [`problem::parse_problem`] or [`problem::builtin`].

pub mod algorithm;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod metrics;
pub mod parallel;
pub mod problem;
pub mod scalarization;
pub mod verify;
pub mod vertex_enum;

pub use error::{Error, Result};
