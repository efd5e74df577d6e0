pub mod convex;
pub mod cores;
pub mod error;
pub mod gamma;
pub mod json;
pub mod lp;
pub mod metric;
pub mod nagata;
pub mod norm;
pub mod patch;
pub mod problem;
pub mod selection;
pub mod whitney;

pub use error::{Error, Result};
pub use problem::SelectionProblem;
