//! Polytope calculus over R^m under polyhedral norms.

mod basis;
mod helly;
mod polytope;
mod vertices;

pub use basis::{
    add_vector, basis_check, basis_defect, transport_basis, AddVectorOutput, Basis, BasisDefect, Label,
    TransportOutput,
};
pub use helly::{helly_verify, HellyReport};
pub use polytope::{
    contains_polytope, feasible, feasible_with, find_point, inflate, inflate_with, is_bounded,
    nearest_point, point_distance, support, Halfspace, Polytope,
};
pub use vertices::{hausdorff, steiner_estimate, steiner_point, vertices, SteinerEstimate, STEINER_SAMPLES};
