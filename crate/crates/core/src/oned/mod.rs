//! Log-concave densities on the line: normalization, distribution
//! functions, the exact isoperimetric profile and lower bounds for it.

mod bounds;
mod certify;
mod density;

pub use bounds::{
    bound_midpoint, bound_tail, cheeger_bound, compare_bounds, exact_profile, ComparisonRow, MidpointBound,
    ProfilePoint, TailBound,
};
pub use certify::{symmetric_grid, verify_midpoint_condition, verify_tail_condition, ConditionReport};
pub use density::{Density1D, Potential, DEFAULT_TAIL_TOL};
