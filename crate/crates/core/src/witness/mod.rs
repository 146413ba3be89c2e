//! Constructive non-injectivity of k-ary Janossy pooling over piecewise
//! linear functions.

mod collision;
mod nested;
mod system;

pub use collision::{
    find_collision, lift_collision, line_restriction, verify_collision, CollisionCert, CollisionOptions,
    CollisionReport, ExactCollision, Segment, COLLISION_REL_TOL, MAX_ATTEMPTS, TUPLE_TOL,
    VERIFY_ENUMERATION_MAX_N,
};
pub use nested::{
    alpha_coefficients, check_nested, nested_point, validate_chain, ChainReport, NestedCheck,
    NestedPointCert, TupleCell, ALPHA_TOL,
};
pub use system::{
    collision_delta, collision_delta_exact, null_space_vector, tuple_residual, tuple_sums_exact,
    tuple_system_coeffs,
};
