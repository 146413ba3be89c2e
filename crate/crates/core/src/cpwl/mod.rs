//! Continuous piecewise-linear functions: ReLU networks and explicit
//! polytope partitions behind one interface, plus the geometric queries
//! (cell location, ℓ1 distances, stability radii) used by the witness
//! constructions.

pub mod affine;
pub mod continuity;
pub mod function;
pub mod partition;
pub mod polytope;
pub mod random;
pub mod region;
pub mod relu;

pub use affine::AffineMap;
pub use continuity::{continuity_check, second_difference_kinks, ContinuityOptions, ContinuityReport};
pub use function::{permute_blocks, Covering, CpwlFunction, Stability, Symmetrized};
pub use partition::{Cell, ExplicitPartition};
pub use polytope::{HPolytope, MEMBERSHIP_TOL};
pub use region::{RegionId, RegionSet};
pub use relu::ReluNet;
