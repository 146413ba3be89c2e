//! Piecewise-linear Janossy pooling: collision certificates showing that
//! k-ary pooling of a CPwL function is never injective on multisets, and a
//! grid encoder whose 1-ary pooling is injective (with an exact decoder) on
//! multisets with a positive separation.

pub mod assignment;
pub mod cpwl;
pub mod error;
pub mod grid_codec;
pub mod io;
pub mod janossy;
pub mod multiset;
pub mod numeric;
pub mod rng;
pub mod witness;

pub use error::{Error, Result};
pub use multiset::{Multiset, Point};
