//! PEPS representation of the Boltzmann distribution on a king's graph and
//! the boundary-MPS environments behind the conditional probabilities.
//!
//! Rows are swept top to bottom and columns left to right in the frame chosen
//! by a [`LatticeTransform`]. The environment below row `i` is a boundary MPS
//! over row `i`; rows above the current one are fully fixed and enter
//! exactly.

mod env;
mod network;
mod transform;

pub use env::{CacheStats, EnvironmentCache};
pub use network::{PepsNetwork, MAX_EXPONENT};
pub use transform::LatticeTransform;
