//! Low-energy spectra of generalized Potts, Ising and QUBO problems on
//! king's-graph geometries.
//!
//! The Boltzmann distribution `exp(-beta * E(x))` of a Potts Hamiltonian is
//! written as a PEPS on a square grid with nearest-neighbour and diagonal
//! couplings. Boundary matrix-product states give (approximate) conditional
//! probabilities, which drive a branch-and-bound search that adds one Potts
//! variable at a time, merges branches that agree on the boundary of the
//! explored region and records the localized excitations (droplets) exposed
//! by those merges.
//!
//! Energy convention is `E(s) = sum_<ij> J_ij s_i s_j + sum_i h_i s_i` with
//! `s_i` in `{-1, +1}`, each edge counted once and no factor 1/2. Instances
//! written for `E = -sum J s s` need their couplings negated.

pub mod error;
pub mod gen;
pub mod instance_io;
pub mod ising;
pub mod oracle;
pub mod peps;
pub mod potts;
pub mod search;
pub mod tensor;

pub use error::{Error, Result};
pub use ising::IsingGraph;
pub use peps::{EnvironmentCache, LatticeTransform, PepsNetwork};
pub use potts::{ClusterTopology, PottsHamiltonian};
pub use search::{
    low_energy_spectrum, unpack_droplets, Droplet, DropletMode, DropletParams, SearchParams, Solution,
};
pub use tensor::{BoundaryMps, ContractionParams, Real, RowMpo};
