//! Dense tensor kernel: SVD truncation, matrix-product states and operators,
//! canonical forms and variational compression.

mod compress;
mod dense;
mod linalg;
mod mps;

use serde::{Deserialize, Serialize};

pub use compress::{compress, Compression};
pub use dense::DenseTensor;
pub use linalg::{svd_truncate, SvdTruncation, RANK_CUTOFF};
pub use mps::{apply_mpo, overlap, BoundaryMps, RowMpo};

use crate::error::{Error, Result};

/// Floating-point type the contraction runs in.
pub trait Real:
    nalgebra::RealField + Copy + Send + Sync + std::fmt::Debug + std::fmt::Display + 'static
{
    fn lit(x: f64) -> Self;
    fn to_f64(self) -> f64;
}

impl Real for f64 {
    #[inline]
    fn lit(x: f64) -> Self {
        x
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
}

impl Real for f32 {
    #[inline]
    fn lit(x: f64) -> Self {
        x as f32
    }
    #[inline]
    fn to_f64(self) -> f64 {
        f64::from(self)
    }
}

/// Boundary-MPS contraction settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContractionParams {
    /// Maximum virtual bond extent χ.
    pub bond_dim: usize,
    /// Rounds of single-site variational refinement after SVD truncation.
    pub num_sweeps: usize,
    /// Inverse temperature β.
    pub beta: f64,
}

impl ContractionParams {
    pub fn new(bond_dim: usize, num_sweeps: usize, beta: f64) -> Result<Self> {
        let p = Self { bond_dim, num_sweeps, beta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.bond_dim == 0 {
            return Err(Error::InvalidParameter("bond_dim must be at least 1".into()));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(Error::InvalidParameter(format!("beta must be positive and finite, got {}", self.beta)));
        }
        Ok(())
    }
}

impl Default for ContractionParams {
    fn default() -> Self {
        Self { bond_dim: 16, num_sweeps: 1, beta: 2.0 }
    }
}
