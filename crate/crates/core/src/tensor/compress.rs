use nalgebra::DMatrix;

use super::dense::DenseTensor;
use super::linalg::{svd_truncate, thin_qr};
use super::mps::{absorb_left, overlap, slice_matrix, transfer, BoundaryMps};
use super::{ContractionParams, Real};
use crate::error::{Error, Result};

/// Output of [`compress`].
#[derive(Debug, Clone)]
pub struct Compression<T: Real> {
    pub state: BoundaryMps<T>,
    /// `|⟨ψ̂, φ̂⟩|` between the normalized input and output.
    pub fidelity: f64,
    /// Squared singular weight dropped by the SVD pass, summed over bonds,
    /// relative to the unit-norm input.
    pub discarded_weight: f64,
}

/// Reduces every bond of `psi` to at most `params.bond_dim`.
///
/// The input is right-canonicalized, truncated by a left-to-right SVD pass and
/// then refined by `params.num_sweeps` single-site variational sweeps (each a
/// right-to-left followed by a left-to-right pass) maximizing the overlap
/// with the input. The output site tensors represent a unit vector; its
/// length is folded into `log_scale`.
pub fn compress<T: Real>(psi: &BoundaryMps<T>, params: &ContractionParams) -> Result<Compression<T>> {
    if params.bond_dim == 0 {
        return Err(Error::InvalidParameter("bond_dim must be at least 1".into()));
    }
    let canonical = psi.right_canonical()?;
    let (target, log_scale) = canonical.into_parts();
    let (mut phi, discarded) = svd_pass(&target, params.bond_dim)?;
    for _ in 0..params.num_sweeps {
        variational_sweep(&target, &mut phi)?;
    }
    let n = phi.len();
    let norm = phi[n - 1].norm();
    if !norm.to_f64().is_finite() {
        return Err(Error::Numeric("non-finite norm after compression".into()));
    }
    if norm == T::zero() {
        return Err(Error::DegenerateState);
    }
    phi[n - 1].scale(T::one() / norm);
    let unit = BoundaryMps::new(phi, 0.0)?;
    let target_unit = BoundaryMps::new(target, 0.0)?;
    let (ov, ov_log) = overlap(&target_unit, &unit)?;
    let fidelity = (ov.to_f64() * ov_log.exp()).abs();
    let (sites, _) = unit.into_parts();
    Ok(Compression {
        state: BoundaryMps::new(sites, log_scale + norm.to_f64().ln())?,
        fidelity,
        discarded_weight: discarded,
    })
}

/// Left-to-right truncation of a right-canonical state. The result is left
/// canonical with the remainder on the last site.
fn svd_pass<T: Real>(target: &[DenseTensor<T>], chi: usize) -> Result<(Vec<DenseTensor<T>>, f64)> {
    let n = target.len();
    let mut out = Vec::with_capacity(n);
    let mut carry = DMatrix::<T>::from_element(1, 1, T::one());
    let mut discarded = 0.0;
    for site in &target[..n - 1] {
        let merged = absorb_left(&carry, site)?;
        let (l, p) = (merged.shape()[0], merged.shape()[1]);
        let svd = svd_truncate(&merged.to_matrix(2), chi)?;
        discarded += svd.discarded_weight.to_f64();
        let k = svd.rank();
        out.push(DenseTensor::from_matrix(&[l, p, k], &svd.u)?);
        let mut svt = svd.v.transpose();
        for (i, &s) in svd.s.iter().enumerate() {
            svt.row_mut(i).scale_mut(s);
        }
        carry = svt;
    }
    out.push(absorb_left(&carry, &target[n - 1])?);
    Ok((out, discarded))
}

/// `C[a', p, b'] = Σ L[a', a] P[a, p, b] R[b', b]`.
fn local_optimum<T: Real>(left: &DMatrix<T>, site: &DenseTensor<T>, right: &DMatrix<T>) -> Result<DenseTensor<T>> {
    let (l, p, r) = (site.shape()[0], site.shape()[1], site.shape()[2]);
    let (lo, ro) = (left.nrows(), right.nrows());
    let mut out = DenseTensor::zeros(&[lo, p, ro]);
    let rt = right.transpose();
    for x in 0..p {
        let c = left * slice_matrix(site, x, l, r) * &rt;
        for a in 0..lo {
            for b in 0..ro {
                out.set(&[a, x, b], c[(a, b)]);
            }
        }
    }
    Ok(out)
}

/// `R'[a, a'] = Σ A[a, p, b] P[a', p, b'] R[b, b']`.
fn transfer_right<T: Real>(right: &DMatrix<T>, a: &DenseTensor<T>, b: &DenseTensor<T>) -> DMatrix<T> {
    let p = a.shape()[1];
    let (al, ar) = (a.shape()[0], a.shape()[2]);
    let (bl, br) = (b.shape()[0], b.shape()[2]);
    let mut out = DMatrix::<T>::zeros(al, bl);
    for x in 0..p {
        out += slice_matrix(a, x, al, ar) * right * slice_matrix(b, x, bl, br).transpose();
    }
    out
}

fn variational_sweep<T: Real>(target: &[DenseTensor<T>], phi: &mut [DenseTensor<T>]) -> Result<()> {
    let n = phi.len();
    if n == 1 {
        phi[0] = target[0].clone();
        return Ok(());
    }
    let one = DMatrix::<T>::from_element(1, 1, T::one());
    let mut left = vec![one.clone(); n];
    for k in 0..n - 1 {
        left[k + 1] = transfer(&left[k], &phi[k], &target[k]);
    }
    let mut right = vec![one; n];
    for k in (1..n).rev() {
        let center = local_optimum(&left[k], &target[k], &right[k])?;
        let (p, r) = (center.shape()[1], center.shape()[2]);
        let (q, _) = thin_qr(center.to_matrix(1).transpose());
        phi[k] = DenseTensor::from_matrix(&[q.ncols(), p, r], &q.transpose())?;
        right[k - 1] = transfer_right(&right[k], &phi[k], &target[k]);
    }
    for k in 0..n - 1 {
        let center = local_optimum(&left[k], &target[k], &right[k])?;
        let (l, p) = (center.shape()[0], center.shape()[1]);
        let (q, _) = thin_qr(center.to_matrix(2));
        phi[k] = DenseTensor::from_matrix(&[l, p, q.ncols()], &q)?;
        left[k + 1] = transfer(&left[k], &phi[k], &target[k]);
    }
    phi[n - 1] = local_optimum(&left[n - 1], &target[n - 1], &right[n - 1])?;
    Ok(())
}
