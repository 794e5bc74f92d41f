use nalgebra::DMatrix;

use super::Real;
use crate::error::{Error, Result};

/// Singular values below `RANK_CUTOFF * s_max` are always discarded.
pub const RANK_CUTOFF: f64 = 1e-14;

/// Truncated SVD `M ≈ U diag(S) Vᵀ`.
#[derive(Debug, Clone)]
pub struct SvdTruncation<T: Real> {
    pub u: DMatrix<T>,
    /// Non-negative, descending.
    pub s: Vec<T>,
    pub v: DMatrix<T>,
    /// Sum of squared discarded singular values.
    pub discarded_weight: T,
}

impl<T: Real> SvdTruncation<T> {
    pub fn rank(&self) -> usize {
        self.s.len()
    }

    pub fn reconstruct(&self) -> DMatrix<T> {
        let mut us = self.u.clone();
        for (j, &s) in self.s.iter().enumerate() {
            us.column_mut(j).scale_mut(s);
        }
        us * self.v.transpose()
    }
}

/// Best approximation of `m` of rank at most `max_rank` in Frobenius norm.
/// At least one singular triple is always kept.
pub fn svd_truncate<T: Real>(m: &DMatrix<T>, max_rank: usize) -> Result<SvdTruncation<T>> {
    if m.iter().any(|x| !x.to_f64().is_finite()) {
        return Err(Error::Numeric("non-finite entry in matrix passed to SVD".into()));
    }
    if max_rank == 0 {
        return Err(Error::Dimension("truncation rank must be at least 1".into()));
    }
    let svd = m.clone().svd(true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(Error::Numeric("SVD did not produce singular vectors".into())),
    };
    let sv = svd.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[b].partial_cmp(&sv[a]).unwrap_or(std::cmp::Ordering::Equal));

    let s_max = order.first().map_or(T::zero(), |&i| sv[i]);
    let floor = s_max * T::lit(RANK_CUTOFF);
    let mut keep = order
        .iter()
        .take(max_rank)
        .take_while(|&&i| sv[i] > floor)
        .count();
    keep = keep.max(1);

    let discarded_weight = order[keep..].iter().fold(T::zero(), |acc, &i| acc + sv[i] * sv[i]);
    let mut uk = DMatrix::zeros(m.nrows(), keep);
    let mut vk = DMatrix::zeros(m.ncols(), keep);
    let mut s = Vec::with_capacity(keep);
    for (j, &i) in order[..keep].iter().enumerate() {
        uk.set_column(j, &u.column(i));
        vk.set_column(j, &v_t.row(i).transpose());
        s.push(sv[i]);
    }
    Ok(SvdTruncation { u: uk, s, v: vk, discarded_weight })
}

/// Thin QR: `m = q r` with `q` having `min(rows, cols)` orthonormal columns.
pub(crate) fn thin_qr<T: Real>(m: DMatrix<T>) -> (DMatrix<T>, DMatrix<T>) {
    let qr = m.qr();
    (qr.q(), qr.r())
}
