use nalgebra::DMatrix;

use super::dense::DenseTensor;
use super::linalg::thin_qr;
use super::Real;
use crate::error::{Error, Result};

/// Matrix-product state with site tensors indexed `(left, physical, right)`.
/// The represented vector is `exp(log_scale)` times the contraction of the
/// site tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryMps<T: Real> {
    sites: Vec<DenseTensor<T>>,
    log_scale: f64,
}

impl<T: Real> BoundaryMps<T> {
    pub fn new(sites: Vec<DenseTensor<T>>, log_scale: f64) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::Dimension("an MPS needs at least one site".into()));
        }
        for (k, s) in sites.iter().enumerate() {
            if s.shape().len() != 3 {
                return Err(Error::Dimension(format!("site {k} has rank {}", s.shape().len())));
            }
        }
        if sites[0].shape()[0] != 1 || sites[sites.len() - 1].shape()[2] != 1 {
            return Err(Error::Dimension("outer bonds must have extent 1".into()));
        }
        for (k, w) in sites.windows(2).enumerate() {
            if w[0].shape()[2] != w[1].shape()[0] {
                return Err(Error::Dimension(format!(
                    "bond {k}|{}: {} vs {}",
                    k + 1,
                    w[0].shape()[2],
                    w[1].shape()[0]
                )));
            }
        }
        Ok(Self { sites, log_scale })
    }

    /// Product state from one vector per site.
    pub fn product(vectors: &[Vec<T>]) -> Result<Self> {
        let sites = vectors
            .iter()
            .map(|v| DenseTensor::from_vec(&[1, v.len(), 1], v.clone()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(sites, 0.0)
    }

    /// The all-ones product state.
    pub fn ones(dims: &[usize]) -> Result<Self> {
        let vectors: Vec<Vec<T>> = dims.iter().map(|&d| vec![T::one(); d]).collect();
        Self::product(&vectors)
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[DenseTensor<T>] {
        &self.sites
    }

    pub fn site(&self, k: usize) -> &DenseTensor<T> {
        &self.sites[k]
    }

    pub fn log_scale(&self) -> f64 {
        self.log_scale
    }

    pub fn physical_dims(&self) -> Vec<usize> {
        self.sites.iter().map(|s| s.shape()[1]).collect()
    }

    /// Extents of the internal bonds.
    pub fn bond_dims(&self) -> Vec<usize> {
        self.sites[..self.sites.len() - 1].iter().map(|s| s.shape()[2]).collect()
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    pub(crate) fn into_parts(self) -> (Vec<DenseTensor<T>>, f64) {
        (self.sites, self.log_scale)
    }

    /// Dense vector `(entries, log_scale)` with the physical indices in
    /// row-major order. Only for small widths.
    pub fn to_dense(&self) -> (Vec<f64>, f64) {
        let mut acc: Vec<Vec<f64>> = vec![vec![1.0]];
        for s in &self.sites {
            let (l, p, r) = (s.shape()[0], s.shape()[1], s.shape()[2]);
            let mut next = Vec::with_capacity(acc.len() * p);
            for row in &acc {
                for x in 0..p {
                    let mut out = vec![0.0; r];
                    for (a, &ra) in row.iter().enumerate().take(l) {
                        if ra == 0.0 {
                            continue;
                        }
                        for (b, o) in out.iter_mut().enumerate() {
                            *o += ra * s.get(&[a, x, b]).to_f64();
                        }
                    }
                    next.push(out);
                }
            }
            acc = next;
        }
        (acc.into_iter().map(|v| v[0]).collect(), self.log_scale)
    }

    /// Left-canonical form: every site but the last is a left isometry, the
    /// last holds a unit-norm remainder, the norm goes to `log_scale`.
    pub fn left_canonical(&self) -> Result<Self> {
        let n = self.sites.len();
        let mut sites = self.sites.clone();
        let mut log_scale = self.log_scale;
        for k in 0..n - 1 {
            let shape = sites[k].shape().to_vec();
            let (q, mut r) = thin_qr(sites[k].to_matrix(2));
            let s = rescale(&mut r)?;
            log_scale += s;
            let kept = q.ncols();
            sites[k] = DenseTensor::from_matrix(&[shape[0], shape[1], kept], &q)?;
            sites[k + 1] = absorb_left(&r, &sites[k + 1])?;
        }
        log_scale += normalize_site(&mut sites[n - 1])?;
        Self::new(sites, log_scale)
    }

    /// Right-canonical form: every site but the first is a right isometry.
    pub fn right_canonical(&self) -> Result<Self> {
        let n = self.sites.len();
        let mut sites = self.sites.clone();
        let mut log_scale = self.log_scale;
        for k in (1..n).rev() {
            let shape = sites[k].shape().to_vec();
            let (q, r) = thin_qr(sites[k].to_matrix(1).transpose());
            let mut rt = r.transpose();
            log_scale += rescale(&mut rt)?;
            let kept = q.ncols();
            sites[k] = DenseTensor::from_matrix(&[kept, shape[1], shape[2]], &q.transpose())?;
            sites[k - 1] = absorb_right(&sites[k - 1], &rt)?;
        }
        log_scale += normalize_site(&mut sites[0])?;
        Self::new(sites, log_scale)
    }

    /// Largest deviation from the left-isometry condition over sites `0..n-1`.
    pub fn left_isometry_error(&self) -> f64 {
        let n = self.sites.len();
        self.sites[..n - 1]
            .iter()
            .map(|s| {
                let m = s.to_matrix(2);
                let g = m.transpose() * &m;
                identity_error(&g)
            })
            .fold(0.0, f64::max)
    }

    /// Largest deviation from the right-isometry condition over sites `1..n`.
    pub fn right_isometry_error(&self) -> f64 {
        self.sites[1..]
            .iter()
            .map(|s| {
                let m = s.to_matrix(1);
                let g = &m * m.transpose();
                identity_error(&g)
            })
            .fold(0.0, f64::max)
    }
}

fn identity_error<T: Real>(g: &DMatrix<T>) -> f64 {
    let mut err: f64 = 0.0;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            err = err.max((g[(i, j)].to_f64() - target).abs());
        }
    }
    err
}

/// Divides `m` by its largest entry and returns the log of that factor.
fn rescale<T: Real>(m: &mut DMatrix<T>) -> Result<f64> {
    let mx = m.iter().fold(T::zero(), |a, &x| a.max(x.abs()));
    if !(mx.to_f64().is_finite()) {
        return Err(Error::Numeric("non-finite entry during canonicalization".into()));
    }
    if mx == T::zero() {
        return Err(Error::DegenerateState);
    }
    m.scale_mut(T::one() / mx);
    Ok(mx.to_f64().ln())
}

fn normalize_site<T: Real>(site: &mut DenseTensor<T>) -> Result<f64> {
    let norm = site.norm();
    if !norm.to_f64().is_finite() {
        return Err(Error::Numeric("non-finite norm".into()));
    }
    if norm == T::zero() {
        return Err(Error::DegenerateState);
    }
    site.scale(T::one() / norm);
    Ok(norm.to_f64().ln())
}

/// `m · site` over the left bond.
pub(crate) fn absorb_left<T: Real>(m: &DMatrix<T>, site: &DenseTensor<T>) -> Result<DenseTensor<T>> {
    let (_, p, r) = (site.shape()[0], site.shape()[1], site.shape()[2]);
    let prod = m * site.to_matrix(1);
    DenseTensor::from_matrix(&[m.nrows(), p, r], &prod)
}

/// `site · m` over the right bond.
pub(crate) fn absorb_right<T: Real>(site: &DenseTensor<T>, m: &DMatrix<T>) -> Result<DenseTensor<T>> {
    let (l, p, _) = (site.shape()[0], site.shape()[1], site.shape()[2]);
    let prod = site.to_matrix(2) * m;
    DenseTensor::from_matrix(&[l, p, m.ncols()], &prod)
}

/// Matrix-product operator with tensors indexed
/// `(left, input physical, output physical, right)`, scaled by
/// `exp(log_scale)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RowMpo<T: Real> {
    sites: Vec<DenseTensor<T>>,
    log_scale: f64,
}

impl<T: Real> RowMpo<T> {
    pub fn new(sites: Vec<DenseTensor<T>>) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::Dimension("an MPO needs at least one site".into()));
        }
        if sites.iter().any(|s| s.shape().len() != 4) {
            return Err(Error::Dimension("MPO tensors must have rank 4".into()));
        }
        if sites[0].shape()[0] != 1 || sites[sites.len() - 1].shape()[3] != 1 {
            return Err(Error::Dimension("outer MPO bonds must have extent 1".into()));
        }
        for w in sites.windows(2) {
            if w[0].shape()[3] != w[1].shape()[0] {
                return Err(Error::Dimension("MPO bond extents disagree".into()));
            }
        }
        Ok(Self { sites, log_scale: 0.0 })
    }

    pub fn with_log_scale(mut self, log_scale: f64) -> Self {
        self.log_scale = log_scale;
        self
    }

    pub fn log_scale(&self) -> f64 {
        self.log_scale
    }

    /// Identity operator on the given physical dimensions.
    pub fn identity(dims: &[usize]) -> Result<Self> {
        let sites = dims
            .iter()
            .map(|&d| {
                let mut t = DenseTensor::zeros(&[1, d, d, 1]);
                for x in 0..d {
                    t.set(&[0, x, x, 0], T::one());
                }
                t
            })
            .collect();
        Self::new(sites)
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[DenseTensor<T>] {
        &self.sites
    }

    pub fn input_dims(&self) -> Vec<usize> {
        self.sites.iter().map(|s| s.shape()[1]).collect()
    }

    pub fn output_dims(&self) -> Vec<usize> {
        self.sites.iter().map(|s| s.shape()[2]).collect()
    }

    pub fn bond_dims(&self) -> Vec<usize> {
        self.sites[..self.sites.len() - 1].iter().map(|s| s.shape()[3]).collect()
    }

    /// Swaps input and output physical indices.
    pub fn transposed(&self) -> Self {
        let sites = self
            .sites
            .iter()
            .map(|s| {
                let (l, i, o, r) = (s.shape()[0], s.shape()[1], s.shape()[2], s.shape()[3]);
                let mut t = DenseTensor::zeros(&[l, o, i, r]);
                for a in 0..l {
                    for x in 0..i {
                        for y in 0..o {
                            for b in 0..r {
                                t.set(&[a, y, x, b], s.get(&[a, x, y, b]));
                            }
                        }
                    }
                }
                t
            })
            .collect();
        Self { sites, log_scale: self.log_scale }
    }

    /// Dense matrix `O[out, in]` with row-major multi-indices, log factor
    /// applied. Only for small widths.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let ins: usize = self.input_dims().iter().product();
        let outs: usize = self.output_dims().iter().product();
        let mut mat = vec![vec![0.0; ins]; outs];
        for (col, row_in) in (0..ins).map(|c| (c, unflatten(c, &self.input_dims()))) {
            for (row, row_out) in (0..outs).map(|r| (r, unflatten(r, &self.output_dims()))) {
                let mut acc = vec![1.0];
                for (k, s) in self.sites.iter().enumerate() {
                    let r = s.shape()[3];
                    let mut next = vec![0.0; r];
                    for (a, &va) in acc.iter().enumerate() {
                        for (b, nb) in next.iter_mut().enumerate() {
                            *nb += va * s.get(&[a, row_in[k], row_out[k], b]).to_f64();
                        }
                    }
                    acc = next;
                }
                mat[row][col] = acc[0] * self.log_scale.exp();
            }
        }
        mat
    }
}

fn unflatten(mut index: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for k in (0..dims.len()).rev() {
        out[k] = index % dims[k];
        index /= dims[k];
    }
    out
}

/// Exact product `op · psi`, contracting the operator's input index with the
/// state's physical index. Bond extents multiply; each resulting site is
/// divided by its largest entry and the factor folded into `log_scale`.
pub fn apply_mpo<T: Real>(op: &RowMpo<T>, psi: &BoundaryMps<T>) -> Result<BoundaryMps<T>> {
    if op.len() != psi.len() {
        return Err(Error::Dimension(format!("MPO has {} sites, MPS {}", op.len(), psi.len())));
    }
    let mut log_scale = psi.log_scale() + op.log_scale();
    let mut sites = Vec::with_capacity(psi.len());
    for (k, (w, a)) in op.sites().iter().zip(psi.sites()).enumerate() {
        let (wl, wi, wo, wr) = (w.shape()[0], w.shape()[1], w.shape()[2], w.shape()[3]);
        let (al, ap, ar) = (a.shape()[0], a.shape()[1], a.shape()[2]);
        if wi != ap {
            return Err(Error::Dimension(format!(
                "site {k}: MPO input dimension {wi}, MPS physical dimension {ap}"
            )));
        }
        let mut out = DenseTensor::<T>::zeros(&[al * wl, wo, ar * wr]);
        let wd = w.data();
        let ad = a.data();
        let od = out.data_mut();
        for la in 0..al {
            for x in 0..ap {
                for ra in 0..ar {
                    let av = ad[(la * ap + x) * ar + ra];
                    if av == T::zero() {
                        continue;
                    }
                    for lw in 0..wl {
                        for y in 0..wo {
                            let obase = ((la * wl + lw) * wo + y) * (ar * wr) + ra * wr;
                            let wbase = ((lw * wi + x) * wo + y) * wr;
                            for rw in 0..wr {
                                od[obase + rw] += av * wd[wbase + rw];
                            }
                        }
                    }
                }
            }
        }
        let mx = out.max_abs();
        if !mx.to_f64().is_finite() {
            return Err(Error::Numeric(format!("non-finite entry applying MPO at site {k}")));
        }
        if mx > T::zero() {
            out.scale(T::one() / mx);
            log_scale += mx.to_f64().ln();
        }
        sites.push(out);
    }
    BoundaryMps::new(sites, log_scale)
}

/// `⟨psi, phi⟩ = value · exp(log_scale)`.
pub fn overlap<T: Real>(psi: &BoundaryMps<T>, phi: &BoundaryMps<T>) -> Result<(T, f64)> {
    if psi.len() != phi.len() || psi.physical_dims() != phi.physical_dims() {
        return Err(Error::Dimension("overlap of states with different physical dimensions".into()));
    }
    let mut env = DMatrix::<T>::from_element(1, 1, T::one());
    let mut log_scale = psi.log_scale() + phi.log_scale();
    for (a, b) in psi.sites().iter().zip(phi.sites()) {
        env = transfer(&env, a, b);
        let mx = env.iter().fold(T::zero(), |m, &x| m.max(x.abs()));
        if mx == T::zero() {
            return Ok((T::zero(), log_scale));
        }
        if !mx.to_f64().is_finite() {
            return Err(Error::Numeric("non-finite overlap".into()));
        }
        env.scale_mut(T::one() / mx);
        log_scale += mx.to_f64().ln();
    }
    Ok((env[(0, 0)], log_scale))
}

/// One step of a left environment: `E'[b, b'] = Σ E[a, a'] A[a, p, b] B[a', p, b']`.
pub(crate) fn transfer<T: Real>(env: &DMatrix<T>, a: &DenseTensor<T>, b: &DenseTensor<T>) -> DMatrix<T> {
    let p = a.shape()[1];
    let (al, ar) = (a.shape()[0], a.shape()[2]);
    let (bl, br) = (b.shape()[0], b.shape()[2]);
    let mut out = DMatrix::<T>::zeros(ar, br);
    for x in 0..p {
        let am = slice_matrix(a, x, al, ar);
        let bm = slice_matrix(b, x, bl, br);
        out += am.transpose() * env * bm;
    }
    out
}

/// Physical slice `A[:, x, :]` as an `l x r` matrix.
pub(crate) fn slice_matrix<T: Real>(t: &DenseTensor<T>, x: usize, l: usize, r: usize) -> DMatrix<T> {
    let p = t.shape()[1];
    let d = t.data();
    DMatrix::from_fn(l, r, |i, j| d[(i * p + x) * r + j])
}
