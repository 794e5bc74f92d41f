use std::sync::Arc;

use super::env::{EnvironmentCache, RightKey};
use super::LatticeTransform;
use crate::error::{Error, Result};
use crate::potts::PottsHamiltonian;
use crate::tensor::{apply_mpo, compress, overlap, BoundaryMps, DenseTensor, Real, RowMpo};

/// Largest `|beta * E|` accepted for a single table entry.
pub const MAX_EXPONENT: f64 = 700.0;

/// Boltzmann network of a Potts Hamiltonian in a transformed frame.
#[derive(Debug, Clone)]
pub struct PepsNetwork {
    potts: PottsHamiltonian,
    source_dims: (usize, usize),
    transform: LatticeTransform,
    beta: f64,
}

impl PepsNetwork {
    pub fn new(h: &PottsHamiltonian, transform: LatticeTransform, beta: f64) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::InvalidParameter(format!("beta must be positive and finite, got {beta}")));
        }
        let check = |e: f64, what: &dyn Fn() -> String| -> Result<()> {
            let x = beta * e;
            if !x.is_finite() || x.abs() > MAX_EXPONENT {
                return Err(Error::Numeric(format!(
                    "Boltzmann weight exp(-{beta} * {e}) of {} is not representable; use a smaller beta",
                    what()
                )));
            }
            Ok(())
        };
        for site in 0..h.num_sites() {
            for &e in h.node(site) {
                check(e, &|| format!("site {site}"))?;
            }
        }
        for (&(a, b), t) in h.edges() {
            for &e in &t.values {
                check(e, &|| format!("edge ({a}, {b})"))?;
            }
        }
        Ok(Self {
            potts: h.transformed(transform),
            source_dims: (h.rows(), h.cols()),
            transform,
            beta,
        })
    }

    /// The Hamiltonian in the transformed frame.
    pub fn potts(&self) -> &PottsHamiltonian {
        &self.potts
    }

    pub fn rows(&self) -> usize {
        self.potts.rows()
    }

    pub fn cols(&self) -> usize {
        self.potts.cols()
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn transform(&self) -> LatticeTransform {
        self.transform
    }

    /// `exp(-beta * E_site(x))` in the transformed frame.
    pub fn node_weights(&self, site: usize) -> Vec<f64> {
        self.potts.node(site).iter().map(|e| (-self.beta * e).exp()).collect()
    }

    /// `exp(-beta * E_ab(x, y))` as a `d_a x d_b` row-major table.
    pub fn edge_weights(&self, a: usize, b: usize) -> Vec<f64> {
        let (da, db) = (self.potts.dim(a), self.potts.dim(b));
        let mut out = Vec::with_capacity(da * db);
        for x in 0..da {
            for y in 0..db {
                out.push((-self.beta * self.potts.edge_energy(a, b, x, y)).exp());
            }
        }
        out
    }

    /// Original-frame site index of a transformed-frame site.
    pub fn to_source_site(&self, site: usize) -> usize {
        let (r, c) = self.potts.coords(site);
        let (sr, sc) = self.transform.apply_inverse((r, c), self.source_dims);
        sr * self.source_dims.1 + sc
    }

    /// Transformed-frame site index of an original-frame site.
    pub fn from_source_site(&self, site: usize) -> usize {
        let n = self.source_dims.1;
        let (r, c) = self.transform.apply((site / n, site % n), self.source_dims);
        self.potts.site(r, c)
    }

    /// Reorders a transformed-frame assignment into the original frame.
    pub fn to_source_assignment(&self, x: &[usize]) -> Vec<usize> {
        let mut out = vec![0; x.len()];
        for (site, &v) in x.iter().enumerate() {
            out[self.to_source_site(site)] = v;
        }
        out
    }

    fn weights<T: Real>(&self, energies: &[f64], shift: f64) -> Vec<T> {
        energies.iter().map(|e| T::lit((-self.beta * (e - shift)).exp())).collect()
    }

    /// Row 0 site and horizontal weights as an MPS whose bond carries the
    /// value of the site to its left.
    pub fn top_row_mps<T: Real>(&self) -> Result<BoundaryMps<T>> {
        let n = self.cols();
        let h = &self.potts;
        let mut log_scale = 0.0;
        let mut sites = Vec::with_capacity(n);
        for c in 0..n {
            let site = h.site(0, c);
            let d = h.dim(site);
            let dl = if c == 0 { 1 } else { h.dim(site - 1) };
            let mut energies = vec![f64::INFINITY; dl * d];
            for xp in 0..dl {
                for x in 0..d {
                    let mut e = h.node(site)[x];
                    if c > 0 {
                        e += h.edge_energy(site - 1, site, xp, x);
                    }
                    energies[xp * d + x] = e;
                }
            }
            let shift = energies.iter().copied().fold(f64::INFINITY, f64::min);
            log_scale -= self.beta * shift;
            let w: Vec<T> = self.weights(&energies, shift);
            let r = if c == n - 1 { 1 } else { d };
            let mut t = DenseTensor::zeros(&[dl, d, r]);
            for xp in 0..dl {
                for x in 0..d {
                    t.set(&[xp, x, if r == 1 { 0 } else { x }], w[xp * d + x]);
                }
            }
            sites.push(t);
        }
        BoundaryMps::new(sites, log_scale)
    }

    /// Transfer operator from row `row` (input) to row `row + 1` (output).
    ///
    /// The bond between columns `c` and `c + 1` carries the pair
    /// `(x_c, y_c)`. The tensor at column `c` holds the node weight of
    /// `(row + 1, c)`, the vertical coupling, and every coupling to column
    /// `c - 1` that involves row `row + 1`: the horizontal one and both
    /// diagonals. Each tensor is shifted by its smallest energy and the shift
    /// kept in the operator's log factor. Bond values the next column does
    /// not distinguish are merged, so the extent is at most `d²` and drops to
    /// 1 where no horizontal or diagonal coupling crosses the bond.
    pub fn row_transfer_mpo<T: Real>(&self, row: usize) -> Result<RowMpo<T>> {
        let (m, n) = (self.rows(), self.cols());
        if row + 1 >= m {
            return Err(Error::Index(format!("no transfer operator below row {} of {m}", row + 1)));
        }
        let h = &self.potts;
        let mut log_scale = 0.0;
        let mut sites = Vec::with_capacity(n);
        for c in 0..n {
            let up = h.site(row, c);
            let down = h.site(row + 1, c);
            let (dx, dy) = (h.dim(up), h.dim(down));
            let (dxp, dyp) = if c == 0 { (1, 1) } else { (h.dim(up - 1), h.dim(down - 1)) };
            let left = dxp * dyp;
            let mut energies = vec![0.0; left * dx * dy];
            for xp in 0..dxp {
                for yp in 0..dyp {
                    for x in 0..dx {
                        for y in 0..dy {
                            let mut e = h.node(down)[y] + h.edge_energy(up, down, x, y);
                            if c > 0 {
                                e += h.edge_energy(down - 1, down, yp, y)
                                    + h.edge_energy(up - 1, down, xp, y)
                                    + h.edge_energy(up, down - 1, x, yp);
                            }
                            energies[((xp * dyp + yp) * dx + x) * dy + y] = e;
                        }
                    }
                }
            }
            let shift = energies.iter().copied().fold(f64::INFINITY, f64::min);
            log_scale -= self.beta * shift;
            let w: Vec<T> = self.weights(&energies, shift);
            let right = if c == n - 1 { 1 } else { dx * dy };
            let mut t = DenseTensor::zeros(&[left, dx, dy, right]);
            for l in 0..left {
                for x in 0..dx {
                    for y in 0..dy {
                        let r = if right == 1 { 0 } else { x * dy + y };
                        t.set(&[l, x, y, r], w[(l * dx + x) * dy + y]);
                    }
                }
            }
            sites.push(t);
        }
        reduce_bonds(&mut sites)?;
        Ok(RowMpo::new(sites)?.with_log_scale(log_scale))
    }

    /// Boundary MPS over row `row` summing out every row below it, including
    /// the couplings between `row` and `row + 1`.
    pub fn bottom_env<T: Real>(&self, row: usize, cache: &mut EnvironmentCache<T>) -> Result<Arc<BoundaryMps<T>>> {
        let m = self.rows();
        if row >= m {
            return Err(Error::Index(format!("row {} outside grid of {m} rows", row + 1)));
        }
        if let Some(env) = cache.bottom(row) {
            return Ok(env);
        }
        let env = if row == m - 1 {
            let dims: Vec<usize> = (0..self.cols()).map(|c| self.potts.dim(self.potts.site(row, c))).collect();
            BoundaryMps::ones(&dims)?
        } else {
            let below = self.bottom_env(row + 1, cache)?;
            let mpo = self.row_transfer_mpo::<T>(row)?;
            let applied = apply_mpo(&mpo.transposed(), &below)?;
            let out = compress(&applied, cache.params())?;
            log::trace!(
                "bottom env row {}: max bond {}, fidelity {:.3e}",
                row + 1,
                out.state.max_bond(),
                out.fidelity
            );
            out.state
        };
        let env = Arc::new(env);
        cache.store_bottom(row, env.clone());
        Ok(env)
    }

    /// `ln Z` from the top-row weights contracted against the environment
    /// below row 0.
    pub fn log_partition_function<T: Real>(&self, cache: &mut EnvironmentCache<T>) -> Result<f64> {
        let top = self.top_row_mps::<T>()?;
        let below = self.bottom_env(0, cache)?;
        let (v, ls) = overlap(&top, &below)?;
        let v = v.to_f64();
        if v <= 0.0 || !v.is_finite() {
            return Err(Error::Numeric(format!("partition function contraction gave {v}")));
        }
        Ok(v.ln() + ls)
    }

    /// Energy of the terms that site `(row, col)` with value `x` shares with
    /// its left neighbour (value `left`) and the fixed row above.
    fn local_energy(&self, row: usize, col: usize, left: Option<usize>, top: &[usize], x: usize) -> f64 {
        let h = &self.potts;
        let n = self.cols();
        let site = h.site(row, col);
        let mut e = h.node(site)[x];
        if let Some(xp) = left {
            e += h.edge_energy(site - 1, site, xp, x);
        }
        if row > 0 {
            let above = h.site(row - 1, col);
            e += h.edge_energy(above, site, top[col], x);
            if col > 0 {
                e += h.edge_energy(above - 1, site, top[col - 1], x);
            }
            if col + 1 < n {
                e += h.edge_energy(above + 1, site, top[col + 1], x);
            }
        }
        e
    }

    /// Right environment `R(b, x_{col-1})` of row `row` from column `col`
    /// on, flattened as `b * d_{col-1} + x_{col-1}` and scaled to unit maximum.
    /// `top` is the full fixed row above (empty for row 0).
    pub(crate) fn right_env<T: Real>(
        &self,
        row: usize,
        col: usize,
        top: &[usize],
        cache: &mut EnvironmentCache<T>,
    ) -> Result<Arc<Vec<T>>> {
        let n = self.cols();
        let h = &self.potts;
        let dprev = h.dim(h.site(row, col - 1));
        if col == n {
            return Ok(Arc::new(vec![T::one(); dprev]));
        }
        let key = RightKey::new(row, col, if row > 0 { &top[col - 1..] } else { &[] });
        if let Some(env) = cache.right(&key) {
            return Ok(env);
        }
        let next = self.right_env(row, col + 1, top, cache)?;
        let bottom = self.bottom_env(row, cache)?;
        let a = bottom.site(col);
        let (l, d, r) = (a.shape()[0], a.shape()[1], a.shape()[2]);
        let ad = a.data();

        // v[x][a] = Σ_b A[a, x, b] R_next[b, x]
        let mut v = vec![T::zero(); d * l];
        for x in 0..d {
            for ia in 0..l {
                let mut acc = T::zero();
                for b in 0..r {
                    acc += ad[(ia * d + x) * r + b] * next[b * d + x];
                }
                v[x * l + ia] = acc;
            }
        }
        let mut energies = vec![0.0; dprev * d];
        for xp in 0..dprev {
            for x in 0..d {
                energies[xp * d + x] = self.local_energy(row, col, Some(xp), top, x);
            }
        }
        let shift = energies.iter().copied().fold(f64::INFINITY, f64::min);
        let w: Vec<T> = self.weights(&energies, shift);
        let mut out = vec![T::zero(); l * dprev];
        for ia in 0..l {
            for xp in 0..dprev {
                let mut acc = T::zero();
                for x in 0..d {
                    acc += w[xp * d + x] * v[x * l + ia];
                }
                out[ia * dprev + xp] = acc;
            }
        }
        normalize_max(&mut out);
        let out = Arc::new(out);
        cache.store_right(key, out.clone());
        Ok(out)
    }

    /// Contraction of the first `values.len()` site tensors of the row's
    /// bottom environment at the given values, scaled to unit maximum.
    pub fn left_vector<T: Real>(&self, row: usize, values: &[usize], cache: &mut EnvironmentCache<T>) -> Result<Vec<T>> {
        let mut left = vec![T::one()];
        for (col, &x) in values.iter().enumerate() {
            left = self.extend_left(row, col, &left, x, cache)?;
        }
        Ok(left)
    }

    /// Extends a left vector of row `row` by fixing column `col` to `x`.
    pub fn extend_left<T: Real>(
        &self,
        row: usize,
        col: usize,
        left: &[T],
        x: usize,
        cache: &mut EnvironmentCache<T>,
    ) -> Result<Vec<T>> {
        let bottom = self.bottom_env(row, cache)?;
        let a = bottom.site(col);
        let (l, d, r) = (a.shape()[0], a.shape()[1], a.shape()[2]);
        if left.len() != l || x >= d {
            return Err(Error::Dimension(format!(
                "left vector of length {} against bond {l} at column {}",
                left.len(),
                col + 1
            )));
        }
        let ad = a.data();
        let mut out = vec![T::zero(); r];
        for (ia, &la) in left.iter().enumerate() {
            if la == T::zero() {
                continue;
            }
            for (b, o) in out.iter_mut().enumerate() {
                *o += la * ad[(ia * d + x) * r + b];
            }
        }
        normalize_max(&mut out);
        Ok(out)
    }

    /// `p(x_k = s | partial)` for the site `k = partial.len()` in
    /// transformed row-major order.
    pub fn conditional_distribution<T: Real>(&self, partial: &[usize], cache: &mut EnvironmentCache<T>) -> Result<Vec<f64>> {
        let n = self.cols();
        let k = partial.len();
        if k >= self.potts.num_sites() {
            return Err(Error::Index(format!("no site left after {k} assigned values")));
        }
        let row = k / n;
        let left = self.left_vector(row, &partial[row * n..], cache)?;
        self.conditional_with_left(partial, &left, cache)
    }

    /// [`conditional_distribution`](Self::conditional_distribution) with the
    /// left vector of the current row supplied by the caller.
    pub fn conditional_with_left<T: Real>(
        &self,
        partial: &[usize],
        left: &[T],
        cache: &mut EnvironmentCache<T>,
    ) -> Result<Vec<f64>> {
        let n = self.cols();
        let k = partial.len();
        let (row, col) = (k / n, k % n);
        let h = &self.potts;
        let top: &[usize] = if row > 0 { &partial[(row - 1) * n..row * n] } else { &[] };
        let bottom = self.bottom_env(row, cache)?;
        let a = bottom.site(col);
        let (l, d, r) = (a.shape()[0], a.shape()[1], a.shape()[2]);
        if left.len() != l {
            return Err(Error::Dimension(format!("left vector length {} vs bond {l}", left.len())));
        }
        let right: Arc<Vec<T>> = if col + 1 < n {
            self.right_env(row, col + 1, top, cache)?
        } else {
            Arc::new(vec![T::one(); d])
        };
        let prev = if col > 0 { Some(partial[k - 1]) } else { None };
        let energies: Vec<f64> = (0..d).map(|s| self.local_energy(row, col, prev, top, s)).collect();
        let shift = energies.iter().copied().fold(f64::INFINITY, f64::min);
        let ad = a.data();
        let mut probs = vec![0.0; d];
        for (s, p) in probs.iter_mut().enumerate() {
            let mut acc = T::zero();
            for (ia, &la) in left.iter().enumerate() {
                if la == T::zero() {
                    continue;
                }
                let mut inner = T::zero();
                for b in 0..r {
                    inner += ad[(ia * d + s) * r + b] * right[b * d + s];
                }
                acc += la * inner;
            }
            *p = acc.to_f64() * (-self.beta * (energies[s] - shift)).exp();
        }
        debug_assert_eq!(h.dim(h.site(row, col)), d);
        let mut clamped = 0;
        for p in probs.iter_mut() {
            if p.is_nan() || *p <= 0.0 {
                if *p < 0.0 {
                    clamped += 1;
                }
                *p = 0.0;
            }
        }
        cache.record_clamped(clamped);
        let total: f64 = probs.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::ContractionDegenerate { position: k });
        }
        probs.iter_mut().for_each(|p| *p /= total);
        Ok(probs)
    }
}

/// Merges bond values whose slices of the following tensor are identical.
fn reduce_bonds<T: Real>(sites: &mut [DenseTensor<T>]) -> Result<()> {
    for c in 0..sites.len().saturating_sub(1) {
        let next = &sites[c + 1];
        let shape = next.shape().to_vec();
        let stride: usize = shape[1..].iter().product();
        let data = next.data();
        let mut classes: Vec<usize> = Vec::with_capacity(shape[0]);
        let mut reps: Vec<usize> = Vec::new();
        for l in 0..shape[0] {
            let slice = &data[l * stride..(l + 1) * stride];
            let found = reps.iter().position(|&r| &data[r * stride..(r + 1) * stride] == slice);
            match found {
                Some(k) => classes.push(k),
                None => {
                    classes.push(reps.len());
                    reps.push(l);
                }
            }
        }
        if reps.len() == shape[0] {
            continue;
        }
        let mut reduced = Vec::with_capacity(reps.len() * stride);
        for &r in &reps {
            reduced.extend_from_slice(&data[r * stride..(r + 1) * stride]);
        }
        let mut new_shape = shape.clone();
        new_shape[0] = reps.len();
        sites[c + 1] = DenseTensor::from_vec(&new_shape, reduced)?;

        let cur = &sites[c];
        let cs = cur.shape().to_vec();
        let (outer, right) = (cs[0] * cs[1] * cs[2], cs[3]);
        let mut merged = vec![T::zero(); outer * reps.len()];
        for o in 0..outer {
            for r in 0..right {
                merged[o * reps.len() + classes[r]] += cur.data()[o * right + r];
            }
        }
        sites[c] = DenseTensor::from_vec(&[cs[0], cs[1], cs[2], reps.len()], merged)?;
    }
    Ok(())
}

fn normalize_max<T: Real>(v: &mut [T]) {
    let mx = v.iter().fold(T::zero(), |m, &x| m.max(x.abs()));
    if mx > T::zero() {
        let inv = T::one() / mx;
        v.iter_mut().for_each(|x| *x *= inv);
    }
}
