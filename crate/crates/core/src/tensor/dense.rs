use nalgebra::DMatrix;

use super::Real;
use crate::error::{Error, Result};

/// Row-major dense tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor<T> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T: Real> DenseTensor<T> {
    pub fn zeros(shape: &[usize]) -> Self {
        let len = shape.iter().product();
        Self { shape: shape.to_vec(), data: vec![T::zero(); len] }
    }

    pub fn from_vec(shape: &[usize], data: Vec<T>) -> Result<Self> {
        if shape.contains(&0) {
            return Err(Error::Dimension(format!("zero extent in shape {shape:?}")));
        }
        let len: usize = shape.iter().product();
        if len != data.len() {
            return Err(Error::Dimension(format!(
                "shape {shape:?} needs {len} entries, got {}",
                data.len()
            )));
        }
        Ok(Self { shape: shape.to_vec(), data })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    fn offset(&self, index: &[usize]) -> usize {
        debug_assert_eq!(index.len(), self.shape.len());
        index.iter().zip(&self.shape).fold(0, |acc, (&i, &e)| {
            debug_assert!(i < e);
            acc * e + i
        })
    }

    pub fn get(&self, index: &[usize]) -> T {
        self.data[self.offset(index)]
    }

    pub fn set(&mut self, index: &[usize], value: T) {
        let o = self.offset(index);
        self.data[o] = value;
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
    }

    pub fn norm(&self) -> T {
        self.data.iter().fold(T::zero(), |s, &x| s + x * x).sqrt()
    }

    pub fn scale(&mut self, factor: T) {
        for x in &mut self.data {
            *x *= factor;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.to_f64().is_finite())
    }

    /// Views the tensor as a matrix with the first `split` axes as rows.
    pub fn to_matrix(&self, split: usize) -> DMatrix<T> {
        let rows: usize = self.shape[..split].iter().product();
        let cols: usize = self.shape[split..].iter().product();
        DMatrix::from_row_slice(rows, cols, &self.data)
    }

    /// Inverse of [`to_matrix`](Self::to_matrix).
    pub fn from_matrix(shape: &[usize], m: &DMatrix<T>) -> Result<Self> {
        let mut data = Vec::with_capacity(m.len());
        for r in 0..m.nrows() {
            data.extend(m.row(r).iter().copied());
        }
        Self::from_vec(shape, data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_views_round_trip() {
        let t = DenseTensor::from_vec(&[2, 3, 2], (0..12).map(|x| x as f64).collect()).unwrap();
        let m = t.to_matrix(2);
        assert_eq!((m.nrows(), m.ncols()), (6, 2));
        assert_eq!(m[(5, 1)], t.get(&[1, 2, 1]));
        let back = DenseTensor::from_matrix(&[2, 3, 2], &m).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn rejects_mismatched_data() {
        assert!(DenseTensor::<f64>::from_vec(&[2, 2], vec![0.0; 3]).is_err());
        assert!(DenseTensor::<f64>::from_vec(&[0, 2], vec![]).is_err());
    }
}
