use num_complex::Complex;

use super::matrix::CMatrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Local dimensions of the tensor factors of a composite space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubsystemShape {
    dims: Vec<usize>,
}

impl SubsystemShape {
    pub fn new(dims: impl Into<Vec<usize>>) -> Result<Self> {
        let dims = dims.into();
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::ShapeMismatch(format!("invalid subsystem dims {dims:?}")));
        }
        Ok(Self { dims })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }

    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.dims.len()];
        for k in (0..self.dims.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.dims[k + 1];
        }
        strides
    }
}

/// Traces out the subsystems listed in `traced` (0-based, any order).
pub fn partial_trace<T: Scalar>(a: &CMatrix<T>, shape: &SubsystemShape, traced: &[usize]) -> Result<CMatrix<T>> {
    if !a.is_square() {
        return Err(Error::ShapeMismatch(format!("partial trace of non-square {}x{}", a.rows(), a.cols())));
    }
    if shape.total() != a.rows() {
        return Err(Error::ShapeMismatch(format!(
            "shape {:?} (total {}) applied to dimension {}",
            shape.dims(),
            shape.total(),
            a.rows()
        )));
    }
    let n = shape.dims().len();
    if let Some(&bad) = traced.iter().find(|&&k| k >= n) {
        return Err(Error::ShapeMismatch(format!("subsystem {bad} out of range for {n} factors")));
    }
    let is_traced: Vec<bool> = (0..n).map(|k| traced.contains(&k)).collect();
    let strides = shape.strides();
    let kept: Vec<usize> = (0..n).filter(|&k| !is_traced[k]).collect();
    let gone: Vec<usize> = (0..n).filter(|&k| is_traced[k]).collect();
    let kept_dim: usize = kept.iter().map(|&k| shape.dims()[k]).product();
    let gone_dim: usize = gone.iter().map(|&k| shape.dims()[k]).product();

    // offset into the full index contributed by a mixed-radix value over `axes`
    let offsets = |axes: &[usize], count: usize| -> Vec<usize> {
        (0..count)
            .map(|mut v| {
                let mut off = 0;
                for &ax in axes.iter().rev() {
                    let d = shape.dims()[ax];
                    off += (v % d) * strides[ax];
                    v /= d;
                }
                off
            })
            .collect()
    };
    let kept_off = offsets(&kept, kept_dim);
    let gone_off = offsets(&gone, gone_dim);

    let mut out = CMatrix::zeros(kept_dim, kept_dim);
    for (r, &ro) in kept_off.iter().enumerate() {
        for (c, &co) in kept_off.iter().enumerate() {
            let mut acc = Complex::new(T::zero(), T::zero());
            for &g in &gone_off {
                acc += a[(ro + g, co + g)];
            }
            out[(r, c)] = acc;
        }
    }
    Ok(out)
}

/// Column-stacking vectorization: |A⟩⟩ = Σ_ij A_ij |j, i⟩.
pub fn vectorize<T: Scalar>(a: &CMatrix<T>) -> CMatrix<T> {
    let (r, c) = (a.rows(), a.cols());
    let mut v = Vec::with_capacity(r * c);
    for j in 0..c {
        for i in 0..r {
            v.push(a[(i, j)]);
        }
    }
    CMatrix::column(&v)
}

/// Inverse of [`vectorize`] for square matrices.
pub fn devectorize<T: Scalar>(v: &CMatrix<T>) -> Result<CMatrix<T>> {
    if v.cols() != 1 {
        return Err(Error::ShapeMismatch(format!("devectorize expects a column, got {}x{}", v.rows(), v.cols())));
    }
    let len = v.rows();
    let n = (len as f64).sqrt().round() as usize;
    if n * n != len {
        return Err(Error::ShapeMismatch(format!("length {len} is not a perfect square")));
    }
    Ok(CMatrix::from_fn(n, n, |i, j| v.data()[j * n + i]))
}
