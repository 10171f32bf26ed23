//! Real coordinates for Hermitian matrices and the small real solvers the
//! reconstruction and norm routines need.
//!
//! An n×n Hermitian matrix is identified with a vector in R^{n²} through
//! the orthonormal basis {E_kk, (E_kl + E_lk)/√2, i(E_kl − E_lk)/√2}, so the
//! Hilbert–Schmidt pairing Tr[A B] becomes the Euclidean dot product.

use num_complex::Complex;

use super::matrix::CMatrix;
use crate::scalar::Scalar;

/// Coordinates of a Hermitian matrix in the orthonormal Hermitian basis.
pub fn herm_to_coords<T: Scalar>(a: &CMatrix<T>) -> Vec<T> {
    let n = a.dim();
    let r2 = T::SQRT_2();
    let mut x = Vec::with_capacity(n * n);
    for i in 0..n {
        x.push(a[(i, i)].re);
    }
    for i in 0..n {
        for j in i + 1..n {
            // average both triangles so slightly non-Hermitian input projects cleanly
            let z = (a[(i, j)] + a[(j, i)].conj()) * T::lit(0.5);
            x.push(r2 * z.re);
            x.push(r2 * z.im);
        }
    }
    x
}

/// Hermitian matrix with the given basis coordinates.
pub fn coords_to_herm<T: Scalar>(x: &[T], n: usize) -> CMatrix<T> {
    assert_eq!(x.len(), n * n, "coordinate vector length");
    let r2 = T::SQRT_2();
    let mut a = CMatrix::zeros(n, n);
    for i in 0..n {
        a[(i, i)] = Complex::new(x[i], T::zero());
    }
    let mut k = n;
    for i in 0..n {
        for j in i + 1..n {
            let z = Complex::new(x[k], x[k + 1]) / r2;
            a[(i, j)] = z;
            a[(j, i)] = z.conj();
            k += 2;
        }
    }
    a
}

/// The k-th basis element of the Hermitian basis of size n.
pub fn herm_basis_element<T: Scalar>(n: usize, k: usize) -> CMatrix<T> {
    let mut x = vec![T::zero(); n * n];
    x[k] = T::one();
    coords_to_herm(&x, n)
}

/// Orthonormal basis of the traceless Hermitian n×n matrices (n² − 1 elements).
pub fn traceless_herm_basis<T: Scalar>(n: usize) -> Vec<CMatrix<T>> {
    let mut out = Vec::with_capacity(n * n - 1);
    // generalized Gell-Mann diagonal elements
    for l in 1..n {
        let norm = T::one() / T::from_usize(l * (l + 1)).unwrap().sqrt();
        let mut diag = vec![T::zero(); n];
        for d in diag.iter_mut().take(l) {
            *d = norm;
        }
        diag[l] = -T::from_usize(l).unwrap() * norm;
        out.push(CMatrix::from_diag(&diag));
    }
    for k in n..n * n {
        out.push(herm_basis_element(n, k));
    }
    out
}

/// Cholesky factor (lower, row-major) of a symmetric positive definite matrix.
pub fn cholesky<T: Scalar>(a: &[T], n: usize) -> Option<Vec<T>> {
    let mut l = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s <= T::zero() || !s.is_finite() {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Some(l)
}

/// Solves L Lᵀ x = b.
pub fn cholesky_solve<T: Scalar>(l: &[T], n: usize, b: &[T]) -> Vec<T> {
    let mut y = vec![T::zero(); n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    x
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}
