use num_complex::Complex;

use super::matrix::CMatrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const MAX_SWEEPS: usize = 100;

/// Eigendecomposition A = V diag(λ) V† of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermEig<T> {
    /// Ascending.
    pub values: Vec<T>,
    /// Columns are the eigenvectors.
    pub vectors: CMatrix<T>,
}

impl<T: Scalar> HermEig<T> {
    /// V f(Λ) V†.
    pub fn reconstruct_with(&self, mut f: impl FnMut(T) -> T) -> CMatrix<T> {
        let n = self.values.len();
        let fv: Vec<T> = self.values.iter().map(|&l| f(l)).collect();
        let v = &self.vectors;
        let mut out = CMatrix::zeros(n, n);
        for k in 0..n {
            if fv[k] == T::zero() {
                continue;
            }
            for i in 0..n {
                let vik = v[(i, k)] * fv[k];
                for j in 0..n {
                    out[(i, j)] += vik * v[(j, k)].conj();
                }
            }
        }
        out
    }

    pub fn reconstruct(&self) -> CMatrix<T> {
        self.reconstruct_with(|l| l)
    }

    pub fn min(&self) -> T {
        self.values[0]
    }

    pub fn max(&self) -> T {
        *self.values.last().expect("non-empty spectrum")
    }

    /// Column k as a vector.
    pub fn vector(&self, k: usize) -> Vec<Complex<T>> {
        (0..self.values.len()).map(|i| self.vectors[(i, k)]).collect()
    }
}

/// Hermitian eigendecomposition with ascending eigenvalues.
///
/// Inputs within the Hermiticity tolerance are symmetrized before the
/// cyclic Jacobi sweeps.
pub fn herm_eig<T: Scalar>(a: &CMatrix<T>) -> Result<HermEig<T>> {
    let a = a.symmetrized(T::herm_tol())?;
    Ok(jacobi(a))
}

fn jacobi<T: Scalar>(mut a: CMatrix<T>) -> HermEig<T> {
    let n = a.rows();
    let mut v = CMatrix::<T>::identity(n);
    let scale = a.frobenius_norm();
    let zero = Complex::new(T::zero(), T::zero());
    if scale > T::zero() {
        let threshold = T::jacobi_eps() * scale;
        for _ in 0..MAX_SWEEPS {
            let mut off = T::zero();
            for p in 0..n {
                for q in p + 1..n {
                    off += a[(p, q)].norm_sqr();
                }
            }
            if off.sqrt() <= threshold {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = a[(p, q)];
                    let g = apq.norm();
                    if g <= T::min_positive_value() {
                        continue;
                    }
                    // phase making the (p, q) element real and positive
                    let dq = (apq / g).conj();
                    let app = a[(p, p)].re;
                    let aqq = a[(q, q)].re;
                    let theta = (aqq - app) / (T::lit(2.0) * g);
                    let t = {
                        let mag = T::one() / (theta.abs() + (T::one() + theta * theta).sqrt());
                        if theta < T::zero() {
                            -mag
                        } else {
                            mag
                        }
                    };
                    let cs = T::one() / (T::one() + t * t).sqrt();
                    let sn = t * cs;
                    // A <- A J with J = D G
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = akp * cs - akq * dq * sn;
                        a[(k, q)] = akp * sn + akq * dq * cs;
                    }
                    // A <- J† A
                    let dqc = dq.conj();
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = apk * cs - aqk * dqc * sn;
                        a[(q, k)] = apk * sn + aqk * dqc * cs;
                    }
                    a[(p, q)] = zero;
                    a[(q, p)] = zero;
                    a[(p, p)] = Complex::new(a[(p, p)].re, T::zero());
                    a[(q, q)] = Complex::new(a[(q, q)].re, T::zero());
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = vkp * cs - vkq * dq * sn;
                        v[(k, q)] = vkp * sn + vkq * dq * cs;
                    }
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.partial_cmp(&a[(j, j)].re).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&k| a[(k, k)].re).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    HermEig { values, vectors }
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue<T: Scalar>(a: &CMatrix<T>) -> Result<T> {
    Ok(herm_eig(a)?.min())
}

/// Sum of singular values.
pub fn trace_norm<T: Scalar>(a: &CMatrix<T>) -> Result<T> {
    if !a.is_square() {
        return Err(Error::ShapeMismatch(format!("trace norm of {}x{}", a.rows(), a.cols())));
    }
    if a.is_hermitian(T::herm_tol()) {
        return Ok(jacobi(a.hermitian_part()).values.iter().map(|l| l.abs()).sum());
    }
    let gram = &a.adjoint() * a;
    Ok(jacobi(gram.hermitian_part()).values.iter().map(|&l| l.max(T::zero()).sqrt()).sum())
}

/// Principal square root of a PSD matrix.
pub fn psd_sqrt<T: Scalar>(a: &CMatrix<T>) -> Result<CMatrix<T>> {
    let e = herm_eig(a)?;
    let floor = -T::psd_tol() * T::one().max(a.frobenius_norm());
    if e.min() < floor {
        return Err(Error::NotPsd { min_eig: e.min().to_f64_lossy() });
    }
    Ok(e.reconstruct_with(|l| l.max(T::zero()).sqrt()))
}

/// Frobenius-nearest PSD matrix (negative eigenvalues clipped to zero).
pub fn project_psd<T: Scalar>(a: &CMatrix<T>) -> Result<CMatrix<T>> {
    let e = herm_eig(a)?;
    if e.min() >= T::zero() {
        return Ok(a.hermitian_part());
    }
    Ok(e.reconstruct_with(|l| l.max(T::zero())))
}

fn rounding_floor<T: Scalar>(e: &HermEig<T>) -> T {
    let scale = e.max().abs().max(e.min().abs());
    T::epsilon() * T::from_usize(8 * e.values.len()).unwrap() * scale
}

/// Uhlmann fidelity (Tr √(√a b √a))² for PSD arguments of any trace.
pub fn uhlmann_fidelity<T: Scalar>(a: &CMatrix<T>, b: &CMatrix<T>) -> Result<T> {
    if a.rows() != b.rows() || !a.is_square() || !b.is_square() {
        return Err(Error::ShapeMismatch(format!(
            "fidelity of {}x{} and {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let floor = |m: &CMatrix<T>| -T::psd_tol() * T::one().max(m.frobenius_norm());
    let eb = herm_eig(b)?;
    if eb.min() < floor(b) {
        return Err(Error::NotPsd { min_eig: eb.min().to_f64_lossy() });
    }
    let ea = herm_eig(a)?;
    if ea.min() < floor(a) {
        return Err(Error::NotPsd { min_eig: ea.min().to_f64_lossy() });
    }
    // eigenvalues at rounding level are zeros; their square roots would not be
    let sa = ea.reconstruct_with(|l| if l > rounding_floor(&ea) { l.sqrt() } else { T::zero() });
    let inner = sa.conjugate(&eb.reconstruct_with(|l| if l > rounding_floor(&eb) { l } else { T::zero() }));
    let ei = jacobi(inner.hermitian_part());
    let root: T = ei.values.iter().map(|&l| if l > rounding_floor(&ei) { l.sqrt() } else { T::zero() }).sum();
    Ok(root * root)
}
