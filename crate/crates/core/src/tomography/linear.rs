use super::frame::{gram, sym_eig, Frame, RANK_RTOL};
use super::{Diagnostics, Method, ReconstructionResult};
use crate::error::{Error, Result};
use crate::qmat::real::{coords_to_herm, dot, herm_to_coords};
use crate::qmat::{herm_eig, CMatrix};
use crate::scalar::Scalar;
use crate::superchannel::Superchannel;

/// Solves G x = rhs for symmetric positive definite G after Jacobi scaling,
/// failing when G is numerically singular. Statistical weights can spread
/// the spectrum over many decades, so the frame's rank is checked separately
/// on the unweighted Gram matrix.
pub(crate) fn solve_normal<T: Scalar>(g: &[T], rhs: &[T], n: usize) -> Result<Vec<T>> {
    let mut scale = vec![T::one(); n];
    for (i, s) in scale.iter_mut().enumerate() {
        let d = g[i * n + i];
        if d > T::zero() {
            *s = T::one() / d.sqrt();
        }
    }
    let scaled: Vec<T> = (0..n * n).map(|k| g[k] * scale[k / n] * scale[k % n]).collect();
    let (values, vectors) = sym_eig(&scaled, n)?;
    let top = values.last().copied().unwrap_or(T::zero());
    let floor = T::epsilon() * T::from_usize(16 * n).unwrap() * top;
    let rank = values.iter().filter(|&&l| l > floor).count();
    if rank < n {
        return Err(Error::RankDeficient { rank, required: n });
    }
    let b: Vec<T> = rhs.iter().zip(&scale).map(|(&r, &s)| r * s).collect();
    let mut x = vec![T::zero(); n];
    for (l, v) in values.iter().zip(&vectors) {
        let c = dot(v, &b) / *l;
        for (xi, vi) in x.iter_mut().zip(v) {
            *xi += c * *vi;
        }
    }
    Ok(x.iter().zip(&scale).map(|(&xi, &s)| xi * s).collect())
}

pub(crate) fn check_inputs<T: Scalar>(p: &[T], frame: &Frame<T>, w: Option<&[T]>) -> Result<()> {
    if p.len() != frame.len() {
        return Err(Error::ShapeMismatch(format!("{} probabilities for a frame of {} elements", p.len(), frame.len())));
    }
    if let Some(w) = w {
        if w.len() != p.len() {
            return Err(Error::ShapeMismatch(format!("{} weights for {} probabilities", w.len(), p.len())));
        }
        if let Some(bad) = w.iter().find(|w| !(w.is_finite() && **w > T::zero())) {
            return Err(Error::InvalidArgument(format!("weights must be positive and finite, got {bad}")));
        }
    }
    if !frame.is_informationally_complete() {
        return Err(Error::RankDeficient { rank: frame.rank(), required: frame.full_rank() });
    }
    Ok(())
}

/// Weighted residual Σ w² (⟨Π, Λ⟩ − p)² for coordinates x.
pub(crate) fn objective<T: Scalar>(rows: &[Vec<T>], p: &[T], w: Option<&[T]>, x: &[T]) -> T {
    rows.iter()
        .zip(p)
        .enumerate()
        .map(|(b, (r, &pb))| {
            let res = dot(r, x) - pb;
            w.map_or(T::one(), |w| w[b] * w[b]) * res * res
        })
        .sum()
}

/// Unconstrained weighted least-squares estimate in coordinates.
pub(crate) fn least_squares<T: Scalar>(p: &[T], frame: &Frame<T>, w: Option<&[T]>) -> Result<Vec<T>> {
    let rows = frame.rows();
    let n = rows[0].len();
    let g = gram(rows, w);
    let mut rhs = vec![T::zero(); n];
    for (b, r) in rows.iter().enumerate() {
        let s = w.map_or(T::one(), |w| w[b] * w[b]) * p[b];
        for (acc, &ri) in rhs.iter_mut().zip(r) {
            *acc += s * ri;
        }
    }
    solve_normal(&g, &rhs, n)
}

/// Weighted least-squares reconstruction (S†W²S)⁻¹S†W²p, without any
/// positivity constraint. With `w = None` the estimate is assembled from
/// the dual frame.
pub fn linear_inversion<T: Scalar>(p: &[T], frame: &Frame<T>, w: Option<&[T]>) -> Result<ReconstructionResult<T>> {
    check_inputs(p, frame, w)?;
    let d = frame.d();
    let choi = match w {
        Some(_) => coords_to_herm(&least_squares(p, frame, w)?, d * d * d),
        None => {
            let duals = dual_frame(frame)?;
            let mut acc = CMatrix::zeros(d * d * d, d * d * d);
            for (dual, &pb) in duals.iter().zip(p) {
                acc += &dual.scale(pb);
            }
            acc
        }
    };
    let x = herm_to_coords(&choi);
    let min_eigenvalue = herm_eig(&choi)?.min().to_f64_lossy();
    Ok(ReconstructionResult {
        objective: objective(frame.rows(), p, w, &x),
        superchannel: Superchannel::new(choi, d)?,
        method: Method::Linear,
        diagnostics: Diagnostics { min_eigenvalue, iterations: 0, residual: 0.0, frame_rank: frame.rank(), converged: true },
    })
}

/// Dual frame D_b = F⁺ Π_b with F = Σ |Π⟩⟩⟨⟨Π| the frame operator.
pub fn dual_frame<T: Scalar>(frame: &Frame<T>) -> Result<Vec<CMatrix<T>>> {
    let rows = frame.rows();
    let n = rows[0].len();
    let (values, vectors) = sym_eig(&gram(rows, None), n)?;
    let top = values.last().copied().unwrap_or(T::zero());
    let rank = values.iter().filter(|&&l| l > T::lit(RANK_RTOL) * top).count();
    if rank < n {
        return Err(Error::RankDeficient { rank, required: n });
    }
    let dim = frame.d().pow(3);
    Ok(rows
        .iter()
        .map(|r| {
            let mut x = vec![T::zero(); n];
            for (l, v) in values.iter().zip(&vectors) {
                let c = dot(v, r) / *l;
                for (xi, vi) in x.iter_mut().zip(v) {
                    *xi += c * *vi;
                }
            }
            coords_to_herm(&x, dim)
        })
        .collect())
}
