//! Weighted least-squares maximum likelihood over {Λ ⪰ 0, Tr Λ = d}.
//!
//! The objective lives on real Hermitian coordinates. A log-barrier Newton
//! path brings the iterate close to the optimum. FISTA with function-value
//! restarts then polishes it, projecting onto the constraint set through
//! the spectrum and the scaled simplex. Optimality is certified by the
//! Frank–Wolfe gap ⟨∇f, Λ⟩ − d·λ_min(∇f), an upper bound on f − f*.

use super::dataset::{estimate_trials, hedge, weights, CountDataset, TrialsPolicy};
use super::frame::{gram, sym_eig, Frame};
use super::linear::{check_inputs, least_squares, objective};
use super::{Diagnostics, Method, ReconstructionResult};
use crate::error::{BestIterate, Error, Result};
use crate::qmat::real::{cholesky, cholesky_solve, coords_to_herm, dot, herm_to_coords, traceless_herm_basis};
use crate::qmat::{herm_eig, CMatrix};
use crate::scalar::Scalar;
use crate::superchannel::Superchannel;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MleOptions {
    /// Relative Frank–Wolfe gap at which the fit is accepted.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self { tol: 1e-6, max_iter: 200_000 }
    }
}

const GAP_CHECK_EVERY: usize = 10;

/// Hedged MLE from counts: trials are estimated when not recorded, then
/// probabilities are hedged and weighted per record.
pub fn mle_reconstruct<T: Scalar>(ds: &CountDataset, frame: &Frame<T>, opts: MleOptions) -> Result<ReconstructionResult<T>> {
    let ds = estimate_trials(ds, frame, TrialsPolicy::UseRecorded)?;
    let aligned = CountDataset { records: ds.aligned(frame)?, ..ds };
    let p: Vec<T> = hedge(&aligned)?;
    let w = weights(&aligned, &p)?;
    mle_fit(&p, frame, Some(&w), opts)
}

/// Constrained fit of probabilities `p` (frame order) with weights `w`.
pub fn mle_fit<T: Scalar>(p: &[T], frame: &Frame<T>, w: Option<&[T]>, opts: MleOptions) -> Result<ReconstructionResult<T>> {
    check_inputs(p, frame, w)?;
    let d = frame.d();
    let problem = Problem::new(p, frame, w);
    let tol = T::lit(opts.tol);
    let accept = |gap: T, f: T| gap <= tol * T::one().max(f);

    let start = least_squares(p, frame, w)?;
    let min_eigenvalue = herm_eig(&coords_to_herm(&start, problem.dim))?.min().to_f64_lossy();

    let (mut x, mut iterations) = problem.barrier_path(&accept, opts.max_iter)?;
    let mut fx = problem.f(&x);
    let mut gap = problem.fw_gap(&x)?;
    let mut y = x.clone();
    let mut t = T::one();
    let mut since_check = 0;
    while !accept(gap, fx) && iterations < opts.max_iter {
        iterations += 1;
        let g = problem.grad(&y);
        let step: Vec<T> = y.iter().zip(&g).map(|(&yi, &gi)| yi - gi / problem.lipschitz).collect();
        let x_new = problem.project(&step)?;
        let f_new = problem.f(&x_new);
        if f_new > fx {
            // restart momentum from the last accepted iterate
            t = T::one();
            y = x.clone();
            continue;
        }
        let t_new = (T::one() + (T::one() + T::lit(4.0) * t * t).sqrt()) / T::lit(2.0);
        let beta = (t - T::one()) / t_new;
        y = x_new.iter().zip(&x).map(|(&a, &o)| a + beta * (a - o)).collect();
        x = x_new;
        fx = f_new;
        t = t_new;
        since_check += 1;
        if since_check == GAP_CHECK_EVERY {
            since_check = 0;
            gap = problem.fw_gap(&x)?;
        }
    }
    gap = problem.fw_gap(&x)?;
    let choi = coords_to_herm(&x, problem.dim);
    let relative = (gap / T::one().max(fx)).to_f64_lossy();
    if !accept(gap, fx) {
        return Err(Error::SolverNotConverged {
            iterations,
            residual: relative,
            best: Some(BestIterate(Box::new(choi.cast()))),
        });
    }
    Ok(ReconstructionResult {
        superchannel: Superchannel::new(choi, d)?,
        objective: fx,
        method: Method::Mle,
        diagnostics: Diagnostics { min_eigenvalue, iterations, residual: relative, frame_rank: frame.rank(), converged: true },
    })
}

/// f(x) = Σ w² (⟨r, x⟩ − p)² = xᵀHx − 2bᵀx + c over Hermitian coordinates.
struct Problem<'a, T> {
    rows: &'a [Vec<T>],
    p: &'a [T],
    w: Option<&'a [T]>,
    h: Vec<T>,
    b: Vec<T>,
    n: usize,
    dim: usize,
    trace: T,
    lipschitz: T,
}

impl<'a, T: Scalar> Problem<'a, T> {
    fn new(p: &'a [T], frame: &'a Frame<T>, w: Option<&'a [T]>) -> Self {
        let rows = frame.rows();
        let n = rows[0].len();
        let h = gram(rows, w);
        let mut b = vec![T::zero(); n];
        for (k, r) in rows.iter().enumerate() {
            let s = w.map_or(T::one(), |w| w[k] * w[k]) * p[k];
            for (acc, &ri) in b.iter_mut().zip(r) {
                *acc += s * ri;
            }
        }
        let (hv, _) = sym_eig(&h, n).expect("Gram matrix is symmetric");
        let lipschitz = T::lit(2.0) * *hv.last().expect("non-empty");
        let d = frame.d();
        Self { rows, p, w, h, b, n, dim: d * d * d, trace: T::from_usize(d).unwrap(), lipschitz }
    }

    fn f(&self, x: &[T]) -> T {
        objective(self.rows, self.p, self.w, x)
    }

    fn grad(&self, x: &[T]) -> Vec<T> {
        let n = self.n;
        (0..n).map(|i| T::lit(2.0) * (dot(&self.h[i * n..(i + 1) * n], x) - self.b[i])).collect()
    }

    fn project(&self, x: &[T]) -> Result<Vec<T>> {
        let e = herm_eig(&coords_to_herm(x, self.dim))?;
        let lam = project_simplex(&e.values, self.trace);
        let mut k = 0;
        Ok(herm_to_coords(&e.reconstruct_with(|_| {
            k += 1;
            lam[k - 1]
        })))
    }

    fn fw_gap(&self, x: &[T]) -> Result<T> {
        let g = self.grad(x);
        let lmin = herm_eig(&coords_to_herm(&g, self.dim))?.min();
        Ok((dot(&g, x) - self.trace * lmin).max(T::zero()))
    }

    /// Log-barrier path following on t·f − log det Λ over the trace-d slice,
    /// stopped once the gap is acceptable or the barrier gets too stiff to
    /// resolve accurately; FISTA takes over from there.
    fn barrier_path(&self, accept: &impl Fn(T, T) -> bool, max_newton: usize) -> Result<(Vec<T>, usize)> {
        let dim = self.dim;
        let basis: Vec<CMatrix<T>> = traceless_herm_basis(dim);
        let cols: Vec<Vec<T>> = basis.iter().map(herm_to_coords).collect();
        let m = cols.len();
        let mut x = herm_to_coords(&CMatrix::identity(dim).scale(self.trace / T::from_usize(dim).unwrap()));
        // Cᵀ (2H) C, constant across the path
        let mut hq = vec![T::zero(); m * m];
        let hc: Vec<Vec<T>> = cols
            .iter()
            .map(|c| (0..self.n).map(|i| T::lit(2.0) * dot(&self.h[i * self.n..(i + 1) * self.n], c)).collect())
            .collect();
        for a in 0..m {
            for b in a..m {
                let v = dot(&cols[a], &hc[b]);
                hq[a * m + b] = v;
                hq[b * m + a] = v;
            }
        }
        let barrier = |x: &[T], t: T| -> Option<T> {
            let e = herm_eig(&coords_to_herm(x, dim)).ok()?;
            if e.min() <= T::zero() {
                return None;
            }
            Some(t * self.f(x) - e.values.iter().map(|l| l.ln()).sum::<T>())
        };
        let nu = T::from_usize(dim).unwrap();
        let mut t = nu / T::one().max(self.f(&x));
        let mut steps = 0;
        let stiffness_cap = T::lit(1e10);
        loop {
            for _ in 0..100 {
                if steps >= max_newton {
                    return Ok((x, steps));
                }
                let e = herm_eig(&coords_to_herm(&x, dim))?;
                let inv = e.reconstruct_with(|l| T::one() / l);
                let gx = self.grad(&x);
                let mats: Vec<CMatrix<T>> = basis.iter().map(|f| &inv * f).collect();
                let mut g = vec![T::zero(); m];
                let mut hess = vec![T::zero(); m * m];
                for a in 0..m {
                    g[a] = t * dot(&gx, &cols[a]) - mats[a].trace().re;
                    for b in a..m {
                        let v = t * hq[a * m + b] + re_trace_product(&mats[a], &mats[b]);
                        hess[a * m + b] = v;
                        hess[b * m + a] = v;
                    }
                }
                let Some(l) = cholesky(&hess, m) else {
                    return Ok((x, steps));
                };
                let neg: Vec<T> = g.iter().map(|&v| -v).collect();
                let dy = cholesky_solve(&l, m, &neg);
                let decrement = -dot(&g, &dy);
                steps += 1;
                if decrement <= T::lit(1e-10) {
                    break;
                }
                let dx: Vec<T> = (0..self.n).map(|i| (0..m).map(|a| dy[a] * cols[a][i]).sum()).collect();
                let f0 = barrier(&x, t).expect("iterate stays interior");
                let mut alpha = T::one();
                let mut moved = false;
                while alpha > T::lit(1e-12) {
                    let trial: Vec<T> = x.iter().zip(&dx).map(|(&xi, &di)| xi + alpha * di).collect();
                    if let Some(f1) = barrier(&trial, t) {
                        if f1 <= f0 - T::lit(0.25) * alpha * decrement {
                            x = trial;
                            moved = true;
                            break;
                        }
                    }
                    alpha *= T::lit(0.5);
                }
                if !moved {
                    break;
                }
            }
            if accept(nu / t, self.f(&x)) || t > stiffness_cap {
                return Ok((x, steps));
            }
            t *= T::lit(10.0);
        }
    }
}

/// Re Tr[A B].
fn re_trace_product<T: Scalar>(a: &CMatrix<T>, b: &CMatrix<T>) -> T {
    let n = a.rows();
    let mut acc = T::zero();
    for i in 0..n {
        for k in 0..n {
            let (x, y) = (a[(i, k)], b[(k, i)]);
            acc += x.re * y.re - x.im * y.im;
        }
    }
    acc
}

/// Euclidean projection of `v` onto {λ ≥ 0, Σλ = s}, preserving order.
pub(crate) fn project_simplex<T: Scalar>(v: &[T], s: T) -> Vec<T> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let mut cumsum = T::zero();
    let mut theta = T::zero();
    for (j, &uj) in u.iter().enumerate() {
        cumsum += uj;
        let candidate = (cumsum - s) / T::from_usize(j + 1).unwrap();
        if uj - candidate > T::zero() {
            theta = candidate;
        }
    }
    v.iter().map(|&l| (l - theta).max(T::zero())).collect()
}
