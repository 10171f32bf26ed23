//! Diamond norm of Hermiticity-preserving maps and the initial-correlation
//! norm of a superchannel.
//!
//! The norm is computed from the semidefinite program
//!
//! ```text
//! maximize  Tr[J W]   subject to  −ρ ⊗ 1 ⪯ W ⪯ ρ ⊗ 1,  ρ ⪰ 0,  Tr ρ = 1
//! minimize  λ_max(Tr_out[Z₊ + Z₋])   subject to  Z₊ − Z₋ = J,  Z± ⪰ 0
//! ```
//!
//! with a primal log-barrier path-following method. Every answer carries a
//! dual-feasible upper bound and a lower bound realized by an explicit input
//! state and two-outcome measurement.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::channels::Channel;
use crate::error::{Error, Result};
use crate::qmat::real::{cholesky, cholesky_solve, coords_to_herm, dot, herm_basis_element, herm_to_coords, traceless_herm_basis};
use crate::qmat::{herm_eig, partial_trace, psd_sqrt, trace_norm, CMatrix, HermEig, SubsystemShape};
use crate::scalar::Scalar;
use crate::superchannel::{separable_superchannel, Superchannel};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiamondOptions {
    /// Largest accepted gap between the certified bounds.
    pub tol: f64,
    /// Cap on barrier-parameter increases.
    pub max_outer: usize,
}

impl Default for DiamondOptions {
    fn default() -> Self {
        Self { tol: 1e-6, max_outer: 80 }
    }
}

impl DiamondOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

/// Hermiticity-preserving linear map given by its Choi matrix (input ⊗ output).
///
/// `input_trace` is the trace of the inputs the norm is taken over: 1 for
/// ordinary channels, d for superchannels acting on preparation Choi
/// matrices of a d-dimensional system.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianPreservingMap<T> {
    choi: CMatrix<T>,
    dim_in: usize,
    dim_out: usize,
    input_trace: T,
    prep_dim: Option<usize>,
}

impl<T: Scalar> HermitianPreservingMap<T> {
    pub fn new(choi: CMatrix<T>, dim_in: usize, dim_out: usize) -> Result<Self> {
        if dim_in == 0 || dim_out == 0 || !choi.is_square() || choi.rows() != dim_in * dim_out {
            return Err(Error::ShapeMismatch(format!(
                "Choi matrix {}x{} for a map {dim_in} -> {dim_out}",
                choi.rows(),
                choi.cols()
            )));
        }
        let choi = choi.symmetrized(T::herm_tol())?;
        Ok(Self { choi, dim_in, dim_out, input_trace: T::one(), prep_dim: None })
    }

    /// Λ_a − Λ_b.
    pub fn difference(a: &Channel<T>, b: &Channel<T>) -> Result<Self> {
        if a.dim_in() != b.dim_in() || a.dim_out() != b.dim_out() {
            return Err(Error::ShapeMismatch("channels act on different spaces".into()));
        }
        Self::new(a.choi() - b.choi(), a.dim_in(), a.dim_out())
    }

    /// M₁ − M₂ as a map L(X1 ⊗ X2) → L(X3) on preparation Choi matrices.
    pub fn superchannel_difference(a: &Superchannel<T>, b: &Superchannel<T>) -> Result<Self> {
        if a.d() != b.d() {
            return Err(Error::ShapeMismatch(format!("superchannels of dimension {} and {}", a.d(), b.d())));
        }
        let d = a.d();
        let mut map = Self::new(a.choi() - b.choi(), d * d, d)?;
        map.input_trace = T::from_usize(d).unwrap();
        map.prep_dim = Some(d);
        Ok(map)
    }

    pub fn choi(&self) -> &CMatrix<T> {
        &self.choi
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn input_trace(&self) -> T {
        self.input_trace
    }

    pub fn scaled(&self, s: T) -> Self {
        Self { choi: self.choi.scale(s), ..self.clone() }
    }
}

/// Feasible primal point (ρ, W) of the SDP for the unit-trace problem.
#[derive(Clone, Debug)]
pub struct PrimalCertificate<T> {
    pub rho: CMatrix<T>,
    pub w: CMatrix<T>,
}

/// Feasible dual point: Z₊ − Z₋ = J with Z± ⪰ 0.
#[derive(Clone, Debug)]
pub struct DualCertificate<T> {
    pub z_plus: CMatrix<T>,
    pub z_minus: CMatrix<T>,
}

/// Input state and measurement attaining the lower bound.
#[derive(Clone, Debug)]
pub struct Witness<T> {
    /// Reduced input state on the map's input space (unit trace).
    pub input: CMatrix<T>,
    /// Purification (√ρ ⊗ 1)|Ω⟩ on input ⊗ ancilla.
    pub state: Vec<Complex<T>>,
    /// Projector onto the positive part of the output difference.
    pub measurement: CMatrix<T>,
    /// Set for superchannel maps: whether `input` rescaled to the input
    /// trace is a trace-non-increasing preparation Choi matrix.
    pub is_preparation: Option<bool>,
}

#[derive(Clone, Debug)]
pub struct DiamondCertificate<T> {
    /// Certified bounds on the (normalized) diamond norm.
    pub lower: T,
    pub upper: T,
    pub primal: PrimalCertificate<T>,
    pub dual: DualCertificate<T>,
    pub witness: Witness<T>,
    pub newton_steps: usize,
}

/// ‖Φ‖♦ to within `opts.tol`, together with its certificate.
pub fn diamond_norm<T: Scalar>(phi: &HermitianPreservingMap<T>, opts: DiamondOptions) -> Result<(T, DiamondCertificate<T>)> {
    let (din, dout) = (phi.dim_in, phi.dim_out);
    let n = din * dout;
    let norm = phi.choi.frobenius_norm();
    if norm == T::zero() {
        return Ok((T::zero(), trivial_certificate(phi)));
    }
    // solve for J/‖J‖ and rescale; bounds then live on the unit scale
    let scale = norm;
    let j = phi.choi.scale(T::one() / scale);
    let outer_scale = scale * phi.input_trace;
    let tol = T::lit(opts.tol) / outer_scale;

    let w_basis: Vec<CMatrix<T>> = (0..n * n).map(|k| herm_basis_element(n, k)).collect();
    let r_basis: Vec<CMatrix<T>> = traceless_herm_basis::<T>(din).iter().map(|f| f.kron(&CMatrix::identity(dout))).collect();
    let jc = herm_to_coords(&j);
    let nw = n * n;
    let nv = nw + r_basis.len();
    let shape = SubsystemShape::new([din, dout])?;

    let rho_of = |x: &[T]| -> CMatrix<T> {
        let mut rho = CMatrix::identity(din).scale(T::one() / T::from_usize(din).unwrap());
        for (k, f) in traceless_herm_basis::<T>(din).iter().enumerate() {
            rho += &f.scale(x[nw + k]);
        }
        rho
    };
    let slacks = |x: &[T]| -> (CMatrix<T>, CMatrix<T>) {
        let w = coords_to_herm(&x[..nw], n);
        let rho_i = rho_of(x).kron(&CMatrix::identity(dout));
        (&rho_i - &w, &rho_i + &w)
    };
    // barrier value, or None outside the domain
    let barrier = |x: &[T], t: T| -> Option<T> {
        let (ap, am) = slacks(x);
        let mut val = -t * dot(&jc, &x[..nw]);
        for a in [&ap, &am] {
            let e = herm_eig(a).ok()?;
            if e.min() <= T::zero() {
                return None;
            }
            val -= e.values.iter().map(|l| l.ln()).sum::<T>();
        }
        Some(val)
    };

    let mut x = vec![T::zero(); nv];
    let mut t = T::one();
    let mu = T::lit(20.0);
    let mut steps = 0usize;
    let mut best: Option<(T, DiamondCertificate<T>)> = None;
    let mut stalled = false;
    for _ in 0..opts.max_outer {
        // centering
        for _ in 0..200 {
            let (ap, am) = slacks(&x);
            let (ep, em) = (herm_eig(&ap)?, herm_eig(&am)?);
            let (ip, im) = (inverse(&ep), inverse(&em));
            let mut g = vec![T::zero(); nv];
            let cp = herm_to_coords(&ip);
            let cm = herm_to_coords(&im);
            for k in 0..nw {
                g[k] = -t * jc[k] + cp[k] - cm[k];
            }
            let sum_tr = partial_trace(&(&ip + &im), &shape, &[1])?;
            for (k, f) in traceless_herm_basis::<T>(din).iter().enumerate() {
                g[nw + k] = -sum_tr.inner_re(f);
            }
            let mut h = vec![T::zero(); nv * nv];
            for (inv, sign) in [(&ip, -T::one()), (&im, T::one())] {
                let mats: Vec<CMatrix<T>> = (0..nv)
                    .map(|k| if k < nw { &inv.scale(sign) * &w_basis[k] } else { inv * &r_basis[k - nw] })
                    .collect();
                for a in 0..nv {
                    for b in a..nv {
                        let v = trace_of_product_re(&mats[a], &mats[b]);
                        h[a * nv + b] += v;
                        if a != b {
                            h[b * nv + a] += v;
                        }
                    }
                }
            }
            let l = match cholesky(&h, nv).or_else(|| {
                let jitter = T::lit(1e-13) * (0..nv).map(|k| h[k * nv + k]).fold(T::zero(), T::max);
                let mut hj = h.clone();
                for k in 0..nv {
                    hj[k * nv + k] += jitter;
                }
                cholesky(&hj, nv)
            }) {
                Some(l) => l,
                None => {
                    stalled = true;
                    break;
                }
            };
            let neg_g: Vec<T> = g.iter().map(|&v| -v).collect();
            let dx = cholesky_solve(&l, nv, &neg_g);
            let decrement = -dot(&g, &dx);
            steps += 1;
            if decrement <= T::lit(1e-10) {
                break;
            }
            let f0 = barrier(&x, t).expect("iterate stays interior");
            let mut alpha = T::one();
            loop {
                let trial: Vec<T> = x.iter().zip(&dx).map(|(&xi, &di)| xi + alpha * di).collect();
                match barrier(&trial, t) {
                    Some(f1) if f1 <= f0 - T::lit(0.25) * alpha * decrement => {
                        x = trial;
                        break;
                    }
                    _ => alpha *= T::lit(0.5),
                }
                if alpha < T::lit(1e-12) {
                    break;
                }
            }
            if alpha < T::lit(1e-12) {
                break;
            }
        }

        let (ap, am) = slacks(&x);
        let (ep, em) = (herm_eig(&ap)?, herm_eig(&am)?);
        let cert = certify(phi, &j, &x[..nw], rho_of(&x), inverse(&ep).scale(T::one() / t), inverse(&em).scale(T::one() / t), steps)?;
        let gap = cert.upper - cert.lower;
        let better = best.as_ref().is_none_or(|(bg, _)| gap < *bg);
        if better {
            best = Some((gap, cert));
        }
        if gap <= tol || stalled {
            break;
        }
        t *= mu;
    }
    let (gap, mut cert) = best.expect("at least one outer iteration");
    cert.lower *= outer_scale;
    cert.upper *= outer_scale;
    if gap > tol {
        return Err(Error::SolverNotConverged { iterations: steps, residual: (gap * outer_scale).to_f64_lossy(), best: None });
    }
    cert.primal.w = cert.primal.w.scale(scale);
    cert.dual.z_plus = cert.dual.z_plus.scale(scale);
    cert.dual.z_minus = cert.dual.z_minus.scale(scale);
    let value = (cert.lower + cert.upper) / T::lit(2.0);
    Ok((value, cert))
}

fn inverse<T: Scalar>(e: &HermEig<T>) -> CMatrix<T> {
    e.reconstruct_with(|l| T::one() / l)
}

/// Re Tr[A B].
fn trace_of_product_re<T: Scalar>(a: &CMatrix<T>, b: &CMatrix<T>) -> T {
    let n = a.rows();
    let mut acc = T::zero();
    for i in 0..n {
        for k in 0..n {
            let x = a[(i, k)];
            let y = b[(k, i)];
            acc += x.re * y.re - x.im * y.im;
        }
    }
    acc
}

/// Builds certified bounds for the unit-scale problem with Choi `j`.
fn certify<T: Scalar>(
    phi: &HermitianPreservingMap<T>,
    j: &CMatrix<T>,
    w: &[T],
    rho: CMatrix<T>,
    mut z_plus: CMatrix<T>,
    mut z_minus: CMatrix<T>,
    newton_steps: usize,
) -> Result<DiamondCertificate<T>> {
    let (din, dout) = (phi.dim_in, phi.dim_out);
    let n = din * dout;
    let shape = SubsystemShape::new([din, dout])?;

    // repair Z₊ − Z₋ = J by adding the two halves of the residual
    let residual = &(j - &z_plus) + &z_minus;
    let er = herm_eig(&residual)?;
    z_plus += &er.reconstruct_with(|l| l.max(T::zero()));
    z_minus += &er.reconstruct_with(|l| (-l).max(T::zero()));
    let upper = herm_eig(&partial_trace(&(&z_plus + &z_minus), &shape, &[1])?)?.max();

    let w = coords_to_herm(w, n);
    let witness = witness_for(phi, j, &rho)?;
    let lower = trace_norm(&witness.1)?;
    Ok(DiamondCertificate {
        lower,
        upper: upper.max(lower),
        primal: PrimalCertificate { rho, w },
        dual: DualCertificate { z_plus, z_minus },
        witness: witness.0,
        newton_steps,
    })
}

/// Witness for input ρ: the output (√ρ ⊗ 1) J (√ρ ⊗ 1) and its Helstrom projector.
fn witness_for<T: Scalar>(phi: &HermitianPreservingMap<T>, j: &CMatrix<T>, rho: &CMatrix<T>) -> Result<(Witness<T>, CMatrix<T>)> {
    let (din, dout) = (phi.dim_in, phi.dim_out);
    let sq = psd_sqrt(&rho.hermitian_part())?;
    let lift = sq.kron(&CMatrix::identity(dout));
    let out = lift.conjugate(j).hermitian_part();
    let measurement = herm_eig(&out)?.reconstruct_with(|l| if l > T::zero() { T::one() } else { T::zero() });
    // (√ρ ⊗ 1)|Ω⟩ with |Ω⟩ = Σ_i |i⟩|i⟩
    let mut state = vec![Complex::new(T::zero(), T::zero()); din * din];
    for i in 0..din {
        for a in 0..din {
            state[a * din + i] = sq[(i, a)];
        }
    }
    let is_preparation = phi.prep_dim.map(|d| {
        let scaled = rho.scale(phi.input_trace);
        let shape = SubsystemShape::new([d, d]).expect("positive dims");
        let marginal = partial_trace(&scaled, &shape, &[1]).expect("consistent shape");
        let tol = T::lit(1e-6);
        herm_eig(&scaled).is_ok_and(|e| e.min() >= -tol) && herm_eig(&marginal).is_ok_and(|e| e.max() <= T::one() + tol)
    });
    Ok((Witness { input: rho.clone(), state, measurement, is_preparation }, out))
}

fn trivial_certificate<T: Scalar>(phi: &HermitianPreservingMap<T>) -> DiamondCertificate<T> {
    let (din, dout) = (phi.dim_in, phi.dim_out);
    let n = din * dout;
    let rho = CMatrix::identity(din).scale(T::one() / T::from_usize(din).unwrap());
    let (witness, _) = witness_for(phi, &phi.choi, &rho).expect("maximally mixed input is valid");
    DiamondCertificate {
        lower: T::zero(),
        upper: T::zero(),
        primal: PrimalCertificate { rho, w: CMatrix::zeros(n, n) },
        dual: DualCertificate { z_plus: CMatrix::zeros(n, n), z_minus: CMatrix::zeros(n, n) },
        witness,
        newton_steps: 0,
    }
}

/// ½ ‖M − M_s‖♦ with M_s the separable superchannel of M.
pub fn ic_norm<T: Scalar>(m: &Superchannel<T>, opts: DiamondOptions) -> Result<T> {
    Ok(ic_norm_with_certificate(m, opts)?.0)
}

pub fn ic_norm_with_certificate<T: Scalar>(m: &Superchannel<T>, opts: DiamondOptions) -> Result<(T, DiamondCertificate<T>)> {
    let ms = separable_superchannel(m)?;
    let map = HermitianPreservingMap::superchannel_difference(m, &ms)?;
    let half = T::lit(0.5);
    let (value, cert) = diamond_norm(&map, DiamondOptions { tol: 2.0 * opts.tol, ..opts })?;
    Ok((half * value, cert))
}

/// Optimal single-shot success probability ½(1 + ½‖Φ‖♦) for telling apart
/// the two maps whose difference is Φ.
pub fn distinguish_probability<T: Scalar>(phi: &HermitianPreservingMap<T>, opts: DiamondOptions) -> Result<T> {
    let half = T::lit(0.5);
    let (value, _) = diamond_norm(phi, opts)?;
    Ok((half * (T::one() + half * value)).min(T::one()))
}
