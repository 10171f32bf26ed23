//! Superchannels: CP maps from a preparation procedure's Choi matrix to the
//! system output state.
//!
//! The Choi matrix lives on X1 ⊗ X2 ⊗ X3 where X1 is the projection slot,
//! X2 the prepared-state slot and X3 the output. For an initial state ρ_SE
//! and an interaction with Choi matrix Λ_U (ordered S_in, E_in, S_out, E_out)
//!
//! ```text
//! (Λ_M)_{a1 a2 i3; b1 b2 j3} = Σ_{e,e',l} (ρ_SE)_{a1 e; b1 e'} (Λ_U)_{a2 e i3 l; b2 e' j3 l}
//! ```
//!
//! i.e. the interaction's system input is wired to the prepared-state slot,
//! not the projection slot. With this wiring M(Λ_P) = Tr_12[(Λ_Pᵀ ⊗ 1) Λ_M]
//! reproduces Tr_E[U((P ⊗ 1)(ρ_SE))] for every preparation P.

use std::io::Write;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::channels::{apply_choi, Channel, DensityMatrix};
use crate::error::{Error, Result};
use crate::qmat::{herm_eig, partial_trace, uhlmann_fidelity, vectorize, CMatrix, SubsystemShape};
use crate::scalar::Scalar;

/// Post-selection probabilities at or below this are treated as impossible.
pub const EPS_PROB: f64 = 1e-9;

/// Choi matrix of a superchannel on X1 ⊗ X2 ⊗ X3.
#[derive(Clone, Debug, PartialEq)]
pub struct Superchannel<T> {
    choi: CMatrix<T>,
    d: usize,
}

impl<T: Scalar> Superchannel<T> {
    pub fn new(choi: CMatrix<T>, d: usize) -> Result<Self> {
        if d == 0 || choi.rows() != d * d * d || !choi.is_square() {
            return Err(Error::ShapeMismatch(format!(
                "superchannel Choi {}x{} for system dimension {d}",
                choi.rows(),
                choi.cols()
            )));
        }
        Ok(Self { choi: choi.symmetrized(T::herm_tol())?, d })
    }

    pub fn choi(&self) -> &CMatrix<T> {
        &self.choi
    }

    pub fn d(&self) -> usize {
        self.d
    }

    fn shape(&self) -> SubsystemShape {
        SubsystemShape::new([self.d, self.d, self.d]).expect("positive dims")
    }

    pub fn trace(&self) -> T {
        self.choi.trace().re
    }

    pub fn min_eigenvalue(&self) -> T {
        herm_eig(&self.choi).expect("Hermitian by construction").min()
    }

    /// The superchannel viewed as an ordinary map L(X1 ⊗ X2) → L(X3).
    pub fn as_channel(&self) -> Channel<T> {
        Channel::new(self.choi.clone(), self.d * self.d, self.d).expect("consistent dims")
    }

    /// Tr_X3[Λ_M] on X1 ⊗ X2.
    pub fn output_marginal(&self) -> CMatrix<T> {
        partial_trace(&self.choi, &self.shape(), &[2]).expect("consistent shape")
    }

    /// Choi matrix in the polarization ⊗ Pauli basis {|H⟩,|V⟩} ⊗ {I, σx, σy, σz}
    /// (qubits only), for human-readable display.
    pub fn pauli_view(&self) -> Result<CMatrix<T>> {
        if self.d != 2 {
            return Err(Error::InvalidArgument("Pauli view is defined for qubits only".into()));
        }
        let r = T::one() / T::SQRT_2();
        let paulis = [
            crate::channels::Gate::I,
            crate::channels::Gate::X,
            crate::channels::Gate::Y,
            crate::channels::Gate::Z,
        ];
        let mut basis = CMatrix::zeros(4, 4);
        for (m, p) in paulis.iter().enumerate() {
            let v = vectorize(&p.matrix::<T>());
            for row in 0..4 {
                basis[(row, m)] = v.data()[row] * r;
            }
        }
        let w = CMatrix::identity(2).kron(&basis);
        Ok(&(&w.adjoint() * &self.choi) * &w)
    }
}

/// What kind of preparation procedure a Choi matrix came from.
#[derive(Clone, Debug, PartialEq)]
pub enum PrepKind<T> {
    /// Post-select on `project`, then rotate to `rotate`.
    Projective { project: DensityMatrix<T>, rotate: DensityMatrix<T> },
    General,
}

/// Choi matrix of a system preparation procedure on X1 ⊗ X2.
#[derive(Clone, Debug, PartialEq)]
pub struct Preparation<T> {
    choi: CMatrix<T>,
    kind: PrepKind<T>,
}

impl<T: Scalar> Preparation<T> {
    /// Any CP preparation, given by its Choi matrix.
    pub fn general(choi: CMatrix<T>) -> Result<Self> {
        let choi = choi.symmetrized(T::herm_tol())?;
        let min = herm_eig(&choi)?.min();
        if min < -T::psd_tol() {
            return Err(Error::NotPsd { min_eig: min.to_f64_lossy() });
        }
        Ok(Self { choi, kind: PrepKind::General })
    }

    pub fn choi(&self) -> &CMatrix<T> {
        &self.choi
    }

    pub fn kind(&self) -> &PrepKind<T> {
        &self.kind
    }
}

/// Projective preparation: Λ_P = conj(ρ_i) ⊗ ρ_j.
pub fn projective_preparation<T: Scalar>(project: &DensityMatrix<T>, rotate: &DensityMatrix<T>) -> Result<Preparation<T>> {
    for s in [project, rotate] {
        if !s.is_pure(T::psd_tol()) {
            return Err(Error::NotPure { purity: s.purity().to_f64_lossy() });
        }
    }
    if project.dim() != rotate.dim() {
        return Err(Error::ShapeMismatch(format!("preparation states of dims {} and {}", project.dim(), rotate.dim())));
    }
    Ok(Preparation {
        choi: project.matrix().conj().kron(rotate.matrix()),
        kind: PrepKind::Projective { project: project.clone(), rotate: rotate.clone() },
    })
}

/// Builds Λ_M from the initial system-environment state and the joint
/// interaction. `d` is the system dimension; the environment dimension is
/// inferred from `rho_se`.
pub fn build_superchannel<T: Scalar>(rho_se: &DensityMatrix<T>, u_se: &Channel<T>, d: usize) -> Result<Superchannel<T>> {
    let n = rho_se.dim();
    if d == 0 || !n.is_multiple_of(d) {
        return Err(Error::ShapeMismatch(format!("joint dimension {n} is not a multiple of system dimension {d}")));
    }
    let de = n / d;
    if u_se.dim_in() != n || u_se.dim_out() != n {
        return Err(Error::ShapeMismatch(format!(
            "interaction maps {} -> {}, joint state has dimension {n}",
            u_se.dim_in(),
            u_se.dim_out()
        )));
    }
    let min = u_se.min_choi_eigenvalue();
    if min < -T::psd_tol() {
        return Err(Error::NotCp { min_eig: min.to_f64_lossy() });
    }
    let rho = rho_se.matrix();
    let lu = u_se.choi();
    let u_idx = |s_in: usize, e_in: usize, s_out: usize, e_out: usize| ((s_in * de + e_in) * d + s_out) * de + e_out;
    let mut choi = CMatrix::zeros(d * d * d, d * d * d);
    for a1 in 0..d {
        for b1 in 0..d {
            for e in 0..de {
                for ep in 0..de {
                    let r = rho[(a1 * de + e, b1 * de + ep)];
                    if r.re == T::zero() && r.im == T::zero() {
                        continue;
                    }
                    for a2 in 0..d {
                        for b2 in 0..d {
                            for i3 in 0..d {
                                for j3 in 0..d {
                                    let mut acc = Complex::new(T::zero(), T::zero());
                                    for l in 0..de {
                                        acc += lu[(u_idx(a2, e, i3, l), u_idx(b2, ep, j3, l))];
                                    }
                                    choi[((a1 * d + a2) * d + i3, (b1 * d + b2) * d + j3)] += r * acc;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Superchannel::new(choi, d)
}

/// ρ′ = M(Λ_P) = Tr_12[(Λ_Pᵀ ⊗ 1) Λ_M]; trace is the success probability.
pub fn apply_superchannel<T: Scalar>(m: &Superchannel<T>, p: &Preparation<T>) -> Result<CMatrix<T>> {
    apply_choi(&m.choi, m.d * m.d, m.d, &p.choi)
}

/// ρ_S,av = Tr_23[Λ_M] / d.
pub fn average_initial_state<T: Scalar>(m: &Superchannel<T>) -> Result<DensityMatrix<T>> {
    let reduced = partial_trace(&m.choi, &m.shape(), &[1, 2])?;
    DensityMatrix::new(reduced.scale(T::one() / T::from_usize(m.d).unwrap()))
}

/// Λ_E,av = Tr_1[Λ_M].
pub fn average_effective_map<T: Scalar>(m: &Superchannel<T>) -> Result<Channel<T>> {
    Channel::new(partial_trace(&m.choi, &m.shape(), &[0])?, m.d, m.d)
}

/// Λ_Ms = ρ_S,av ⊗ Λ_E,av.
pub fn separable_superchannel<T: Scalar>(m: &Superchannel<T>) -> Result<Superchannel<T>> {
    let rho = average_initial_state(m)?;
    let map = average_effective_map(m)?;
    Superchannel::new(rho.matrix().kron(map.choi()), m.d)
}

/// Effective channel after post-selecting on `rho1`, together with the
/// success probability p = Tr[(ρ1† ⊗ 1) Λ_M] / d.
pub fn effective_channel<T: Scalar>(m: &Superchannel<T>, rho1: &DensityMatrix<T>) -> Result<(Channel<T>, T)> {
    let d = m.d;
    if rho1.dim() != d {
        return Err(Error::ShapeMismatch(format!("projection state of dim {} for system dim {d}", rho1.dim())));
    }
    let r = rho1.matrix().adjoint();
    let inner = d * d;
    let mut x = CMatrix::<T>::zeros(inner, inner);
    for a in 0..d {
        for b in 0..d {
            // Tr_1[(A ⊗ 1) Λ] picks A_{b a} Λ_{a·; b·}
            let w = r[(b, a)];
            if w.re == T::zero() && w.im == T::zero() {
                continue;
            }
            for p in 0..inner {
                for q in 0..inner {
                    x[(p, q)] += w * m.choi[(a * inner + p, b * inner + q)];
                }
            }
        }
    }
    let prob = x.trace().re / T::from_usize(d).unwrap();
    if !(prob > T::lit(EPS_PROB)) {
        return Err(Error::VanishingProbability(prob.to_f64_lossy()));
    }
    Ok((Channel::new(x.scale(T::one() / prob), d, d)?, prob))
}

/// F_prep = F(Λ_E,ρ1, Λ_U) / d², with F the squared Uhlmann fidelity.
pub fn prep_fidelity<T: Scalar>(m: &Superchannel<T>, rho1: &DensityMatrix<T>, u_target: &CMatrix<T>) -> Result<T> {
    let (eff, _) = effective_channel(m, rho1)?;
    fidelity_to_unitary(&eff, u_target)
}

pub(crate) fn fidelity_to_unitary<T: Scalar>(eff: &Channel<T>, u_target: &CMatrix<T>) -> Result<T> {
    let target = Channel::from_unitary(u_target)?;
    let d = T::from_usize(eff.dim_in()).unwrap();
    let f = uhlmann_fidelity(eff.choi(), target.choi())? / (d * d);
    Ok(f.max(T::zero()).min(T::one()))
}

/// ‖Tr_X3[Λ_M] − Tr_E[ρ_SE] ⊗ 1‖_F; vanishes for TP interactions.
pub fn check_tp_condition<T: Scalar>(m: &Superchannel<T>, rho_se: &DensityMatrix<T>) -> Result<T> {
    let d = m.d;
    let n = rho_se.dim();
    if !n.is_multiple_of(d) {
        return Err(Error::ShapeMismatch(format!("joint dimension {n} vs system dimension {d}")));
    }
    let rho_s = partial_trace(rho_se.matrix(), &SubsystemShape::new([d, n / d])?, &[1])?;
    Ok(m.output_marginal().distance(&rho_s.kron(&CMatrix::identity(d))))
}

/// Projection state cos θ |H⟩ + e^{iφ} sin θ |V⟩.
pub fn bloch_state<T: Scalar>(theta: T, phi: T) -> DensityMatrix<T> {
    let (s, c) = theta.sin_cos();
    DensityMatrix::pure(&[Complex::new(c, T::zero()), Complex::from_polar(s, phi)]).expect("unit vector")
}

/// Maps any (θ, φ) to the equivalent point with θ ∈ [0, π/2], φ ∈ [0, 2π).
pub fn canonical_angles<T: Scalar>(theta: T, phi: T) -> (T, T) {
    let (s, c) = theta.sin_cos();
    let mut phi = phi;
    if c < T::zero() {
        phi += T::PI();
    }
    if s < T::zero() {
        phi += T::PI();
    }
    let two_pi = T::lit(2.0) * T::PI();
    phi %= two_pi;
    if phi < T::zero() {
        phi += two_pi;
    }
    (s.abs().atan2(c.abs()), phi)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizeMode {
    Max,
    Min,
}

/// Sampling grid over θ ∈ [0, π/2] (endpoints included) × φ ∈ [0, 2π).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrepGrid {
    pub n_theta: usize,
    pub n_phi: usize,
}

impl Default for PrepGrid {
    fn default() -> Self {
        Self { n_theta: 64, n_phi: 128 }
    }
}

impl PrepGrid {
    pub fn theta<T: Scalar>(&self, a: usize) -> T {
        if self.n_theta <= 1 {
            return T::zero();
        }
        T::FRAC_PI_2() * T::from_usize(a).unwrap() / T::from_usize(self.n_theta - 1).unwrap()
    }

    pub fn phi<T: Scalar>(&self, b: usize) -> T {
        T::lit(2.0) * T::PI() * T::from_usize(b).unwrap() / T::from_usize(self.n_phi).unwrap()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfacePoint<T> {
    pub theta: T,
    pub phi: T,
    /// `None` where post-selection on the state never succeeds.
    pub f: Option<T>,
}

/// F_prep sampled over the Bloch sphere, in grid order (θ outer, φ inner).
#[derive(Clone, Debug, PartialEq)]
pub struct PrepSurface<T> {
    pub grid: PrepGrid,
    pub points: Vec<SurfacePoint<T>>,
}

impl<T: Scalar> PrepSurface<T> {
    pub fn skipped(&self) -> impl Iterator<Item = &SurfacePoint<T>> {
        self.points.iter().filter(|p| p.f.is_none())
    }

    /// (min, max) over the evaluated points.
    pub fn range(&self) -> Option<(T, T)> {
        let mut it = self.points.iter().filter_map(|p| p.f);
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), f| (lo.min(f), hi.max(f))))
    }

    /// CSV with header `theta,phi,f`; skipped points have an empty `f`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "theta,phi,f")?;
        for p in &self.points {
            match p.f {
                Some(f) => writeln!(w, "{},{},{}", p.theta, p.phi, f)?,
                None => writeln!(w, "{},{},", p.theta, p.phi)?,
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct PrepOptimum<T> {
    pub theta: T,
    pub phi: T,
    pub f: T,
    pub surface: PrepSurface<T>,
}

/// Global optimum of F_prep over projection states on the Bloch sphere.
pub fn optimize_prep<T: Scalar>(m: &Superchannel<T>, u_target: &CMatrix<T>, mode: OptimizeMode) -> Result<PrepOptimum<T>> {
    optimize_prep_on(m, u_target, mode, PrepGrid::default())
}

/// [`optimize_prep`] with an explicit sampling grid.
///
/// The grid is scanned exhaustively (in parallel, reduced in index order) and
/// the best sample is polished with Nelder–Mead on (θ, φ).
pub fn optimize_prep_on<T: Scalar>(
    m: &Superchannel<T>,
    u_target: &CMatrix<T>,
    mode: OptimizeMode,
    grid: PrepGrid,
) -> Result<PrepOptimum<T>> {
    if m.d != 2 {
        return Err(Error::InvalidArgument("Bloch-sphere optimization needs a qubit superchannel".into()));
    }
    if grid.n_theta == 0 || grid.n_phi == 0 {
        return Err(Error::InvalidArgument("empty preparation grid".into()));
    }
    Channel::from_unitary(u_target)?;
    let eval = |theta: T, phi: T| -> Result<Option<T>> {
        match prep_fidelity(m, &bloch_state(theta, phi), u_target) {
            Ok(f) => Ok(Some(f)),
            Err(Error::VanishingProbability(_)) => Ok(None),
            Err(e) => Err(e),
        }
    };
    let points: Vec<SurfacePoint<T>> = (0..grid.n_theta * grid.n_phi)
        .into_par_iter()
        .map(|k| {
            let theta = grid.theta::<T>(k / grid.n_phi);
            let phi = grid.phi::<T>(k % grid.n_phi);
            eval(theta, phi).map(|f| SurfacePoint { theta, phi, f })
        })
        .collect::<Result<_>>()?;

    let sign = match mode {
        OptimizeMode::Max => T::one(),
        OptimizeMode::Min => -T::one(),
    };
    let best = points
        .iter()
        .filter_map(|p| p.f.map(|f| (p, f)))
        .fold(None::<(&SurfacePoint<T>, T)>, |acc, (p, f)| match acc {
            Some((_, bf)) if sign * bf >= sign * f => acc,
            _ => Some((p, f)),
        });
    let Some((start, start_f)) = best else {
        return Err(Error::VanishingProbability(0.0));
    };

    // Nelder–Mead minimizes -sign·f; unreachable points score +∞
    let objective = |x: [T; 2]| -> T {
        match eval(x[0], x[1]) {
            Ok(Some(f)) => -sign * f,
            _ => T::infinity(),
        }
    };
    let step_theta = T::FRAC_PI_2() / T::from_usize(grid.n_theta.max(2) - 1).unwrap();
    let step_phi = T::lit(2.0) * T::PI() / T::from_usize(grid.n_phi).unwrap();
    let (x, fx) = nelder_mead(objective, [start.theta, start.phi], [step_theta, step_phi], T::lit(1e-12), 400);
    let (mut theta, mut phi, mut f) = (start.theta, start.phi, start_f);
    if -sign * start_f > fx {
        let (t, p) = canonical_angles(x[0], x[1]);
        theta = t;
        phi = p;
        f = -sign * fx;
    }
    Ok(PrepOptimum { theta, phi, f, surface: PrepSurface { grid, points } })
}

fn nelder_mead<T: Scalar>(f: impl Fn([T; 2]) -> T, x0: [T; 2], step: [T; 2], ftol: T, max_iter: usize) -> ([T; 2], T) {
    let half = T::lit(0.5);
    let two = T::lit(2.0);
    let mut simplex = [x0, [x0[0] + step[0], x0[1]], [x0[0], x0[1] + step[1]]];
    let mut values = simplex.map(&f);
    for _ in 0..max_iter {
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(std::cmp::Ordering::Equal));
        simplex = order.map(|k| simplex[k]);
        values = order.map(|k| values[k]);
        if (values[2] - values[0]).abs() <= ftol && values[2].is_finite() {
            break;
        }
        let centroid = [(simplex[0][0] + simplex[1][0]) * half, (simplex[0][1] + simplex[1][1]) * half];
        let along = |t: T| [centroid[0] + t * (simplex[2][0] - centroid[0]), centroid[1] + t * (simplex[2][1] - centroid[1])];
        let xr = along(-T::one());
        let fr = f(xr);
        if fr < values[0] {
            let xe = along(-two);
            let fe = f(xe);
            if fe < fr {
                simplex[2] = xe;
                values[2] = fe;
            } else {
                simplex[2] = xr;
                values[2] = fr;
            }
        } else if fr < values[1] {
            simplex[2] = xr;
            values[2] = fr;
        } else {
            let xc = if fr < values[2] { along(-half) } else { along(half) };
            let fc = f(xc);
            if fc < values[2].min(fr) {
                simplex[2] = xc;
                values[2] = fc;
            } else {
                for k in 1..3 {
                    simplex[k] = [
                        simplex[0][0] + half * (simplex[k][0] - simplex[0][0]),
                        simplex[0][1] + half * (simplex[k][1] - simplex[0][1]),
                    ];
                    values[k] = f(simplex[k]);
                }
            }
        }
    }
    let best = (0..3).fold(0, |b, k| if values[k] < values[b] { k } else { b });
    (simplex[best], values[best])
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
struct SuperchannelJson<T> {
    d: usize,
    choi: CMatrix<T>,
    slots: Vec<String>,
}

impl<T: Scalar> Serialize for Superchannel<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        SuperchannelJson { d: self.d, choi: self.choi.clone(), slots: vec!["X1".into(), "X2".into(), "X3".into()] }
            .serialize(serializer)
    }
}

impl<'de, T: Scalar> Deserialize<'de> for Superchannel<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = SuperchannelJson::<T>::deserialize(deserializer)?;
        if raw.slots != ["X1", "X2", "X3"] {
            return Err(serde::de::Error::custom(format!("unexpected slot labels {:?}", raw.slots)));
        }
        Superchannel::new(raw.choi, raw.d).map_err(serde::de::Error::custom)
    }
}
