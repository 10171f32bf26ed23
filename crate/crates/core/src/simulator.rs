//! Ground-truth physics for the two-qubit experiment: the correlated
//! system-environment family, CZ-mediated interactions, exact conditional
//! evolution and Poisson count sampling.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{DensityMatrix, Gate, PolState};
use crate::diamond::{ic_norm, DiamondOptions};
use crate::error::{Error, Result};
use crate::qmat::{partial_trace, CMatrix, SubsystemShape};
use crate::scalar::Scalar;
use crate::superchannel::{build_superchannel, PrepKind, Preparation, Superchannel};
use crate::tomography::{probabilities, CountDataset, CountRecord, Frame, DEFAULT_BETA, DEFAULT_OUTCOMES};
use crate::channels::Channel;

/// Tangle values of the measured correlated states.
pub const MEASURED_TAUS: [f64; 5] = [0.012, 0.136, 0.423, 0.757, 0.908];

/// Which system gate the CZ-based interaction implements when active.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Interaction {
    Z,
    H,
    #[serde(rename = "RYZ")]
    Ryz,
}

impl Interaction {
    pub const ALL: [Interaction; 3] = [Interaction::Z, Interaction::H, Interaction::Ryz];

    pub fn label(self) -> &'static str {
        match self {
            Interaction::Z => "Z",
            Interaction::H => "H",
            Interaction::Ryz => "RYZ",
        }
    }

    /// System unitary applied when the environment activates the gate.
    pub fn target_unitary<T: Scalar>(self) -> CMatrix<T> {
        match self {
            Interaction::Z => Gate::Z.matrix(),
            Interaction::H => Gate::H.matrix(),
            Interaction::Ryz => &Gate::RY.matrix::<T>() * &Gate::Z.matrix(),
        }
    }
}

impl fmt::Display for Interaction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Interaction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "Z" => Ok(Interaction::Z),
            "H" => Ok(Interaction::H),
            "RYZ" => Ok(Interaction::Ryz),
            _ => Err(Error::UnknownName { kind: "interaction target", name: s.trim().to_string() }),
        }
    }
}

/// Environment state that switches the controlled gate on.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Control {
    #[default]
    V,
    H,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentSpec {
    pub theta: f64,
    /// Weight of the pure state against white noise.
    pub state_purity_v: f64,
    pub interaction: Interaction,
    pub control: Control,
    pub frame_states: Vec<PolState>,
    pub trials_per_config: u64,
    pub seed: u64,
    /// Emit n = round(N0 · p) instead of sampling.
    pub exact: bool,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            theta: std::f64::consts::FRAC_PI_8,
            state_purity_v: 1.0,
            interaction: Interaction::Z,
            control: Control::V,
            frame_states: PolState::ALL.to_vec(),
            trials_per_config: 5000,
            seed: 0,
            exact: false,
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if !self.theta.is_finite() {
            return Err(Error::InvalidArgument(format!("theta must be finite, got {}", self.theta)));
        }
        if !(0.0..=1.0).contains(&self.state_purity_v) {
            return Err(Error::InvalidArgument(format!("state_purity_v must lie in [0, 1], got {}", self.state_purity_v)));
        }
        if self.trials_per_config == 0 {
            return Err(Error::InvalidArgument("trials_per_config must be at least 1".into()));
        }
        if self.frame_states.is_empty() {
            return Err(Error::InvalidArgument("frame_states is empty".into()));
        }
        Ok(())
    }

    pub fn tangle(&self) -> f64 {
        tangle(self.theta)
    }

    /// Λ_M of the configured experiment.
    pub fn superchannel<T: Scalar>(&self) -> Result<Superchannel<T>> {
        self.validate()?;
        let rho = make_se_state(T::lit(self.theta), T::lit(self.state_purity_v))?;
        let u = Channel::from_unitary(&interaction_unitary(self.interaction, self.control))?;
        build_superchannel(&rho, &u, 2)
    }
}

/// v |ψ(θ)⟩⟨ψ(θ)| + (1 − v) I/4 with ψ = cos 2θ |HV⟩ + sin 2θ |VH⟩.
pub fn make_se_state<T: Scalar>(theta: T, v: T) -> Result<DensityMatrix<T>> {
    if !(v >= T::zero() && v <= T::one()) {
        return Err(Error::InvalidArgument(format!("mixing weight must lie in [0, 1], got {v}")));
    }
    let (s, c) = (T::lit(2.0) * theta).sin_cos();
    let z = Complex::new(T::zero(), T::zero());
    let psi = [z, Complex::new(c, T::zero()), Complex::new(s, T::zero()), z];
    let pure = CMatrix::ket_bra(&psi);
    let noise = CMatrix::identity(4).scale((T::one() - v) / T::lit(4.0));
    DensityMatrix::new(&pure.scale(v) + &noise)
}

/// τ = sin²(4θ).
pub fn tangle(theta: f64) -> f64 {
    (4.0 * theta).sin().powi(2)
}

/// The branch θ ∈ [0, π/8] with sin²(4θ) = τ.
pub fn theta_for_tangle(tau: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::InvalidArgument(format!("tangle must lie in [0, 1], got {tau}")));
    }
    Ok(tau.sqrt().asin() / 4.0)
}

/// Joint unitary on system ⊗ environment.
///
/// The environment controls a Z on the system (`control` selects which
/// environment state activates it); the H and RYZ targets dress the CZ with
/// R = exp(−iπσ_y/8) so the active gate becomes H = RZR† or R·Z respectively.
pub fn interaction_unitary<T: Scalar>(target: Interaction, control: Control) -> CMatrix<T> {
    let one = T::one();
    let cz = match control {
        Control::V => CMatrix::from_diag(&[one, one, one, -one]),
        Control::H => CMatrix::from_diag(&[one, one, -one, one]),
    };
    let r = Gate::RY.matrix::<T>().kron(&CMatrix::identity(2));
    match target {
        Interaction::Z => cz,
        Interaction::H => &(&r * &cz) * &r.adjoint(),
        Interaction::Ryz => &r * &cz,
    }
}

/// Tr_E[U (ρ_j ⊗ σ_{E|i}) U†] · p_i by direct conditional evolution.
pub fn ground_truth_output<T: Scalar>(rho_se: &DensityMatrix<T>, u: &CMatrix<T>, prep: &Preparation<T>) -> Result<CMatrix<T>> {
    let PrepKind::Projective { project, rotate } = prep.kind() else {
        return Err(Error::InvalidArgument("ground truth is defined for projective preparations".into()));
    };
    let n = rho_se.dim();
    let d = project.dim();
    if !n.is_multiple_of(d) || u.rows() != n || !u.is_square() {
        return Err(Error::ShapeMismatch(format!("joint dimension {n}, system dimension {d}, unitary {}x{}", u.rows(), u.cols())));
    }
    let defect = u.unitarity_defect();
    if defect > T::herm_tol() {
        return Err(Error::NonUnitary { defect: defect.to_f64_lossy() });
    }
    let de = n / d;
    let shape = SubsystemShape::new([d, de])?;
    let projected = &project.matrix().kron(&CMatrix::identity(de)) * rho_se.matrix();
    let p = projected.trace().re;
    if p <= T::zero() {
        return Ok(CMatrix::zeros(d, d));
    }
    let sigma = partial_trace(&projected, &shape, &[0])?;
    let evolved = u.conjugate(&rotate.matrix().kron(&sigma));
    partial_trace(&evolved, &shape, &[1])
}

/// Exact p_ijk for the configured experiment, in frame order.
pub fn exact_probabilities<T: Scalar>(spec: &ExperimentSpec) -> Result<(Frame<T>, Vec<T>)> {
    let frame = Frame::polarization(&spec.frame_states)?;
    let p = probabilities(&spec.superchannel()?, &frame)?;
    Ok((frame, p))
}

/// Count dataset with n_ijk ~ Poisson(N0 · p_ijk), or rounded means when `exact`.
pub fn simulate_counts(spec: &ExperimentSpec) -> Result<CountDataset> {
    let (frame, p) = exact_probabilities::<f64>(spec)?;
    let n0 = spec.trials_per_config as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut records = Vec::with_capacity(frame.len());
    for (b, &pb) in p.iter().enumerate() {
        let mean = n0 * pb.clamp(0.0, 1.0);
        let n = if spec.exact {
            mean.round() as u64
        } else if mean > 0.0 {
            Poisson::new(mean).expect("positive finite mean").sample(&mut rng) as u64
        } else {
            0
        };
        let (i, j, k) = frame.triple(b);
        let s = &spec.frame_states;
        records.push(CountRecord { i: s[i], j: s[j], k: s[k], n, trials: None });
    }
    Ok(CountDataset { records, beta: DEFAULT_BETA, outcomes: DEFAULT_OUTCOMES, nominal_trials: Some(spec.trials_per_config) })
}

/// One point of the IC-norm curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub tau: f64,
    pub target: Interaction,
    pub ic_norm: f64,
}

/// 15 uniform points on [0, 1] merged with the measured tangles, ascending.
pub fn default_tau_grid() -> Vec<f64> {
    let mut grid: Vec<f64> = (0..15).map(|k| k as f64 / 14.0).chain(MEASURED_TAUS).collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

/// Ideal IC-norm for every (τ, target), ordered by target then τ.
pub fn ic_norm_sweep(targets: &[Interaction], tau_grid: &[f64], v: f64, opts: DiamondOptions) -> Result<Vec<SweepRow>> {
    let jobs: Vec<(Interaction, f64)> = targets.iter().flat_map(|&t| tau_grid.iter().map(move |&tau| (t, tau))).collect();
    jobs.par_iter()
        .map(|&(target, tau)| {
            let spec = ExperimentSpec { theta: theta_for_tangle(tau)?, state_purity_v: v, interaction: target, ..Default::default() };
            let m = spec.superchannel::<f64>()?;
            Ok(SweepRow { tau, target, ic_norm: ic_norm(&m, opts)? })
        })
        .collect()
}

/// The 15 measured configurations: every target at every measured tangle, v = 1.
pub fn presets() -> Vec<ExperimentSpec> {
    Interaction::ALL
        .iter()
        .flat_map(|&interaction| {
            MEASURED_TAUS.iter().map(move |&tau| ExperimentSpec {
                theta: theta_for_tangle(tau).expect("tangle in range"),
                interaction,
                ..Default::default()
            })
        })
        .collect()
}
