//! Superchannel tomography: the projective frame, count datasets, linear
//! inversion and hedged maximum likelihood.

mod dataset;
mod frame;
mod linear;
mod mle;

pub use dataset::{estimate_trials, frequencies, hedge, weights, CountDataset, CountRecord, TrialsPolicy, DEFAULT_BETA, DEFAULT_OUTCOMES};
pub use frame::{build_frame, probabilities, Frame, RANK_RTOL};
pub use linear::{dual_frame, linear_inversion};
pub use mle::{mle_fit, mle_reconstruct, MleOptions};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Result;
use crate::scalar::Scalar;
use crate::superchannel::Superchannel;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Linear,
    Mle,
}

impl std::str::FromStr for Method {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "linear" => Ok(Method::Linear),
            "mle" => Ok(Method::Mle),
            other => Err(crate::Error::UnknownName { kind: "reconstruction method", name: other.to_string() }),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Smallest eigenvalue of the unconstrained least-squares estimate.
    pub min_eigenvalue: f64,
    pub iterations: usize,
    /// Relative optimality gap (zero for linear inversion).
    pub residual: f64,
    pub frame_rank: usize,
    pub converged: bool,
}

#[derive(Clone, Debug)]
pub struct ReconstructionResult<T> {
    pub superchannel: Superchannel<T>,
    /// Weighted residual Σ w² (p̂ − p)².
    pub objective: T,
    pub method: Method,
    pub diagnostics: Diagnostics,
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
struct ResultJson<T> {
    method: Method,
    objective: f64,
    superchannel: Superchannel<T>,
    diagnostics: Diagnostics,
}

impl<T: Scalar> Serialize for ReconstructionResult<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        ResultJson {
            method: self.method,
            objective: self.objective.to_f64_lossy(),
            superchannel: self.superchannel.clone(),
            diagnostics: self.diagnostics.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de, T: Scalar> Deserialize<'de> for ReconstructionResult<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = ResultJson::<T>::deserialize(deserializer)?;
        Ok(Self { superchannel: raw.superchannel, objective: T::lit(raw.objective), method: raw.method, diagnostics: raw.diagnostics })
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::mle::project_simplex;
    use super::*;
    use crate::channels::{Channel, DensityMatrix, PolState};
    use crate::qmat::testutil::*;
    use crate::qmat::{herm_eig, project_psd, CMatrix};
    use crate::simulator::{simulate_counts, ExperimentSpec, Interaction};
    use crate::superchannel::build_superchannel;
    use crate::Error;

    type M = CMatrix<f64>;

    fn random_superchannel(seed: u64) -> Superchannel<f64> {
        let mut g = rng(seed);
        let rho = DensityMatrix::new(random_density(&mut g, 4)).unwrap();
        build_superchannel(&rho, &Channel::from_unitary(&random_unitary(&mut g, 4)).unwrap(), 2).unwrap()
    }

    fn separable_h_identity() -> Superchannel<f64> {
        Superchannel::new(PolState::H.density::<f64>().matrix().kron(Channel::identity(2).choi()), 2).unwrap()
    }

    fn record(i: PolState, j: PolState, k: PolState, n: u64) -> CountRecord {
        CountRecord { i, j, k, n, trials: None }
    }

    #[test]
    fn probability_examples() {
        let frame = Frame::<f64>::standard();
        let p = probabilities(&separable_h_identity(), &frame).unwrap();
        let at = |i, j, k| {
            let idx = |s: PolState| frame.index_of(s.label()).unwrap();
            p[frame.element(idx(i), idx(j), idx(k))]
        };
        use PolState::*;
        assert_abs_diff_eq!(at(H, D, D), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(at(V, R, L), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(at(D, H, V), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(at(D, H, H), 0.5, epsilon = 1e-14);
    }

    #[test]
    fn probabilities_lie_in_unit_interval() {
        let frame = Frame::standard();
        for seed in 0..5 {
            for p in probabilities(&random_superchannel(seed), &frame).unwrap() {
                assert!((-1e-10..=1.0 + 1e-10).contains(&p));
            }
        }
    }

    #[test]
    fn frame_ranks() {
        let six = Frame::<f64>::standard();
        assert_eq!(six.len(), 216);
        assert_eq!(six.rank(), 64);
        assert!(six.is_informationally_complete());
        let four = Frame::<f64>::polarization(&[PolState::H, PolState::V, PolState::D, PolState::R]).unwrap();
        assert_eq!((four.len(), four.rank()), (64, 64));
        let two = Frame::<f64>::polarization(&[PolState::H, PolState::V]).unwrap();
        assert!(!two.is_informationally_complete());
        assert!(two.rank() < 64);
        assert!(matches!(linear_inversion(&[0.1; 8], &two, None), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn frame_projectors_are_rank_one() {
        let frame = Frame::<f64>::standard();
        for p in frame.projectors().iter().step_by(17) {
            let e = herm_eig(p).unwrap();
            assert_abs_diff_eq!(e.max(), 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(p.trace().re, 1.0, epsilon = 1e-12);
            assert!(e.values[e.values.len() - 2].abs() < 1e-12);
        }
    }

    #[test]
    fn build_frame_from_arbitrary_states() {
        let mut g = rng(1);
        let states: Vec<DensityMatrix<f64>> = (0..4).map(|_| DensityMatrix::new(random_pure(&mut g, 2)).unwrap()).collect();
        let frame = build_frame(&states).unwrap();
        assert_eq!(frame.rank(), 64);
        assert!(build_frame(&[DensityMatrix::<f64>::maximally_mixed(2)]).is_err());
    }

    #[test]
    fn linear_inversion_round_trip() {
        let frame = Frame::standard();
        for seed in 0..3 {
            let m = random_superchannel(seed);
            let p = probabilities(&m, &frame).unwrap();
            let uniform = linear_inversion(&p, &frame, None).unwrap();
            assert!(uniform.superchannel.choi().distance(m.choi()) < 1e-10);
            let w: Vec<f64> = (0..p.len()).map(|b| 1.0 + (b % 7) as f64).collect();
            let weighted = linear_inversion(&p, &frame, Some(&w)).unwrap();
            assert!(weighted.superchannel.choi().distance(uniform.superchannel.choi()) < 1e-10);
            assert!(weighted.objective < 1e-18);
        }
    }

    #[test]
    fn dual_frame_properties() {
        let frame = Frame::<f64>::standard();
        let duals = dual_frame(&frame).unwrap();
        let total: f64 = duals.iter().zip(frame.projectors()).map(|(d, p)| d.inner_re(p)).sum();
        assert_abs_diff_eq!(total, 64.0, epsilon = 1e-9);

        let p = vec![0.3; 216];
        let w = vec![1.0; 216];
        let via_duals = linear_inversion(&p, &frame, None).unwrap();
        let via_normal = linear_inversion(&p, &frame, Some(&w)).unwrap();
        assert!(via_duals.superchannel.choi().distance(via_normal.superchannel.choi()) < 1e-10);
    }

    #[test]
    fn orthonormal_frame_is_self_dual() {
        // computational basis states give an orthonormal frame on the diagonal
        let frame = Frame::<f64>::polarization(&[PolState::H, PolState::V]).unwrap();
        let e00 = &frame.projectors()[0];
        let e11 = &frame.projectors()[7];
        assert_abs_diff_eq!(e00.inner_re(e11), 0.0);
        assert!(dual_frame(&frame).is_err());
    }

    #[test]
    fn hedge_examples() {
        use PolState::*;
        let ds = CountDataset::new(vec![
            CountRecord { n: 0, trials: Some(5000), ..record(H, H, H, 0) },
            CountRecord { n: 5000, trials: Some(5000), ..record(H, H, V, 0) },
        ])
        .unwrap();
        let p: Vec<f64> = hedge(&ds).unwrap();
        assert_abs_diff_eq!(p[0], 0.1 / 5000.4, epsilon = 1e-15);
        assert_abs_diff_eq!(p[1], 5000.1 / 5000.4, epsilon = 1e-15);
        assert!(p.iter().all(|&x| x > 0.0 && x < 1.0));

        let tiny = ds.clone().with_hedging(1e-12, 4).unwrap();
        let p: Vec<f64> = hedge(&tiny).unwrap();
        assert_abs_diff_eq!(p[1], 1.0, epsilon = 1e-12);
        assert!(ds.clone().with_hedging(0.0, 4).is_err());
        assert!(ds.with_hedging(0.1, 1).is_err());
    }

    #[test]
    fn weight_examples() {
        use PolState::*;
        let ds = CountDataset::new(vec![
            CountRecord { trials: Some(10000), ..record(H, H, H, 10) },
            CountRecord { trials: Some(10000), ..record(H, H, V, 10) },
        ])
        .unwrap();
        let w = weights(&ds, &[0.5, 0.5]).unwrap();
        assert_abs_diff_eq!(w[0], 200.0, epsilon = 1e-12);
        let w = weights(&ds, &[0.2, 0.8]).unwrap();
        assert_abs_diff_eq!(w[0], w[1], epsilon = 1e-12);
        assert!(matches!(weights(&ds, &[0.0, 0.5]), Err(Error::InvalidProbability(_))));
        assert!(matches!(weights(&ds, &[0.5, 1.0]), Err(Error::InvalidProbability(_))));
    }

    #[test]
    fn trial_estimation() {
        use PolState::*;
        let ds = CountDataset::new(vec![record(H, D, H, 100), record(H, D, V, 0), record(V, D, H, 50), record(V, D, V, 50)]).unwrap();
        let outside = CountDataset::new(vec![record(D, H, H, 1)]).unwrap();
        let small = Frame::<f64>::polarization(&[H, V]).unwrap();
        assert!(estimate_trials(&outside, &small, TrialsPolicy::Estimate).is_err());

        let frame = Frame::<f64>::standard();
        let est = estimate_trials(&ds, &frame, TrialsPolicy::Estimate).unwrap();
        assert!(est.records.iter().all(|r| r.trials == Some(200)));

        let partial = CountDataset::new(ds.records[..3].to_vec()).unwrap();
        assert!(matches!(estimate_trials(&partial, &frame, TrialsPolicy::Estimate), Err(Error::MissingConfiguration(_))));

        let recorded = CountDataset::new(ds.records.iter().map(|r| CountRecord { trials: Some(777), ..*r }).collect()).unwrap();
        let kept = estimate_trials(&recorded, &frame, TrialsPolicy::UseRecorded).unwrap();
        assert!(kept.records.iter().all(|r| r.trials == Some(777)));
        let redone = estimate_trials(&recorded, &frame, TrialsPolicy::Estimate).unwrap();
        assert!(redone.records.iter().all(|r| r.trials == Some(200)));
    }

    #[test]
    fn dataset_validation() {
        use PolState::*;
        assert!(CountDataset::new(vec![CountRecord { trials: Some(5), ..record(H, H, H, 6) }]).is_err());
        let ds = CountDataset::new(vec![record(H, H, H, 1), record(H, H, H, 2)]).unwrap();
        assert!(ds.aligned(&Frame::<f64>::standard()).is_err());
    }

    #[test]
    fn csv_and_json_round_trip() {
        let ds = simulate_counts(&ExperimentSpec { seed: 9, ..Default::default() }).unwrap();
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("i,j,k,n,N\n"));
        assert_eq!(text.lines().count(), 217);
        let back = CountDataset::read_csv(&buf[..]).unwrap();
        assert_eq!(back.records, ds.records);

        let json = ds.to_json().unwrap();
        assert_eq!(CountDataset::from_json(&json).unwrap(), ds);

        assert!(CountDataset::read_csv("a,b\n1,2\n".as_bytes()).is_err());
        assert!(CountDataset::read_csv("i,j,k,n,N\nH,H,Q,1,\n".as_bytes()).is_err());
        let with_n = CountDataset::read_csv("i,j,k,n,N\nH,V,D,3,10\n".as_bytes()).unwrap();
        assert_eq!(with_n.records[0].trials, Some(10));
    }

    #[test]
    fn simplex_projection() {
        assert_eq!(project_simplex(&[0.5, 0.5, 1.0], 2.0), vec![0.5, 0.5, 1.0]);
        let p = project_simplex(&[-1.0, 3.0, 0.2], 2.0);
        assert_abs_diff_eq!(p.iter().sum::<f64>(), 2.0, epsilon = 1e-15);
        assert_eq!(p, vec![0.0, 2.0, 0.0]);
        let p = project_simplex(&[1.0f64, 1.0, 1.0, 1.0], 2.0);
        assert!(p.iter().all(|&x| (x - 0.5).abs() < 1e-15));
    }

    #[test]
    fn mle_recovers_noiseless_superchannel() {
        let frame = Frame::standard();
        let m = random_superchannel(11);
        let p = probabilities(&m, &frame).unwrap();
        let r = mle_fit(&p, &frame, None, MleOptions { tol: 1e-12, ..Default::default() }).unwrap();
        assert!(r.superchannel.choi().distance(m.choi()) < 1e-6);
        assert_eq!(r.method, Method::Mle);
    }

    #[test]
    fn mle_beats_projected_linear_inversion() {
        let frame = Frame::standard();
        let m = random_superchannel(12);
        let mut g = rng(12);
        let p: Vec<f64> = probabilities(&m, &frame)
            .unwrap()
            .iter()
            .map(|&x| x + 0.05 * (rand::Rng::random::<f64>(&mut g) - 0.5))
            .collect();
        let lin = linear_inversion(&p, &frame, None).unwrap();
        assert!(lin.diagnostics.min_eigenvalue < 0.0);
        let mle = mle_fit(&p, &frame, None, MleOptions::default()).unwrap();
        let e = herm_eig(mle.superchannel.choi()).unwrap();
        assert!(e.min() > -1e-8);
        assert_abs_diff_eq!(mle.superchannel.trace(), 2.0, epsilon = 1e-6);

        let clipped = project_psd(lin.superchannel.choi()).unwrap();
        let feasible = clipped.scale(2.0 / clipped.trace().re);
        let x = crate::qmat::real::herm_to_coords(&feasible);
        let feasible_objective = super::linear::objective(frame.rows(), &p, None, &x);
        assert!(mle.objective <= feasible_objective + 1e-9);
    }

    #[test]
    fn mle_from_counts_reports_diagnostics() {
        let spec = ExperimentSpec { seed: 5, interaction: Interaction::H, ..Default::default() };
        let m = spec.superchannel::<f64>().unwrap();
        let ds = simulate_counts(&spec).unwrap();
        let r = mle_reconstruct(&ds, &Frame::standard(), MleOptions::default()).unwrap();
        assert!(r.diagnostics.converged);
        assert!(r.diagnostics.residual <= 1e-6);
        assert_eq!(r.diagnostics.frame_rank, 64);
        let f = crate::qmat::uhlmann_fidelity(r.superchannel.choi(), m.choi()).unwrap() / 4.0;
        assert!(f > 0.99);

        let json = serde_json::to_string(&r).unwrap();
        let back: ReconstructionResult<f64> = serde_json::from_str(&json).unwrap();
        assert_eq!(back.superchannel, r.superchannel);
        assert_eq!(back.diagnostics, r.diagnostics);
    }

    #[test]
    fn mle_iteration_cap_reports_best_iterate() {
        let spec = ExperimentSpec { seed: 6, ..Default::default() };
        let ds = simulate_counts(&spec).unwrap();
        let err = mle_reconstruct(&ds, &Frame::<f64>::standard(), MleOptions { tol: 1e-6, max_iter: 2 }).unwrap_err();
        match err {
            Error::SolverNotConverged { best, residual, .. } => {
                assert!(best.is_some());
                assert!(residual > 1e-6);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn method_parsing() {
        assert_eq!("MLE".parse::<Method>().unwrap(), Method::Mle);
        assert_eq!("linear".parse::<Method>().unwrap(), Method::Linear);
        assert!("bayes".parse::<Method>().is_err());
    }

    #[test]
    fn probabilities_reject_dimension_mismatch() {
        let frame = Frame::<f64>::standard();
        let m3 = Superchannel::new(M::identity(27).scale(3.0 / 27.0), 3).unwrap();
        assert!(probabilities(&m3, &frame).is_err());
    }
}
