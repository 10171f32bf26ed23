//! End-to-end runs: simulate, serialize, reconstruct, analyze.

use superchan::simulator::{exact_probabilities, simulate_counts, theta_for_tangle};
use superchan::superchannel::{optimize_prep_on, prep_fidelity, OptimizeMode, PrepGrid};
use superchan::tomography::{mle_reconstruct, Method, MleOptions};
use superchan::{
    ic_norm, CountDataset, DiamondOptions, ExperimentSpec, Frame64, Interaction, PolState, ReconstructionResult64,
    Superchannel64,
};

fn fidelity(a: &Superchannel64, b: &Superchannel64) -> f64 {
    superchan::qmat::uhlmann_fidelity(a.choi(), b.choi()).unwrap() / 4.0
}

#[test]
fn counts_survive_csv_and_json_round_trips() {
    let ds = simulate_counts(&ExperimentSpec { seed: 4, ..Default::default() }).unwrap();
    assert_eq!(ds.records.len(), 216);
    let mut buf = Vec::new();
    ds.write_csv(&mut buf).unwrap();
    let from_csv = CountDataset::read_csv(buf.as_slice()).unwrap();
    assert_eq!(from_csv.records, ds.records);
    let from_json = CountDataset::from_json(&ds.to_json().unwrap()).unwrap();
    assert_eq!(from_json, ds);
}

#[test]
fn simulated_counts_reconstruct_the_true_superchannel() {
    let spec = ExperimentSpec { theta: theta_for_tangle(0.757).unwrap(), interaction: Interaction::H, seed: 8, ..Default::default() };
    let truth = spec.superchannel::<f64>().unwrap();
    let ds = simulate_counts(&spec).unwrap();
    let fit = mle_reconstruct(&ds, &Frame64::standard(), MleOptions::default()).unwrap();
    assert_eq!(fit.method, Method::Mle);
    assert!(fit.diagnostics.converged);
    assert_eq!(fit.diagnostics.frame_rank, 64);
    assert!(fidelity(&fit.superchannel, &truth) > 0.99);

    let json = serde_json::to_string(&fit).unwrap();
    let back: ReconstructionResult64 = serde_json::from_str(&json).unwrap();
    assert!(back.superchannel.choi().distance(fit.superchannel.choi()) < 1e-15);

    let ic_true = ic_norm(&truth, DiamondOptions::default()).unwrap();
    let ic_fit = ic_norm(&fit.superchannel, DiamondOptions::default()).unwrap();
    assert!((ic_true - ic_fit).abs() < 0.05, "{ic_true} vs {ic_fit}");
}

#[test]
fn exact_counts_track_probabilities() {
    let spec = ExperimentSpec { exact: true, trials_per_config: 100_000, ..Default::default() };
    let ds = simulate_counts(&spec).unwrap();
    let (_, p) = exact_probabilities::<f64>(&spec).unwrap();
    for (r, p) in ds.records.iter().zip(&p) {
        assert_eq!(r.n, (p * 100_000.0).round() as u64);
    }
}

#[test]
fn reduced_frames_are_rejected_for_reconstruction() {
    let spec = ExperimentSpec { frame_states: vec![PolState::H, PolState::V, PolState::D, PolState::A], ..Default::default() };
    let ds = simulate_counts(&spec).unwrap();
    let frame = Frame64::polarization(&spec.frame_states).unwrap();
    assert!(!frame.is_informationally_complete());
    assert!(matches!(
        mle_reconstruct(&ds, &frame, MleOptions::default()),
        Err(superchan::Error::RankDeficient { .. })
    ));
}

#[test]
fn correlated_superchannel_has_a_nontrivial_preparation_landscape() {
    let spec = ExperimentSpec { theta: theta_for_tangle(0.423).unwrap(), ..Default::default() };
    let m = spec.superchannel::<f64>().unwrap();
    let target = Interaction::Z.target_unitary();
    let grid = PrepGrid { n_theta: 16, n_phi: 32 };
    let hi = optimize_prep_on(&m, &target, OptimizeMode::Max, grid).unwrap();
    let lo = optimize_prep_on(&m, &target, OptimizeMode::Min, grid).unwrap();
    assert!(hi.f > lo.f);
    let (smin, smax) = hi.surface.range().unwrap();
    assert!(hi.f >= smax - 1e-12 && lo.f <= smin + 1e-12);
    let direct = prep_fidelity(&m, &superchan::superchannel::bloch_state(hi.theta, hi.phi), &target).unwrap();
    assert!((direct - hi.f).abs() < 1e-12);
}
