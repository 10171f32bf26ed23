use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use superchan::diamond::ic_norm_with_certificate;
use superchan::simulator::{default_tau_grid, exact_probabilities, ic_norm_sweep, simulate_counts, MEASURED_TAUS};
use superchan::superchannel::{
    average_effective_map, average_initial_state, canonical_angles, optimize_prep_on, OptimizeMode, PrepOptimum,
};
use superchan::tomography::{
    estimate_trials, frequencies, hedge, linear_inversion, mle_fit, weights, Method, MleOptions, TrialsPolicy,
};
use superchan::{
    CMatrix64, Channel64, CountDataset, DensityMatrix64, DiamondOptions, Frame64, Interaction, ReconstructionResult64,
    Superchannel64,
};

use crate::config::{RunConfig, WeightMode};
use crate::error::CliError;

type CliResult<T> = Result<T, CliError>;

const NEGATIVE_EIGENVALUE_WARNING: f64 = -1e-6;

fn create_out_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::output(dir, e))
}

fn write_file(path: &Path, write: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> CliResult<()> {
    let file = File::create(path).map_err(|e| CliError::output(path, e))?;
    let mut w = BufWriter::new(file);
    write(&mut w).and_then(|_| w.flush()).map_err(|e| CliError::output(path, e))
}

fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::output(path, e))?;
    write_file(path, |w| writeln!(w, "{text}"))
}

fn frame(cfg: &RunConfig) -> CliResult<Frame64> {
    Frame64::polarization(&cfg.experiment.frame_states).map_err(CliError::compute("frame"))
}

/// Files written by `simulate`.
#[derive(Debug)]
pub struct SimulateOutput {
    pub counts_csv: PathBuf,
    pub counts_json: PathBuf,
    pub truth: PathBuf,
    pub probabilities: Option<PathBuf>,
}

pub fn simulate(cfg: &RunConfig) -> CliResult<SimulateOutput> {
    let spec = &cfg.experiment;
    let mut ds = simulate_counts(spec).map_err(CliError::compute("simulate"))?;
    ds.beta = cfg.beta;
    ds.outcomes = cfg.outcomes;
    let truth = spec.superchannel::<f64>().map_err(CliError::compute("superchannel"))?;

    create_out_dir(&cfg.out)?;
    let out = SimulateOutput {
        counts_csv: cfg.out.join("counts.csv"),
        counts_json: cfg.out.join("counts.json"),
        truth: cfg.out.join("truth.json"),
        probabilities: spec.exact.then(|| cfg.out.join("probabilities.csv")),
    };
    let file = File::create(&out.counts_csv).map_err(|e| CliError::output(&out.counts_csv, e))?;
    ds.write_csv(BufWriter::new(file)).map_err(|e| CliError::output(&out.counts_csv, e))?;
    let json = ds.to_json().map_err(|e| CliError::output(&out.counts_json, e))?;
    write_file(&out.counts_json, |w| writeln!(w, "{json}"))?;
    write_json(&out.truth, &truth)?;

    if let Some(path) = &out.probabilities {
        let (frame, p) = exact_probabilities::<f64>(spec).map_err(CliError::compute("probabilities"))?;
        let labels = frame.labels();
        write_file(path, |w| {
            writeln!(w, "i,j,k,p")?;
            for (b, p) in p.iter().enumerate() {
                let (i, j, k) = frame.triple(b);
                writeln!(w, "{},{},{},{p:e}", labels[i], labels[j], labels[k])?;
            }
            Ok(())
        })?;
    }
    println!(
        "simulated {} configurations (tau = {:.4}, target {}, seed {}) into {}",
        ds.records.len(),
        spec.tangle(),
        spec.interaction,
        spec.seed,
        cfg.out.display()
    );
    Ok(out)
}

pub fn read_dataset(path: &Path) -> CliResult<CountDataset> {
    let context = path.display().to_string();
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if is_json {
        let text = fs::read_to_string(path).map_err(|e| CliError::Data(format!("{context}: {e}")))?;
        CountDataset::from_json(&text).map_err(CliError::data(context))
    } else {
        let file = File::open(path).map_err(|e| CliError::Data(format!("{context}: {e}")))?;
        CountDataset::read_csv(file).map_err(CliError::data(context))
    }
}

/// Accepts either a bare superchannel or a reconstruction result.
pub fn read_superchannel(path: &Path) -> CliResult<Superchannel64> {
    let context = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|e| CliError::Data(format!("{context}: {e}")))?;
    if let Ok(result) = serde_json::from_str::<ReconstructionResult64>(&text) {
        return Ok(result.superchannel);
    }
    serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{context}: {e}")))
}

#[derive(Serialize)]
struct ReconstructionReport<'a> {
    #[serde(flatten)]
    result: &'a ReconstructionResult64,
    beta: f64,
    weights: WeightMode,
    #[serde(skip_serializing_if = "Option::is_none")]
    truth_error: Option<f64>,
}

pub fn reconstruct(cfg: &RunConfig, dataset: &Path, truth: Option<&Path>) -> CliResult<ReconstructionResult64> {
    let frame = frame(cfg)?;
    let ds = read_dataset(dataset)?;
    let ds = ds.with_hedging(cfg.beta, cfg.outcomes).map_err(CliError::compute("hedging"))?;
    let ds = estimate_trials(&ds, &frame, TrialsPolicy::UseRecorded).map_err(CliError::data("trial counts"))?;
    let ds = CountDataset { records: ds.aligned(&frame).map_err(CliError::data("dataset does not match the frame"))?, ..ds };
    let hedged: Vec<f64> = hedge(&ds).map_err(CliError::data("hedging"))?;
    let w = match cfg.weights {
        WeightMode::Statistical => Some(weights(&ds, &hedged).map_err(CliError::data("weights"))?),
        WeightMode::Uniform => None,
    };
    let result = match cfg.method {
        Method::Linear => {
            let p: Vec<f64> = frequencies(&ds).map_err(CliError::data("frequencies"))?;
            linear_inversion(&p, &frame, w.as_deref()).map_err(CliError::compute("linear inversion"))?
        }
        Method::Mle => {
            let opts = MleOptions { tol: cfg.mle_tol, max_iter: cfg.mle_max_iter };
            mle_fit(&hedged, &frame, w.as_deref(), opts).map_err(CliError::compute("maximum-likelihood fit"))?
        }
    };
    let diag = &result.diagnostics;
    if diag.min_eigenvalue < NEGATIVE_EIGENVALUE_WARNING {
        let note = match cfg.method {
            Method::Linear => "the estimate is not completely positive; consider --method mle",
            Method::Mle => "the constrained fit removed it",
        };
        eprintln!("warning: unconstrained estimate has eigenvalue {:.3e}; {note}", diag.min_eigenvalue);
    }
    let truth_error = match truth {
        Some(path) => Some(read_superchannel(path)?.choi().distance(result.superchannel.choi())),
        None => None,
    };

    create_out_dir(&cfg.out)?;
    let path = cfg.out.join("reconstruction.json");
    write_json(&path, &ReconstructionReport { result: &result, beta: cfg.beta, weights: cfg.weights, truth_error })?;
    println!(
        "{} reconstruction: objective {:.6e}, {} iterations, residual {:.2e}, frame rank {}",
        cfg.method_label(),
        result.objective,
        diag.iterations,
        diag.residual,
        diag.frame_rank
    );
    if let Some(e) = truth_error {
        println!("Frobenius distance to the supplied truth: {e:.3e}");
    }
    Ok(result)
}

impl RunConfig {
    fn method_label(&self) -> &'static str {
        match self.method {
            Method::Linear => "linear",
            Method::Mle => "mle",
        }
    }
}

#[derive(Debug, Serialize)]
pub struct PrepPoint {
    pub theta: f64,
    pub phi: f64,
    pub f: f64,
}

impl PrepPoint {
    fn from_optimum(o: &PrepOptimum<f64>) -> Self {
        let (theta, phi) = canonical_angles(o.theta, o.phi);
        Self { theta, phi, f: o.f }
    }
}

#[derive(Debug, Serialize)]
pub struct AnalysisReport {
    pub ic_norm: f64,
    pub ic_norm_bounds: [f64; 2],
    pub distinguish_probability: f64,
    pub average_initial_state: DensityMatrix64,
    pub average_effective_map: Channel64,
    pub target: Interaction,
    pub argmax: PrepPoint,
    pub argmin: PrepPoint,
    pub skipped_points: usize,
    pub surface: PathBuf,
}

pub fn analyze(cfg: &RunConfig, input: &Path, pauli: bool) -> CliResult<AnalysisReport> {
    let m = read_superchannel(input)?;
    let opts = DiamondOptions::with_tol(cfg.diamond_tol);
    let (ic, cert) = ic_norm_with_certificate(&m, opts).map_err(CliError::compute("IC-norm"))?;
    let rho = average_initial_state(&m).map_err(CliError::compute("average initial state"))?;
    let map = average_effective_map(&m).map_err(CliError::compute("average effective map"))?;
    let target = cfg.experiment.interaction;
    let u = target.target_unitary::<f64>();
    let best = optimize_prep_on(&m, &u, OptimizeMode::Max, cfg.grid).map_err(CliError::compute("F_prep maximum"))?;
    let worst = optimize_prep_on(&m, &u, OptimizeMode::Min, cfg.grid).map_err(CliError::compute("F_prep minimum"))?;

    create_out_dir(&cfg.out)?;
    let surface_path = cfg.out.join("fprep_surface.csv");
    let file = File::create(&surface_path).map_err(|e| CliError::output(&surface_path, e))?;
    best.surface.write_csv(BufWriter::new(file)).map_err(|e| CliError::output(&surface_path, e))?;

    let report = AnalysisReport {
        ic_norm: ic,
        ic_norm_bounds: [0.5 * cert.lower, 0.5 * cert.upper],
        distinguish_probability: 0.5 * (1.0 + ic),
        average_initial_state: rho,
        average_effective_map: map,
        target,
        argmax: PrepPoint::from_optimum(&best),
        argmin: PrepPoint::from_optimum(&worst),
        skipped_points: best.surface.skipped().count(),
        surface: surface_path,
    };
    write_json(&cfg.out.join("report.json"), &report)?;
    println!("IC-norm {ic:.6} (certified in [{:.6}, {:.6}])", report.ic_norm_bounds[0], report.ic_norm_bounds[1]);
    println!(
        "F_prep for target {target}: max {:.6} at (theta {:.4}, phi {:.4}), min {:.6} at (theta {:.4}, phi {:.4})",
        report.argmax.f, report.argmax.theta, report.argmax.phi, report.argmin.f, report.argmin.theta, report.argmin.phi
    );
    if pauli {
        let view = m.pauli_view().map_err(CliError::compute("Pauli view"))?;
        println!("Choi matrix in the {{H, V}} x {{I, X, Y, Z}} basis (real part):");
        print_matrix(&view);
    }
    Ok(report)
}

fn print_matrix(m: &CMatrix64) {
    for i in 0..m.rows() {
        let row: Vec<String> = (0..m.cols()).map(|j| format!("{:8.4}", m[(i, j)].re)).collect();
        println!("{}", row.join(" "));
    }
}

pub fn sweep(cfg: &RunConfig) -> CliResult<PathBuf> {
    let targets = if cfg.targets.is_empty() { Interaction::ALL.to_vec() } else { cfg.targets.clone() };
    let grid = if cfg.taus.is_empty() {
        default_tau_grid()
    } else {
        let mut g: Vec<f64> = cfg.taus.iter().copied().chain(MEASURED_TAUS).collect();
        g.sort_by(f64::total_cmp);
        g.dedup();
        g
    };
    let opts = DiamondOptions::with_tol(cfg.diamond_tol);
    let rows = ic_norm_sweep(&targets, &grid, cfg.experiment.state_purity_v, opts).map_err(CliError::compute("sweep"))?;
    create_out_dir(&cfg.out)?;
    let path = cfg.out.join("ic_sweep.csv");
    write_file(&path, |w| {
        writeln!(w, "tau,target,ic_norm")?;
        for r in &rows {
            writeln!(w, "{},{},{:e}", r.tau, r.target, r.ic_norm)?;
        }
        Ok(())
    })?;
    println!("{} points over {} targets written to {}", rows.len(), targets.len(), path.display());
    Ok(path)
}
