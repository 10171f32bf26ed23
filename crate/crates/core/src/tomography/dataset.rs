use std::collections::HashMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::frame::Frame;
use crate::channels::PolState;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const DEFAULT_BETA: f64 = 0.1;
pub const DEFAULT_OUTCOMES: usize = 4;

/// Counts for one (i, j, k) configuration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountRecord {
    pub i: PolState,
    pub j: PolState,
    pub k: PolState,
    pub n: u64,
    /// Number of trials, when known.
    #[serde(rename = "N")]
    pub trials: Option<u64>,
}

/// Coincidence counts for a tomography run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountDataset {
    pub records: Vec<CountRecord>,
    /// Hedging parameter β.
    #[serde(default = "default_beta")]
    pub beta: f64,
    /// Outcomes per measurement setting.
    #[serde(default = "default_outcomes")]
    pub outcomes: usize,
    /// Trials per configuration used to generate simulated data.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nominal_trials: Option<u64>,
}

fn default_beta() -> f64 {
    DEFAULT_BETA
}

fn default_outcomes() -> usize {
    DEFAULT_OUTCOMES
}

/// How `estimate_trials` treats records that already carry N.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TrialsPolicy {
    /// Keep recorded N; estimate only when some record lacks it.
    #[default]
    UseRecorded,
    /// Always re-estimate from complementary configurations.
    Estimate,
}

impl CountDataset {
    pub fn new(records: Vec<CountRecord>) -> Result<Self> {
        let ds = Self { records, beta: DEFAULT_BETA, outcomes: DEFAULT_OUTCOMES, nominal_trials: None };
        ds.validate()?;
        Ok(ds)
    }

    pub fn with_hedging(mut self, beta: f64, outcomes: usize) -> Result<Self> {
        self.beta = beta;
        self.outcomes = outcomes;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(Error::InvalidArgument(format!("hedging parameter beta must be positive, got {}", self.beta)));
        }
        if self.outcomes < 2 {
            return Err(Error::InvalidArgument(format!("outcome count K must be at least 2, got {}", self.outcomes)));
        }
        for r in &self.records {
            if let Some(big_n) = r.trials {
                if big_n == 0 || r.n > big_n {
                    return Err(Error::InvalidArgument(format!(
                        "record ({}, {}, {}) has n = {} and N = {big_n}",
                        r.i, r.j, r.k, r.n
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn has_trials(&self) -> bool {
        self.records.iter().all(|r| r.trials.is_some())
    }

    /// Reads the CSV form with header `i,j,k,n,N` (N may be empty).
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["i", "j", "k", "n", "N"] {
            return Err(Error::Parse(format!("expected header i,j,k,n,N, found {}", headers.iter().collect::<Vec<_>>().join(","))));
        }
        let records = rdr.deserialize().collect::<std::result::Result<Vec<CountRecord>, _>>()?;
        Self::new(records)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["i", "j", "k", "n", "N"])?;
        for r in &self.records {
            let trials = r.trials.map(|t| t.to_string()).unwrap_or_default();
            w.write_record([r.i.label(), r.j.label(), r.k.label(), &r.n.to_string(), &trials])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let ds: Self = serde_json::from_str(s)?;
        ds.validate()?;
        Ok(ds)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Records rearranged into frame order; every configuration must appear exactly once.
    pub fn aligned<T: Scalar>(&self, frame: &Frame<T>) -> Result<Vec<CountRecord>> {
        let mut slots: Vec<Option<CountRecord>> = vec![None; frame.len()];
        let idx = |s: PolState| {
            frame
                .index_of(s.label())
                .ok_or_else(|| Error::InvalidArgument(format!("state {s} is not part of the frame")))
        };
        for r in &self.records {
            let b = frame.element(idx(r.i)?, idx(r.j)?, idx(r.k)?);
            if slots[b].replace(*r).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate configuration ({}, {}, {})", r.i, r.j, r.k)));
            }
        }
        slots
            .into_iter()
            .enumerate()
            .map(|(b, r)| {
                r.ok_or_else(|| {
                    let (i, j, k) = frame.triple(b);
                    let l = frame.labels();
                    Error::MissingConfiguration(format!("({}, {}, {})", l[i], l[j], l[k]))
                })
            })
            .collect()
    }
}

/// Fills in N_ijk as the total count over {ρ_i, ρ_ī} × {ρ_k, ρ_k̄} with j fixed.
pub fn estimate_trials<T: Scalar>(ds: &CountDataset, frame: &Frame<T>, policy: TrialsPolicy) -> Result<CountDataset> {
    if policy == TrialsPolicy::UseRecorded && ds.has_trials() {
        return Ok(ds.clone());
    }
    let counts: HashMap<(PolState, PolState, PolState), u64> = ds.records.iter().map(|r| ((r.i, r.j, r.k), r.n)).collect();
    let complement = |s: PolState| -> Result<PolState> {
        let i = frame
            .index_of(s.label())
            .ok_or_else(|| Error::InvalidArgument(format!("state {s} is not part of the frame")))?;
        let c = frame
            .complement(i)
            .ok_or_else(|| Error::MissingConfiguration(format!("orthogonal partner of {s}")))?;
        frame.labels()[c].parse()
    };
    let mut out = ds.clone();
    for r in &mut out.records {
        let (ic, kc) = (complement(r.i)?, complement(r.k)?);
        let mut total = 0u64;
        for a in [r.i, ic] {
            for b in [r.k, kc] {
                total += counts
                    .get(&(a, r.j, b))
                    .ok_or_else(|| Error::MissingConfiguration(format!("({a}, {}, {b})", r.j)))?;
            }
        }
        r.trials = Some(total);
    }
    Ok(out)
}

/// Hedged probabilities (n + β) / (N + Kβ), in record order.
pub fn hedge<T: Scalar>(ds: &CountDataset) -> Result<Vec<T>> {
    ds.validate()?;
    let beta = ds.beta;
    let k = ds.outcomes as f64;
    ds.records
        .iter()
        .map(|r| {
            let big_n = r.trials.ok_or_else(|| {
                Error::InvalidArgument(format!("record ({}, {}, {}) has no trial count; estimate trials first", r.i, r.j, r.k))
            })?;
            Ok(T::lit((r.n as f64 + beta) / (big_n as f64 + k * beta)))
        })
        .collect()
}

/// Raw frequencies n / N, in record order.
pub fn frequencies<T: Scalar>(ds: &CountDataset) -> Result<Vec<T>> {
    ds.records
        .iter()
        .map(|r| match r.trials {
            Some(big_n) if big_n > 0 => Ok(T::lit(r.n as f64 / big_n as f64)),
            _ => Err(Error::InvalidArgument(format!("record ({}, {}, {}) has no trial count", r.i, r.j, r.k))),
        })
        .collect()
}

/// w = sqrt(N / (p (1 − p))), in record order.
pub fn weights<T: Scalar>(ds: &CountDataset, p: &[T]) -> Result<Vec<T>> {
    if p.len() != ds.records.len() {
        return Err(Error::ShapeMismatch(format!("{} probabilities for {} records", p.len(), ds.records.len())));
    }
    ds.records
        .iter()
        .zip(p)
        .map(|(r, &p)| {
            if !(p > T::zero() && p < T::one()) {
                return Err(Error::InvalidProbability(p.to_f64_lossy()));
            }
            let big_n = r.trials.ok_or_else(|| Error::InvalidArgument("missing trial count".into()))?;
            Ok((T::lit(big_n as f64) / (p * (T::one() - p))).sqrt())
        })
        .collect()
}
