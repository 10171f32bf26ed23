//! Simulation and reconstruction of quantum superchannels: qubits initially
//! correlated with an environment, their tomography, and the operational
//! measures of those correlations.
//!
//! Numerical code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the scalar to `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channels;
pub mod diamond;
pub mod error;
pub mod qmat;
pub mod scalar;
pub mod simulator;
pub mod superchannel;
pub mod tomography;

pub use channels::{Channel, DensityMatrix, Gate, PolState};
pub use diamond::{diamond_norm, distinguish_probability, ic_norm, DiamondOptions, HermitianPreservingMap};
pub use error::{BestIterate, Error, Result};
pub use qmat::CMatrix;
pub use scalar::Scalar;
pub use simulator::{ExperimentSpec, Interaction};
pub use superchannel::{Preparation, Superchannel};
pub use tomography::{CountDataset, Frame, ReconstructionResult};

pub type CMatrix64 = qmat::CMatrix<f64>;
pub type CMatrix32 = qmat::CMatrix<f32>;
pub type DensityMatrix64 = channels::DensityMatrix<f64>;
pub type Channel64 = channels::Channel<f64>;
pub type Superchannel64 = superchannel::Superchannel<f64>;
pub type Preparation64 = superchannel::Preparation<f64>;
pub type Frame64 = tomography::Frame<f64>;
pub type HermitianPreservingMap64 = diamond::HermitianPreservingMap<f64>;
pub type ReconstructionResult64 = tomography::ReconstructionResult<f64>;
