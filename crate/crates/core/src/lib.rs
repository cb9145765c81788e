//! Online adaptive Bayesian estimation of qubit decoherence timescales.
//!
//! The crate covers the whole loop: decay-law likelihoods ([`model`]), Fisher
//! information and probing-time optimisation ([`infotheory`]), a particle-filter
//! posterior with Liu-West resampling ([`estimator`]), a stochastic measurement
//! simulator ([`simulator`]), the adaptive epoch loop and its probing strategies
//! ([`protocol`]), and the batch runner / benchmark / persistence layer
//! ([`harness`]).
//!
//! All times are plain `f64` seconds.

pub mod error;
pub mod estimator;
pub mod harness;
pub mod infotheory;
pub mod maximize;
pub mod model;
pub mod protocol;
pub mod simulator;

pub use error::{Error, Result};
pub use estimator::{EstimatorConfig, ParticleEnsemble, PriorPlacement, ResampleVariance};
pub use infotheory::{Criterion, XiTable};
pub use model::{BinaryOutcome, DecayLaw, ExperimentKind, MeasurementModel, ReadoutModel};
pub use protocol::{EpochRecord, Strategy};
pub use simulator::{GroundTruth, RandomStream};
