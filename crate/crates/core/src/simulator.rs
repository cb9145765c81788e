//! Ground-truth measurement generation.
//!
//! The simulated world is exactly binomial; the Gaussian count approximation is
//! only ever used on the inference side.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::model::{detection_probability, outcome_likelihood, BinaryOutcome, DecayLaw, ExperimentKind, ReadoutModel};

/// The decay law hidden from the estimator, and the experiment probing it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub law: DecayLaw,
    pub kind: ExperimentKind,
}

impl GroundTruth {
    pub fn new(law: DecayLaw, kind: ExperimentKind) -> Self {
        Self { law, kind }
    }
}

/// Independent substreams carved out of one replica seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamPurpose {
    Measurement = 0,
    Estimator = 1,
    Strategy = 2,
    Bootstrap = 3,
}

const PURPOSES: u64 = 4;

/// Counter-based random stream (ChaCha8).
///
/// Substreams use ChaCha's 64-bit stream id: `replica * 4 + purpose`. Two
/// replicas never share a keystream regardless of how they are scheduled.
#[derive(Debug, Clone)]
pub struct RandomStream {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    pub fn for_replica(seed: u64, replica: u64, purpose: StreamPurpose) -> Self {
        Self::with_stream(seed, replica * PURPOSES + purpose as u64)
    }

    fn with_stream(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Position in the keystream, in 32-bit words.
    pub fn counter(&self) -> u128 {
        self.rng.get_word_pos()
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// One projective shot after delay `tau`.
pub fn sample_single_shot(tau: f64, truth: &GroundTruth, rng: &mut impl Rng) -> BinaryOutcome {
    let p0 = outcome_likelihood(BinaryOutcome::Zero, tau, &truth.law);
    if rng.random::<f64>() < p0 {
        BinaryOutcome::Zero
    } else {
        BinaryOutcome::One
    }
}

/// Photon clicks summed over `R` repetitions, `Binomial(R, p_D)`.
pub fn sample_counts(tau: f64, truth: &GroundTruth, readout: &ReadoutModel, rng: &mut impl Rng) -> u64 {
    let p = detection_probability(tau, &truth.law, readout).clamp(0.0, 1.0);
    Binomial::new(readout.repetitions(), p)
        .expect("probability clamped to [0, 1]")
        .sample(rng)
}
