//! Particle-filter posterior over `T_chi`.
//!
//! The ensemble is a weighted set of candidate decay times. Each epoch multiplies
//! the weights by the outcome likelihood and renormalises; when the effective
//! sample size drops below `K * resample_threshold`, parents are drawn by
//! systematic resampling and jittered with the Liu-West kernel
//! `N(a x + (1 - a) mu, (1 - a^2) sigma^2)`.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{count_variance, MeasurementModel};

/// How the initial particle positions are laid out over the prior support.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PriorPlacement {
    /// Midpoints of `K` equal cells.
    #[default]
    Stratified,
    /// Independent uniform draws.
    Iid,
}

/// Variance of the Liu-West jitter kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResampleVariance {
    /// `(1 - a^2) sigma^2`: preserves the posterior mean and variance.
    #[default]
    Shrunk,
    /// Full posterior variance `sigma^2` around every shrunk location.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorConfig {
    pub particle_count: usize,
    pub prior_low: f64,
    pub prior_high: f64,
    pub liu_west_a: f64,
    pub resample_threshold: f64,
    pub rng_seed: u64,
    #[serde(default)]
    pub placement: PriorPlacement,
    #[serde(default)]
    pub resample_variance: ResampleVariance,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            particle_count: 200,
            prior_low: 0.1e-6,
            prior_high: 8e-6,
            liu_west_a: 0.98,
            resample_threshold: 0.5,
            rng_seed: 0,
            placement: PriorPlacement::Stratified,
            resample_variance: ResampleVariance::Shrunk,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.particle_count < 2 {
            return Err(Error::Config(format!(
                "particle_count must be at least 2, got {}",
                self.particle_count
            )));
        }
        if !(self.prior_low > 0.0 && self.prior_low < self.prior_high && self.prior_high.is_finite()) {
            return Err(Error::Config(format!(
                "prior support must satisfy 0 < low < high, got [{}, {}]",
                self.prior_low, self.prior_high
            )));
        }
        if !(self.liu_west_a > 0.0 && self.liu_west_a < 1.0) {
            return Err(Error::Config(format!("liu_west_a must lie in (0, 1), got {}", self.liu_west_a)));
        }
        if !(self.resample_threshold > 0.0 && self.resample_threshold < 1.0) {
            return Err(Error::Config(format!(
                "resample_threshold must lie in (0, 1), got {}",
                self.resample_threshold
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleEnsemble {
    positions: Vec<f64>,
    weights: Vec<f64>,
}

impl ParticleEnsemble {
    /// Builds an ensemble, normalising `weights`.
    pub fn new(positions: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if positions.is_empty() || positions.len() != weights.len() {
            return Err(Error::invalid(format!(
                "need matching non-empty positions/weights, got {} and {}",
                positions.len(),
                weights.len()
            )));
        }
        if let Some(x) = positions.iter().find(|x| !(**x > 0.0 && x.is_finite())) {
            return Err(Error::invalid(format!("particle positions must be positive, got {x}")));
        }
        if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::invalid("weights must be finite and non-negative"));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::invalid("weights sum to zero"));
        }
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(Self { positions, weights })
    }

    pub fn uniform(positions: Vec<f64>) -> Result<Self> {
        let k = positions.len();
        Self::new(positions, vec![1.0; k])
    }

    /// Fresh ensemble from the uniform prior on `[prior_low, prior_high]`.
    pub fn from_prior(config: &EstimatorConfig, rng: &mut impl Rng) -> Result<Self> {
        config.validate()?;
        let k = config.particle_count;
        let (lo, hi) = (config.prior_low, config.prior_high);
        let width = hi - lo;
        let positions: Vec<f64> = match config.placement {
            PriorPlacement::Stratified => (0..k)
                .map(|i| lo + width * (i as f64 + 0.5) / k as f64)
                .collect(),
            PriorPlacement::Iid => (0..k).map(|_| rng.random_range(lo..=hi)).collect(),
        };
        Ok(Self {
            positions,
            weights: vec![1.0 / k as f64; k],
        })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Posterior mean, the point estimate `T_hat`.
    pub fn mean(&self) -> f64 {
        self.positions
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| x * w)
            .sum()
    }

    /// `sum w x^2 - mu^2`, clamped at zero against round-off.
    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        let second: f64 = self
            .positions
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| x * x * w)
            .sum();
        (second - mu * mu).max(0.0)
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }

    /// Effective sample size `1 / sum w^2`, in `[1, K]`.
    pub fn effective_sample_size(&self) -> f64 {
        1.0 / self.weights.iter().map(|w| w * w).sum::<f64>()
    }

    /// Multiplies every weight by the likelihood of `outcome` at probe delay `tau`
    /// and renormalises.
    ///
    /// Likelihoods are rescaled by their largest value before multiplying, so the
    /// posterior only degenerates when every particle with mass assigns the outcome
    /// zero probability. After [`Error::DegeneratePosterior`] the weights are all
    /// zero and the ensemble must be discarded.
    pub fn bayes_update(
        &mut self,
        outcome: u64,
        tau: f64,
        beta: f64,
        measurement: &MeasurementModel,
    ) -> Result<()> {
        let mut scratch = std::mem::take(&mut self.weights);
        let result = self.update_weights(&mut scratch, outcome, tau, beta, measurement);
        self.weights = scratch;
        result
    }

    fn update_weights(
        &self,
        weights: &mut [f64],
        outcome: u64,
        tau: f64,
        beta: f64,
        measurement: &MeasurementModel,
    ) -> Result<()> {
        if !(beta > 0.0) {
            return Err(Error::invalid(format!("beta must be positive, got {beta}")));
        }
        match measurement {
            MeasurementModel::SingleShot => {
                let sign = match outcome {
                    0 => 1.0,
                    1 => -1.0,
                    other => {
                        return Err(Error::invalid(format!("binary outcome must be 0 or 1, got {other}")))
                    }
                };
                let mut peak = 0.0f64;
                for (w, &x) in weights.iter_mut().zip(&self.positions) {
                    let c = coherence(tau, x, beta);
                    let lik = 0.5 * (1.0 + sign * c);
                    *w *= lik;
                    peak = peak.max(*w);
                }
                normalize(weights, peak)
            }
            MeasurementModel::PhotonCount(readout) => {
                let n = readout.repetitions();
                if outcome > n {
                    return Err(Error::invalid(format!("count {outcome} exceeds repetitions {n}")));
                }
                let scale = 1.0 / (2.0 * count_variance(outcome, n));
                let a = n as f64 * readout.alpha();
                let av = a * readout.visibility();
                let r = outcome as f64;
                // log-likelihood up to a particle-independent constant
                let mut best = f64::NEG_INFINITY;
                for (w, &x) in weights.iter().zip(&self.positions) {
                    if *w > 0.0 {
                        let d = r - (a + av * coherence(tau, x, beta));
                        best = best.max(-d * d * scale);
                    }
                }
                if !best.is_finite() {
                    return Err(Error::DegeneratePosterior { epoch: None });
                }
                let mut peak = 0.0f64;
                for (w, &x) in weights.iter_mut().zip(&self.positions) {
                    let d = r - (a + av * coherence(tau, x, beta));
                    *w *= (-d * d * scale - best).exp();
                    peak = peak.max(*w);
                }
                normalize(weights, peak)
            }
        }
    }

    /// Resamples when the effective sample size falls below `K * resample_threshold`.
    /// Returns whether resampling happened.
    pub fn maybe_resample(&mut self, config: &EstimatorConfig, rng: &mut impl Rng) -> bool {
        if self.effective_sample_size() >= self.len() as f64 * config.resample_threshold {
            return false;
        }
        self.liu_west_resample(config.liu_west_a, config.resample_variance, rng);
        true
    }

    /// Unconditional Liu-West resampling with shrinkage `a` in `(0, 1]`.
    ///
    /// Parents are picked by systematic resampling; each child is drawn from a
    /// normal around `a * parent + (1 - a) * mean`, redrawing non-positive values.
    pub fn liu_west_resample(&mut self, a: f64, variance: ResampleVariance, rng: &mut impl Rng) {
        assert!(a > 0.0 && a <= 1.0, "Liu-West parameter must lie in (0, 1]");
        let k = self.len();
        let mu = self.mean();
        let var = self.variance();
        let kernel_var = match variance {
            ResampleVariance::Shrunk => (1.0 - a * a) * var,
            ResampleVariance::Full => var,
        };
        let parents = systematic_indices(&self.weights, rng.random::<f64>());
        let sd = kernel_var.max(0.0).sqrt();
        let mut positions = Vec::with_capacity(k);
        for i in parents {
            let centre = a * self.positions[i] + (1.0 - a) * mu;
            let x = if sd > 0.0 {
                let normal = Normal::new(centre, sd).expect("finite kernel");
                loop {
                    let x = normal.sample(rng);
                    if x > 0.0 {
                        break x;
                    }
                }
            } else {
                centre
            };
            positions.push(x);
        }
        self.positions = positions;
        self.weights = vec![1.0 / k as f64; k];
    }
}

#[inline]
fn coherence(tau: f64, t_chi: f64, beta: f64) -> f64 {
    (-crate::model::stretched_power(tau / t_chi, beta)).exp()
}

fn normalize(weights: &mut [f64], peak: f64) -> Result<()> {
    if !(peak > 0.0) {
        return Err(Error::DegeneratePosterior { epoch: None });
    }
    // rescale first so the sum cannot underflow
    let inv_peak = 1.0 / peak;
    let total: f64 = weights.iter().map(|w| w * inv_peak).sum();
    let factor = inv_peak / total;
    for w in weights.iter_mut() {
        *w *= factor;
    }
    Ok(())
}

/// Systematic resampling: `K` evenly spaced pointers offset by `u0 / K`.
pub fn systematic_indices(weights: &[f64], u0: f64) -> Vec<usize> {
    let k = weights.len();
    let step = 1.0 / k as f64;
    let mut out = Vec::with_capacity(k);
    let mut cumulative = weights[0];
    let mut j = 0;
    for i in 0..k {
        let u = (u0 + i as f64) * step;
        while u > cumulative && j + 1 < k {
            j += 1;
            cumulative += weights[j];
        }
        out.push(j);
    }
    out
}
