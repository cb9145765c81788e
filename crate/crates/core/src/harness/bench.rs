//! Hot-path latency: one Bayes update plus one probe selection.

use std::hint::black_box;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{EstimatorConfig, ParticleEnsemble};
use crate::infotheory::{solve_xi, Criterion};
use crate::model::{DecayLaw, ExperimentKind, MeasurementModel, ReadoutModel};
use crate::protocol::{next_tau, Strategy};
use crate::simulator::{sample_counts, GroundTruth, RandomStream};

/// Reference per-particle cost of the embedded implementation, microseconds.
pub const REFERENCE_US_PER_PARTICLE: f64 = 0.255;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchPoint {
    pub particles: usize,
    pub mean_s: f64,
    pub median_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub points: Vec<BenchPoint>,
    /// Least-squares fit `median_s ~ slope * K + intercept`.
    pub slope_s_per_particle: f64,
    pub intercept_s: f64,
    pub r_squared: f64,
    pub reference_us_per_particle: f64,
}

impl BenchReport {
    /// Fitted time at `particles`, seconds.
    pub fn predicted(&self, particles: usize) -> f64 {
        self.slope_s_per_particle * particles as f64 + self.intercept_s
    }

    /// Reference time at `particles`, seconds.
    pub fn reference(&self, particles: usize) -> f64 {
        self.reference_us_per_particle * 1e-6 * particles as f64
    }
}

/// Times `repetitions` update+select steps per particle count on a warmed,
/// photon-count ensemble. Resampling is not part of the timed path.
pub fn latency_bench(counts: &[usize], repetitions: usize) -> Result<BenchReport> {
    if counts.len() < 2 {
        return Err(Error::invalid("latency_bench needs at least two particle counts"));
    }
    if repetitions == 0 {
        return Err(Error::invalid("latency_bench needs at least one repetition"));
    }
    let law = DecayLaw::new(2.5e-6, 2.0)?;
    let truth = GroundTruth::new(law, ExperimentKind::Ramsey);
    let readout = ReadoutModel::nv_center(10_000)?;
    let measurement = MeasurementModel::PhotonCount(readout);
    let xi = solve_xi(2.0, Criterion::Sensitivity)?;

    let mut points = Vec::with_capacity(counts.len());
    for &k in counts {
        let config = EstimatorConfig {
            particle_count: k,
            ..EstimatorConfig::default()
        };
        config.validate()?;
        let support = (config.prior_low, config.prior_high);
        let mut rng = RandomStream::new(k as u64);
        let ensemble = ParticleEnsemble::from_prior(&config, &mut rng)?;
        let tau = 0.7 * law.t_chi();
        let r = sample_counts(tau, &truth, &readout, &mut rng);
        let mut samples = Vec::with_capacity(repetitions);
        for i in 0..repetitions + repetitions / 10 + 1 {
            // fresh weights each step so the update never degenerates
            let mut e = ensemble.clone();
            let start = Instant::now();
            e.bayes_update(r, tau, law.beta(), &measurement)?;
            let next = next_tau(Strategy::AdaptiveSensitivity, &e, i, repetitions, Some(xi), support, &mut rng);
            let elapsed = start.elapsed().as_secs_f64();
            black_box(next);
            if i > repetitions / 10 {
                samples.push(elapsed);
            }
        }
        samples.sort_by(f64::total_cmp);
        let mean_s = samples.iter().sum::<f64>() / samples.len() as f64;
        let median_s = samples[samples.len() / 2];
        points.push(BenchPoint {
            particles: k,
            mean_s,
            median_s,
        });
    }
    let (slope, intercept, r2) = linear_fit(
        &points.iter().map(|p| p.particles as f64).collect::<Vec<_>>(),
        &points.iter().map(|p| p.median_s).collect::<Vec<_>>(),
    );
    Ok(BenchReport {
        points,
        slope_s_per_particle: slope,
        intercept_s: intercept,
        r_squared: r2,
        reference_us_per_particle: REFERENCE_US_PER_PARTICLE,
    })
}

/// Ordinary least squares; returns `(slope, intercept, r^2)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, intercept, r2)
}
