//! The adaptive epoch loop: pick a delay, measure, update, maybe resample, record.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{EstimatorConfig, ParticleEnsemble};
use crate::infotheory::{Criterion, XiTable};
use crate::model::{sequence_duration, ExperimentKind, MeasurementModel};
use crate::simulator::{sample_counts, sample_single_shot, GroundTruth, RandomStream, StreamPurpose};

/// How the probe delay is chosen each epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// `tau = xi_F * posterior mean`.
    AdaptiveVariance,
    /// `tau = xi_FT * posterior mean`.
    AdaptiveSensitivity,
    /// Uniform draw over the prior support.
    RandomTau,
    /// Ascending equally spaced sweep over the prior support.
    SweepTau,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::AdaptiveVariance,
        Strategy::AdaptiveSensitivity,
        Strategy::RandomTau,
        Strategy::SweepTau,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::AdaptiveVariance => "adaptive-variance",
            Strategy::AdaptiveSensitivity => "adaptive-sensitivity",
            Strategy::RandomTau => "random-tau",
            Strategy::SweepTau => "sweep-tau",
        }
    }

    pub fn criterion(self) -> Option<Criterion> {
        match self {
            Strategy::AdaptiveVariance => Some(Criterion::Variance),
            Strategy::AdaptiveSensitivity => Some(Criterion::Sensitivity),
            Strategy::RandomTau | Strategy::SweepTau => None,
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown strategy `{s}`")))
    }
}

/// One iteration of the loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub tau: f64,
    /// Photon count, or the shot bit in single-shot mode.
    pub outcome: u64,
    pub cumulative_probing_time: f64,
    pub estimate: f64,
    pub estimate_std: f64,
    pub resampled: bool,
}

/// Executes `repetitions` identical sequences at delay `tau` and returns the summed
/// outcome. The simulator implements it; a hardware driver would too.
pub trait MeasurementBackend {
    fn execute(&mut self, tau: f64, repetitions: u64) -> Result<u64>;
}

pub struct SimulatedBackend {
    truth: GroundTruth,
    measurement: MeasurementModel,
    rng: RandomStream,
}

impl SimulatedBackend {
    pub fn new(truth: GroundTruth, measurement: MeasurementModel, rng: RandomStream) -> Self {
        Self {
            truth,
            measurement,
            rng,
        }
    }
}

impl MeasurementBackend for SimulatedBackend {
    fn execute(&mut self, tau: f64, repetitions: u64) -> Result<u64> {
        if repetitions != self.measurement.repetitions() {
            return Err(Error::invalid(format!(
                "backend configured for {} repetitions, asked for {repetitions}",
                self.measurement.repetitions()
            )));
        }
        Ok(match &self.measurement {
            MeasurementModel::SingleShot => sample_single_shot(tau, &self.truth, &mut self.rng).bit(),
            MeasurementModel::PhotonCount(readout) => sample_counts(tau, &self.truth, readout, &mut self.rng),
        })
    }
}

/// Replays previously logged outcomes in order.
#[derive(Debug, Clone)]
pub struct ReplayBackend {
    outcomes: Vec<u64>,
    cursor: usize,
}

impl ReplayBackend {
    pub fn new(outcomes: Vec<u64>) -> Self {
        Self { outcomes, cursor: 0 }
    }

    pub fn from_records(records: &[EpochRecord]) -> Self {
        Self::new(records.iter().map(|r| r.outcome).collect())
    }
}

impl MeasurementBackend for ReplayBackend {
    fn execute(&mut self, _tau: f64, _repetitions: u64) -> Result<u64> {
        let out = self
            .outcomes
            .get(self.cursor)
            .copied()
            .ok_or(Error::ReplayExhausted { consumed: self.cursor })?;
        self.cursor += 1;
        Ok(out)
    }
}

/// Everything one protocol run needs besides the backend and random streams.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub strategy: Strategy,
    pub kind: ExperimentKind,
    pub beta: f64,
    pub measurement: MeasurementModel,
    pub estimator: EstimatorConfig,
    pub epochs: usize,
    /// Quantise every executed delay onto the 8-bit AWG grid.
    pub hardware_emulation: bool,
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        self.estimator.validate()?;
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::Config(format!("beta must be positive, got {}", self.beta)));
        }
        if let Some(c) = self.strategy.criterion() {
            if !c.is_valid_for(self.beta) {
                return Err(Error::Config(format!(
                    "strategy {} needs beta > 1, got {}",
                    self.strategy, self.beta
                )));
            }
        }
        Ok(())
    }

    /// Lower clamp for every delay: the prior's lower edge.
    pub fn tau_min(&self) -> f64 {
        self.estimator.prior_low
    }

    pub fn tau_max(&self) -> f64 {
        self.estimator.prior_high
    }
}

/// Delay for the next epoch. Adaptive strategies look only at the posterior mean.
pub fn next_tau(
    strategy: Strategy,
    ensemble: &ParticleEnsemble,
    epoch_index: usize,
    total_epochs: usize,
    xi: Option<f64>,
    support: (f64, f64),
    rng: &mut impl Rng,
) -> f64 {
    let (lo, hi) = support;
    match strategy {
        Strategy::AdaptiveVariance | Strategy::AdaptiveSensitivity => {
            let xi = xi.expect("adaptive strategy needs xi");
            (xi * ensemble.mean()).clamp(lo, hi)
        }
        Strategy::RandomTau => rng.random_range(lo..=hi),
        Strategy::SweepTau => {
            if total_epochs <= 1 {
                lo
            } else {
                lo + (hi - lo) * epoch_index as f64 / (total_epochs - 1) as f64
            }
        }
    }
}

/// Snap `tau` onto a uniform `levels`-point grid over `[lo, hi]`, rounding half up.
/// Returns the grid index (what the AWG receives) and the executed delay.
pub fn quantize_tau(tau: f64, lo: f64, hi: f64, levels: usize) -> (u8, f64) {
    assert!((2..=256).contains(&levels) && hi > lo);
    let top = (levels - 1) as f64;
    let index = ((tau - lo) / (hi - lo) * top + 0.5).floor().clamp(0.0, top);
    (index as u8, lo + (hi - lo) * index / top)
}

/// A validated protocol with its probing ratio resolved.
#[derive(Debug, Clone)]
pub struct Protocol {
    config: ProtocolConfig,
    xi: Option<f64>,
}

impl Protocol {
    pub fn new(config: ProtocolConfig, xi_table: &XiTable) -> Result<Self> {
        config.validate()?;
        let xi = match config.strategy.criterion() {
            Some(c) => Some(
                xi_table
                    .get(c, config.beta)
                    .map(Ok)
                    .unwrap_or_else(|| crate::infotheory::solve_xi(config.beta, c))?,
            ),
            None => None,
        };
        Ok(Self { config, xi })
    }

    pub fn config(&self) -> &ProtocolConfig {
        &self.config
    }

    pub fn xi(&self) -> Option<f64> {
        self.xi
    }

    /// Runs all epochs against `backend`. Estimator and strategy randomness come from
    /// the `(seed, replica)` substreams.
    pub fn run(&self, backend: &mut impl MeasurementBackend, seed: u64, replica: u64) -> Result<Vec<EpochRecord>> {
        let cfg = &self.config;
        let mut est_rng = RandomStream::for_replica(seed, replica, StreamPurpose::Estimator);
        let mut strat_rng = RandomStream::for_replica(seed, replica, StreamPurpose::Strategy);
        let mut ensemble = ParticleEnsemble::from_prior(&cfg.estimator, &mut est_rng)?;
        let support = (cfg.tau_min(), cfg.tau_max());
        let repetitions = cfg.measurement.repetitions();

        let mut records = Vec::with_capacity(cfg.epochs);
        let mut cumulative = 0.0;
        for epoch in 0..cfg.epochs {
            let mut tau = next_tau(cfg.strategy, &ensemble, epoch, cfg.epochs, self.xi, support, &mut strat_rng);
            if cfg.hardware_emulation {
                tau = quantize_tau(tau, support.0, support.1, 256).1;
            }
            let outcome = backend.execute(tau, repetitions)?;
            ensemble
                .bayes_update(outcome, tau, cfg.beta, &cfg.measurement)
                .map_err(|e| match e {
                    Error::DegeneratePosterior { .. } => Error::DegeneratePosterior { epoch: Some(epoch) },
                    other => other,
                })?;
            let resampled = ensemble.maybe_resample(&cfg.estimator, &mut est_rng);
            cumulative += repetitions as f64 * sequence_duration(tau, cfg.kind);
            records.push(EpochRecord {
                epoch,
                tau,
                outcome,
                cumulative_probing_time: cumulative,
                estimate: ensemble.mean(),
                estimate_std: ensemble.std_dev(),
                resampled,
            });
        }
        Ok(records)
    }
}

/// Runs one simulated replica: measurement noise from the replica's measurement
/// substream, everything else as in [`Protocol::run`].
pub fn run_protocol(
    config: &ProtocolConfig,
    truth: &GroundTruth,
    xi_table: &XiTable,
    seed: u64,
    replica: u64,
) -> Result<Vec<EpochRecord>> {
    let protocol = Protocol::new(*config, xi_table)?;
    let mut backend = SimulatedBackend::new(
        *truth,
        config.measurement,
        RandomStream::for_replica(seed, replica, StreamPurpose::Measurement),
    );
    protocol.run(&mut backend, seed, replica)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DecayLaw, ReadoutModel};

    const US: f64 = 1e-6;

    fn ensemble_with_mean(mean: f64) -> ParticleEnsemble {
        ParticleEnsemble::uniform(vec![mean - 0.5 * US, mean + 0.5 * US]).unwrap()
    }

    fn config(strategy: Strategy, measurement: MeasurementModel, epochs: usize) -> ProtocolConfig {
        ProtocolConfig {
            strategy,
            kind: ExperimentKind::Ramsey,
            beta: 2.0,
            measurement,
            estimator: EstimatorConfig {
                particle_count: 300,
                ..EstimatorConfig::default()
            },
            epochs,
            hardware_emulation: false,
        }
    }

    fn truth() -> GroundTruth {
        GroundTruth::new(DecayLaw::new(2.5 * US, 2.0).unwrap(), ExperimentKind::Ramsey)
    }

    #[test]
    fn adaptive_tau_from_posterior_mean() {
        let e = ensemble_with_mean(2.5 * US);
        let mut rng = RandomStream::new(0);
        let support = (0.1 * US, 8.0 * US);
        let tau = next_tau(Strategy::AdaptiveVariance, &e, 3, 10, Some(0.89), support, &mut rng);
        assert!((tau - 2.225 * US).abs() < 1e-15);
        let tau = next_tau(Strategy::AdaptiveSensitivity, &e, 3, 10, Some(0.66), support, &mut rng);
        assert!((tau - 1.65 * US).abs() < 1e-15);
        // clamped on both sides
        let far = ensemble_with_mean(20.0 * US);
        assert_eq!(next_tau(Strategy::AdaptiveVariance, &far, 0, 1, Some(0.89), support, &mut rng), 8.0 * US);
        let near = ParticleEnsemble::uniform(vec![0.01 * US]).unwrap();
        assert_eq!(next_tau(Strategy::AdaptiveVariance, &near, 0, 1, Some(0.89), support, &mut rng), 0.1 * US);
    }

    #[test]
    fn sweep_grid_is_ascending_and_covers_support() {
        let e = ensemble_with_mean(2.5 * US);
        let mut rng = RandomStream::new(0);
        let support = (0.1 * US, 8.0 * US);
        let taus: Vec<f64> = (0..50)
            .map(|i| next_tau(Strategy::SweepTau, &e, i, 50, None, support, &mut rng))
            .collect();
        assert_eq!(taus[0], 0.1 * US);
        assert!((taus[49] - 8.0 * US).abs() < 1e-18);
        let step = taus[1] - taus[0];
        for w in taus.windows(2) {
            assert!((w[1] - w[0] - step).abs() < 1e-18);
        }
    }

    #[test]
    fn quantization_examples() {
        let (lo, hi) = (0.1 * US, 8.0 * US);
        assert_eq!(quantize_tau(lo, lo, hi, 256).0, 0);
        assert_eq!(quantize_tau(hi, lo, hi, 256).0, 255);
        let (i, q) = quantize_tau(2.225 * US, 0.0, 8.0 * US, 256);
        assert_eq!(i, 71);
        assert!((q - 71.0 / 255.0 * 8.0 * US).abs() < 1e-18);
        assert!((q - 2.2275 * US).abs() < 1e-4 * US);
        // half-way rounds up
        let (i, _) = quantize_tau(0.5, 0.0, 255.0, 256);
        assert_eq!(i, 1);
    }

    #[test]
    fn zero_epochs_gives_no_records() {
        let cfg = config(Strategy::AdaptiveVariance, MeasurementModel::SingleShot, 0);
        let recs = run_protocol(&cfg, &truth(), &XiTable::new(), 1, 0).unwrap();
        assert!(recs.is_empty());
    }

    #[test]
    fn sensitivity_with_exponential_decay_is_a_config_error() {
        let mut cfg = config(Strategy::AdaptiveSensitivity, MeasurementModel::SingleShot, 5);
        cfg.beta = 1.0;
        assert!(matches!(Protocol::new(cfg, &XiTable::new()), Err(Error::Config(_))));
    }

    #[test]
    fn echo_bookkeeping_doubles_delay() {
        let readout = ReadoutModel::nv_center(10_000).unwrap();
        let mut cfg = config(Strategy::RandomTau, MeasurementModel::PhotonCount(readout), 30);
        cfg.kind = ExperimentKind::HahnEcho;
        cfg.beta = 1.5;
        let truth = GroundTruth::new(DecayLaw::new(3.0 * US, 1.5).unwrap(), ExperimentKind::HahnEcho);
        let recs = run_protocol(&cfg, &truth, &XiTable::new(), 3, 0).unwrap();
        let mut prev = 0.0;
        for r in &recs {
            let inc = r.cumulative_probing_time - prev;
            assert!((inc - 2.0 * 10_000.0 * r.tau).abs() <= 1e-12 * r.cumulative_probing_time);
            assert!(r.cumulative_probing_time > prev);
            prev = r.cumulative_probing_time;
        }
    }

    #[test]
    fn replay_reproduces_a_simulated_run() {
        let readout = ReadoutModel::nv_center(10_000).unwrap();
        let cfg = config(Strategy::AdaptiveVariance, MeasurementModel::PhotonCount(readout), 40);
        let table = XiTable::new();
        let recs = run_protocol(&cfg, &truth(), &table, 5, 2).unwrap();
        let protocol = Protocol::new(cfg, &table).unwrap();
        let mut replay = ReplayBackend::from_records(&recs);
        let again = protocol.run(&mut replay, 5, 2).unwrap();
        assert_eq!(recs, again);
        let mut short = ReplayBackend::new(vec![150; 3]);
        assert!(matches!(protocol.run(&mut short, 5, 2), Err(Error::ReplayExhausted { consumed: 3 })));
    }

    #[test]
    fn replayed_outcomes_are_validated() {
        let cfg = config(Strategy::AdaptiveVariance, MeasurementModel::SingleShot, 5);
        let protocol = Protocol::new(cfg, &XiTable::new()).unwrap();
        // a count of 2 is not a valid shot
        let mut replay = ReplayBackend::new(vec![1, 1, 1, 1, 1]);
        assert!(protocol.run(&mut replay, 0, 0).is_ok());
        let mut bad = ReplayBackend::new(vec![0, 2]);
        assert!(matches!(protocol.run(&mut bad, 0, 0), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn hardware_emulation_snaps_recorded_delays() {
        let readout = ReadoutModel::nv_center(10_000).unwrap();
        let mut cfg = config(Strategy::AdaptiveVariance, MeasurementModel::PhotonCount(readout), 20);
        cfg.hardware_emulation = true;
        let recs = run_protocol(&cfg, &truth(), &XiTable::new(), 1, 0).unwrap();
        let (lo, hi) = (cfg.tau_min(), cfg.tau_max());
        for r in recs {
            let (_, q) = quantize_tau(r.tau, lo, hi, 256);
            assert_eq!(q, r.tau);
        }
    }
}
