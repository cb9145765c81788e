//! Run configuration: a versioned TOML file with one section per subsystem, plus
//! the built-in presets.
//!
//! ```toml
//! version = 1
//!
//! [truth]
//! t_chi = "2.5us"
//! beta = 2.0
//! kind = "ramsey"            # relaxation | ramsey | hahn-echo
//!
//! [readout]                  # omit for single-shot readout
//! p_click_0 = 0.0187
//! p_click_1 = 0.0148
//! repetitions = 10000
//!
//! [estimator]
//! particles = 1000
//! prior_low = "0.1us"
//! prior_high = "8us"
//! liu_west_a = 0.98
//! resample_threshold = 0.5
//! placement = "stratified"   # stratified | iid
//! resample_variance = "shrunk"  # shrunk | full
//!
//! [protocol]
//! epochs = 500
//! strategies = ["adaptive-variance", "random-tau"]
//! hardware_emulation = false
//! xi_source = "solver"       # solver | published
//!
//! [run]
//! replicas = 100
//! seed = 1
//! bound_criterion = "sensitivity"
//! grid_points = 200
//! bootstrap_draws = 1000
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::units::Seconds;
use crate::error::{Error, Result};
use crate::estimator::{EstimatorConfig, PriorPlacement, ResampleVariance};
use crate::infotheory::{Criterion, XiTable};
use crate::model::{DecayLaw, ExperimentKind, MeasurementModel, ReadoutModel};
use crate::protocol::{ProtocolConfig, Strategy};
use crate::simulator::GroundTruth;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    pub truth: TruthSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub readout: Option<ReadoutSection>,
    pub estimator: EstimatorSection,
    pub protocol: ProtocolSection,
    pub run: RunSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthSection {
    pub t_chi: Seconds,
    pub beta: f64,
    pub kind: ExperimentKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReadoutSection {
    pub p_click_0: f64,
    pub p_click_1: f64,
    pub repetitions: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorSection {
    pub particles: usize,
    pub prior_low: Seconds,
    pub prior_high: Seconds,
    #[serde(default = "default_liu_west")]
    pub liu_west_a: f64,
    #[serde(default = "default_threshold")]
    pub resample_threshold: f64,
    #[serde(default)]
    pub placement: PriorPlacement,
    #[serde(default)]
    pub resample_variance: ResampleVariance,
}

fn default_liu_west() -> f64 {
    0.98
}

fn default_threshold() -> f64 {
    0.5
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum XiSource {
    /// Solve for xi at startup.
    #[default]
    Solver,
    /// Two-decimal published table; solver for any beta it does not list.
    Published,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSection {
    pub epochs: usize,
    pub strategies: Vec<Strategy>,
    #[serde(default)]
    pub hardware_emulation: bool,
    #[serde(default)]
    pub xi_source: XiSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub replicas: usize,
    pub seed: u64,
    #[serde(default = "default_bound")]
    pub bound_criterion: Criterion,
    #[serde(default = "default_grid")]
    pub grid_points: usize,
    #[serde(default = "default_bootstrap")]
    pub bootstrap_draws: usize,
}

fn default_bound() -> Criterion {
    Criterion::Sensitivity
}

fn default_grid() -> usize {
    200
}

fn default_bootstrap() -> usize {
    1000
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(message) => Error::Config(format!("{}: {message}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::Config(format!(
                "unsupported config version {} (expected {CONFIG_VERSION})",
                self.version
            )));
        }
        self.law()?;
        self.measurement()?;
        if self.protocol.strategies.is_empty() {
            return Err(Error::Config("at least one strategy is required".into()));
        }
        for &s in &self.protocol.strategies {
            self.protocol_config(s).validate()?;
        }
        if self.run.replicas == 0 {
            return Err(Error::Config("replicas must be positive".into()));
        }
        if self.run.grid_points < 2 {
            return Err(Error::Config("grid_points must be at least 2".into()));
        }
        Ok(())
    }

    pub fn law(&self) -> Result<DecayLaw> {
        DecayLaw::new(self.truth.t_chi.0, self.truth.beta).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn truth(&self) -> Result<GroundTruth> {
        Ok(GroundTruth::new(self.law()?, self.truth.kind))
    }

    pub fn measurement(&self) -> Result<MeasurementModel> {
        match &self.readout {
            None => Ok(MeasurementModel::SingleShot),
            Some(r) => ReadoutModel::new(r.p_click_0, r.p_click_1, r.repetitions)
                .map(MeasurementModel::PhotonCount)
                .map_err(|e| Error::Config(e.to_string())),
        }
    }

    pub fn estimator_config(&self) -> EstimatorConfig {
        let e = &self.estimator;
        EstimatorConfig {
            particle_count: e.particles,
            prior_low: e.prior_low.0,
            prior_high: e.prior_high.0,
            liu_west_a: e.liu_west_a,
            resample_threshold: e.resample_threshold,
            rng_seed: self.run.seed,
            placement: e.placement,
            resample_variance: e.resample_variance,
        }
    }

    /// Protocol settings for `strategy`. Call [`RunConfig::validate`] first.
    pub fn protocol_config(&self, strategy: Strategy) -> ProtocolConfig {
        ProtocolConfig {
            strategy,
            kind: self.truth.kind,
            beta: self.truth.beta,
            measurement: self.measurement().unwrap_or(MeasurementModel::SingleShot),
            estimator: self.estimator_config(),
            epochs: self.protocol.epochs,
            hardware_emulation: self.protocol.hardware_emulation,
        }
    }

    pub fn xi_table(&self) -> Result<XiTable> {
        let mut table = match self.protocol.xi_source {
            XiSource::Solver => XiTable::new(),
            XiSource::Published => XiTable::published(),
        };
        for &s in &self.protocol.strategies {
            if let Some(c) = s.criterion() {
                table.get_or_solve(c, self.truth.beta)?;
            }
        }
        Ok(table)
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serialises");
        hex::encode(Sha256::digest(&json))
    }

    /// Built-in desk-scale configurations.
    pub fn preset(name: &str) -> Result<Self> {
        use ExperimentKind::*;
        use Strategy::*;
        let nv = |repetitions| {
            Some(ReadoutSection {
                p_click_0: ReadoutModel::NV_P_CLICK_0,
                p_click_1: ReadoutModel::NV_P_CLICK_1,
                repetitions,
            })
        };
        let estimator = |particles, lo, hi| EstimatorSection {
            particles,
            prior_low: Seconds(lo),
            prior_high: Seconds(hi),
            liu_west_a: default_liu_west(),
            resample_threshold: default_threshold(),
            placement: PriorPlacement::Stratified,
            resample_variance: ResampleVariance::Shrunk,
        };
        let run = |replicas, bound_criterion| RunSection {
            replicas,
            seed: 1,
            bound_criterion,
            grid_points: default_grid(),
            bootstrap_draws: default_bootstrap(),
        };
        let protocol = |epochs, strategies: &[Strategy]| ProtocolSection {
            epochs,
            strategies: strategies.to_vec(),
            hardware_emulation: false,
            xi_source: XiSource::Solver,
        };
        let ramsey = TruthSection {
            t_chi: Seconds(2.5e-6),
            beta: 2.0,
            kind: Ramsey,
        };
        let cfg = match name {
            // single-shot readout, T2* = 2.5 us
            "fig2b" => RunConfig {
                version: CONFIG_VERSION,
                truth: ramsey,
                readout: None,
                estimator: estimator(1000, 0.1e-6, 8e-6),
                protocol: protocol(500, &[AdaptiveSensitivity, AdaptiveVariance, RandomTau]),
                run: run(500, Criterion::Sensitivity),
            },
            // photon counting, R = 50000
            "fig2c" => RunConfig {
                version: CONFIG_VERSION,
                truth: ramsey,
                readout: nv(50_000),
                estimator: estimator(1000, 0.1e-6, 8e-6),
                protocol: protocol(300, &[AdaptiveSensitivity, AdaptiveVariance, RandomTau]),
                run: run(200, Criterion::Sensitivity),
            },
            // relaxation, ms-scale T1
            "fig3a" => RunConfig {
                version: CONFIG_VERSION,
                truth: TruthSection {
                    t_chi: Seconds(1.5e-3),
                    beta: 1.0,
                    kind: Relaxation,
                },
                readout: nv(10_000),
                estimator: estimator(1000, 0.05e-3, 5e-3),
                protocol: protocol(300, &[AdaptiveVariance, RandomTau]),
                run: run(10, Criterion::Variance),
            },
            // Hahn echo, beta = 3/2
            "fig3b" => RunConfig {
                version: CONFIG_VERSION,
                truth: TruthSection {
                    t_chi: Seconds(40e-6),
                    beta: 1.5,
                    kind: HahnEcho,
                },
                readout: nv(10_000),
                estimator: estimator(1000, 1e-6, 120e-6),
                protocol: protocol(300, &[AdaptiveVariance, RandomTau]),
                run: run(40, Criterion::Variance),
            },
            // F vs F_T at R = 10^4
            "fig4" => RunConfig {
                version: CONFIG_VERSION,
                truth: ramsey,
                readout: nv(10_000),
                estimator: estimator(1000, 0.1e-6, 8e-6),
                protocol: protocol(500, &[AdaptiveVariance, AdaptiveSensitivity]),
                run: run(100, Criterion::Sensitivity),
            },
            other => {
                return Err(Error::Config(format!(
                    "unknown preset `{other}` (available: {})",
                    PRESETS.join(", ")
                )))
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

pub const PRESETS: [&str; 5] = ["fig2b", "fig2c", "fig3a", "fig3b", "fig4"];
