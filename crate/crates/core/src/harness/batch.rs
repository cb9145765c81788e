//! Replica batches and their aggregation onto a common probing-time grid.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use crate::error::{Error, Result};
use crate::infotheory::{crlb_envelope, XiTable};
use crate::protocol::{run_protocol, EpochRecord, Strategy};
use crate::simulator::{RandomStream, StreamPurpose};

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Note stored with every summary: the time axis is pure probing time.
pub const TIME_AXIS_NOTE: &str =
    "cumulative probing time: sum of repetitions x sequence duration; initialisation and readout overhead excluded";

/// Completed replicas of one strategy, in replica order.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicaSet {
    pub strategy: Strategy,
    pub truth: f64,
    /// Error of the estimate before any data: prior mean minus truth.
    pub prior_error: f64,
    pub runs: Vec<Vec<EpochRecord>>,
    /// Replicas dropped because every particle weight underflowed.
    pub excluded: usize,
}

impl ReplicaSet {
    /// `|estimate - truth|` of every replica at time `t`, holding the last value.
    pub fn errors_at(&self, t: f64) -> Vec<f64> {
        self.runs
            .iter()
            .map(|run| (step_hold(run, t, |r| r.estimate).unwrap_or(self.truth + self.prior_error) - self.truth).abs())
            .collect()
    }

    /// Per replica, the first probing time at which the reported posterior standard
    /// deviation falls to `target` (`None` if it never does).
    pub fn std_crossings(&self, target: f64) -> Vec<Option<f64>> {
        self.runs
            .iter()
            .map(|run| {
                run.iter()
                    .find(|r| r.estimate_std <= target)
                    .map(|r| r.cumulative_probing_time)
            })
            .collect()
    }

    /// Per replica, the earliest probing time from which `|estimate - truth|` stays at
    /// or below `target` until the end of the run; `+inf` if the final error is above it.
    pub fn error_crossings(&self, target: f64) -> Vec<f64> {
        self.runs
            .iter()
            .map(|run| {
                let settled = run
                    .iter()
                    .rev()
                    .take_while(|r| (r.estimate - self.truth).abs() <= target)
                    .last();
                settled.map_or(f64::INFINITY, |r| r.cumulative_probing_time)
            })
            .collect()
    }

    fn time_span(&self) -> Option<(f64, f64)> {
        let first = self.runs.iter().filter_map(|r| r.first()).map(|r| r.cumulative_probing_time);
        let last = self.runs.iter().filter_map(|r| r.last()).map(|r| r.cumulative_probing_time);
        Some((first.reduce(f64::min)?, last.reduce(f64::max)?))
    }
}

fn step_hold(run: &[EpochRecord], t: f64, field: impl Fn(&EpochRecord) -> f64) -> Option<f64> {
    let n = run.partition_point(|r| r.cumulative_probing_time <= t);
    n.checked_sub(1).map(|i| field(&run[i]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub config_hash: String,
    pub seed: u64,
    pub code_version: String,
    pub replicas_requested: usize,
    pub replicas_excluded: usize,
    pub bootstrap_draws: usize,
    pub xi: Option<f64>,
    pub time_axis: String,
}

/// Uncertainty-vs-probing-time curve of one strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub strategy: Strategy,
    pub replicas: usize,
    pub grid: Vec<f64>,
    /// Root-mean-square error over replicas at each grid time.
    pub uncertainty: Vec<f64>,
    pub ci_lo: Vec<f64>,
    pub ci_hi: Vec<f64>,
    pub bound: Vec<f64>,
    pub metadata: RunMetadata,
}

impl RunSummary {
    /// Uncertainty at `t`, holding the last grid value; `None` before the grid starts.
    pub fn uncertainty_at(&self, t: f64) -> Option<f64> {
        let n = self.grid.partition_point(|&g| g <= t);
        n.checked_sub(1).map(|i| self.uncertainty[i])
    }

    /// Sensitivity metric `eta^2 = uncertainty^2 * t` along the grid.
    pub fn sensitivity(&self) -> Vec<f64> {
        self.grid.iter().zip(&self.uncertainty).map(|(t, u)| u * u * t).collect()
    }

    pub fn final_uncertainty(&self) -> Option<f64> {
        self.uncertainty.last().copied()
    }
}

/// First grid time at which the curve is at or below `target`.
pub fn time_to_uncertainty(summary: &RunSummary, target: f64) -> Result<f64> {
    if !(target > 0.0) {
        return Err(Error::invalid(format!("target must be positive, got {target}")));
    }
    summary
        .grid
        .iter()
        .zip(&summary.uncertainty)
        .find(|(_, &u)| u <= target)
        .map(|(&t, _)| t)
        .ok_or(Error::NotReached { target })
}

/// Runs `replicas` seeded replicas of `strategy`, concurrently.
pub fn run_replicas(config: &RunConfig, strategy: Strategy, replicas: usize) -> Result<ReplicaSet> {
    config.validate()?;
    let protocol = config.protocol_config(strategy);
    let truth = config.truth()?;
    let xi_table: XiTable = config.xi_table()?;
    let seed = config.run.seed;
    let results: Vec<Result<Vec<EpochRecord>>> = (0..replicas as u64)
        .into_par_iter()
        .map(|replica| run_protocol(&protocol, &truth, &xi_table, seed, replica))
        .collect();

    let mut runs = Vec::with_capacity(replicas);
    let mut excluded = 0;
    for result in results {
        match result {
            Ok(run) => runs.push(run),
            Err(Error::DegeneratePosterior { .. }) => excluded += 1,
            Err(e) => return Err(e),
        }
    }
    let est = config.estimator_config();
    let t_chi = truth.law.t_chi();
    Ok(ReplicaSet {
        strategy,
        truth: t_chi,
        prior_error: 0.5 * (est.prior_low + est.prior_high) - t_chi,
        runs,
        excluded,
    })
}

/// Aggregates a replica set into a curve. Bootstrap resampling uses the
/// bootstrap substream of `config.run.seed`.
pub fn summarize(config: &RunConfig, set: &ReplicaSet) -> Result<RunSummary> {
    let law = config.law()?;
    let measurement = config.measurement()?;
    let xi = match set.strategy.criterion() {
        Some(c) => Some(config.xi_table()?.get_or_solve(c, config.truth.beta)?),
        None => None,
    };
    let metadata = RunMetadata {
        config_hash: config.hash(),
        seed: config.run.seed,
        code_version: CODE_VERSION.to_string(),
        replicas_requested: set.runs.len() + set.excluded,
        replicas_excluded: set.excluded,
        bootstrap_draws: config.run.bootstrap_draws,
        xi,
        time_axis: TIME_AXIS_NOTE.to_string(),
    };
    let mut summary = RunSummary {
        strategy: set.strategy,
        replicas: set.runs.len(),
        grid: Vec::new(),
        uncertainty: Vec::new(),
        ci_lo: Vec::new(),
        ci_hi: Vec::new(),
        bound: Vec::new(),
        metadata,
    };
    let Some((t0, t1)) = set.time_span() else {
        return Ok(summary);
    };

    let grid = log_grid(t0, t1, config.run.grid_points);
    // squared errors, replica-major
    let sq: Vec<Vec<f64>> = set
        .runs
        .iter()
        .map(|run| {
            grid.iter()
                .map(|&t| {
                    let est = step_hold(run, t, |r| r.estimate).unwrap_or(set.truth + set.prior_error);
                    (est - set.truth).powi(2)
                })
                .collect()
        })
        .collect();
    let n = sq.len();
    let rmse = |idx: &mut dyn Iterator<Item = usize>, g: usize| -> f64 {
        let (sum, k) = idx.fold((0.0, 0usize), |(s, k), i| (s + sq[i][g], k + 1));
        (sum / k as f64).sqrt()
    };
    let uncertainty: Vec<f64> = (0..grid.len()).map(|g| rmse(&mut (0..n), g)).collect();

    let draws = config.run.bootstrap_draws;
    let (ci_lo, ci_hi) = if draws == 0 {
        (uncertainty.clone(), uncertainty.clone())
    } else {
        let mut rng = RandomStream::for_replica(config.run.seed, set.strategy as u64, StreamPurpose::Bootstrap);
        let mut boot = vec![Vec::with_capacity(draws); grid.len()];
        let mut idx = vec![0usize; n];
        for _ in 0..draws {
            idx.iter_mut().for_each(|i| *i = rng.random_range(0..n));
            for (g, column) in boot.iter_mut().enumerate() {
                column.push(rmse(&mut idx.iter().copied(), g));
            }
        }
        boot.iter_mut()
            .zip(&uncertainty)
            .map(|(column, &u)| {
                column.sort_by(f64::total_cmp);
                (percentile(column, 0.025).min(u), percentile(column, 0.975).max(u))
            })
            .unzip()
    };

    let bound = grid
        .iter()
        .map(|&t| crlb_envelope(t, &law, measurement.readout(), config.run.bound_criterion))
        .collect();
    summary.grid = grid;
    summary.uncertainty = uncertainty;
    summary.ci_lo = ci_lo;
    summary.ci_hi = ci_hi;
    summary.bound = bound;
    Ok(summary)
}

/// Runs and summarises one strategy.
pub fn run_batch(config: &RunConfig, strategy: Strategy, replicas: usize) -> Result<RunSummary> {
    summarize(config, &run_replicas(config, strategy, replicas)?)
}

/// Runs every configured strategy with `config.run.replicas` replicas.
pub fn run_all(config: &RunConfig) -> Result<Vec<RunSummary>> {
    config
        .protocol
        .strategies
        .iter()
        .map(|&s| run_batch(config, s, config.run.replicas))
        .collect()
}

/// `points` log-spaced values from `lo` to `hi`; collapses to one point if `lo == hi`.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if hi <= lo || points < 2 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    let mut grid: Vec<f64> = (0..points)
        .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp())
        .collect();
    grid[0] = lo;
    grid[points - 1] = hi;
    grid.dedup();
    grid
}

/// Linear-interpolated quantile of sorted data.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    match sorted.get(i + 1) {
        Some(&next) => sorted[i] + frac * (next - sorted[i]),
        None => sorted[i],
    }
}

/// Median (linear interpolation between the middle pair).
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    percentile(&v, 0.5)
}
