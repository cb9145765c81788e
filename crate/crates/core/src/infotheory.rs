//! Fisher information for the decay likelihoods, the optimal probing ratio
//! `xi = tau_opt / T_chi`, and Cramér-Rao bound envelopes.
//!
//! The single-shot Fisher information is
//!
//! ```text
//! F(tau) = beta^2 x^(2 beta) / (T^2 (exp(2 x^beta) - 1)),   x = tau / T
//! ```
//!
//! which is what differentiating the binary-outcome likelihood gives. An
//! alternative denominator `exp((2x)^beta) - 1` appears in some write-ups of
//! the same model; it does not follow from the likelihood and does not
//! reproduce the known `xi(beta)` values, so it is not used anywhere here.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::ParticleEnsemble;
use crate::maximize::{maximize_bracketed, Argmax};
use crate::model::{DecayLaw, ReadoutModel};

/// Upper end of the `tau / T_chi` bracket searched for optimal probes.
pub const XI_BRACKET_HIGH: f64 = 3.0;
/// Coarse grid resolution used before golden-section refinement.
pub const XI_GRID_POINTS: usize = 512;
const XI_TOLERANCE: f64 = 1e-9;

/// What the probing time is chosen to optimise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Criterion {
    /// Maximise Fisher information per shot (minimum variance).
    Variance,
    /// Maximise Fisher information per unit probing time (minimum `MSE * time`).
    Sensitivity,
}

impl Criterion {
    pub fn name(self) -> &'static str {
        match self {
            Criterion::Variance => "variance",
            Criterion::Sensitivity => "sensitivity",
        }
    }

    /// Sensitivity has no interior optimum for exponential (or slower) decay.
    pub fn is_valid_for(self, beta: f64) -> bool {
        match self {
            Criterion::Variance => beta > 0.0,
            Criterion::Sensitivity => beta > 1.0,
        }
    }
}

impl std::fmt::Display for Criterion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Single-shot Fisher information about `T_chi`, units 1/s².
pub fn fisher(tau: f64, law: &DecayLaw) -> f64 {
    if tau <= 0.0 {
        return 0.0;
    }
    let t = law.t_chi();
    let beta = law.beta();
    let u = law.exponent(tau);
    let denom = (2.0 * u).exp_m1();
    if !denom.is_finite() {
        return 0.0;
    }
    beta * beta * u * u / (t * t * denom)
}

/// Fisher information per unit probing time, units 1/s³.
pub fn fisher_per_time(tau: f64, law: &DecayLaw) -> f64 {
    if tau <= 0.0 {
        return 0.0;
    }
    fisher(tau, law) / tau
}

/// Fisher information of one photon-counting repetition.
///
/// Evaluated with numerator and denominator scaled by `exp(-2 x^beta)`, which keeps
/// the closed form finite for long delays.
pub fn fisher_experimental(tau: f64, law: &DecayLaw, readout: &ReadoutModel) -> f64 {
    if tau <= 0.0 {
        return 0.0;
    }
    let t = law.t_chi();
    let beta = law.beta();
    let alpha = readout.alpha();
    let v = readout.visibility();
    let u = law.exponent(tau);
    let e = (-u).exp();
    let denom = alpha * v * v * e * e + 2.0 * alpha * v * e - v * e + alpha - 1.0;
    -alpha * v * v * beta * beta * u * u * e * e / (t * t * denom)
}

/// Information per probe for either measurement regime.
pub fn information(tau: f64, law: &DecayLaw, readout: Option<&ReadoutModel>) -> f64 {
    match readout {
        None => fisher(tau, law),
        Some(r) => fisher_experimental(tau, law, r),
    }
}

/// Point-estimate approximation of the Bayesian information: the posterior is
/// replaced by a delta at `t_hat`.
pub fn bim_point_estimate(tau: f64, t_hat: f64, beta: f64) -> Result<f64> {
    Ok(fisher(tau, &DecayLaw::new(t_hat, beta)?))
}

/// Posterior-averaged Fisher information `sum_k w_k F(tau; x_k)`. Diagnostic only.
pub fn bim_particle_average(tau: f64, ensemble: &ParticleEnsemble, beta: f64) -> Result<f64> {
    let mut acc = 0.0;
    for (&x, &w) in ensemble.positions().iter().zip(ensemble.weights()) {
        acc += w * fisher(tau, &DecayLaw::new(x, beta)?);
    }
    Ok(acc)
}

/// Maximise `info(x)` (Variance) or `info(x) / x` (Sensitivity) over `x` in
/// `(0, XI_BRACKET_HIGH]`, where `info` is evaluated at unit `T_chi`.
fn optimal_ratio(info: impl Fn(f64) -> f64, criterion: Criterion) -> Argmax {
    match criterion {
        Criterion::Variance => maximize_bracketed(info, 0.0, XI_BRACKET_HIGH, XI_GRID_POINTS, XI_TOLERANCE),
        Criterion::Sensitivity => maximize_bracketed(
            |x| info(x) / x,
            0.0,
            XI_BRACKET_HIGH,
            XI_GRID_POINTS,
            XI_TOLERANCE,
        ),
    }
}

/// Optimal probing ratio `xi` for the single-shot model.
pub fn solve_xi(beta: f64, criterion: Criterion) -> Result<f64> {
    let law = DecayLaw::new(1.0, beta)?;
    let no_max = Error::NoMaximum {
        criterion: criterion.name(),
        beta,
    };
    if !criterion.is_valid_for(beta) {
        return Err(no_max);
    }
    optimal_ratio(|x| fisher(x, &law), criterion)
        .interior()
        .map(|(x, _)| x)
        .ok_or(no_max)
}

/// Optimal probing ratio under the photon-counting likelihood.
pub fn solve_xi_experimental(beta: f64, readout: &ReadoutModel, criterion: Criterion) -> Result<f64> {
    let law = DecayLaw::new(1.0, beta)?;
    optimal_ratio(|x| fisher_experimental(x, &law, readout), criterion)
        .interior()
        .map(|(x, _)| x)
        .ok_or(Error::NoMaximum {
            criterion: criterion.name(),
            beta,
        })
}

/// Probe delay used by the bound for `criterion`, and the information it yields.
///
/// When the sensitivity objective has no interior maximum the variance-optimal
/// delay is used instead.
pub fn bound_probe(law: &DecayLaw, readout: Option<&ReadoutModel>, criterion: Criterion) -> (f64, f64) {
    let unit = DecayLaw::new(1.0, law.beta()).expect("beta already validated");
    let info_unit = |x: f64| information(x, &unit, readout);
    let x = match optimal_ratio(info_unit, criterion) {
        Argmax::Interior { x, .. } => x,
        Argmax::Boundary { .. } => optimal_ratio(info_unit, Criterion::Variance).x(),
    };
    let tau = x * law.t_chi();
    (tau, information(tau, law, readout))
}

/// Cramér-Rao uncertainty floor (in seconds) after `total_probing_time` seconds
/// spent repeating the bound-optimal probe.
pub fn crlb_envelope(
    total_probing_time: f64,
    law: &DecayLaw,
    readout: Option<&ReadoutModel>,
    criterion: Criterion,
) -> f64 {
    let (tau, info) = bound_probe(law, readout, criterion);
    (tau / (info * total_probing_time)).sqrt()
}

/// Cramér-Rao floor after a fixed number of probes (shots or repetitions).
pub fn crlb_envelope_shots(
    shots: f64,
    law: &DecayLaw,
    readout: Option<&ReadoutModel>,
    criterion: Criterion,
) -> f64 {
    let (_, info) = bound_probe(law, readout, criterion);
    (1.0 / (shots * info)).sqrt()
}

/// One `(criterion, beta) -> xi` entry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XiEntry {
    pub criterion: Criterion,
    pub beta: f64,
    pub xi: f64,
}

/// Lookup of optimal probing ratios.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct XiTable {
    entries: Vec<XiEntry>,
}

impl XiTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Solver output for every `(criterion, beta)` pair that has a maximum.
    pub fn solved(betas: &[f64]) -> Result<Self> {
        let mut table = Self::new();
        for &beta in betas {
            for criterion in [Criterion::Variance, Criterion::Sensitivity] {
                match solve_xi(beta, criterion) {
                    Ok(xi) => table.insert(criterion, beta, xi)?,
                    Err(Error::NoMaximum { .. }) => {}
                    Err(e) => return Err(e),
                }
            }
        }
        Ok(table)
    }

    /// The published two-decimal table (beta = 1, 3/2, 2, 3).
    pub fn published() -> Self {
        let rows = [
            (Criterion::Variance, 1.0, 0.79),
            (Criterion::Variance, 1.5, 0.86),
            (Criterion::Variance, 2.0, 0.89),
            (Criterion::Variance, 3.0, 0.92),
            (Criterion::Sensitivity, 1.5, 0.30),
            (Criterion::Sensitivity, 2.0, 0.66),
            (Criterion::Sensitivity, 3.0, 0.85),
        ];
        Self {
            entries: rows
                .into_iter()
                .map(|(criterion, beta, xi)| XiEntry { criterion, beta, xi })
                .collect(),
        }
    }

    pub fn entries(&self) -> &[XiEntry] {
        &self.entries
    }

    pub fn get(&self, criterion: Criterion, beta: f64) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.criterion == criterion && (e.beta - beta).abs() < 1e-12)
            .map(|e| e.xi)
    }

    pub fn insert(&mut self, criterion: Criterion, beta: f64, xi: f64) -> Result<()> {
        if !(xi > 0.0 && xi.is_finite()) {
            return Err(Error::invalid(format!("xi must be positive, got {xi}")));
        }
        match self
            .entries
            .iter_mut()
            .find(|e| e.criterion == criterion && (e.beta - beta).abs() < 1e-12)
        {
            Some(e) => e.xi = xi,
            None => self.entries.push(XiEntry { criterion, beta, xi }),
        }
        Ok(())
    }

    pub fn get_or_solve(&mut self, criterion: Criterion, beta: f64) -> Result<f64> {
        if let Some(xi) = self.get(criterion, beta) {
            return Ok(xi);
        }
        let xi = solve_xi(beta, criterion)?;
        self.insert(criterion, beta, xi)?;
        Ok(xi)
    }
}
