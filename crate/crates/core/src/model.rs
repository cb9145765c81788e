//! Decay laws, single-shot outcome likelihood and the photon-count readout model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Stretched-exponential coherence decay `exp(-(t / t_chi)^beta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayLaw {
    t_chi: f64,
    beta: f64,
}

impl DecayLaw {
    pub fn new(t_chi: f64, beta: f64) -> Result<Self> {
        if !(t_chi > 0.0 && t_chi.is_finite()) {
            return Err(Error::invalid(format!("t_chi must be positive, got {t_chi}")));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::invalid(format!("beta must be positive, got {beta}")));
        }
        Ok(Self { t_chi, beta })
    }

    pub fn t_chi(&self) -> f64 {
        self.t_chi
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn with_t_chi(&self, t_chi: f64) -> Result<Self> {
        Self::new(t_chi, self.beta)
    }

    /// `(tau / t_chi)^beta`, the decay exponent.
    #[inline]
    pub fn exponent(&self, tau: f64) -> f64 {
        stretched_power(tau / self.t_chi, self.beta)
    }

    /// Remaining coherence `exp(-(tau / t_chi)^beta)`.
    #[inline]
    pub fn coherence(&self, tau: f64) -> f64 {
        (-self.exponent(tau)).exp()
    }
}

/// `x^beta` with the common integer exponents special-cased; this sits in the
/// particle update loop.
#[inline]
pub(crate) fn stretched_power(x: f64, beta: f64) -> f64 {
    if beta == 2.0 {
        x * x
    } else if beta == 1.0 {
        x
    } else if beta == 3.0 {
        x * x * x
    } else {
        x.powf(beta)
    }
}

/// Per-shot click probabilities for the bright (`|0>`) and dark (`|1>`) states,
/// plus the number of repetitions `R` summed into one count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawReadout", into = "RawReadout")]
pub struct ReadoutModel {
    p_click_0: f64,
    p_click_1: f64,
    repetitions: u64,
}

#[derive(Serialize, Deserialize)]
struct RawReadout {
    p_click_0: f64,
    p_click_1: f64,
    repetitions: u64,
}

impl TryFrom<RawReadout> for ReadoutModel {
    type Error = Error;
    fn try_from(raw: RawReadout) -> Result<Self> {
        ReadoutModel::new(raw.p_click_0, raw.p_click_1, raw.repetitions)
    }
}

impl From<ReadoutModel> for RawReadout {
    fn from(r: ReadoutModel) -> Self {
        RawReadout {
            p_click_0: r.p_click_0,
            p_click_1: r.p_click_1,
            repetitions: r.repetitions,
        }
    }
}

impl ReadoutModel {
    /// Click probabilities measured on the NV setup.
    pub const NV_P_CLICK_0: f64 = 0.0187;
    pub const NV_P_CLICK_1: f64 = 0.0148;

    pub fn new(p_click_0: f64, p_click_1: f64, repetitions: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_click_0) || !(0.0..=1.0).contains(&p_click_1) {
            return Err(Error::invalid(format!(
                "click probabilities must lie in [0, 1], got {p_click_0}, {p_click_1}"
            )));
        }
        if !(p_click_1 < p_click_0) {
            return Err(Error::invalid(format!(
                "bright-state click probability {p_click_0} must exceed dark-state {p_click_1}"
            )));
        }
        if repetitions == 0 {
            return Err(Error::invalid("repetitions must be positive"));
        }
        let model = Self {
            p_click_0,
            p_click_1,
            repetitions,
        };
        let alpha = model.alpha();
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::invalid(format!("offset alpha = {alpha} outside (0, 1)")));
        }
        Ok(model)
    }

    /// NV readout with `R` repetitions per epoch.
    pub fn nv_center(repetitions: u64) -> Result<Self> {
        Self::new(Self::NV_P_CLICK_0, Self::NV_P_CLICK_1, repetitions)
    }

    pub fn p_click_0(&self) -> f64 {
        self.p_click_0
    }

    pub fn p_click_1(&self) -> f64 {
        self.p_click_1
    }

    pub fn repetitions(&self) -> u64 {
        self.repetitions
    }

    pub fn with_repetitions(&self, repetitions: u64) -> Result<Self> {
        Self::new(self.p_click_0, self.p_click_1, repetitions)
    }

    /// Mean click probability `alpha = (p0 + p1) / 2`.
    pub fn alpha(&self) -> f64 {
        0.5 * (self.p_click_0 + self.p_click_1)
    }

    /// Contrast `V = (p0 - p1) / (p0 + p1)`.
    pub fn visibility(&self) -> f64 {
        (self.p_click_0 - self.p_click_1) / (self.p_click_0 + self.p_click_1)
    }
}

/// Outcome of a single projective shot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BinaryOutcome {
    Zero,
    One,
}

impl BinaryOutcome {
    pub fn from_bit(bit: u64) -> Result<Self> {
        match bit {
            0 => Ok(BinaryOutcome::Zero),
            1 => Ok(BinaryOutcome::One),
            other => Err(Error::invalid(format!("binary outcome must be 0 or 1, got {other}"))),
        }
    }

    pub fn bit(self) -> u64 {
        match self {
            BinaryOutcome::Zero => 0,
            BinaryOutcome::One => 1,
        }
    }
}

/// Which decay is probed. Only affects default exponent and time accounting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Relaxation,
    Ramsey,
    HahnEcho,
}

impl ExperimentKind {
    pub fn default_beta(self) -> f64 {
        match self {
            ExperimentKind::Relaxation => 1.0,
            ExperimentKind::Ramsey => 2.0,
            ExperimentKind::HahnEcho => 1.5,
        }
    }

    /// Sequence length per unit delay: the echo refocuses after a second `tau`.
    pub fn duration_factor(self) -> f64 {
        match self {
            ExperimentKind::Relaxation | ExperimentKind::Ramsey => 1.0,
            ExperimentKind::HahnEcho => 2.0,
        }
    }
}

/// `P(m | T_chi) = (1 + (-1)^m exp(-(tau/T_chi)^beta)) / 2`.
#[inline]
pub fn outcome_likelihood(m: BinaryOutcome, tau: f64, law: &DecayLaw) -> f64 {
    let c = law.coherence(tau);
    match m {
        BinaryOutcome::Zero => 0.5 * (1.0 + c),
        BinaryOutcome::One => 0.5 * (1.0 - c),
    }
}

/// Per-repetition photon detection probability `alpha (1 + V exp(-(tau/T_chi)^beta))`.
#[inline]
pub fn detection_probability(tau: f64, law: &DecayLaw, readout: &ReadoutModel) -> f64 {
    readout.alpha() * (1.0 + readout.visibility() * law.coherence(tau))
}

/// Plug-in binomial variance of a count, floored at one count squared.
#[inline]
pub fn count_variance(r: u64, repetitions: u64) -> f64 {
    let r = r as f64;
    let n = repetitions as f64;
    (r * (n - r) / n).max(1.0)
}

/// Gaussian approximation of the binomial count density.
pub fn count_likelihood(r: u64, tau: f64, law: &DecayLaw, readout: &ReadoutModel) -> f64 {
    let n = readout.repetitions();
    let var = count_variance(r, n);
    let mean = n as f64 * detection_probability(tau, law, readout);
    let d = r as f64 - mean;
    (-d * d / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
}

pub fn sequence_duration(tau: f64, kind: ExperimentKind) -> f64 {
    tau * kind.duration_factor()
}

/// How an epoch's outcome is read out: a single projective shot, or `R`
/// repetitions summed into a photon count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeasurementModel {
    SingleShot,
    PhotonCount(ReadoutModel),
}

impl MeasurementModel {
    pub fn repetitions(&self) -> u64 {
        match self {
            MeasurementModel::SingleShot => 1,
            MeasurementModel::PhotonCount(r) => r.repetitions(),
        }
    }

    pub fn readout(&self) -> Option<&ReadoutModel> {
        match self {
            MeasurementModel::SingleShot => None,
            MeasurementModel::PhotonCount(r) => Some(r),
        }
    }

    /// Likelihood of `outcome` (a bit, or a count) under `law`. Single-shot uses the
    /// exact Bernoulli model; photon counts use the Gaussian approximation.
    pub fn likelihood(&self, outcome: u64, tau: f64, law: &DecayLaw) -> Result<f64> {
        match self {
            MeasurementModel::SingleShot => {
                Ok(outcome_likelihood(BinaryOutcome::from_bit(outcome)?, tau, law))
            }
            MeasurementModel::PhotonCount(readout) => {
                if outcome > readout.repetitions() {
                    return Err(Error::invalid(format!(
                        "count {outcome} exceeds repetitions {}",
                        readout.repetitions()
                    )));
                }
                Ok(count_likelihood(outcome, tau, law, readout))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    macro_rules! assert_close {
        ($a:expr, $b:expr, $tol:expr) => {
            assert_abs_diff_eq!($a, $b, epsilon = $tol)
        };
    }

    fn nv(r: u64) -> ReadoutModel {
        ReadoutModel::nv_center(r).unwrap()
    }

    #[test]
    fn rejects_invalid_laws_and_readouts() {
        assert!(DecayLaw::new(0.0, 2.0).is_err());
        assert!(DecayLaw::new(1.0, -1.0).is_err());
        assert!(DecayLaw::new(f64::NAN, 1.0).is_err());
        assert!(ReadoutModel::new(0.01, 0.02, 10).is_err());
        assert!(ReadoutModel::new(0.02, 0.02, 10).is_err());
        assert!(ReadoutModel::new(0.02, 0.01, 0).is_err());
        assert!(ReadoutModel::new(1.0, 1.0, 1).is_err());
    }

    #[test]
    fn outcome_likelihood_examples() {
        let law = DecayLaw::new(2.5e-6, 2.0).unwrap();
        assert_eq!(outcome_likelihood(BinaryOutcome::Zero, 0.0, &law), 1.0);
        assert_eq!(outcome_likelihood(BinaryOutcome::One, 0.0, &law), 0.0);
        assert_close!(
            outcome_likelihood(BinaryOutcome::Zero, 2.5e-6, &law),
            (1.0 + (-1.0f64).exp()) / 2.0,
            1e-15
        );
        assert_close!(outcome_likelihood(BinaryOutcome::Zero, 2.5e-6, &law), 0.683940, 1e-6);
    }

    #[test]
    fn detection_probability_examples() {
        let readout = nv(50_000);
        let law = DecayLaw::new(2.5e-6, 2.0).unwrap();
        assert_close!(detection_probability(0.0, &law, &readout), 0.0187, 1e-15);
        assert_close!(detection_probability(1.0, &law, &readout), 0.01675, 1e-15);
        let v = (0.0187 - 0.0148) / 0.0335;
        assert_close!(readout.visibility(), v, 1e-15);
        assert_close!(readout.visibility(), 0.116418, 1e-6);
        let expected = 0.01675 * (1.0 + v * (-1.0f64).exp());
        assert_close!(detection_probability(2.5e-6, &law, &readout), expected, 1e-15);
        assert_close!(detection_probability(2.5e-6, &law, &readout), 0.017467, 1e-6);
    }

    #[test]
    fn count_likelihood_peak_and_floor() {
        let readout = nv(10_000);
        let law = DecayLaw::new(1e-6, 1.0).unwrap();
        // tau huge: mean is R * alpha = 167.5; pick r so the floor is inactive
        let tau = 1.0;
        let mean = 10_000.0 * readout.alpha();
        let r = 168;
        let var = 168.0 * (10_000.0 - 168.0) / 10_000.0;
        let d = 168.0 - mean;
        let expected = (-d * d / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt();
        assert_close!(count_likelihood(r, tau, &law, &readout), expected, 1e-15);

        // r = 0 hits the variance floor
        assert_eq!(count_variance(0, 10_000), 1.0);
        assert_eq!(count_variance(10_000, 10_000), 1.0);
        let mean0 = 10_000.0 * detection_probability(0.5e-6, &law, &readout);
        let expected0 = (-(mean0 * mean0) / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
        assert_eq!(count_likelihood(0, 0.5e-6, &law, &readout), expected0);
    }

    #[test]
    fn count_likelihood_peak_value_at_mean() {
        // R * p_D integral: tau = infinity, R = 20000 -> mean 335 exactly.
        let readout = nv(20_000);
        let law = DecayLaw::new(1e-6, 2.0).unwrap();
        let r = 335;
        let var = count_variance(r, 20_000);
        let peak = 1.0 / (2.0 * std::f64::consts::PI * var).sqrt();
        assert_close!(count_likelihood(r, 1.0, &law, &readout), peak, 1e-12 * peak);
    }

    #[test]
    fn count_likelihood_derived_example() {
        let readout = nv(50_000);
        let law = DecayLaw::new(2.5e-6, 2.0).unwrap();
        let mean = 50_000.0 * 0.01675 * (1.0 + (0.0039 / 0.0335) * (-1.0f64).exp());
        // 873.35 comes from p_D rounded to 0.017467
        assert_close!(mean, 873.35, 0.05);
        let var = 500.0 * 49_500.0 / 50_000.0;
        assert_eq!(var, 495.0);
        let expected =
            (-(500.0 - mean).powi(2) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt();
        let got = count_likelihood(500, 2.5e-6, &law, &readout);
        assert!(got > 0.0);
        assert_close!(got, expected, 1e-12 * expected);
    }

    #[test]
    fn sequence_duration_examples() {
        assert_eq!(sequence_duration(1e-6, ExperimentKind::Ramsey), 1e-6);
        assert_eq!(sequence_duration(1e-6, ExperimentKind::Relaxation), 1e-6);
        assert_eq!(sequence_duration(1e-6, ExperimentKind::HahnEcho), 2e-6);
        assert_eq!(sequence_duration(0.0, ExperimentKind::HahnEcho), 0.0);
    }

    #[test]
    fn count_likelihood_sums_to_one() {
        let readout = nv(2_000);
        let law = DecayLaw::new(3e-6, 2.0).unwrap();
        for &tau in &[0.0, 1e-6, 3e-6, 1e-5] {
            let total: f64 = (0..=2_000)
                .map(|r| count_likelihood(r, tau, &law, &readout))
                .sum();
            assert_close!(total, 1.0, 0.01);
        }
    }

    #[test]
    fn single_shot_limit_of_photon_model() {
        // alpha = 1/2, V = 1 means p0 = 1, p1 = 0
        let readout = ReadoutModel::new(1.0, 0.0, 1).unwrap();
        assert_eq!(readout.alpha(), 0.5);
        assert_eq!(readout.visibility(), 1.0);
        let law = DecayLaw::new(2e-6, 1.5).unwrap();
        for i in 0..20 {
            let tau = i as f64 * 0.4e-6;
            let mean = detection_probability(tau, &law, &readout);
            assert_close!(mean, outcome_likelihood(BinaryOutcome::Zero, tau, &law), 1e-15);
        }
    }

    #[test]
    fn measurement_model_rejects_out_of_range_outcomes() {
        let law = DecayLaw::new(1e-6, 2.0).unwrap();
        assert!(MeasurementModel::SingleShot.likelihood(2, 1e-6, &law).is_err());
        let counts = MeasurementModel::PhotonCount(nv(100));
        assert!(counts.likelihood(101, 1e-6, &law).is_err());
        assert!(counts.likelihood(2, 1e-6, &law).unwrap() > 0.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn outcome_likelihoods_sum_to_one(tau in 0.0..1e-4f64, t in 1e-7..1e-4f64, beta in 0.5..4.0f64) {
                let law = DecayLaw::new(t, beta).unwrap();
                let s = outcome_likelihood(BinaryOutcome::Zero, tau, &law)
                    + outcome_likelihood(BinaryOutcome::One, tau, &law);
                prop_assert!((s - 1.0).abs() <= 1e-15);
            }

            #[test]
            fn likelihoods_monotone_in_tau(a in 0.0..2e-5f64, b in 0.0..2e-5f64, beta in 0.5..4.0f64) {
                let law = DecayLaw::new(3e-6, beta).unwrap();
                let readout = ReadoutModel::nv_center(1000).unwrap();
                let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                let p_lo = outcome_likelihood(BinaryOutcome::Zero, lo, &law);
                let p_hi = outcome_likelihood(BinaryOutcome::Zero, hi, &law);
                prop_assert!(p_hi <= p_lo);
                prop_assert!(p_hi >= 0.5);
                let d_lo = detection_probability(lo, &law, &readout);
                let d_hi = detection_probability(hi, &law, &readout);
                prop_assert!(d_hi <= d_lo);
                prop_assert!(d_hi >= readout.alpha());
                prop_assert!(d_lo <= readout.alpha() * (1.0 + readout.visibility()) + 1e-18);
            }
        }
    }
}
