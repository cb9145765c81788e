//! Independent oracles. Nothing here calls the crate's information-theory code.
#![allow(dead_code)]

use decohere::model::{detection_probability, outcome_likelihood};
use decohere::{BinaryOutcome, DecayLaw, ReadoutModel};

/// Fisher information from its definition: sum over outcomes of (dp/dT)^2 / p,
/// with central differences of step `1e-6 * T`.
pub fn fisher_by_differences(tau: f64, law: &DecayLaw) -> f64 {
    let t = law.t_chi();
    let h = 1e-6 * t;
    let up = DecayLaw::new(t + h, law.beta()).unwrap();
    let down = DecayLaw::new(t - h, law.beta()).unwrap();
    [BinaryOutcome::Zero, BinaryOutcome::One]
        .into_iter()
        .map(|m| {
            let d = (outcome_likelihood(m, tau, &up) - outcome_likelihood(m, tau, &down)) / (2.0 * h);
            d * d / outcome_likelihood(m, tau, law)
        })
        .sum()
}

/// Bernoulli click information (dp_D/dT)^2 / (p_D (1 - p_D)). The derivative is a
/// Richardson-extrapolated central difference (steps 1e-4 T and 5e-5 T): the click
/// probability moves by ~1e-12 over a 1e-6 T step at short delays, which is too
/// close to its rounding error.
pub fn click_fisher_by_differences(tau: f64, law: &DecayLaw, readout: &ReadoutModel) -> f64 {
    let t = law.t_chi();
    let central = |h: f64| {
        let up = DecayLaw::new(t + h, law.beta()).unwrap();
        let down = DecayLaw::new(t - h, law.beta()).unwrap();
        (detection_probability(tau, &up, readout) - detection_probability(tau, &down, readout)) / (2.0 * h)
    };
    let h = 1e-4 * t;
    let d = (4.0 * central(0.5 * h) - central(h)) / 3.0;
    let p = detection_probability(tau, law, readout);
    d * d / (p * (1.0 - p))
}

/// Positive root of `1 - exp(-2u) = u`, by bisection.
pub fn variance_root() -> f64 {
    let g = |u: f64| 1.0 - (-2.0 * u).exp() - u;
    let (mut lo, mut hi) = (0.1, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Argmax of `F(x)/x` (unit T) by brute force over 300 000 points on (0, 3].
pub fn sensitivity_peak_dense(beta: f64) -> f64 {
    let rate = |x: f64| {
        let u = x.powf(beta);
        beta * beta * u * u / ((2.0 * u).exp_m1() * x)
    };
    let n = 300_000;
    (1..=n)
        .map(|i| 3.0 * i as f64 / n as f64)
        .max_by(|a, b| rate(*a).total_cmp(&rate(*b)))
        .unwrap()
}

/// Chi-square critical values at significance 0.001, indexed by degrees of freedom.
pub const CHI2_CRIT_0001: [f64; 6] = [f64::NAN, 10.828, 13.816, 16.266, 18.467, 20.515];

/// Binomial pmf for small `n`.
pub fn binomial_pmf(k: u64, n: u64, p: f64) -> f64 {
    let choose = (0..k).fold(1.0, |c, i| c * (n - i) as f64 / (i + 1) as f64);
    choose * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)
}

/// Pearson chi-square statistic of observed counts against expected probabilities.
pub fn pearson(observed: &[u64], probabilities: &[f64]) -> f64 {
    let n: u64 = observed.iter().sum();
    observed
        .iter()
        .zip(probabilities)
        .map(|(&o, &p)| {
            let e = n as f64 * p;
            (o as f64 - e).powi(2) / e
        })
        .sum()
}
