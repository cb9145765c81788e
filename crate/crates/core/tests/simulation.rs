mod common;

use decohere::model::{detection_probability, outcome_likelihood};
use decohere::simulator::{sample_counts, sample_single_shot, StreamPurpose};
use decohere::{BinaryOutcome, DecayLaw, ExperimentKind, GroundTruth, RandomStream, ReadoutModel};

const US: f64 = 1e-6;
const DRAWS: usize = 100_000;

fn truth(t: f64, beta: f64) -> GroundTruth {
    GroundTruth::new(DecayLaw::new(t, beta).unwrap(), ExperimentKind::Ramsey)
}

#[test]
fn single_shot_frequencies_pass_goodness_of_fit() {
    let cases = [(0.5, 1.0), (1.0, 2.0), (2.5, 2.0), (3.0, 1.5), (6.0, 3.0)];
    for (i, &(tau_us, beta)) in cases.iter().enumerate() {
        let g = truth(2.5 * US, beta);
        let mut rng = RandomStream::for_replica(7, i as u64, StreamPurpose::Measurement);
        let zeros = (0..DRAWS)
            .filter(|_| sample_single_shot(tau_us * US, &g, &mut rng) == BinaryOutcome::Zero)
            .count() as u64;
        let p0 = outcome_likelihood(BinaryOutcome::Zero, tau_us * US, &g.law);
        let stat = common::pearson(&[zeros, DRAWS as u64 - zeros], &[p0, 1.0 - p0]);
        assert!(stat < common::CHI2_CRIT_0001[1], "tau {tau_us} us: chi2 = {stat}");
    }
}

#[test]
fn binomial_counts_pass_goodness_of_fit() {
    // R = 5 keeps every cell well populated at a high click probability
    let readout = ReadoutModel::new(0.6, 0.2, 5).unwrap();
    let cases = [(0.2, 2.0), (1.0, 1.0), (2.0, 1.5), (2.5, 2.0), (5.0, 3.0)];
    for (i, &(tau_us, beta)) in cases.iter().enumerate() {
        let g = truth(2.5 * US, beta);
        let mut rng = RandomStream::for_replica(8, i as u64, StreamPurpose::Measurement);
        let mut hist = [0u64; 6];
        for _ in 0..DRAWS {
            hist[sample_counts(tau_us * US, &g, &readout, &mut rng) as usize] += 1;
        }
        let p = detection_probability(tau_us * US, &g.law, &readout);
        let probs: Vec<f64> = (0..=5).map(|k| common::binomial_pmf(k, 5, p)).collect();
        let stat = common::pearson(&hist, &probs);
        assert!(stat < common::CHI2_CRIT_0001[5], "tau {tau_us} us: chi2 = {stat}");
    }
}

#[test]
fn one_repetition_of_a_perfect_readout_is_a_single_shot() {
    // alpha (1 + V) = 1 and alpha (1 - V) = 0
    let readout = ReadoutModel::new(1.0, 0.0, 1).unwrap();
    let g = truth(2.5 * US, 2.0);
    let n = 10_000;
    let tau = 2.0 * US;
    let mut a = RandomStream::for_replica(9, 0, StreamPurpose::Measurement);
    let mut b = RandomStream::for_replica(9, 1, StreamPurpose::Measurement);
    let clicks = (0..n).map(|_| sample_counts(tau, &g, &readout, &mut a)).sum::<u64>() as f64;
    let zeros = (0..n)
        .filter(|_| sample_single_shot(tau, &g, &mut b) == BinaryOutcome::Zero)
        .count() as f64;
    // two-proportion z-test
    let (pa, pb) = (clicks / n as f64, zeros / n as f64);
    let pooled = 0.5 * (pa + pb);
    let z = (pa - pb) / (pooled * (1.0 - pooled) * 2.0 / n as f64).sqrt();
    assert!(z.abs() < 3.29, "z = {z}");
}

#[test]
fn call_sequence_fixes_the_outcomes() {
    let readout = ReadoutModel::nv_center(10_000).unwrap();
    let g = truth(2.5 * US, 2.0);
    let draw = || {
        let mut rng = RandomStream::for_replica(3, 17, StreamPurpose::Measurement);
        (0..200)
            .map(|i| {
                if i % 2 == 0 {
                    sample_counts(0.02 * i as f64 * US, &g, &readout, &mut rng)
                } else {
                    sample_single_shot(0.02 * i as f64 * US, &g, &mut rng).bit()
                }
            })
            .collect::<Vec<_>>()
    };
    assert_eq!(draw(), draw());
}
