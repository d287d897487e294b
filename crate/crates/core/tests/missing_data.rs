use causal_text_core::missing::{
    impute_replicates, tau_md_baseline_naive, tau_md_baseline_no_text, tau_md_baseline_no_y, tau_md_mi, MiConfig,
};
use causal_text_core::oracle::{enumerate_joint, FactorSpec};
use causal_text_core::rng::{stream, Tag};
use causal_text_core::synthgen::{generate_me_datasets, sample_coefficients, SynthParams, TextCoefficients};
use causal_text_core::tabular::{tau_simple, Dataset};
use causal_text_core::textclf::FeatureSet;
use rand::Rng;

fn complete_sample(n: usize, vocab_size: usize, seed: u64) -> Dataset {
    let p = SynthParams {
        vocab_size,
        ..SynthParams::default()
    };
    let coeffs = sample_coefficients(&p, &mut stream(seed, Tag::Coefficients, &[])).unwrap();
    let (train, _) = generate_me_datasets(n, 1, &coeffs, &p, &mut stream(seed, Tag::Dataset, &[])).unwrap();
    train.sample.data
}

/// Hides each treatment independently with probability `rate`.
fn mcar(data: Dataset, rate: f64, seed: u64) -> Dataset {
    let mut rng = stream(seed, Tag::Mask, &[]);
    let treatments: Vec<Option<bool>> = data.rows().map(|r| r.a.filter(|_| rng.random::<f64>() >= rate)).collect();
    data.with_treatments(&treatments).unwrap()
}

/// Exact `p(A=1 | C=c, Y=y)` of the structural process, indexed `[c][y]`.
fn exact_treatment_posterior() -> [[f64; 2]; 2] {
    let spec = FactorSpec::measurement_error(&TextCoefficients::zeros(0), None);
    let m = enumerate_joint(&spec).unwrap().treatment_marginal();
    core::array::from_fn(|c| core::array::from_fn(|y| m[1][c][y] / (m[0][c][y] + m[1][c][y])))
}

#[test]
fn without_missing_rows_every_estimator_is_the_complete_data_estimate() {
    let data = complete_sample(3_000, 40, 1);
    let simple = tau_simple(data.rows()).unwrap().tau();
    let config = MiConfig::default();
    let estimates = [
        tau_md_baseline_naive(&data).unwrap(),
        tau_md_baseline_no_text(&data, &config).unwrap(),
        tau_md_baseline_no_y(&data, &config).unwrap(),
        tau_md_mi(&data, FeatureSet::Full, &config).unwrap(),
    ];
    for e in estimates {
        assert_eq!(e.tau().to_bits(), simple.to_bits(), "{:?}", e.estimator());
    }
}

#[test]
fn imputing_from_the_true_conditional_recovers_the_complete_data_estimate() {
    let full = complete_sample(200_000, 1, 2);
    let perfect = tau_simple(full.rows()).unwrap().tau();
    let masked = mcar(full, 0.5, 2);
    let posterior = exact_treatment_posterior();
    let probs: Vec<f64> = masked
        .rows()
        .filter(|r| r.a.is_none())
        .map(|r| posterior[usize::from(r.c)][usize::from(r.y)])
        .collect();
    let imputed = impute_replicates(&masked, &probs, 20, 9).unwrap();
    assert_eq!(imputed.dropped, 0);
    let estimate = imputed.combine(causal_text_core::Estimator::Perfect, masked.len() as u64).unwrap();
    assert!((estimate.tau() - perfect).abs() < 0.01, "{} vs {perfect}", estimate.tau());

    let fitted = tau_md_mi(&masked, FeatureSet::NoText, &MiConfig::default()).unwrap();
    assert!((fitted.tau() - perfect).abs() < 0.01, "{} vs {perfect}", fitted.tau());
    assert!((-1.0..=1.0).contains(&fitted.tau()));
}

#[test]
fn more_imputations_shrink_the_monte_carlo_spread() {
    let masked = mcar(complete_sample(2_000, 1, 3), 0.6, 3);
    let posterior = exact_treatment_posterior();
    let probs: Vec<f64> = masked
        .rows()
        .filter(|r| r.a.is_none())
        .map(|r| posterior[usize::from(r.c)][usize::from(r.y)])
        .collect();
    let spread = |m: usize| {
        let taus: Vec<f64> = (0..40u64)
            .map(|seed| {
                let imputed = impute_replicates(&masked, &probs, m, seed).unwrap();
                imputed.combine(causal_text_core::Estimator::Perfect, 0).unwrap().tau()
            })
            .collect();
        let mean = taus.iter().sum::<f64>() / taus.len() as f64;
        (taus.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (taus.len() - 1) as f64).sqrt()
    };
    let (sd20, sd200) = (spread(20), spread(200));
    // the ratio should be near 1/sqrt(10)
    assert!(sd200 < 0.6 * sd20, "sd20 {sd20} sd200 {sd200}");
}

#[test]
fn multiple_imputation_is_reproducible_for_a_seed() {
    let masked = mcar(complete_sample(1_500, 30, 4), 0.4, 4);
    let config = MiConfig {
        seed: 77,
        ..MiConfig::default()
    };
    let a = tau_md_mi(&masked, FeatureSet::Full, &config).unwrap();
    let b = tau_md_mi(&masked, FeatureSet::Full, &config).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.tau().to_bits(), (a.mean_y1() - a.mean_y0()).to_bits());
}
