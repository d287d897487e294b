use causal_text_core::measure::{
    adjusted_from_proxies, fit_proxy_classifier, tau_me_adjusted, tau_me_naive, tau_me_unadjusted, AdjustConfig,
    MeConfig,
};
use causal_text_core::oracle::{enumerate_joint, exact_tau_from_marginal, forward_flip, FactorSpec};
use causal_text_core::rng::{stream, Tag};
use causal_text_core::synthgen::{generate_me_datasets, sample_coefficients, SynthParams, TextCoefficients};
use causal_text_core::tabular::tau_simple;
use causal_text_core::textclf::{ErrorRates, FitConfig};
use rand::Rng;

fn params(vocab_size: usize) -> SynthParams {
    SynthParams {
        vocab_size,
        ..SynthParams::default()
    }
}

#[test]
fn injected_flip_is_undone_by_the_adjustment() {
    const EPSILON: f64 = 0.1; // p(A*=0 | A=1)
    const DELTA: f64 = 0.2; // p(A*=1 | A=0)
    let p = params(4);
    let coeffs = sample_coefficients(&p, &mut stream(21, Tag::Coefficients, &[])).unwrap();
    let (_, test) = generate_me_datasets(1, 1_000_000, &coeffs, &p, &mut stream(21, Tag::Dataset, &[])).unwrap();
    let truth = test.sample.truth.as_slice();
    let mut flips = stream(21, Tag::Flip, &[]);
    let proxies: Vec<bool> = truth
        .iter()
        .map(|&a| {
            let u = flips.random::<f64>();
            if a { u >= EPSILON } else { u < DELTA }
        })
        .collect();
    let rows = test.sample.data.clone().with_proxies(&proxies).unwrap();
    let rates = ErrorRates::from_pairs(rows.rows().zip(truth).map(|(r, &a)| (r.proxy.unwrap(), a, r.c, r.y)));

    let adjusted = adjusted_from_proxies(&rows, &rates, &AdjustConfig::default()).unwrap();
    let perfect = tau_simple(test.sample.restored()).unwrap().tau();
    assert!((adjusted.tau() - 0.1).abs() < 0.01, "adjusted {}", adjusted.tau());
    assert!((adjusted.tau() - perfect).abs() < 1e-9);

    let structural = enumerate_joint(&FactorSpec::measurement_error(&TextCoefficients::zeros(0), None))
        .unwrap()
        .treatment_marginal();
    let flipped = forward_flip(&structural, DELTA, EPSILON).unwrap();
    let expected_bias = exact_tau_from_marginal(&flipped.q).unwrap().tau() - 0.1;
    let unadjusted = tau_me_unadjusted(&rows).unwrap().tau();
    assert!(expected_bias.abs() > 0.02);
    assert!((unadjusted - 0.1 - expected_bias).abs() < 0.01, "bias {} vs {expected_bias}", unadjusted - 0.1);
}

#[test]
fn proxy_classifier_is_accurate_on_synthetic_text() {
    let p = params(4334);
    let coeffs = sample_coefficients(&p, &mut stream(22, Tag::Coefficients, &[])).unwrap();
    let (train, test) = generate_me_datasets(2_000, 10_000, &coeffs, &p, &mut stream(22, Tag::Dataset, &[])).unwrap();
    let model = fit_proxy_classifier(&train.sample.data, &FitConfig::default()).unwrap();
    let proxies = model.impute_proxies(&test.sample.data).unwrap();
    let correct = proxies.iter().zip(test.sample.truth.as_slice()).filter(|(p, t)| p == t).count();
    let accuracy = correct as f64 / proxies.len() as f64;
    assert!(accuracy > 0.9, "accuracy {accuracy}");

    let adjusted = tau_me_adjusted(&train.sample.data, &test.sample.data, &MeConfig::default());
    // a near-perfect proxy may leave an error cell empty; anything else must succeed
    match adjusted {
        Ok(e) => assert_eq!(e.tau().to_bits(), (e.mean_y1() - e.mean_y0()).to_bits()),
        Err(causal_text_core::Error::UnestimableErrorRate { .. }) => {}
        Err(e) => panic!("{e}"),
    }
}

#[test]
fn naive_estimate_on_the_whole_population_is_the_perfect_estimate() {
    let p = params(10);
    let coeffs = sample_coefficients(&p, &mut stream(23, Tag::Coefficients, &[])).unwrap();
    let (train, _) = generate_me_datasets(5_000, 1, &coeffs, &p, &mut stream(23, Tag::Dataset, &[])).unwrap();
    let naive = tau_me_naive(&train.sample.data).unwrap();
    let perfect = tau_simple(train.sample.restored()).unwrap();
    assert_eq!(naive.tau().to_bits(), perfect.tau().to_bits());
}
