//! Statistical checks of the synthetic processes at a million rows.

use causal_text_core::oracle::{enumerate_joint, exact_tau_from_marginal, FactorSpec};
use causal_text_core::rng::{stream, Tag};
use causal_text_core::synthgen::{
    generate_md_dataset, generate_me_datasets, p_outcome, p_treatment, sample_coefficients, SynthParams, P_CONFOUNDER,
};
use causal_text_core::tabular::{tau_simple, Triple};

const N: usize = 1_000_000;

fn params(vocab_size: usize) -> SynthParams {
    SynthParams {
        vocab_size,
        ..SynthParams::default()
    }
}

/// `|hits/n - p| < k` binomial standard errors.
fn within(hits: u64, n: u64, p: f64, k: f64) -> bool {
    let se = (p * (1.0 - p) / n as f64).sqrt();
    (hits as f64 / n as f64 - p).abs() < k * se
}

fn tally(rows: &[Triple], pred: impl Fn(&Triple) -> bool, hit: impl Fn(&Triple) -> bool) -> (u64, u64) {
    rows.iter()
        .filter(|r| pred(r))
        .fold((0, 0), |(h, n), r| (h + u64::from(hit(r)), n + 1))
}

#[test]
fn measurement_error_process_matches_its_structural_equations() {
    let p = params(16);
    let coeffs = sample_coefficients(&p, &mut stream(11, Tag::Coefficients, &[])).unwrap();
    let (_, test) = generate_me_datasets(1, N, &coeffs, &p, &mut stream(11, Tag::Dataset, &[])).unwrap();
    let rows: Vec<Triple> = test.sample.restored().collect();
    assert_eq!(rows.len(), N);

    let (h, n) = tally(&rows, |_| true, |r| r.c);
    assert!(within(h, n, P_CONFOUNDER, 4.0));
    for c in [false, true] {
        let (h, n) = tally(&rows, |r| r.c == c, |r| r.a);
        assert!(within(h, n, p_treatment(c), 4.0), "A | C={c}");
        for a in [false, true] {
            let (h, n) = tally(&rows, |r| r.c == c && r.a == a, |r| r.y);
            assert!(within(h, n, p_outcome(a, c), 4.0), "Y | A={a}, C={c}");
        }
    }
    let (h, n) = tally(&rows, |r| r.a && !r.c, |r| r.y);
    assert!((h as f64 / n as f64 - 0.6).abs() < 0.002);

    assert!(test.stats.min_param >= p.clamp_epsilon);
    assert!(test.stats.max_param <= 1.0 - p.clamp_epsilon);
}

#[test]
fn perfect_data_estimate_recovers_the_effect_and_the_unadjusted_contrast_does_not() {
    let p = params(4);
    let coeffs = sample_coefficients(&p, &mut stream(12, Tag::Coefficients, &[])).unwrap();
    let md = generate_md_dataset(N, &coeffs, &p, &mut stream(12, Tag::Dataset, &[])).unwrap();
    let rows: Vec<Triple> = md.sample.restored().collect();

    let estimate = tau_simple(rows.iter()).unwrap().tau();
    assert!((estimate - 0.1).abs() < 0.005, "{estimate}");

    // closed-form joint of the structural part
    let spec = FactorSpec::measurement_error(&causal_text_core::synthgen::TextCoefficients::zeros(0), None);
    let joint = enumerate_joint(&spec).unwrap().treatment_marginal();
    let exact = exact_tau_from_marginal(&joint).unwrap().tau();
    assert!((exact - 0.1).abs() < 1e-12);
    let arm = |a: usize| (joint[a][0][1] + joint[a][1][1]) / (joint[a][0][0] + joint[a][0][1] + joint[a][1][0] + joint[a][1][1]);
    let unadjusted_exact = arm(1) - arm(0);
    assert!((unadjusted_exact - 0.1).abs() > 0.05);

    let (h1, n1) = tally(&rows, |r| r.a, |r| r.y);
    let (h0, n0) = tally(&rows, |r| !r.a, |r| r.y);
    let unadjusted = h1 as f64 / n1 as f64 - h0 as f64 / n0 as f64;
    let se = (arm(1) * (1.0 - arm(1)) / n1 as f64 + arm(0) * (1.0 - arm(0)) / n0 as f64).sqrt();
    assert!((unadjusted - unadjusted_exact).abs() < 4.0 * se);
}

#[test]
fn missingness_ignores_the_treatment_given_text_confounder_and_outcome() {
    let p = params(2);
    let coeffs = sample_coefficients(&p, &mut stream(13, Tag::Coefficients, &[])).unwrap();
    let md = generate_md_dataset(N, &coeffs, &p, &mut stream(13, Tag::Dataset, &[])).unwrap();
    let data = &md.sample.data;
    // [t][c][y][a] -> (observed, total)
    let mut cells = [[[[(0u64, 0u64); 2]; 2]; 2]; 4];
    for (row, &a) in data.rows().zip(md.sample.truth.as_slice()) {
        let t = row.text.iter().fold(0, |acc, i| acc | 1usize << i);
        let cell = &mut cells[t][usize::from(row.c)][usize::from(row.y)][usize::from(a)];
        cell.0 += u64::from(row.a.is_some());
        cell.1 += 1;
    }
    for arms in cells.iter().flatten().flatten() {
        let [(h0, n0), (h1, n1)] = *arms;
        if n0 < 100 || n1 < 100 {
            continue;
        }
        let pooled = (h0 + h1) as f64 / (n0 + n1) as f64;
        let se = (pooled * (1.0 - pooled) * (1.0 / n0 as f64 + 1.0 / n1 as f64)).sqrt();
        let diff = h1 as f64 / n1 as f64 - h0 as f64 / n0 as f64;
        assert!(diff.abs() <= 4.5 * se.max(1e-12), "diff {diff} se {se}");
    }
}

#[test]
fn generation_is_reproducible() {
    let p = params(130);
    let coeffs = sample_coefficients(&p, &mut stream(5, Tag::Coefficients, &[1])).unwrap();
    let once = generate_md_dataset(2_000, &coeffs, &p, &mut stream(5, Tag::Dataset, &[1])).unwrap();
    let twice = generate_md_dataset(2_000, &coeffs, &p, &mut stream(5, Tag::Dataset, &[1])).unwrap();
    assert_eq!(once, twice);
    let other = generate_md_dataset(2_000, &coeffs, &p, &mut stream(5, Tag::Dataset, &[2])).unwrap();
    assert_ne!(once.sample, other.sample);
}
