//! Effect estimation when the treatment is missing at random given text,
//! confounder and outcome.
//!
//! The estimator of record is multiple imputation: fit `p(A | T, C, Y)` on
//! the rows whose treatment is observed, complete every other row with a
//! draw from the classifier, compute the backdoor effect on the completed
//! data, and average over imputations. Replicates are combined by plain
//! averaging of point estimates; no between-imputation variance is pooled.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::oracle::{ExactJoint, ExtraKind};
use crate::rng::{self, Tag};
use crate::tabular::{backdoor, tau_simple, Dataset, Diagnostics, EffectEstimate, Estimator, StratumTable, Var};
use crate::textclf::{self, draw, FeatureSet, FitConfig, Labeled};

#[derive(Debug, Clone, PartialEq)]
pub struct MiConfig {
    pub imputations: usize,
    pub fit: FitConfig,
    /// Master seed; imputation `j` uses the stream `(seed, Imputation, j)`.
    pub seed: u64,
}

impl Default for MiConfig {
    fn default() -> Self {
        MiConfig {
            imputations: 20,
            fit: FitConfig::default(),
            seed: 0,
        }
    }
}

/// Running sum with Neumaier compensation.
#[derive(Debug, Default, Clone, Copy)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Per-replicate results of a multiple-imputation run.
#[derive(Debug, Clone, PartialEq)]
pub struct Imputations {
    pub estimates: Vec<EffectEstimate>,
    pub dropped: usize,
}

impl Imputations {
    /// Average of the per-arm means over the surviving replicates.
    pub fn combine(&self, estimator: Estimator, n_used: u64) -> Result<EffectEstimate> {
        if self.estimates.is_empty() {
            return Err(Error::AllReplicatesFailed(self.dropped));
        }
        let mut y1 = CompensatedSum::default();
        let mut y0 = CompensatedSum::default();
        for e in &self.estimates {
            y1.add(e.mean_y1());
            y0.add(e.mean_y0());
        }
        let k = self.estimates.len() as f64;
        Ok(EffectEstimate::new(y1.value() / k, y0.value() / k, estimator, n_used).with_diagnostics(
            Diagnostics {
                dropped_replicates: self.dropped as u32,
                ..Diagnostics::default()
            },
        ))
    }
}

fn observed_counts(data: &Dataset) -> [u64; 8] {
    let mut counts = [0u64; 8];
    for row in data.rows() {
        if let Some(a) = row.a {
            counts[usize::from(a) | usize::from(row.c) << 1 | usize::from(row.y) << 2] += 1;
        }
    }
    counts
}

/// Completes the missing rows `imputations` times with Bernoulli draws.
///
/// `missing_probs[k]` is `p(A=1 | ...)` for the `k`-th row (in dataset
/// order) whose treatment is missing. Replicates that hit a positivity
/// violation are dropped and counted.
pub fn impute_replicates(
    data: &Dataset,
    missing_probs: &[f64],
    imputations: usize,
    seed: u64,
) -> Result<Imputations> {
    let missing: Vec<usize> = (0..data.len()).filter(|&i| data.row(i).a.is_none()).collect();
    if missing.len() != missing_probs.len() {
        return Err(Error::InvalidParameter("one probability per missing row is required"));
    }
    let base = observed_counts(data);
    let mut estimates = Vec::with_capacity(imputations);
    let mut dropped = 0;
    for j in 0..imputations {
        let mut stream = rng::stream(seed, Tag::Imputation, &[j as u64]);
        let mut counts = base;
        for (&i, &p) in missing.iter().zip(missing_probs) {
            let row = data.row(i);
            let a = draw(p, &mut stream);
            counts[usize::from(a) | usize::from(row.c) << 1 | usize::from(row.y) << 2] += 1;
        }
        let table = StratumTable::from_counts(&[Var::A, Var::C, Var::Y], counts.to_vec())?;
        match backdoor(&table, Var::A) {
            Ok(e) => estimates.push(e),
            Err(Error::Positivity { .. }) => dropped += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(Imputations { estimates, dropped })
}

/// Multiple-imputation estimate with a classifier over `feature_set`.
pub fn tau_md_mi(data: &Dataset, feature_set: FeatureSet, config: &MiConfig) -> Result<EffectEstimate> {
    let estimator = Estimator::Imputed(feature_set);
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if data.observed_count() == data.len() {
        return Ok(tau_simple(data.rows())?.with_estimator(estimator));
    }
    if config.imputations == 0 {
        return Err(Error::InvalidParameter("at least one imputation is required"));
    }
    let labeled = Labeled::observed(data);
    let model = textclf::fit(&labeled, feature_set, &config.fit)?;
    let missing = (0..data.len()).filter(|&i| data.row(i).a.is_none());
    let probs = model.predict_rows(data, missing)?;
    let imputed = impute_replicates(data, &probs, config.imputations, config.seed)?;
    let estimate = imputed.combine(estimator, data.len() as u64)?;
    let mut diagnostics = estimate.diagnostics();
    diagnostics.nonconverged_fit = !model.info().converged;
    Ok(estimate.with_diagnostics(diagnostics))
}

/// Backdoor adjustment on the rows whose treatment is observed.
pub fn tau_md_baseline_naive(data: &Dataset) -> Result<EffectEstimate> {
    Ok(tau_simple(data.rows().filter(|r| r.a.is_some()))?.with_estimator(Estimator::Naive))
}

/// Multiple imputation from confounder and outcome only.
pub fn tau_md_baseline_no_text(data: &Dataset, config: &MiConfig) -> Result<EffectEstimate> {
    tau_md_mi(data, FeatureSet::NoText, config)
}

/// Multiple imputation from text and confounder, ignoring the outcome.
pub fn tau_md_baseline_no_y(data: &Dataset, config: &MiConfig) -> Result<EffectEstimate> {
    tau_md_mi(data, FeatureSet::NoY, config)
}

/// Exact evaluation of the missing-data identification functional on a
/// known joint over `(A(1), C, Y, R_A, T)`.
///
/// Only observed-data quantities are used: `p(A | T, C, Y, R_A = 1)` and
/// `p(T, C, Y)`. Then
///
/// ```text
/// p(A(1)=a, C=c, Y=y) = Σ_t p(A=a | t, c, y, R_A=1) p(t, c, y)
/// E[Y(a)] = Σ_c p(Y=1 | A(1)=a, c) p(c)
/// ```
pub fn tau_md_plugin_exact(joint: &ExactJoint) -> Result<EffectEstimate> {
    if joint.kind() != ExtraKind::Missingness {
        return Err(Error::InvalidParameter("joint has no missingness indicator"));
    }
    let words = 1usize << joint.vocab_size();
    // identified p(A(1)=a, c, y), indexed [a][c][y]
    let mut recovered = [[[0.0f64; 2]; 2]; 2];
    for c in [false, true] {
        for y in [false, true] {
            for t in 0..words {
                let p_tcy: f64 = [false, true]
                    .iter()
                    .flat_map(|&a| [false, true].map(|r| joint.prob(a, c, y, r, t)))
                    .sum();
                if p_tcy == 0.0 {
                    continue;
                }
                let observed = [false, true].map(|a| joint.prob(a, c, y, true, t));
                let p_obs = observed[0] + observed[1];
                if p_obs <= 0.0 {
                    return Err(Error::Unidentified);
                }
                for a in 0..2 {
                    recovered[a][usize::from(c)][usize::from(y)] += observed[a] / p_obs * p_tcy;
                }
            }
        }
    }
    let mut means = [0.0; 2];
    for c in 0..2 {
        let p_c: f64 = (0..2).map(|a| recovered[a][c][0] + recovered[a][c][1]).sum();
        for (a, mean) in means.iter_mut().enumerate() {
            let denominator = recovered[a][c][0] + recovered[a][c][1];
            if denominator <= 0.0 {
                return Err(Error::Unidentified);
            }
            *mean += recovered[a][c][1] / denominator * p_c;
        }
    }
    Ok(EffectEstimate::new(means[1], means[0], Estimator::PluginExact, 0))
}
