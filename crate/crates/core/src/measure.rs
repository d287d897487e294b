//! Effect estimation when the treatment is only seen through a proxy.
//!
//! Within each `(c, y)` stratum the proxy distribution `q_{c,y}(a*)` and the
//! misclassification rates `ε_{c,y} = p(A*=0 | A=1, c, y)`,
//! `δ_{c,y} = p(A*=1 | A=0, c, y)` determine the true joint:
//!
//! ```text
//! p(A=1, c, y) = (-δ q(0) + (1 - δ) q(1)) / (1 - ε - δ)
//! p(A=0, c, y) = ((1 - ε) q(0) - ε q(1)) / (1 - ε - δ)
//! ```
//!
//! The inversion is exact only for rates conditional on the true treatment.
//! Rates conditional on the proxy (`p(A | A*)`) would make the map a plain
//! mixture and need no inversion at all.
//!
//! The adjustment divides by `1 - ε - δ`, so small denominators amplify any
//! error in the estimated rates. Adjusted values outside `[0, 1]` are kept
//! as computed and flagged rather than clipped.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::tabular::{
    backdoor, stratum_counts, tau_simple, Dataset, Diagnostics, EffectEstimate, Estimator, StratumTable, Var,
};
use crate::textclf::{self, ClassifierModel, ErrorRates, FeatureSet, FitConfig, Labeled};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdjustConfig {
    /// Minimum `|1 - ε - δ|` accepted in any stratum.
    pub singular_tol: f64,
    /// Adjusted probabilities in `[-tol, 1 + tol]` count as feasible.
    pub feasibility_tol: f64,
}

impl Default for AdjustConfig {
    fn default() -> Self {
        AdjustConfig {
            singular_tol: 1e-3,
            feasibility_tol: 1e-9,
        }
    }
}

/// Adjusted joint `p(A, C, Y)`.
///
/// Stored as unnormalized mass in the units of the input (counts or
/// probabilities) together with the input total.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdjustedJoint {
    /// Indexed `[a][c][y]`.
    mass: [[[f64; 2]; 2]; 2],
    total: f64,
    /// `1 - ε - δ` per `[c][y]`.
    denominators: [[f64; 2]; 2],
    feasible: bool,
}

impl AdjustedJoint {
    pub fn prob(&self, a: bool, c: bool, y: bool) -> f64 {
        self.mass[usize::from(a)][usize::from(c)][usize::from(y)] / self.total
    }

    /// Adjusted mass in the units of the input, indexed `[a][c][y]`.
    pub fn mass(&self) -> [[[f64; 2]; 2]; 2] {
        self.mass
    }

    /// Probabilities indexed `[a][c][y]`.
    pub fn probs(&self) -> [[[f64; 2]; 2]; 2] {
        self.mass.map(|m| m.map(|r| r.map(|x| x / self.total)))
    }

    pub fn denominator(&self, c: bool, y: bool) -> f64 {
        self.denominators[usize::from(c)][usize::from(y)]
    }

    pub fn is_feasible(&self) -> bool {
        self.feasible
    }

    pub fn sum(&self) -> f64 {
        self.probs().iter().flatten().flatten().sum()
    }

    /// Negative entries set to zero and the rest renormalized. For reporting
    /// only; estimates use the raw values.
    pub fn clipped(&self) -> [[[f64; 2]; 2]; 2] {
        let clipped = self.probs().map(|m| m.map(|r| r.map(|x| x.max(0.0))));
        let s: f64 = clipped.iter().flatten().flatten().sum();
        if s > 0.0 {
            clipped.map(|m| m.map(|r| r.map(|x| x / s)))
        } else {
            clipped
        }
    }

    /// Backdoor effect of the adjusted joint, with `p(C)` taken from the
    /// proxy-side total of each confounder stratum.
    pub fn effect(&self, n_used: u64) -> Result<EffectEstimate> {
        let mut means = [0.0f64; 2];
        let mut feasible = self.feasible;
        for c in 0..2 {
            let stratum: f64 = (0..2).map(|a| self.mass[a][c][0] + self.mass[a][c][1]).sum();
            let p_c = stratum / self.total;
            for (a, mean) in means.iter_mut().enumerate() {
                let arm = self.mass[a][c][0] + self.mass[a][c][1];
                if arm == 0.0 {
                    return Err(Error::Positivity {
                        treatment: a as u8,
                        confounder: c as u8,
                    });
                }
                let ratio = self.mass[a][c][1] / arm;
                if !(0.0..=1.0).contains(&ratio) {
                    feasible = false;
                }
                *mean += ratio * p_c;
            }
        }
        let estimate = EffectEstimate::new(means[1], means[0], Estimator::Adjusted, n_used);
        Ok(estimate.with_diagnostics(Diagnostics {
            infeasible_adjustment: !feasible,
            ..Diagnostics::default()
        }))
    }
}

/// Matrix adjustment of proxy mass `q` (indexed `[a*][c][y]`) with error
/// rates indexed `[c][y]`.
pub fn adjust_mass(
    q: &[[[f64; 2]; 2]; 2],
    epsilon: &[[f64; 2]; 2],
    delta: &[[f64; 2]; 2],
    config: &AdjustConfig,
) -> Result<AdjustedJoint> {
    let total: f64 = q.iter().flatten().flatten().sum();
    if total <= 0.0 {
        return Err(Error::EmptyDataset);
    }
    let mut mass = [[[0.0; 2]; 2]; 2];
    let mut denominators = [[0.0; 2]; 2];
    for c in 0..2 {
        for y in 0..2 {
            let (e, d) = (epsilon[c][y], delta[c][y]);
            let det = 1.0 - e - d;
            if det.abs() < config.singular_tol {
                return Err(Error::SingularAdjustment {
                    confounder: c as u8,
                    outcome: y as u8,
                    determinant: det,
                });
            }
            denominators[c][y] = det;
            let (q0, q1) = (q[0][c][y], q[1][c][y]);
            mass[1][c][y] = (-d * q0 + (1.0 - d) * q1) / det;
            mass[0][c][y] = ((1.0 - e) * q0 - e * q1) / det;
        }
    }
    let tol = config.feasibility_tol;
    let feasible = mass
        .iter()
        .flatten()
        .flatten()
        .all(|&m| (-tol..=1.0 + tol).contains(&(m / total)));
    Ok(AdjustedJoint {
        mass,
        total,
        denominators,
        feasible,
    })
}

/// Matrix adjustment of a proxy table over `(A*, C, Y)`.
pub fn matrix_adjust(q: &StratumTable, err: &ErrorRates, config: &AdjustConfig) -> Result<AdjustedJoint> {
    let table = q.marginalize(&[Var::AStar, Var::C, Var::Y])?;
    let counts = table.counts();
    let mut mass = [[[0.0; 2]; 2]; 2];
    let mut epsilon = [[0.0; 2]; 2];
    let mut delta = [[0.0; 2]; 2];
    for c in 0..2 {
        for y in 0..2 {
            for (s, m) in mass.iter_mut().enumerate() {
                m[c][y] = counts[s | c << 1 | y << 2] as f64;
            }
            epsilon[c][y] = err.epsilon(c == 1, y == 1)?;
            delta[c][y] = err.delta(c == 1, y == 1)?;
        }
    }
    adjust_mass(&mass, &epsilon, &delta, config)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeConfig {
    pub fit: FitConfig,
    pub adjust: AdjustConfig,
    /// Error rates come from out-of-fold predictions over this many folds of
    /// the training rows; 0 or 1 means in-sample predictions of the final
    /// classifier.
    pub folds: usize,
}

impl Default for MeConfig {
    fn default() -> Self {
        MeConfig {
            fit: FitConfig::default(),
            adjust: AdjustConfig::default(),
            folds: 5,
        }
    }
}

/// Classifier for the proxy: all features, outcome included, fit on the
/// labeled training rows.
///
/// Using the outcome as a predictor is sound here because the proxy is a
/// measurement of the treatment, not a forecast made before the outcome.
pub fn fit_proxy_classifier(train: &Dataset, config: &FitConfig) -> Result<ClassifierModel> {
    textclf::fit(&Labeled::observed(train), FeatureSet::Full, config)
}

/// The proxy classifier together with its error rates on the training rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ProxyFit {
    pub model: ClassifierModel,
    pub rates: ErrorRates,
    /// Every fit involved reached the gradient tolerance.
    pub converged: bool,
}

/// Error rates from out-of-fold predictions. Row `i` belongs to fold
/// `i % folds`; a fitted classifier tends to look perfect on its own
/// training rows, which would bias the rates toward zero.
pub fn out_of_fold_error_rates(train: &Dataset, folds: usize, config: &FitConfig) -> Result<(ErrorRates, bool)> {
    if folds < 2 {
        return Err(Error::InvalidParameter("cross-fitting needs at least two folds"));
    }
    let labeled = Labeled::observed(train);
    let mut pairs = Vec::with_capacity(labeled.len());
    let mut converged = true;
    for k in 0..folds {
        let (held, kept): (Vec<_>, Vec<_>) = labeled
            .examples()
            .iter()
            .enumerate()
            .partition(|(i, _)| i % folds == k);
        let kept = Labeled::new(train.vocab_size(), kept.into_iter().map(|(_, e)| *e).collect());
        let model = textclf::fit(&kept, FeatureSet::Full, config)?;
        converged &= model.info().converged;
        for (_, ex) in held {
            pairs.push((model.impute_proxy(&ex.row)?, ex.label, ex.row.c, ex.row.y));
        }
    }
    Ok((ErrorRates::from_pairs(pairs), converged))
}

/// Fits the proxy classifier on all labeled training rows and measures its
/// error rates.
pub fn learn_proxy(train: &Dataset, config: &MeConfig) -> Result<ProxyFit> {
    let model = fit_proxy_classifier(train, &config.fit)?;
    let mut converged = model.info().converged;
    let rates = if config.folds > 1 {
        let (rates, folds_converged) = out_of_fold_error_rates(train, config.folds, &config.fit)?;
        converged &= folds_converged;
        rates
    } else {
        textclf::error_rates(&model, &Labeled::observed(train))?
    };
    Ok(ProxyFit {
        model,
        rates,
        converged,
    })
}

/// Adjusted effect from test rows that already carry proxies and error
/// rates measured elsewhere.
pub fn adjusted_from_proxies(test: &Dataset, err: &ErrorRates, config: &AdjustConfig) -> Result<EffectEstimate> {
    let q = stratum_counts(test.rows(), &[Var::AStar, Var::C, Var::Y])?;
    matrix_adjust(&q, err, config)?.effect(test.len() as u64)
}

/// Learns the proxy on `train`, imputes proxies on `test` and returns the
/// adjusted effect.
pub fn tau_me_adjusted(train: &Dataset, test: &Dataset, config: &MeConfig) -> Result<EffectEstimate> {
    if test.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let proxy = learn_proxy(train, config)?;
    let proxies = proxy.model.impute_proxies(test)?;
    let test = test.clone().with_proxies(&proxies)?;
    let estimate = adjusted_from_proxies(&test, &proxy.rates, &config.adjust)?;
    let mut diagnostics = estimate.diagnostics();
    diagnostics.nonconverged_fit = !proxy.converged;
    Ok(estimate.with_diagnostics(diagnostics))
}

/// Backdoor adjustment treating the proxy as the true treatment.
pub fn tau_me_unadjusted(test: &Dataset) -> Result<EffectEstimate> {
    let table = stratum_counts(test.rows(), &[Var::AStar, Var::C, Var::Y])?;
    Ok(backdoor(&table, Var::AStar)?.with_estimator(Estimator::Unadjusted))
}

/// Backdoor adjustment on the labeled training rows alone.
pub fn tau_me_naive(train: &Dataset) -> Result<EffectEstimate> {
    Ok(tau_simple(train.rows())?.with_estimator(Estimator::Naive))
}
