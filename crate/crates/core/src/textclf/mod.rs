//! Regularized logistic regression over a binary bag-of-words plus the
//! structured confounder and outcome.
//!
//! The weight vector has length `V + 3`: one weight per vocabulary word,
//! then `C`, `Y` and the bias. Blocks excluded by the [`FeatureSet`] stay at
//! exactly zero. The training objective is the mean negative log-likelihood
//! plus `λ‖w‖²/2` over every weight except the bias.

mod optim;

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

use rand::Rng;

use crate::error::{Error, Result};
use crate::tabular::{DataRow, Dataset, Record, RowView, Var};

pub use optim::Method;

/// Which predictors a classifier sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureSet {
    /// Text, confounder and outcome.
    Full,
    /// Text and confounder.
    NoY,
    /// Confounder and outcome only.
    NoText,
}

impl FeatureSet {
    pub fn label(&self) -> &'static str {
        match self {
            FeatureSet::Full => "full",
            FeatureSet::NoY => "no_y",
            FeatureSet::NoText => "no_text",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        match label {
            "full" => Some(FeatureSet::Full),
            "no_y" => Some(FeatureSet::NoY),
            "no_text" => Some(FeatureSet::NoText),
            _ => None,
        }
    }

    pub fn uses_text(&self) -> bool {
        !matches!(self, FeatureSet::NoText)
    }

    pub fn uses_outcome(&self) -> bool {
        !matches!(self, FeatureSet::NoY)
    }
}

/// A row that can be fed to a classifier.
pub trait BagOfWords: Record {
    fn for_each_word(&self, f: impl FnMut(u32));
}

impl BagOfWords for DataRow {
    fn for_each_word(&self, f: impl FnMut(u32)) {
        self.text.iter().copied().for_each(f)
    }
}

impl BagOfWords for RowView<'_> {
    #[inline]
    fn for_each_word(&self, f: impl FnMut(u32)) {
        self.text.iter().for_each(f)
    }
}

impl<R: BagOfWords> BagOfWords for &R {
    fn for_each_word(&self, f: impl FnMut(u32)) {
        (**self).for_each_word(f)
    }
}

/// One training example: a row and its label.
#[derive(Debug, Clone, Copy)]
pub struct Example<'a> {
    pub row: RowView<'a>,
    pub label: bool,
}

/// Labeled rows over one vocabulary.
#[derive(Debug, Clone)]
pub struct Labeled<'a> {
    vocab_size: usize,
    examples: Vec<Example<'a>>,
}

impl<'a> Labeled<'a> {
    pub fn new(vocab_size: usize, examples: Vec<Example<'a>>) -> Self {
        Labeled {
            vocab_size,
            examples,
        }
    }

    /// Rows whose treatment is observed, labeled with it.
    pub fn observed(dataset: &'a Dataset) -> Self {
        let examples = dataset
            .rows()
            .filter_map(|row| row.a.map(|label| Example { row, label }))
            .collect();
        Labeled::new(dataset.vocab_size(), examples)
    }

    /// Every row, labeled from an external column.
    pub fn with_labels(dataset: &'a Dataset, labels: &[bool]) -> Result<Self> {
        if labels.len() != dataset.len() {
            return Err(Error::InvalidParameter("label column length differs from row count"));
        }
        let examples = dataset
            .rows()
            .zip(labels)
            .map(|(row, &label)| Example { row, label })
            .collect();
        Ok(Labeled::new(dataset.vocab_size(), examples))
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn examples(&self) -> &[Example<'a>] {
        &self.examples
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub l2_lambda: f64,
    pub method: Method,
    /// Stop once the Euclidean norm of the gradient falls below this.
    pub grad_tol: f64,
    pub max_iter: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            l2_lambda: 1e-4,
            method: Method::Lbfgs { memory: 10 },
            grad_tol: 1e-5,
            max_iter: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingInfo {
    pub iterations: usize,
    pub final_objective: f64,
    pub gradient_norm: f64,
    /// False when the iteration cap or the line search stopped the fit first.
    pub converged: bool,
    pub objective_trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierModel {
    weights: Vec<f64>,
    feature_set: FeatureSet,
    l2_lambda: f64,
    vocab_size: usize,
    info: TrainingInfo,
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-z))
}

/// `ln(1 + e^x)` without overflow.
#[inline]
fn softplus(x: f64) -> f64 {
    x.max(0.0) + libm::log1p(libm::exp(-x.abs()))
}

#[inline]
fn nll(z: f64, label: bool) -> f64 {
    if label {
        softplus(-z)
    } else {
        softplus(z)
    }
}

struct Layout {
    vocab_size: usize,
    feature_set: FeatureSet,
}

impl Layout {
    fn c(&self) -> usize {
        self.vocab_size
    }
    fn y(&self) -> usize {
        self.vocab_size + 1
    }
    fn bias(&self) -> usize {
        self.vocab_size + 2
    }
    fn dim(&self) -> usize {
        self.vocab_size + 3
    }

    fn frozen(&self, j: usize) -> bool {
        if j < self.vocab_size {
            !self.feature_set.uses_text()
        } else {
            j == self.y() && !self.feature_set.uses_outcome()
        }
    }

    fn penalized(&self, j: usize) -> bool {
        j != self.bias() && !self.frozen(j)
    }

    #[inline]
    fn margin<R: BagOfWords>(&self, w: &[f64], row: &R) -> f64 {
        let mut z = w[self.bias()];
        if row.confounder() {
            z += w[self.c()];
        }
        if self.feature_set.uses_outcome() && row.outcome() {
            z += w[self.y()];
        }
        if self.feature_set.uses_text() {
            row.for_each_word(|j| z += w[j as usize]);
        }
        z
    }

    #[inline]
    fn scatter<R: BagOfWords>(&self, r: f64, row: &R, g: &mut [f64]) {
        g[self.bias()] += r;
        if row.confounder() {
            g[self.c()] += r;
        }
        if self.feature_set.uses_outcome() && row.outcome() {
            g[self.y()] += r;
        }
        if self.feature_set.uses_text() {
            row.for_each_word(|j| g[j as usize] += r);
        }
    }
}

struct LogisticObjective<'a, 'b> {
    data: &'b Labeled<'a>,
    layout: Layout,
    lambda: f64,
    w: Vec<f64>,
    d: Vec<f64>,
    z: Vec<f64>,
    xd: Vec<f64>,
    // penalty terms along the ray: ‖w‖², w·d, ‖d‖² over penalized weights
    ww: f64,
    wd: f64,
    dd: f64,
}

impl LogisticObjective<'_, '_> {
    fn penalized_dot(&self, a: &[f64], b: &[f64]) -> f64 {
        (0..a.len())
            .filter(|&j| self.layout.penalized(j))
            .map(|j| a[j] * b[j])
            .sum()
    }

    fn value_at(&self, z: impl Iterator<Item = f64>) -> f64 {
        let n = self.data.len() as f64;
        let loss: f64 = z
            .zip(self.data.examples())
            .map(|(z, ex)| nll(z, ex.label))
            .sum();
        loss / n
    }

    fn gradient_at_current(&self, grad: &mut [f64]) {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let n = self.data.len() as f64;
        for (ex, &z) in self.data.examples().iter().zip(&self.z) {
            let r = (sigmoid(z) - f64::from(u8::from(ex.label))) / n;
            self.layout.scatter(r, &ex.row, grad);
        }
        for (j, g) in grad.iter_mut().enumerate() {
            if self.layout.frozen(j) {
                *g = 0.0;
            } else if self.layout.penalized(j) {
                *g += self.lambda * self.w[j];
            }
        }
    }
}

impl optim::RayObjective for LogisticObjective<'_, '_> {
    fn dim(&self) -> usize {
        self.layout.dim()
    }

    fn start(&mut self, w: &[f64], grad: &mut [f64]) -> f64 {
        self.w = w.to_vec();
        self.z = self
            .data
            .examples()
            .iter()
            .map(|ex| self.layout.margin(w, &ex.row))
            .collect();
        self.ww = self.penalized_dot(w, w);
        self.gradient_at_current(grad);
        self.value_at(self.z.iter().copied()) + 0.5 * self.lambda * self.ww
    }

    fn set_direction(&mut self, d: &[f64]) {
        self.d = d.to_vec();
        self.xd = self
            .data
            .examples()
            .iter()
            .map(|ex| self.layout.margin(d, &ex.row))
            .collect();
        self.wd = self.penalized_dot(&self.w, d);
        self.dd = self.penalized_dot(d, d);
    }

    fn value_along(&self, alpha: f64) -> f64 {
        let z = self.z.iter().zip(&self.xd).map(|(z, xd)| z + alpha * xd);
        let penalty = self.ww + 2.0 * alpha * self.wd + alpha * alpha * self.dd;
        self.value_at(z) + 0.5 * self.lambda * penalty
    }

    fn accept(&mut self, alpha: f64, grad: &mut [f64]) -> f64 {
        for (z, xd) in self.z.iter_mut().zip(&self.xd) {
            *z += alpha * xd;
        }
        for (w, d) in self.w.iter_mut().zip(&self.d) {
            *w += alpha * d;
        }
        self.ww = self.penalized_dot(&self.w, &self.w);
        self.gradient_at_current(grad);
        self.value_at(self.z.iter().copied()) + 0.5 * self.lambda * self.ww
    }

    fn frozen(&self, j: usize) -> bool {
        self.layout.frozen(j)
    }
}

fn objective_for<'a, 'b>(
    data: &'b Labeled<'a>,
    feature_set: FeatureSet,
    lambda: f64,
) -> LogisticObjective<'a, 'b> {
    LogisticObjective {
        data,
        layout: Layout {
            vocab_size: data.vocab_size(),
            feature_set,
        },
        lambda,
        w: Vec::new(),
        d: Vec::new(),
        z: Vec::new(),
        xd: Vec::new(),
        ww: 0.0,
        wd: 0.0,
        dd: 0.0,
    }
}

/// Training objective at `w` (length `V + 3`).
pub fn objective(data: &Labeled<'_>, feature_set: FeatureSet, l2_lambda: f64, w: &[f64]) -> f64 {
    let mut obj = objective_for(data, feature_set, l2_lambda);
    let mut grad = vec![0.0; w.len()];
    optim::RayObjective::start(&mut obj, w, &mut grad)
}

/// Analytic gradient of [`objective`] at `w`.
pub fn gradient(data: &Labeled<'_>, feature_set: FeatureSet, l2_lambda: f64, w: &[f64]) -> Vec<f64> {
    let mut obj = objective_for(data, feature_set, l2_lambda);
    let mut grad = vec![0.0; w.len()];
    optim::RayObjective::start(&mut obj, w, &mut grad);
    grad
}

fn check_text<R: BagOfWords>(row: &R, vocab_size: usize) -> Result<()> {
    let mut bad = None;
    row.for_each_word(|j| {
        if j as usize >= vocab_size {
            bad = Some(j);
        }
    });
    match bad {
        Some(index) => Err(Error::TextIndexOutOfRange { index, vocab_size }),
        None => Ok(()),
    }
}

/// Fits a classifier from zero initial weights.
///
/// Deterministic: the same labeled rows and configuration always produce
/// bit-identical weights. Hitting the iteration cap is not an error; it is
/// reported through [`TrainingInfo::converged`].
pub fn fit(data: &Labeled<'_>, feature_set: FeatureSet, config: &FitConfig) -> Result<ClassifierModel> {
    if !config.l2_lambda.is_finite() || config.l2_lambda < 0.0 {
        return Err(Error::InvalidParameter("l2_lambda must be finite and nonnegative"));
    }
    let positives = data.examples().iter().filter(|e| e.label).count();
    if data.len() < 2 || positives == 0 || positives == data.len() {
        return Err(Error::DegenerateLabels);
    }
    if !feature_set.uses_text() {
        let first = data.examples()[0].row;
        let varies = |f: fn(&RowView<'_>) -> bool| data.examples().iter().any(|e| f(&e.row) != f(&first));
        if !varies(|r| r.c) && !(feature_set.uses_outcome() && varies(|r| r.y)) {
            return Err(Error::DegenerateFeatures);
        }
    }
    for ex in data.examples() {
        check_text(&ex.row, data.vocab_size())?;
    }

    let mut obj = objective_for(data, feature_set, config.l2_lambda);
    let mut weights = vec![0.0; obj.layout.dim()];
    let outcome = optim::minimize(
        &mut obj,
        &mut weights,
        config.method,
        config.grad_tol,
        config.max_iter,
    );
    Ok(ClassifierModel {
        weights,
        feature_set,
        l2_lambda: config.l2_lambda,
        vocab_size: data.vocab_size(),
        info: TrainingInfo {
            iterations: outcome.iterations,
            final_objective: outcome.objective,
            gradient_norm: outcome.gradient_norm,
            converged: outcome.converged,
            objective_trace: outcome.trace,
        },
    })
}

impl ClassifierModel {
    /// A model with the given weights; excluded blocks must be zero.
    pub fn from_weights(
        weights: Vec<f64>,
        feature_set: FeatureSet,
        l2_lambda: f64,
        vocab_size: usize,
    ) -> Result<Self> {
        let layout = Layout {
            vocab_size,
            feature_set,
        };
        if weights.len() != layout.dim() {
            return Err(Error::InvalidParameter("weight vector must have length V + 3"));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidParameter("weights must be finite"));
        }
        if weights.iter().enumerate().any(|(j, &w)| layout.frozen(j) && w != 0.0) {
            return Err(Error::InvalidParameter("excluded feature block must be zero"));
        }
        Ok(ClassifierModel {
            weights,
            feature_set,
            l2_lambda,
            vocab_size,
            info: TrainingInfo {
                iterations: 0,
                final_objective: f64::NAN,
                gradient_norm: f64::NAN,
                converged: true,
                objective_trace: Vec::new(),
            },
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn feature_set(&self) -> FeatureSet {
        self.feature_set
    }

    pub fn l2_lambda(&self) -> f64 {
        self.l2_lambda
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn info(&self) -> &TrainingInfo {
        &self.info
    }

    fn layout(&self) -> Layout {
        Layout {
            vocab_size: self.vocab_size,
            feature_set: self.feature_set,
        }
    }

    /// `sigmoid(w · x)` for one row.
    pub fn predict_proba<R: BagOfWords>(&self, row: &R) -> Result<f64> {
        check_text(row, self.vocab_size)?;
        Ok(sigmoid(self.layout().margin(&self.weights, row)))
    }

    /// Probabilities for the given rows of a dataset.
    pub fn predict_rows(&self, dataset: &Dataset, rows: impl IntoIterator<Item = usize>) -> Result<Vec<f64>> {
        if dataset.vocab_size() != self.vocab_size {
            return Err(Error::VocabMismatch {
                expected: self.vocab_size,
                found: dataset.vocab_size(),
            });
        }
        let layout = self.layout();
        Ok(rows
            .into_iter()
            .map(|i| sigmoid(layout.margin(&self.weights, &dataset.row(i))))
            .collect())
    }

    /// One Bernoulli draw with parameter [`Self::predict_proba`].
    pub fn sample_label<R: BagOfWords, G: Rng + ?Sized>(&self, row: &R, rng: &mut G) -> Result<bool> {
        let p = self.predict_proba(row)?;
        Ok(draw(p, rng))
    }

    /// Deterministic proxy: 1 iff the probability is at least one half.
    pub fn impute_proxy<R: BagOfWords>(&self, row: &R) -> Result<bool> {
        Ok(threshold(self.predict_proba(row)?))
    }

    /// Proxies for every row of a dataset.
    pub fn impute_proxies(&self, dataset: &Dataset) -> Result<Vec<bool>> {
        Ok(self
            .predict_rows(dataset, 0..dataset.len())?
            .into_iter()
            .map(threshold)
            .collect())
    }

    /// Plain-text dump: `key=value` header lines, then one weight per line.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "feature_set={}", self.feature_set.label());
        let _ = writeln!(out, "l2_lambda={:e}", self.l2_lambda);
        let _ = writeln!(out, "vocab_size={}", self.vocab_size);
        for w in &self.weights {
            let _ = writeln!(out, "{w:e}");
        }
        out
    }

    pub fn parse_dump(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let mut header = |key: &str| -> Result<String> {
            let line = lines.next().ok_or(Error::InvalidParameter("truncated model dump"))?;
            line.strip_prefix(key)
                .and_then(|rest| rest.strip_prefix('='))
                .map(String::from)
                .ok_or(Error::InvalidParameter("malformed model dump header"))
        };
        let feature_set = FeatureSet::from_label(&header("feature_set")?)
            .ok_or(Error::InvalidParameter("unknown feature set"))?;
        let l2_lambda = header("l2_lambda")?
            .parse()
            .map_err(|_| Error::InvalidParameter("malformed l2_lambda"))?;
        let vocab_size = header("vocab_size")?
            .parse()
            .map_err(|_| Error::InvalidParameter("malformed vocab_size"))?;
        let weights = lines
            .filter(|l| !l.trim().is_empty())
            .map(|l| l.trim().parse::<f64>())
            .collect::<core::result::Result<Vec<_>, _>>()
            .map_err(|_| Error::InvalidParameter("malformed weight"))?;
        ClassifierModel::from_weights(weights, feature_set, l2_lambda, vocab_size)
    }
}

#[inline]
pub(crate) fn threshold(p: f64) -> bool {
    p >= 0.5
}

/// Bernoulli draw; uses one `f64` from the stream.
#[inline]
pub(crate) fn draw<G: Rng + ?Sized>(p: f64, rng: &mut G) -> bool {
    rng.random::<f64>() < p
}

/// Misclassification rates of the proxy within each `(c, y)` stratum,
/// backed by the confusion counts.
///
/// The adjustment uses the rates conditional on the true treatment:
/// `epsilon[c][y] = p(A*=0 | A=1, c, y)` and `delta[c][y] = p(A*=1 | A=0, c, y)`.
/// The rates conditional on the proxy, `p(A=0 | A*=1, c, y)` and
/// `p(A=1 | A*=0, c, y)`, are available for reporting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorRates {
    /// Confusion counts indexed `[c][y][a*][a]`.
    support: [[[[u64; 2]; 2]; 2]; 2],
}

impl ErrorRates {
    pub fn from_confusion(support: [[[[u64; 2]; 2]; 2]; 2]) -> Self {
        ErrorRates { support }
    }

    /// Counts `(a*, a)` pairs per stratum from rows carrying both.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (bool, bool, bool, bool)>) -> Self {
        let mut support = [[[[0u64; 2]; 2]; 2]; 2];
        for (proxy, truth, c, y) in pairs {
            support[usize::from(c)][usize::from(y)][usize::from(proxy)][usize::from(truth)] += 1;
        }
        ErrorRates { support }
    }

    pub fn support(&self) -> &[[[[u64; 2]; 2]; 2]; 2] {
        &self.support
    }

    /// `p(A* = 1 - a | A = a, c, y)`.
    fn given_truth(&self, a: usize, c: usize, y: usize) -> Result<f64> {
        let s = &self.support[c][y];
        let n = s[0][a] + s[1][a];
        if n == 0 {
            return Err(Error::UnestimableErrorRate {
                given: Var::A,
                value: a as u8,
                confounder: c as u8,
                outcome: y as u8,
            });
        }
        Ok(s[1 - a][a] as f64 / n as f64)
    }

    /// `p(A = 1 - a* | A* = a*, c, y)`.
    fn given_proxy(&self, proxy: usize, c: usize, y: usize) -> Result<f64> {
        let cell = self.support[c][y][proxy];
        let n = cell[0] + cell[1];
        if n == 0 {
            return Err(Error::UnestimableErrorRate {
                given: Var::AStar,
                value: proxy as u8,
                confounder: c as u8,
                outcome: y as u8,
            });
        }
        Ok(cell[1 - proxy] as f64 / n as f64)
    }

    /// `p(A* = 0 | A = 1, c, y)`.
    pub fn epsilon(&self, c: bool, y: bool) -> Result<f64> {
        self.given_truth(1, usize::from(c), usize::from(y))
    }

    /// `p(A* = 1 | A = 0, c, y)`.
    pub fn delta(&self, c: bool, y: bool) -> Result<f64> {
        self.given_truth(0, usize::from(c), usize::from(y))
    }

    /// `p(A = 0 | A* = 1, c, y)`.
    pub fn posterior_epsilon(&self, c: bool, y: bool) -> Result<f64> {
        self.given_proxy(1, usize::from(c), usize::from(y))
    }

    /// `p(A = 1 | A* = 0, c, y)`.
    pub fn posterior_delta(&self, c: bool, y: bool) -> Result<f64> {
        self.given_proxy(0, usize::from(c), usize::from(y))
    }
}

/// Error rates of `model`'s thresholded proxies against the true labels.
pub fn error_rates(model: &ClassifierModel, data: &Labeled<'_>) -> Result<ErrorRates> {
    let mut pairs = Vec::with_capacity(data.len());
    for ex in data.examples() {
        let proxy = model.impute_proxy(&ex.row)?;
        pairs.push((proxy, ex.label, ex.row.c, ex.row.y));
    }
    Ok(ErrorRates::from_pairs(pairs))
}

/// Short human-readable summary used in logs.
pub fn describe(model: &ClassifierModel) -> String {
    format!(
        "{} classifier, V={}, lambda={:e}, {} iterations, objective {:.6}, converged={}",
        model.feature_set.label(),
        model.vocab_size,
        model.l2_lambda,
        model.info.iterations,
        model.info.final_objective,
        model.info.converged
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::{Provenance, TextLayout};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dataset(rows: Vec<DataRow>, vocab: usize) -> Dataset {
        Dataset::from_rows(vocab, Provenance::Synthetic, TextLayout::Sparse, rows).unwrap()
    }

    #[test]
    fn separable_data_has_finite_weights_under_penalty() {
        let rows = (0..20)
            .map(|i| {
                let a = i % 2 == 0;
                DataRow::new(Some(a), false, false).with_text(if a { vec![0] } else { vec![] })
            })
            .collect();
        let ds = dataset(rows, 1);
        let data = Labeled::observed(&ds);
        let config = FitConfig {
            l2_lambda: 1.0,
            ..FitConfig::default()
        };
        let model = fit(&data, FeatureSet::Full, &config).unwrap();
        assert!(model.info().converged);
        assert!(model.weights().iter().all(|w| w.is_finite()));
        assert!(model.weights()[0] > 0.0);
    }

    #[test]
    fn huge_penalty_leaves_only_the_bias() {
        let rows = (0..40)
            .map(|i| {
                DataRow::new(Some(i % 4 == 0), i % 3 == 0, i % 2 == 0)
                    .with_text(if i % 4 == 0 { vec![0, 1] } else { vec![1] })
            })
            .collect();
        let ds = dataset(rows, 2);
        let data = Labeled::observed(&ds);
        let config = FitConfig {
            l2_lambda: 1e9,
            ..FitConfig::default()
        };
        let model = fit(&data, FeatureSet::Full, &config).unwrap();
        let bias = model.weights()[4];
        for w in &model.weights()[..4] {
            assert!(w.abs() < 1e-7, "{w}");
        }
        // base rate 10/40
        assert!((sigmoid(bias) - 0.25).abs() < 1e-6);
        let p = model.predict_proba(&ds.row(0)).unwrap();
        assert!((p - sigmoid(bias)).abs() < 1e-6);
    }

    #[test]
    fn single_class_is_rejected() {
        let ds = dataset(vec![DataRow::new(Some(true), false, false); 3], 1);
        let err = fit(&Labeled::observed(&ds), FeatureSet::Full, &FitConfig::default());
        assert_eq!(err.unwrap_err(), Error::DegenerateLabels);
    }

    #[test]
    fn constant_structured_features_without_text_are_rejected() {
        let rows = vec![
            DataRow::new(Some(true), true, false),
            DataRow::new(Some(false), true, false),
        ];
        let ds = dataset(rows, 1);
        let err = fit(&Labeled::observed(&ds), FeatureSet::NoText, &FitConfig::default());
        assert_eq!(err.unwrap_err(), Error::DegenerateFeatures);
    }

    #[test]
    fn zero_weights_predict_one_half_and_impute_one() {
        let model = ClassifierModel::from_weights(vec![0.0; 5], FeatureSet::Full, 0.0, 2).unwrap();
        let row = DataRow::new(None, true, true).with_text(vec![1]);
        assert_eq!(model.predict_proba(&row).unwrap(), 0.5);
        assert!(model.impute_proxy(&row).unwrap());
        assert!(threshold(0.5));
        assert!(!threshold(0.5 - 1e-12));
    }

    #[test]
    fn adding_a_positive_word_never_lowers_the_probability() {
        let model =
            ClassifierModel::from_weights(vec![0.7, -0.2, 0.1, 0.3, -1.0], FeatureSet::Full, 0.0, 2).unwrap();
        let without = DataRow::new(None, false, true).with_text(vec![1]);
        let with = DataRow::new(None, false, true).with_text(vec![0, 1]);
        assert!(model.predict_proba(&with).unwrap() >= model.predict_proba(&without).unwrap());
    }

    #[test]
    fn out_of_vocabulary_rows_are_rejected() {
        let model = ClassifierModel::from_weights(vec![0.0; 5], FeatureSet::Full, 0.0, 2).unwrap();
        let row = DataRow::new(None, false, false).with_text(vec![2]);
        assert!(model.predict_proba(&row).is_err());
    }

    #[test]
    fn excluded_blocks_must_be_zero() {
        assert!(ClassifierModel::from_weights(vec![1.0, 0.0, 0.0, 0.0], FeatureSet::NoText, 0.0, 1).is_err());
        assert!(ClassifierModel::from_weights(vec![0.0, 0.0, 1.0, 0.0], FeatureSet::NoY, 0.0, 1).is_err());
        assert!(ClassifierModel::from_weights(vec![1.0, 1.0, 0.0, 1.0], FeatureSet::NoY, 0.0, 1).is_ok());
    }

    #[test]
    fn sampling_is_reproducible_and_extreme_probabilities_are_honored() {
        let near_one = ClassifierModel::from_weights(vec![0.0, 0.0, 40.0], FeatureSet::NoText, 0.0, 0).unwrap();
        let row = DataRow::new(None, false, false);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!((0..1000).all(|_| near_one.sample_label(&row, &mut rng).unwrap()));

        let m = ClassifierModel::from_weights(vec![0.0, 0.0, 0.0], FeatureSet::NoText, 0.0, 0).unwrap();
        let seq = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..64).map(|_| m.sample_label(&row, &mut rng).unwrap()).collect::<Vec<_>>()
        };
        assert_eq!(seq(11), seq(11));
        assert_ne!(seq(11), seq(12));
    }

    #[test]
    fn dump_round_trips() {
        let model = ClassifierModel::from_weights(
            vec![0.1, -2.5e-17, 0.0, 1.0 / 3.0, 7.0],
            FeatureSet::Full,
            1e-4,
            2,
        )
        .unwrap();
        let text = model.dump();
        assert!(text.starts_with("feature_set=full\nl2_lambda=1e-4\nvocab_size=2\n"));
        let back = ClassifierModel::parse_dump(&text).unwrap();
        assert_eq!(back.weights(), model.weights());
        assert_eq!(back.feature_set(), FeatureSet::Full);
    }

    #[test]
    fn error_rates_from_the_mismeasurement_table() {
        // (A*, A) = (1,1), (0,1), (0,0), (1,1), one stratum
        let pairs = [(true, true), (false, true), (false, false), (true, true)]
            .map(|(p, a)| (p, a, false, false));
        let rates = ErrorRates::from_pairs(pairs);
        assert_eq!(rates.posterior_epsilon(false, false).unwrap(), 0.0);
        assert_eq!(rates.posterior_delta(false, false).unwrap(), 0.5);
        assert_eq!(rates.epsilon(false, false).unwrap(), 1.0 / 3.0);
        assert_eq!(rates.delta(false, false).unwrap(), 0.0);
        assert!(matches!(
            rates.epsilon(true, false),
            Err(Error::UnestimableErrorRate { given: Var::A, value: 1, confounder: 1, outcome: 0 })
        ));
        assert!(matches!(
            rates.posterior_epsilon(true, false),
            Err(Error::UnestimableErrorRate { given: Var::AStar, value: 1, confounder: 1, outcome: 0 })
        ));
    }
}
