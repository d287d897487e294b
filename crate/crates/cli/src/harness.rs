//! Simulation study runner.
//!
//! For every `(n, replicate)` cell: draw or subsample data, induce missing
//! or mismeasured treatments, run each scenario model, and score it by the
//! squared distance to the perfect-data estimate on the same rows. Cells are
//! independent jobs with their own RNG streams, so the thread count never
//! changes an emitted number.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use causal_text_core::measure::{self, AdjustConfig, MeConfig};
use causal_text_core::missing::{self, MiConfig};
use causal_text_core::rng::{self, Tag};
use causal_text_core::synthgen::{self, SynthParams};
use causal_text_core::tabular::{tau_simple, Dataset, Diagnostics, EffectEstimate, Provenance, TextLayout, TreatmentTruth};
use causal_text_core::textclf::{FeatureSet, FitConfig, Method};
use causal_text_core::Error as CoreError;
use log::{debug, info};
use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ingest::IngestSummary;
use crate::rowfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Md,
    Me,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Synthetic,
    Yelp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    Lbfgs,
    Gd,
}

impl Scenario {
    pub fn label(self) -> &'static str {
        match self {
            Scenario::Md => "md",
            Scenario::Me => "me",
        }
    }

    pub fn models(self) -> &'static [&'static str] {
        match self {
            Scenario::Md => &["naive", "no_text", "no_y", "full"],
            Scenario::Me => &["naive", "unadjusted", "adjusted"],
        }
    }
}

impl Source {
    pub fn label(self) -> &'static str {
        match self {
            Source::Synthetic => "synthetic",
            Source::Yelp => "yelp",
        }
    }
}

/// Synthetic vocabulary size matching a real-data `min_count` profile.
pub fn synthetic_vocab_size(min_count: u64) -> Option<usize> {
    match min_count {
        1000 => Some(4334),
        10 => Some(53197),
        _ => None,
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

/// Everything a run depends on. Serialized verbatim into `manifest.json`;
/// running the same manifest again reproduces every output byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub source: Source,
    pub sizes: Vec<usize>,
    pub replicates: usize,
    pub imputations: usize,
    pub vocab_min_count: u64,
    /// Synthetic vocabulary size; Yelp runs take it from the data.
    pub vocab_size: usize,
    pub seed: u64,
    pub zeta: f64,
    pub eta: f64,
    pub clamp_epsilon: f64,
    pub l2_lambda: f64,
    pub grad_tol: f64,
    pub max_iter: usize,
    pub optimizer: Optimizer,
    pub lbfgs_memory: usize,
    pub singular_tol: f64,
    /// Folds for out-of-fold error rates; 0 or 1 measures them in sample.
    pub error_rate_folds: usize,
    /// Measurement-error training size is `max(min_train, train_fraction * n)`.
    pub min_train: usize,
    pub train_fraction: f64,
    /// Directory written by `causal-text ingest`, for Yelp runs.
    pub data: Option<PathBuf>,
    pub out: PathBuf,
}

impl ExperimentConfig {
    pub fn new(scenario: Scenario, source: Source, out: impl Into<PathBuf>) -> Self {
        let synth = SynthParams::default();
        let fit = FitConfig::default();
        ExperimentConfig {
            scenario,
            source,
            sizes: vec![1_000, 10_000, 100_000, 1_000_000],
            replicates: 10,
            imputations: 20,
            vocab_min_count: 1000,
            vocab_size: synth.vocab_size,
            seed: 0,
            zeta: synth.zeta,
            eta: synth.eta,
            clamp_epsilon: synth.clamp_epsilon,
            l2_lambda: fit.l2_lambda,
            grad_tol: fit.grad_tol,
            max_iter: fit.max_iter,
            optimizer: Optimizer::Lbfgs,
            lbfgs_memory: 10,
            singular_tol: AdjustConfig::default().singular_tol,
            error_rate_folds: MeConfig::default().folds,
            min_train: 500,
            train_fraction: 0.1,
            data: None,
            out: out.into(),
        }
    }

    // negated comparisons also reject NaN
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.sizes.is_empty() {
            return Err(invalid("at least one size is required"));
        }
        if self.sizes[0] == 0 || self.sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("sizes must be positive and strictly ascending"));
        }
        if self.replicates < 2 {
            return Err(invalid("replicates must be at least 2 for a standard error"));
        }
        if self.imputations == 0 {
            return Err(invalid("imputations must be at least 1"));
        }
        if self.vocab_size == 0 {
            return Err(invalid("vocab_size must be at least 1"));
        }
        if !(self.zeta >= 0.0 && self.eta >= 0.0 && self.zeta.is_finite() && self.eta.is_finite()) {
            return Err(invalid("zeta and eta must be finite and nonnegative"));
        }
        if !(self.clamp_epsilon > 0.0 && self.clamp_epsilon < 0.5) {
            return Err(invalid("clamp_epsilon must lie in (0, 0.5)"));
        }
        if !(self.l2_lambda >= 0.0 && self.l2_lambda.is_finite()) {
            return Err(invalid("l2_lambda must be finite and nonnegative"));
        }
        if !(self.grad_tol > 0.0) || self.max_iter == 0 || self.lbfgs_memory == 0 {
            return Err(invalid("grad_tol, max_iter and lbfgs_memory must be positive"));
        }
        if !(self.singular_tol > 0.0) {
            return Err(invalid("singular_tol must be positive"));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction <= 1.0) || self.min_train < 2 {
            return Err(invalid("train_fraction must lie in (0, 1] and min_train be at least 2"));
        }
        match self.source {
            Source::Synthetic => {
                if self.data.is_some() {
                    return Err(invalid("--data is only used with --source yelp"));
                }
            }
            Source::Yelp => {
                if self.data.is_none() {
                    return Err(invalid("--source yelp needs --data DIR (the output of `causal-text ingest`)"));
                }
            }
        }
        Ok(())
    }

    pub fn train_size(&self, n: usize) -> usize {
        self.min_train.max((n as f64 * self.train_fraction).floor() as usize)
    }

    pub fn fit_config(&self) -> FitConfig {
        FitConfig {
            l2_lambda: self.l2_lambda,
            method: match self.optimizer {
                Optimizer::Lbfgs => Method::Lbfgs {
                    memory: self.lbfgs_memory,
                },
                Optimizer::Gd => Method::GradientDescent,
            },
            grad_tol: self.grad_tol,
            max_iter: self.max_iter,
        }
    }

    fn synth_params(&self, vocab_size: usize) -> SynthParams {
        SynthParams {
            vocab_size,
            zeta: self.zeta,
            eta: self.eta,
            clamp_epsilon: self.clamp_epsilon,
            seed: self.seed,
        }
    }

    /// File stem shared by every output of this run.
    pub fn stem(&self) -> String {
        format!("{}.{}.{}", self.scenario.label(), self.source.label(), self.vocab_min_count)
    }
}

/// A real-text corpus loaded from an ingest directory.
pub struct Corpus {
    pub data: Dataset,
    pub truth: TreatmentTruth,
    pub summary: IngestSummary,
}

pub fn load_corpus(dir: &Path) -> anyhow::Result<Corpus> {
    let summary: IngestSummary = serde_json::from_reader(BufReader::new(File::open(dir.join("summary.json"))?))?;
    let rows = BufReader::new(File::open(dir.join("rows.tsv"))?);
    let data = rowfile::read_rows(rows, Provenance::Yelp, TextLayout::Sparse)?;
    let truth = data
        .rows()
        .map(|r| r.a.ok_or_else(|| anyhow::anyhow!("ingested rows must all carry a treatment")))
        .collect::<anyhow::Result<Vec<bool>>>()?;
    Ok(Corpus {
        data,
        truth: TreatmentTruth::new(truth),
        summary,
    })
}

fn check_corpus(config: &ExperimentConfig, corpus: &Corpus) -> Result<(), ConfigError> {
    if corpus.summary.min_count != config.vocab_min_count {
        return Err(invalid(format!(
            "corpus was ingested with min_count {} but the run asks for {}",
            corpus.summary.min_count, config.vocab_min_count
        )));
    }
    let largest = *config.sizes.last().unwrap_or(&0);
    let needed = match config.scenario {
        Scenario::Md => largest,
        Scenario::Me => largest + config.train_size(largest),
    };
    if needed > corpus.data.len() {
        return Err(invalid(format!(
            "the corpus has {} rows but the largest size needs {needed}",
            corpus.data.len()
        )));
    }
    Ok(())
}

/// One model's result in one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelOutcome {
    pub model: &'static str,
    pub estimate: Result<EffectEstimate, String>,
}

/// Everything that happened in one `(n, replicate)` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellLog {
    pub n: usize,
    pub replicate: usize,
    /// Data draws used; 2 when the first draw violated positivity.
    pub attempts: u32,
    pub perfect: Result<f64, String>,
    pub outcomes: Vec<ModelOutcome>,
}

impl CellLog {
    pub fn squared_distance(&self, outcome: &ModelOutcome) -> Option<f64> {
        match (&self.perfect, &outcome.estimate) {
            (Ok(p), Ok(e)) => Some((e.tau() - p).powi(2)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub model: String,
    pub n: usize,
    /// Mean squared distance to the perfect-data estimate.
    pub err: f64,
    /// Sample standard deviation of the squared distances over `sqrt(k)`.
    pub se: f64,
    pub successes: usize,
    pub failures: usize,
}

#[derive(Debug)]
pub struct Report {
    pub records: Vec<ResultRecord>,
    pub cells: Vec<CellLog>,
}

enum Prepared {
    Md {
        data: Dataset,
        truth: TreatmentTruth,
    },
    Me {
        train: Dataset,
        test: Dataset,
        truth: TreatmentTruth,
    },
}

impl Prepared {
    fn perfect(&self) -> causal_text_core::Result<EffectEstimate> {
        let (data, truth) = match self {
            Prepared::Md { data, truth } | Prepared::Me { test: data, truth, .. } => (data, truth),
        };
        tau_simple(
            data.rows()
                .zip(truth.as_slice())
                .map(|(r, &a)| causal_text_core::Triple { a, c: r.c, y: r.y }),
        )
    }
}

fn prepare(
    config: &ExperimentConfig,
    corpus: Option<&Corpus>,
    n: usize,
    replicate: usize,
    attempt: u32,
) -> causal_text_core::Result<Prepared> {
    let path = [n as u64, replicate as u64];
    let draw = [n as u64, replicate as u64, u64::from(attempt)];
    match (config.source, corpus) {
        (Source::Synthetic, _) => {
            let params = config.synth_params(config.vocab_size);
            let coeffs = synthgen::sample_coefficients(&params, &mut rng::stream(config.seed, Tag::Coefficients, &path))?;
            let mut rng = rng::stream(config.seed, Tag::Dataset, &draw);
            match config.scenario {
                Scenario::Md => {
                    let g = synthgen::generate_md_dataset(n, &coeffs, &params, &mut rng)?;
                    debug!("n={n} r={replicate}: {:?}", g.stats);
                    Ok(Prepared::Md {
                        data: g.sample.data,
                        truth: g.sample.truth,
                    })
                }
                Scenario::Me => {
                    let (train, test) =
                        synthgen::generate_me_datasets(config.train_size(n), n, &coeffs, &params, &mut rng)?;
                    Ok(Prepared::Me {
                        train: train.sample.data,
                        test: test.sample.data,
                        truth: test.sample.truth,
                    })
                }
            }
        }
        (Source::Yelp, Some(corpus)) => {
            let mut rng = rng::stream(config.seed, Tag::Subsample, &draw);
            let total = corpus.data.len();
            let truth_of = |idx: &[usize]| TreatmentTruth::new(idx.iter().map(|&i| corpus.truth.as_slice()[i]).collect());
            match config.scenario {
                Scenario::Md => {
                    let mut idx = index::sample(&mut rng, total, n).into_vec();
                    idx.sort_unstable();
                    let params = config.synth_params(corpus.data.vocab_size());
                    let coeffs =
                        synthgen::sample_coefficients(&params, &mut rng::stream(config.seed, Tag::Coefficients, &path))?;
                    let truth = truth_of(&idx);
                    let mut mask = rng::stream(config.seed, Tag::Mask, &draw);
                    let g = synthgen::apply_md_mask(corpus.data.subset(&idx), &truth, &coeffs.w, &params, &mut mask)?;
                    Ok(Prepared::Md {
                        data: g.sample.data,
                        truth: g.sample.truth,
                    })
                }
                Scenario::Me => {
                    let n_train = config.train_size(n);
                    let picked = index::sample(&mut rng, total, n_train + n).into_vec();
                    let (mut train_idx, mut test_idx) = (picked[..n_train].to_vec(), picked[n_train..].to_vec());
                    train_idx.sort_unstable();
                    test_idx.sort_unstable();
                    let truth = truth_of(&test_idx);
                    let test = corpus.data.subset(&test_idx).with_treatments(&vec![None; n])?;
                    Ok(Prepared::Me {
                        train: corpus.data.subset(&train_idx),
                        test,
                        truth,
                    })
                }
            }
        }
        (Source::Yelp, None) => Err(CoreError::InvalidParameter("a Yelp run needs a corpus")),
    }
}

fn with_flag(e: causal_text_core::Result<EffectEstimate>) -> Result<EffectEstimate, String> {
    e.map_err(|err| err.to_string())
}

fn run_models(config: &ExperimentConfig, prepared: Prepared, n: usize, replicate: usize) -> Vec<ModelOutcome> {
    let fit = config.fit_config();
    match prepared {
        Prepared::Md { data, .. } => {
            let mut out = vec![ModelOutcome {
                model: "naive",
                estimate: with_flag(missing::tau_md_baseline_naive(&data)),
            }];
            for (k, fs) in [FeatureSet::NoText, FeatureSet::NoY, FeatureSet::Full].into_iter().enumerate() {
                let mi = MiConfig {
                    imputations: config.imputations,
                    fit: fit.clone(),
                    seed: rng::derive_seed(config.seed, &[Tag::Imputation as u64, n as u64, replicate as u64, k as u64]),
                };
                out.push(ModelOutcome {
                    model: fs.label(),
                    estimate: with_flag(missing::tau_md_mi(&data, fs, &mi)),
                });
            }
            out
        }
        Prepared::Me { train, test, .. } => {
            let naive = with_flag(measure::tau_me_naive(&train));
            let me = MeConfig {
                fit,
                adjust: AdjustConfig {
                    singular_tol: config.singular_tol,
                    ..AdjustConfig::default()
                },
                folds: config.error_rate_folds,
            };
            let learned = measure::learn_proxy(&train, &me).and_then(|proxy| {
                let proxies = proxy.model.impute_proxies(&test)?;
                Ok((proxy, test.with_proxies(&proxies)?))
            });
            let (unadjusted, adjusted) = match learned {
                Ok((proxy, test)) => {
                    let flag = |e: EffectEstimate| {
                        let d = e.diagnostics();
                        e.with_diagnostics(Diagnostics {
                            nonconverged_fit: !proxy.converged,
                            ..d
                        })
                    };
                    (
                        with_flag(measure::tau_me_unadjusted(&test).map(flag)),
                        with_flag(measure::adjusted_from_proxies(&test, &proxy.rates, &me.adjust).map(flag)),
                    )
                }
                Err(e) => (Err(e.to_string()), Err(e.to_string())),
            };
            vec![
                ModelOutcome {
                    model: "naive",
                    estimate: naive,
                },
                ModelOutcome {
                    model: "unadjusted",
                    estimate: unadjusted,
                },
                ModelOutcome {
                    model: "adjusted",
                    estimate: adjusted,
                },
            ]
        }
    }
}

/// Runs one cell. A positivity failure of the perfect-data estimate draws
/// the data once more from the next attempt's stream.
pub fn run_cell(config: &ExperimentConfig, corpus: Option<&Corpus>, n: usize, replicate: usize) -> CellLog {
    let started = Instant::now();
    let mut attempts = 0;
    let mut last_error = String::new();
    for attempt in 0..2u32 {
        attempts = attempt + 1;
        let prepared = match prepare(config, corpus, n, replicate, attempt) {
            Ok(p) => p,
            Err(e) => {
                last_error = e.to_string();
                break;
            }
        };
        match prepared.perfect() {
            Ok(perfect) => {
                let outcomes = run_models(config, prepared, n, replicate);
                info!("n={n} replicate={replicate} done in {:.1?}", started.elapsed());
                return CellLog {
                    n,
                    replicate,
                    attempts,
                    perfect: Ok(perfect.tau()),
                    outcomes,
                };
            }
            Err(e @ CoreError::Positivity { .. }) => last_error = e.to_string(),
            Err(e) => {
                last_error = e.to_string();
                break;
            }
        }
    }
    let outcomes = config
        .scenario
        .models()
        .iter()
        .map(|&model| ModelOutcome {
            model,
            estimate: Err(format!("no perfect-data reference: {last_error}")),
        })
        .collect();
    CellLog {
        n,
        replicate,
        attempts,
        perfect: Err(last_error),
        outcomes,
    }
}

/// Mean and standard error of the squared distances per `(model, n)`.
pub fn aggregate(scenario: Scenario, sizes: &[usize], cells: &[CellLog]) -> Vec<ResultRecord> {
    let mut records = Vec::new();
    for &model in scenario.models() {
        for &n in sizes {
            let mut distances = Vec::new();
            let mut failures = 0;
            for cell in cells.iter().filter(|c| c.n == n) {
                let Some(outcome) = cell.outcomes.iter().find(|o| o.model == model) else {
                    continue;
                };
                match cell.squared_distance(outcome) {
                    Some(d) => distances.push(d),
                    None => failures += 1,
                }
            }
            let k = distances.len();
            let err = distances.iter().sum::<f64>() / k as f64;
            let se = if k >= 2 {
                let ss: f64 = distances.iter().map(|d| (d - err).powi(2)).sum();
                (ss / (k - 1) as f64).sqrt() / (k as f64).sqrt()
            } else {
                f64::NAN
            };
            records.push(ResultRecord {
                model: model.to_owned(),
                n,
                err,
                se,
                successes: k,
                failures,
            });
        }
    }
    records
}

/// Runs every cell on the current rayon pool.
pub fn run_experiment(config: &ExperimentConfig, corpus: Option<&Corpus>) -> Result<Report, ConfigError> {
    config.validate()?;
    if let Some(c) = corpus {
        check_corpus(config, c)?;
    }
    let cells: Vec<(usize, usize)> = config
        .sizes
        .iter()
        .flat_map(|&n| (0..config.replicates).map(move |r| (n, r)))
        .collect();
    let logs: Vec<CellLog> = cells
        .par_iter()
        .map(|&(n, r)| run_cell(config, corpus, n, r))
        .collect();
    Ok(Report {
        records: aggregate(config.scenario, &config.sizes, &logs),
        cells: logs,
    })
}

pub fn format_dat(records: &[&ResultRecord]) -> String {
    let mut s = String::from("n err se\n");
    for r in records {
        let _ = writeln!(s, "{} {:.6e} {:.6e}", r.n, r.err, r.se);
    }
    s
}

/// Writes the plot-data file of one model.
pub fn emit_dat(records: &[ResultRecord], model: &str, path: &Path) -> io::Result<()> {
    let rows: Vec<&ResultRecord> = records.iter().filter(|r| r.model == model).collect();
    fs::write(path, format_dat(&rows))
}

/// `(n, err, se)` rows of a plot-data file.
pub fn parse_dat<R: BufRead>(input: R) -> io::Result<Vec<(usize, f64, f64)>> {
    let bad = |msg: String| io::Error::new(io::ErrorKind::InvalidData, msg);
    let mut lines = input.lines();
    match lines.next() {
        Some(Ok(h)) if h.split_whitespace().eq(["n", "err", "se"]) => {}
        Some(Err(e)) => return Err(e),
        _ => return Err(bad("missing `n err se` header".into())),
    }
    let mut rows = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 3 {
            return Err(bad(format!("expected 3 columns: {line:?}")));
        }
        let n = f[0].parse().map_err(|e| bad(format!("{e}: {line:?}")))?;
        let err = f[1].parse().map_err(|e| bad(format!("{e}: {line:?}")))?;
        let se = f[2].parse().map_err(|e| bad(format!("{e}: {line:?}")))?;
        rows.push((n, err, se));
    }
    Ok(rows)
}

fn flags(d: Diagnostics) -> String {
    let mut parts = Vec::new();
    if d.dropped_replicates > 0 {
        parts.push(format!("dropped_imputations={}", d.dropped_replicates));
    }
    if d.infeasible_adjustment {
        parts.push("infeasible_adjustment".to_owned());
    }
    if d.nonconverged_fit {
        parts.push("nonconverged_fit".to_owned());
    }
    if parts.is_empty() {
        "-".to_owned()
    } else {
        parts.join(",")
    }
}

/// Per-replicate log; floats use the shortest round-trip representation so
/// aggregates can be recomputed exactly.
pub fn write_replicates<W: Write>(cells: &[CellLog], mut out: W) -> io::Result<()> {
    writeln!(out, "n\treplicate\tattempts\tmodel\testimate\tperfect\tsq_dist\tstatus\tflags")?;
    for cell in cells {
        let perfect = cell.perfect.as_ref().map_or("NaN".to_owned(), |p| format!("{p:e}"));
        for o in &cell.outcomes {
            let (estimate, status, fl) = match &o.estimate {
                Ok(e) => (format!("{:e}", e.tau()), "ok".to_owned(), flags(e.diagnostics())),
                Err(msg) => ("NaN".to_owned(), format!("failed: {}", msg.replace(['\t', '\n'], " ")), "-".to_owned()),
            };
            let sq = cell.squared_distance(o).map_or("NaN".to_owned(), |d| format!("{d:e}"));
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                cell.n, cell.replicate, cell.attempts, o.model, estimate, perfect, sq, status, fl
            )?;
        }
    }
    out.flush()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config: ExperimentConfig,
    /// Measurement-error training size per entry of `sizes`.
    pub train_sizes: Vec<usize>,
}

impl Manifest {
    pub fn new(config: &ExperimentConfig) -> Self {
        Manifest {
            tool: env!("CARGO_PKG_NAME").to_owned(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            config: config.clone(),
            train_sizes: match config.scenario {
                Scenario::Me => config.sizes.iter().map(|&n| config.train_size(n)).collect(),
                Scenario::Md => Vec::new(),
            },
        }
    }

    pub fn read(path: &Path) -> anyhow::Result<Self> {
        Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
    }
}

/// Paths of the files a run writes.
#[derive(Debug)]
pub struct Outputs {
    pub manifest: PathBuf,
    pub replicates: PathBuf,
    pub dat: Vec<PathBuf>,
}

/// Validates, writes the manifest, runs, and writes the `.dat` files and
/// the replicate log.
pub fn run_to_disk(config: &ExperimentConfig) -> anyhow::Result<(Report, Outputs)> {
    config.validate()?;
    let corpus = match (&config.source, &config.data) {
        (Source::Yelp, Some(dir)) => {
            let c = load_corpus(dir)?;
            check_corpus(config, &c)?;
            Some(c)
        }
        _ => None,
    };
    fs::create_dir_all(&config.out)?;
    let manifest = config.out.join("manifest.json");
    let mut w = BufWriter::new(File::create(&manifest)?);
    serde_json::to_writer_pretty(&mut w, &Manifest::new(config))?;
    writeln!(w)?;
    w.flush()?;

    let report = run_experiment(config, corpus.as_ref())?;
    let replicates = config.out.join(format!("{}.replicates.tsv", config.stem()));
    write_replicates(&report.cells, BufWriter::new(File::create(&replicates)?))?;
    let mut dat = Vec::new();
    for &model in config.scenario.models() {
        let path = config.out.join(format!("{}.{model}.dat", config.stem()));
        emit_dat(&report.records, model, &path)?;
        dat.push(path);
    }
    Ok((
        report,
        Outputs {
            manifest,
            replicates,
            dat,
        },
    ))
}
