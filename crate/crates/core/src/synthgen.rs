//! Synthetic generators for the missing-data and measurement-error settings.
//!
//! Both settings share the structured part
//!
//! ```text
//! C ~ Ber(0.4)
//! A ~ Ber(-0.3 C + 0.4)
//! Y ~ Ber(0.2 C + 0.1 A + 0.5)
//! ```
//!
//! so the true effect is exactly 0.1. Text is a binary bag of `V` words.
//! In the missing-data setting word `i` follows `Ber(0.5 + u_i A + v_i C)` and
//! the treatment is observed with probability
//! `0.7 + 0.2 C - 0.4 Y + Σ_i w_i T_i`. In the measurement-error setting word
//! `i` follows `Ber(0.5 + s_i C + u_i A + v_i Y)`.
//!
//! Every Bernoulli parameter is clamped to `[ε, 1 - ε]` before use, since the
//! linear forms above leave `[0, 1]` for large coefficient draws.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, RngCore};
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::tabular::{Dataset, DatasetBuilder, Provenance, Sample, TextLayout, TreatmentTruth};

pub const P_CONFOUNDER: f64 = 0.4;

/// `p(A=1 | C)`.
pub fn p_treatment(c: bool) -> f64 {
    -0.3 * f64::from(u8::from(c)) + 0.4
}

/// `p(Y=1 | A, C)`.
pub fn p_outcome(a: bool, c: bool) -> f64 {
    0.2 * f64::from(u8::from(c)) + 0.1 * f64::from(u8::from(a)) + 0.5
}

/// Unclamped base of `p(R_A=1 | C, Y, T)` before the word terms.
pub fn observation_base(c: bool, y: bool) -> f64 {
    0.7 + 0.2 * f64::from(u8::from(c)) - 0.4 * f64::from(u8::from(y))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    pub vocab_size: usize,
    /// Standard deviation of the word coefficients `s`, `u`, `v`.
    pub zeta: f64,
    /// Standard deviation of the missingness coefficients `w`.
    pub eta: f64,
    pub clamp_epsilon: f64,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            vocab_size: 4334,
            zeta: 0.5,
            eta: 0.1,
            clamp_epsilon: 0.01,
            seed: 0,
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<()> {
        if self.vocab_size == 0 {
            return Err(Error::InvalidParameter("vocabulary size must be at least 1"));
        }
        if !(self.clamp_epsilon > 0.0 && self.clamp_epsilon < 0.5) {
            return Err(Error::InvalidParameter("clamp epsilon must lie in (0, 0.5)"));
        }
        if !(self.zeta >= 0.0 && self.zeta.is_finite() && self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(Error::InvalidParameter("zeta and eta must be finite and nonnegative"));
        }
        Ok(())
    }

    pub fn clamp(&self, p: f64) -> f64 {
        p.clamp(self.clamp_epsilon, 1.0 - self.clamp_epsilon)
    }
}

/// Per-word coefficients of the text model.
#[derive(Debug, Clone, PartialEq)]
pub struct TextCoefficients {
    /// Effect of `C` on each word.
    pub s: Vec<f64>,
    /// Effect of `A` on each word.
    pub u: Vec<f64>,
    /// Effect of `Y` (measurement error) or `C` (missing data) on each word.
    pub v: Vec<f64>,
    /// Effect of each word on the missingness indicator.
    pub w: Vec<f64>,
    pub zeta: f64,
    pub eta: f64,
}

impl TextCoefficients {
    pub fn vocab_size(&self) -> usize {
        self.u.len()
    }

    /// All-zero coefficients: words are fair coins and do not move `R_A`.
    pub fn zeros(vocab_size: usize) -> Self {
        TextCoefficients {
            s: vec![0.0; vocab_size],
            u: vec![0.0; vocab_size],
            v: vec![0.0; vocab_size],
            w: vec![0.0; vocab_size],
            zeta: 0.0,
            eta: 0.0,
        }
    }
}

fn normal_vec<G: Rng + ?Sized>(sd: f64, len: usize, rng: &mut G) -> Result<Vec<f64>> {
    let dist = Normal::new(0.0, sd).map_err(|_| Error::InvalidParameter("invalid standard deviation"))?;
    Ok((0..len).map(|_| dist.sample(rng)).collect())
}

/// Draws `s`, `u`, `v` from `N(0, ζ)` and then `w` from `N(0, η)`.
pub fn sample_coefficients<G: Rng + ?Sized>(params: &SynthParams, rng: &mut G) -> Result<TextCoefficients> {
    params.validate()?;
    let v_len = params.vocab_size;
    Ok(TextCoefficients {
        s: normal_vec(params.zeta, v_len, rng)?,
        u: normal_vec(params.zeta, v_len, rng)?,
        v: normal_vec(params.zeta, v_len, rng)?,
        w: normal_vec(params.eta, v_len, rng)?,
        zeta: params.zeta,
        eta: params.eta,
    })
}

/// Range of the Bernoulli parameters actually used while generating.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerationStats {
    pub min_param: f64,
    pub max_param: f64,
    /// Bernoulli draws whose linear parameter was clamped.
    pub clamped_draws: u64,
    pub total_draws: u64,
}

impl Default for GenerationStats {
    fn default() -> Self {
        GenerationStats {
            min_param: f64::INFINITY,
            max_param: f64::NEG_INFINITY,
            clamped_draws: 0,
            total_draws: 0,
        }
    }
}

impl GenerationStats {
    fn record(&mut self, raw: f64, used: f64, count: u64) {
        self.min_param = self.min_param.min(used);
        self.max_param = self.max_param.max(used);
        if raw != used {
            self.clamped_draws += count;
        }
        self.total_draws += count;
    }

    fn merge(&mut self, other: &GenerationStats) {
        self.min_param = self.min_param.min(other.min_param);
        self.max_param = self.max_param.max(other.max_param);
        self.clamped_draws += other.clamped_draws;
        self.total_draws += other.total_draws;
    }
}

/// A generated sample plus its parameter statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub sample: Sample,
    pub stats: GenerationStats,
}

/// Word-probability table for one parent configuration, stored as 32-bit
/// thresholds: word `i` is present iff a uniform `u32` is below `t[i]`.
struct WordTable {
    thresholds: Vec<u64>,
    stats: GenerationStats,
}

impl WordTable {
    fn new(params: &SynthParams, raw: impl Iterator<Item = f64>) -> Self {
        let mut stats = GenerationStats::default();
        let thresholds = raw
            .map(|p| {
                let used = params.clamp(p);
                stats.record(p, used, 1);
                (used * 4_294_967_296.0) as u64
            })
            .collect();
        WordTable { thresholds, stats }
    }

    /// Fills `packed` with one draw per word; returns `Σ_i w_i T_i`.
    #[inline]
    fn draw<G: RngCore + ?Sized>(&self, rng: &mut G, packed: &mut [u64], weights: Option<&[f64]>) -> f64 {
        packed.iter_mut().for_each(|w| *w = 0);
        let mut sum = 0.0;
        for (i, &t) in self.thresholds.iter().enumerate() {
            if u64::from(rng.next_u32()) < t {
                packed[i / 64] |= 1 << (i % 64);
                if let Some(w) = weights {
                    sum += w[i];
                }
            }
        }
        sum
    }
}

struct Structured {
    c: bool,
    a: bool,
    y: bool,
}

fn bernoulli<G: Rng + ?Sized>(raw: f64, params: &SynthParams, stats: &mut GenerationStats, rng: &mut G) -> bool {
    let p = params.clamp(raw);
    stats.record(raw, p, 1);
    rng.random::<f64>() < p
}

fn draw_structured<G: Rng + ?Sized>(params: &SynthParams, stats: &mut GenerationStats, rng: &mut G) -> Structured {
    let c = bernoulli(P_CONFOUNDER, params, stats, rng);
    let a = bernoulli(p_treatment(c), params, stats, rng);
    let y = bernoulli(p_outcome(a, c), params, stats, rng);
    Structured { c, a, y }
}

fn check_coefficients(coeffs: &TextCoefficients, params: &SynthParams) -> Result<()> {
    params.validate()?;
    let v = params.vocab_size;
    if [&coeffs.s, &coeffs.u, &coeffs.v, &coeffs.w].iter().any(|c| c.len() != v) {
        return Err(Error::VocabMismatch {
            expected: v,
            found: coeffs.u.len(),
        });
    }
    Ok(())
}

/// Missing-data sample of `n` rows. Rows with `R_A = 0` have no treatment;
/// the true treatment of every row is in [`Sample::truth`].
pub fn generate_md_dataset<G: Rng + ?Sized>(
    n: usize,
    coeffs: &TextCoefficients,
    params: &SynthParams,
    rng: &mut G,
) -> Result<Generated> {
    if n == 0 {
        return Err(Error::InvalidParameter("sample size must be at least 1"));
    }
    check_coefficients(coeffs, params)?;
    let v = params.vocab_size;
    // index a | c << 1
    let tables: Vec<WordTable> = (0..4)
        .map(|k| {
            let (a, c) = (f64::from(k & 1), f64::from(k >> 1));
            WordTable::new(params, (0..v).map(|i| 0.5 + coeffs.u[i] * a + coeffs.v[i] * c))
        })
        .collect();

    let mut stats = GenerationStats::default();
    let mut builder = DatasetBuilder::new(v, Provenance::Synthetic, TextLayout::Dense);
    builder.reserve(n);
    let mut truth = Vec::with_capacity(n);
    let mut packed = vec![0u64; v.div_ceil(64)];
    let mut used_tables = [0u64; 4];
    for _ in 0..n {
        let s = draw_structured(params, &mut stats, rng);
        let k = usize::from(s.a) | usize::from(s.c) << 1;
        used_tables[k] += 1;
        let word_sum = tables[k].draw(rng, &mut packed, Some(&coeffs.w));
        let observed = bernoulli(observation_base(s.c, s.y) + word_sum, params, &mut stats, rng);
        builder.push_packed(observed.then_some(s.a), s.c, s.y, &packed)?;
        truth.push(s.a);
    }
    for (table, &rows) in tables.iter().zip(&used_tables) {
        if rows > 0 {
            let mut t = table.stats;
            t.clamped_draws *= rows;
            t.total_draws *= rows;
            stats.merge(&t);
        }
    }
    Ok(Generated {
        sample: Sample::new(builder.finish(), TreatmentTruth::new(truth))?,
        stats,
    })
}

/// Measurement-error training and test samples from one process.
///
/// The training rows keep their treatment; the test rows do not. Both carry
/// the truth for evaluation.
pub fn generate_me_datasets<G: Rng + ?Sized>(
    n_train: usize,
    n_test: usize,
    coeffs: &TextCoefficients,
    params: &SynthParams,
    rng: &mut G,
) -> Result<(Generated, Generated)> {
    if n_train == 0 || n_test == 0 {
        return Err(Error::InvalidParameter("train and test sizes must be at least 1"));
    }
    check_coefficients(coeffs, params)?;
    let v = params.vocab_size;
    // index c | a << 1 | y << 2
    let tables: Vec<WordTable> = (0..8)
        .map(|k| {
            let (c, a, y) = (f64::from(k & 1), f64::from((k >> 1) & 1), f64::from(k >> 2));
            WordTable::new(
                params,
                (0..v).map(|i| 0.5 + coeffs.s[i] * c + coeffs.u[i] * a + coeffs.v[i] * y),
            )
        })
        .collect();

    let mut packed = vec![0u64; v.div_ceil(64)];
    let mut split = |n: usize, keep_treatment: bool| -> Result<Generated> {
        let mut stats = GenerationStats::default();
        let mut builder = DatasetBuilder::new(v, Provenance::Synthetic, TextLayout::Dense);
        builder.reserve(n);
        let mut truth = Vec::with_capacity(n);
        let mut used_tables = [0u64; 8];
        for _ in 0..n {
            let s = draw_structured(params, &mut stats, rng);
            let k = usize::from(s.c) | usize::from(s.a) << 1 | usize::from(s.y) << 2;
            used_tables[k] += 1;
            tables[k].draw(rng, &mut packed, None);
            builder.push_packed(keep_treatment.then_some(s.a), s.c, s.y, &packed)?;
            truth.push(s.a);
        }
        for (table, &rows) in tables.iter().zip(&used_tables) {
            if rows > 0 {
                let mut t = table.stats;
                t.clamped_draws *= rows;
                t.total_draws *= rows;
                stats.merge(&t);
            }
        }
        Ok(Generated {
            sample: Sample::new(builder.finish(), TreatmentTruth::new(truth))?,
            stats,
        })
    };
    let train = split(n_train, true)?;
    let test = split(n_test, false)?;
    Ok((train, test))
}

/// Re-draws the missingness indicator of an existing fully observed sample
/// using the missing-data observation model, for real text.
pub fn apply_md_mask<G: Rng + ?Sized>(
    data: Dataset,
    truth: &TreatmentTruth,
    w: &[f64],
    params: &SynthParams,
    rng: &mut G,
) -> Result<Generated> {
    if w.len() != data.vocab_size() {
        return Err(Error::VocabMismatch {
            expected: data.vocab_size(),
            found: w.len(),
        });
    }
    if truth.len() != data.len() {
        return Err(Error::InvalidParameter("truth column length differs from row count"));
    }
    let mut stats = GenerationStats::default();
    let treatments: Vec<Option<bool>> = data
        .rows()
        .zip(truth.as_slice())
        .map(|(row, &a)| {
            let word_sum: f64 = row.text.iter().map(|i| w[i as usize]).sum();
            let observed = bernoulli(observation_base(row.c, row.y) + word_sum, params, &mut stats, rng);
            observed.then_some(a)
        })
        .collect();
    let data = data.with_treatments(&treatments)?;
    Ok(Generated {
        sample: Sample::new(data, truth.clone())?,
        stats,
    })
}
