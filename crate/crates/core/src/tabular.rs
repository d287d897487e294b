//! Rows, datasets, stratum counts and the backdoor-adjustment functional.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::textclf::FeatureSet;

/// The binary variables a stratum table can range over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    /// Treatment (observed value).
    A,
    /// Confounder.
    C,
    /// Outcome.
    Y,
    /// Missingness indicator of the treatment, 1 when observed.
    RA,
    /// Classifier proxy of the treatment.
    AStar,
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Var::A => "A",
            Var::C => "C",
            Var::Y => "Y",
            Var::RA => "R_A",
            Var::AStar => "A*",
        })
    }
}

/// A partial assignment of binary values to variables.
pub type Assignment = [(Var, bool)];

/// Read access to the structured fields of one observation.
pub trait Record {
    fn treatment(&self) -> Option<bool>;
    fn confounder(&self) -> bool;
    fn outcome(&self) -> bool;
    fn proxy(&self) -> Option<bool>;

    fn observed(&self) -> bool {
        self.treatment().is_some()
    }

    fn value(&self, var: Var) -> Result<bool> {
        match var {
            Var::A => self.treatment().ok_or(Error::MissingField(Var::A)),
            Var::C => Ok(self.confounder()),
            Var::Y => Ok(self.outcome()),
            Var::RA => Ok(self.observed()),
            Var::AStar => self.proxy().ok_or(Error::MissingField(Var::AStar)),
        }
    }
}

impl<R: Record + ?Sized> Record for &R {
    fn treatment(&self) -> Option<bool> {
        (**self).treatment()
    }
    fn confounder(&self) -> bool {
        (**self).confounder()
    }
    fn outcome(&self) -> bool {
        (**self).outcome()
    }
    fn proxy(&self) -> Option<bool> {
        (**self).proxy()
    }
}

/// Fully observed `(a, c, y)` triple, used wherever the treatment comes from
/// somewhere other than the row itself (imputations, the evaluation truth).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Triple {
    pub a: bool,
    pub c: bool,
    pub y: bool,
}

impl Record for Triple {
    fn treatment(&self) -> Option<bool> {
        Some(self.a)
    }
    fn confounder(&self) -> bool {
        self.c
    }
    fn outcome(&self) -> bool {
        self.y
    }
    fn proxy(&self) -> Option<bool> {
        None
    }
}

/// One owned observation. `r_a` is not stored: it is `a.is_some()`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DataRow {
    pub a: Option<bool>,
    pub c: bool,
    pub y: bool,
    /// Strictly increasing vocabulary indices of the words present.
    pub text: Vec<u32>,
    pub proxy: Option<bool>,
}

impl DataRow {
    pub fn new(a: Option<bool>, c: bool, y: bool) -> Self {
        DataRow {
            a,
            c,
            y,
            text: Vec::new(),
            proxy: None,
        }
    }

    pub fn with_text(mut self, text: Vec<u32>) -> Self {
        self.text = text;
        self
    }

    pub fn with_proxy(mut self, proxy: bool) -> Self {
        self.proxy = Some(proxy);
        self
    }

    pub fn r_a(&self) -> bool {
        self.a.is_some()
    }
}

impl Record for DataRow {
    fn treatment(&self) -> Option<bool> {
        self.a
    }
    fn confounder(&self) -> bool {
        self.c
    }
    fn outcome(&self) -> bool {
        self.y
    }
    fn proxy(&self) -> Option<bool> {
        self.proxy
    }
}

/// True treatment of every row of a sample.
///
/// Kept outside the rows so that estimators never see it; only the
/// evaluation harness reads it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreatmentTruth(Vec<bool>);

impl TreatmentTruth {
    pub fn new(values: Vec<bool>) -> Self {
        TreatmentTruth(values)
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// A dataset together with the evaluation-only truth for its treatment.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub data: Dataset,
    pub truth: TreatmentTruth,
}

impl Sample {
    pub fn new(data: Dataset, truth: TreatmentTruth) -> Result<Self> {
        if data.len() != truth.len() {
            return Err(Error::InvalidParameter("truth column length differs from row count"));
        }
        Ok(Sample { data, truth })
    }

    /// Rows with the true treatment restored.
    pub fn restored(&self) -> impl Iterator<Item = Triple> + '_ {
        self.data
            .rows()
            .zip(self.truth.as_slice())
            .map(|(r, &a)| Triple { a, c: r.c, y: r.y })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Synthetic,
    Yelp,
}

/// Physical layout of the bag-of-words column.
///
/// Synthetic text is dense (about half the vocabulary per row) and is kept as
/// one bit per word; review text is sparse and kept as index lists.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TextLayout {
    Sparse,
    Dense,
}

#[derive(Debug, Clone, PartialEq)]
enum TextStore {
    Sparse { offsets: Vec<usize>, indices: Vec<u32> },
    Dense { words: usize, bits: Vec<u64> },
}

/// Borrowed bag-of-words of a single row.
#[derive(Debug, Clone, Copy)]
pub enum TextRow<'a> {
    Sparse(&'a [u32]),
    Dense(&'a [u64]),
}

impl<'a> TextRow<'a> {
    pub fn iter(&self) -> TextIter<'a> {
        match *self {
            TextRow::Sparse(idx) => TextIter::Sparse(idx.iter()),
            TextRow::Dense(bits) => TextIter::Dense {
                bits,
                word: 0,
                current: bits.first().copied().unwrap_or(0),
            },
        }
    }

    pub fn contains(&self, index: u32) -> bool {
        match *self {
            TextRow::Sparse(idx) => idx.binary_search(&index).is_ok(),
            TextRow::Dense(bits) => bits
                .get(index as usize / 64)
                .is_some_and(|w| w >> (index % 64) & 1 == 1),
        }
    }

    pub fn len(&self) -> usize {
        match *self {
            TextRow::Sparse(idx) => idx.len(),
            TextRow::Dense(bits) => bits.iter().map(|w| w.count_ones() as usize).sum(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_vec(&self) -> Vec<u32> {
        self.iter().collect()
    }
}

/// Ascending word indices of a [`TextRow`].
pub enum TextIter<'a> {
    Sparse(core::slice::Iter<'a, u32>),
    Dense {
        bits: &'a [u64],
        word: usize,
        current: u64,
    },
}

impl Iterator for TextIter<'_> {
    type Item = u32;

    #[inline]
    fn next(&mut self) -> Option<u32> {
        match self {
            TextIter::Sparse(it) => it.next().copied(),
            TextIter::Dense {
                bits,
                word,
                current,
            } => loop {
                if *current != 0 {
                    let bit = current.trailing_zeros();
                    *current &= *current - 1;
                    return Some((*word * 64) as u32 + bit);
                }
                *word += 1;
                if *word >= bits.len() {
                    return None;
                }
                *current = bits[*word];
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Fields {
    a: Option<bool>,
    c: bool,
    y: bool,
    proxy: Option<bool>,
}

/// Borrowed view of one row of a [`Dataset`].
#[derive(Debug, Clone, Copy)]
pub struct RowView<'a> {
    pub a: Option<bool>,
    pub c: bool,
    pub y: bool,
    pub proxy: Option<bool>,
    pub text: TextRow<'a>,
}

impl RowView<'_> {
    pub fn to_owned_row(&self) -> DataRow {
        DataRow {
            a: self.a,
            c: self.c,
            y: self.y,
            text: self.text.to_vec(),
            proxy: self.proxy,
        }
    }
}

impl Record for RowView<'_> {
    fn treatment(&self) -> Option<bool> {
        self.a
    }
    fn confounder(&self) -> bool {
        self.c
    }
    fn outcome(&self) -> bool {
        self.y
    }
    fn proxy(&self) -> Option<bool> {
        self.proxy
    }
}

/// An ordered collection of rows over one vocabulary, stored column-wise.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    fields: Vec<Fields>,
    text: TextStore,
    vocab_size: usize,
    provenance: Provenance,
}

impl Dataset {
    pub fn builder(vocab_size: usize, provenance: Provenance, layout: TextLayout) -> DatasetBuilder {
        DatasetBuilder::new(vocab_size, provenance, layout)
    }

    pub fn from_rows(
        vocab_size: usize,
        provenance: Provenance,
        layout: TextLayout,
        rows: impl IntoIterator<Item = DataRow>,
    ) -> Result<Self> {
        let mut builder = DatasetBuilder::new(vocab_size, provenance, layout);
        for row in rows {
            builder.push_row(&row)?;
        }
        Ok(builder.finish())
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn layout(&self) -> TextLayout {
        match self.text {
            TextStore::Sparse { .. } => TextLayout::Sparse,
            TextStore::Dense { .. } => TextLayout::Dense,
        }
    }

    pub fn text(&self, i: usize) -> TextRow<'_> {
        match &self.text {
            TextStore::Sparse { offsets, indices } => {
                TextRow::Sparse(&indices[offsets[i]..offsets[i + 1]])
            }
            TextStore::Dense { words, bits } => TextRow::Dense(&bits[i * words..(i + 1) * words]),
        }
    }

    pub fn row(&self, i: usize) -> RowView<'_> {
        let f = self.fields[i];
        RowView {
            a: f.a,
            c: f.c,
            y: f.y,
            proxy: f.proxy,
            text: self.text(i),
        }
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = RowView<'_>> + '_ {
        (0..self.len()).map(move |i| self.row(i))
    }

    /// Number of rows whose treatment is observed.
    pub fn observed_count(&self) -> usize {
        self.fields.iter().filter(|f| f.a.is_some()).count()
    }

    /// Copy of the rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let mut builder = DatasetBuilder::new(self.vocab_size, self.provenance, self.layout());
        for &i in indices {
            let f = self.fields[i];
            builder.fields.push(f);
            match (&mut builder.text, self.text(i)) {
                (TextStore::Sparse { offsets, indices }, TextRow::Sparse(idx)) => {
                    indices.extend_from_slice(idx);
                    offsets.push(indices.len());
                }
                (TextStore::Dense { bits, .. }, TextRow::Dense(words)) => {
                    bits.extend_from_slice(words)
                }
                _ => unreachable!("builder shares the source layout"),
            }
        }
        builder.finish()
    }

    /// Replaces every row's treatment. Text is moved, not copied.
    pub fn with_treatments(mut self, treatments: &[Option<bool>]) -> Result<Self> {
        if treatments.len() != self.len() {
            return Err(Error::InvalidParameter("treatment column length differs from row count"));
        }
        for (f, &a) in self.fields.iter_mut().zip(treatments) {
            f.a = a;
        }
        Ok(self)
    }

    /// Attaches a proxy treatment to every row. Text is moved, not copied.
    pub fn with_proxies(mut self, proxies: &[bool]) -> Result<Self> {
        if proxies.len() != self.len() {
            return Err(Error::InvalidParameter("proxy column length differs from row count"));
        }
        for (f, &p) in self.fields.iter_mut().zip(proxies) {
            f.proxy = Some(p);
        }
        Ok(self)
    }
}

/// Incremental construction of a [`Dataset`] with validation of the text
/// invariants (strictly increasing, below the vocabulary size).
pub struct DatasetBuilder {
    fields: Vec<Fields>,
    text: TextStore,
    vocab_size: usize,
    provenance: Provenance,
}

impl DatasetBuilder {
    pub fn new(vocab_size: usize, provenance: Provenance, layout: TextLayout) -> Self {
        let text = match layout {
            TextLayout::Sparse => TextStore::Sparse {
                offsets: vec![0],
                indices: Vec::new(),
            },
            TextLayout::Dense => TextStore::Dense {
                words: vocab_size.div_ceil(64),
                bits: Vec::new(),
            },
        };
        DatasetBuilder {
            fields: Vec::new(),
            text,
            vocab_size,
            provenance,
        }
    }

    pub fn reserve(&mut self, rows: usize) {
        self.fields.reserve(rows);
        if let TextStore::Dense { words, bits } = &mut self.text {
            bits.reserve(rows * *words);
        }
    }

    pub fn push(
        &mut self,
        a: Option<bool>,
        c: bool,
        y: bool,
        proxy: Option<bool>,
        text: impl IntoIterator<Item = u32>,
    ) -> Result<()> {
        let vocab_size = self.vocab_size;
        let check = |prev: Option<u32>, idx: u32| -> Result<()> {
            if idx as usize >= vocab_size {
                return Err(Error::TextIndexOutOfRange {
                    index: idx,
                    vocab_size,
                });
            }
            if prev.is_some_and(|p| p >= idx) {
                return Err(Error::UnsortedText);
            }
            Ok(())
        };
        match &mut self.text {
            TextStore::Sparse { offsets, indices } => {
                let start = indices.len();
                let mut prev = None;
                for idx in text {
                    if let Err(e) = check(prev, idx) {
                        indices.truncate(start);
                        return Err(e);
                    }
                    indices.push(idx);
                    prev = Some(idx);
                }
                offsets.push(indices.len());
            }
            TextStore::Dense { words, bits } => {
                let mut row = vec![0u64; *words];
                let mut prev = None;
                for idx in text {
                    check(prev, idx)?;
                    row[idx as usize / 64] |= 1 << (idx % 64);
                    prev = Some(idx);
                }
                bits.extend_from_slice(&row);
            }
        }
        self.fields.push(Fields { a, c, y, proxy });
        Ok(())
    }

    pub fn push_row(&mut self, row: &DataRow) -> Result<()> {
        self.push(row.a, row.c, row.y, row.proxy, row.text.iter().copied())
    }

    /// Pushes a row whose text is already packed one bit per word.
    ///
    /// Only valid for the dense layout; bits at or above the vocabulary size
    /// must be zero.
    pub fn push_packed(
        &mut self,
        a: Option<bool>,
        c: bool,
        y: bool,
        packed: &[u64],
    ) -> Result<()> {
        match &mut self.text {
            TextStore::Dense { words, bits } => {
                if packed.len() != *words {
                    return Err(Error::InvalidParameter("packed text has the wrong word count"));
                }
                let tail = self.vocab_size % 64;
                if tail != 0 && packed[*words - 1] >> tail != 0 {
                    return Err(Error::TextIndexOutOfRange {
                        index: (self.vocab_size) as u32,
                        vocab_size: self.vocab_size,
                    });
                }
                bits.extend_from_slice(packed);
            }
            TextStore::Sparse { .. } => {
                return Err(Error::InvalidParameter("packed text requires the dense layout"))
            }
        }
        self.fields.push(Fields {
            a,
            c,
            y,
            proxy: None,
        });
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn finish(self) -> Dataset {
        Dataset {
            fields: self.fields,
            text: self.text,
            vocab_size: self.vocab_size,
            provenance: self.provenance,
        }
    }
}

/// Joint counts over an ordered list of binary variables.
///
/// Cell `k` holds the count of the assignment whose `j`-th variable equals
/// bit `j` of `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StratumTable {
    vars: Vec<Var>,
    counts: Vec<u64>,
    total: u64,
}

impl StratumTable {
    pub fn from_counts(vars: &[Var], counts: Vec<u64>) -> Result<Self> {
        check_distinct(vars)?;
        if counts.len() != 1usize << vars.len() {
            return Err(Error::InvalidParameter("cell count must be 2^|vars|"));
        }
        let total = counts.iter().sum();
        Ok(StratumTable {
            vars: vars.to_vec(),
            counts,
            total,
        })
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    fn position(&self, var: Var) -> Result<usize> {
        self.vars
            .iter()
            .position(|&v| v == var)
            .ok_or(Error::UnknownVariable(var))
    }

    /// Cell index for a full assignment given in table order.
    pub fn cell_index(values: &[bool]) -> usize {
        values
            .iter()
            .enumerate()
            .fold(0, |k, (j, &b)| k | (usize::from(b) << j))
    }

    /// Sum of counts over all cells consistent with a partial assignment.
    pub fn count(&self, assignment: &Assignment) -> Result<u64> {
        let mut mask = 0usize;
        let mut want = 0usize;
        for &(var, value) in assignment {
            let bit = 1usize << self.position(var)?;
            if mask & bit != 0 && (want & bit != 0) != value {
                return Ok(0);
            }
            mask |= bit;
            if value {
                want |= bit;
            }
        }
        Ok(self
            .counts
            .iter()
            .enumerate()
            .filter(|(k, _)| k & mask == want)
            .map(|(_, &n)| n)
            .sum())
    }

    /// Empirical probability of a partial assignment.
    pub fn prob(&self, assignment: &Assignment) -> Result<f64> {
        if self.total == 0 {
            return Err(Error::EmptyStratum);
        }
        Ok(self.count(assignment)? as f64 / self.total as f64)
    }

    /// Table over a subset of the variables, in the order given.
    pub fn marginalize(&self, keep: &[Var]) -> Result<StratumTable> {
        check_distinct(keep)?;
        let positions = keep
            .iter()
            .map(|&v| self.position(v))
            .collect::<Result<Vec<_>>>()?;
        let mut counts = vec![0u64; 1 << keep.len()];
        for (k, &n) in self.counts.iter().enumerate() {
            let target = positions
                .iter()
                .enumerate()
                .fold(0, |acc, (j, &p)| acc | (((k >> p) & 1) << j));
            counts[target] += n;
        }
        Ok(StratumTable {
            vars: keep.to_vec(),
            counts,
            total: self.total,
        })
    }

    /// Adds the counts of another table over the same variables.
    pub fn merged(&self, other: &StratumTable) -> Result<StratumTable> {
        if self.vars != other.vars {
            return Err(Error::InvalidParameter("tables range over different variables"));
        }
        let counts = self
            .counts
            .iter()
            .zip(&other.counts)
            .map(|(a, b)| a + b)
            .collect();
        Ok(StratumTable {
            vars: self.vars.clone(),
            counts,
            total: self.total + other.total,
        })
    }
}

fn check_distinct(vars: &[Var]) -> Result<()> {
    for (i, v) in vars.iter().enumerate() {
        if vars[..i].contains(v) {
            return Err(Error::DuplicateVariable(*v));
        }
    }
    Ok(())
}

/// Counts the rows over the 2^|vars| joint cells.
///
/// Requesting `A` over a row whose treatment is missing is an error, as is
/// requesting `A*` over a row without a proxy.
pub fn stratum_counts<R: Record>(
    rows: impl IntoIterator<Item = R>,
    vars: &[Var],
) -> Result<StratumTable> {
    check_distinct(vars)?;
    let mut counts = vec![0u64; 1 << vars.len()];
    let mut total = 0u64;
    for row in rows {
        let mut k = 0usize;
        for (j, &var) in vars.iter().enumerate() {
            if row.value(var)? {
                k |= 1 << j;
            }
        }
        counts[k] += 1;
        total += 1;
    }
    if total == 0 {
        return Err(Error::EmptyDataset);
    }
    Ok(StratumTable {
        vars: vars.to_vec(),
        counts,
        total,
    })
}

/// `count(target ∧ given) / count(given)`, without smoothing.
pub fn conditional_prob(
    table: &StratumTable,
    target: &Assignment,
    given: &Assignment,
) -> Result<f64> {
    for &(v, _) in target {
        if given.iter().any(|&(g, _)| g == v) {
            return Err(Error::InvalidParameter("target and conditioning variables overlap"));
        }
    }
    let denominator = table.count(given)?;
    if denominator == 0 {
        return Err(Error::EmptyStratum);
    }
    let joint: Vec<(Var, bool)> = target.iter().chain(given).copied().collect();
    Ok(table.count(&joint)? as f64 / denominator as f64)
}

/// Which estimator produced an [`EffectEstimate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    /// Backdoor adjustment on complete rows.
    Simple,
    /// Backdoor adjustment with the true treatment restored.
    Perfect,
    /// Backdoor adjustment on the fully labeled rows only.
    Naive,
    /// Multiple imputation with a classifier over the given features.
    Imputed(FeatureSet),
    /// Backdoor adjustment treating the proxy as the treatment.
    Unadjusted,
    /// Matrix-adjusted proxy estimate.
    Adjusted,
    /// Exact plug-in evaluation on a known joint.
    PluginExact,
}

impl Estimator {
    pub fn label(&self) -> &'static str {
        match self {
            Estimator::Simple => "simple",
            Estimator::Perfect => "perfect",
            Estimator::Naive => "naive",
            Estimator::Imputed(fs) => fs.label(),
            Estimator::Unadjusted => "unadjusted",
            Estimator::Adjusted => "adjusted",
            Estimator::PluginExact => "plugin_exact",
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Non-fatal conditions attached to an estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Diagnostics {
    /// Imputation replicates dropped for positivity violations.
    pub dropped_replicates: u32,
    /// Some adjusted probability fell outside `[0, 1]` beyond tolerance.
    pub infeasible_adjustment: bool,
    /// A classifier stopped at its iteration cap.
    pub nonconverged_fit: bool,
}

/// A causal-effect value together with its per-arm counterfactual means.
///
/// `tau` is always computed as `mean_y1 - mean_y0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectEstimate {
    tau: f64,
    mean_y1: f64,
    mean_y0: f64,
    estimator: Estimator,
    n_used: u64,
    diagnostics: Diagnostics,
}

impl EffectEstimate {
    pub fn new(mean_y1: f64, mean_y0: f64, estimator: Estimator, n_used: u64) -> Self {
        EffectEstimate {
            tau: mean_y1 - mean_y0,
            mean_y1,
            mean_y0,
            estimator,
            n_used,
            diagnostics: Diagnostics::default(),
        }
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn mean_y1(&self) -> f64 {
        self.mean_y1
    }

    pub fn mean_y0(&self) -> f64 {
        self.mean_y0
    }

    pub fn estimator(&self) -> Estimator {
        self.estimator
    }

    pub fn n_used(&self) -> u64 {
        self.n_used
    }

    pub fn diagnostics(&self) -> Diagnostics {
        self.diagnostics
    }

    pub fn with_estimator(mut self, estimator: Estimator) -> Self {
        self.estimator = estimator;
        self
    }

    pub fn with_diagnostics(mut self, diagnostics: Diagnostics) -> Self {
        self.diagnostics = diagnostics;
        self
    }
}

/// Backdoor adjustment over a table that contains `treatment`, `C` and `Y`:
///
/// `E[Y(a)] = Σ_c p(Y=1 | treatment=a, C=c) p(C=c)`.
pub fn backdoor(table: &StratumTable, treatment: Var) -> Result<EffectEstimate> {
    let acy = table.marginalize(&[treatment, Var::C, Var::Y])?;
    let n = |a: usize, c: usize, y: usize| acy.counts[a | c << 1 | y << 2];
    if acy.total == 0 {
        return Err(Error::EmptyDataset);
    }
    let total = acy.total as f64;
    let mut means = [0.0f64; 2];
    for c in 0..2 {
        let n_c: u64 = (0..2).flat_map(|a| (0..2).map(move |y| (a, y))).map(|(a, y)| n(a, c, y)).sum();
        let p_c = n_c as f64 / total;
        for (a, mean) in means.iter_mut().enumerate() {
            let n_ac = n(a, c, 0) + n(a, c, 1);
            if n_ac == 0 {
                return Err(Error::Positivity {
                    treatment: a as u8,
                    confounder: c as u8,
                });
            }
            *mean += n(a, c, 1) as f64 / n_ac as f64 * p_c;
        }
    }
    Ok(EffectEstimate::new(means[1], means[0], Estimator::Simple, acy.total))
}

/// Backdoor-adjusted effect from complete rows.
pub fn tau_simple<R: Record>(rows: impl IntoIterator<Item = R>) -> Result<EffectEstimate> {
    let table = stratum_counts(rows, &[Var::A, Var::C, Var::Y])?;
    backdoor(&table, Var::A)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig_simple() -> Vec<DataRow> {
        [(1, 1, 0), (0, 1, 1), (0, 0, 1), (1, 0, 1)]
            .iter()
            .map(|&(a, c, y)| DataRow::new(Some(a == 1), c == 1, y == 1))
            .collect()
    }

    #[test]
    fn counts_of_the_simple_confounding_rows() {
        let t = stratum_counts(fig_simple(), &[Var::A, Var::C, Var::Y]).unwrap();
        assert_eq!(t.total(), 4);
        assert_eq!(t.counts().iter().filter(|&&n| n == 1).count(), 4);
        assert_eq!(t.counts().iter().filter(|&&n| n == 0).count(), 4);

        let c = stratum_counts(fig_simple(), &[Var::C]).unwrap();
        assert_eq!(c.count(&[(Var::C, true)]).unwrap(), 2);
        assert_eq!(c.count(&[(Var::C, false)]).unwrap(), 2);
        assert_eq!(t.marginalize(&[Var::C]).unwrap(), c);
    }

    #[test]
    fn empty_rows_are_rejected() {
        let rows: Vec<DataRow> = Vec::new();
        assert_eq!(stratum_counts(rows, &[Var::C]), Err(Error::EmptyDataset));
    }

    #[test]
    fn missing_treatment_is_an_error() {
        let rows = vec![DataRow::new(None, true, false)];
        assert_eq!(
            stratum_counts(&rows, &[Var::A, Var::C]),
            Err(Error::MissingField(Var::A))
        );
        assert!(stratum_counts(&rows, &[Var::RA, Var::C]).is_ok());
        let proxied = vec![DataRow::new(None, true, false).with_proxy(true)];
        assert!(stratum_counts(&proxied, &[Var::AStar, Var::C]).is_ok());
    }

    #[test]
    fn conditional_probabilities() {
        let t = stratum_counts(fig_simple(), &[Var::A, Var::C, Var::Y]).unwrap();
        let p = conditional_prob(&t, &[(Var::Y, true)], &[(Var::A, true), (Var::C, true)]).unwrap();
        assert_eq!(p, 0.0);
        let p = conditional_prob(&t, &[(Var::A, true)], &[(Var::C, false)]).unwrap();
        assert_eq!(p, 0.5);

        let all_y: Vec<DataRow> = (0..3).map(|i| DataRow::new(Some(i % 2 == 0), false, true)).collect();
        let t = stratum_counts(&all_y, &[Var::Y]).unwrap();
        assert_eq!(conditional_prob(&t, &[(Var::Y, true)], &[]).unwrap(), 1.0);
    }

    #[test]
    fn conditioning_on_an_empty_stratum_fails() {
        let t = stratum_counts(fig_simple(), &[Var::A, Var::C, Var::Y]).unwrap();
        let given = [(Var::A, true), (Var::C, true), (Var::Y, true)];
        assert_eq!(conditional_prob(&t, &[], &given), Err(Error::EmptyStratum));
        assert!(conditional_prob(&t, &[(Var::Y, true)], &[(Var::Y, true)]).is_err());
    }

    #[test]
    fn deterministic_outcome_gives_unit_effect() {
        let rows: Vec<DataRow> = [(1, 0, 1), (1, 1, 1), (0, 0, 0), (0, 1, 0)]
            .iter()
            .map(|&(a, c, y)| DataRow::new(Some(a == 1), c == 1, y == 1))
            .collect();
        let est = tau_simple(&rows).unwrap();
        assert_eq!(est.tau(), 1.0);
        assert_eq!(est.mean_y1(), 1.0);
        assert_eq!(est.mean_y0(), 0.0);
        assert_eq!(est.n_used(), 4);
    }

    #[test]
    fn empty_arm_is_a_positivity_violation() {
        let rows = vec![
            DataRow::new(Some(true), true, false),
            DataRow::new(Some(false), false, true),
        ];
        assert!(matches!(tau_simple(&rows), Err(Error::Positivity { .. })));
    }

    #[test]
    fn dense_and_sparse_text_agree() {
        let rows = vec![
            DataRow::new(Some(true), false, true).with_text(vec![0, 5, 63, 64, 99]),
            DataRow::new(None, true, false).with_text(vec![]),
            DataRow::new(Some(false), true, true).with_text(vec![99]),
        ];
        let sparse = Dataset::from_rows(100, Provenance::Synthetic, TextLayout::Sparse, rows.clone()).unwrap();
        let dense = Dataset::from_rows(100, Provenance::Synthetic, TextLayout::Dense, rows.clone()).unwrap();
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(sparse.row(i).to_owned_row(), *row);
            assert_eq!(dense.row(i).to_owned_row(), *row);
            assert_eq!(dense.text(i).len(), row.text.len());
            assert!(dense.text(0).contains(64));
            assert!(!dense.text(0).contains(65));
        }
        let sub = dense.subset(&[2, 0]);
        assert_eq!(sub.row(0).to_owned_row(), rows[2]);
        assert_eq!(sparse.subset(&[1]).row(0).to_owned_row(), rows[1]);
    }

    #[test]
    fn text_invariants_are_validated() {
        let mut b = Dataset::builder(10, Provenance::Synthetic, TextLayout::Sparse);
        assert_eq!(b.push(None, false, false, None, [3, 3]), Err(Error::UnsortedText));
        assert!(matches!(
            b.push(None, false, false, None, [10]),
            Err(Error::TextIndexOutOfRange { .. })
        ));
        assert!(b.is_empty());
        let mut d = Dataset::builder(10, Provenance::Synthetic, TextLayout::Dense);
        assert!(d.push_packed(None, false, false, &[1 << 10]).is_err());
        assert!(d.push_packed(None, false, false, &[1 << 9]).is_ok());
    }
}
