//! JSON-lines review corpus ingestion.
//!
//! Reviews become rows with `A` = sentiment (4-5 stars positive, 1-2
//! negative, 3 dropped), `Y` = the review received a useful vote, and `C` =
//! the author received at least two useful votes overall. Text goes through
//! lowercasing, alphanumeric splitting, English stopword removal and the
//! Porter stemmer, and is then reduced to word presence over a vocabulary.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::path::Path;

use causal_text_core::tabular::{Dataset, Provenance, TextLayout, TreatmentTruth};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("io error on {path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("empty dataset: {0}")]
    Empty(&'static str),
    #[error("empty vocabulary: no token reaches min_count={0}")]
    EmptyVocabulary(u64),
    #[error(transparent)]
    Core(#[from] causal_text_core::Error),
}

type Result<T> = std::result::Result<T, IngestError>;

/// Stopword filter plus memoized Porter stemming.
pub struct Preprocessor {
    stopwords: HashSet<String>,
    stems: HashMap<String, String>,
}

impl Default for Preprocessor {
    fn default() -> Self {
        Preprocessor::new()
    }
}

impl Preprocessor {
    pub fn new() -> Self {
        Preprocessor {
            stopwords: stop_words::get(stop_words::LANGUAGE::English).into_iter().collect(),
            stems: HashMap::new(),
        }
    }

    pub fn is_stopword(&self, token: &str) -> bool {
        self.stopwords.contains(token)
    }

    /// `"The FOOD was amazing!!"` becomes `["food", "amaz"]`.
    pub fn tokens(&mut self, text: &str) -> Vec<String> {
        let lower = text.to_lowercase();
        let mut out = Vec::new();
        for raw in lower.split(|c: char| !c.is_alphanumeric()) {
            if raw.is_empty() || self.stopwords.contains(raw) {
                continue;
            }
            let stem = match self.stems.get(raw) {
                Some(s) => s.clone(),
                None => {
                    let s = porter_stemmer::stem(raw);
                    self.stems.insert(raw.to_owned(), s.clone());
                    s
                }
            };
            out.push(stem);
        }
        out
    }
}

#[derive(Debug, Default, Deserialize)]
struct Votes {
    useful: Option<i64>,
}

/// One review line. Both the flat `useful` field and the older nested
/// `votes.useful` are accepted.
#[derive(Debug, Deserialize)]
pub struct Review {
    pub stars: Option<f64>,
    pub text: Option<String>,
    pub user_id: Option<String>,
    useful: Option<i64>,
    votes: Option<Votes>,
}

#[derive(Debug, Deserialize)]
pub struct User {
    pub user_id: Option<String>,
    useful: Option<i64>,
    votes: Option<Votes>,
}

fn useful_votes(flat: Option<i64>, nested: &Option<Votes>) -> Option<u64> {
    flat.or_else(|| nested.as_ref().and_then(|v| v.useful))
        .and_then(|n| u64::try_from(n).ok())
}

impl Review {
    pub fn useful(&self) -> Option<u64> {
        useful_votes(self.useful, &self.votes)
    }

    /// Star rating as an integer in `1..=5`.
    pub fn star_rating(&self) -> Option<u8> {
        let s = self.stars?;
        (s.fract() == 0.0 && (1.0..=5.0).contains(&s)).then_some(s as u8)
    }
}

impl User {
    pub fn useful(&self) -> Option<u64> {
        useful_votes(self.useful, &self.votes)
    }
}

/// Structured variables of one review.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Variables {
    pub a: bool,
    pub c: bool,
    pub y: bool,
}

/// `None` for a three-star review, which is neither positive nor negative.
pub fn derive_variables(stars: u8, review_useful: u64, author_useful: u64) -> Option<Variables> {
    let a = match stars {
        4 | 5 => true,
        1 | 2 => false,
        _ => return None,
    };
    Some(Variables {
        a,
        c: author_useful >= 2,
        y: review_useful >= 1,
    })
}

/// Dense word positions in lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    pub fn from_words(mut words: Vec<String>) -> Self {
        words.sort();
        words.dedup();
        let index = words.iter().enumerate().map(|(i, w)| (w.clone(), i as u32)).collect();
        Vocabulary { words, index }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn position(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }
}

/// Sorted, deduplicated positions of the in-vocabulary tokens.
pub fn featurize<S: AsRef<str>>(tokens: &[S], vocab: &Vocabulary) -> Vec<u32> {
    let mut idx: Vec<u32> = tokens.iter().filter_map(|t| vocab.position(t.as_ref())).collect();
    idx.sort_unstable();
    idx.dedup();
    idx
}

/// Line-level accounting of one pass over a reviews file.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineStats {
    pub lines: u64,
    pub malformed: u64,
    pub neutral: u64,
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Parsed, polarized reviews: `(stars, review)` for every well-formed line
/// whose rating is not three stars.
fn polar_reviews<'a, R: BufRead + 'a>(reader: R, stats: &'a mut LineStats) -> impl Iterator<Item = io::Result<(u8, Review)>> + 'a {
    reader.lines().filter_map(move |line| {
        let line = match line {
            Ok(l) => l,
            Err(e) => return Some(Err(e)),
        };
        if line.trim().is_empty() {
            return None;
        }
        stats.lines += 1;
        let review: Review = match serde_json::from_str(&line) {
            Ok(r) => r,
            Err(_) => {
                stats.malformed += 1;
                return None;
            }
        };
        let stars = match (review.star_rating(), &review.text, &review.user_id, review.useful()) {
            (Some(s), Some(_), Some(_), Some(_)) => s,
            _ => {
                stats.malformed += 1;
                return None;
            }
        };
        if stars == 3 {
            stats.neutral += 1;
            return None;
        }
        Some(Ok((stars, review)))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabConfig {
    pub min_count: u64,
    /// Counting stops after this many polarized reviews.
    pub sample: usize,
}

impl Default for VocabConfig {
    fn default() -> Self {
        VocabConfig {
            min_count: 1000,
            sample: 1_000_000,
        }
    }
}

/// Token occurrence counts over the first `sample` polarized reviews, then
/// every token seen at least `min_count` times.
pub fn build_vocab<R: BufRead>(reader: R, config: &VocabConfig, pre: &mut Preprocessor) -> Result<(Vocabulary, BTreeMap<String, u64>)> {
    let mut stats = LineStats::default();
    let mut counts: HashMap<String, u64> = HashMap::new();
    let mut seen = 0usize;
    for item in polar_reviews(reader, &mut stats) {
        if seen >= config.sample {
            break;
        }
        let (_, review) = item.map_err(|source| IngestError::Io {
            path: "reviews".into(),
            source,
        })?;
        for token in pre.tokens(review.text.as_deref().unwrap_or_default()) {
            *counts.entry(token).or_default() += 1;
        }
        seen += 1;
    }
    if seen == 0 {
        return Err(IngestError::Empty("no usable reviews"));
    }
    let kept: BTreeMap<String, u64> = counts.into_iter().filter(|(_, n)| *n >= config.min_count).collect();
    if kept.is_empty() {
        return Err(IngestError::EmptyVocabulary(config.min_count));
    }
    Ok((Vocabulary::from_words(kept.keys().cloned().collect()), kept))
}

pub fn build_vocab_file(path: &Path, config: &VocabConfig) -> Result<(Vocabulary, BTreeMap<String, u64>)> {
    build_vocab(open(path)?, config, &mut Preprocessor::new())
}

/// Author `useful` totals keyed by user id.
pub fn load_users<R: BufRead>(reader: R) -> Result<(HashMap<String, u64>, u64)> {
    let mut users = HashMap::new();
    let mut malformed = 0;
    for line in reader.lines() {
        let line = line.map_err(|source| IngestError::Io {
            path: "users".into(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<User>(&line) {
            Ok(User {
                user_id: Some(id),
                useful,
                votes,
            }) => match useful_votes(useful, &votes) {
                Some(n) => {
                    users.insert(id, n);
                }
                None => malformed += 1,
            },
            _ => malformed += 1,
        }
    }
    if users.is_empty() {
        return Err(IngestError::Empty("no usable users"));
    }
    Ok((users, malformed))
}

/// Counts and fractions describing an ingested corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub review_lines: u64,
    pub malformed_reviews: u64,
    pub neutral_reviews: u64,
    pub unknown_users: u64,
    pub malformed_users: u64,
    pub rows: u64,
    pub vocab_size: usize,
    pub min_count: u64,
    pub sample: usize,
    pub positive_fraction: f64,
    pub useful_fraction: f64,
    pub author_flag_fraction: f64,
}

pub struct Ingested {
    pub dataset: Dataset,
    pub truth: TreatmentTruth,
    pub vocab: Vocabulary,
    pub summary: IngestSummary,
}

/// Joins reviews with their authors and featurizes them over `vocab`.
pub fn ingest<R: BufRead, U: BufRead>(
    reviews: R,
    users: U,
    vocab: Vocabulary,
    config: &VocabConfig,
    pre: &mut Preprocessor,
) -> Result<Ingested> {
    let (authors, malformed_users) = load_users(users)?;
    let mut stats = LineStats::default();
    let mut builder = Dataset::builder(vocab.len(), Provenance::Yelp, TextLayout::Sparse);
    let mut truth = Vec::new();
    let mut unknown_users = 0;
    let (mut positive, mut useful, mut flagged) = (0u64, 0u64, 0u64);
    for item in polar_reviews(reviews, &mut stats) {
        let (stars, review) = item.map_err(|source| IngestError::Io {
            path: "reviews".into(),
            source,
        })?;
        let Some(&author) = review.user_id.as_ref().and_then(|id| authors.get(id)) else {
            unknown_users += 1;
            continue;
        };
        let Some(v) = derive_variables(stars, review.useful().unwrap_or_default(), author) else {
            continue;
        };
        let text = featurize(&pre.tokens(review.text.as_deref().unwrap_or_default()), &vocab);
        builder.push(Some(v.a), v.c, v.y, None, text)?;
        truth.push(v.a);
        positive += u64::from(v.a);
        useful += u64::from(v.y);
        flagged += u64::from(v.c);
    }
    let rows = truth.len() as u64;
    if rows == 0 {
        return Err(IngestError::Empty("no review joined an author"));
    }
    let fraction = |k: u64| k as f64 / rows as f64;
    let summary = IngestSummary {
        review_lines: stats.lines,
        malformed_reviews: stats.malformed,
        neutral_reviews: stats.neutral,
        unknown_users,
        malformed_users,
        rows,
        vocab_size: vocab.len(),
        min_count: config.min_count,
        sample: config.sample,
        positive_fraction: fraction(positive),
        useful_fraction: fraction(useful),
        author_flag_fraction: fraction(flagged),
    };
    Ok(Ingested {
        dataset: builder.finish(),
        truth: TreatmentTruth::new(truth),
        vocab,
        summary,
    })
}

/// Two passes over the reviews file: vocabulary, then rows.
pub fn ingest_files(reviews: &Path, users: &Path, config: &VocabConfig) -> Result<Ingested> {
    let mut pre = Preprocessor::new();
    let (vocab, _) = build_vocab(open(reviews)?, config, &mut pre)?;
    ingest(open(reviews)?, open(users)?, vocab, config, &mut pre)
}

/// Writes `rows.tsv`, `vocab.txt` and `summary.json` into `dir`, the layout
/// `causal-text run --source yelp --data DIR` reads.
pub fn write_corpus(ingested: &Ingested, dir: &Path) -> std::result::Result<(), Box<dyn std::error::Error + Send + Sync>> {
    use std::io::Write;
    std::fs::create_dir_all(dir)?;
    crate::rowfile::write_rows(&ingested.dataset, io::BufWriter::new(File::create(dir.join("rows.tsv"))?))?;
    let mut vocab = io::BufWriter::new(File::create(dir.join("vocab.txt"))?);
    for w in ingested.vocab.words() {
        writeln!(vocab, "{w}")?;
    }
    vocab.flush()?;
    let mut summary = io::BufWriter::new(File::create(dir.join("summary.json"))?);
    serde_json::to_writer_pretty(&mut summary, &ingested.summary)?;
    writeln!(summary)?;
    summary.flush()?;
    Ok(())
}
