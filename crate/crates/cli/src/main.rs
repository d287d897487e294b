use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use causal_text::harness::{self, ConfigError, ExperimentConfig, Manifest, Optimizer, Scenario, Source};
use causal_text::ingest::{self, VocabConfig};
use clap::{Args, Parser, Subcommand};
use log::info;

#[derive(Parser)]
#[command(name = "causal-text", version, about = "Causal effect estimation with text-derived treatments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Run a simulation study and write `.dat` files.
    Run(RunArgs),
    /// Turn a review/user JSON-lines pair into a corpus directory.
    Ingest(IngestArgs),
    /// Print the vocabulary a corpus would use.
    Vocab(VocabArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Rerun from a saved manifest.json; other run flags are then rejected.
    #[arg(long, conflicts_with_all = ["scenario", "source", "sizes", "out"])]
    manifest: Option<PathBuf>,
    #[arg(long, value_enum, required_unless_present = "manifest")]
    scenario: Option<Scenario>,
    #[arg(long, value_enum, default_value = "synthetic")]
    source: Source,
    /// Sample sizes, ascending.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    replicates: usize,
    #[arg(long, default_value_t = 20)]
    imputations: usize,
    /// 1000 or 10; also fixes the synthetic vocabulary size.
    #[arg(long, default_value_t = 1000)]
    vocab_min_count: u64,
    /// Overrides the synthetic vocabulary size implied by --vocab-min-count.
    #[arg(long)]
    vocab_size: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    zeta: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    clamp_epsilon: Option<f64>,
    #[arg(long)]
    l2_lambda: Option<f64>,
    #[arg(long)]
    grad_tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long, value_enum)]
    optimizer: Option<Optimizer>,
    #[arg(long)]
    lbfgs_memory: Option<usize>,
    #[arg(long)]
    singular_tol: Option<f64>,
    /// Folds for out-of-fold error rates (0 or 1: in sample).
    #[arg(long)]
    error_rate_folds: Option<usize>,
    #[arg(long)]
    min_train: Option<usize>,
    #[arg(long)]
    train_fraction: Option<f64>,
    /// Corpus directory from `causal-text ingest` (required for --source yelp).
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, required_unless_present = "manifest")]
    out: Option<PathBuf>,
    /// Worker threads; defaults to all cores. Outputs do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long)]
    reviews: PathBuf,
    #[arg(long)]
    users: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1000)]
    min_count: u64,
    #[arg(long, default_value_t = 1_000_000)]
    sample: usize,
}

#[derive(Args)]
struct VocabArgs {
    #[arg(long)]
    reviews: PathBuf,
    #[arg(long, default_value_t = 1000)]
    min_count: u64,
    #[arg(long, default_value_t = 1_000_000)]
    sample: usize,
    /// Write `word<TAB>count` lines here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn build_config(args: &RunArgs) -> Result<ExperimentConfig, ConfigError> {
    let (Some(scenario), Some(out)) = (args.scenario, &args.out) else {
        return Err(ConfigError::Invalid("--scenario and --out are required".into()));
    };
    let mut c = ExperimentConfig::new(scenario, args.source, out);
    if !args.sizes.is_empty() {
        c.sizes = args.sizes.clone();
    }
    c.replicates = args.replicates;
    c.imputations = args.imputations;
    c.vocab_min_count = args.vocab_min_count;
    c.vocab_size = match (args.vocab_size, harness::synthetic_vocab_size(args.vocab_min_count)) {
        (Some(v), _) | (None, Some(v)) => v,
        // real-text runs take the vocabulary from the corpus
        (None, None) if args.source == Source::Yelp => c.vocab_size,
        (None, None) => {
            return Err(ConfigError::Invalid(format!(
                "no default vocabulary size for --vocab-min-count {}; pass --vocab-size",
                args.vocab_min_count
            )))
        }
    };
    c.seed = args.seed;
    macro_rules! set {
        ($($field:ident),*) => {$(if let Some(v) = args.$field { c.$field = v; })*};
    }
    set!(zeta, eta, clamp_epsilon, l2_lambda, grad_tol, max_iter, optimizer, lbfgs_memory, singular_tol);
    set!(error_rate_folds, min_train, train_fraction);
    c.data = args.data.clone();
    c.validate()?;
    Ok(c)
}

fn run(args: RunArgs) -> anyhow::Result<()> {
    let config = match &args.manifest {
        Some(path) => {
            let m = Manifest::read(path).with_context(|| format!("reading {}", path.display()))?;
            m.config.validate()?;
            m.config
        }
        None => build_config(&args)?,
    };
    let go = || harness::run_to_disk(&config);
    let (report, outputs) = match args.threads {
        Some(0) => return Err(ConfigError::Invalid("--threads must be positive".into()).into()),
        Some(k) => rayon::ThreadPoolBuilder::new().num_threads(k).build()?.install(go)?,
        None => go()?,
    };
    info!("manifest: {}", outputs.manifest.display());
    let mut stdout = io::stdout().lock();
    writeln!(stdout, "model\tn\terr\tse\tsuccesses\tfailures")?;
    for r in &report.records {
        writeln!(stdout, "{}\t{}\t{:.6e}\t{:.6e}\t{}\t{}", r.model, r.n, r.err, r.se, r.successes, r.failures)?;
    }
    for p in &outputs.dat {
        writeln!(stdout, "wrote {}", p.display())?;
    }
    Ok(())
}

fn ingest_cmd(args: IngestArgs) -> anyhow::Result<()> {
    if args.min_count == 0 || args.sample == 0 {
        return Err(ConfigError::Invalid("--min-count and --sample must be positive".into()).into());
    }
    let cfg = VocabConfig {
        min_count: args.min_count,
        sample: args.sample,
    };
    let ingested = ingest::ingest_files(&args.reviews, &args.users, &cfg)?;
    ingest::write_corpus(&ingested, &args.out).map_err(|e| anyhow::anyhow!(e))?;
    let s = &ingested.summary;
    println!(
        "rows {}  vocab {}  positive {:.3}  useful {:.3}  author_flag {:.3}",
        s.rows, s.vocab_size, s.positive_fraction, s.useful_fraction, s.author_flag_fraction
    );
    Ok(())
}

fn vocab_cmd(args: VocabArgs) -> anyhow::Result<()> {
    if args.min_count == 0 || args.sample == 0 {
        return Err(ConfigError::Invalid("--min-count and --sample must be positive".into()).into());
    }
    let cfg = VocabConfig {
        min_count: args.min_count,
        sample: args.sample,
    };
    let (vocab, counts) = ingest::build_vocab_file(&args.reviews, &cfg)?;
    let mut out: Box<dyn Write> = match &args.out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    for w in vocab.words() {
        writeln!(out, "{w}\t{}", counts.get(w).copied().unwrap_or_default())?;
    }
    out.flush()?;
    eprintln!("{} words with at least {} occurrences", vocab.len(), args.min_count);
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Ingest(a) => ingest_cmd(a),
        Command::Vocab(a) => vocab_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<ConfigError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
