use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use miniaudit::lexicon::Lexicons;
use miniaudit::pipeline::{analyze_app, analyze_corpus, write_corpus, Analyzer, ReportFormat};
use miniaudit::policy::{
    generate_corpus, read_corpus, train_mlp, vectorize, Classifier, CorpusConfig, Method, Mlp, SimilarityConfig,
    TrainConfig, Unit, Vocabulary,
};
use miniaudit::taint::ApiTables;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Audits mini-app packages for disagreement between what the code does
/// with personal data and what the privacy policy says.
#[derive(Parser)]
#[command(name = "miniaudit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze one unpacked package.
    Analyze {
        app: PathBuf,
        #[command(flatten)]
        opts: Options,
    },
    /// Analyze every package directory under DIR.
    Corpus {
        dir: PathBuf,
        #[command(flatten)]
        opts: Options,
        /// Worker threads; 0 uses all cores.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Train the sentence classifier and write a model file.
    Train {
        /// Output model file.
        #[arg(long)]
        out: PathBuf,
        /// Labelled sentences, `label<TAB>sentence` per line; the synthetic
        /// corpus is used when absent.
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long, env = "MCDS_DICT_DIR")]
        dict_dir: Option<PathBuf>,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 30)]
        epochs: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SimilarityArg {
    Overlap,
    Cosine,
    Euclidean,
    Dice,
}

impl From<SimilarityArg> for Method {
    fn from(s: SimilarityArg) -> Method {
        match s {
            SimilarityArg::Overlap => Method::Overlap,
            SimilarityArg::Cosine => Method::Cosine,
            SimilarityArg::Euclidean => Method::Euclidean,
            SimilarityArg::Dice => Method::Dice,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ClassifierArg {
    Rule,
    Mlp,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Args)]
struct Options {
    /// Policy text file; overrides any policy found in the package.
    #[arg(long)]
    policy: Option<PathBuf>,
    /// Lexicon directory; the bundled lexicon is used when absent.
    #[arg(long, env = "MCDS_DICT_DIR")]
    dict_dir: Option<PathBuf>,
    /// Source API table replacing the bundled one.
    #[arg(long)]
    sources: Option<PathBuf>,
    /// Sink API table replacing the bundled one.
    #[arg(long)]
    sinks: Option<PathBuf>,
    /// Phrase similarity used to match policy text against the lexicon.
    #[arg(long, value_enum, default_value = "overlap")]
    similarity: SimilarityArg,
    /// Minimum similarity in [0, 1] for a phrase to match.
    #[arg(long, default_value_t = 1.0)]
    threshold: f64,
    /// Sentence classifier deciding which policy sentences are examined.
    #[arg(long, value_enum, default_value = "rule")]
    classifier: ClassifierArg,
    /// Trained model for `--classifier mlp`; trained on the synthetic
    /// corpus when absent.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: FormatArg,
    /// Output directory; reports go to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Io(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Io(e)
    }
}

fn load_lexicons(dir: Option<&Path>) -> anyhow::Result<Lexicons> {
    match dir {
        Some(d) => Lexicons::load(d).with_context(|| format!("loading lexicon from {}", d.display())),
        None => Ok(Lexicons::bundled()),
    }
}

fn build_analyzer(o: &Options) -> Result<Analyzer<f64>, Failure> {
    let similarity = SimilarityConfig::new(o.similarity.into(), o.threshold, Unit::Auto)
        .map_err(|e| Failure::Usage(format!("--threshold: {e}")))?;
    if o.model.is_some() && o.classifier != ClassifierArg::Mlp {
        return Err(Failure::Usage("--model requires --classifier mlp".into()));
    }
    let lexicons = load_lexicons(o.dict_dir.as_deref())?;
    let tables = if o.sources.is_none() && o.sinks.is_none() {
        ApiTables::bundled()
    } else {
        ApiTables::load(o.sources.as_deref(), o.sinks.as_deref()).context("loading API tables")?
    };
    let mut an = Analyzer::new(lexicons, tables).context("API tables name unknown data types")?;
    an.policy.similarity = similarity;
    if o.classifier == ClassifierArg::Mlp {
        let mlp = match &o.model {
            Some(p) => Mlp::load(p).with_context(|| format!("loading model {}", p.display()))?,
            None => {
                let rows = generate_corpus(an.lexicons(), &CorpusConfig::default());
                train_mlp(&rows, &an.policy.vocab, &TrainConfig::default()).context("training classifier")?
            }
        };
        if mlp.input != an.policy.vocab.len() {
            return Err(Failure::Usage(format!(
                "model expects {} inputs but the lexicon vocabulary has {}",
                mlp.input,
                an.policy.vocab.len()
            )));
        }
        an.policy.classifier = Classifier::Mlp(mlp);
    }
    Ok(an)
}

fn format_of(f: FormatArg) -> ReportFormat {
    match f {
        FormatArg::Json => ReportFormat::Json,
        FormatArg::Csv => ReportFormat::Csv,
    }
}

fn write_file(path: &Path, body: &str) -> anyhow::Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(path, body).with_context(|| format!("writing {}", path.display()))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Analyze { app, opts } => {
            let an = build_analyzer(&opts)?;
            let report = analyze_app(&an, &app, opts.policy.as_deref())
                .with_context(|| format!("analyzing {}", app.display()))?;
            let format = format_of(opts.format);
            let body = format.render(&report);
            match &opts.out {
                Some(dir) => write_file(&dir.join(format!("{}.{}", report.app_id, format.extension())), &body)?,
                None => print!("{body}"),
            }
        }
        Command::Corpus { dir, opts, jobs } => {
            if opts.policy.is_some() {
                return Err(Failure::Usage("--policy applies to single apps only".into()));
            }
            let an = build_analyzer(&opts)?;
            let (summary, entries) =
                analyze_corpus(&an, &dir, jobs).with_context(|| format!("reading corpus {}", dir.display()))?;
            match &opts.out {
                Some(out) => {
                    write_corpus(out, &summary, &entries, format_of(opts.format))
                        .with_context(|| format!("writing to {}", out.display()))?;
                }
                None => match opts.format {
                    FormatArg::Json => print!("{}", summary.to_json()),
                    FormatArg::Csv => print!("{}", summary.csv_tables()["apps.csv"]),
                },
            }
            for f in &summary.failed {
                eprintln!("{}: {}", f.app_id, f.error);
            }
        }
        Command::Train {
            out,
            corpus,
            dict_dir,
            seed,
            epochs,
        } => {
            let lexicons = load_lexicons(dict_dir.as_deref())?;
            let vocab = Vocabulary::combined(&lexicons);
            let rows = match &corpus {
                Some(p) => {
                    let body = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                    read_corpus(&body).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?
                }
                None => generate_corpus(&lexicons, &CorpusConfig::default()),
            };
            let cfg = TrainConfig::<f64> {
                seed,
                epochs,
                ..TrainConfig::default()
            };
            let mlp = train_mlp(&rows, &vocab, &cfg).context("training classifier")?;
            let data: Vec<(Vec<u8>, bool)> = rows.iter().map(|(y, s)| (vectorize(s, &vocab), *y)).collect();
            mlp.save(&out).with_context(|| format!("writing {}", out.display()))?;
            eprintln!(
                "trained on {} sentences, training accuracy {:.4}",
                rows.len(),
                mlp.accuracy(&data).context("scoring")?
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
