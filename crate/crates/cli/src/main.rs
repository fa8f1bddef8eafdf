use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use nerkit_core::augment::{
    augment_corpus, build_label_token_distribution, parse_techniques, read_lexicon, AugmentConfig,
    SynonymLexicon, Technique, DEFAULT_P,
};
use nerkit_core::brill::{
    apply_rules_corpus, halves, learn_rules, read_rules, tune_min_score, write_rules, BrillConfig,
    LearningSet,
};
use nerkit_core::eval::{diff_report, fmt_pct, score};
use nerkit_core::pipeline::{run_pipeline, PipelineConfig};
use nerkit_core::schemes::convert_corpus;
use nerkit_core::semisup::{build_silver_corpus, ConsensusConfig};
use nerkit_core::synth::{generate, write_bundle, SynthConfig};
use nerkit_core::taggers::{tag_corpus, Model, ModelKind};
use nerkit_core::{read_conll, read_raw, write_conll, Corpus, RepairPolicy, Scheme};

/// Corpus engineering for named-entity sequence labeling.
#[derive(Parser)]
#[command(name = "nerkit", version)]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file (or directory for `pipeline` and `synth`). Defaults to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert a CoNLL file between tag schemes.
    Convert {
        /// Input CoNLL file, `-` for stdin.
        input: PathBuf,
        /// Scheme of the input. Inferred when omitted.
        #[arg(long)]
        from: Option<Scheme>,
        #[arg(long)]
        to: Scheme,
        #[command(flatten)]
        repair: RepairArg,
    },
    /// Append augmented copies of every sentence.
    Augment {
        input: PathBuf,
        /// Comma-separated subset of lwtr,sr,sis.
        #[arg(long, default_value = "lwtr,sr,sis")]
        techniques: String,
        #[arg(long, default_value_t = DEFAULT_P)]
        p: f64,
        #[arg(long, default_value_t = 1)]
        copies: usize,
        /// Synonym lexicon, required for sr.
        #[arg(long)]
        lexicon: Option<PathBuf>,
    },
    /// Train a tagger and write the model file.
    Train {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = ModelArg::Perceptron)]
        model: ModelArg,
        #[arg(long, default_value_t = 5)]
        epochs: usize,
    },
    /// Tag sentences with a saved model.
    Tag {
        #[arg(long)]
        model: PathBuf,
        /// Tokens one per line, blank line between sentences. Only the first
        /// column is read, so a CoNLL file works too.
        input: PathBuf,
    },
    /// Build a consensus silver corpus from token-aligned predictions.
    Consensus {
        /// Prediction file, given at least twice.
        #[arg(long = "pred", required = true)]
        preds: Vec<PathBuf>,
        /// Raw text the predictions were made over.
        #[arg(long)]
        raw: PathBuf,
        /// Keep sentences with no consensus entity.
        #[arg(long)]
        keep_all_o: bool,
        #[arg(long, default_value = "BIOES")]
        scheme: Scheme,
        #[command(flatten)]
        repair: RepairArg,
    },
    /// Learn transformation rules from initial and gold tags.
    BrillLearn {
        #[command(flatten)]
        data: BrillData,
        #[command(flatten)]
        brill: BrillArgs,
        #[arg(long, default_value_t = 5)]
        min_score: i64,
    },
    /// Apply a rule file to a tagged corpus, then repair.
    BrillApply {
        #[arg(long)]
        rules: PathBuf,
        input: PathBuf,
        #[command(flatten)]
        repair: RepairArg,
    },
    /// Choose min score: learn on the first half, evaluate on the second.
    BrillTune {
        #[command(flatten)]
        data: BrillData,
        #[command(flatten)]
        brill: BrillArgs,
        /// Candidate min scores.
        #[arg(long, value_delimiter = ',', default_value = "2,3,4,5")]
        scores: Vec<i64>,
        #[command(flatten)]
        repair: RepairArg,
    },
    /// Entity-level precision, recall and F1.
    Score {
        gold: PathBuf,
        predicted: PathBuf,
        #[arg(long, value_enum, default_value_t = ReportFormat::Table)]
        format: ReportFormat,
        #[command(flatten)]
        repair: RepairArg,
    },
    /// Correct-entity counts of two systems against the same gold.
    Diff {
        gold: PathBuf,
        a: PathBuf,
        b: PathBuf,
        #[command(flatten)]
        repair: RepairArg,
    },
    /// Run the five-stage experiment described by a config file.
    Pipeline {
        #[arg(long)]
        config: PathBuf,
        /// Print the planned stages and exit without touching anything.
        #[arg(long)]
        dry_run: bool,
    },
    /// Write the synthetic example corpus, lexicon and pipeline config.
    Synth,
}

#[derive(Args)]
struct RepairArg {
    /// How ill-formed tag sequences are decoded: strict, conll or discard.
    #[arg(long, default_value = "conll")]
    repair: RepairPolicy,
}

#[derive(Args)]
struct BrillData {
    /// Tagger output over the learning sentences.
    #[arg(long)]
    initial: PathBuf,
    /// Gold tags for the same sentences.
    #[arg(long)]
    gold: PathBuf,
}

#[derive(Args)]
struct BrillArgs {
    #[arg(long, default_value_t = 0.99)]
    min_acc: f64,
    #[arg(long, default_value_t = 250)]
    max_rules: usize,
    /// Template set. Only `default` exists.
    #[arg(long, default_value = "default")]
    templates: String,
}

impl BrillArgs {
    fn config(&self, min_score: i64) -> anyhow::Result<BrillConfig> {
        if self.templates != "default" {
            bail!(
                "unknown template set `{}` (only `default` exists)",
                self.templates
            );
        }
        Ok(BrillConfig {
            min_acc: self.min_acc,
            min_score,
            max_rules: self.max_rules,
        })
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Unigram,
    Perceptron,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Unigram => ModelKind::Unigram,
            ModelArg::Perceptron => ModelKind::Perceptron,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Table,
    Kv,
}

fn reader(path: &Path) -> anyhow::Result<Box<dyn BufRead>> {
    if path == Path::new("-") {
        return Ok(Box::new(BufReader::new(io::stdin())));
    }
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(Box::new(BufReader::new(file)))
}

fn load_corpus(path: &Path, scheme: Option<Scheme>) -> anyhow::Result<Corpus> {
    read_conll(reader(path)?, scheme).with_context(|| format!("reading {}", path.display()))
}

fn writer(out: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit(
    out: Option<&Path>,
    f: impl FnOnce(&mut dyn Write) -> io::Result<()>,
) -> anyhow::Result<()> {
    let mut w = writer(out)?;
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

fn emit_corpus(out: Option<&Path>, corpus: &Corpus) -> anyhow::Result<()> {
    emit(out, |w| write_conll(corpus, w))
}

fn emit_text(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    emit(out, |w| w.write_all(text.as_bytes()))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let seed = cli.seed.unwrap_or(0);
    let out = cli.out.as_deref();
    match cli.command {
        Command::Convert {
            input,
            from,
            to,
            repair,
        } => {
            let corpus = load_corpus(&input, from)?;
            emit_corpus(out, &convert_corpus(&corpus, to, repair.repair)?)
        }
        Command::Augment {
            input,
            techniques,
            p,
            copies,
            lexicon,
        } => {
            let corpus = load_corpus(&input, None)?;
            let techniques = parse_techniques(&techniques)?;
            let lexicon = match lexicon {
                Some(path) => read_lexicon(reader(&path)?)
                    .with_context(|| format!("reading {}", path.display()))?,
                None if techniques.contains(&Technique::Sr) => {
                    bail!("synonym replacement needs --lexicon")
                }
                None => SynonymLexicon::new(),
            };
            let cfg = AugmentConfig {
                p,
                techniques,
                copies_per_technique: copies,
                seed,
            };
            let dist = build_label_token_distribution(&corpus);
            emit_corpus(out, &augment_corpus(&corpus, &cfg, &lexicon, &dist)?)
        }
        Command::Train {
            input,
            model,
            epochs,
        } => {
            let corpus = load_corpus(&input, None)?;
            let model = Model::train(model.into(), &corpus, epochs, seed)?;
            emit(out, |w| model.save(w))
        }
        Command::Tag { model, input } => {
            let model = Model::load(reader(&model)?)
                .with_context(|| format!("loading model {}", model.display()))?;
            let sentences = read_raw(reader(&input)?)?;
            emit_corpus(out, &tag_corpus(&model, &sentences))
        }
        Command::Consensus {
            preds,
            raw,
            keep_all_o,
            scheme,
            repair,
        } => {
            if preds.len() < 2 {
                bail!("consensus needs at least two --pred files");
            }
            let raw = read_raw(reader(&raw)?)?;
            let predictions = preds
                .iter()
                .map(|p| load_corpus(p, None))
                .collect::<anyhow::Result<Vec<_>>>()?;
            let cfg = ConsensusConfig {
                scheme,
                policy: repair.repair,
                drop_all_o: !keep_all_o,
            };
            emit_corpus(out, &build_silver_corpus(&raw, &predictions, &cfg)?)
        }
        Command::BrillLearn {
            data,
            brill,
            min_score,
        } => {
            let cfg = brill.config(min_score)?;
            cfg.validate()?;
            let initial = load_corpus(&data.initial, None)?;
            let gold = load_corpus(&data.gold, None)?;
            let rules = learn_rules(&LearningSet::new(&initial, &gold)?, &cfg)?;
            emit(out, |w| write_rules(&rules, w))
        }
        Command::BrillApply {
            rules,
            input,
            repair,
        } => {
            let rules = read_rules(reader(&rules)?)
                .with_context(|| format!("reading rules {}", rules.display()))?;
            let corpus = load_corpus(&input, None)?;
            let corrected = apply_rules_corpus(&corpus, &rules);
            emit_corpus(
                out,
                &convert_corpus(&corrected, corrected.scheme, repair.repair)?,
            )
        }
        Command::BrillTune {
            data,
            brill,
            scores,
            repair,
        } => {
            let cfg = brill.config(scores.iter().copied().min().unwrap_or(1))?;
            cfg.validate()?;
            let initial = load_corpus(&data.initial, None)?;
            let gold = load_corpus(&data.gold, None)?;
            let (learn_init, eval_init) = halves(&initial);
            let (learn_gold, eval_gold) = halves(&gold);
            let outcome = tune_min_score(
                &LearningSet::new(&learn_init, &learn_gold)?,
                &LearningSet::new(&eval_init, &eval_gold)?,
                &scores,
                &cfg,
                repair.repair,
            )?;
            eprintln!("baseline F1 {}", fmt_pct(outcome.baseline_f1));
            for (s, f1) in &outcome.f1_by_min_score {
                eprintln!("min_score {s}: F1 {}", fmt_pct(*f1));
            }
            eprintln!(
                "chosen min_score {} with {} rules{}",
                outcome.min_score,
                outcome.rules.len(),
                if outcome.adopted {
                    ""
                } else {
                    " (no candidate beat the baseline)"
                }
            );
            emit(out, |w| write_rules(&outcome.rules, w))
        }
        Command::Score {
            gold,
            predicted,
            format,
            repair,
        } => {
            let gold = load_corpus(&gold, None)?;
            let predicted = load_corpus(&predicted, None)?;
            let report = score(&gold, &predicted, repair.repair)?;
            emit_text(
                out,
                &match format {
                    ReportFormat::Table => report.to_table(),
                    ReportFormat::Kv => report.to_key_value(),
                },
            )
        }
        Command::Diff { gold, a, b, repair } => {
            let gold = load_corpus(&gold, None)?;
            let a = load_corpus(&a, None)?;
            let b = load_corpus(&b, None)?;
            emit_text(out, &diff_report(&gold, &a, &b, repair.repair)?.to_table())
        }
        Command::Pipeline { config, dry_run } => {
            let mut cfg = PipelineConfig::load(&config)
                .with_context(|| format!("reading config {}", config.display()))?;
            if let Some(seed) = cli.seed {
                cfg.seed = seed;
            }
            if let Some(dir) = out {
                cfg.out = dir.to_path_buf();
            }
            if dry_run {
                cfg.validate()?;
                for line in cfg.plan() {
                    println!("{line}");
                }
                return Ok(());
            }
            let report = run_pipeline(&cfg)?;
            print!("{}", report.summary());
            Ok(())
        }
        Command::Synth => {
            let dir = out.unwrap_or(Path::new("data"));
            let cfg = SynthConfig {
                seed: cli.seed.unwrap_or(SynthConfig::default().seed),
                ..SynthConfig::default()
            };
            write_bundle(&generate(&cfg), dir)?;
            eprintln!("wrote synthetic bundle to {}", dir.display());
            Ok(())
        }
    }
}

/// A closed downstream pipe (`nerkit ... | head`) is not an error.
fn is_broken_pipe(err: &anyhow::Error) -> bool {
    err.chain().any(|cause| {
        cause
            .downcast_ref::<std::io::Error>()
            .is_some_and(|e| e.kind() == std::io::ErrorKind::BrokenPipe)
            || cause
                .downcast_ref::<nerkit_core::Error>()
                .is_some_and(|e| matches!(e, nerkit_core::Error::Io(e) if e.kind() == std::io::ErrorKind::BrokenPipe))
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    // Errors returned by `run` come from the inputs; a panic is a bug.
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(err)) if is_broken_pipe(&err) => ExitCode::SUCCESS,
        Ok(Err(err)) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
        Err(_) => ExitCode::from(2),
    }
}
