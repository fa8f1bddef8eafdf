//! Staged experiment runner.
//!
//! Five stages, each retrained from scratch and scored on the same test set:
//!
//! | stage | training data |
//! |-------|---------------|
//! | M0 | the training corpus as given |
//! | M1 | converted to the working scheme |
//! | M2 | M1 plus augmented copies |
//! | M3 | M2 plus a consensus silver corpus over raw text |
//! | M4 | M3's test predictions corrected by tuned transformation rules |
//!
//! Every intermediate artifact is written in the same formats the standalone
//! tools read. The summary carries no timings so repeated runs with the same
//! inputs and seed are byte-identical.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::augment::{
    augment_corpus, build_label_token_distribution, parse_techniques, read_lexicon, AugmentConfig,
    SynonymLexicon,
};
use crate::brill::{
    apply_rules_corpus, halves, tune_min_score, write_rules, BrillConfig, LearningSet, TuneOutcome,
};
use crate::corpus::{read_conll, read_raw, write_conll, Corpus, Scheme};
use crate::error::{Error, Result};
use crate::eval::{fmt_pct, score, ScoreReport};
use crate::schemes::{convert_corpus, RepairPolicy};
use crate::semisup::{build_silver_corpus, ConsensusConfig};
use crate::taggers::{surfaces_of, tag_corpus, Model, ModelKind};

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub train: PathBuf,
    pub test: PathBuf,
    pub raw: PathBuf,
    pub lexicon: PathBuf,
    pub out: PathBuf,
    /// Working scheme for M1 onwards.
    pub scheme: Scheme,
    /// Tagger retrained at every stage.
    pub model: ModelKind,
    pub epochs: usize,
    pub seed: u64,
    pub augment: AugmentConfig,
    pub repair: RepairPolicy,
    pub drop_all_o: bool,
    pub brill: BrillConfig,
    /// Candidate min scores for tuning.
    pub brill_scores: Vec<i64>,
}

impl PipelineConfig {
    /// Defaults for everything except the input paths.
    pub fn with_paths(train: PathBuf, test: PathBuf, raw: PathBuf, lexicon: PathBuf) -> Self {
        PipelineConfig {
            train,
            test,
            raw,
            lexicon,
            out: PathBuf::from("pipeline-out"),
            scheme: Scheme::Bioes,
            model: ModelKind::Perceptron,
            epochs: 5,
            seed: 0,
            augment: AugmentConfig::default(),
            repair: RepairPolicy::Conll,
            drop_all_o: true,
            brill: BrillConfig::default(),
            brill_scores: vec![2, 3, 4, 5],
        }
    }

    /// Parses `key = value` lines. `#` starts a comment. Relative paths are
    /// resolved against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut paths: [Option<PathBuf>; 4] = Default::default();
        let mut cfg = PipelineConfig::with_paths(
            PathBuf::new(),
            PathBuf::new(),
            PathBuf::new(),
            PathBuf::new(),
        );
        let mut out = None;
        for (n, raw_line) in text.lines().enumerate() {
            let line = raw_line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |message: String| Error::Parse {
                line: n + 1,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| bad(format!("expected `key = value`, got `{line}`")))?;
            let num = |what: &str| bad(format!("`{key}` expects {what}, got `{value}`"));
            match key {
                "train" => paths[0] = Some(base.join(value)),
                "test" => paths[1] = Some(base.join(value)),
                "raw" => paths[2] = Some(base.join(value)),
                "lexicon" => paths[3] = Some(base.join(value)),
                "out" => out = Some(base.join(value)),
                "scheme" => cfg.scheme = value.parse().map_err(|e: Error| bad(e.to_string()))?,
                "model" => cfg.model = value.parse().map_err(|e: Error| bad(e.to_string()))?,
                "repair" => cfg.repair = value.parse().map_err(|e: Error| bad(e.to_string()))?,
                "techniques" => {
                    cfg.augment.techniques =
                        parse_techniques(value).map_err(|e| bad(e.to_string()))?
                }
                "epochs" => cfg.epochs = value.parse().map_err(|_| num("an integer"))?,
                "seed" => cfg.seed = value.parse().map_err(|_| num("an integer"))?,
                "p" => cfg.augment.p = value.parse().map_err(|_| num("a number"))?,
                "copies" => {
                    cfg.augment.copies_per_technique =
                        value.parse().map_err(|_| num("an integer"))?
                }
                "drop_all_o" => cfg.drop_all_o = value.parse().map_err(|_| num("true or false"))?,
                "min_acc" => cfg.brill.min_acc = value.parse().map_err(|_| num("a number"))?,
                "max_rules" => {
                    cfg.brill.max_rules = value.parse().map_err(|_| num("an integer"))?
                }
                "brill_scores" => {
                    cfg.brill_scores = value
                        .split(',')
                        .map(|s| s.trim().parse())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| num("a comma-separated list of integers"))?
                }
                _ => return Err(bad(format!("unknown key `{key}`"))),
            }
        }
        let [train, test, raw, lexicon] = paths;
        let need = |p: Option<PathBuf>, key: &str| {
            p.ok_or_else(|| Error::InvalidArgument(format!("config is missing `{key}`")))
        };
        cfg.train = need(train, "train")?;
        cfg.test = need(test, "test")?;
        cfg.raw = need(raw, "raw")?;
        cfg.lexicon = need(lexicon, "lexicon")?;
        if let Some(out) = out {
            cfg.out = out;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn validate(&self) -> Result<()> {
        for (key, path) in [
            ("train", &self.train),
            ("test", &self.test),
            ("raw", &self.raw),
            ("lexicon", &self.lexicon),
        ] {
            if !path.is_file() {
                return Err(Error::InvalidArgument(format!(
                    "{key} file `{}` does not exist",
                    path.display()
                )));
            }
        }
        if self.epochs == 0 {
            return Err(Error::InvalidArgument("epochs must be positive".into()));
        }
        if self.brill_scores.is_empty() {
            return Err(Error::InvalidArgument("brill_scores is empty".into()));
        }
        self.augment.validate()?;
        self.brill.validate()?;
        for &s in &self.brill_scores {
            BrillConfig {
                min_score: s,
                ..self.brill.clone()
            }
            .validate()?;
        }
        Ok(())
    }

    /// What a run would do, one line per stage.
    pub fn plan(&self) -> Vec<String> {
        let techniques: Vec<String> = self
            .augment
            .techniques
            .iter()
            .map(ToString::to_string)
            .collect();
        vec![
            format!(
                "M0 original data: train {} on {}, score on {}",
                self.model,
                self.train.display(),
                self.test.display()
            ),
            format!("M1 corpus annotation: convert train to {}, retrain, score", self.scheme),
            format!(
                "M2 + data augmentation: {} with p={} copies={} seed={}, retrain, score",
                techniques.join(","),
                self.augment.p,
                self.augment.copies_per_technique,
                self.seed
            ),
            format!(
                "M3 + semi-supervised: tag {} with unigram (M1 data) and the M2 model, consensus{}, retrain, score",
                self.raw.display(),
                if self.drop_all_o { " dropping all-O sentences" } else { "" }
            ),
            format!(
                "M4 + transformation-based: tune min_score over {:?} on train halves, correct M3 test predictions, score",
                self.brill_scores
            ),
            format!("outputs under {}", self.out.display()),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    M0,
    M1,
    M2,
    M3,
    M4,
}

impl Stage {
    pub const ALL: [Stage; 5] = [Stage::M0, Stage::M1, Stage::M2, Stage::M3, Stage::M4];

    pub fn name(self) -> &'static str {
        match self {
            Stage::M0 => "M0",
            Stage::M1 => "M1",
            Stage::M2 => "M2",
            Stage::M3 => "M3",
            Stage::M4 => "M4",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Stage::M0 => "original data",
            Stage::M1 => "corpus annotation",
            Stage::M2 => "+ data augmentation",
            Stage::M3 => "+ semi-supervised",
            Stage::M4 => "+ transformation-based",
        }
    }

    fn dir(self) -> String {
        self.name().to_lowercase()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageResult {
    pub stage: Stage,
    /// Scheme of the stage's training data.
    pub scheme: Scheme,
    /// Tokens in the stage's training data.
    pub size: usize,
    pub report: ScoreReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineReport {
    pub stages: Vec<StageResult>,
    pub tuning: TuneOutcome,
    pub silver_sentences: usize,
}

impl PipelineReport {
    pub fn stage(&self, stage: Stage) -> Option<&StageResult> {
        self.stages.iter().find(|s| s.stage == stage)
    }

    /// Held-out-half F1 before (M3) and after (M4) the chosen rules.
    pub fn heldout_f1(&self) -> (f64, f64) {
        let t = &self.tuning;
        let after = if t.adopted {
            t.f1_by_min_score
                .iter()
                .find(|(s, _)| *s == t.min_score)
                .map_or(t.baseline_f1, |(_, f)| *f)
        } else {
            t.baseline_f1
        };
        (t.baseline_f1, after)
    }

    pub fn summary(&self) -> String {
        let mut out = format!(
            "{:<5}  {:<24}  {:<6}  {:>6}  {:>8}\n",
            "stage", "description", "scheme", "F1", "size"
        );
        for s in &self.stages {
            let _ = writeln!(
                out,
                "{:<5}  {:<24}  {:<6}  {:>6}  {:>8}",
                s.stage.name(),
                s.stage.description(),
                s.scheme.to_string(),
                fmt_pct(s.report.overall.f1),
                s.size
            );
        }
        let (m3, m4) = self.heldout_f1();
        let _ = writeln!(
            out,
            "\nsilver sentences: {}\nbrill: min_score {} ({} rules{})\nheld-out half F1: M3 {} M4 {}",
            self.silver_sentences,
            self.tuning.min_score,
            self.tuning.rules.len(),
            if self.tuning.adopted { "" } else { ", not adopted" },
            fmt_pct(m3),
            fmt_pct(m4)
        );
        for (s, f1) in &self.tuning.f1_by_min_score {
            let _ = writeln!(out, "  min_score {s}: {}", fmt_pct(*f1));
        }
        out
    }
}

fn in_stage<T>(stage: Stage, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Stage {
        stage: stage.name().to_string(),
        source: Box::new(e),
    })
}

struct Outputs {
    root: PathBuf,
}

impl Outputs {
    fn file(&self, stage: Stage, name: &str) -> Result<BufWriter<File>> {
        let dir = self.root.join(stage.dir());
        fs::create_dir_all(&dir)?;
        Ok(BufWriter::new(File::create(dir.join(name))?))
    }

    fn corpus(&self, stage: Stage, name: &str, corpus: &Corpus) -> Result<()> {
        let mut w = self.file(stage, name)?;
        write_conll(corpus, &mut w)?;
        w.flush()?;
        Ok(())
    }

    fn text(&self, stage: Stage, name: &str, text: &str) -> Result<()> {
        let mut w = self.file(stage, name)?;
        w.write_all(text.as_bytes())?;
        w.flush()?;
        Ok(())
    }

    fn model(&self, stage: Stage, model: &Model) -> Result<()> {
        self.text(stage, "model.txt", &model.to_text())
    }

    fn report(&self, stage: Stage, report: &ScoreReport) -> Result<()> {
        self.text(stage, "score.txt", &report.to_table())?;
        self.text(stage, "score.kv", &report.to_key_value())
    }
}

struct Inputs {
    train: Corpus,
    test: Corpus,
    raw: Vec<Vec<String>>,
    lexicon: SynonymLexicon,
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}

fn load_inputs(cfg: &PipelineConfig) -> Result<Inputs> {
    Ok(Inputs {
        train: read_conll(open(&cfg.train)?, None)?,
        test: read_conll(open(&cfg.test)?, None)?,
        raw: read_raw(open(&cfg.raw)?)?,
        lexicon: read_lexicon(open(&cfg.lexicon)?)?,
    })
}

/// Runs all stages. Outputs written before a failure are left in place.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineReport> {
    cfg.validate()?;
    let inputs = in_stage(Stage::M0, load_inputs(cfg))?;
    let out = Outputs {
        root: cfg.out.clone(),
    };
    fs::create_dir_all(&out.root)?;
    let test_surfaces = surfaces_of(&inputs.test);
    let policy = cfg.repair;

    // Train, tag the test set, repair, score, write everything.
    let evaluate = |stage: Stage, train: &Corpus| -> Result<(Model, Corpus, StageResult)> {
        let model = Model::train(cfg.model, train, cfg.epochs, cfg.seed)?;
        out.model(stage, &model)?;
        let raw_pred = tag_corpus(&model, &test_surfaces);
        let pred = convert_corpus(&raw_pred, raw_pred.scheme, policy)?;
        out.corpus(stage, "test.pred.conll", &pred)?;
        let report = score(&inputs.test, &pred, policy)?;
        out.report(stage, &report)?;
        let result = StageResult {
            stage,
            scheme: train.scheme,
            size: train.token_count(),
            report,
        };
        Ok((model, raw_pred, result))
    };

    let mut stages = Vec::with_capacity(5);

    let (_, _, m0) = in_stage(Stage::M0, evaluate(Stage::M0, &inputs.train))?;
    stages.push(m0);

    let working = in_stage(
        Stage::M1,
        (|| {
            let working = convert_corpus(&inputs.train, cfg.scheme, policy)?;
            out.corpus(Stage::M1, "train.conll", &working)?;
            Ok(working)
        })(),
    )?;
    let (_, _, m1) = in_stage(Stage::M1, evaluate(Stage::M1, &working))?;
    stages.push(m1);

    let augmented = in_stage(
        Stage::M2,
        (|| {
            let dist = build_label_token_distribution(&working);
            let aug_cfg = AugmentConfig {
                seed: cfg.seed,
                ..cfg.augment.clone()
            };
            let augmented = augment_corpus(&working, &aug_cfg, &inputs.lexicon, &dist)?;
            out.corpus(Stage::M2, "train.conll", &augmented)?;
            Ok(augmented)
        })(),
    )?;
    let (m2_model, _, m2) = in_stage(Stage::M2, evaluate(Stage::M2, &augmented))?;
    stages.push(m2);

    let (train3, silver_sentences) = in_stage(
        Stage::M3,
        (|| {
            let unigram = Model::train(ModelKind::Unigram, &working, cfg.epochs, cfg.seed)?;
            let annotations = [
                tag_corpus(&unigram, &inputs.raw),
                tag_corpus(&m2_model, &inputs.raw),
            ];
            out.corpus(Stage::M3, "raw.unigram.conll", &annotations[0])?;
            out.corpus(Stage::M3, "raw.m2.conll", &annotations[1])?;
            let consensus = ConsensusConfig {
                scheme: cfg.scheme,
                policy,
                drop_all_o: cfg.drop_all_o,
            };
            let silver = build_silver_corpus(&inputs.raw, &annotations, &consensus)?;
            out.corpus(Stage::M3, "silver.conll", &silver)?;
            let n = silver.len();
            let train3 = augmented.clone().concat(silver);
            out.corpus(Stage::M3, "train.conll", &train3)?;
            Ok((train3, n))
        })(),
    )?;
    let (m3_model, m3_raw_pred, m3) = in_stage(Stage::M3, evaluate(Stage::M3, &train3))?;
    let m3_size = m3.size;
    stages.push(m3);

    let (tuning, m4) = in_stage(
        Stage::M4,
        (|| {
            let (learn_gold, eval_gold) = halves(&working);
            let learn_init = tag_corpus(&m3_model, &surfaces_of(&learn_gold));
            let eval_init = tag_corpus(&m3_model, &surfaces_of(&eval_gold));
            let tuning = tune_min_score(
                &LearningSet::new(&learn_init, &learn_gold)?,
                &LearningSet::new(&eval_init, &eval_gold)?,
                &cfg.brill_scores,
                &cfg.brill,
                policy,
            )?;
            let mut rules = Vec::new();
            write_rules(&tuning.rules, &mut rules)?;
            out.text(Stage::M4, "rules.txt", &String::from_utf8_lossy(&rules))?;
            let corrected = apply_rules_corpus(&m3_raw_pred, &tuning.rules);
            let pred = convert_corpus(&corrected, corrected.scheme, policy)?;
            out.corpus(Stage::M4, "test.pred.conll", &pred)?;
            let report = score(&inputs.test, &pred, policy)?;
            out.report(Stage::M4, &report)?;
            let result = StageResult {
                stage: Stage::M4,
                scheme: cfg.scheme,
                size: m3_size,
                report,
            };
            Ok((tuning, result))
        })(),
    )?;
    stages.push(m4);

    let report = PipelineReport {
        stages,
        tuning,
        silver_sentences,
    };
    fs::write(out.root.join("summary.txt"), report.summary())?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_config() {
        let text =
            "# comment\ntrain = a.conll\ntest = b.conll # trailing\nraw = r.txt\nlexicon = l.tsv\n\
                    scheme = BIO\nbrill_scores = 3, 4\np = 0.5\ntechniques = lwtr,sis\n";
        let cfg = PipelineConfig::parse(text, Path::new("/data")).unwrap();
        assert_eq!(cfg.train, PathBuf::from("/data/a.conll"));
        assert_eq!(cfg.scheme, Scheme::Bio);
        assert_eq!(cfg.brill_scores, [3, 4]);
        assert_eq!(cfg.augment.p, 0.5);
        assert_eq!(cfg.augment.techniques.len(), 2);
        assert_eq!(cfg.out, PathBuf::from("pipeline-out"));
    }

    #[test]
    fn rejects_bad_config() {
        let base = Path::new(".");
        assert!(matches!(
            PipelineConfig::parse("train = a\nfoo = 1\n", base),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(PipelineConfig::parse("train = a\n", base).is_err());
        assert!(matches!(
            PipelineConfig::parse("epochs = x\n", base),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn plan_has_every_stage() {
        let cfg = PipelineConfig::with_paths("a".into(), "b".into(), "c".into(), "d".into());
        let plan = cfg.plan();
        for stage in Stage::ALL {
            assert!(plan.iter().any(|l| l.starts_with(stage.name())));
        }
    }
}
