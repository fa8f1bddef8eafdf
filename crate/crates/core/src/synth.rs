//! Deterministic synthetic clinical-style corpus.
//!
//! Sentences are drawn from a small set of templates whose slots are filled
//! with entity phrases for six labels. Phrase choice is Zipf-weighted and
//! each label mixes common clinical terms with generated pseudo-terms, so a
//! held-out split contains unseen words and some surfaces are ambiguous
//! between labels. Used for the bundled example data, the acceptance suite
//! and the benchmarks.

use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::augment::{write_lexicon, SynonymLexicon};
use crate::corpus::{write_conll, write_raw, Corpus, EntitySpan, Scheme, Sentence};
use crate::error::Result;
use crate::rng::RandomStream;
use crate::schemes::encode_tags;

pub const LABELS: [&str; 6] = [
    "clinical_dept",
    "evidential",
    "occurrence",
    "problem",
    "test",
    "treatment",
];

const PROBLEM: &[&str] = &[
    "pain",
    "chest pain",
    "fever",
    "nausea",
    "shortness of breath",
    "hypertension",
    "diabetes",
    "pneumonia",
    "infection",
    "bleeding",
    "edema",
    "cough",
    "headache",
    "anemia",
    "sepsis",
    "abdominal pain",
    "atrial fibrillation",
    "renal failure",
    "rash",
    "fracture",
    "vomiting",
    "dizziness",
    "hypotension",
    "a mass",
    "weakness",
];
const TEST: &[&str] = &[
    "CT",
    "chest x-ray",
    "MRI",
    "blood cultures",
    "white count",
    "hemoglobin",
    "EKG",
    "echocardiogram",
    "urinalysis",
    "biopsy",
    "blood pressure",
    "creatinine",
    "labs",
    "temperature",
    "ultrasound",
    "heart rate",
    "CT scan",
];
const TREATMENT: &[&str] = &[
    "aspirin",
    "heparin",
    "antibiotics",
    "surgery",
    "insulin",
    "lasix",
    "vancomycin",
    "intubation",
    "dialysis",
    "oxygen",
    "morphine",
    "tylenol",
    "pain management",
    "physical therapy",
    "transfusion",
    "IV fluids",
    "coumadin",
];
const OCCURRENCE: &[&str] = &[
    "admitted",
    "discharged",
    "transferred",
    "presented",
    "readmission",
    "follow-up",
    "consultation",
    "arrival",
    "visit",
    "seen",
];
const EVIDENTIAL: &[&str] = &[
    "complained of",
    "reported",
    "revealed",
    "showed",
    "denied",
    "noted",
    "stated",
    "found",
];
const CLINICAL_DEPT: &[&str] = &[
    "ICU",
    "emergency department",
    "cardiology",
    "surgery service",
    "medicine floor",
    "neurology",
    "rehab",
    "oncology clinic",
    "MICU",
];

const TEMPLATES: &[&str] = &[
    "The patient was {occurrence} to the {clinical_dept} with {problem} .",
    "She {evidential} {problem} and {problem} .",
    "{test} {evidential} {problem} .",
    "He was started on {treatment} for {problem} .",
    "A {test} was obtained and {evidential} no {problem} .",
    "Patient {evidential} {problem} after {treatment} .",
    "{treatment} was given in the {clinical_dept} .",
    "On {date} the patient was {occurrence} from the {clinical_dept} .",
    "Her {test} was {number} .",
    "Plan is {treatment} and {treatment} with repeat {test} .",
    "No evidence of {problem} on {test} .",
    "The patient had a {occurrence} with {clinical_dept} for {problem} .",
    "He {evidential} that the {problem} improved with {treatment} .",
    "Family history of {problem} .",
    "Discharge medications include {treatment} , {treatment} and {treatment} .",
    "Vital signs stable .",
    "Patient tolerated the procedure well .",
    "She will {occurrence} in two weeks .",
    "{test} on {date} was {number} and {problem} resolved .",
    "Pain was controlled with {treatment} .",
    "Seen by Dr. {name} in the {clinical_dept} .",
    "Dr. {name} {evidential} {problem} .",
    "Continue {treatment} per {name} .",
    "Notable for {any} and {any} .",
    "History of {problem} treated with {treatment} .",
    "He received {treatment} and {test} on {date} .",
    "Her {problem} was followed by {name} at {clinical_dept} .",
    "Labs {evidential} {any} .",
];

const ONSETS: &[&str] = &[
    "b", "c", "d", "f", "g", "h", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "cl",
    "pr", "st", "tr",
];
const VOWELS: &[&str] = &["a", "e", "i", "o", "u", "ia", "ou"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub train_sentences: usize,
    pub test_sentences: usize,
    pub raw_sentences: usize,
    pub lexicon_entries: usize,
    /// Generated pseudo-terms added to each label's phrase list.
    pub pseudo_terms: usize,
    /// Per-entity probability of an annotation slip in the gold tags:
    /// dropped, relabeled or given a wrong boundary.
    pub noise: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 2012,
            train_sentences: 2000,
            test_sentences: 500,
            raw_sentences: 1000,
            lexicon_entries: 500,
            pseudo_terms: 150,
            noise: 0.08,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthData {
    pub train: Corpus,
    pub test: Corpus,
    pub raw: Vec<Vec<String>>,
    pub lexicon: SynonymLexicon,
}

fn pseudo_word(rng: &mut RandomStream, syllables: usize) -> String {
    (0..syllables)
        .map(|_| {
            let onset = ONSETS[rng.below(ONSETS.len() as u64) as usize];
            let vowel = VOWELS[rng.below(VOWELS.len() as u64) as usize];
            format!("{onset}{vowel}")
        })
        .collect()
}

fn pseudo_term(label: &str, rng: &mut RandomStream) -> String {
    let syllables = 2 + rng.below(2) as usize;
    let stem = pseudo_word(rng, syllables);
    // Bare stems carry no suffix cue.
    if rng.below(5) < 2 {
        return stem;
    }
    match label {
        "problem" => match rng.below(3) {
            0 => format!("{stem}itis"),
            1 => format!("{stem} syndrome"),
            _ => format!("{stem}osis"),
        },
        "treatment" => match rng.below(3) {
            0 => format!("{stem}mab"),
            1 => format!("{stem}cillin"),
            _ => format!("{stem}pril"),
        },
        "test" => match rng.below(2) {
            0 => format!("{stem} level"),
            _ => format!("{stem} panel"),
        },
        "clinical_dept" => format!("{stem} clinic"),
        _ => stem,
    }
}

struct Vocabulary {
    phrases: Vec<(String, Vec<String>)>,
    names: Vec<String>,
}

impl Vocabulary {
    fn new(cfg: &SynthConfig) -> Self {
        let mut rng = RandomStream::derive(cfg.seed, &[0x766f_6361]);
        let base: [(&str, &[&str]); 6] = [
            ("clinical_dept", CLINICAL_DEPT),
            ("evidential", EVIDENTIAL),
            ("occurrence", OCCURRENCE),
            ("problem", PROBLEM),
            ("test", TEST),
            ("treatment", TREATMENT),
        ];
        let phrases = base
            .iter()
            .map(|(label, list)| {
                let mut all: Vec<String> = list.iter().map(|s| s.to_string()).collect();
                if !matches!(*label, "evidential" | "occurrence") {
                    for _ in 0..cfg.pseudo_terms {
                        all.push(pseudo_term(label, &mut rng));
                    }
                }
                (label.to_string(), all)
            })
            .collect();
        let names = (0..cfg.pseudo_terms)
            .map(|_| {
                let syllables = 2 + rng.below(2) as usize;
                let mut name = pseudo_word(&mut rng, syllables);
                name[..1].make_ascii_uppercase();
                name
            })
            .collect();
        Vocabulary { phrases, names }
    }

    fn list(&self, label: &str) -> &[String] {
        if label == "name" {
            return &self.names;
        }
        &self
            .phrases
            .iter()
            .find(|(l, _)| l == label)
            .expect("known label")
            .1
    }

    /// Zipf-weighted pick: weight of rank r is 1/(r+1).
    fn pick(&self, label: &str, rng: &mut RandomStream) -> &str {
        let list = self.list(label);
        const SCALE: f64 = 1_000_000.0;
        let weights: Vec<u64> = (0..list.len())
            .map(|r| (SCALE / (r as f64 + 1.0)) as u64)
            .collect();
        let total: u64 = weights.iter().sum();
        let mut target = rng.below(total);
        for (w, phrase) in weights.iter().zip(list) {
            if target < *w {
                return phrase;
            }
            target -= w;
        }
        list.last().expect("non-empty")
    }

    fn words(&self) -> BTreeSet<String> {
        let mut words: BTreeSet<String> = self
            .phrases
            .iter()
            .flat_map(|(_, list)| list.iter())
            .flat_map(|p| p.split_whitespace())
            .chain(self.names.iter().map(String::as_str))
            .map(str::to_lowercase)
            .collect();
        for template in TEMPLATES {
            for w in template.split_whitespace() {
                if !w.starts_with('{') && w.chars().all(char::is_alphabetic) {
                    words.insert(w.to_lowercase());
                }
            }
        }
        words
    }
}

const AMBIGUOUS: [&str; 3] = ["problem", "test", "treatment"];

fn sentence(vocab: &Vocabulary, noise: f64, rng: &mut RandomStream) -> Sentence {
    let template = TEMPLATES[rng.below(TEMPLATES.len() as u64) as usize];
    let mut surfaces: Vec<String> = Vec::new();
    let mut spans = Vec::new();
    for piece in template.split_whitespace() {
        match piece.strip_prefix('{').and_then(|p| p.strip_suffix('}')) {
            Some("number") => {
                surfaces.push(format!("{}.{}", 1 + rng.below(200), rng.below(10)));
            }
            Some("date") => {
                surfaces.push(format!("{:02}/{:02}", 1 + rng.below(12), 1 + rng.below(28)));
            }
            Some("name") => surfaces.push(vocab.pick("name", rng).to_owned()),
            Some(slot) => {
                let label = match slot {
                    "any" => AMBIGUOUS[rng.below(3) as usize],
                    _ => slot,
                };
                let start = surfaces.len();
                surfaces.extend(vocab.pick(label, rng).split_whitespace().map(str::to_owned));
                spans.push(EntitySpan::new(start, surfaces.len(), label));
            }
            None => surfaces.push(piece.to_owned()),
        }
    }
    let mut kept: Vec<EntitySpan> = Vec::with_capacity(spans.len());
    for span in spans {
        let free_from = kept.last().map_or(0, |s| s.end);
        kept.extend(annotation_slip(span, &surfaces, free_from, noise, rng));
    }
    let tags =
        encode_tags(&kept, surfaces.len(), Scheme::Bio).expect("template spans are disjoint");
    Sentence::from_parts(&surfaces, &tags)
}

/// Gold annotation is imperfect: with probability `noise` the span is
/// dropped, relabeled, or loses or gains a boundary token. Tokens before
/// `free_from` belong to an earlier span and are never absorbed.
fn annotation_slip(
    mut span: EntitySpan,
    surfaces: &[String],
    free_from: usize,
    noise: f64,
    rng: &mut RandomStream,
) -> Option<EntitySpan> {
    if !rng.bernoulli(noise) {
        return Some(span);
    }
    match rng.below(4) {
        0 => return None,
        1 => span.label = AMBIGUOUS[rng.below(3) as usize].to_owned(),
        2 if span.len() > 1 => span.start += 1,
        _ if span.start > free_from
            && surfaces[span.start - 1].chars().all(char::is_alphabetic) =>
        {
            span.start -= 1
        }
        _ => {}
    }
    Some(span)
}

fn lexicon(vocab: &Vocabulary, cfg: &SynthConfig) -> SynonymLexicon {
    use rand::seq::SliceRandom;

    let mut rng = RandomStream::derive(cfg.seed, &[0x6c65_7869]);
    let mut heads: Vec<String> = vocab.words().into_iter().collect();
    heads.shuffle(&mut rng);
    while heads.len() < cfg.lexicon_entries {
        heads.push(pseudo_word(&mut rng, 3));
    }
    heads.truncate(cfg.lexicon_entries);
    heads.sort();
    let mut lexicon = SynonymLexicon::new();
    for head in &heads {
        let n = 1 + rng.below(3);
        for _ in 0..n {
            let phrase = if rng.below(5) == 0 {
                format!("{} {}", pseudo_word(&mut rng, 2), pseudo_word(&mut rng, 2))
            } else {
                let syllables = 2 + rng.below(2) as usize;
                pseudo_word(&mut rng, syllables)
            };
            lexicon
                .insert(head, &phrase)
                .expect("generated entries are well-formed");
        }
    }
    lexicon
}

/// Generates the train/test/raw splits (BIO) and a synonym lexicon.
pub fn generate(cfg: &SynthConfig) -> SynthData {
    let vocab = Vocabulary::new(cfg);
    let split = |id: u64, n: usize| -> Vec<Sentence> {
        (0..n)
            .map(|i| {
                let mut rng = RandomStream::derive(cfg.seed, &[id, i as u64]);
                sentence(&vocab, cfg.noise, &mut rng)
            })
            .collect()
    };
    let corpus = |sentences| {
        let mut c = Corpus::new(sentences, Scheme::Bio);
        c.label_set.extend(LABELS.iter().map(|l| l.to_string()));
        c
    };
    let train = corpus(split(1, cfg.train_sentences));
    let test = corpus(split(2, cfg.test_sentences));
    let raw = split(3, cfg.raw_sentences)
        .into_iter()
        .map(|s| s.tokens.into_iter().map(|t| t.surface).collect())
        .collect();
    SynthData {
        train,
        test,
        raw,
        lexicon: lexicon(&vocab, cfg),
    }
}

/// Config for the bundled files, paths relative to the bundle directory.
pub const PIPELINE_CONF: &str = "\
# Pipeline over the bundled synthetic corpus. Paths are relative to this file.
train = train.conll
test = test.conll
raw = raw.txt
lexicon = synonyms.tsv
out = ../pipeline-out

scheme = BIOES
model = perceptron
epochs = 5
seed = 7

# augmentation
techniques = lwtr,sr,sis
p = 0.3
copies = 1

# consensus
repair = conll
drop_all_o = true

# transformation rules
min_acc = 0.99
max_rules = 250
brill_scores = 2,3,4,5
";

/// Writes `train.conll`, `test.conll`, `raw.txt`, `synonyms.tsv` and
/// `pipeline.conf` into `dir`.
pub fn write_bundle(data: &SynthData, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let create = |name: &str| -> Result<BufWriter<File>> {
        Ok(BufWriter::new(File::create(dir.join(name))?))
    };
    let mut w = create("train.conll")?;
    write_conll(&data.train, &mut w)?;
    w.flush()?;
    let mut w = create("test.conll")?;
    write_conll(&data.test, &mut w)?;
    w.flush()?;
    let mut w = create("raw.txt")?;
    write_raw(&data.raw, &mut w)?;
    w.flush()?;
    let mut w = create("synonyms.tsv")?;
    write_lexicon(&data.lexicon, &mut w)?;
    w.flush()?;
    fs::write(dir.join("pipeline.conf"), PIPELINE_CONF)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_and_validity() {
        let data = generate(&SynthConfig::default());
        assert_eq!(data.train.len(), 2000);
        assert_eq!(data.test.len(), 500);
        assert_eq!(data.raw.len(), 1000);
        assert_eq!(data.lexicon.len(), 500);
        assert!(data.train.validate().is_empty());
        assert_eq!(data.train.label_set.len(), 6);
    }

    #[test]
    fn deterministic() {
        let cfg = SynthConfig {
            train_sentences: 50,
            ..SynthConfig::default()
        };
        assert_eq!(generate(&cfg).train, generate(&cfg).train);
    }
}
