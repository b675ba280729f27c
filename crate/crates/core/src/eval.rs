//! Synthetic scenario suites, per-backend precision at the NLP and I/O stages,
//! a retraining delta, and the comparison table.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cbr::{infer, Case, CaseBase, Context, InferConfig, Prior};
use crate::decode::{DecodeConfig, Decoder};
use crate::error::{Error, Result};
use crate::nets::{balanced_key, encode_truncated, Associator, AssociatorConfig, Backend, TrainedAssociator, TrainingItem};
use crate::ngram::{train_ngram, NGramModel};
use crate::output::Score;
use crate::phoneme::{apply_noise, load_lexicon, text_to_phonemes, Lexicon, NoiseSpec, Phoneme, PhonemeSequence, INVENTORY};
use crate::seed;

const VOWELS: [&str; 15] = [
    "AA", "AE", "AH", "AO", "AW", "AY", "EH", "ER", "EY", "IH", "IY", "OW", "OY", "UH", "UW",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SuiteConfig {
    pub rng_seed: u64,
    pub words: usize,
    pub cases: usize,
    pub utterances: usize,
    pub min_word_phonemes: usize,
    pub max_word_phonemes: usize,
    pub max_phrase_words: usize,
    pub key_bits: usize,
    pub slots: usize,
    pub noise: NoiseSpec,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            rng_seed: 2024,
            words: 14,
            cases: 10,
            utterances: 40,
            min_word_phonemes: 2,
            max_word_phonemes: 5,
            max_phrase_words: 3,
            key_bits: 32,
            slots: 20,
            noise: NoiseSpec {
                substitute_prob: 0.1,
                delete_prob: 0.05,
                insert_prob: 0.05,
                rng_seed: 2024,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Utterance {
    pub text: String,
    pub expected_words: Vec<String>,
    pub expected_case: String,
}

/// Lexicon, case base and labelled utterances. Synthetic: no standard
/// published case base exists for this task.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioSuite {
    pub rng_seed: u64,
    pub slots: usize,
    pub lexicon: Lexicon,
    pub case_base: CaseBase,
    pub utterances: Vec<Utterance>,
    pub noise: NoiseSpec,
}

#[derive(Serialize, Deserialize)]
struct SuiteFile {
    rng_seed: u64,
    slots: usize,
    noise: NoiseSpec,
    lexicon: Vec<String>,
    cases: Vec<Case>,
    utterances: Vec<Utterance>,
}

impl ScenarioSuite {
    pub fn new(
        rng_seed: u64,
        slots: usize,
        lexicon: Lexicon,
        case_base: CaseBase,
        utterances: Vec<Utterance>,
        noise: NoiseSpec,
    ) -> Result<Self> {
        noise.validate()?;
        if slots == 0 {
            return Err(Error::Config("slots must be at least 1".into()));
        }
        for u in &utterances {
            if let Some(w) = u.expected_words.iter().find(|w| !lexicon.contains(w)) {
                return Err(Error::Config(format!("expected word `{w}` is not in the lexicon")));
            }
            if case_base.get(&u.expected_case).is_none() {
                return Err(Error::Config(format!("expected case `{}` is not in the case base", u.expected_case)));
            }
        }
        Ok(Self {
            rng_seed,
            slots,
            lexicon,
            case_base,
            utterances,
            noise,
        })
    }

    pub fn to_json(&self) -> String {
        let file = SuiteFile {
            rng_seed: self.rng_seed,
            slots: self.slots,
            noise: self.noise,
            lexicon: self.lexicon.to_text().lines().map(str::to_string).collect(),
            cases: self.case_base.cases().to_vec(),
            utterances: self.utterances.clone(),
        };
        serde_json::to_string_pretty(&file).expect("suite serializes") + "\n"
    }

    pub fn from_json(source: &str) -> Result<Self> {
        let file: SuiteFile = serde_json::from_str(source)?;
        Self::new(
            file.rng_seed,
            file.slots,
            load_lexicon(&file.lexicon.join("\n"))?,
            CaseBase::new(file.cases)?,
            file.utterances,
            file.noise,
        )
    }

    /// Distinct request phrases in case-base order.
    pub fn phrases(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        self.case_base
            .cases()
            .iter()
            .map(|c| c.request_words.join(" "))
            .filter(|p| seen.insert(p.clone()))
            .collect()
    }
}

fn synthetic_word(rng: &mut impl Rng, min: usize, max: usize) -> Vec<Phoneme> {
    let consonants: Vec<&str> = INVENTORY.iter().copied().filter(|s| !VOWELS.contains(s)).collect();
    let len = rng.random_range(min..=max);
    let start_with_vowel = rng.random::<bool>();
    (0..len)
        .map(|i| {
            let pool: &[&str] = if (i % 2 == 0) == start_with_vowel { &VOWELS } else { &consonants };
            Phoneme::from_symbol(pool[rng.random_range(0..pool.len())]).expect("inventory symbol")
        })
        .collect()
}

/// Deterministic synthetic suite: invented words, one case per distinct
/// request phrase, and utterances cycling through every case before
/// sampling at random.
pub fn generate_suite(config: &SuiteConfig) -> Result<ScenarioSuite> {
    if config.words < 2 {
        return Err(Error::Config("lexicon size must be at least 2".into()));
    }
    if config.utterances == 0 {
        return Err(Error::Config("utterance count must be at least 1".into()));
    }
    if config.cases == 0 || config.max_phrase_words == 0 || config.key_bits < 2 {
        return Err(Error::Config("need at least one case, one word per phrase and two key bits".into()));
    }
    if config.min_word_phonemes == 0 || config.min_word_phonemes > config.max_word_phonemes {
        return Err(Error::Config("invalid word length range".into()));
    }
    let mut rng = seed::rng(config.rng_seed);
    let mut spellings = BTreeSet::new();
    let mut prons = BTreeSet::new();
    let mut entries = Vec::new();
    let mut words = Vec::new();
    let mut attempts = 0;
    while words.len() < config.words {
        attempts += 1;
        if attempts > 100 * config.words {
            return Err(Error::Config("could not draw enough distinct words".into()));
        }
        let pron = synthetic_word(&mut rng, config.min_word_phonemes, config.max_word_phonemes);
        let spelling: String = pron.iter().map(|p| p.symbol().to_lowercase()).collect();
        if spellings.contains(&spelling) || prons.contains(&pron) {
            continue;
        }
        spellings.insert(spelling.clone());
        prons.insert(pron.clone());
        entries.push((spelling.clone(), pron, 1.0));
        words.push(spelling);
    }
    let lexicon = Lexicon::from_entries(entries)?;

    let mut phrases: Vec<Vec<String>> = Vec::new();
    let mut keys: Vec<crate::nets::BipolarPattern> = Vec::new();
    attempts = 0;
    while phrases.len() < config.cases {
        attempts += 1;
        if attempts > 100 * config.cases {
            return Err(Error::Config("could not draw enough distinct request phrases".into()));
        }
        let n = rng.random_range(1..=config.max_phrase_words);
        let phrase: Vec<String> = (0..n).map(|_| words[rng.random_range(0..words.len())].clone()).collect();
        let seq = text_to_phonemes(&phrase.join(" "), &lexicon)?;
        if seq.len() > config.slots || phrases.contains(&phrase) {
            continue;
        }
        let key = balanced_key(config.key_bits, seed::derive(config.rng_seed, 1000 + phrases.len() as u64));
        if keys.contains(&key) {
            continue;
        }
        keys.push(key);
        phrases.push(phrase);
    }
    let cases: Vec<Case> = phrases
        .iter()
        .zip(keys)
        .enumerate()
        .map(|(i, (phrase, key))| Case {
            id: format!("c{i:02}"),
            request_words: phrase.clone(),
            request_pattern: key,
            response_template: format!("response {i} to {{request}}"),
            pragmatic_tags: [("request".to_string(), phrase.join(" "))].into(),
        })
        .collect();
    let utterances = (0..config.utterances)
        .map(|u| {
            let c = if u < cases.len() { u } else { rng.random_range(0..cases.len()) };
            Utterance {
                text: cases[c].request_words.join(" "),
                expected_words: cases[c].request_words.clone(),
                expected_case: cases[c].id.clone(),
            }
        })
        .collect();
    ScenarioSuite::new(
        config.rng_seed,
        config.slots,
        lexicon,
        CaseBase::new(cases)?,
        utterances,
        config.noise,
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub lm_order: usize,
    pub lm_smoothing: f64,
    pub decode: DecodeConfig,
    pub assoc: AssociatorConfig,
    pub infer: InferConfig,
    /// Number of noise realizations per utterance.
    pub noise_seeds: usize,
    pub holdout_fraction: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            lm_order: 3,
            lm_smoothing: 1.0,
            decode: DecodeConfig::default(),
            assoc: AssociatorConfig::default(),
            infer: InferConfig::default(),
            noise_seeds: 5,
            holdout_fraction: 0.2,
        }
    }
}

/// Networks for one backend: a lexical memory keyed by phrase and a
/// translator keyed by case id.
struct BackendModels {
    lexical: TrainedAssociator,
    translator: TrainedAssociator,
}

/// Everything trained once per suite (or per training split); measurements
/// vary only the noise.
pub struct Evaluator<'s> {
    suite: &'s ScenarioSuite,
    config: EvalConfig,
    model: NGramModel,
    backends: BTreeMap<Backend, BackendModels>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub correct: usize,
    pub total: usize,
}

impl Tally {
    pub fn precision(self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.correct as f64 / self.total as f64
        }
    }

    fn add(&mut self, hit: bool) {
        self.total += 1;
        self.correct += usize::from(hit);
    }
}

impl<'s> Evaluator<'s> {
    pub fn new(suite: &'s ScenarioSuite, config: EvalConfig) -> Result<Self> {
        let ids: Vec<&str> = suite.case_base.cases().iter().map(|c| c.id.as_str()).collect();
        Self::for_cases(suite, config, &ids)
    }

    /// Train only on the request phrases of the listed cases.
    pub fn for_cases(suite: &'s ScenarioSuite, config: EvalConfig, case_ids: &[&str]) -> Result<Self> {
        let cases: Vec<&Case> = suite
            .case_base
            .cases()
            .iter()
            .filter(|c| case_ids.contains(&c.id.as_str()))
            .collect();
        if cases.is_empty() {
            return Err(Error::Config("no training cases".into()));
        }
        let mut phrases: Vec<String> = Vec::new();
        for c in &cases {
            let p = c.request_words.join(" ");
            if !phrases.contains(&p) {
                phrases.push(p);
            }
        }
        let clean: Vec<PhonemeSequence> = phrases
            .iter()
            .map(|p| text_to_phonemes(p, &suite.lexicon))
            .collect::<Result<_>>()?;
        let model = train_ngram(&clean, config.lm_order, config.lm_smoothing)?;
        let key_bits = suite.case_base.dimension();
        let lexical_items: Vec<TrainingItem> = phrases
            .iter()
            .zip(&clean)
            .map(|(p, seq)| TrainingItem {
                input: encode_truncated(seq, suite.slots),
                label: p.clone(),
                target: balanced_key(key_bits.max(2), seed::derive(config.assoc.rng_seed, seed::mix64(fnv(p)))),
            })
            .collect();
        let translator_items: Vec<TrainingItem> = cases
            .iter()
            .map(|c| {
                let seq = text_to_phonemes(&c.request_words.join(" "), &suite.lexicon)?;
                Ok(TrainingItem {
                    input: encode_truncated(&seq, suite.slots),
                    label: c.id.clone(),
                    target: c.request_pattern.clone(),
                })
            })
            .collect::<Result<_>>()?;
        let mut backends = BTreeMap::new();
        for backend in Backend::ALL {
            let assoc = Associator::new(backend, config.assoc.clone());
            backends.insert(
                backend,
                BackendModels {
                    lexical: assoc.train(&lexical_items)?,
                    translator: assoc.train(&translator_items)?,
                },
            );
        }
        Ok(Self {
            suite,
            config,
            model,
            backends,
        })
    }

    pub fn model(&self) -> &NGramModel {
        &self.model
    }

    fn noisy(&self, index: usize, noise: &NoiseSpec, noise_seed: usize) -> Result<PhonemeSequence> {
        let u = &self.suite.utterances[index];
        let clean = text_to_phonemes(&u.text, &self.suite.lexicon)?;
        let stream = seed::derive(noise.rng_seed, noise_seed as u64);
        Ok(apply_noise(&clean, &noise.with_seed(seed::derive(stream, index as u64))))
    }

    fn check(&self, noise: &NoiseSpec) -> Result<()> {
        noise.validate()?;
        if self.suite.utterances.is_empty() {
            return Err(Error::Config("suite has no utterances".into()));
        }
        if self.config.noise_seeds == 0 {
            return Err(Error::Config("need at least one noise seed".into()));
        }
        Ok(())
    }

    /// Backend-assisted decoding: the lexical memory maps the noisy encoding
    /// to its best stored phrase, whose pronunciation is then decoded.
    pub fn nlp_tally(&self, backend: Backend, noise: &NoiseSpec, indices: Option<&[usize]>) -> Result<Tally> {
        self.check(noise)?;
        let decoder = Decoder::new(&self.suite.lexicon, &self.model, self.config.decode)?;
        let lexical = &self.backends[&backend].lexical;
        let all: Vec<usize> = (0..self.suite.utterances.len()).collect();
        let mut tally = Tally::default();
        for s in 0..self.config.noise_seeds {
            for &i in indices.unwrap_or(&all) {
                let noisy = self.noisy(i, noise, s)?;
                let assoc_seed = seed::derive(self.config.infer.rng_seed, (s * 100_003 + i) as u64);
                let association = lexical.associate(&encode_truncated(&noisy, self.suite.slots), assoc_seed)?;
                let phrase = &association.readout.top().candidate;
                let cleaned = text_to_phonemes(phrase, &self.suite.lexicon)?;
                let hit = decoder
                    .decode(&cleaned, 1)
                    .is_ok_and(|r| r.words == self.suite.utterances[i].expected_words);
                tally.add(hit);
            }
        }
        Ok(tally)
    }

    /// Full pipeline: decode → canonical encoding → translator → inference.
    pub fn io_tally(&self, backend: Backend, noise: &NoiseSpec, indices: Option<&[usize]>) -> Result<Tally> {
        self.check(noise)?;
        let decoder = Decoder::new(&self.suite.lexicon, &self.model, self.config.decode)?;
        let translator = &self.backends[&backend].translator;
        let all: Vec<usize> = (0..self.suite.utterances.len()).collect();
        let mut tally = Tally::default();
        for s in 0..self.config.noise_seeds {
            for &i in indices.unwrap_or(&all) {
                let noisy = self.noisy(i, noise, s)?;
                let chosen = self.run_pipeline(&decoder, translator, &noisy, seed::derive(self.config.infer.rng_seed, (s * 100_003 + i) as u64));
                tally.add(chosen.as_deref() == Some(self.suite.utterances[i].expected_case.as_str()));
            }
        }
        Ok(tally)
    }

    fn run_pipeline(
        &self,
        decoder: &Decoder<'_>,
        translator: &TrainedAssociator,
        noisy: &PhonemeSequence,
        rng_seed: u64,
    ) -> Option<String> {
        let decoded = decoder.decode(noisy, 1).ok()?;
        let canonical = text_to_phonemes(&decoded.words.join(" "), &self.suite.lexicon).ok()?;
        let pattern = encode_truncated(&canonical, self.suite.slots);
        let config = InferConfig {
            rng_seed,
            ..self.config.infer.clone()
        };
        infer(&self.suite.case_base, translator, &pattern, &Context::new(), &Prior::new(), &config)
            .ok()?
            .case_id
    }
}

fn fnv(s: &str) -> u64 {
    s.bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3))
}

pub fn measure_nlp_precision(evaluator: &Evaluator<'_>, backend: Backend, noise: &NoiseSpec) -> Result<f64> {
    Ok(evaluator.nlp_tally(backend, noise, None)?.precision())
}

pub fn measure_io_precision(evaluator: &Evaluator<'_>, backend: Backend, noise: &NoiseSpec) -> Result<f64> {
    Ok(evaluator.io_tally(backend, noise, None)?.precision())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub backend: Backend,
    pub nlp_precision: f64,
    pub io_precision: f64,
    pub adaptation_delta: f64,
    pub nlp: Tally,
    pub io: Tally,
    pub holdout_before: Tally,
    pub holdout_after: Tally,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrecisionReport {
    pub suite_seed: u64,
    pub utterances: usize,
    pub noise_seeds: usize,
    pub holdout_cases: Vec<String>,
    pub rows: Vec<ReportRow>,
}

/// Seeded choice of held-out cases, at least one.
pub fn holdout_cases(suite: &ScenarioSuite, fraction: f64) -> Vec<String> {
    let mut ids: Vec<String> = suite.case_base.cases().iter().map(|c| c.id.clone()).collect();
    ids.shuffle(&mut seed::rng(seed::derive(suite.rng_seed, 0x401d)));
    let n = ((ids.len() as f64 * fraction).ceil() as usize).clamp(1, ids.len().saturating_sub(1).max(1));
    let mut out: Vec<String> = ids.into_iter().take(n).collect();
    out.sort();
    out
}

/// Precision per backend under the suite's noise, plus the I/O improvement
/// on held-out cases from retraining with them included.
pub fn evaluate(suite: &ScenarioSuite, config: &EvalConfig) -> Result<PrecisionReport> {
    let full = Evaluator::new(suite, config.clone())?;
    let held = holdout_cases(suite, config.holdout_fraction);
    let train_ids: Vec<&str> = suite
        .case_base
        .cases()
        .iter()
        .map(|c| c.id.as_str())
        .filter(|id| !held.iter().any(|h| h == id))
        .collect();
    let partial = Evaluator::for_cases(suite, config.clone(), &train_ids)?;
    let held_idx: Vec<usize> = suite
        .utterances
        .iter()
        .enumerate()
        .filter(|(_, u)| held.contains(&u.expected_case))
        .map(|(i, _)| i)
        .collect();
    let noise = suite.noise;
    let rows = std::thread::scope(|scope| {
        let handles: Vec<_> = Backend::ALL
            .iter()
            .map(|&backend| {
                let (full, partial, held_idx) = (&full, &partial, &held_idx);
                scope.spawn(move || -> Result<ReportRow> {
                    let nlp = full.nlp_tally(backend, &noise, None)?;
                    let io = full.io_tally(backend, &noise, None)?;
                    let before = partial.io_tally(backend, &noise, Some(held_idx))?;
                    let after = full.io_tally(backend, &noise, Some(held_idx))?;
                    let adaptation_delta = if held_idx.is_empty() {
                        0.0
                    } else {
                        after.precision() - before.precision()
                    };
                    Ok(ReportRow {
                        backend,
                        nlp_precision: nlp.precision(),
                        io_precision: io.precision(),
                        adaptation_delta,
                        nlp,
                        io,
                        holdout_before: before,
                        holdout_after: after,
                    })
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("measurement thread panicked"))
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(PrecisionReport {
        suite_seed: suite.rng_seed,
        utterances: suite.utterances.len(),
        noise_seeds: config.noise_seeds,
        holdout_cases: held,
        rows,
    })
}

/// Mean NLP precision per backend at each substitution level, with deletion
/// and insertion switched off.
pub fn degradation_sweep(evaluator: &Evaluator<'_>, levels: &[f64], noise_seed: u64) -> Result<Vec<(f64, BTreeMap<Backend, f64>)>> {
    levels
        .iter()
        .map(|&p| {
            let noise = NoiseSpec {
                substitute_prob: p,
                delete_prob: 0.0,
                insert_prob: 0.0,
                rng_seed: noise_seed,
            };
            let per = Backend::ALL
                .iter()
                .map(|&b| Ok((b, measure_nlp_precision(evaluator, b, &noise)?)))
                .collect::<Result<BTreeMap<_, _>>>()?;
            Ok((p, per))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TableFormat {
    Table,
    Csv,
    Json,
}

impl std::str::FromStr for TableFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table" => Ok(TableFormat::Table),
            "csv" => Ok(TableFormat::Csv),
            "json" => Ok(TableFormat::Json),
            other => Err(Error::Config(format!("unknown format `{other}`"))),
        }
    }
}

pub const REFERENCE_LABEL: &str = "paper-reported, not reproducible (no published dataset)";

/// (network, NLP-stage %, I/O-stage %, adaptive capability) as published.
pub const REFERENCE_VALUES: [(&str, &str, &str, &str); 3] = [
    ("Hopfield", "66%", "54%", "Very High"),
    ("Perceptron", "54%", "55%", "Medium"),
    ("Boltzmann", "48%", "58.5%", "High"),
];

const HEADERS: [&str; 4] = [
    "Type of Network",
    "Precision at NLP stage",
    "Precision at I/O stage",
    "Adaptive Capability",
];

fn ordered_rows(report: &PrecisionReport) -> Result<Vec<&ReportRow>> {
    Backend::ALL
        .iter()
        .map(|b| {
            report
                .rows
                .iter()
                .find(|r| r.backend == *b)
                .ok_or_else(|| Error::Completeness(format!("missing row for {b}")))
        })
        .collect()
}

fn aligned(rows: &[[String; 4]]) -> String {
    let widths: Vec<usize> = (0..4)
        .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for r in rows {
        let line: Vec<String> = r
            .iter()
            .zip(&widths)
            .map(|(cell, w)| format!("{cell:<w$}"))
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct JsonRow<'a> {
    network: &'a str,
    nlp_precision: Score,
    io_precision: Score,
    adaptation_delta: Score,
}

#[derive(Serialize)]
struct JsonReference {
    network: &'static str,
    nlp_precision: &'static str,
    io_precision: &'static str,
    adaptive_capability: &'static str,
}

#[derive(Serialize)]
struct JsonTable<'a> {
    suite_seed: u64,
    utterances: usize,
    noise_seeds: usize,
    suite: &'static str,
    rows: Vec<JsonRow<'a>>,
    paper_reference: BTreeMap<&'static str, serde_json::Value>,
}

/// Render in Hopfield, Perceptron, Boltzmann order. Numbers use four
/// decimal places in every format.
pub fn emit_table(report: &PrecisionReport, format: TableFormat) -> Result<String> {
    let rows = ordered_rows(report)?;
    let cells = |r: &ReportRow| {
        [
            r.backend.title().to_string(),
            format!("{:.4}", r.nlp_precision),
            format!("{:.4}", r.io_precision),
            format!("{:+.4}", r.adaptation_delta),
        ]
    };
    match format {
        TableFormat::Table => {
            let mut grid = vec![HEADERS.map(str::to_string)];
            grid.extend(rows.iter().map(|r| cells(r)));
            let mut out = aligned(&grid);
            let _ = writeln!(
                out,
                "\nsuite seed {}, {} utterances x {} noise seeds (synthetic suite)",
                report.suite_seed, report.utterances, report.noise_seeds
            );
            let _ = writeln!(out, "\nReference values, {REFERENCE_LABEL}:");
            let mut reference = vec![HEADERS.map(str::to_string)];
            reference.extend(REFERENCE_VALUES.iter().map(|(n, a, b, c)| [n, a, b, c].map(|s| s.to_string())));
            out.push_str(&aligned(&reference));
            Ok(out)
        }
        TableFormat::Csv => {
            let mut out = String::from("network,nlp_precision,io_precision,adaptation_delta\n");
            for r in rows {
                let _ = writeln!(
                    out,
                    "{},{:.4},{:.4},{:.4}",
                    r.backend.title(),
                    r.nlp_precision,
                    r.io_precision,
                    r.adaptation_delta
                );
            }
            Ok(out)
        }
        TableFormat::Json => {
            let reference: Vec<JsonReference> = REFERENCE_VALUES
                .iter()
                .map(|&(network, nlp, io, cap)| JsonReference {
                    network,
                    nlp_precision: nlp,
                    io_precision: io,
                    adaptive_capability: cap,
                })
                .collect();
            let table = JsonTable {
                suite_seed: report.suite_seed,
                utterances: report.utterances,
                noise_seeds: report.noise_seeds,
                suite: "synthetic",
                rows: rows
                    .iter()
                    .map(|r| JsonRow {
                        network: r.backend.title(),
                        nlp_precision: Score(r.nlp_precision),
                        io_precision: Score(r.io_precision),
                        adaptation_delta: Score(r.adaptation_delta),
                    })
                    .collect(),
                paper_reference: [
                    ("label", serde_json::json!(REFERENCE_LABEL)),
                    ("rows", serde_json::to_value(reference)?),
                ]
                .into(),
            };
            Ok(serde_json::to_string_pretty(&table)? + "\n")
        }
    }
}
