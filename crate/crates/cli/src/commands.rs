//! Offline subcommands: resource building, training and evaluation.

use std::path::Path;

use anyhow::{bail, Context as _};
use autotrain_core::eval::{emit_table, evaluate, generate_suite, EvalConfig, ScenarioSuite, SuiteConfig, TableFormat};
use autotrain_core::nets::{encode_truncated, Associator, AssociatorConfig, Backend, TrainingItem};
use autotrain_core::ngram::{NGramModel, PruneConfig};
use autotrain_core::phoneme::{load_lexicon, text_to_phonemes, Lexicon};

pub fn read(path: &Path) -> anyhow::Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

/// Write to `out`, or stdout when absent.
pub fn emit(out: Option<&Path>, contents: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => std::fs::write(path, contents).with_context(|| format!("cannot write {}", path.display())),
        None => {
            print!("{contents}");
            if !contents.ends_with('\n') {
                println!();
            }
            Ok(())
        }
    }
}

/// Validate a lexicon and return its canonical text.
pub fn build_lexicon(source: &str) -> anyhow::Result<(Lexicon, String)> {
    let lexicon = load_lexicon(source)?;
    let text = lexicon.to_text();
    Ok((lexicon, text))
}

/// One training sequence per non-empty line. Without a lexicon each line
/// is whitespace-separated phoneme symbols (`|` for a word boundary); with
/// one, each line is text converted through it.
pub fn corpus_sequences(source: &str, lexicon: Option<&Lexicon>) -> anyhow::Result<Vec<Vec<String>>> {
    let mut out = Vec::new();
    for (idx, line) in source.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let symbols = match lexicon {
            Some(lex) => text_to_phonemes(line, lex)
                .with_context(|| format!("corpus line {}", idx + 1))?
                .symbols(),
            None => {
                let syms: Vec<String> = line.split_whitespace().map(str::to_string).collect();
                for s in &syms {
                    if s != "|" {
                        autotrain_core::phoneme::Phoneme::from_symbol(s)
                            .with_context(|| format!("corpus line {}", idx + 1))?;
                    }
                }
                syms
            }
        };
        out.push(symbols);
    }
    if out.is_empty() {
        bail!("corpus has no sequences");
    }
    Ok(out)
}

pub fn train_lm(corpus: &str, lexicon: Option<&Lexicon>, order: usize, smoothing: f64) -> anyhow::Result<NGramModel> {
    let seqs = corpus_sequences(corpus, lexicon)?;
    Ok(NGramModel::train(&seqs, order, smoothing)?)
}

pub fn prune_lm(model_json: &str, threshold: f64) -> anyhow::Result<NGramModel> {
    let model = NGramModel::from_json(model_json)?;
    Ok(model.prune(PruneConfig::new(threshold)?))
}

/// Train one backend as a translator from the suite's request phrases to
/// case patterns, returning the serialized network.
pub fn train_net(suite: &ScenarioSuite, backend: Backend, config: AssociatorConfig) -> anyhow::Result<String> {
    let items = suite
        .case_base
        .cases()
        .iter()
        .map(|c| {
            let seq = text_to_phonemes(&c.request_words.join(" "), &suite.lexicon)?;
            Ok(TrainingItem {
                input: encode_truncated(&seq, suite.slots),
                label: c.id.clone(),
                target: c.request_pattern.clone(),
            })
        })
        .collect::<autotrain_core::Result<Vec<_>>>()?;
    let trained = Associator::new(backend, config).train(&items)?;
    Ok(serde_json::to_string_pretty(&trained.network_file())?)
}

pub fn eval(suite: &ScenarioSuite, config: &EvalConfig, format: TableFormat) -> anyhow::Result<String> {
    let report = evaluate(suite, config)?;
    Ok(emit_table(&report, format)?)
}

pub fn gen_suite(config: &SuiteConfig) -> anyhow::Result<String> {
    Ok(generate_suite(config)?.to_json())
}
