//! Add-k smoothed n-gram models over string symbols (phonemes, boundaries,
//! morpheme chunks) with threshold pruning.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::phoneme::PhonemeSequence;

pub const START: &str = "<s>";
pub const END: &str = "</s>";
/// Probability returned for absent events when the model is unsmoothed.
pub const UNSMOOTHED_FLOOR: f64 = 1e-10;

pub type Context = Vec<String>;

#[derive(Clone, Debug, PartialEq)]
pub struct NGramModel {
    order: usize,
    smoothing_k: f64,
    vocab: BTreeSet<String>,
    context_counts: BTreeMap<Context, u64>,
    tables: BTreeMap<Context, BTreeMap<String, f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PruneConfig {
    pub threshold: f64,
}

impl PruneConfig {
    pub fn new(threshold: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&threshold) {
            return Err(Error::Usage(format!("threshold {threshold} outside [0,1]")));
        }
        Ok(Self { threshold })
    }
}

/// Train on phoneme sequences; boundaries become the `|` symbol.
pub fn train_ngram(corpus: &[PhonemeSequence], order: usize, smoothing_k: f64) -> Result<NGramModel> {
    let symbols: Vec<Vec<String>> = corpus.iter().map(PhonemeSequence::symbols).collect();
    NGramModel::train(&symbols, order, smoothing_k)
}

impl NGramModel {
    /// Maximum-likelihood counts with add-k smoothing. Each sequence is
    /// padded with `order - 1` start markers and one end marker; the
    /// vocabulary is every observed symbol plus the end marker.
    pub fn train<S: AsRef<str>>(corpus: &[Vec<S>], order: usize, smoothing_k: f64) -> Result<Self> {
        if order == 0 {
            return Err(Error::Training("order must be at least 1".into()));
        }
        if corpus.is_empty() {
            return Err(Error::Training("empty corpus".into()));
        }
        if !(smoothing_k.is_finite() && smoothing_k >= 0.0) {
            return Err(Error::Training(format!("invalid smoothing constant {smoothing_k}")));
        }

        let mut vocab: BTreeSet<String> = BTreeSet::new();
        vocab.insert(END.to_string());
        let mut counts: BTreeMap<Context, BTreeMap<String, u64>> = BTreeMap::new();
        for seq in corpus {
            let padded = pad(seq.iter().map(AsRef::as_ref), order);
            for sym in &padded[order - 1..] {
                vocab.insert(sym.clone());
            }
            for window in padded.windows(order) {
                let (ctx, next) = window.split_at(order - 1);
                *counts
                    .entry(ctx.to_vec())
                    .or_default()
                    .entry(next[0].clone())
                    .or_default() += 1;
            }
        }

        let v = vocab.len() as f64;
        let mut context_counts = BTreeMap::new();
        let mut tables = BTreeMap::new();
        for (ctx, nexts) in counts {
            let total: u64 = nexts.values().sum();
            let denom = total as f64 + smoothing_k * v;
            let table: BTreeMap<String, f64> = if smoothing_k > 0.0 {
                vocab
                    .iter()
                    .map(|s| {
                        let c = nexts.get(s).copied().unwrap_or(0) as f64;
                        (s.clone(), (c + smoothing_k) / denom)
                    })
                    .collect()
            } else {
                nexts
                    .iter()
                    .map(|(s, &c)| (s.clone(), c as f64 / denom))
                    .collect()
            };
            context_counts.insert(ctx.clone(), total);
            tables.insert(ctx, table);
        }

        Ok(Self {
            order,
            smoothing_k,
            vocab,
            context_counts,
            tables,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn smoothing_k(&self) -> f64 {
        self.smoothing_k
    }

    pub fn vocab(&self) -> &BTreeSet<String> {
        &self.vocab
    }

    pub fn contexts(&self) -> impl Iterator<Item = (&Context, &BTreeMap<String, f64>)> {
        self.tables.iter()
    }

    pub fn entry_count(&self) -> usize {
        self.tables.values().map(BTreeMap::len).sum()
    }

    /// Remove every entry whose probability is below the threshold. The
    /// removed mass is not redistributed.
    pub fn prune(&self, config: PruneConfig) -> NGramModel {
        let mut pruned = self.clone();
        for table in pruned.tables.values_mut() {
            table.retain(|_, p| *p >= config.threshold);
        }
        pruned
    }

    /// Probability used when an event is pruned or was never stored.
    pub fn floor(&self, context: &[String]) -> f64 {
        if self.smoothing_k > 0.0 {
            let count = self.context_counts.get(context).copied().unwrap_or(0) as f64;
            self.smoothing_k / (count + self.smoothing_k * self.vocab.len() as f64)
        } else {
            UNSMOOTHED_FLOOR
        }
    }

    pub fn lookup_prob<S: AsRef<str>>(&self, context: &[S], next: &str) -> Result<f64> {
        if context.len() != self.order - 1 {
            return Err(Error::Usage(format!(
                "context has {} symbols, order {} model needs {}",
                context.len(),
                self.order,
                self.order - 1
            )));
        }
        if !self.vocab.contains(next) {
            return Err(Error::Vocabulary(next.to_string()));
        }
        let ctx: Context = context.iter().map(|s| s.as_ref().to_string()).collect();
        Ok(self.prob_or_floor(&ctx, next))
    }

    fn prob_or_floor(&self, ctx: &[String], next: &str) -> f64 {
        self.tables
            .get(ctx)
            .and_then(|t| t.get(next))
            .copied()
            .unwrap_or_else(|| self.floor(ctx))
    }

    /// Natural-log probability of a whole sequence including padding and the
    /// end marker. Symbols outside the vocabulary score at the floor.
    pub fn sequence_logprob<S: AsRef<str>>(&self, seq: &[S]) -> f64 {
        let padded = pad(seq.iter().map(AsRef::as_ref), self.order);
        padded
            .windows(self.order)
            .map(|w| {
                let (ctx, next) = w.split_at(self.order - 1);
                self.prob_or_floor(ctx, &next[0]).ln()
            })
            .sum()
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            order: self.order,
            smoothing_k: self.smoothing_k,
            vocab: self.vocab.iter().cloned().collect(),
            context_counts: self
                .context_counts
                .iter()
                .map(|(ctx, &n)| {
                    let mut row: Vec<Value> = ctx.iter().cloned().map(Value::String).collect();
                    row.push(Value::from(n));
                    row
                })
                .collect(),
            entries: self
                .tables
                .iter()
                .flat_map(|(ctx, table)| {
                    table.iter().map(move |(sym, &p)| {
                        let mut row: Vec<Value> = ctx.iter().cloned().map(Value::String).collect();
                        row.push(Value::String(sym.clone()));
                        row.push(Value::from(p));
                        row
                    })
                })
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("model serializes");
        s.push('\n');
        s
    }

    pub fn from_json(source: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(source)?;
        if file.order == 0 {
            return Err(Error::Training("order must be at least 1".into()));
        }
        let ctx_len = file.order - 1;
        let bad = |what: &str| Error::Training(format!("malformed model file: {what}"));
        let strings = |vals: &[Value]| -> Result<Vec<String>> {
            vals.iter()
                .map(|v| v.as_str().map(str::to_string).ok_or_else(|| bad("non-string symbol")))
                .collect()
        };

        let vocab: BTreeSet<String> = file.vocab.into_iter().collect();
        let mut context_counts = BTreeMap::new();
        let mut tables: BTreeMap<Context, BTreeMap<String, f64>> = BTreeMap::new();
        for row in &file.context_counts {
            if row.len() != ctx_len + 1 {
                return Err(bad("context_counts row length"));
            }
            let ctx = strings(&row[..ctx_len])?;
            let n = row[ctx_len].as_u64().ok_or_else(|| bad("count"))?;
            tables.entry(ctx.clone()).or_default();
            context_counts.insert(ctx, n);
        }
        for row in &file.entries {
            if row.len() != ctx_len + 2 {
                return Err(bad("entry row length"));
            }
            let ctx = strings(&row[..ctx_len])?;
            let sym = row[ctx_len].as_str().ok_or_else(|| bad("symbol"))?.to_string();
            let p = row[ctx_len + 1].as_f64().ok_or_else(|| bad("probability"))?;
            if !(p > 0.0 && p <= 1.0) {
                return Err(bad("probability outside (0,1]"));
            }
            if !vocab.contains(&sym) {
                return Err(Error::Vocabulary(sym));
            }
            tables.entry(ctx).or_default().insert(sym, p);
        }
        Ok(Self {
            order: file.order,
            smoothing_k: file.smoothing_k,
            vocab,
            context_counts,
            tables,
        })
    }
}

fn pad<'a>(seq: impl Iterator<Item = &'a str>, order: usize) -> Vec<String> {
    let mut padded: Vec<String> = std::iter::repeat_n(START.to_string(), order - 1).collect();
    padded.extend(seq.map(str::to_string));
    padded.push(END.to_string());
    padded
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    order: usize,
    smoothing_k: f64,
    vocab: Vec<String>,
    context_counts: Vec<Vec<Value>>,
    entries: Vec<Vec<Value>>,
}
