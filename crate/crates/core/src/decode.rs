//! Noisy-channel decoding of phoneme sequences into words.
//!
//! A hypothesis is a sequence of *units*: full lexicon pronunciations or
//! morpheme chunks (proper prefixes of a pronunciation, at least
//! `min_morpheme_len` phonemes long). The observed phonemes are split into
//! contiguous spans, one per unit, and each span is aligned to its unit by
//! Levenshtein distance. A word sequence scores
//!
//! ```text
//! ln P_lm(realization) - edit_penalty * edits - morpheme_penalty * chunks
//! ```
//!
//! where the realization is the full pronunciations of the hypothesised
//! words joined by boundary symbols. Word boundaries in the observed input
//! are ignored. The search is exhaustive within `max_edits`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ngram::NGramModel;
use crate::phoneme::{Lexicon, Phoneme, PhonemeSequence, BOUNDARY_SYMBOL};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecodeConfig {
    pub edit_penalty: f64,
    pub max_edits: usize,
    pub morpheme_penalty: f64,
    pub min_morpheme_len: usize,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        Self {
            edit_penalty: 4.0,
            max_edits: 2,
            morpheme_penalty: 2.0,
            min_morpheme_len: 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Alternate {
    pub words: Vec<String>,
    pub score: f64,
    pub edits: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecodeResult {
    pub words: Vec<String>,
    pub score: f64,
    pub edits: usize,
    /// Ranked best first; the head equals (`words`, `score`).
    pub alternates: Vec<Alternate>,
}

#[derive(Clone, Debug)]
struct Unit {
    word: usize,
    /// Index of the source pronunciation in `Decoder::prons`.
    pron: usize,
    phonemes: Vec<Phoneme>,
    chunk: bool,
}

/// Precomputed segmentation units for one lexicon.
pub struct Decoder<'a> {
    model: &'a NGramModel,
    config: DecodeConfig,
    words: Vec<&'a str>,
    prons: Vec<Vec<String>>,
    units: Vec<Unit>,
}

impl<'a> Decoder<'a> {
    pub fn new(lexicon: &'a Lexicon, model: &'a NGramModel, config: DecodeConfig) -> Result<Self> {
        if lexicon.is_empty() {
            return Err(Error::Usage("decoding needs a non-empty lexicon".into()));
        }
        let mut words = Vec::new();
        let mut prons = Vec::new();
        let mut units = Vec::new();
        for (w, (word, entries)) in lexicon.iter().enumerate() {
            words.push(word);
            for pron in entries {
                let id = prons.len();
                prons.push(pron.phonemes.iter().map(|p| p.symbol().to_string()).collect());
                let full = &pron.phonemes;
                for len in config.min_morpheme_len.max(1)..full.len() {
                    units.push(Unit {
                        word: w,
                        pron: id,
                        phonemes: full[..len].to_vec(),
                        chunk: true,
                    });
                }
                units.push(Unit {
                    word: w,
                    pron: id,
                    phonemes: full.clone(),
                    chunk: false,
                });
            }
        }
        Ok(Self {
            model,
            config,
            words,
            prons,
            units,
        })
    }

    pub fn decode(&self, seq: &PhonemeSequence, k_best: usize) -> Result<DecodeResult> {
        if k_best == 0 {
            return Err(Error::Usage("k_best must be at least 1".into()));
        }
        let observed = seq.phonemes();
        if observed.is_empty() {
            return Ok(DecodeResult {
                words: Vec::new(),
                score: 0.0,
                edits: 0,
                alternates: vec![Alternate {
                    words: Vec::new(),
                    score: 0.0,
                    edits: 0,
                }],
            });
        }

        let mut search = Search {
            decoder: self,
            observed: &observed,
            need: self.completion_bounds(&observed),
            stack: Vec::new(),
            found: HashMap::new(),
        };
        search.walk(0, 0);
        let found = search.found;

        let mut lm_cache: HashMap<Vec<usize>, f64> = HashMap::new();
        let mut best: HashMap<Vec<usize>, (f64, usize)> = HashMap::new();
        for (units, edits) in found {
            let pron_ids: Vec<usize> = units.iter().map(|&u| self.units[u].pron).collect();
            let lm = *lm_cache
                .entry(pron_ids.clone())
                .or_insert_with(|| self.model.sequence_logprob(&self.realization(&pron_ids)));
            let chunks = units.iter().filter(|&&u| self.units[u].chunk).count();
            let score = lm
                - self.config.edit_penalty * edits as f64
                - self.config.morpheme_penalty * chunks as f64;
            let words: Vec<usize> = units.iter().map(|&u| self.units[u].word).collect();
            best.entry(words)
                .and_modify(|cur| {
                    if score > cur.0 {
                        *cur = (score, edits);
                    }
                })
                .or_insert((score, edits));
        }
        if best.is_empty() {
            return Err(Error::NoParse {
                max_edits: self.config.max_edits,
            });
        }

        let mut ranked: Vec<Alternate> = best
            .into_iter()
            .map(|(ws, (score, edits))| Alternate {
                words: ws.iter().map(|&w| self.words[w].to_string()).collect(),
                score,
                edits,
            })
            .collect();
        ranked.sort_by(|a, b| {
            b.score
                .total_cmp(&a.score)
                .then_with(|| a.words.join(" ").cmp(&b.words.join(" ")))
        });
        ranked.truncate(k_best);
        let head = ranked[0].clone();
        Ok(DecodeResult {
            words: head.words,
            score: head.score,
            edits: head.edits,
            alternates: ranked,
        })
    }

    fn realization(&self, pron_ids: &[usize]) -> Vec<&str> {
        let mut out = Vec::new();
        for (i, &p) in pron_ids.iter().enumerate() {
            if i > 0 {
                out.push(BOUNDARY_SYMBOL);
            }
            out.extend(self.prons[p].iter().map(String::as_str));
        }
        out
    }

    /// `need[i]`: fewest edits that can consume `observed[i..]`.
    fn completion_bounds(&self, observed: &[Phoneme]) -> Vec<usize> {
        let n = observed.len();
        let cap = self.config.max_edits + 1;
        let mut need = vec![cap; n + 1];
        need[n] = 0;
        for i in (0..n).rev() {
            for unit in &self.units {
                let row = span_costs(&unit.phonemes, &observed[i..], cap);
                for (len, &cost) in row.iter().enumerate().skip(1) {
                    need[i] = need[i].min(cost.saturating_add(need[i + len]));
                }
            }
        }
        need
    }
}

struct Search<'d, 'a> {
    decoder: &'d Decoder<'a>,
    observed: &'d [Phoneme],
    need: Vec<usize>,
    stack: Vec<usize>,
    found: HashMap<Vec<usize>, usize>,
}

impl Search<'_, '_> {
    fn walk(&mut self, pos: usize, used: usize) {
        let max = self.decoder.config.max_edits;
        let n = self.observed.len();
        if pos == n {
            self.found
                .entry(self.stack.clone())
                .and_modify(|e| *e = (*e).min(used))
                .or_insert(used);
        }
        let budget = max - used;
        let decoder = self.decoder;
        let observed = self.observed;
        for (u, unit) in decoder.units.iter().enumerate() {
            let row = span_costs(&unit.phonemes, &observed[pos..], budget + 1);
            for (len, &cost) in row.iter().enumerate() {
                if cost > budget || used + cost + self.need[pos + len] > max {
                    continue;
                }
                // a zero-length span is a fully deleted unit and must cost something
                if len == 0 && cost == 0 {
                    continue;
                }
                self.stack.push(u);
                self.walk(pos + len, used + cost);
                self.stack.pop();
            }
        }
    }
}

/// Levenshtein distance between `unit` and every prefix of `rest` whose
/// length is within `cap` of the unit length; entries for longer prefixes
/// are omitted.
fn span_costs(unit: &[Phoneme], rest: &[Phoneme], cap: usize) -> Vec<usize> {
    let max_len = rest.len().min(unit.len() + cap);
    let cols = max_len + 1;
    let mut prev: Vec<usize> = (0..cols).collect();
    let mut cur = vec![0; cols];
    for (i, &a) in unit.iter().enumerate() {
        cur[0] = i + 1;
        for j in 1..cols {
            let sub = prev[j - 1] + usize::from(a != rest[j - 1]);
            cur[j] = sub.min(prev[j] + 1).min(cur[j - 1] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev
}

pub fn decode_phonemes(
    seq: &PhonemeSequence,
    lexicon: &Lexicon,
    model: &NGramModel,
    k_best: usize,
    config: DecodeConfig,
) -> Result<DecodeResult> {
    Decoder::new(lexicon, model, config)?.decode(seq, k_best)
}
