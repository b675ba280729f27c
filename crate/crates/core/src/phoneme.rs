//! Phoneme inventory, pronunciation lexicon, and the simulated digitiser that
//! turns text into phoneme sequences (optionally through a seeded noise channel).

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::seed;

/// ARPAbet-style inventory, stress markers removed.
pub const INVENTORY: [&str; 39] = [
    "AA", "AE", "AH", "AO", "AW", "AY", "B", "CH", "D", "DH", "EH", "ER", "EY", "F", "G", "HH",
    "IH", "IY", "JH", "K", "L", "M", "N", "NG", "OW", "OY", "P", "R", "S", "SH", "T", "TH", "UH",
    "UW", "V", "W", "Y", "Z", "ZH",
];

pub const INVENTORY_SIZE: usize = INVENTORY.len();

/// Textual form of a word boundary inside a sequence.
pub const BOUNDARY_SYMBOL: &str = "|";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Phoneme(u8);

impl Phoneme {
    pub fn from_symbol(symbol: &str) -> Result<Self> {
        INVENTORY
            .iter()
            .position(|s| *s == symbol)
            .map(|i| Phoneme(i as u8))
            .ok_or_else(|| Error::Inventory(symbol.to_string()))
    }

    pub fn from_index(index: usize) -> Option<Self> {
        (index < INVENTORY_SIZE).then_some(Phoneme(index as u8))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn symbol(self) -> &'static str {
        INVENTORY[self.index()]
    }

    pub fn all() -> impl Iterator<Item = Phoneme> {
        (0..INVENTORY_SIZE).map(|i| Phoneme(i as u8))
    }
}

impl fmt::Display for Phoneme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Segment {
    Phoneme(Phoneme),
    Boundary,
}

impl Segment {
    pub fn symbol(self) -> &'static str {
        match self {
            Segment::Phoneme(p) => p.symbol(),
            Segment::Boundary => BOUNDARY_SYMBOL,
        }
    }
}

/// An utterance as the parser sees it. Boundaries may sit at word edges but
/// never back to back.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct PhonemeSequence {
    segments: Vec<Segment>,
}

impl PhonemeSequence {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_segments(segments: Vec<Segment>) -> Result<Self> {
        if segments
            .windows(2)
            .any(|w| w[0] == Segment::Boundary && w[1] == Segment::Boundary)
        {
            return Err(Error::Usage("adjacent boundary markers".into()));
        }
        Ok(Self { segments })
    }

    pub fn from_phonemes(phonemes: impl IntoIterator<Item = Phoneme>) -> Self {
        Self {
            segments: phonemes.into_iter().map(Segment::Phoneme).collect(),
        }
    }

    pub fn push_phoneme(&mut self, p: Phoneme) {
        self.segments.push(Segment::Phoneme(p));
    }

    /// Appends a boundary unless the sequence already ends with one.
    pub fn push_boundary(&mut self) {
        if self.segments.last() != Some(&Segment::Boundary) {
            self.segments.push(Segment::Boundary);
        }
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// The phonemes with boundaries dropped.
    pub fn phonemes(&self) -> Vec<Phoneme> {
        self.segments
            .iter()
            .filter_map(|s| match s {
                Segment::Phoneme(p) => Some(*p),
                Segment::Boundary => None,
            })
            .collect()
    }

    pub fn symbols(&self) -> Vec<String> {
        self.segments.iter().map(|s| s.symbol().to_string()).collect()
    }
}

impl fmt::Display for PhonemeSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.segments.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            f.write_str(s.symbol())?;
        }
        Ok(())
    }
}

impl FromStr for PhonemeSequence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let segments = s
            .split_whitespace()
            .map(|tok| {
                if tok == BOUNDARY_SYMBOL {
                    Ok(Segment::Boundary)
                } else {
                    Phoneme::from_symbol(tok).map(Segment::Phoneme)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_segments(segments)
    }
}

impl Serialize for PhonemeSequence {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PhonemeSequence {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Pronunciation {
    pub phonemes: Vec<Phoneme>,
    pub weight: f64,
}

impl Pronunciation {
    pub fn symbol_string(&self) -> String {
        self.phonemes
            .iter()
            .map(|p| p.symbol())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Word → pronunciations. Weights per word are normalized to sum to one.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Lexicon {
    entries: BTreeMap<String, Vec<Pronunciation>>,
}

impl Lexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// Build from (word, phonemes, raw weight) triples. Raw weights are
    /// relative and get normalized per word.
    pub fn from_entries<I>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, Vec<Phoneme>, f64)>,
    {
        let mut lex = Lexicon::new();
        for (i, (word, phonemes, weight)) in entries.into_iter().enumerate() {
            lex.insert_raw(&word, phonemes, weight, i + 1)?;
        }
        lex.normalize();
        Ok(lex)
    }

    fn insert_raw(
        &mut self,
        word: &str,
        phonemes: Vec<Phoneme>,
        weight: f64,
        line: usize,
    ) -> Result<()> {
        if phonemes.is_empty() {
            return Err(Error::Parse {
                line,
                message: format!("word `{word}` has no phonemes"),
            });
        }
        if !(weight.is_finite() && weight > 0.0) {
            return Err(Error::Parse {
                line,
                message: format!("weight {weight} must be positive"),
            });
        }
        let prons = self.entries.entry(word.to_lowercase()).or_default();
        if prons.iter().any(|p| p.phonemes == phonemes) {
            return Err(Error::Parse {
                line,
                message: format!("duplicate pronunciation for `{word}`"),
            });
        }
        prons.push(Pronunciation { phonemes, weight });
        Ok(())
    }

    fn normalize(&mut self) {
        for prons in self.entries.values_mut() {
            let total: f64 = prons.iter().map(|p| p.weight).sum();
            for p in prons.iter_mut() {
                p.weight /= total;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.contains_key(word)
    }

    pub fn pronunciations(&self, word: &str) -> Option<&[Pronunciation]> {
        self.entries.get(word).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[Pronunciation])> {
        self.entries.iter().map(|(w, p)| (w.as_str(), p.as_slice()))
    }

    pub fn pronunciation_count(&self) -> usize {
        self.entries.values().map(Vec::len).sum()
    }

    /// Highest weight wins; equal weights fall back to the lexicographically
    /// smallest symbol string.
    pub fn best_pronunciation(&self, word: &str) -> Option<&Pronunciation> {
        self.entries.get(word)?.iter().min_by(|a, b| {
            b.weight
                .total_cmp(&a.weight)
                .then_with(|| a.symbol_string().cmp(&b.symbol_string()))
        })
    }

    /// Canonical text form, one pronunciation per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (word, prons) in &self.entries {
            for p in prons {
                out.push_str(word);
                out.push(' ');
                out.push_str(&p.symbol_string());
                out.push(' ');
                out.push_str(&p.weight.to_string());
                out.push('\n');
            }
        }
        out
    }
}

pub fn load_lexicon(source: &str) -> Result<Lexicon> {
    let mut lex = Lexicon::new();
    for (idx, raw) in source.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut tokens: Vec<&str> = line.split_whitespace().collect();
        let word = tokens.remove(0);
        if !word.chars().all(|c| c.is_alphanumeric() || c == '\'' || c == '-') {
            return Err(Error::Parse {
                line: line_no,
                message: format!("invalid word `{word}`"),
            });
        }
        let mut weight = 1.0;
        if let Some(last) = tokens.last() {
            if let Ok(w) = last.parse::<f64>() {
                weight = w;
                tokens.pop();
            }
        }
        let phonemes = tokens
            .iter()
            .map(|t| Phoneme::from_symbol(t))
            .collect::<Result<Vec<_>>>()?;
        lex.insert_raw(word, phonemes, weight, line_no)?;
    }
    lex.normalize();
    Ok(lex)
}

/// Look up each whitespace token and join the chosen pronunciations with
/// boundary markers.
pub fn text_to_phonemes(text: &str, lexicon: &Lexicon) -> Result<PhonemeSequence> {
    let mut seq = PhonemeSequence::new();
    for (i, token) in text.split_whitespace().enumerate() {
        let word = token.to_lowercase();
        let pron = lexicon
            .best_pronunciation(&word)
            .ok_or_else(|| Error::OutOfVocabulary(token.to_string()))?;
        if i > 0 {
            seq.push_boundary();
        }
        for p in &pron.phonemes {
            seq.push_phoneme(*p);
        }
    }
    Ok(seq)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub substitute_prob: f64,
    pub delete_prob: f64,
    pub insert_prob: f64,
    pub rng_seed: u64,
}

impl NoiseSpec {
    pub fn silent(rng_seed: u64) -> Self {
        Self {
            rng_seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("substitute_prob", self.substitute_prob),
            ("delete_prob", self.delete_prob),
            ("insert_prob", self.insert_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Noise(format!("{name}={p} outside [0,1]")));
            }
        }
        if self.substitute_prob + self.delete_prob > 1.0 {
            return Err(Error::Noise(
                "substitute_prob + delete_prob exceeds 1".into(),
            ));
        }
        Ok(())
    }

    pub fn with_seed(self, rng_seed: u64) -> Self {
        Self { rng_seed, ..self }
    }
}

/// Per-phoneme substitution / deletion / insertion. Boundaries pass through;
/// boundaries left adjacent by deletions are merged.
pub fn apply_noise(seq: &PhonemeSequence, spec: &NoiseSpec) -> PhonemeSequence {
    let mut rng = seed::rng(spec.rng_seed);
    let mut out = PhonemeSequence::new();
    for seg in seq.segments() {
        let p = match seg {
            Segment::Boundary => {
                out.push_boundary();
                continue;
            }
            Segment::Phoneme(p) => *p,
        };
        let u: f64 = rng.random();
        if u < spec.substitute_prob {
            // uniform over the other INVENTORY_SIZE - 1 symbols
            let mut j = rng.random_range(0..INVENTORY_SIZE - 1);
            if j >= p.index() {
                j += 1;
            }
            out.push_phoneme(Phoneme(j as u8));
        } else if u < spec.substitute_prob + spec.delete_prob {
            // dropped
        } else {
            out.push_phoneme(p);
        }
        let v: f64 = rng.random();
        if v < spec.insert_prob {
            out.push_phoneme(Phoneme(rng.random_range(0..INVENTORY_SIZE) as u8));
        }
    }
    out
}
