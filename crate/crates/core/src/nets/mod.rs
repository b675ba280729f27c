//! Associative network backends over bipolar patterns.

pub mod assoc;
pub mod boltzmann;
pub mod fuzzy;
pub mod hopfield;
pub mod perceptron;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::phoneme::{Phoneme, PhonemeSequence, Segment, INVENTORY_SIZE};

pub use assoc::{balanced_key, Association, Associator, AssociatorConfig, Backend, TrainedAssociator, TrainingItem};
pub use boltzmann::{flip_probability, AnnealSchedule, BoltzmannMachine, Estimator, Settled};
pub use fuzzy::{fuzzy_readout, FuzzyReadout, Membership, ReadoutScore};
pub use hopfield::{FlipEvent, HopfieldNet, Recall};
pub use perceptron::{Perceptron, PerceptronFit};

/// Units per encoded slot: one per phoneme, then boundary, then pad.
pub const SLOT_WIDTH: usize = INVENTORY_SIZE + 2;
const BOUNDARY_INDEX: usize = INVENTORY_SIZE;
const PAD_INDEX: usize = INVENTORY_SIZE + 1;

/// Vector with entries in {-1, +1}.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BipolarPattern(Vec<i8>);

impl BipolarPattern {
    pub fn new(values: Vec<i8>) -> Result<Self> {
        if let Some(bad) = values.iter().find(|v| **v != 1 && **v != -1) {
            return Err(Error::Usage(format!("bipolar entry {bad} is not ±1")));
        }
        Ok(Self(values))
    }

    pub fn filled(dimension: usize, value: i8) -> Self {
        assert!(value == 1 || value == -1);
        Self(vec![value; dimension])
    }

    pub fn from_signs(values: &[f64]) -> Self {
        Self(values.iter().map(|&v| if v < 0.0 { -1 } else { 1 }).collect())
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[i8] {
        &self.0
    }

    pub fn negated(&self) -> Self {
        Self(self.0.iter().map(|v| -v).collect())
    }

    pub fn flipped(&self, indices: &[usize]) -> Self {
        let mut v = self.0.clone();
        for &i in indices {
            v[i] = -v[i];
        }
        Self(v)
    }

    pub fn hamming(&self, other: &BipolarPattern) -> Result<usize> {
        check_dim(self.dimension(), other.dimension())?;
        Ok(self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count())
    }

    pub fn concat(&self, other: &BipolarPattern) -> Self {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Self(v)
    }

    pub fn slice(&self, range: std::ops::Range<usize>) -> Self {
        Self(self.0[range].to_vec())
    }
}

impl fmt::Display for BipolarPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.0 {
            f.write_str(if *v > 0 { "+" } else { "-" })?;
        }
        Ok(())
    }
}

impl FromStr for BipolarPattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '+' => Ok(1),
                '-' => Ok(-1),
                other => Err(Error::Usage(format!("bad pattern character `{other}`"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }
}

impl Serialize for BipolarPattern {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.0.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for BipolarPattern {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let v = Vec::<i8>::deserialize(deserializer)?;
        BipolarPattern::new(v).map_err(serde::de::Error::custom)
    }
}

pub fn check_dim(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::Dimension { expected, actual })
    }
}

pub fn encoded_dimension(slots: usize) -> usize {
    slots * SLOT_WIDTH
}

/// One-hot per slot mapped to ±1. Slots past the end of the sequence carry
/// the pad symbol.
pub fn encode_pattern(seq: &PhonemeSequence, slots: usize) -> Result<BipolarPattern> {
    if seq.len() > slots {
        return Err(Error::Capacity {
            len: seq.len(),
            slots,
        });
    }
    let mut v = vec![-1i8; slots * SLOT_WIDTH];
    for slot in 0..slots {
        let hot = match seq.segments().get(slot) {
            Some(Segment::Phoneme(p)) => p.index(),
            Some(Segment::Boundary) => BOUNDARY_INDEX,
            None => PAD_INDEX,
        };
        v[slot * SLOT_WIDTH + hot] = 1;
    }
    Ok(BipolarPattern(v))
}

/// Like [`encode_pattern`] but drops whatever does not fit.
pub fn encode_truncated(seq: &PhonemeSequence, slots: usize) -> BipolarPattern {
    let kept = seq.segments()[..seq.len().min(slots)].to_vec();
    // truncation never creates adjacent boundaries
    let seq = PhonemeSequence::from_segments(kept).expect("prefix of a valid sequence");
    encode_pattern(&seq, slots).expect("fits by construction")
}

/// Inverse of [`encode_pattern`]. Fails unless every slot is exactly one-hot
/// and padding is contiguous at the end.
pub fn decode_pattern(pattern: &BipolarPattern) -> Result<PhonemeSequence> {
    let d = pattern.dimension();
    if !d.is_multiple_of(SLOT_WIDTH) {
        return Err(Error::Usage(format!("dimension {d} is not a multiple of {SLOT_WIDTH}")));
    }
    let mut segments = Vec::new();
    let mut padded = false;
    for slot in pattern.values().chunks(SLOT_WIDTH) {
        let hot: Vec<usize> = slot
            .iter()
            .enumerate()
            .filter(|(_, v)| **v > 0)
            .map(|(i, _)| i)
            .collect();
        let [idx] = hot[..] else {
            return Err(Error::Usage("slot is not one-hot".into()));
        };
        match idx {
            PAD_INDEX => padded = true,
            _ if padded => return Err(Error::Usage("symbol after padding".into())),
            BOUNDARY_INDEX => segments.push(Segment::Boundary),
            i => segments.push(Segment::Phoneme(Phoneme::from_index(i).expect("index < inventory"))),
        }
    }
    PhonemeSequence::from_segments(segments)
}

/// Tagged on-disk form of a bare network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NetworkFile {
    Hopfield {
        dimension: usize,
        stored_count: usize,
        weights: Vec<f64>,
    },
    Boltzmann {
        visible_in: usize,
        visible_out: usize,
        hidden: usize,
        weights: Vec<f64>,
        biases: Vec<f64>,
        schedule: AnnealSchedule,
    },
    Perceptron {
        classes: usize,
        dimension: usize,
        weights: Vec<f64>,
    },
}
