//! Membership-weighted ranking over several candidate answers.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Raw backend score for one candidate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ReadoutScore {
    /// Lower is better (Hopfield, Boltzmann).
    Energy(f64),
    /// Higher is better (perceptron).
    Margin(f64),
}

impl ReadoutScore {
    fn preference(self) -> f64 {
        match self {
            ReadoutScore::Energy(e) => -e,
            ReadoutScore::Margin(m) => m,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Membership {
    pub candidate: String,
    pub membership: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FuzzyReadout {
    candidates: Vec<Membership>,
}

impl FuzzyReadout {
    /// Descending by membership, never empty.
    pub fn candidates(&self) -> &[Membership] {
        &self.candidates
    }

    pub fn top(&self) -> &Membership {
        &self.candidates[0]
    }
}

/// Softmax of the preferences at temperature `tau`.
pub fn fuzzy_readout(scores: &[(String, ReadoutScore)], tau: f64) -> Result<FuzzyReadout> {
    if scores.is_empty() {
        return Err(Error::Usage("fuzzy readout needs at least one candidate".into()));
    }
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::Usage(format!("readout temperature {tau} must be positive")));
    }
    let prefs: Vec<f64> = scores.iter().map(|(_, s)| s.preference() / tau).collect();
    if prefs.iter().any(|p| !p.is_finite()) {
        return Err(Error::Usage("non-finite readout score".into()));
    }
    let max = prefs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = prefs.iter().map(|p| (p - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    let mut candidates: Vec<Membership> = scores
        .iter()
        .zip(&weights)
        .map(|((c, _), w)| Membership {
            candidate: c.clone(),
            membership: w / total,
        })
        .collect();
    candidates.sort_by(|a, b| {
        b.membership
            .partial_cmp(&a.membership)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.candidate.cmp(&b.candidate))
    });
    Ok(FuzzyReadout { candidates })
}
