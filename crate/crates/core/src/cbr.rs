//! Case-based inference: retrieval over translator keys, Bayesian response
//! correlation, pragmatic adaptation and the composed `infer`.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nets::{check_dim, BipolarPattern, TrainedAssociator};
use crate::output::{render, Modality, OutputKind, RankedScore, RenderedOutput, Score, StageRecord, DEFAULT_TITLE};

pub type Context = BTreeMap<String, String>;
pub type Prior = BTreeMap<String, f64>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Case {
    pub id: String,
    pub request_words: Vec<String>,
    pub request_pattern: BipolarPattern,
    pub response_template: String,
    #[serde(default)]
    pub pragmatic_tags: BTreeMap<String, String>,
}

impl Case {
    pub fn tag(&self, key: &str) -> Option<&str> {
        self.pragmatic_tags.get(key).map(String::as_str)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CaseBase {
    cases: Vec<Case>,
    dimension: usize,
}

impl CaseBase {
    /// Ids must be unique and every pattern must share one dimension.
    pub fn new(cases: Vec<Case>) -> Result<Self> {
        let dimension = cases.first().map_or(0, |c| c.request_pattern.dimension());
        let mut seen = HashSet::new();
        for c in &cases {
            if !seen.insert(c.id.as_str()) {
                return Err(Error::CaseBase(format!("duplicate case id `{}`", c.id)));
            }
            if c.request_pattern.dimension() != dimension {
                return Err(Error::CaseBase(format!(
                    "case `{}` has dimension {}, expected {dimension}",
                    c.id,
                    c.request_pattern.dimension()
                )));
            }
        }
        Ok(Self { cases, dimension })
    }

    pub fn from_json(source: &str) -> Result<Self> {
        let cases: Vec<Case> = serde_json::from_str(source).map_err(|e| Error::CaseBase(e.to_string()))?;
        Self::new(cases)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.cases).expect("cases serialize") + "\n"
    }

    pub fn cases(&self) -> &[Case] {
        &self.cases
    }

    pub fn len(&self) -> usize {
        self.cases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cases.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn get(&self, id: &str) -> Option<&Case> {
        self.cases.iter().find(|c| c.id == id)
    }
}

/// Fraction of matching coordinates.
pub fn similarity(a: &BipolarPattern, b: &BipolarPattern) -> Result<f64> {
    let d = a.dimension();
    let differing = a.hamming(b)?;
    if d == 0 {
        return Ok(1.0);
    }
    Ok((d - differing) as f64 / d as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Candidate<'a> {
    pub case: &'a Case,
    pub similarity: f64,
}

/// Exhaustive scan; top `k` by similarity, ties by case id.
pub fn retrieve<'a>(cb: &'a CaseBase, query: &BipolarPattern, k: usize) -> Result<Vec<Candidate<'a>>> {
    if cb.is_empty() {
        return Err(Error::Retrieval("case base is empty".into()));
    }
    check_dim(cb.dimension(), query.dimension())?;
    if k == 0 || k > cb.len() {
        return Err(Error::Retrieval(format!("k = {k} outside 1..={}", cb.len())));
    }
    let mut ranked = cb
        .cases()
        .iter()
        .map(|case| {
            Ok(Candidate {
                case,
                similarity: similarity(&case.request_pattern, query)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ranked.sort_by(|a, b| {
        b.similarity
            .total_cmp(&a.similarity)
            .then_with(|| a.case.id.cmp(&b.case.id))
    });
    ranked.truncate(k);
    Ok(ranked)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PosteriorEntry {
    pub case_id: String,
    pub posterior: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResponsePosterior {
    entries: Vec<PosteriorEntry>,
}

impl ResponsePosterior {
    /// Descending, ties by case id.
    pub fn entries(&self) -> &[PosteriorEntry] {
        &self.entries
    }

    pub fn best(&self) -> &PosteriorEntry {
        &self.entries[0]
    }

    pub fn get(&self, case_id: &str) -> Option<f64> {
        self.entries.iter().find(|e| e.case_id == case_id).map(|e| e.posterior)
    }
}

/// posterior(c) ∝ prior(c)·exp(β·similarity(c)). Cases missing from the
/// prior get the smallest positive weight present, or 1 if there is none.
pub fn bayesian_correlate(candidates: &[Candidate<'_>], prior: &Prior, beta: f64) -> Result<ResponsePosterior> {
    if candidates.is_empty() {
        return Err(Error::Retrieval("no candidates to correlate".into()));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::Usage(format!("likelihood sharpness {beta} must be positive")));
    }
    if let Some((id, w)) = prior.iter().find(|(_, w)| !(w.is_finite() && **w >= 0.0)) {
        return Err(Error::DegeneratePrior(format!("weight {w} for `{id}`")));
    }
    if !prior.is_empty() && prior.values().all(|w| *w == 0.0) {
        return Err(Error::DegeneratePrior("all prior weights are zero".into()));
    }
    let fallback = prior
        .values()
        .copied()
        .filter(|w| *w > 0.0)
        .min_by(f64::total_cmp)
        .unwrap_or(1.0);
    let logs: Vec<f64> = candidates
        .iter()
        .map(|c| {
            let w = prior.get(&c.case.id).copied().unwrap_or(fallback);
            w.ln() + beta * c.similarity
        })
        .collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::DegeneratePrior("every candidate has zero prior".into()));
    }
    let weights: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    let mut entries: Vec<PosteriorEntry> = candidates
        .iter()
        .zip(&weights)
        .map(|(c, w)| PosteriorEntry {
            case_id: c.case.id.clone(),
            posterior: w / total,
        })
        .collect();
    entries.sort_by(|a, b| {
        b.posterior
            .total_cmp(&a.posterior)
            .then_with(|| a.case_id.cmp(&b.case_id))
    });
    Ok(ResponsePosterior { entries })
}

/// Replace `{name}` placeholders, looking in `context` first and then in
/// `tags`. Braces not enclosing an identifier are left alone.
pub fn fill_template(template: &str, tags: &BTreeMap<String, String>, context: &Context) -> Result<String> {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let name_len = after
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
            .unwrap_or(after.len());
        if name_len > 0 && after[name_len..].starts_with('}') {
            let name = &after[..name_len];
            let value = context
                .get(name)
                .or_else(|| tags.get(name))
                .ok_or_else(|| Error::Adaptation(name.to_string()))?;
            out.push_str(value);
            rest = &after[name_len + 1..];
        } else {
            out.push('{');
            rest = after;
        }
    }
    out.push_str(rest);
    Ok(out)
}

pub fn adapt(case: &Case, context: &Context) -> Result<String> {
    fill_template(&case.response_template, &case.pragmatic_tags, context)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InferConfig {
    pub k: usize,
    pub beta: f64,
    pub modality: Modality,
    pub rng_seed: u64,
}

impl Default for InferConfig {
    fn default() -> Self {
        Self {
            k: 3,
            beta: 4f64.ln(),
            modality: Modality::Text,
            rng_seed: 0,
        }
    }
}

fn ranked(items: impl IntoIterator<Item = (String, f64)>) -> Vec<RankedScore> {
    items
        .into_iter()
        .map(|(id, s)| RankedScore { id, score: Score(s) })
        .collect()
}

/// translate → retrieve → correlate → adapt → output. `k` is clamped to the
/// case-base size.
pub fn infer(
    cb: &CaseBase,
    translator: &TrainedAssociator,
    utterance: &BipolarPattern,
    context: &Context,
    prior: &Prior,
    config: &InferConfig,
) -> Result<RenderedOutput> {
    let association = translator
        .associate(utterance, config.rng_seed)
        .map_err(|e| e.at("translate"))?;
    let mut trace = vec![StageRecord::Translate {
        backend: translator.backend().to_string(),
        output: association.output.to_string(),
        readout: ranked(
            association
                .readout
                .candidates()
                .iter()
                .map(|m| (m.candidate.clone(), m.membership)),
        ),
    }];
    let k = config.k.clamp(1, cb.len().max(1));
    let candidates = retrieve(cb, &association.output, k).map_err(|e| e.at("retrieve"))?;
    trace.push(StageRecord::Retrieve {
        candidates: ranked(candidates.iter().map(|c| (c.case.id.clone(), c.similarity))),
    });
    let posterior = bayesian_correlate(&candidates, prior, config.beta).map_err(|e| e.at("correlate"))?;
    trace.push(StageRecord::Correlate {
        posterior: ranked(posterior.entries().iter().map(|e| (e.case_id.clone(), e.posterior))),
    });
    let chosen = cb.get(&posterior.best().case_id).expect("posterior ids come from the case base");
    let text = adapt(chosen, context).map_err(|e| e.at("adapt"))?;
    trace.push(StageRecord::Adapt {
        case_id: chosen.id.clone(),
        template: chosen.response_template.clone(),
        text: text.clone(),
    });
    let title = chosen.tag("title").unwrap_or(DEFAULT_TITLE);
    Ok(render(
        &text,
        config.modality,
        OutputKind::Response,
        title,
        Some(chosen.id.clone()),
        trace,
    ))
}
