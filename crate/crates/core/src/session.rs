//! Session runtime: shared engine resources and per-session state driven one
//! utterance at a time through decode, translation and inference.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cbr::{infer, CaseBase, Context, InferConfig, Prior};
use crate::decode::{DecodeConfig, Decoder};
use crate::error::{Error, Result};
use crate::nets::{encode_truncated, Associator, AssociatorConfig, Backend, TrainedAssociator, TrainingItem};
use crate::ngram::NGramModel;
use crate::output::{clarification, Modality, RenderedOutput, Score, StageRecord};
use crate::phoneme::{apply_noise, load_lexicon, text_to_phonemes, Lexicon, NoiseSpec};
use crate::seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Intake,
    Induction,
    Deepening,
    Exercise,
    Closing,
}

impl Phase {
    pub const ALL: [Phase; 5] = [
        Phase::Intake,
        Phase::Induction,
        Phase::Deepening,
        Phase::Exercise,
        Phase::Closing,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Phase::Intake => "intake",
            Phase::Induction => "induction",
            Phase::Deepening => "deepening",
            Phase::Exercise => "exercise",
            Phase::Closing => "closing",
        }
    }

    /// None after closing.
    pub fn next(self) -> Option<Phase> {
        Phase::ALL.get(self as usize + 1).copied()
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionConfig {
    pub lexicon: PathBuf,
    pub model: PathBuf,
    pub case_base: PathBuf,
    pub backend: Backend,
    pub modality: Modality,
    pub noise: NoiseSpec,
    /// Fixed session seed; None draws one per session.
    pub seed: Option<u64>,
    pub slots: usize,
    /// Prior weight for cases tagged with the current phase; others get 1.
    pub phase_boost: f64,
    pub decode: DecodeConfig,
    pub infer: InferConfig,
    pub assoc: AssociatorConfig,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            lexicon: "lexicon.txt".into(),
            model: "model.json".into(),
            case_base: "casebase.json".into(),
            backend: Backend::Boltzmann,
            modality: Modality::Text,
            noise: NoiseSpec::default(),
            seed: None,
            slots: 32,
            phase_boost: 4.0,
            decode: DecodeConfig::default(),
            infer: InferConfig::default(),
            assoc: AssociatorConfig::default(),
        }
    }
}

impl SessionConfig {
    pub fn from_toml(source: &str) -> Result<Self> {
        toml::from_str(source).map_err(|e| Error::Config(e.to_string()))
    }

    /// Read a TOML file; relative resource paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let source = std::fs::read_to_string(path).map_err(|e| Error::Startup {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let mut config = Self::from_toml(&source)?;
        if let Some(dir) = path.parent() {
            config.resolve_relative_to(dir);
        }
        Ok(config)
    }

    pub fn resolve_relative_to(&mut self, dir: &Path) {
        for p in [&mut self.lexicon, &mut self.model, &mut self.case_base] {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
    }
}

/// Per-session choices that may differ from the engine defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionOverrides {
    pub seed: Option<u64>,
    pub backend: Option<Backend>,
    pub modality: Option<Modality>,
    pub noise: Option<NoiseSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Exchange {
    pub utterance: String,
    pub response: RenderedOutput,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub session_id: String,
    pub phase: Phase,
    pub closed: bool,
    pub context: Context,
    pub history: Vec<Exchange>,
    pub rng_seed: u64,
    pub backend: Backend,
    pub modality: Modality,
    pub noise: NoiseSpec,
}

pub fn session_id_for(seed_value: u64) -> String {
    format!("{:016x}", seed::mix64(seed_value))
}

/// Immutable resources shared by every session.
#[derive(Debug)]
pub struct Engine {
    config: SessionConfig,
    lexicon: Lexicon,
    model: NGramModel,
    case_base: CaseBase,
    translators: BTreeMap<Backend, TrainedAssociator>,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Startup {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn startup(path: &Path) -> impl FnOnce(Error) -> Error + '_ {
    move |e| Error::Startup {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

impl Engine {
    /// Load resources and train one translator per backend on the case
    /// base's request phrases.
    pub fn start(config: SessionConfig) -> Result<Engine> {
        config.noise.validate()?;
        if config.slots == 0 {
            return Err(Error::Config("slots must be at least 1".into()));
        }
        if !(config.phase_boost > 0.0 && config.phase_boost.is_finite()) {
            return Err(Error::Config("phase_boost must be positive".into()));
        }
        let lexicon = load_lexicon(&read(&config.lexicon)?).map_err(startup(&config.lexicon))?;
        let model = NGramModel::from_json(&read(&config.model)?).map_err(startup(&config.model))?;
        let case_base = CaseBase::from_json(&read(&config.case_base)?).map_err(startup(&config.case_base))?;
        if case_base.is_empty() {
            return Err(startup(&config.case_base)(Error::CaseBase("no cases".into())));
        }
        let items = case_base
            .cases()
            .iter()
            .map(|c| {
                let seq = text_to_phonemes(&c.request_words.join(" "), &lexicon)?;
                if seq.len() > config.slots {
                    return Err(Error::Capacity {
                        len: seq.len(),
                        slots: config.slots,
                    });
                }
                Ok(TrainingItem {
                    input: encode_truncated(&seq, config.slots),
                    label: c.id.clone(),
                    target: c.request_pattern.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()
            .map_err(startup(&config.case_base))?;
        let mut translators = BTreeMap::new();
        for backend in Backend::ALL {
            translators.insert(backend, Associator::new(backend, config.assoc.clone()).train(&items)?);
        }
        Ok(Engine {
            config,
            lexicon,
            model,
            case_base,
            translators,
        })
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    pub fn case_base(&self) -> &CaseBase {
        &self.case_base
    }

    pub fn translator(&self, backend: Backend) -> &TrainedAssociator {
        &self.translators[&backend]
    }

    pub fn open_session(&self, overrides: &SessionOverrides) -> Result<SessionState> {
        let noise = overrides.noise.unwrap_or(self.config.noise);
        noise.validate()?;
        let rng_seed = overrides
            .seed
            .or(self.config.seed)
            .unwrap_or_else(rand::random::<u64>);
        Ok(SessionState {
            session_id: session_id_for(rng_seed),
            phase: Phase::Intake,
            closed: false,
            context: Context::new(),
            history: Vec::new(),
            rng_seed,
            backend: overrides.backend.unwrap_or(self.config.backend),
            modality: overrides.modality.unwrap_or(self.config.modality),
            noise,
        })
    }

    /// Cases tagged with the current phase get `phase_boost`, all others 1.
    pub fn prior_for(&self, phase: Phase) -> Prior {
        self.case_base
            .cases()
            .iter()
            .map(|c| {
                let w = if c.tag("phase") == Some(phase.name()) {
                    self.config.phase_boost
                } else {
                    1.0
                };
                (c.id.clone(), w)
            })
            .collect()
    }

    /// Run one utterance. Unknown words and undecodable input yield a
    /// clarification without changing phase. Stage failures return an error
    /// and leave the state untouched.
    pub fn process_utterance(&self, state: &mut SessionState, text: &str) -> Result<RenderedOutput> {
        if state.closed {
            return Err(Error::SessionClosed);
        }
        let turn = state.history.len() as u64;
        let turn_seed = seed::derive(state.rng_seed, turn);
        let mut context = state.context.clone();
        context.insert("phase".into(), state.phase.name().into());
        context.insert("turn".into(), (turn + 1).to_string());

        let response = match self.respond(state, &context, text, turn_seed)? {
            Respond::Clarify(out) => out,
            Respond::Answer(out, advance) => {
                if advance {
                    match state.phase.next() {
                        Some(p) => state.phase = p,
                        None => state.closed = true,
                    }
                }
                out
            }
        };
        state.context = context;
        state.history.push(Exchange {
            utterance: text.to_string(),
            response: response.clone(),
        });
        Ok(response)
    }

    fn respond(&self, state: &SessionState, context: &Context, text: &str, turn_seed: u64) -> Result<Respond> {
        let clean = match text_to_phonemes(text, &self.lexicon) {
            Ok(seq) => seq,
            Err(Error::OutOfVocabulary(token)) => {
                return Ok(Respond::Clarify(clarification(
                    "out_of_vocabulary",
                    &token,
                    state.modality,
                    Vec::new(),
                )))
            }
            Err(e) => return Err(e.at("parse")),
        };
        if clean.is_empty() {
            return Ok(Respond::Clarify(clarification("empty", text.trim(), state.modality, Vec::new())));
        }
        let heard = apply_noise(&clean, &state.noise.with_seed(seed::derive(turn_seed, 1)));
        let decoder = Decoder::new(&self.lexicon, &self.model, self.config.decode).map_err(|e| e.at("decode"))?;
        let decoded = match decoder.decode(&heard, 1) {
            Ok(d) if !d.words.is_empty() => d,
            Ok(_) | Err(Error::NoParse { .. }) => {
                return Ok(Respond::Clarify(clarification(
                    "no_parse",
                    &heard.to_string(),
                    state.modality,
                    Vec::new(),
                )))
            }
            Err(e) => return Err(e.at("decode")),
        };
        let decode_record = StageRecord::Decode {
            phonemes: heard.to_string(),
            words: decoded.words.clone(),
            score: Score(decoded.score),
            edits: decoded.edits,
        };
        let canonical = text_to_phonemes(&decoded.words.join(" "), &self.lexicon).map_err(|e| e.at("decode"))?;
        let pattern = encode_truncated(&canonical, self.config.slots);
        let config = InferConfig {
            modality: state.modality,
            rng_seed: seed::derive(turn_seed, 2),
            ..self.config.infer.clone()
        };
        let mut out = infer(
            &self.case_base,
            &self.translators[&state.backend],
            &pattern,
            context,
            &self.prior_for(state.phase),
            &config,
        )?;
        out.trace.insert(0, decode_record);
        let advance = out
            .case_id
            .as_deref()
            .and_then(|id| self.case_base.get(id))
            .is_some_and(|c| c.tag("phase_advance") == Some("true"));
        Ok(Respond::Answer(out, advance))
    }
}

enum Respond {
    Clarify(RenderedOutput),
    Answer(RenderedOutput, bool),
}
