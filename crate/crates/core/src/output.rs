//! Output driver: the response shapes handed back to callers, plus the
//! per-stage trace.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::value::RawValue;

use crate::error::{Error, Result};

/// A score that serializes with exactly four decimal places.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Score(pub f64);

impl Serialize for Score {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return serializer.serialize_none();
        }
        let raw = RawValue::from_string(format!("{:.4}", self.0)).map_err(serde::ser::Error::custom)?;
        raw.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Score {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        Option::<f64>::deserialize(deserializer).map(|v| Score(v.unwrap_or(f64::NAN)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Modality {
    #[serde(rename = "text")]
    Text,
    #[serde(rename = "visual-text")]
    VisualText,
}

impl Modality {
    pub fn name(self) -> &'static str {
        match self {
            Modality::Text => "text",
            Modality::VisualText => "visual-text",
        }
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Modality {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(Modality::Text),
            "visual-text" => Ok(Modality::VisualText),
            other => Err(Error::UnsupportedModality(other.to_string())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputKind {
    Response,
    Clarification,
}

/// Character range `[start, end)` within the display body.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisplayPayload {
    pub title: String,
    pub body: String,
    pub emphasis: Vec<Span>,
    pub clarify: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedScore {
    pub id: String,
    pub score: Score,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "stage", rename_all = "lowercase")]
pub enum StageRecord {
    Decode {
        phonemes: String,
        words: Vec<String>,
        score: Score,
        edits: usize,
    },
    Translate {
        backend: String,
        output: String,
        readout: Vec<RankedScore>,
    },
    Retrieve {
        candidates: Vec<RankedScore>,
    },
    Correlate {
        posterior: Vec<RankedScore>,
    },
    Adapt {
        case_id: String,
        template: String,
        text: String,
    },
    Clarify {
        reason: String,
        echo: String,
    },
    Output {
        modality: Modality,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenderedOutput {
    pub text: String,
    pub modality: Modality,
    pub kind: OutputKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub case_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub display: Option<DisplayPayload>,
    pub trace: Vec<StageRecord>,
}

pub const DEFAULT_TITLE: &str = "Response";

/// Strip `*emphasis*` markers, returning the plain body and the emphasised
/// character spans. An unmatched trailing `*` is kept literally.
pub fn parse_emphasis(text: &str) -> (String, Vec<Span>) {
    let chars: Vec<char> = text.chars().collect();
    let mut body = String::new();
    let mut spans = Vec::new();
    let mut len = 0;
    let mut i = 0;
    while i < chars.len() {
        if chars[i] == '*' {
            if let Some(close) = chars[i + 1..].iter().position(|&c| c == '*') {
                let inner = &chars[i + 1..i + 1 + close];
                spans.push(Span {
                    start: len,
                    end: len + inner.len(),
                });
                body.extend(inner);
                len += inner.len();
                i += close + 2;
                continue;
            }
        }
        body.push(chars[i]);
        len += 1;
        i += 1;
    }
    (body, spans)
}

/// Wrap a final text for the requested modality.
pub fn drive_output(text: &str, modality: &str) -> Result<RenderedOutput> {
    let modality: Modality = modality.parse()?;
    Ok(render(text, modality, OutputKind::Response, DEFAULT_TITLE, None, Vec::new()))
}

pub(crate) fn render(
    text: &str,
    modality: Modality,
    kind: OutputKind,
    title: &str,
    case_id: Option<String>,
    mut trace: Vec<StageRecord>,
) -> RenderedOutput {
    let display = (modality == Modality::VisualText).then(|| {
        let (body, emphasis) = parse_emphasis(text);
        DisplayPayload {
            title: title.to_string(),
            body,
            emphasis,
            clarify: kind == OutputKind::Clarification,
        }
    });
    trace.push(StageRecord::Output { modality });
    RenderedOutput {
        text: text.to_string(),
        modality,
        kind,
        case_id,
        display,
        trace,
    }
}

/// Clarification request echoing what could not be understood.
pub fn clarification(reason: &str, echo: &str, modality: Modality, mut trace: Vec<StageRecord>) -> RenderedOutput {
    let text = format!("I did not catch \"{echo}\". Could you say that another way?");
    trace.push(StageRecord::Clarify {
        reason: reason.to_string(),
        echo: echo.to_string(),
    });
    render(&text, modality, OutputKind::Clarification, "Clarify", None, trace)
}
