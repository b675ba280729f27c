//! Line mode: one utterance per input line, one JSON object per output line.

use std::io::{BufRead, Write};

use autotrain_core::session::{Engine, SessionState};

use crate::ErrorBody;

/// Serialize the response (or error) for one utterance.
pub fn respond(engine: &Engine, state: &mut SessionState, text: &str) -> String {
    match engine.process_utterance(state, text) {
        Ok(out) => serde_json::to_string(&out).expect("output serializes"),
        Err(e) => serde_json::to_string(&ErrorBody::from(&e)).expect("error serializes"),
    }
}

/// Blank lines are skipped. Stops at end of input.
pub fn run(engine: &Engine, state: &mut SessionState, input: impl BufRead, mut output: impl Write) -> std::io::Result<()> {
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        writeln!(output, "{}", respond(engine, state, &line))?;
        output.flush()?;
    }
    Ok(())
}
