//! Voice-command language: the language dialog, translation and speech
//! seams, the command grammar and intent-to-motion planning.

mod dialog;
mod grammar;
mod languages;
mod plan;
mod translate;

pub use dialog::{advance_dialog, DialogAction, DialogEvent, DialogPhase, DialogState, Prompt};
pub use grammar::{
    normalize_transcript, parse_intent, DriveDirection, Intent, TurnDirection, DEFAULT_ANGLE_DEG,
    DEFAULT_DISTANCE_M, MAX_ANGLE_DEG, MAX_DISTANCE_M,
};
pub use languages::LanguageSet;
pub use plan::{intent_to_plan, plan_duration, CruiseLimits, PlanSegment};
pub use translate::{
    translate_command, RecordingSynth, SpeechAck, SpeechSynthClient, StubTranslator, SynthError,
    TranslateError, TranslatorClient,
};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CommandError {
    #[error("unrecognized command: {0}")]
    UnrecognizedCommand(String),
    #[error("out of range: {0}")]
    OutOfRange(String),
    #[error("translation unavailable: {0}")]
    TranslationUnavailable(String),
    #[error("configuration error: {0}")]
    Config(String),
}

impl CommandError {
    /// Stable error name used in operator API responses.
    pub fn kind(&self) -> &'static str {
        match self {
            CommandError::UnrecognizedCommand(_) => "UnrecognizedCommand",
            CommandError::OutOfRange(_) => "OutOfRange",
            CommandError::TranslationUnavailable(_) => "TranslationUnavailable",
            CommandError::Config(_) => "Config",
        }
    }
}
