//! Language confirmation dialog.
//!
//! A transcript arrives with a detected language; the user confirms it (or
//! names the source language), then picks the language to translate to. Once
//! both are known the dialog is `Ready` and every further transcript is
//! translated and dispatched directly.

use serde::{Deserialize, Serialize};

use super::LanguageSet;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "phase")]
pub enum DialogPhase {
    Idle,
    AwaitSourceConfirm { detected: String },
    AwaitManualSource,
    AwaitTargetLanguage { source: String },
    Ready { source: String, target: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DialogState {
    #[serde(flatten)]
    pub phase: DialogPhase,
    pub pending_transcript: Option<String>,
}

impl Default for DialogState {
    fn default() -> Self {
        DialogState::idle()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum DialogEvent {
    TranscriptReceived { text: String, detected_lang: String },
    UserAck(bool),
    SourceProvided(String),
    TargetProvided(String),
    Reset,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Prompt {
    ConfirmSource { lang: String, text: String },
    AskSource { text: String },
    AskTarget { source: String, text: String },
    AwaitCommand { text: String },
}

impl Prompt {
    pub fn text(&self) -> &str {
        match self {
            Prompt::ConfirmSource { text, .. }
            | Prompt::AskSource { text }
            | Prompt::AskTarget { text, .. }
            | Prompt::AwaitCommand { text } => text,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum DialogAction {
    None,
    Prompt(Prompt),
    /// The event did not fit the current phase; the phase's prompt is repeated.
    Reprompt(Prompt),
    TranslateAndDispatch {
        transcript: String,
        source: String,
        target: String,
    },
}

impl DialogState {
    pub fn idle() -> Self {
        DialogState {
            phase: DialogPhase::Idle,
            pending_transcript: None,
        }
    }

    /// A dialog that has already settled on a language pair.
    pub fn ready(source: &str, target: &str) -> Self {
        DialogState {
            phase: DialogPhase::Ready {
                source: source.to_string(),
                target: target.to_string(),
            },
            pending_transcript: None,
        }
    }

    pub fn phase_name(&self) -> &'static str {
        match self.phase {
            DialogPhase::Idle => "Idle",
            DialogPhase::AwaitSourceConfirm { .. } => "AwaitSourceConfirm",
            DialogPhase::AwaitManualSource => "AwaitManualSource",
            DialogPhase::AwaitTargetLanguage { .. } => "AwaitTargetLanguage",
            DialogPhase::Ready { .. } => "Ready",
        }
    }

    /// The prompt that belongs to the current phase.
    pub fn current_prompt(&self, langs: &LanguageSet) -> Prompt {
        match &self.phase {
            DialogPhase::Idle => Prompt::AwaitCommand {
                text: "say a command".into(),
            },
            DialogPhase::AwaitSourceConfirm { detected } => confirm_prompt(detected, langs),
            DialogPhase::AwaitManualSource => ask_source_prompt(),
            DialogPhase::AwaitTargetLanguage { source } => ask_target_prompt(source),
            DialogPhase::Ready { source, target } => Prompt::AwaitCommand {
                text: format!("ready, {} to {}", langs.name(source), langs.name(target)),
            },
        }
    }

    /// Total transition function. Pairs that do not fit the phase leave the
    /// state untouched and re-prompt.
    pub fn advance(&self, event: &DialogEvent, langs: &LanguageSet) -> (DialogState, DialogAction) {
        use DialogEvent as E;
        use DialogPhase as P;

        let with = |phase: P, pending: Option<String>| DialogState {
            phase,
            pending_transcript: pending,
        };
        let pending = self.pending_transcript.clone();

        match (&self.phase, event) {
            (_, E::Reset) => (DialogState::idle(), DialogAction::None),

            (P::Idle, E::TranscriptReceived { text, detected_lang }) if !text.trim().is_empty() => {
                let text = Some(text.trim().to_string());
                if langs.contains(detected_lang) {
                    (
                        with(P::AwaitSourceConfirm { detected: detected_lang.clone() }, text),
                        DialogAction::Prompt(confirm_prompt(detected_lang, langs)),
                    )
                } else {
                    (with(P::AwaitManualSource, text), DialogAction::Prompt(ask_source_prompt()))
                }
            }

            (P::AwaitSourceConfirm { detected }, E::UserAck(true)) => (
                with(P::AwaitTargetLanguage { source: detected.clone() }, pending),
                DialogAction::Prompt(ask_target_prompt(detected)),
            ),
            (P::AwaitSourceConfirm { .. }, E::UserAck(false)) => (
                with(P::AwaitManualSource, pending),
                DialogAction::Prompt(ask_source_prompt()),
            ),

            (P::AwaitManualSource, E::SourceProvided(lang)) if langs.contains(lang) => (
                with(P::AwaitTargetLanguage { source: lang.clone() }, pending),
                DialogAction::Prompt(ask_target_prompt(lang)),
            ),

            (P::AwaitTargetLanguage { source }, E::TargetProvided(target))
                if langs.contains(target) =>
            {
                let ready = with(
                    P::Ready {
                        source: source.clone(),
                        target: target.clone(),
                    },
                    pending.clone(),
                );
                let action = DialogAction::TranslateAndDispatch {
                    transcript: pending.unwrap_or_default(),
                    source: source.clone(),
                    target: target.clone(),
                };
                (ready, action)
            }

            (P::Ready { source, target }, E::TranscriptReceived { text, .. })
                if !text.trim().is_empty() =>
            {
                let text = text.trim().to_string();
                (
                    with(self.phase.clone(), Some(text.clone())),
                    DialogAction::TranslateAndDispatch {
                        transcript: text,
                        source: source.clone(),
                        target: target.clone(),
                    },
                )
            }

            _ => (self.clone(), DialogAction::Reprompt(self.current_prompt(langs))),
        }
    }
}

/// Free-function form of [`DialogState::advance`].
pub fn advance_dialog(
    state: &DialogState,
    event: &DialogEvent,
    langs: &LanguageSet,
) -> (DialogState, DialogAction) {
    state.advance(event, langs)
}

fn confirm_prompt(lang: &str, langs: &LanguageSet) -> Prompt {
    Prompt::ConfirmSource {
        lang: lang.to_string(),
        text: format!("detected {}, confirm?", langs.name(lang)),
    }
}

fn ask_source_prompt() -> Prompt {
    Prompt::AskSource {
        text: "which language are you speaking?".into(),
    }
}

fn ask_target_prompt(source: &str) -> Prompt {
    Prompt::AskTarget {
        source: source.to_string(),
        text: "which language should I translate to?".into(),
    }
}
