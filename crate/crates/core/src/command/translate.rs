//! Translation and speech-synthesis client seams with deterministic stubs.

use std::collections::HashMap;
use std::path::Path;

use thiserror::Error;

use super::{normalize_transcript, CommandError, LanguageSet};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TranslateError {
    #[error("no translation for '{text}' from {source_lang} to {target}")]
    NoEntry {
        text: String,
        source_lang: String,
        target: String,
    },
    #[error("translator unavailable: {0}")]
    Unavailable(String),
}

pub trait TranslatorClient {
    /// Detected language tag and confidence in `[0, 1]`.
    fn detect(&self, text: &str) -> Result<(String, f64), TranslateError>;
    fn translate(&self, text: &str, source: &str, target: &str) -> Result<String, TranslateError>;
}

/// Static phrase table. Lookups are exact on the normalized transcript and
/// work in both directions of each entry.
#[derive(Debug, Clone, Default)]
pub struct StubTranslator {
    table: HashMap<(String, String, String), String>,
    origin: HashMap<String, String>,
}

impl StubTranslator {
    /// Parses tab-separated `source_lang, target_lang, source_text, target_text` rows.
    pub fn parse(tsv: &str) -> Result<Self, CommandError> {
        let mut t = StubTranslator::default();
        for (lineno, line) in tsv.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            let [src, tgt, src_text, tgt_text] = cols.as_slice() else {
                return Err(CommandError::Config(format!(
                    "phrase table line {}: expected 4 tab-separated columns, got {}",
                    lineno + 1,
                    cols.len()
                )));
            };
            t.insert(src.trim(), tgt.trim(), src_text, tgt_text);
        }
        Ok(t)
    }

    pub fn load(path: &Path) -> Result<Self, CommandError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CommandError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn insert(&mut self, source: &str, target: &str, source_text: &str, target_text: &str) {
        let (s, t) = (normalize_transcript(source_text), normalize_transcript(target_text));
        self.table
            .insert((source.into(), target.into(), s.clone()), t.clone());
        self.table
            .entry((target.into(), source.into(), t.clone()))
            .or_insert_with(|| s.clone());
        self.origin.entry(s).or_insert_with(|| source.into());
        self.origin.entry(t).or_insert_with(|| target.into());
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

impl TranslatorClient for StubTranslator {
    fn detect(&self, text: &str) -> Result<(String, f64), TranslateError> {
        let norm = normalize_transcript(text);
        if let Some(lang) = self.origin.get(&norm) {
            return Ok((lang.clone(), 1.0));
        }
        let devanagari = norm.chars().any(|c| ('\u{0900}'..='\u{097F}').contains(&c));
        Ok(if devanagari {
            ("hi".into(), 0.6)
        } else {
            ("en".into(), 0.5)
        })
    }

    fn translate(&self, text: &str, source: &str, target: &str) -> Result<String, TranslateError> {
        if source == target {
            return Ok(text.to_string());
        }
        let key = (source.to_string(), target.to_string(), normalize_transcript(text));
        self.table.get(&key).cloned().ok_or_else(|| TranslateError::NoEntry {
            text: text.to_string(),
            source_lang: source.to_string(),
            target: target.to_string(),
        })
    }
}

/// Translates a transcript for dispatch. Identity when the languages agree.
pub fn translate_command(
    transcript: &str,
    source: &str,
    target: &str,
    tc: &dyn TranslatorClient,
) -> Result<String, CommandError> {
    if source == target {
        return Ok(transcript.to_string());
    }
    tc.translate(transcript, source, target)
        .map_err(|e| CommandError::TranslationUnavailable(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpeechAck {
    pub lang: String,
    pub chars: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("unsupported speech language '{0}'")]
    UnsupportedLanguage(String),
    #[error("speech engine failed: {0}")]
    Engine(String),
}

pub trait SpeechSynthClient {
    fn speak(&mut self, text: &str, lang: &str) -> Result<SpeechAck, SynthError>;
}

/// Records utterances instead of producing audio.
#[derive(Debug, Clone, Default)]
pub struct RecordingSynth {
    supported: LanguageSet,
    pub spoken: Vec<(String, String)>,
}

impl RecordingSynth {
    pub fn new(supported: LanguageSet) -> Self {
        RecordingSynth {
            supported,
            spoken: Vec::new(),
        }
    }
}

impl SpeechSynthClient for RecordingSynth {
    fn speak(&mut self, text: &str, lang: &str) -> Result<SpeechAck, SynthError> {
        if !self.supported.contains(lang) {
            return Err(SynthError::UnsupportedLanguage(lang.to_string()));
        }
        self.spoken.push((lang.to_string(), text.to_string()));
        Ok(SpeechAck {
            lang: lang.to_string(),
            chars: text.chars().count(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shipped() -> StubTranslator {
        StubTranslator::parse(include_str!("../../../../data/phrases.tsv")).unwrap()
    }

    struct Down;
    impl TranslatorClient for Down {
        fn detect(&self, _: &str) -> Result<(String, f64), TranslateError> {
            Err(TranslateError::Unavailable("offline".into()))
        }
        fn translate(&self, _: &str, _: &str, _: &str) -> Result<String, TranslateError> {
            Err(TranslateError::Unavailable("offline".into()))
        }
    }

    #[test]
    fn identity_pair() {
        assert_eq!(translate_command("hello", "en", "en", &shipped()).unwrap(), "hello");
        assert_eq!(translate_command("hello", "en", "en", &Down).unwrap(), "hello");
    }

    #[test]
    fn stub_table_lookup() {
        assert_eq!(translate_command("आगे बढ़ो", "hi", "en", &shipped()).unwrap(), "move forward");
        assert_eq!(shipped().translate("move forward", "en", "hi").unwrap(), "आगे बढ़ो");
        assert!(matches!(
            shipped().translate("sing a song", "fr", "en"),
            Err(TranslateError::NoEntry { .. })
        ));
    }

    #[test]
    fn client_failure_surfaces() {
        assert!(matches!(
            translate_command("avance", "fr", "en", &Down),
            Err(CommandError::TranslationUnavailable(_))
        ));
    }

    #[test]
    fn detection_prefers_table_then_script() {
        let t = shipped();
        assert_eq!(t.detect("avance").unwrap(), ("fr".into(), 1.0));
        assert_eq!(t.detect("आगे बढ़ो").unwrap(), ("hi".into(), 1.0));
        assert_eq!(t.detect("नमस्ते").unwrap().0, "hi");
        let (lang, conf) = t.detect("turn left 30 degrees").unwrap();
        assert_eq!(lang, "en");
        assert!((0.0..=1.0).contains(&conf));
    }

    #[test]
    fn malformed_table_rejected() {
        assert!(StubTranslator::parse("hi\ten\tonly three").is_err());
    }

    #[test]
    fn synth_rejects_unsupported() {
        let mut s = RecordingSynth::new(LanguageSet::default());
        assert_eq!(s.speak("bonjour", "fr").unwrap().chars, 7);
        assert_eq!(s.speak("x", "tlh"), Err(SynthError::UnsupportedLanguage("tlh".into())));
        assert_eq!(s.spoken, vec![("fr".to_string(), "bonjour".to_string())]);
    }
}
