use std::path::Path;

use super::CommandError;

/// Supported language tags with display names, loaded from a plain-text list
/// of `<tag> <name>` lines. Blank lines and `#` comments are skipped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LanguageSet {
    entries: Vec<(String, String)>,
}

impl Default for LanguageSet {
    fn default() -> Self {
        LanguageSet::parse(
            "en English\nhi Hindi\nmr Marathi\nfr French\nes Spanish\nde German\n",
        )
        .expect("built-in language list is well formed")
    }
}

impl LanguageSet {
    pub fn parse(text: &str) -> Result<Self, CommandError> {
        let mut entries: Vec<(String, String)> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (tag, name) = match line.split_once(char::is_whitespace) {
                Some((t, n)) => (t, n.trim()),
                None => (line, line),
            };
            if !is_language_tag(tag) {
                return Err(CommandError::Config(format!(
                    "line {}: '{tag}' is not a language tag",
                    lineno + 1
                )));
            }
            if entries.iter().any(|(t, _)| t == tag) {
                return Err(CommandError::Config(format!(
                    "line {}: duplicate tag '{tag}'",
                    lineno + 1
                )));
            }
            entries.push((tag.to_string(), name.to_string()));
        }
        if entries.is_empty() {
            return Err(CommandError::Config("language list is empty".into()));
        }
        Ok(LanguageSet { entries })
    }

    pub fn load(path: &Path) -> Result<Self, CommandError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CommandError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn contains(&self, tag: &str) -> bool {
        self.entries.iter().any(|(t, _)| t == tag)
    }

    /// Display name, falling back to the tag itself.
    pub fn name<'a>(&'a self, tag: &'a str) -> &'a str {
        self.entries
            .iter()
            .find(|(t, _)| t == tag)
            .map_or(tag, |(_, n)| n.as_str())
    }

    pub fn tags(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(t, _)| t.as_str())
    }
}

/// BCP-47-style shape: alphanumeric subtags of 1 to 8 characters joined by `-`,
/// the first purely alphabetic.
fn is_language_tag(tag: &str) -> bool {
    let mut parts = tag.split('-');
    let primary_ok = parts
        .next()
        .is_some_and(|p| (2..=8).contains(&p.len()) && p.chars().all(|c| c.is_ascii_alphabetic()));
    primary_ok && parts.all(|p| (1..=8).contains(&p.len()) && p.chars().all(|c| c.is_ascii_alphanumeric()))
}
