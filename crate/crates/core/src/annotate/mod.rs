//! LLM annotation of word pairs: prompt rendering, response parsing and a
//! cached, concurrent batch client for OpenAI-compatible chat endpoints.

mod batch;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pairs::CandidatePair;

pub use batch::{annotate_batch, load_cache, quarantine_path, AnnotationOutcome, AnnotationStats, EndpointConfig, Quarantined};

/// User prompt with `{word1}` / `{word2}` placeholders.
pub const DEFAULT_TEMPLATE: &str = include_str!("../../assets/annotation_prompt.txt");
const SYSTEM_MESSAGE_RAW: &str = include_str!("../../assets/system_prompt.txt");

pub fn system_message() -> &'static str {
    SYSTEM_MESSAGE_RAW.trim_end()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    text: String,
}

impl PromptTemplate {
    pub fn new(text: impl Into<String>) -> Result<Self> {
        let text = text.into();
        for ph in ["{word1}", "{word2}"] {
            if !text.contains(ph) {
                return Err(Error::InvalidInput(format!("prompt template lacks the {ph} placeholder")));
            }
        }
        Ok(Self { text })
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn render(&self, word1: &str, word2: &str) -> String {
        self.text.replace("{word1}", word1).replace("{word2}", word2)
    }
}

impl Default for PromptTemplate {
    fn default() -> Self {
        Self::new(DEFAULT_TEMPLATE).expect("shipped template has placeholders")
    }
}

/// Renders the shipped template for a pair.
pub fn render_prompt(pair: &CandidatePair) -> String {
    PromptTemplate::default().render(&pair.w1, &pair.w2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParsedScores {
    pub sim: f64,
    pub rel: f64,
    pub reason: Option<String>,
}

/// Why a response could not be used.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseFailure(pub String);

impl std::fmt::Display for ParseFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

/// Strips list, quote, heading and emphasis markers from the start of a line.
fn strip_markup(line: &str) -> &str {
    line.trim().trim_start_matches(|c: char| matches!(c, '*' | '-' | '>' | '#' | '`' | '_') || c.is_whitespace())
}

/// Returns the text after `KEY:` if the (stripped) line starts with that
/// label, case-insensitively; emphasis around the label is allowed.
fn field<'a>(line: &'a str, key: &str) -> Option<&'a str> {
    let s = strip_markup(line);
    if s.len() < key.len() || !s[..key.len()].eq_ignore_ascii_case(key) {
        return None;
    }
    let rest = s[key.len()..].trim_start_matches(['*', '_']).trim_start();
    let rest = rest.strip_prefix(':')?;
    Some(rest.trim_start_matches(['*', '_']).trim())
}

fn number(value: &str) -> Option<f64> {
    let value = value.trim_start();
    let end = value
        .find(|c: char| !(c.is_ascii_digit() || matches!(c, '.' | '-' | '+')))
        .unwrap_or(value.len());
    let x: f64 = value[..end].trim_end_matches('.').parse().ok()?;
    x.is_finite().then(|| x.clamp(0.0, 1.0))
}

/// Extracts the first `SIM:` and `REL:` values (clamped to [0, 1]) and the
/// first `REASON:` text.
pub fn parse_response(text: &str) -> std::result::Result<ParsedScores, ParseFailure> {
    let mut sim = None;
    let mut rel = None;
    let mut reason = None;
    for line in text.lines() {
        if sim.is_none() {
            if let Some(v) = field(line, "SIM") {
                sim = Some(number(v).ok_or_else(|| ParseFailure(format!("SIM value {v:?} is not a number")))?);
                continue;
            }
        }
        if rel.is_none() {
            if let Some(v) = field(line, "REL") {
                rel = Some(number(v).ok_or_else(|| ParseFailure(format!("REL value {v:?} is not a number")))?);
                continue;
            }
        }
        if reason.is_none() {
            if let Some(v) = field(line, "REASON") {
                reason = Some(v.trim_end_matches(['*', '`']).trim().to_string());
            }
        }
    }
    match (sim, rel) {
        (Some(sim), Some(rel)) => Ok(ParsedScores { sim, rel, reason }),
        (None, _) => Err(ParseFailure("no SIM line".into())),
        (_, None) => Err(ParseFailure("no REL line".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pairs::Source;

    #[test]
    fn renders_words_into_task_section() {
        let pair = CandidatePair::new("coffee", "mug", Source::CnRelatedTo).unwrap();
        let p = render_prompt(&pair);
        assert!(p.contains("WORD1: \"coffee\""));
        assert!(p.contains("WORD2: \"mug\""));
        let task = &p[p.find("# Task").unwrap()..p.find("# Rules").unwrap()];
        assert_eq!(task.matches("coffee").count(), 1);
        assert_eq!(task.matches("mug").count(), 1);
        let tail: Vec<&str> = p.trim_end().lines().rev().take(3).collect();
        assert_eq!(
            tail,
            vec![
                "REASON: <one sentence explaining BOTH scores>",
                "REL: <0.00-1.00>",
                "SIM: <0.00-1.00>"
            ]
        );
    }

    #[test]
    fn template_without_placeholders_is_rejected() {
        assert!(PromptTemplate::new("rate these words").is_err());
        assert!(PromptTemplate::new("only {word1}").is_err());
    }

    #[test]
    fn system_message_is_one_line() {
        assert!(system_message().starts_with("You are an expert linguist"));
        assert!(!system_message().contains('\n'));
    }

    #[test]
    fn plain_response() {
        let r = parse_response("SIM: 0.86\nREL: 0.39\nREASON: birds of prey.").unwrap();
        assert_eq!((r.sim, r.rel), (0.86, 0.39));
        assert_eq!(r.reason.as_deref(), Some("birds of prey."));
    }

    #[test]
    fn missing_fields_fail() {
        assert!(parse_response("sim 0.5").is_err());
        assert!(parse_response("SIM: 0.5").is_err());
        assert!(parse_response("SIM: high\nREL: 0.2").is_err());
    }

    #[test]
    fn out_of_range_values_are_clamped() {
        let r = parse_response("SIM: 1.20\nREL: -0.10").unwrap();
        assert_eq!((r.sim, r.rel), (1.0, 0.0));
    }
}
