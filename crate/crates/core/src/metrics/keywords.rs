//! Keyword lists for task-type classification, yes/no normalization, and
//! reasoning-word counting, plus the phrase matcher they share.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::types::AnswerType;

pub const BBOX_KEYWORDS: [&str; 11] = [
    "bounding box",
    "box coordinates",
    "coordinates",
    "bbox",
    "where is",
    "x coordinate",
    "y coordinate",
    "draw a box",
    "top left",
    "bottom right",
    "region of",
];

pub const YES_ALIASES: [&str; 8] =
    ["yes", "it is", "appears to be", "looks like", "seems like", "definitely", "likely", "indeed"];

pub const NO_ALIASES: [&str; 7] =
    ["no", "not", "doesn't", "isn't", "unlikely", "i don't think", "probably not"];

pub const DISTANCE_KEYWORDS: [&str; 13] = [
    "how far",
    "distance between",
    "distance from",
    "which is closer",
    "which is farther",
    "closer",
    "further",
    "nearer",
    "farthest",
    "measure the distance",
    "what is the distance",
    "spacing between",
    "gap between",
];

pub const COT_KEYWORDS: [&str; 41] = [
    "likely",
    "probably",
    "possibly",
    "maybe",
    "might be",
    "could be",
    "seems",
    "appears to",
    "i think",
    "i guess",
    "i'm not sure",
    "because",
    "since",
    "therefore",
    "thus",
    "so",
    "hence",
    "as a result",
    "that means",
    "which implies",
    "accordingly",
    "first",
    "next",
    "then",
    "finally",
    "in the first step",
    "in the second step",
    "after that",
    "subsequently",
    "clearly",
    "obviously",
    "evidently",
    "definitely",
    "in fact",
    "it is important to note",
    "if",
    "suppose",
    "assuming that",
    "in case",
    "let's say",
    "consider that",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordRuleSet {
    pub bbox_keywords: Vec<String>,
    pub yes_aliases: Vec<String>,
    pub no_aliases: Vec<String>,
    pub distance_keywords: Vec<String>,
    pub cot_keywords: Vec<String>,
}

fn owned(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

impl Default for KeywordRuleSet {
    fn default() -> Self {
        KeywordRuleSet {
            bbox_keywords: owned(&BBOX_KEYWORDS),
            yes_aliases: owned(&YES_ALIASES),
            no_aliases: owned(&NO_ALIASES),
            distance_keywords: owned(&DISTANCE_KEYWORDS),
            cot_keywords: owned(&COT_KEYWORDS),
        }
    }
}

impl KeywordRuleSet {
    /// Load an override file; lists are lowercased on load.
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut rules: KeywordRuleSet = serde_json::from_str(&text)?;
        for list in [
            &mut rules.bbox_keywords,
            &mut rules.yes_aliases,
            &mut rules.no_aliases,
            &mut rules.distance_keywords,
            &mut rules.cot_keywords,
        ] {
            for s in list.iter_mut() {
                *s = normalize(s);
            }
        }
        Ok(rules)
    }
}

/// Lowercase and fold typographic apostrophes so "don’t" matches "don't".
pub fn normalize(text: &str) -> String {
    text.to_lowercase().replace(['\u{2019}', '\u{2018}'], "'")
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

fn at_boundary(text: &str, start: usize, end: usize) -> bool {
    let before = text[..start].chars().next_back();
    let after = text[end..].chars().next();
    before.map_or(true, |c| !is_word_char(c)) && after.map_or(true, |c| !is_word_char(c))
}

/// A phrase occurrence: byte span in the normalized text and the index of
/// the phrase in the list it came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhraseMatch {
    pub start: usize,
    pub end: usize,
    pub phrase: usize,
}

/// Leftmost-longest, non-overlapping, word-boundary matches of `phrases`
/// in an already normalized `text`.
pub fn find_phrases(text: &str, phrases: &[&str]) -> Vec<PhraseMatch> {
    let mut out = Vec::new();
    let mut pos = 0;
    while pos < text.len() {
        let mut best: Option<PhraseMatch> = None;
        for (idx, p) in phrases.iter().enumerate() {
            if p.is_empty() || !text[pos..].starts_with(p) {
                continue;
            }
            let end = pos + p.len();
            if !at_boundary(text, pos, end) {
                continue;
            }
            if best.map_or(true, |b| end > b.end) {
                best = Some(PhraseMatch { start: pos, end, phrase: idx });
            }
        }
        match best {
            Some(m) => {
                out.push(m);
                pos = m.end;
            }
            None => {
                pos += text[pos..].chars().next().map_or(1, char::len_utf8);
            }
        }
    }
    out
}

fn as_strs(list: &[String]) -> Vec<&str> {
    list.iter().map(String::as_str).collect()
}

pub fn contains_any(text: &str, phrases: &[String]) -> bool {
    !find_phrases(&normalize(text), &as_strs(phrases)).is_empty()
}

pub fn count_phrases(text: &str, phrases: &[String]) -> usize {
    find_phrases(&normalize(text), &as_strs(phrases)).len()
}

/// Yes/no polarity of a free-text answer. Both alias lists are scanned
/// together, leftmost-longest; any negative match makes the answer No.
pub fn yes_no_polarity(text: &str, rules: &KeywordRuleSet) -> Option<bool> {
    let mut combined: Vec<&str> = as_strs(&rules.yes_aliases);
    let n_yes = combined.len();
    combined.extend(as_strs(&rules.no_aliases));
    let matches = find_phrases(&normalize(text), &combined);
    if matches.is_empty() {
        None
    } else {
        Some(!matches.iter().any(|m| m.phrase >= n_yes))
    }
}

/// Bbox keywords first, then distance keywords, then a yes/no alias in the
/// reference answer; everything else is free-form.
pub fn classify_task_type(question: &str, reference_answer: &str, rules: &KeywordRuleSet) -> AnswerType {
    if contains_any(question, &rules.bbox_keywords) {
        AnswerType::Bbox
    } else if contains_any(question, &rules.distance_keywords) {
        AnswerType::Distance
    } else if yes_no_polarity(reference_answer, rules).is_some() {
        AnswerType::YesNo
    } else {
        AnswerType::FreeForm
    }
}
