//! Think/answer tag format.
//!
//! A well-formed output is exactly one `<think>…</think>` block followed by
//! exactly one `<answer>…</answer>` block. Whitespace may surround or separate
//! the blocks; any other text outside them voids the format.

use crate::types::StructuredOutput;

const THINK_OPEN: &str = "<think>";
const THINK_CLOSE: &str = "</think>";
const ANSWER_OPEN: &str = "<answer>";
const ANSWER_CLOSE: &str = "</answer>";
const TAGS: [&str; 4] = [THINK_OPEN, THINK_CLOSE, ANSWER_OPEN, ANSWER_CLOSE];

pub fn parse_structured_output(text: &str) -> Option<StructuredOutput> {
    let rest = text.trim().strip_prefix(THINK_OPEN)?;
    let think_end = rest.find(THINK_CLOSE)?;
    let think = &rest[..think_end];
    let rest = rest[think_end + THINK_CLOSE.len()..].trim_start().strip_prefix(ANSWER_OPEN)?;
    let answer = rest.strip_suffix(ANSWER_CLOSE)?;
    if TAGS.iter().any(|t| think.contains(t) || answer.contains(t)) {
        return None;
    }
    Some(StructuredOutput { think: think.to_string(), answer: answer.to_string() })
}

/// Canonical rendering: `<think>{think}</think> <answer>{answer}</answer>`.
pub fn render_structured_output(out: &StructuredOutput) -> String {
    format!("{THINK_OPEN}{}{THINK_CLOSE} {ANSWER_OPEN}{}{ANSWER_CLOSE}", out.think, out.answer)
}

/// The answer payload when the text is well-formed, otherwise the raw text.
pub fn answer_region(text: &str) -> std::borrow::Cow<'_, str> {
    match parse_structured_output(text) {
        Some(out) => std::borrow::Cow::Owned(out.answer),
        None => std::borrow::Cow::Borrowed(text),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn well_formed() {
        let out = parse_structured_output("<think>reason</think> <answer>2 meters</answer>").unwrap();
        assert_eq!(out.think, "reason");
        assert_eq!(out.answer, "2 meters");
    }

    #[test]
    fn malformed_cases() {
        assert!(parse_structured_output("2 meters").is_none());
        assert!(parse_structured_output("<answer>x</answer><think>y</think>").is_none());
        assert!(parse_structured_output("").is_none());
        assert!(parse_structured_output("<answer>x</answer>").is_none());
        assert!(parse_structured_output("<think>a</think><answer>b</answer> trailing").is_none());
        assert!(parse_structured_output("lead <think>a</think><answer>b</answer>").is_none());
        assert!(parse_structured_output("<think>a</think><think>a</think><answer>b</answer>").is_none());
        assert!(parse_structured_output("<think>a</think><answer>b</answer><answer>c</answer>").is_none());
        assert!(parse_structured_output("<think>a</think> x <answer>b</answer>").is_none());
    }

    #[test]
    fn whitespace_between_and_around_blocks() {
        let out = parse_structured_output("\n  <think> a b </think>\n\n<answer> c </answer>  ").unwrap();
        assert_eq!(out.think, " a b ");
        assert_eq!(out.answer, " c ");
        assert!(parse_structured_output("<think></think><answer></answer>").is_some());
    }

    proptest! {
        #[test]
        fn parse_is_total(s in "\\PC*") {
            let _ = parse_structured_output(&s);
        }

        #[test]
        fn parse_is_total_near_tags(parts in proptest::collection::vec(
            prop_oneof![Just("<think>"), Just("</think>"), Just("<answer>"), Just("</answer>"),
                        Just(" "), Just("x"), Just("é"), Just("<"), Just(">")], 0..12)) {
            let s: String = parts.concat();
            if let Some(out) = parse_structured_output(&s) {
                prop_assert_eq!(parse_structured_output(&render_structured_output(&out)), Some(out));
            }
        }

        #[test]
        fn render_parse_roundtrip(think in "[^<>]*", answer in "[^<>]*") {
            let out = StructuredOutput { think, answer };
            prop_assert_eq!(parse_structured_output(&render_structured_output(&out)), Some(out));
        }
    }
}
