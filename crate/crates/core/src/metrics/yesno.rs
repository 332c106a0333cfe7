//! Yes/no accuracy with alias normalization and an optional judge fallback.

use serde::{Deserialize, Serialize};

use super::keywords::{yes_no_polarity, KeywordRuleSet};
use crate::format::answer_region;
use crate::services::JudgeClient;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YesNoCase {
    pub qa_id: String,
    pub pred: String,
    pub gt: bool,
    /// Reference answer text handed to the judge.
    pub gt_text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Correct,
    Incorrect,
    Unjudged,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct YesNoResult {
    pub accuracy: Option<f64>,
    pub correct: usize,
    pub judged: usize,
    pub via_judge: usize,
    /// Items whose judge call failed; excluded from the denominator.
    pub unjudged: Vec<String>,
}

pub fn judge_case(case: &YesNoCase, rules: &KeywordRuleSet, judge: Option<&dyn JudgeClient>) -> (Verdict, bool) {
    let pred = answer_region(&case.pred);
    if let Some(p) = yes_no_polarity(&pred, rules) {
        let v = if p == case.gt { Verdict::Correct } else { Verdict::Incorrect };
        return (v, false);
    }
    match judge {
        None => (Verdict::Incorrect, false),
        Some(j) => match j.judge(&pred, &case.gt_text) {
            Ok(true) => (Verdict::Correct, true),
            Ok(false) => (Verdict::Incorrect, true),
            Err(_) => (Verdict::Unjudged, true),
        },
    }
}

pub fn yesno_accuracy(cases: &[YesNoCase], rules: &KeywordRuleSet, judge: Option<&dyn JudgeClient>) -> YesNoResult {
    let mut out = YesNoResult::default();
    for case in cases {
        let (verdict, used_judge) = judge_case(case, rules, judge);
        if used_judge {
            out.via_judge += 1;
        }
        match verdict {
            Verdict::Correct => {
                out.correct += 1;
                out.judged += 1;
            }
            Verdict::Incorrect => out.judged += 1,
            Verdict::Unjudged => out.unjudged.push(case.qa_id.clone()),
        }
    }
    out.accuracy = (out.judged > 0).then(|| out.correct as f64 / out.judged as f64 * 100.0);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::services::ServiceError;

    fn case(pred: &str, gt: bool) -> YesNoCase {
        YesNoCase { qa_id: pred.into(), pred: pred.into(), gt, gt_text: if gt { "yes" } else { "no" }.into() }
    }

    struct Always(Result<bool, ()>);

    impl JudgeClient for Always {
        fn judge(&self, _pred: &str, _gt: &str) -> Result<bool, ServiceError> {
            self.0.map_err(|_| ServiceError::Unavailable { attempts: 1, message: "down".into() })
        }
    }

    #[test]
    fn alias_examples() {
        let rules = KeywordRuleSet::default();
        let r = yesno_accuracy(&[case("It appears to be", true), case("I don't think so", false)], &rules, None);
        assert_eq!(r.accuracy, Some(100.0));
        let r = yesno_accuracy(&[case("perhaps", true)], &rules, None);
        assert_eq!(r.accuracy, Some(0.0));
    }

    #[test]
    fn judge_fallback_and_failure() {
        let rules = KeywordRuleSet::default();
        let ok = Always(Ok(true));
        let r = yesno_accuracy(&[case("perhaps", true)], &rules, Some(&ok));
        assert_eq!((r.accuracy, r.via_judge), (Some(100.0), 1));
        let down = Always(Err(()));
        let r = yesno_accuracy(&[case("perhaps", true), case("yes", true)], &rules, Some(&down));
        assert_eq!(r.unjudged, vec!["perhaps".to_string()]);
        assert_eq!((r.judged, r.accuracy), (1, Some(100.0)));
    }

    #[test]
    fn empty_input() {
        let r = yesno_accuracy(&[], &KeywordRuleSet::default(), None);
        assert_eq!(r.accuracy, None);
    }
}
