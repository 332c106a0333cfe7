//! Distance-answer extraction and the numeric metrics.
//!
//! All metric functions take values already normalized to meters. `None`
//! predictions are unparsable outputs; they count against success rate,
//! samples completed, buckets, and distance accuracy, and are skipped by
//! sMAPE.

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::format::answer_region;
use crate::types::{Length, LengthUnit};

fn number_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\d+(?:\.\d+)?(?:[eE][+-]?\d+)?|\.\d+").unwrap())
}

fn unit_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r"(?i)^\s*(centimeters|centimeter|centimetres|centimetre|cm|meters|meter|metres|metre|m|inches|inch|in|feet|foot|ft)(?:[^\w]|$)",
        )
        .unwrap()
    })
}

fn unit_of(token: &str) -> LengthUnit {
    match token.to_ascii_lowercase().as_str() {
        "cm" | "centimeter" | "centimeters" | "centimetre" | "centimetres" => LengthUnit::Centimeter,
        "in" | "inch" | "inches" => LengthUnit::Inch,
        "ft" | "foot" | "feet" => LengthUnit::Foot,
        _ => LengthUnit::Meter,
    }
}

/// First plain decimal number in `text` with its adjacent unit. Numbers
/// glued to letters (`q1`, `x2`) and scientific notation are skipped.
pub fn extract_number_raw(text: &str) -> Option<Length> {
    for m in number_re().find_iter(text) {
        let s = m.as_str();
        if s.contains(['e', 'E']) {
            continue;
        }
        let glued = text[..m.start()].chars().next_back().is_some_and(|c| c.is_alphabetic() || c == '_');
        let trailing = text[m.end()..].chars().next();
        let glued_after = trailing.is_some_and(|c| c == '.' && text[m.end() + 1..].starts_with(|d: char| d.is_ascii_digit()));
        if glued || glued_after {
            continue;
        }
        let value: f64 = s.parse().ok()?;
        let unit = unit_re()
            .captures(&text[m.end()..])
            .map(|c| unit_of(c.get(1).unwrap().as_str()))
            .unwrap_or(LengthUnit::Meter);
        return Some(Length { value, unit });
    }
    None
}

/// [`extract_number_raw`] applied to the answer region of a rollout text.
pub fn extract_number(text: &str) -> Option<Length> {
    extract_number_raw(&answer_region(text))
}

/// One distance prediction against its ground truth, both in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NumericCase {
    pub pred: Option<f64>,
    pub gt: f64,
}

fn percent(hits: usize, total: usize) -> Option<f64> {
    (total > 0).then(|| hits as f64 / total as f64 * 100.0)
}

fn is_success(pred: f64, gt: f64) -> bool {
    pred > 0.0 && gt > 0.0 && (gt / pred).max(pred / gt) < 2.0
}

pub fn success_rate(cases: &[NumericCase]) -> Option<f64> {
    let hits = cases.iter().filter(|c| c.pred.is_some_and(|p| is_success(p, c.gt))).count();
    percent(hits, cases.len())
}

pub fn samples_completed(cases: &[NumericCase]) -> Option<f64> {
    percent(cases.iter().filter(|c| c.pred.is_some()).count(), cases.len())
}

pub fn smape_term(pred: f64, gt: f64) -> f64 {
    let denom = (pred.abs() + gt.abs()) / 2.0;
    if denom == 0.0 {
        0.0
    } else {
        (pred - gt).abs() / denom
    }
}

/// Mean symmetric absolute percentage error over parsable predictions.
pub fn smape(cases: &[NumericCase]) -> Option<f64> {
    let terms: Vec<f64> = cases.iter().filter_map(|c| c.pred.map(|p| smape_term(p, c.gt))).collect();
    (!terms.is_empty()).then(|| terms.iter().sum::<f64>() / terms.len() as f64 * 100.0)
}

/// Bucket index of pred/gt×100 in `[50,100)`, `[100,150)`, `[150,200)`.
pub fn range_bucket(pred: f64, gt: f64) -> Option<usize> {
    if !(gt > 0.0) {
        return None;
    }
    let ratio = pred / gt * 100.0;
    match ratio {
        r if (50.0..100.0).contains(&r) => Some(0),
        r if (100.0..150.0).contains(&r) => Some(1),
        r if (150.0..200.0).contains(&r) => Some(2),
        _ => None,
    }
}

pub fn range_buckets(cases: &[NumericCase]) -> Option<[f64; 3]> {
    if cases.is_empty() {
        return None;
    }
    let mut counts = [0usize; 3];
    for c in cases {
        if let Some(b) = c.pred.and_then(|p| range_bucket(p, c.gt)) {
            counts[b] += 1;
        }
    }
    let n = cases.len() as f64;
    Some(counts.map(|k| k as f64 / n * 100.0))
}

/// Share of predictions with `0.5·gt ≤ pred ≤ 2·gt`.
pub fn distance_accuracy(cases: &[NumericCase]) -> Option<f64> {
    let hits = cases
        .iter()
        .filter(|c| c.pred.is_some_and(|p| p >= 0.5 * c.gt && p <= 2.0 * c.gt))
        .count();
    percent(hits, cases.len())
}
