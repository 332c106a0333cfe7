//! Horizontal flips of scenes and mirror-consistent QA rewriting.

use serde::{Deserialize, Serialize};

use crate::metrics::bbox::extract_box;
use crate::services::{RewriteClient, ServiceError};
use crate::synthenv::oracle_answer;
use crate::types::{AnswerType, Box2D, QAItem, SpatialScene, View};

pub const FLIP_SUFFIX: &str = "#flip";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectionalLexicon {
    /// Swapped in both directions, longest phrase first.
    pub swap_pairs: Vec<(String, String)>,
    /// Terms a horizontal flip leaves alone; kept for documentation and
    /// override files, never rewritten.
    pub invariant_terms: Vec<String>,
}

impl Default for DirectionalLexicon {
    fn default() -> Self {
        let pairs = [("left", "right"), ("leftmost", "rightmost"), ("to the left of", "to the right of")];
        let invariant = ["above", "below", "in front of", "behind", "next to", "closer", "farther"];
        DirectionalLexicon {
            swap_pairs: pairs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
            invariant_terms: invariant.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl DirectionalLexicon {
    /// Both directions of every pair, longest source phrase first.
    fn rules(&self) -> Vec<(String, String)> {
        let mut rules: Vec<(String, String)> = self
            .swap_pairs
            .iter()
            .flat_map(|(a, b)| [(a.to_lowercase(), b.to_lowercase()), (b.to_lowercase(), a.to_lowercase())])
            .collect();
        rules.sort_by(|x, y| y.0.len().cmp(&x.0.len()).then_with(|| x.0.cmp(&y.0)));
        rules.dedup_by(|x, y| x.0 == y.0);
        rules
    }

    /// Direction words in order of appearance, lowercased.
    pub fn directional_signature(&self, text: &str) -> Vec<String> {
        let rules = self.rules();
        scan(text, &text.to_lowercase(), &rules)
            .into_iter()
            .filter_map(|p| match p {
                Piece::Match { rule, .. } => Some(rules[rule].0.clone()),
                Piece::Text { .. } => None,
            })
            .collect()
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

enum Piece {
    Match { start: usize, rule: usize },
    Text { start: usize, len: usize },
}

/// Split `text` into rule matches on token boundaries and plain chars.
/// `lower` must be `text.to_lowercase()`; when lowercasing changes byte
/// offsets (rare non-ASCII input) the text is left as plain chars.
fn scan(text: &str, lower: &str, rules: &[(String, String)]) -> Vec<Piece> {
    let same_offsets = lower.len() == text.len();
    let mut out = Vec::new();
    let mut pos = 0;
    while pos < text.len() {
        let boundary_before = text[..pos].chars().next_back().map_or(true, |c| !is_word_char(c));
        let mut hit = None;
        if boundary_before && same_offsets && lower.is_char_boundary(pos) {
            for (i, (from, _)) in rules.iter().enumerate() {
                let end = pos + from.len();
                if end <= lower.len()
                    && lower.is_char_boundary(end)
                    && text.is_char_boundary(end)
                    && &lower[pos..end] == from.as_str()
                    && text[end..].chars().next().map_or(true, |c| !is_word_char(c))
                {
                    hit = Some((i, end));
                    break;
                }
            }
        }
        match hit {
            Some((rule, end)) => {
                out.push(Piece::Match { start: pos, rule });
                pos = end;
            }
            None => {
                let len = text[pos..].chars().next().map_or(1, char::len_utf8);
                out.push(Piece::Text { start: pos, len });
                pos += len;
            }
        }
    }
    out
}

fn match_case(source: &str, replacement: &str) -> String {
    let letters: Vec<char> = source.chars().filter(|c| c.is_alphabetic()).collect();
    if letters.len() > 1 && letters.iter().all(|c| c.is_uppercase()) {
        replacement.to_uppercase()
    } else if source.chars().next().is_some_and(char::is_uppercase) {
        let mut chars = replacement.chars();
        chars.next().map_or_else(String::new, |f| f.to_uppercase().collect::<String>() + chars.as_str())
    } else {
        replacement.to_string()
    }
}

/// Swap every directional phrase, longest match first, on token
/// boundaries, keeping the source casing.
pub fn swap_directions(text: &str, lexicon: &DirectionalLexicon) -> String {
    let rules = lexicon.rules();
    let mut out = String::with_capacity(text.len());
    for piece in scan(text, &text.to_lowercase(), &rules) {
        match piece {
            Piece::Match { start, rule } => {
                let (from, to) = &rules[rule];
                out.push_str(&match_case(&text[start..start + from.len()], to));
            }
            Piece::Text { start, len } => out.push_str(&text[start..start + len]),
        }
    }
    out
}

pub fn flip_box(b: &Box2D, canvas_width: f64) -> Box2D {
    Box2D { x1: canvas_width - b.x2, y1: b.y1, x2: canvas_width - b.x1, y2: b.y2 }
}

/// Mirror every object about the vertical center line. 3D positions are
/// camera-centered, so their x is negated.
pub fn flip_scene(scene: &SpatialScene) -> SpatialScene {
    let mut out = scene.clone();
    out.scene_id = flipped_scene_id(&scene.scene_id);
    for obj in &mut out.objects {
        obj.bbox = flip_box(&obj.bbox, scene.canvas_width);
        if let Some(p) = &mut obj.position3d {
            p[0] = -p[0];
        }
    }
    out
}

/// Toggle the flip suffix, so flipping twice restores the id.
pub fn flipped_scene_id(id: &str) -> String {
    match id.strip_suffix(FLIP_SUFFIX) {
        Some(base) => base.to_string(),
        None => format!("{id}{FLIP_SUFFIX}"),
    }
}

pub fn mirrored_qa_id(id: &str) -> String {
    flipped_scene_id(id)
}

fn other_view(v: View) -> View {
    match v {
        View::Original => View::Mirrored,
        View::Mirrored => View::Original,
    }
}

/// Replace the rendered ground-truth box in `answer` with its mirror.
fn flip_box_text(answer: &str, old: &Box2D, new: &Box2D) -> String {
    answer.replace(&old.render(), &new.render())
}

fn mirror_structure(qa: &QAItem, canvas_width: f64, question: String, answer: String) -> QAItem {
    let mut out = qa.clone();
    out.qa_id = mirrored_qa_id(&qa.qa_id);
    out.scene_id = flipped_scene_id(&qa.scene_id);
    out.view = other_view(qa.view);
    out.paired_qa_id = Some(qa.qa_id.clone());
    out.question = question;
    out.reference_answer = answer;
    if let Some(b) = &qa.gt_box {
        let flipped = flip_box(b, canvas_width);
        out.reference_answer = flip_box_text(&out.reference_answer, b, &flipped);
        out.gt_box = Some(flipped);
    }
    out
}

/// Rule-based mirror of one QA item; applying it twice restores the item
/// up to the paired id.
pub fn rewrite_qa_rule_based(qa: &QAItem, canvas_width: f64, lexicon: &DirectionalLexicon) -> QAItem {
    let q = swap_directions(&qa.question, lexicon);
    let a = swap_directions(&qa.reference_answer, lexicon);
    mirror_structure(qa, canvas_width, q, a)
}

/// Mirror via a rewrite service. Structured ground truth is still
/// transformed locally; only the texts come from the client.
pub fn rewrite_qa_llm(qa: &QAItem, canvas_width: f64, client: &dyn RewriteClient) -> Result<QAItem, ServiceError> {
    let (q, a) = client.rewrite(&qa.question, &qa.reference_answer)?;
    Ok(mirror_structure(qa, canvas_width, q, a))
}

/// Link an original item to its mirror by id.
pub fn link_pair(original: &mut QAItem, mirrored: &QAItem) {
    original.paired_qa_id = Some(mirrored.qa_id.clone());
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerificationStatus {
    Pass,
    Fail,
    Unverified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationEntry {
    pub qa_id: String,
    pub mirrored_qa_id: String,
    pub answer_type: AnswerType,
    pub status: VerificationStatus,
    pub expected_answer: Option<String>,
    pub reason: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub unverified: usize,
    pub entries: Vec<VerificationEntry>,
}

impl VerificationReport {
    pub fn push(&mut self, e: VerificationEntry) {
        self.total += 1;
        match e.status {
            VerificationStatus::Pass => self.passed += 1,
            VerificationStatus::Fail => self.failed += 1,
            VerificationStatus::Unverified => self.unverified += 1,
        }
        self.entries.push(e);
    }

    pub fn pass_rate(&self) -> Option<f64> {
        let checked = self.passed + self.failed;
        (checked > 0).then(|| self.passed as f64 / checked as f64)
    }
}

const BOX_TOL: f64 = 1e-6;
const DISTANCE_REL_TOL: f64 = 1e-9;

fn boxes_close(a: &Box2D, b: &Box2D) -> bool {
    [(a.x1, b.x1), (a.y1, b.y1), (a.x2, b.x2), (a.y2, b.y2)].iter().all(|(x, y)| (x - y).abs() <= BOX_TOL)
}

/// Re-run the oracle on the flipped scene and compare it with the mirrored
/// item. Without a symbolic scene the pair is reported unverified.
pub fn verify_consistency(
    original: &QAItem,
    mirrored: &QAItem,
    scene: Option<&SpatialScene>,
    meters_per_pixel: f64,
    lexicon: &DirectionalLexicon,
) -> VerificationEntry {
    let mut entry = VerificationEntry {
        qa_id: original.qa_id.clone(),
        mirrored_qa_id: mirrored.qa_id.clone(),
        answer_type: original.answer_type,
        status: VerificationStatus::Unverified,
        expected_answer: None,
        reason: None,
    };
    let Some(scene) = scene.filter(|s| s.is_symbolic()) else {
        entry.reason = Some("no symbolic scene".into());
        return entry;
    };
    let mut flipped = flip_scene(scene);
    flipped.scene_id = mirrored.scene_id.clone();
    let expected = match oracle_answer(&flipped, mirrored, meters_per_pixel) {
        Ok(e) => e,
        Err(e) => {
            entry.status = VerificationStatus::Fail;
            entry.reason = Some(e.to_string());
            return entry;
        }
    };
    entry.expected_answer = Some(expected.text.clone());
    let mut problems = Vec::new();
    if mirrored.answer_type != original.answer_type {
        problems.push("answer type changed".to_string());
    }
    match mirrored.answer_type {
        AnswerType::YesNo => {
            if mirrored.gt_bool != expected.gt_bool {
                problems.push(format!("gt_bool {:?}, oracle {:?}", mirrored.gt_bool, expected.gt_bool));
            }
        }
        AnswerType::Distance => {
            let got = mirrored.gt_number.map(|l| l.to_meters());
            let want = expected.gt_number.map(|l| l.to_meters());
            let close = match (got, want) {
                (Some(g), Some(w)) => (g - w).abs() <= DISTANCE_REL_TOL * w.abs().max(1.0),
                _ => false,
            };
            if !close {
                problems.push(format!("distance {got:?}, oracle {want:?}"));
            }
        }
        AnswerType::Bbox => {
            let structured = matches!((&mirrored.gt_box, &expected.gt_box), (Some(a), Some(b)) if boxes_close(a, b));
            let textual = match (extract_box(&mirrored.reference_answer), &expected.gt_box) {
                (Some(a), Some(b)) => boxes_close(&a, b),
                (None, _) => true,
                _ => false,
            };
            if !(structured && textual) {
                problems.push("box does not match the mirrored object".into());
            }
        }
        AnswerType::FreeForm => {}
    }
    if lexicon.directional_signature(&mirrored.reference_answer) != lexicon.directional_signature(&expected.text) {
        problems.push("directional terms disagree with the flipped scene".into());
    }
    if problems.is_empty() {
        entry.status = VerificationStatus::Pass;
    } else {
        entry.status = VerificationStatus::Fail;
        entry.reason = Some(problems.join("; "));
    }
    entry
}
