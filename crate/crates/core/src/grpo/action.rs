//! Action space of the toy policies and the per-query context they read.
//!
//! A rollout is three tokens: a format token, a reasoning token, and an
//! answer token, each drawn from its own slice of one global vocabulary.
//! The answer slice holds the query's candidate answers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::synthenv::{
    horizontal_relation, oracle_for, parse_question, pixel_distance_meters, render_bbox, render_distance,
    render_free_form, render_yes_no, Direction, HorizontalRelation, ParsedQuestion,
};
use crate::types::{AnswerType, QAItem, SpatialScene, View};

pub const SLOTS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormatKind {
    WellFormed,
    AnswerOnly,
    Bare,
    Swapped,
}

impl FormatKind {
    pub const ALL: [FormatKind; 4] = [FormatKind::WellFormed, FormatKind::AnswerOnly, FormatKind::Bare, FormatKind::Swapped];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionSpace {
    pub formats: Vec<FormatKind>,
    pub reasonings: Vec<String>,
    /// Candidate distances in meters offered for Distance questions.
    pub distance_grid: Vec<f64>,
    /// Upper bound on objects per scene, i.e. Bbox candidates.
    pub max_objects: usize,
    pub label_vocabulary: Vec<String>,
}

impl Default for ActionSpace {
    fn default() -> Self {
        ActionSpace {
            formats: FormatKind::ALL.to_vec(),
            reasonings: vec![
                "I compare the horizontal centers of the two objects.".into(),
                "The objects are placed in the scene with known boxes.".into(),
                "First I locate both objects, then I compare their positions.".into(),
            ],
            distance_grid: vec![0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0, 5.5],
            max_objects: 5,
            label_vocabulary: crate::synthenv::DEFAULT_LABELS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl ActionSpace {
    pub fn max_answers(&self) -> usize {
        3.max(self.distance_grid.len()).max(self.max_objects)
    }

    pub fn vocab_size(&self) -> usize {
        self.formats.len() + self.reasonings.len() + self.max_answers()
    }

    /// Token id range of a slot, ignoring per-query masking.
    pub fn slot_range(&self, slot: usize) -> std::ops::Range<usize> {
        let f = self.formats.len();
        let r = self.reasonings.len();
        match slot {
            0 => 0..f,
            1 => f..f + r,
            _ => f + r..f + r + self.max_answers(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.formats.is_empty() || self.reasonings.is_empty() || self.distance_grid.is_empty() {
            return Err(Error::Config("action space slots must be nonempty".into()));
        }
        if self.distance_grid.iter().any(|d| !(*d > 0.0)) {
            return Err(Error::Config("distance grid must be positive".into()));
        }
        Ok(())
    }

    /// Text for a (possibly truncated) token sequence.
    pub fn render(&self, ctx: &QueryContext, tokens: &[usize]) -> String {
        let fmt = tokens.first().map(|&t| self.formats[t]);
        let reasoning = tokens.get(1).map(|&t| self.reasonings[t - self.formats.len()].as_str());
        let answer = tokens.get(2).map(|&t| ctx.candidates[t - self.slot_range(2).start].as_str());
        let Some(fmt) = fmt else { return String::new() };
        match (fmt, reasoning, answer) {
            (FormatKind::WellFormed, Some(r), Some(a)) => format!("<think>{r}</think> <answer>{a}</answer>"),
            (FormatKind::WellFormed, Some(r), None) => format!("<think>{r}</think>"),
            (FormatKind::WellFormed, None, _) => "<think>".into(),
            (FormatKind::AnswerOnly, _, Some(a)) => format!("<answer>{a}</answer>"),
            (FormatKind::AnswerOnly, _, None) => "<answer>".into(),
            (FormatKind::Bare, _, Some(a)) => a.to_string(),
            (FormatKind::Bare, _, None) => String::new(),
            (FormatKind::Swapped, Some(r), Some(a)) => format!("<answer>{a}</answer><think>{r}</think>"),
            (FormatKind::Swapped, _, _) => "<answer>".into(),
        }
    }
}

/// Scene facts the policies condition on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextFeatures {
    pub template: AnswerType,
    pub asked: Option<Direction>,
    /// Sign of center-x of the first object minus the second.
    pub dx_sign: i8,
    /// Center distance over the canvas diagonal.
    pub center_distance: f64,
    pub distance_m: Option<f64>,
    pub distance_bucket: Option<usize>,
    pub bbox_rank: Option<usize>,
    pub label_index: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryContext {
    pub qa_id: String,
    pub view: View,
    pub question: ParsedQuestion,
    pub reference_answer: String,
    pub candidates: Vec<String>,
    /// Index of the oracle-correct candidate.
    pub correct: usize,
    pub features: ContextFeatures,
}

fn sign(rel: HorizontalRelation) -> i8 {
    match rel {
        HorizontalRelation::LeftOf => -1,
        HorizontalRelation::Aligned => 0,
        HorizontalRelation::RightOf => 1,
    }
}

fn nearest_log(grid: &[f64], d: f64) -> usize {
    let ld = d.max(1e-6).ln();
    let mut best = 0;
    for (i, g) in grid.iter().enumerate() {
        if (g.ln() - ld).abs() < (grid[best].ln() - ld).abs() {
            best = i;
        }
    }
    best
}

impl QueryContext {
    pub fn new(qa: &QAItem, scene: &SpatialScene, space: &ActionSpace, meters_per_pixel: f64) -> Result<Self> {
        let parsed = parse_question(&qa.question)
            .ok_or_else(|| Error::InvalidData(format!("qa {}: question is not a known template", qa.qa_id)))?;
        let oracle = oracle_for(scene, &parsed, meters_per_pixel)?;
        let labels = parsed.labels();
        let obj_a = scene.object_by_label(labels[0]).expect("oracle resolved the label");
        let obj_b = labels.get(1).and_then(|l| scene.object_by_label(l));
        let rel = obj_b.map(|b| horizontal_relation(&obj_a.bbox, &b.bbox));
        let diag = scene.canvas_width.hypot(scene.canvas_height);
        let center_distance = obj_b.map_or(0.0, |b| pixel_distance_meters(&obj_a.bbox, &b.bbox, 1.0) / diag);
        let mut features = ContextFeatures {
            template: parsed.answer_type(),
            asked: None,
            dx_sign: rel.map_or(0, sign),
            center_distance,
            distance_m: None,
            distance_bucket: None,
            bbox_rank: None,
            label_index: space.label_vocabulary.iter().position(|l| l == labels[0]),
        };
        let (candidates, correct) = match &parsed {
            ParsedQuestion::YesNo { a, b, direction } => {
                features.asked = Some(*direction);
                let aligned = render_yes_no(a, b, *direction, HorizontalRelation::Aligned).1;
                let opposite = render_yes_no(a, b, *direction, HorizontalRelation::LeftOf).1;
                let opposite = if opposite.starts_with("Yes") {
                    render_yes_no(a, b, *direction, HorizontalRelation::RightOf).1
                } else {
                    opposite
                };
                let holds = match direction {
                    Direction::Left => render_yes_no(a, b, *direction, HorizontalRelation::LeftOf).1,
                    Direction::Right => render_yes_no(a, b, *direction, HorizontalRelation::RightOf).1,
                };
                let c = vec![holds, opposite, aligned];
                let idx = c.iter().position(|t| *t == oracle.text).expect("oracle text is a candidate");
                (c, idx)
            }
            ParsedQuestion::FreeForm { a, b } => {
                let c: Vec<String> = [HorizontalRelation::LeftOf, HorizontalRelation::RightOf, HorizontalRelation::Aligned]
                    .iter()
                    .map(|r| render_free_form(a, b, *r))
                    .collect();
                let idx = c.iter().position(|t| *t == oracle.text).expect("oracle text is a candidate");
                (c, idx)
            }
            ParsedQuestion::Distance { a, b } => {
                let d = oracle.gt_number.expect("distance oracle").to_meters();
                let bucket = nearest_log(&space.distance_grid, d);
                features.distance_m = Some(d);
                features.distance_bucket = Some(bucket);
                let c = space.distance_grid.iter().map(|g| render_distance(a, b, *g)).collect();
                (c, bucket)
            }
            ParsedQuestion::Bbox { target } => {
                let mut objs: Vec<_> = scene.objects.iter().collect();
                if objs.len() > space.max_objects {
                    return Err(Error::InvalidData(format!(
                        "scene {} has {} objects, action space allows {}",
                        scene.scene_id,
                        objs.len(),
                        space.max_objects
                    )));
                }
                objs.sort_by(|x, y| {
                    x.bbox.center().0.total_cmp(&y.bbox.center().0).then_with(|| x.id.cmp(&y.id))
                });
                let rank = objs.iter().position(|o| o.label == *target).expect("target present");
                features.bbox_rank = Some(rank);
                let c = objs.iter().map(|o| render_bbox(target, &o.bbox)).collect();
                (c, rank)
            }
        };
        Ok(QueryContext {
            qa_id: qa.qa_id.clone(),
            view: qa.view,
            question: parsed,
            reference_answer: qa.reference_answer.clone(),
            candidates,
            correct,
            features,
        })
    }

    pub fn correct_answer(&self) -> &str {
        &self.candidates[self.correct]
    }
}
