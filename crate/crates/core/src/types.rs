//! Domain types shared across the crate.
//!
//! Everything here is a plain value object: cheap to clone, `Send + Sync`,
//! and serializable to the JSONL dataset format.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned box in pixel space, origin top-left, x rightward.
///
/// Serialized as `[x1, y1, x2, y2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct Box2D {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

impl Box2D {
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Result<Self> {
        let b = Box2D { x1, y1, x2, y2 };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.x1, self.y1, self.x2, self.y2].iter().all(|v| v.is_finite());
        if !finite || self.x1 >= self.x2 || self.y1 >= self.y2 {
            return Err(Error::InvalidData(format!("degenerate box {self:?}")));
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        self.x2 - self.x1
    }

    pub fn height(&self) -> f64 {
        self.y2 - self.y1
    }

    pub fn area(&self) -> f64 {
        self.width().max(0.0) * self.height().max(0.0)
    }

    pub fn center(&self) -> (f64, f64) {
        ((self.x1 + self.x2) / 2.0, (self.y1 + self.y2) / 2.0)
    }

    pub fn translate(&self, dx: f64, dy: f64) -> Box2D {
        Box2D { x1: self.x1 + dx, y1: self.y1 + dy, x2: self.x2 + dx, y2: self.y2 + dy }
    }

    /// Textual form used in reference answers, e.g. `[10, 20, 50, 60]`.
    pub fn render(&self) -> String {
        format!("[{}, {}, {}, {}]", self.x1, self.y1, self.x2, self.y2)
    }
}

impl From<[f64; 4]> for Box2D {
    fn from(v: [f64; 4]) -> Self {
        Box2D { x1: v[0], y1: v[1], x2: v[2], y2: v[3] }
    }
}

impl From<Box2D> for [f64; 4] {
    fn from(b: Box2D) -> Self {
        [b.x1, b.y1, b.x2, b.y2]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerType {
    Bbox,
    YesNo,
    Distance,
    FreeForm,
}

impl AnswerType {
    pub const ALL: [AnswerType; 4] =
        [AnswerType::Bbox, AnswerType::YesNo, AnswerType::Distance, AnswerType::FreeForm];

    pub fn as_str(&self) -> &'static str {
        match self {
            AnswerType::Bbox => "bbox",
            AnswerType::YesNo => "yes_no",
            AnswerType::Distance => "distance",
            AnswerType::FreeForm => "free_form",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LengthUnit {
    Meter,
    Centimeter,
    Inch,
    Foot,
}

impl LengthUnit {
    /// Exact size of one unit in meters.
    pub fn meters(&self) -> f64 {
        match self {
            LengthUnit::Meter => 1.0,
            LengthUnit::Centimeter => 0.01,
            LengthUnit::Inch => 0.0254,
            LengthUnit::Foot => 0.3048,
        }
    }
}

/// Rescale `value` from one unit to another.
pub fn convert_length(value: f64, from: LengthUnit, to: LengthUnit) -> f64 {
    if from == to {
        return value;
    }
    value * from.meters() / to.meters()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Length {
    pub value: f64,
    pub unit: LengthUnit,
}

impl Length {
    pub fn meters(value: f64) -> Self {
        Length { value, unit: LengthUnit::Meter }
    }

    pub fn to_meters(&self) -> f64 {
        convert_length(self.value, self.unit, LengthUnit::Meter)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub id: String,
    pub label: String,
    #[serde(rename = "box")]
    pub bbox: Box2D,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position3d: Option<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialScene {
    pub scene_id: String,
    pub canvas_width: f64,
    pub canvas_height: f64,
    pub objects: Vec<SceneObject>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_ref: Option<String>,
}

impl SpatialScene {
    pub fn validate(&self) -> Result<()> {
        if !(self.canvas_width > 0.0 && self.canvas_height > 0.0) {
            return Err(Error::InvalidData(format!("scene {}: non-positive canvas", self.scene_id)));
        }
        let mut ids = std::collections::HashSet::new();
        for obj in &self.objects {
            obj.bbox.validate()?;
            let b = &obj.bbox;
            if b.x1 < 0.0 || b.y1 < 0.0 || b.x2 > self.canvas_width || b.y2 > self.canvas_height {
                return Err(Error::InvalidData(format!(
                    "scene {}: object {} box outside canvas",
                    self.scene_id, obj.id
                )));
            }
            if !ids.insert(obj.id.as_str()) {
                return Err(Error::InvalidData(format!(
                    "scene {}: duplicate object id {}",
                    self.scene_id, obj.id
                )));
            }
        }
        Ok(())
    }

    pub fn object_by_label(&self, label: &str) -> Option<&SceneObject> {
        self.objects.iter().find(|o| o.label == label)
    }

    /// Real-data scenes carry only an image reference and no symbolic objects.
    pub fn is_symbolic(&self) -> bool {
        !self.objects.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum View {
    Original,
    Mirrored,
}

/// One question with its reference answer and structured ground truth.
///
/// Serializes to the JSONL record
/// `qa_id, scene_id, view, question, answer, answer_type, gt_number, gt_unit, gt_box, gt_bool, paired_qa_id`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "QaRecord", into = "QaRecord")]
pub struct QAItem {
    pub qa_id: String,
    pub scene_id: String,
    pub question: String,
    pub reference_answer: String,
    pub answer_type: AnswerType,
    pub gt_number: Option<Length>,
    pub gt_box: Option<Box2D>,
    pub gt_bool: Option<bool>,
    pub view: View,
    pub paired_qa_id: Option<String>,
}

impl QAItem {
    pub fn validate(&self) -> Result<()> {
        let ok = match self.answer_type {
            AnswerType::Distance => {
                self.gt_number.is_some() && self.gt_box.is_none() && self.gt_bool.is_none()
            }
            AnswerType::Bbox => {
                self.gt_box.is_some() && self.gt_number.is_none() && self.gt_bool.is_none()
            }
            AnswerType::YesNo => {
                self.gt_bool.is_some() && self.gt_number.is_none() && self.gt_box.is_none()
            }
            AnswerType::FreeForm => {
                self.gt_bool.is_none() && self.gt_number.is_none() && self.gt_box.is_none()
            }
        };
        if !ok {
            return Err(Error::InvalidData(format!(
                "qa {}: ground truth fields do not match answer type {}",
                self.qa_id,
                self.answer_type.as_str()
            )));
        }
        if let Some(b) = &self.gt_box {
            b.validate()?;
        }
        Ok(())
    }
}

/// Wire form of [`QAItem`].
#[derive(Debug, Clone, Serialize, Deserialize)]
struct QaRecord {
    qa_id: String,
    scene_id: String,
    view: View,
    question: String,
    answer: String,
    answer_type: AnswerType,
    gt_number: Option<f64>,
    gt_unit: Option<LengthUnit>,
    gt_box: Option<Box2D>,
    gt_bool: Option<bool>,
    paired_qa_id: Option<String>,
}

impl TryFrom<QaRecord> for QAItem {
    type Error = Error;

    fn try_from(r: QaRecord) -> Result<Self> {
        let gt_number = match (r.gt_number, r.gt_unit) {
            (Some(value), unit) => Some(Length { value, unit: unit.unwrap_or(LengthUnit::Meter) }),
            (None, Some(_)) => {
                return Err(Error::InvalidData(format!("qa {}: gt_unit without gt_number", r.qa_id)))
            }
            (None, None) => None,
        };
        let item = QAItem {
            qa_id: r.qa_id,
            scene_id: r.scene_id,
            question: r.question,
            reference_answer: r.answer,
            answer_type: r.answer_type,
            gt_number,
            gt_box: r.gt_box,
            gt_bool: r.gt_bool,
            view: r.view,
            paired_qa_id: r.paired_qa_id,
        };
        item.validate()?;
        Ok(item)
    }
}

impl From<QAItem> for QaRecord {
    fn from(q: QAItem) -> Self {
        QaRecord {
            qa_id: q.qa_id,
            scene_id: q.scene_id,
            view: q.view,
            question: q.question,
            answer: q.reference_answer,
            answer_type: q.answer_type,
            gt_number: q.gt_number.map(|l| l.value),
            gt_unit: q.gt_number.map(|l| l.unit),
            gt_box: q.gt_box,
            gt_bool: q.gt_bool,
            paired_qa_id: q.paired_qa_id,
        }
    }
}

/// The think/answer pair of a well-formed policy output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructuredOutput {
    pub think: String,
    pub answer: String,
}

/// One sampled answer sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rollout {
    pub tokens: Vec<usize>,
    pub text: String,
    /// Per-token log-probabilities under the sampling policy.
    pub logprobs_old: Vec<f64>,
    pub parsed: Option<StructuredOutput>,
}

/// The `G` rollouts sampled for one query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutGroup {
    pub qa_id: String,
    pub rollouts: Vec<Rollout>,
}

/// Per-rollout reward components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardVector {
    pub r_format: f64,
    pub r_semantic_raw: f64,
    pub r_semantic: f64,
    pub r_total: f64,
}

/// Optimizer and reward hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub lambda1: f64,
    pub lambda2: f64,
    /// Correction threshold on raw semantic reward.
    pub delta: f64,
    /// Scale of the view-consistency penalty.
    pub eta: f64,
    /// KL coefficient against the frozen reference policy.
    pub beta: f64,
    pub epsilon_clip: f64,
    pub group_size: usize,
    pub learning_rate: f64,
    pub max_tokens: usize,
    pub seed: u64,
    pub advantage_std_floor: f64,
    /// Paired queries per optimizer step.
    pub batch_size: usize,
    /// Steps between copies of the current policy into the sampling policy.
    pub old_refresh_interval: usize,
    /// Gradient-ascent iterations on each sampled batch.
    pub inner_epochs: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lambda1: 0.5,
            lambda2: 0.5,
            delta: 0.5,
            eta: 1.0,
            beta: 0.04,
            epsilon_clip: 0.2,
            group_size: 8,
            learning_rate: 1.0,
            max_tokens: 2048,
            seed: 0,
            advantage_std_floor: 1e-8,
            batch_size: 8,
            old_refresh_interval: 1,
            inner_epochs: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let err = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.lambda1 >= 0.0 && self.lambda2 >= 0.0) {
            return err("lambda1/lambda2 must be nonnegative");
        }
        if !(self.eta >= 0.0) || !(self.beta >= 0.0) {
            return err("eta and beta must be nonnegative");
        }
        if !(self.epsilon_clip > 0.0 && self.epsilon_clip < 1.0) {
            return err("epsilon_clip must lie in (0, 1)");
        }
        if self.group_size < 2 {
            return err("group_size must be at least 2");
        }
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return err("learning_rate must be finite and nonnegative");
        }
        if self.max_tokens == 0 || self.batch_size == 0 {
            return err("max_tokens and batch_size must be positive");
        }
        if self.old_refresh_interval == 0 || self.inner_epochs == 0 {
            return err("old_refresh_interval and inner_epochs must be positive");
        }
        if !(self.advantage_std_floor > 0.0) {
            return err("advantage_std_floor must be positive");
        }
        if !self.delta.is_finite() {
            return err("delta must be finite");
        }
        Ok(())
    }
}
