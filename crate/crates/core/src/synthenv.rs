//! Synthetic spatial scenes with an exact answer oracle.
//!
//! Scenes are reproducible from `(seed, index)`: each index gets its own
//! ChaCha stream, so generation can run in any order or in parallel.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::iou;
use crate::types::{AnswerType, Box2D, Length, QAItem, SceneObject, SpatialScene, View};

/// Salt separating the QA sampling stream from the scene stream.
const QA_STREAM_SALT: u64 = 0x5151_a11c_e5ee_d000;
const MAX_PLACEMENT_ATTEMPTS: usize = 2_000;
const MAX_PAIR_IOU: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeMix {
    pub bbox: f64,
    pub yes_no: f64,
    pub distance: f64,
    pub free_form: f64,
}

impl TypeMix {
    pub fn only(t: AnswerType) -> Self {
        let mut m = TypeMix { bbox: 0.0, yes_no: 0.0, distance: 0.0, free_form: 0.0 };
        *m.weight_mut(t) = 1.0;
        m
    }

    pub fn weight(&self, t: AnswerType) -> f64 {
        match t {
            AnswerType::Bbox => self.bbox,
            AnswerType::YesNo => self.yes_no,
            AnswerType::Distance => self.distance,
            AnswerType::FreeForm => self.free_form,
        }
    }

    fn weight_mut(&mut self, t: AnswerType) -> &mut f64 {
        match t {
            AnswerType::Bbox => &mut self.bbox,
            AnswerType::YesNo => &mut self.yes_no,
            AnswerType::Distance => &mut self.distance,
            AnswerType::FreeForm => &mut self.free_form,
        }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> AnswerType {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for t in AnswerType::ALL {
            acc += self.weight(t);
            if u < acc {
                return t;
            }
        }
        // u landed in the rounding slack above the last cumulative weight
        *AnswerType::ALL.iter().rev().find(|t| self.weight(**t) > 0.0).unwrap_or(&AnswerType::FreeForm)
    }
}

impl Default for TypeMix {
    fn default() -> Self {
        TypeMix { bbox: 0.2, yes_no: 0.4, distance: 0.25, free_form: 0.15 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvConfig {
    pub n_objects_range: (usize, usize),
    pub label_vocabulary: Vec<String>,
    pub canvas: (f64, f64),
    pub meters_per_pixel: f64,
    /// Camera depth range of generated objects, meters.
    pub depth_range: (f64, f64),
    pub type_mix: TypeMix,
    pub seed: u64,
}

pub const DEFAULT_LABELS: [&str; 20] = [
    "cup", "laptop", "chair", "table", "plate", "lamp", "book", "bottle", "sofa", "plant", "clock",
    "vase", "phone", "mug", "keyboard", "monitor", "bowl", "backpack", "speaker", "pillow",
];

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            n_objects_range: (2, 5),
            label_vocabulary: DEFAULT_LABELS.iter().map(|s| s.to_string()).collect(),
            canvas: (640.0, 480.0),
            meters_per_pixel: 0.01,
            depth_range: (1.5, 4.5),
            type_mix: TypeMix::default(),
            seed: 0,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.n_objects_range;
        if lo < 2 || hi < lo {
            return Err(Error::Config(format!("n_objects_range {lo}..={hi} must satisfy 2 <= min <= max")));
        }
        let total: f64 = AnswerType::ALL.iter().map(|t| self.type_mix.weight(*t)).sum();
        if (total - 1.0).abs() > 1e-9 || AnswerType::ALL.iter().any(|t| self.type_mix.weight(*t) < 0.0) {
            return Err(Error::Config(format!("type_mix must be a distribution, sums to {total}")));
        }
        if !(self.canvas.0 > 0.0 && self.canvas.1 > 0.0) || !(self.meters_per_pixel > 0.0) {
            return Err(Error::Config("canvas and meters_per_pixel must be positive".into()));
        }
        if !(self.depth_range.0 <= self.depth_range.1) {
            return Err(Error::Config("depth_range must be ordered".into()));
        }
        Ok(())
    }

    /// Canvas-space center distance scaled to meters.
    pub fn pixel_distance_meters(&self, a: &Box2D, b: &Box2D) -> f64 {
        pixel_distance_meters(a, b, self.meters_per_pixel)
    }
}

fn scene_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// RNG used by [`generate_dataset`] for the QA drawn on scene `index`.
pub fn qa_rng(seed: u64, index: u64) -> ChaCha8Rng {
    scene_rng(seed ^ QA_STREAM_SALT, index)
}

pub fn generate_scene(config: &EnvConfig, index: u64) -> Result<SpatialScene> {
    config.validate()?;
    let mut rng = scene_rng(config.seed, index);
    let (lo, hi) = config.n_objects_range;
    let n = rng.gen_range(lo..=hi);
    if config.label_vocabulary.len() < n {
        return Err(Error::Generation(format!(
            "vocabulary of {} labels cannot cover {n} objects",
            config.label_vocabulary.len()
        )));
    }
    let labels: Vec<&String> = config.label_vocabulary.choose_multiple(&mut rng, n).collect();
    let (w, h) = config.canvas;
    let mut objects: Vec<SceneObject> = Vec::with_capacity(n);
    for (k, label) in labels.into_iter().enumerate() {
        let mut placed = None;
        for _ in 0..MAX_PLACEMENT_ATTEMPTS {
            let bw = (rng.gen_range(0.06..0.2) * w).round().max(1.0);
            let bh = (rng.gen_range(0.08..0.3) * h).round().max(1.0);
            let x1 = rng.gen_range(0.0..=(w - bw)).floor();
            let y1 = rng.gen_range(0.0..=(h - bh)).floor();
            let candidate = Box2D { x1, y1, x2: x1 + bw, y2: y1 + bh };
            if objects.iter().all(|o| iou(&o.bbox, &candidate) < MAX_PAIR_IOU) {
                placed = Some(candidate);
                break;
            }
        }
        let bbox = placed.ok_or_else(|| {
            Error::Generation(format!("could not place {n} non-overlapping objects on scene {index}"))
        })?;
        let (cx, cy) = bbox.center();
        let depth = if config.depth_range.0 < config.depth_range.1 {
            rng.gen_range(config.depth_range.0..config.depth_range.1)
        } else {
            config.depth_range.0
        };
        let position3d = [
            (cx - w / 2.0) * config.meters_per_pixel,
            (h / 2.0 - cy) * config.meters_per_pixel,
            (depth * 100.0).round() / 100.0,
        ];
        objects.push(SceneObject {
            id: format!("o{k}"),
            label: label.clone(),
            bbox,
            position3d: Some(position3d),
        });
    }
    Ok(SpatialScene {
        scene_id: format!("s{index:06}"),
        canvas_width: w,
        canvas_height: h,
        objects,
        image_ref: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Left,
    Right,
}

impl Direction {
    pub fn word(&self) -> &'static str {
        match self {
            Direction::Left => "left",
            Direction::Right => "right",
        }
    }

    pub fn opposite(&self) -> Direction {
        match self {
            Direction::Left => Direction::Right,
            Direction::Right => Direction::Left,
        }
    }
}

/// A question recognised as one of the fixed templates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "template", rename_all = "snake_case")]
pub enum ParsedQuestion {
    Bbox { target: String },
    YesNo { a: String, b: String, direction: Direction },
    Distance { a: String, b: String },
    FreeForm { a: String, b: String },
}

impl ParsedQuestion {
    pub fn answer_type(&self) -> AnswerType {
        match self {
            ParsedQuestion::Bbox { .. } => AnswerType::Bbox,
            ParsedQuestion::YesNo { .. } => AnswerType::YesNo,
            ParsedQuestion::Distance { .. } => AnswerType::Distance,
            ParsedQuestion::FreeForm { .. } => AnswerType::FreeForm,
        }
    }

    pub fn render(&self) -> String {
        match self {
            ParsedQuestion::Bbox { target } => format!("Where is the {target}? Provide the bounding box."),
            ParsedQuestion::YesNo { a, b, direction } => {
                format!("Is the {a} to the {} of the {b}?", direction.word())
            }
            ParsedQuestion::Distance { a, b } => format!("How far is the {a} from the {b}?"),
            ParsedQuestion::FreeForm { a, b } => {
                format!("Describe the position of the {a} relative to the {b}.")
            }
        }
    }

    /// Labels in question order.
    pub fn labels(&self) -> Vec<&str> {
        match self {
            ParsedQuestion::Bbox { target } => vec![target.as_str()],
            ParsedQuestion::YesNo { a, b, .. }
            | ParsedQuestion::Distance { a, b }
            | ParsedQuestion::FreeForm { a, b } => vec![a.as_str(), b.as_str()],
        }
    }
}

pub fn parse_question(question: &str) -> Option<ParsedQuestion> {
    let q = question.trim();
    if let Some(rest) = q.strip_prefix("Where is the ") {
        let target = rest.strip_suffix("? Provide the bounding box.")?;
        return Some(ParsedQuestion::Bbox { target: target.to_string() });
    }
    if let Some(rest) = q.strip_prefix("How far is the ") {
        let (a, b) = rest.strip_suffix('?')?.split_once(" from the ")?;
        return Some(ParsedQuestion::Distance { a: a.to_string(), b: b.to_string() });
    }
    if let Some(rest) = q.strip_prefix("Describe the position of the ") {
        let (a, b) = rest.strip_suffix('.')?.split_once(" relative to the ")?;
        return Some(ParsedQuestion::FreeForm { a: a.to_string(), b: b.to_string() });
    }
    if let Some(rest) = q.strip_prefix("Is the ") {
        let rest = rest.strip_suffix('?')?;
        for direction in [Direction::Left, Direction::Right] {
            let sep = format!(" to the {} of the ", direction.word());
            if let Some((a, b)) = rest.split_once(&sep) {
                return Some(ParsedQuestion::YesNo { a: a.to_string(), b: b.to_string(), direction });
            }
        }
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HorizontalRelation {
    LeftOf,
    RightOf,
    Aligned,
}

/// Where `a` sits relative to `b`, judged by box center x.
pub fn horizontal_relation(a: &Box2D, b: &Box2D) -> HorizontalRelation {
    let (ax, _) = a.center();
    let (bx, _) = b.center();
    if ax < bx {
        HorizontalRelation::LeftOf
    } else if ax > bx {
        HorizontalRelation::RightOf
    } else {
        HorizontalRelation::Aligned
    }
}

pub fn pixel_distance_meters(a: &Box2D, b: &Box2D, meters_per_pixel: f64) -> f64 {
    let (ax, ay) = a.center();
    let (bx, by) = b.center();
    ((ax - bx).powi(2) + (ay - by).powi(2)).sqrt() * meters_per_pixel
}

/// Reference answer text plus structured ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleAnswer {
    pub text: String,
    pub gt_number: Option<Length>,
    pub gt_box: Option<Box2D>,
    pub gt_bool: Option<bool>,
}

pub fn render_yes_no(a: &str, b: &str, direction: Direction, relation: HorizontalRelation) -> (bool, String) {
    let holds = matches!(
        (direction, relation),
        (Direction::Left, HorizontalRelation::LeftOf) | (Direction::Right, HorizontalRelation::RightOf)
    );
    let text = if holds {
        format!("Yes, the {a} is to the {} of the {b}.", direction.word())
    } else if relation == HorizontalRelation::Aligned {
        "No, neither; they are horizontally aligned.".to_string()
    } else {
        "No.".to_string()
    };
    (holds, text)
}

pub fn render_free_form(a: &str, b: &str, relation: HorizontalRelation) -> String {
    match relation {
        HorizontalRelation::LeftOf => format!("The {a} is to the left of the {b}."),
        HorizontalRelation::RightOf => format!("The {a} is to the right of the {b}."),
        HorizontalRelation::Aligned => format!("The {a} and the {b} are horizontally aligned."),
    }
}

/// Round to the two decimals the answer text carries, so the stored ground
/// truth and the rendered answer parse to the same value.
pub fn round_centimeters(meters: f64) -> f64 {
    format!("{meters:.2}").parse().expect("formatted float parses")
}

pub fn render_distance(a: &str, b: &str, meters: f64) -> String {
    format!("The {a} is {meters:.2} meters from the {b}.")
}

pub fn render_bbox(target: &str, bbox: &Box2D) -> String {
    format!("The {target} is at {}.", bbox.render())
}

fn find_object<'s>(scene: &'s SpatialScene, label: &str) -> Result<&'s SceneObject> {
    scene
        .object_by_label(label)
        .ok_or_else(|| Error::Oracle(format!("scene {} has no object labelled {label:?}", scene.scene_id)))
}

/// Distance between two objects: metric 3D positions when both carry one,
/// else center distance in pixels scaled by `meters_per_pixel`.
pub fn object_distance(a: &SceneObject, b: &SceneObject, meters_per_pixel: f64) -> f64 {
    match (a.position3d, b.position3d) {
        (Some(p), Some(q)) => {
            ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt()
        }
        _ => pixel_distance_meters(&a.bbox, &b.bbox, meters_per_pixel),
    }
}

pub fn oracle_answer(scene: &SpatialScene, qa: &QAItem, meters_per_pixel: f64) -> Result<OracleAnswer> {
    if qa.scene_id != scene.scene_id {
        return Err(Error::Oracle(format!(
            "qa {} belongs to scene {}, not {}",
            qa.qa_id, qa.scene_id, scene.scene_id
        )));
    }
    let parsed = parse_question(&qa.question)
        .ok_or_else(|| Error::Oracle(format!("unrecognised question template: {:?}", qa.question)))?;
    oracle_for(scene, &parsed, meters_per_pixel)
}

pub fn oracle_for(scene: &SpatialScene, parsed: &ParsedQuestion, meters_per_pixel: f64) -> Result<OracleAnswer> {
    let mut out = OracleAnswer { text: String::new(), gt_number: None, gt_box: None, gt_bool: None };
    match parsed {
        ParsedQuestion::Bbox { target } => {
            let obj = find_object(scene, target)?;
            out.text = render_bbox(target, &obj.bbox);
            out.gt_box = Some(obj.bbox);
        }
        ParsedQuestion::YesNo { a, b, direction } => {
            let rel = horizontal_relation(&find_object(scene, a)?.bbox, &find_object(scene, b)?.bbox);
            let (holds, text) = render_yes_no(a, b, *direction, rel);
            out.text = text;
            out.gt_bool = Some(holds);
        }
        ParsedQuestion::Distance { a, b } => {
            let d = round_centimeters(object_distance(find_object(scene, a)?, find_object(scene, b)?, meters_per_pixel));
            out.text = render_distance(a, b, d);
            out.gt_number = Some(Length::meters(d));
        }
        ParsedQuestion::FreeForm { a, b } => {
            let rel = horizontal_relation(&find_object(scene, a)?.bbox, &find_object(scene, b)?.bbox);
            out.text = render_free_form(a, b, rel);
        }
    }
    Ok(out)
}

/// Draw one question of the requested type about `scene`.
pub fn generate_qa<R: Rng>(
    scene: &SpatialScene,
    answer_type: AnswerType,
    meters_per_pixel: f64,
    rng: &mut R,
) -> Result<QAItem> {
    if scene.objects.len() < 2 {
        return Err(Error::Generation(format!("scene {} has fewer than two objects", scene.scene_id)));
    }
    let picked: Vec<&SceneObject> = scene.objects.choose_multiple(rng, 2).collect();
    let (a, b) = (picked[0].label.clone(), picked[1].label.clone());
    for label in [&a, &b] {
        if scene.objects.iter().filter(|o| &o.label == label).count() > 1 {
            return Err(Error::Generation(format!(
                "label {label:?} is ambiguous in scene {}",
                scene.scene_id
            )));
        }
    }
    let parsed = match answer_type {
        AnswerType::Bbox => ParsedQuestion::Bbox { target: a },
        AnswerType::YesNo => ParsedQuestion::YesNo { a, b, direction: Direction::Left },
        AnswerType::Distance => ParsedQuestion::Distance { a, b },
        AnswerType::FreeForm => ParsedQuestion::FreeForm { a, b },
    };
    let oracle = oracle_for(scene, &parsed, meters_per_pixel)?;
    Ok(QAItem {
        qa_id: format!("{}/q", scene.scene_id),
        scene_id: scene.scene_id.clone(),
        question: parsed.render(),
        reference_answer: oracle.text,
        answer_type,
        gt_number: oracle.gt_number,
        gt_box: oracle.gt_box,
        gt_bool: oracle.gt_bool,
        view: View::Original,
        paired_qa_id: None,
    })
}

/// `count` scenes with one QA item each; item `i` is about scene `i`.
pub fn generate_dataset(config: &EnvConfig, count: usize) -> Result<(Vec<SpatialScene>, Vec<QAItem>)> {
    generate_dataset_range(config, 0, count)
}

pub fn generate_dataset_range(
    config: &EnvConfig,
    start: usize,
    count: usize,
) -> Result<(Vec<SpatialScene>, Vec<QAItem>)> {
    config.validate()?;
    let mut scenes = Vec::with_capacity(count);
    let mut items = Vec::with_capacity(count);
    for index in start..start + count {
        let scene = generate_scene(config, index as u64)?;
        let mut rng = qa_rng(config.seed, index as u64);
        let answer_type = config.type_mix.sample(&mut rng);
        let mut qa = generate_qa(&scene, answer_type, config.meters_per_pixel, &mut rng)?;
        qa.qa_id = format!("q{index:06}");
        scenes.push(scene);
        items.push(qa);
    }
    Ok((scenes, items))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn two_object_scene(a: Box2D, b: Box2D, pa: Option<[f64; 3]>, pb: Option<[f64; 3]>) -> SpatialScene {
        SpatialScene {
            scene_id: "t".into(),
            canvas_width: 200.0,
            canvas_height: 100.0,
            objects: vec![
                SceneObject { id: "o0".into(), label: "cup".into(), bbox: a, position3d: pa },
                SceneObject { id: "o1".into(), label: "laptop".into(), bbox: b, position3d: pb },
            ],
            image_ref: None,
        }
    }

    fn qa(question: &str) -> QAItem {
        QAItem {
            qa_id: "x".into(),
            scene_id: "t".into(),
            question: question.into(),
            reference_answer: String::new(),
            answer_type: AnswerType::FreeForm,
            gt_number: None,
            gt_box: None,
            gt_bool: None,
            view: View::Original,
            paired_qa_id: None,
        }
    }

    #[test]
    fn scene_generation_is_deterministic() {
        let cfg = EnvConfig { seed: 7, ..EnvConfig::default() };
        let a = serde_json::to_string(&generate_scene(&cfg, 0).unwrap()).unwrap();
        let b = serde_json::to_string(&generate_scene(&cfg, 0).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn degenerate_object_range() {
        let cfg = EnvConfig { n_objects_range: (2, 2), ..EnvConfig::default() };
        for i in 0..20 {
            assert_eq!(generate_scene(&cfg, i).unwrap().objects.len(), 2);
        }
    }

    #[test]
    fn distinct_indices_give_distinct_scenes() {
        let cfg = EnvConfig { seed: 7, ..EnvConfig::default() };
        let mut seen = HashSet::new();
        for i in 0..1000 {
            let mut s = generate_scene(&cfg, i).unwrap();
            s.scene_id.clear();
            assert!(seen.insert(serde_json::to_string(&s).unwrap()), "collision at index {i}");
        }
    }

    #[test]
    fn generated_scenes_are_valid_and_sparse() {
        let cfg = EnvConfig::default();
        for i in 0..200 {
            let s = generate_scene(&cfg, i).unwrap();
            s.validate().unwrap();
            let labels: HashSet<_> = s.objects.iter().map(|o| &o.label).collect();
            assert_eq!(labels.len(), s.objects.len());
            for (j, a) in s.objects.iter().enumerate() {
                for b in &s.objects[j + 1..] {
                    assert!(iou(&a.bbox, &b.bbox) < 0.05);
                }
            }
        }
    }

    #[test]
    fn small_vocabulary_fails() {
        let cfg = EnvConfig {
            n_objects_range: (3, 3),
            label_vocabulary: vec!["cup".into(), "plate".into()],
            ..EnvConfig::default()
        };
        assert!(matches!(generate_scene(&cfg, 0), Err(Error::Generation(_))));
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut cfg = EnvConfig { n_objects_range: (1, 3), ..EnvConfig::default() };
        assert!(cfg.validate().is_err());
        cfg.n_objects_range = (2, 3);
        cfg.type_mix.bbox += 0.1;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn yes_no_left_of() {
        let s = two_object_scene(
            Box2D::from([10.0, 10.0, 30.0, 30.0]),
            Box2D::from([100.0, 10.0, 130.0, 30.0]),
            None,
            None,
        );
        let ans = oracle_answer(&s, &qa("Is the cup to the left of the laptop?"), 0.01).unwrap();
        assert_eq!(ans.gt_bool, Some(true));
        assert_eq!(ans.text, "Yes, the cup is to the left of the laptop.");
        let ans = oracle_answer(&s, &qa("Is the cup to the right of the laptop?"), 0.01).unwrap();
        assert_eq!(ans.gt_bool, Some(false));
    }

    #[test]
    fn aligned_centers_tie() {
        let s = two_object_scene(
            Box2D::from([10.0, 10.0, 30.0, 30.0]),
            Box2D::from([0.0, 50.0, 40.0, 90.0]),
            None,
            None,
        );
        let ans = oracle_answer(&s, &qa("Is the cup to the left of the laptop?"), 0.01).unwrap();
        assert_eq!(ans.gt_bool, Some(false));
        assert!(ans.text.contains("neither; they are horizontally aligned"));
    }

    #[test]
    fn distance_from_positions_and_pixels() {
        let s = two_object_scene(
            Box2D::from([10.0, 10.0, 30.0, 30.0]),
            Box2D::from([100.0, 10.0, 130.0, 30.0]),
            Some([0.0, 0.0, 0.0]),
            Some([3.0, 4.0, 0.0]),
        );
        let ans = oracle_answer(&s, &qa("How far is the cup from the laptop?"), 0.01).unwrap();
        assert_eq!(ans.gt_number, Some(Length::meters(5.0)));
        let ans = oracle_answer(&s, &qa("How far is the cup from the cup?"), 0.01).unwrap();
        assert_eq!(ans.gt_number, Some(Length::meters(0.0)));

        let s = two_object_scene(
            Box2D::from([0.0, 0.0, 20.0, 20.0]),
            Box2D::from([30.0, 40.0, 50.0, 60.0]),
            None,
            None,
        );
        let ans = oracle_answer(&s, &qa("How far is the cup from the laptop?"), 0.1).unwrap();
        assert!((ans.gt_number.unwrap().value - 5.0).abs() < 1e-12);
    }

    #[test]
    fn bbox_identity() {
        let s = two_object_scene(
            Box2D::from([10.0, 20.0, 50.0, 60.0]),
            Box2D::from([100.0, 10.0, 130.0, 30.0]),
            None,
            None,
        );
        let ans = oracle_answer(&s, &qa("Where is the cup? Provide the bounding box."), 0.01).unwrap();
        assert_eq!(ans.gt_box, Some(Box2D::from([10.0, 20.0, 50.0, 60.0])));
        assert_eq!(ans.text, "The cup is at [10, 20, 50, 60].");
    }

    #[test]
    fn oracle_errors() {
        let s = two_object_scene(
            Box2D::from([10.0, 20.0, 50.0, 60.0]),
            Box2D::from([100.0, 10.0, 130.0, 30.0]),
            None,
            None,
        );
        assert!(matches!(
            oracle_answer(&s, &qa("Is the dog to the left of the cup?"), 0.01),
            Err(Error::Oracle(_))
        ));
        assert!(oracle_answer(&s, &qa("What colour is the cup?"), 0.01).is_err());
        let mut other = qa("Where is the cup? Provide the bounding box.");
        other.scene_id = "elsewhere".into();
        assert!(oracle_answer(&s, &other, 0.01).is_err());
    }

    #[test]
    fn duplicate_labels_rejected() {
        let mut s = two_object_scene(
            Box2D::from([10.0, 20.0, 50.0, 60.0]),
            Box2D::from([100.0, 10.0, 130.0, 30.0]),
            None,
            None,
        );
        s.objects[1].label = "cup".into();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(generate_qa(&s, AnswerType::YesNo, 0.01, &mut rng).is_err());
    }

    #[test]
    fn templates_roundtrip_through_parser() {
        let cfg = EnvConfig::default();
        let (_, items) = generate_dataset(&cfg, 100).unwrap();
        for item in &items {
            let parsed = parse_question(&item.question).unwrap();
            assert_eq!(parsed.render(), item.question);
            assert_eq!(parsed.answer_type(), item.answer_type);
        }
    }

    #[test]
    fn oracle_agrees_with_stored_answers() {
        let cfg = EnvConfig::default();
        let (scenes, items) = generate_dataset(&cfg, 200).unwrap();
        for (scene, item) in scenes.iter().zip(&items) {
            item.validate().unwrap();
            let ans = oracle_answer(scene, item, cfg.meters_per_pixel).unwrap();
            assert_eq!(ans.text, item.reference_answer);
            assert_eq!(ans.gt_bool, item.gt_bool);
            assert_eq!(ans.gt_box, item.gt_box);
            assert_eq!(ans.gt_number, item.gt_number);
        }
    }

    #[test]
    fn distances_invariant_to_translation() {
        let cfg = EnvConfig::default();
        for i in 0..50 {
            let scene = generate_scene(&cfg, i).unwrap();
            let (a, b) = (&scene.objects[0], &scene.objects[1]);
            let d0 = pixel_distance_meters(&a.bbox, &b.bbox, cfg.meters_per_pixel);
            let d1 = pixel_distance_meters(&a.bbox.translate(13.0, -7.5), &b.bbox.translate(13.0, -7.5), cfg.meters_per_pixel);
            assert!((d0 - d1).abs() <= 1e-9 * d0.max(1.0));
        }
    }
}
