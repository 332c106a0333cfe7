//! Aggregation of predictions into report tables.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::bbox::{bbox_metrics, extract_box};
use super::cot::{cot_keyword_stats, CotStats};
use super::keywords::{classify_task_type, yes_no_polarity, KeywordRuleSet};
use super::numeric::{
    distance_accuracy, extract_number, extract_number_raw, range_buckets, samples_completed, smape,
    success_rate, NumericCase,
};
use super::text::{bleu_n, similarity_score};
use super::yesno::{yesno_accuracy, YesNoCase};
use crate::error::Result;
use crate::format::answer_region;
use crate::rewards::SimilarityProvider;
use crate::services::JudgeClient;
use crate::types::{AnswerType, Box2D, Length, QAItem};

/// A raw model output with everything the extractors recover from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub qa_id: String,
    pub raw_output: String,
    pub parsed_answer: Option<String>,
    pub parsed_number: Option<Length>,
    pub parsed_box: Option<Box2D>,
    pub parsed_bool: Option<bool>,
}

impl PredictionRecord {
    pub fn from_output(qa_id: &str, raw_output: &str, rules: &KeywordRuleSet) -> Self {
        let parsed_answer = crate::format::parse_structured_output(raw_output).map(|o| o.answer);
        PredictionRecord {
            qa_id: qa_id.to_string(),
            raw_output: raw_output.to_string(),
            parsed_answer,
            parsed_number: extract_number(raw_output),
            parsed_box: extract_box(raw_output),
            parsed_bool: yes_no_polarity(&answer_region(raw_output), rules),
        }
    }
}

/// Services the report may call; both optional.
#[derive(Default, Clone, Copy)]
pub struct ReportProviders<'a> {
    pub similarity: Option<&'a dyn SimilarityProvider>,
    pub judge: Option<&'a dyn JudgeClient>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportCounts {
    pub records: usize,
    pub bbox: usize,
    pub yes_no: usize,
    pub distance: usize,
    pub free_form: usize,
    /// Predictions whose qa_id is not in the dataset.
    pub unknown_qa_ids: Vec<String>,
    /// Items whose ground truth could not be recovered for their type.
    pub ungraded: Vec<String>,
}

/// Numeric block, in the column order Success, Samples Completed, sMAPE,
/// In Range 50-100 / 100-150 / 150-200.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NumericBlock {
    pub n: usize,
    pub success_rate: Option<f64>,
    pub samples_completed: Option<f64>,
    pub smape: Option<f64>,
    pub in_range_50_100: Option<f64>,
    pub in_range_100_150: Option<f64>,
    pub in_range_150_200: Option<f64>,
}

/// Open-ended block, in the column order LLM, BLEU-1, BLEU-2, sBERT,
/// Bbox mIoU, Bbox Acc@0.75, Yes/No Acc, Distance Acc.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OpenEndedBlock {
    pub n: usize,
    pub llm: Option<f64>,
    pub bleu1: Option<f64>,
    pub bleu2: Option<f64>,
    pub sbert: Option<f64>,
    pub bbox_miou: Option<f64>,
    pub bbox_acc_075: Option<f64>,
    pub yes_no_acc: Option<f64>,
    pub distance_acc: Option<f64>,
    pub yes_no_unjudged: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub counts: ReportCounts,
    pub numeric: NumericBlock,
    pub open_ended: OpenEndedBlock,
    pub cot: CotStats,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub provenance: BTreeMap<String, String>,
}

fn mean_percent(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64 * 100.0)
}

pub fn build_report(
    records: &[PredictionRecord],
    gts: &[QAItem],
    rules: &KeywordRuleSet,
    providers: ReportProviders<'_>,
) -> Result<Report> {
    let by_id: HashMap<&str, &QAItem> = gts.iter().map(|q| (q.qa_id.as_str(), q)).collect();
    let mut counts = ReportCounts::default();
    let mut numeric = Vec::new();
    let mut boxes = Vec::new();
    let mut yes_no = Vec::new();
    let mut bleu1 = Vec::new();
    let mut bleu2 = Vec::new();
    let mut sbert = Vec::new();
    let mut outputs = Vec::new();

    for rec in records {
        let Some(qa) = by_id.get(rec.qa_id.as_str()) else {
            counts.unknown_qa_ids.push(rec.qa_id.clone());
            continue;
        };
        counts.records += 1;
        outputs.push(rec.raw_output.as_str());
        let pred_answer = answer_region(&rec.raw_output);
        bleu1.push(bleu_n(&pred_answer, &qa.reference_answer, 1));
        bleu2.push(bleu_n(&pred_answer, &qa.reference_answer, 2));
        if let Some(p) = providers.similarity {
            sbert.push(similarity_score(&pred_answer, &qa.reference_answer, p)?);
        }
        match classify_task_type(&qa.question, &qa.reference_answer, rules) {
            AnswerType::Distance => {
                counts.distance += 1;
                let gt = qa.gt_number.or_else(|| extract_number_raw(&qa.reference_answer));
                match gt {
                    Some(gt) => numeric.push(NumericCase {
                        pred: rec.parsed_number.map(|l| l.to_meters()),
                        gt: gt.to_meters(),
                    }),
                    None => counts.ungraded.push(qa.qa_id.clone()),
                }
            }
            AnswerType::Bbox => {
                counts.bbox += 1;
                match qa.gt_box.or_else(|| extract_box(&qa.reference_answer)) {
                    Some(gt) => boxes.push((rec.parsed_box, gt)),
                    None => counts.ungraded.push(qa.qa_id.clone()),
                }
            }
            AnswerType::YesNo => {
                counts.yes_no += 1;
                match qa.gt_bool.or_else(|| yes_no_polarity(&qa.reference_answer, rules)) {
                    Some(gt) => yes_no.push(YesNoCase {
                        qa_id: qa.qa_id.clone(),
                        pred: rec.raw_output.clone(),
                        gt,
                        gt_text: qa.reference_answer.clone(),
                    }),
                    None => counts.ungraded.push(qa.qa_id.clone()),
                }
            }
            AnswerType::FreeForm => counts.free_form += 1,
        }
    }

    let buckets = range_buckets(&numeric);
    let numeric_block = NumericBlock {
        n: numeric.len(),
        success_rate: success_rate(&numeric),
        samples_completed: samples_completed(&numeric),
        smape: smape(&numeric),
        in_range_50_100: buckets.map(|b| b[0]),
        in_range_100_150: buckets.map(|b| b[1]),
        in_range_150_200: buckets.map(|b| b[2]),
    };
    let (miou, acc) = bbox_metrics(&boxes);
    let yn = yesno_accuracy(&yes_no, rules, providers.judge);
    let open = OpenEndedBlock {
        n: counts.records,
        llm: None,
        bleu1: mean_percent(&bleu1),
        bleu2: mean_percent(&bleu2),
        sbert: mean_percent(&sbert),
        bbox_miou: miou,
        bbox_acc_075: acc,
        yes_no_acc: yn.accuracy,
        distance_acc: distance_accuracy(&numeric),
        yes_no_unjudged: yn.unjudged,
    };
    Ok(Report {
        counts,
        numeric: numeric_block,
        open_ended: open,
        cot: cot_keyword_stats(&outputs, rules),
        provenance: BTreeMap::new(),
    })
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.2}"))
}

fn csv_cell(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x}"))
}

impl Report {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    fn rows(&self) -> Vec<(&'static str, &'static str, Option<f64>)> {
        let n = &self.numeric;
        let o = &self.open_ended;
        vec![
            ("numeric", "success_rate", n.success_rate),
            ("numeric", "samples_completed", n.samples_completed),
            ("numeric", "smape", n.smape),
            ("numeric", "in_range_50_100", n.in_range_50_100),
            ("numeric", "in_range_100_150", n.in_range_100_150),
            ("numeric", "in_range_150_200", n.in_range_150_200),
            ("open_ended", "llm", o.llm),
            ("open_ended", "bleu1", o.bleu1),
            ("open_ended", "bleu2", o.bleu2),
            ("open_ended", "sbert", o.sbert),
            ("open_ended", "bbox_miou", o.bbox_miou),
            ("open_ended", "bbox_acc_075", o.bbox_acc_075),
            ("open_ended", "yes_no_acc", o.yes_no_acc),
            ("open_ended", "distance_acc", o.distance_acc),
            ("cot", "mean_keywords", self.cot.mean),
        ]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("block,metric,value\n");
        for (block, metric, v) in self.rows() {
            let _ = writeln!(out, "{block},{metric},{}", csv_cell(v));
        }
        out
    }

    pub fn to_markdown(&self) -> String {
        let n = &self.numeric;
        let o = &self.open_ended;
        let c = &self.counts;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "Records: {} (bbox {}, yes/no {}, distance {}, free-form {}); unknown ids: {}; ungraded: {}\n",
            c.records,
            c.bbox,
            c.yes_no,
            c.distance,
            c.free_form,
            c.unknown_qa_ids.len(),
            c.ungraded.len()
        );
        out.push_str("| Success Rate (%) | Samples Completed (%) | sMAPE (%) | In Range 50-100 (%) | In Range 100-150 (%) | In Range 150-200 (%) |\n");
        out.push_str("|---|---|---|---|---|---|\n");
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} | {} |\n",
            cell(n.success_rate),
            cell(n.samples_completed),
            cell(n.smape),
            cell(n.in_range_50_100),
            cell(n.in_range_100_150),
            cell(n.in_range_150_200)
        );
        out.push_str("| LLM (%) | BLEU-1 (%) | BLEU-2 (%) | sBERT | Bbox mIoU (%) | Bbox Acc@0.75 (%) | Yes/No Acc (%) | Distance Acc (%) |\n");
        out.push_str("|---|---|---|---|---|---|---|---|\n");
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} | {} | {} | {} |\n",
            cell(o.llm),
            cell(o.bleu1),
            cell(o.bleu2),
            cell(o.sbert),
            cell(o.bbox_miou),
            cell(o.bbox_acc_075),
            cell(o.yes_no_acc),
            cell(o.distance_acc)
        );
        let _ = writeln!(
            out,
            "Reasoning keywords per response: {} (reference {:.1})",
            cell(self.cot.mean),
            self.cot.reference_mean
        );
        out
    }
}
