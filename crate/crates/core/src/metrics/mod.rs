//! Evaluation metrics and report building.

pub mod bbox;
pub mod cot;
pub mod keywords;
pub mod numeric;
pub mod report;
pub mod text;
pub mod yesno;

pub use bbox::{bbox_metrics, extract_box, iou};
pub use cot::{cot_keyword_stats, CotStats};
pub use keywords::{classify_task_type, yes_no_polarity, KeywordRuleSet};
pub use numeric::{
    distance_accuracy, extract_number, range_buckets, samples_completed, smape, success_rate, NumericCase,
};
pub use report::{build_report, PredictionRecord, Report, ReportProviders};
pub use text::{bleu_n, similarity_score, tokenize};
pub use yesno::{yesno_accuracy, YesNoCase, YesNoResult};
