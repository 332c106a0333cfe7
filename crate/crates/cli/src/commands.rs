//! Subcommand implementations. Each takes a resolved [`RunConfig`] and
//! explicit paths; flag parsing lives in `main.rs`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use spatial_grpo::grpo::{
    build_pairs, greedy_accuracy, Checkpoint, PairedQuery, Policy, QueryContext, SoftmaxPolicy, StepReport, Trainer,
};
use spatial_grpo::jsonl::{read_jsonl, write_jsonl};
use spatial_grpo::metrics::{build_report, KeywordRuleSet, PredictionRecord, Report, ReportProviders};
use spatial_grpo::mirror::{
    flip_scene, rewrite_qa_llm, rewrite_qa_rule_based, verify_consistency, DirectionalLexicon, VerificationReport,
};
use spatial_grpo::rewards::{CachedProvider, SimilarityProvider};
use spatial_grpo::services::{
    JudgeClient, MockJudge, MockRewriter, RemoteEmbedder, RemoteJudge, RemoteRewriter, RewriteClient, ServiceConfig,
    ServiceError, TrigramEmbedder, EMBED_URL_VAR, JUDGE_URL_VAR, REWRITE_URL_VAR,
};
use spatial_grpo::synthenv::generate_dataset;
use spatial_grpo::{Error, QAItem, SpatialScene};

use crate::config::{RewriteMode, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{failed} of {total} mirrored items failed verification")]
    Verification { failed: usize, total: usize },
    #[error(transparent)]
    Core(#[from] Error),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(Error::Io(e))
    }
}

impl From<ServiceError> for CliError {
    fn from(e: ServiceError) -> Self {
        CliError::Core(Error::Service(e))
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Verification { .. } => 2,
            CliError::Core(Error::Service(_)) => 3,
            CliError::Core(Error::NonFiniteGradient { .. }) => 4,
            CliError::Core(Error::Config(_)) => 1,
            CliError::Core(_) => 2,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub const SCENES: &str = "scenes.jsonl";
pub const QA: &str = "qa.jsonl";
pub const SCENES_FLIPPED: &str = "scenes_flipped.jsonl";
pub const QA_FLIPPED: &str = "qa_flipped.jsonl";
pub const VERIFICATION: &str = "verification_report.json";
pub const TRAIN_LOG: &str = "train_log.jsonl";
pub const CHECKPOINT: &str = "checkpoint.json";
pub const PREDS: &str = "preds.jsonl";
pub const PREDS_FLIPPED: &str = "preds_flipped.jsonl";

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(Error::Json)? + "\n";
    std::fs::write(path, text)?;
    Ok(())
}

/// Reproducible record of what a command wrote, without timestamps.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub config_hash: String,
    pub outputs: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub summary: BTreeMap<String, serde_json::Value>,
}

fn finish(out_dir: &Path, cfg: &RunConfig, command: &str, outputs: &[&str], summary: BTreeMap<String, serde_json::Value>) -> CliResult<()> {
    let manifest = Manifest {
        command: command.into(),
        config_hash: cfg.hash(),
        outputs: outputs.iter().map(|s| s.to_string()).collect(),
        summary,
    };
    write_json(&out_dir.join(format!("{command}.manifest.json")), &manifest)?;
    let now = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let meta = serde_json::json!({ "command": command, "config_hash": cfg.hash(), "unix_time": now });
    write_json(&out_dir.join(format!("{command}.meta.json")), &meta)
}

pub fn gen_data(cfg: &RunConfig, out_dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(out_dir)?;
    let (scenes, items) = generate_dataset(&cfg.env, cfg.count)?;
    write_jsonl(&out_dir.join(SCENES), &scenes)?;
    write_jsonl(&out_dir.join(QA), &items)?;
    let mut summary = BTreeMap::new();
    summary.insert("count".into(), items.len().into());
    finish(out_dir, cfg, "gen-data", &[SCENES, QA], summary)
}

fn rewriter(cfg: &RunConfig) -> Box<dyn RewriteClient> {
    if cfg.services.mock {
        Box::new(MockRewriter::new(DirectionalLexicon::default()))
    } else {
        Box::new(RemoteRewriter::new(cfg.services.rewrite.clone().with_env_override(REWRITE_URL_VAR)))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerificationFile {
    pub config_hash: String,
    pub mode: RewriteMode,
    #[serde(flatten)]
    pub report: VerificationReport,
}

pub fn flip(cfg: &RunConfig, data_dir: &Path, out_dir: &Path) -> CliResult<VerificationReport> {
    let scenes: Vec<SpatialScene> = read_jsonl(&data_dir.join(SCENES))?;
    let items: Vec<QAItem> = read_jsonl(&data_dir.join(QA))?;
    std::fs::create_dir_all(out_dir)?;
    let by_id: BTreeMap<&str, &SpatialScene> = scenes.iter().map(|s| (s.scene_id.as_str(), s)).collect();
    let lexicon = DirectionalLexicon::default();
    let client = matches!(cfg.rewrite_mode, RewriteMode::Llm).then(|| rewriter(cfg));
    let mut mirrored = Vec::with_capacity(items.len());
    let mut report = VerificationReport::default();
    for qa in &items {
        let scene = by_id.get(qa.scene_id.as_str()).copied();
        let width = scene.map_or(cfg.env.canvas.0, |s| s.canvas_width);
        let m = match &client {
            Some(c) => rewrite_qa_llm(qa, width, c.as_ref())?,
            None => rewrite_qa_rule_based(qa, width, &lexicon),
        };
        report.push(verify_consistency(qa, &m, scene, cfg.env.meters_per_pixel, &lexicon));
        mirrored.push(m);
    }
    let flipped: Vec<SpatialScene> = scenes.iter().map(flip_scene).collect();
    write_jsonl(&out_dir.join(QA_FLIPPED), &mirrored)?;
    write_jsonl(&out_dir.join(SCENES_FLIPPED), &flipped)?;
    let file = VerificationFile { config_hash: cfg.hash(), mode: cfg.rewrite_mode, report };
    write_json(&out_dir.join(VERIFICATION), &file)?;
    let mut summary = BTreeMap::new();
    summary.insert("passed".into(), file.report.passed.into());
    summary.insert("failed".into(), file.report.failed.into());
    summary.insert("unverified".into(), file.report.unverified.into());
    finish(out_dir, cfg, "flip", &[QA_FLIPPED, SCENES_FLIPPED, VERIFICATION], summary)?;
    if file.report.failed > 0 {
        return Err(CliError::Verification { failed: file.report.failed, total: file.report.total });
    }
    Ok(file.report)
}

pub fn similarity_provider(cfg: &RunConfig) -> Box<dyn SimilarityProvider> {
    if cfg.services.mock {
        Box::new(TrigramEmbedder::default())
    } else {
        Box::new(CachedProvider::new(RemoteEmbedder::new(cfg.services.embed.clone().with_env_override(EMBED_URL_VAR))))
    }
}

/// Original and mirrored datasets joined into paired contexts, split into
/// a training prefix and a held-out suffix.
pub struct PairedData {
    pub train: Vec<PairedQuery>,
    pub holdout: Vec<PairedQuery>,
    /// Ground truth of both views of the held-out pairs.
    pub holdout_items: Vec<QAItem>,
}

fn sibling(path: &Path, name: &str) -> PathBuf {
    path.parent().unwrap_or(Path::new(".")).join(name)
}

pub fn load_pairs(cfg: &RunConfig, data: &Path, flipped_data: &Path) -> CliResult<PairedData> {
    let originals: Vec<QAItem> = read_jsonl(data)?;
    let mirrored: Vec<QAItem> = read_jsonl(flipped_data)?;
    let mut scenes: Vec<SpatialScene> = read_jsonl(&sibling(data, SCENES))?;
    let flipped_scenes = sibling(flipped_data, SCENES_FLIPPED);
    if flipped_scenes.exists() {
        scenes.extend(read_jsonl::<SpatialScene>(&flipped_scenes)?);
    }
    let mut pairs = build_pairs(&originals, &mirrored, &scenes, &cfg.action_space(), cfg.env.meters_per_pixel)?;
    let n_hold = (pairs.len() as f64 * cfg.holdout_fraction).floor() as usize;
    let holdout = pairs.split_off(pairs.len() - n_hold);
    let by_id: BTreeMap<&str, &QAItem> = originals.iter().chain(&mirrored).map(|q| (q.qa_id.as_str(), q)).collect();
    let holdout_items = holdout
        .iter()
        .flat_map(|p| [&p.original.qa_id, &p.flipped.qa_id])
        .map(|id| (*by_id[id.as_str()]).clone())
        .collect();
    Ok(PairedData { train: pairs, holdout, holdout_items })
}

pub fn initial_policy(cfg: &RunConfig) -> SoftmaxPolicy {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.train.seed ^ 0x1D1_7E5E_ED00);
    SoftmaxPolicy::random(cfg.policy_spec(), cfg.policy.init_scale, &mut rng)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogLine {
    pub config_hash: String,
    #[serde(flatten)]
    pub report: StepReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PredLine {
    pub qa_id: String,
    pub output: String,
}

pub fn predictions(policy: &dyn Policy, ctxs: &[&QueryContext], max_tokens: usize) -> Vec<PredLine> {
    ctxs.iter()
        .map(|c| PredLine { qa_id: c.qa_id.clone(), output: policy.greedy(c, max_tokens).text })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoldoutSummary {
    pub pairs: usize,
    pub accuracy_original: f64,
    pub accuracy_flipped: f64,
    pub consistency_gap: f64,
}

pub fn holdout_summary(policy: &dyn Policy, holdout: &[PairedQuery], max_tokens: usize) -> HoldoutSummary {
    let o: Vec<&QueryContext> = holdout.iter().map(|p| &p.original).collect();
    let f: Vec<&QueryContext> = holdout.iter().map(|p| &p.flipped).collect();
    let (ao, af) = (greedy_accuracy(policy, &o, max_tokens), greedy_accuracy(policy, &f, max_tokens));
    HoldoutSummary { pairs: holdout.len(), accuracy_original: ao, accuracy_flipped: af, consistency_gap: (ao - af).abs() }
}

pub struct TrainOutcome {
    pub trainer: Trainer,
    pub log: Vec<LogLine>,
    pub holdout: HoldoutSummary,
}

/// Run `cfg.steps` total steps, starting fresh or from a checkpoint.
/// Intermediate checkpoints go to `checkpoint_dir` when configured.
pub fn fit(
    cfg: &RunConfig,
    data: &PairedData,
    resume: Option<Checkpoint>,
    checkpoint_dir: Option<&Path>,
) -> CliResult<TrainOutcome> {
    let hash = cfg.hash();
    let mut trainer = match resume {
        Some(c) => {
            if c.config != cfg.train || c.spec != cfg.policy_spec() {
                return Err(CliError::Usage("checkpoint was written with a different train or policy config".into()));
            }
            c.restore()?
        }
        None => Trainer::new(initial_policy(cfg), cfg.train.clone())?,
    };
    if trainer.step > cfg.steps {
        return Err(CliError::Usage(format!("checkpoint is at step {}, past --steps {}", trainer.step, cfg.steps)));
    }
    if cfg.steps > trainer.step && data.train.is_empty() {
        return Err(Error::InvalidData("no training pairs after the holdout split".into()).into());
    }
    let provider = similarity_provider(cfg);
    let mut log = Vec::new();
    while trainer.step < cfg.steps {
        let mut report = trainer.train_step(&data.train, provider.as_ref())?;
        if let Some(dir) = checkpoint_dir {
            if cfg.checkpoint_every > 0 && trainer.step % cfg.checkpoint_every == 0 {
                let name = format!("checkpoint_{:06}.json", trainer.step);
                std::fs::write(dir.join(&name), Checkpoint::capture(&trainer, &hash).to_json()?)?;
                report.checkpoint = Some(name);
            }
        }
        log.push(LogLine { config_hash: hash.clone(), report });
    }
    let holdout = holdout_summary(&trainer.policy, &data.holdout, cfg.train.max_tokens);
    Ok(TrainOutcome { trainer, log, holdout })
}

pub fn train(cfg: &RunConfig, data: &Path, flipped_data: &Path, out_dir: &Path, resume: Option<&Path>) -> CliResult<TrainOutcome> {
    let pairs = load_pairs(cfg, data, flipped_data)?;
    std::fs::create_dir_all(out_dir)?;
    let checkpoint = match resume {
        Some(p) => Some(Checkpoint::from_json(&std::fs::read_to_string(p)?)?),
        None => None,
    };
    let start = checkpoint.as_ref().map_or(0, |c| c.step);
    // A resumed run keeps the log lines of the steps it already has.
    let mut lines: Vec<LogLine> = Vec::new();
    let log_path = out_dir.join(TRAIN_LOG);
    if start > 0 && log_path.exists() {
        lines = read_jsonl(&log_path)?;
        lines.retain(|l| l.report.step < start);
    }
    let outcome = fit(cfg, &pairs, checkpoint, Some(out_dir))?;
    lines.extend(outcome.log.iter().cloned());
    write_jsonl(&log_path, &lines)?;
    let hash = cfg.hash();
    std::fs::write(out_dir.join(CHECKPOINT), Checkpoint::capture(&outcome.trainer, &hash).to_json()?)?;
    let o: Vec<&QueryContext> = pairs.holdout.iter().map(|p| &p.original).collect();
    let f: Vec<&QueryContext> = pairs.holdout.iter().map(|p| &p.flipped).collect();
    write_jsonl(&out_dir.join(PREDS), &predictions(&outcome.trainer.policy, &o, cfg.train.max_tokens))?;
    write_jsonl(&out_dir.join(PREDS_FLIPPED), &predictions(&outcome.trainer.policy, &f, cfg.train.max_tokens))?;
    let mut summary = BTreeMap::new();
    summary.insert("steps".into(), outcome.trainer.step.into());
    summary.insert("train_pairs".into(), pairs.train.len().into());
    summary.insert("holdout".into(), serde_json::to_value(&outcome.holdout).map_err(Error::Json)?);
    finish(out_dir, cfg, "train", &[TRAIN_LOG, CHECKPOINT, PREDS, PREDS_FLIPPED], summary)?;
    Ok(outcome)
}

pub fn judge_client(cfg: &RunConfig, judge_url: Option<&str>) -> Option<Box<dyn JudgeClient>> {
    match judge_url {
        Some(url) => Some(Box::new(RemoteJudge::new(ServiceConfig { base_url: url.into(), ..cfg.services.judge.clone() }))),
        None if cfg.services.mock => Some(Box::new(MockJudge::new(KeywordRuleSet::default()))),
        None => Some(Box::new(RemoteJudge::new(cfg.services.judge.clone().with_env_override(JUDGE_URL_VAR)))),
    }
}

pub fn evaluate_records(
    cfg: &RunConfig,
    preds: &[PredLine],
    gts: &[QAItem],
    rules: &KeywordRuleSet,
    judge: Option<&dyn JudgeClient>,
) -> CliResult<Report> {
    let provider = similarity_provider(cfg);
    let records: Vec<PredictionRecord> =
        preds.iter().map(|p| PredictionRecord::from_output(&p.qa_id, &p.output, rules)).collect();
    let providers = ReportProviders { similarity: Some(provider.as_ref()), judge };
    let mut report = build_report(&records, gts, rules, providers)?;
    report.provenance.insert("config_hash".into(), cfg.hash());
    report.provenance.insert("similarity_provider".into(), provider.provider_id().to_string());
    Ok(report)
}

pub fn eval(
    cfg: &RunConfig,
    preds: &[PathBuf],
    data: &[PathBuf],
    rules: Option<&Path>,
    judge_url: Option<&str>,
    out_dir: &Path,
) -> CliResult<Report> {
    let rules = match rules {
        Some(p) => KeywordRuleSet::from_json_file(p)?,
        None => KeywordRuleSet::default(),
    };
    let mut lines = Vec::new();
    for p in preds {
        lines.extend(read_jsonl::<PredLine>(p)?);
    }
    let mut gts = Vec::new();
    for d in data {
        gts.extend(read_jsonl::<QAItem>(d)?);
    }
    let judge = judge_client(cfg, judge_url);
    let mut report = evaluate_records(cfg, &lines, &gts, &rules, judge.as_deref())?;
    let names: Vec<String> = preds.iter().map(|p| p.file_name().unwrap_or_default().to_string_lossy().into_owned()).collect();
    report.provenance.insert("preds".into(), names.join(","));
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(out_dir.join("report.json"), report.to_json()?)?;
    std::fs::write(out_dir.join("report.csv"), report.to_csv())?;
    std::fs::write(out_dir.join("report.md"), report.to_markdown())?;
    finish(out_dir, cfg, "eval", &["report.json", "report.csv", "report.md"], BTreeMap::new())?;
    Ok(report)
}

/// One (eta, seed) cell of the sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationCell {
    pub eta: f64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<BTreeMap<String, Option<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Seed-averaged metrics per eta.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub eta: f64,
    pub seeds_ok: usize,
    pub seeds_failed: usize,
    pub metrics: BTreeMap<String, Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationTable {
    pub config_hash: String,
    pub columns: Vec<String>,
    pub rows: Vec<AblationRow>,
    pub cells: Vec<AblationCell>,
}

pub const ABLATION_COLUMNS: [&str; 9] = [
    "success_rate",
    "smape",
    "yes_no_acc",
    "distance_acc",
    "bbox_miou",
    "sbert",
    "accuracy_original",
    "accuracy_flipped",
    "consistency_gap",
];

fn run_cell(cfg: &RunConfig, data: &PairedData, rules: &KeywordRuleSet) -> CliResult<BTreeMap<String, Option<f64>>> {
    let outcome = fit(cfg, data, None, None)?;
    let ctxs: Vec<&QueryContext> = data.holdout.iter().flat_map(|p| [&p.original, &p.flipped]).collect();
    let preds = predictions(&outcome.trainer.policy, &ctxs, cfg.train.max_tokens);
    let judge = MockJudge::new(rules.clone());
    let judge: Option<&dyn JudgeClient> = if cfg.services.mock { Some(&judge) } else { None };
    let report = evaluate_records(cfg, &preds, &data.holdout_items, rules, judge)?;
    let h = &outcome.holdout;
    let vals = [
        report.numeric.success_rate,
        report.numeric.smape,
        report.open_ended.yes_no_acc,
        report.open_ended.distance_acc,
        report.open_ended.bbox_miou,
        report.open_ended.sbert,
        Some(h.accuracy_original * 100.0),
        Some(h.accuracy_flipped * 100.0),
        Some(h.consistency_gap * 100.0),
    ];
    Ok(ABLATION_COLUMNS.iter().map(|c| c.to_string()).zip(vals).collect())
}

pub fn ablate_eta(
    cfg: &RunConfig,
    data: &Path,
    flipped_data: &Path,
    etas: &[f64],
    seeds: &[u64],
    out_dir: &Path,
    parallel: bool,
) -> CliResult<AblationTable> {
    if etas.is_empty() || seeds.is_empty() {
        return Err(CliError::Usage("ablate-eta needs at least one eta and one seed".into()));
    }
    let pairs = load_pairs(cfg, data, flipped_data)?;
    let rules = KeywordRuleSet::default();
    let grid: Vec<(f64, u64)> = etas.iter().flat_map(|&e| seeds.iter().map(move |&s| (e, s))).collect();
    let cell = |&(eta, seed): &(f64, u64)| {
        let mut c = cfg.clone();
        c.train.eta = eta;
        c.train.seed = seed;
        match run_cell(&c, &pairs, &rules) {
            Ok(m) => AblationCell { eta, seed, metrics: Some(m), error: None },
            Err(e) => AblationCell { eta, seed, metrics: None, error: Some(e.to_string()) },
        }
    };
    let cells: Vec<AblationCell> = if parallel {
        std::thread::scope(|s| {
            let handles: Vec<_> = grid.iter().map(|g| s.spawn(move || cell(g))).collect();
            handles.into_iter().map(|h| h.join().expect("sweep cell panicked")).collect()
        })
    } else {
        grid.iter().map(cell).collect()
    };
    let rows = etas
        .iter()
        .map(|&eta| {
            let mine: Vec<&AblationCell> = cells.iter().filter(|c| c.eta == eta).collect();
            let ok: Vec<&BTreeMap<String, Option<f64>>> = mine.iter().filter_map(|c| c.metrics.as_ref()).collect();
            let metrics = ABLATION_COLUMNS
                .iter()
                .map(|col| {
                    let vs: Vec<f64> = ok.iter().filter_map(|m| m.get(*col).copied().flatten()).collect();
                    let mean = (!vs.is_empty()).then(|| vs.iter().sum::<f64>() / vs.len() as f64);
                    (col.to_string(), mean)
                })
                .collect();
            AblationRow { eta, seeds_ok: ok.len(), seeds_failed: mine.len() - ok.len(), metrics }
        })
        .collect();
    let table = AblationTable {
        config_hash: cfg.hash(),
        columns: ABLATION_COLUMNS.iter().map(|s| s.to_string()).collect(),
        rows,
        cells,
    };
    std::fs::create_dir_all(out_dir)?;
    write_json(&out_dir.join("ablation.json"), &table)?;
    std::fs::write(out_dir.join("ablation.md"), ablation_markdown(&table))?;
    std::fs::write(out_dir.join("ablation.csv"), ablation_csv(&table))?;
    finish(out_dir, cfg, "ablate-eta", &["ablation.json", "ablation.md", "ablation.csv"], BTreeMap::new())?;
    Ok(table)
}

fn fmt_cell(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.2}"))
}

pub fn ablation_markdown(t: &AblationTable) -> String {
    let mut s = format!("| eta | seeds | {} |\n", t.columns.join(" | "));
    s += &format!("|---|---|{}\n", "---|".repeat(t.columns.len()));
    for r in &t.rows {
        let vals: Vec<String> = t.columns.iter().map(|c| fmt_cell(r.metrics.get(c).copied().flatten())).collect();
        s += &format!("| {} | {} | {} |\n", r.eta, r.seeds_ok, vals.join(" | "));
    }
    s
}

pub fn ablation_csv(t: &AblationTable) -> String {
    let mut s = format!("eta,seeds_ok,seeds_failed,{}\n", t.columns.join(","));
    for r in &t.rows {
        let vals: Vec<String> = t
            .columns
            .iter()
            .map(|c| r.metrics.get(c).copied().flatten().map_or(String::new(), |x| x.to_string()))
            .collect();
        s += &format!("{},{},{},{}\n", r.eta, r.seeds_ok, r.seeds_failed, vals.join(","));
    }
    s
}

/// Side-by-side markdown of several saved reports.
pub fn report(inputs: &[PathBuf]) -> CliResult<String> {
    if inputs.is_empty() {
        return Err(CliError::Usage("report needs at least one --input".into()));
    }
    let cols = [
        "Success", "Samples Completed", "sMAPE", "50-100", "100-150", "150-200", "BLEU-1", "BLEU-2", "sBERT",
        "mIoU", "Acc@0.75", "Yes/No", "Distance",
    ];
    let mut s = format!("| report | {} |\n|---|{}\n", cols.join(" | "), "---|".repeat(cols.len()));
    for p in inputs {
        let r: Report = serde_json::from_str(&std::fs::read_to_string(p)?).map_err(Error::Json)?;
        let n = &r.numeric;
        let o = &r.open_ended;
        let vals = [
            n.success_rate,
            n.samples_completed,
            n.smape,
            n.in_range_50_100,
            n.in_range_100_150,
            n.in_range_150_200,
            o.bleu1,
            o.bleu2,
            o.sbert,
            o.bbox_miou,
            o.bbox_acc_075,
            o.yes_no_acc,
            o.distance_acc,
        ];
        let vals: Vec<String> = vals.iter().map(|v| fmt_cell(*v)).collect();
        s += &format!("| {} | {} |\n", p.display(), vals.join(" | "));
    }
    Ok(s)
}
