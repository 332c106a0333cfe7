use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use spatial_grpo_cli::commands;
use spatial_grpo_cli::config::RewriteMode;
use spatial_grpo_cli::{CliResult, RunConfig};

#[derive(Parser)]
#[command(name = "spatial-grpo", version, about = "Mirror-consistent spatial QA: data, training and evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run config; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    RuleBased,
    Llm,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic scenes and QA items.
    GenData {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (default: paths.data_dir).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mirror every QA item and verify it against the flipped-scene oracle.
    Flip {
        #[command(flatten)]
        common: Common,
        /// Directory holding scenes.jsonl and qa.jsonl.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        mode: Option<Mode>,
    },
    /// Train a toy policy on paired original and mirrored items.
    Train {
        #[command(flatten)]
        common: Common,
        /// Original qa.jsonl; scenes.jsonl is read from the same directory.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Mirrored qa_flipped.jsonl.
        #[arg(long)]
        flipped_data: Option<PathBuf>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Continue from a checkpoint written by an earlier run.
        #[arg(long)]
        resume: Option<PathBuf>,
        #[arg(long)]
        checkpoint_every: Option<usize>,
    },
    /// Score predictions against ground truth.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Prediction JSONL files of {"qa_id", "output"}.
        #[arg(long, required = true)]
        preds: Vec<PathBuf>,
        /// QA JSONL files holding the ground truth.
        #[arg(long, required = true)]
        data: Vec<PathBuf>,
        /// Keyword rules JSON replacing the built-in lists.
        #[arg(long)]
        rules: Option<PathBuf>,
        #[arg(long)]
        judge_url: Option<String>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Train and evaluate over a grid of eta values and seeds.
    AblateEta {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        flipped_data: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "0,1,2,10")]
        etas: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "0")]
        seeds: Vec<u64>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run sweep cells on separate threads.
        #[arg(long)]
        parallel: bool,
    },
    /// Render saved report.json files side by side as markdown.
    Report {
        #[arg(long = "input", required = true)]
        inputs: Vec<PathBuf>,
        /// Write here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(common: &Common) -> CliResult<RunConfig> {
    Ok(RunConfig::load(common.config.as_deref())?)
}

fn checked(cfg: RunConfig) -> CliResult<RunConfig> {
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::GenData { common, count, seed, out } => {
            let mut cfg = load(&common)?;
            if let Some(c) = count {
                cfg.count = c;
            }
            if let Some(s) = seed {
                cfg.env.seed = s;
            }
            let cfg = checked(cfg)?;
            let out = out.unwrap_or_else(|| cfg.paths.data_dir.clone());
            commands::gen_data(&cfg, &out)?;
            println!("wrote {} items to {}", cfg.count, out.display());
        }
        Command::Flip { common, data, out, mode } => {
            let mut cfg = load(&common)?;
            if let Some(m) = mode {
                cfg.rewrite_mode = match m {
                    Mode::RuleBased => RewriteMode::RuleBased,
                    Mode::Llm => RewriteMode::Llm,
                };
            }
            let cfg = checked(cfg)?;
            let data = data.unwrap_or_else(|| cfg.paths.data_dir.clone());
            let out = out.unwrap_or_else(|| data.clone());
            let report = commands::flip(&cfg, &data, &out)?;
            println!(
                "verification: {} passed, {} failed, {} unverified of {}",
                report.passed, report.failed, report.unverified, report.total
            );
        }
        Command::Train { common, data, flipped_data, steps, eta, beta, seed, out, resume, checkpoint_every } => {
            let mut cfg = load(&common)?;
            if let Some(s) = steps {
                cfg.steps = s;
            }
            if let Some(e) = eta {
                cfg.train.eta = e;
            }
            if let Some(b) = beta {
                cfg.train.beta = b;
            }
            if let Some(s) = seed {
                cfg.train.seed = s;
            }
            if let Some(k) = checkpoint_every {
                cfg.checkpoint_every = k;
            }
            let cfg = checked(cfg)?;
            let data = data.unwrap_or_else(|| cfg.paths.data_dir.join(commands::QA));
            let flipped = flipped_data.unwrap_or_else(|| cfg.paths.data_dir.join(commands::QA_FLIPPED));
            let out = out.unwrap_or_else(|| cfg.paths.out_dir.clone());
            let o = commands::train(&cfg, &data, &flipped, &out, resume.as_deref())?;
            println!(
                "trained {} steps; holdout accuracy original {:.3}, flipped {:.3}",
                o.trainer.step, o.holdout.accuracy_original, o.holdout.accuracy_flipped
            );
        }
        Command::Eval { common, preds, data, rules, judge_url, out_dir } => {
            let cfg = checked(load(&common)?)?;
            let out = out_dir.unwrap_or_else(|| cfg.paths.out_dir.clone());
            let r = commands::eval(&cfg, &preds, &data, rules.as_deref(), judge_url.as_deref(), &out)?;
            if !r.counts.unknown_qa_ids.is_empty() {
                eprintln!("excluded {} predictions with unknown qa_id", r.counts.unknown_qa_ids.len());
            }
            print!("{}", r.to_markdown());
        }
        Command::AblateEta { common, data, flipped_data, etas, seeds, steps, out, parallel } => {
            let mut cfg = load(&common)?;
            if let Some(s) = steps {
                cfg.steps = s;
            }
            let cfg = checked(cfg)?;
            let data = data.unwrap_or_else(|| cfg.paths.data_dir.join(commands::QA));
            let flipped = flipped_data.unwrap_or_else(|| cfg.paths.data_dir.join(commands::QA_FLIPPED));
            let out = out.unwrap_or_else(|| cfg.paths.out_dir.clone());
            let t = commands::ablate_eta(&cfg, &data, &flipped, &etas, &seeds, &out, parallel)?;
            print!("{}", commands::ablation_markdown(&t));
        }
        Command::Report { inputs, out } => {
            let md = commands::report(&inputs)?;
            match out {
                Some(p) => std::fs::write(p, md)?,
                None => print!("{md}"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

