use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rftlab::analysis::{inconsistency_report, param_drift, steps_to_threshold, DriftGrouping};
use rftlab::grpo::TraceRecord;
use rftlab::harness::{
    self, compare_dir, evaluate, read_jsonl, validate_run, EvalRecord, ExperimentConfig,
    HarnessError, TaskFamily,
};
use rftlab::policy::ParameterTable;
use rftlab::strategies::{strategy, StrategyKind};
use rftlab::tasks::TaskInstance;

#[derive(Parser)]
#[command(name = "rftlab", version, about = "Rule-based RFT experiments on a tabular softmax policy")]
struct Cli {
    #[command(subcommand)]
    command: Commands,
}

#[derive(Args, Default)]
struct Overrides {
    /// Key-value config file; flags below override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated strategies: thinking|no-thinking|think-after-answer|adaptive
    #[arg(long)]
    strategy: Option<String>,
    /// Comma-separated seeds
    #[arg(long)]
    seed: Option<String>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Training steps
    #[arg(long)]
    steps: Option<u64>,
    /// Rollout group size G
    #[arg(long)]
    group_size: Option<usize>,
    /// KL penalty coefficient
    #[arg(long)]
    beta: Option<f64>,
    /// Clipping half-width
    #[arg(long)]
    epsilon: Option<f64>,
    /// Learning rate
    #[arg(long)]
    lr: Option<f64>,
}

impl Overrides {
    fn build(&self) -> Result<ExperimentConfig, HarnessError> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(v) = &self.strategy {
            cfg.set("strategies", v)?;
        }
        if let Some(v) = &self.seed {
            cfg.set("seeds", v)?;
        }
        if let Some(v) = &self.out {
            cfg.out_dir = v.clone();
        }
        if let Some(v) = self.steps {
            cfg.grpo.max_steps = v;
        }
        if let Some(v) = self.group_size {
            cfg.grpo.group_size = v;
        }
        if let Some(v) = self.beta {
            cfg.grpo.kl_beta = v;
        }
        if let Some(v) = self.epsilon {
            cfg.grpo.clip_epsilon = v;
        }
        if let Some(v) = self.lr {
            cfg.grpo.learning_rate = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Commands {
    /// Train every (strategy, seed) cell and emit traces, evals, summaries
    /// and the comparison table
    Train(Overrides),
    /// Greedy-evaluate a saved parameter table on a task corpus
    Eval {
        /// Parameter table file (text format produced by train)
        #[arg(long)]
        params: PathBuf,
        /// Task corpus (JSONL produced by gen-tasks or train)
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        strategy: String,
        #[arg(long)]
        max_len: Option<usize>,
    },
    /// Post-hoc analysis of run artifacts
    Analyze {
        /// Trace file: report steps-to-threshold and length dynamics
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Eval file: report think/answer consistency statistics
        #[arg(long)]
        eval: Option<PathBuf>,
        /// Parameter tables: report L1 drift by group
        #[arg(long)]
        params_before: Option<PathBuf>,
        #[arg(long)]
        params_after: Option<PathBuf>,
        #[arg(long, default_value_t = 0.9)]
        threshold: f64,
        #[arg(long, default_value_t = 20)]
        window: usize,
    },
    /// Rebuild the cross-strategy comparison table from a run directory
    Compare {
        #[arg(long)]
        dir: PathBuf,
    },
    /// Generate a synthetic task corpus to a JSONL file
    GenTasks {
        #[arg(long, default_value = "classification")]
        family: String,
        #[arg(long, default_value_t = 64)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a run directory for artifact completeness
    ValidateRun {
        #[arg(long)]
        dir: PathBuf,
    },
}

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

fn exit_for(err: &HarnessError) -> u8 {
    match err {
        HarnessError::Config(_) => EXIT_CONFIG,
        _ => EXIT_RUNTIME,
    }
}

fn run_command(cmd: Commands) -> Result<(), HarnessError> {
    match cmd {
        Commands::Train(overrides) => {
            let cfg = overrides.build()?;
            let summaries = harness::run(&cfg)?;
            for s in &summaries {
                let steps = s
                    .steps_to_threshold
                    .map_or("-".to_string(), |v| v.to_string());
                println!(
                    "{:<20} seed {:<6} acc {:.4}  steps-to-threshold {}",
                    s.strategy, s.seed, s.final_accuracy, steps
                );
            }
            println!("artifacts written to {}", cfg.out_dir.display());
            Ok(())
        }
        Commands::Eval { params, corpus, strategy: strat_name, max_len } => {
            let kind = StrategyKind::from_name(&strat_name)
                .ok_or_else(|| HarnessError::Config(format!("unknown strategy {strat_name:?}")))?;
            let table = ParameterTable::from_text(
                &std::fs::read_to_string(&params)
                    .map_err(|e| HarnessError::Config(format!("{}: {e}", params.display())))?,
            )
            .map_err(|e| HarnessError::Config(e.to_string()))?;
            let corpus: Vec<TaskInstance> = read_jsonl(&corpus)?;
            let vocab = harness::vocabulary_for(&corpus)?;
            let report = evaluate(&table, &corpus, &strategy(kind), &vocab, max_len.unwrap_or(16))?;
            println!(
                "{}",
                serde_json::to_string_pretty(&report).map_err(std::io::Error::other)?
            );
            Ok(())
        }
        Commands::Analyze { trace, eval, params_before, params_after, threshold, window } => {
            let mut did_something = false;
            if let Some(path) = trace {
                let records: Vec<TraceRecord> = read_jsonl(&path)?;
                let steps = steps_to_threshold(&records, "mean_accuracy_reward", threshold, window)
                    .map_err(|e| HarnessError::Config(e.to_string()))?;
                println!(
                    "steps_to_threshold(accuracy >= {threshold}, window {window}): {}",
                    steps.map_or("never".to_string(), |s| s.to_string())
                );
                if let (Some(first), Some(last)) = (records.first(), records.last()) {
                    println!(
                        "mean_response_length: step {} -> {:.2}, step {} -> {:.2}",
                        first.step, first.mean_response_length, last.step, last.mean_response_length
                    );
                }
                did_something = true;
            }
            if let Some(path) = eval {
                let records: Vec<EvalRecord> = read_jsonl(&path)?;
                let consistency: Vec<_> =
                    records.iter().filter_map(|r| r.consistency.clone()).collect();
                match inconsistency_report(&consistency) {
                    Ok(rep) => println!(
                        "{}",
                        serde_json::to_string_pretty(&rep).map_err(std::io::Error::other)?
                    ),
                    Err(_) => println!(
                        "no consistency records in {} (responses without an answer tag are not cross-checked)",
                        path.display()
                    ),
                }
                did_something = true;
            }
            if let (Some(before), Some(after)) = (&params_before, &params_after) {
                let b = ParameterTable::from_text(&std::fs::read_to_string(before)?)
                    .map_err(|e| HarnessError::Config(e.to_string()))?;
                let a = ParameterTable::from_text(&std::fs::read_to_string(after)?)
                    .map_err(|e| HarnessError::Config(e.to_string()))?;
                for grouping in [
                    DriftGrouping::TemplateFamily,
                    DriftGrouping::ContextFill,
                    DriftGrouping::LastToken,
                ] {
                    let rep = param_drift(&b, &a, grouping)
                        .map_err(|e| HarnessError::Runtime(e.to_string()))?;
                    println!("drift by {grouping:?}: total L1 {:.6}", rep.total_norm);
                    for (group, norm) in &rep.group_norms {
                        println!("  {group}: {norm:.6}");
                    }
                }
                did_something = true;
            }
            if !did_something {
                return Err(HarnessError::Config(
                    "analyze: pass --trace, --eval, or --params-before/--params-after".into(),
                ));
            }
            Ok(())
        }
        Commands::Compare { dir } => {
            let rows = compare_dir(&dir)?;
            println!("{}", std::fs::read_to_string(dir.join("comparison.txt"))?);
            let _ = rows;
            Ok(())
        }
        Commands::GenTasks { family, n, seed, noise, out } => {
            let family = TaskFamily::from_name(&family)
                .ok_or_else(|| HarnessError::Config(format!("unknown task family {family:?}")))?;
            let mut cfg = ExperimentConfig {
                task_family: family,
                noise,
                ..Default::default()
            };
            cfg.gen.seed = seed;
            cfg.validate()?;
            let corpus = harness::gen_corpus(&cfg, n, 0);
            let text: String = corpus
                .iter()
                .map(|inst| serde_json::to_string(inst).unwrap() + "\n")
                .collect();
            std::fs::write(&out, text)?;
            println!("wrote {n} instances to {}", out.display());
            Ok(())
        }
        Commands::ValidateRun { dir } => {
            let missing = validate_run(&dir)?;
            if missing.is_empty() {
                println!("run directory {} is complete", dir.display());
                Ok(())
            } else {
                Err(HarnessError::Runtime(format!(
                    "missing artifacts: {}",
                    missing.join(", ")
                )))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run_command(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_for(&e))
        }
    }
}
