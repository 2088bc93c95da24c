//! Experiment runner: configuration, seeding, per-(strategy, seed) training
//! cells, deterministic greedy evaluation, and artifact emission (JSONL
//! traces and corpora, CSV summaries, a plain-text comparison table).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{
    detect_inconsistency, inconsistency_report, param_drift, steps_to_threshold, ConsistencyRecord,
    DriftGrouping, InconsistencyReport,
};
use crate::grpo::{train, GrpoConfig, TraceRecord};
use crate::policy::{ParameterTable, Vocabulary};
use crate::rewards::{parse_tags, total_reward, RewardBreakdown};
use crate::strategies::{classify_response_form, strategy, FormClass, StrategyKind, StrategySpec};
use crate::tasks::{gen_arithmetic, gen_classification, gen_multichoice, GeneratorConfig, TaskInstance};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("runtime error: {0}")]
    Runtime(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<crate::grpo::GrpoError> for HarnessError {
    fn from(e: crate::grpo::GrpoError) -> Self {
        match e {
            crate::grpo::GrpoError::InvalidConfig(m) => HarnessError::Config(m),
            other => HarnessError::Runtime(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskFamily {
    Classification,
    Arithmetic,
    Multichoice,
}

impl TaskFamily {
    pub fn name(self) -> &'static str {
        match self {
            TaskFamily::Classification => "classification",
            TaskFamily::Arithmetic => "arithmetic",
            TaskFamily::Multichoice => "multichoice",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [TaskFamily::Classification, TaskFamily::Arithmetic, TaskFamily::Multichoice]
            .into_iter()
            .find(|f| f.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub strategies: Vec<StrategyKind>,
    pub seeds: Vec<u64>,
    pub grpo: GrpoConfig,
    pub gen: GeneratorConfig,
    pub task_family: TaskFamily,
    pub noise: f64,
    pub n_train: usize,
    pub eval_set_size: usize,
    pub max_len: usize,
    pub context_order: usize,
    pub threshold: f64,
    pub window: usize,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            strategies: StrategyKind::ALL.to_vec(),
            seeds: vec![100, 101, 102, 103, 104],
            grpo: GrpoConfig::default(),
            gen: GeneratorConfig::default(),
            task_family: TaskFamily::Classification,
            noise: 0.0,
            n_train: 64,
            eval_set_size: 64,
            max_len: 16,
            context_order: 1,
            threshold: 0.9,
            window: 20,
            out_dir: PathBuf::from("run-out"),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.strategies.is_empty() {
            return Err(HarnessError::Config("strategies: must name at least one".into()));
        }
        if self.seeds.is_empty() {
            return Err(HarnessError::Config("seeds: must be non-empty".into()));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            return Err(HarnessError::Config("seeds: must be distinct".into()));
        }
        if self.eval_set_size == 0 {
            return Err(HarnessError::Config("eval_set_size: must be >= 1".into()));
        }
        if self.n_train == 0 {
            return Err(HarnessError::Config("n_train: must be >= 1".into()));
        }
        if !(0.0..0.5).contains(&self.noise) {
            return Err(HarnessError::Config("noise: must be in [0, 0.5)".into()));
        }
        if self.max_len == 0 {
            return Err(HarnessError::Config("max_len: must be >= 1".into()));
        }
        if self.context_order > 3 {
            return Err(HarnessError::Config("context_order: must be 0..=3".into()));
        }
        if self.window == 0 {
            return Err(HarnessError::Config("window: must be >= 1".into()));
        }
        self.grpo
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        Ok(())
    }

    /// Canonical key=value rendering, also the accepted config-file syntax.
    pub fn echo(&self) -> String {
        let mut s = String::new();
        let strategies: Vec<&str> = self.strategies.iter().map(|k| k.name()).collect();
        let seeds: Vec<String> = self.seeds.iter().map(|x| x.to_string()).collect();
        let _ = writeln!(s, "strategies = {}", strategies.join(","));
        let _ = writeln!(s, "seeds = {}", seeds.join(","));
        let _ = writeln!(s, "task_family = {}", self.task_family.name());
        let _ = writeln!(s, "steps = {}", self.grpo.max_steps);
        let _ = writeln!(s, "group_size = {}", self.grpo.group_size);
        let _ = writeln!(s, "beta = {}", self.grpo.kl_beta);
        let _ = writeln!(s, "epsilon = {}", self.grpo.clip_epsilon);
        let _ = writeln!(s, "lr = {}", self.grpo.learning_rate);
        let _ = writeln!(s, "steps_per_snapshot = {}", self.grpo.steps_per_snapshot);
        let _ = writeln!(s, "grad_accum_steps = {}", self.grpo.grad_accum_steps);
        let _ = writeln!(s, "advantage_std_floor = {}", self.grpo.advantage_std_floor);
        let _ = writeln!(s, "n_classes = {}", self.gen.n_classes);
        let _ = writeln!(s, "choice_fraction = {}", self.gen.choice_fraction);
        let _ = writeln!(s, "gen_seed = {}", self.gen.seed);
        let _ = writeln!(s, "noise = {}", self.noise);
        let _ = writeln!(s, "n_train = {}", self.n_train);
        let _ = writeln!(s, "eval_set_size = {}", self.eval_set_size);
        let _ = writeln!(s, "max_len = {}", self.max_len);
        let _ = writeln!(s, "context_order = {}", self.context_order);
        let _ = writeln!(s, "threshold = {}", self.threshold);
        let _ = writeln!(s, "window = {}", self.window);
        let _ = writeln!(s, "out = {}", self.out_dir.display());
        s
    }

    /// Applies one `key = value` assignment (config-file line or CLI flag).
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), HarnessError> {
        let bad = |k: &str, v: &str| HarnessError::Config(format!("{k}: bad value {v:?}"));
        match key {
            "strategies" => {
                let mut out = Vec::new();
                for name in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                    out.push(
                        StrategyKind::from_name(name)
                            .ok_or_else(|| bad("strategies", name))?,
                    );
                }
                self.strategies = out;
            }
            "seeds" => {
                let mut out = Vec::new();
                for v in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                    out.push(v.parse().map_err(|_| bad("seeds", v))?);
                }
                self.seeds = out;
            }
            "task_family" => {
                self.task_family =
                    TaskFamily::from_name(value.trim()).ok_or_else(|| bad(key, value))?;
            }
            "steps" => self.grpo.max_steps = value.parse().map_err(|_| bad(key, value))?,
            "group_size" => self.grpo.group_size = value.parse().map_err(|_| bad(key, value))?,
            "beta" => self.grpo.kl_beta = value.parse().map_err(|_| bad(key, value))?,
            "epsilon" => self.grpo.clip_epsilon = value.parse().map_err(|_| bad(key, value))?,
            "lr" => self.grpo.learning_rate = value.parse().map_err(|_| bad(key, value))?,
            "steps_per_snapshot" => {
                self.grpo.steps_per_snapshot = value.parse().map_err(|_| bad(key, value))?;
            }
            "grad_accum_steps" => {
                self.grpo.grad_accum_steps = value.parse().map_err(|_| bad(key, value))?;
            }
            "advantage_std_floor" => {
                self.grpo.advantage_std_floor = value.parse().map_err(|_| bad(key, value))?;
            }
            "n_classes" => self.gen.n_classes = value.parse().map_err(|_| bad(key, value))?,
            "choice_fraction" => {
                self.gen.choice_fraction = value.parse().map_err(|_| bad(key, value))?;
            }
            "gen_seed" => self.gen.seed = value.parse().map_err(|_| bad(key, value))?,
            "noise" => self.noise = value.parse().map_err(|_| bad(key, value))?,
            "n_train" => self.n_train = value.parse().map_err(|_| bad(key, value))?,
            "eval_set_size" => self.eval_set_size = value.parse().map_err(|_| bad(key, value))?,
            "max_len" => self.max_len = value.parse().map_err(|_| bad(key, value))?,
            "context_order" => self.context_order = value.parse().map_err(|_| bad(key, value))?,
            "threshold" => self.threshold = value.parse().map_err(|_| bad(key, value))?,
            "window" => self.window = value.parse().map_err(|_| bad(key, value))?,
            "out" => self.out_dir = PathBuf::from(value),
            _ => return Err(HarnessError::Config(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    /// Parses the key=value config-file syntax; '#' starts a comment.
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                HarnessError::Config(format!("line {}: expected key = value", lineno + 1))
            })?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

/// Generates the task corpus for a family. Deterministic in (cfg, salt).
pub fn gen_corpus(cfg: &ExperimentConfig, n: usize, salt: u64) -> Vec<TaskInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.gen.seed.wrapping_add(salt));
    match cfg.task_family {
        TaskFamily::Classification => gen_classification(&cfg.gen, n, cfg.noise, &mut rng),
        TaskFamily::Arithmetic => gen_arithmetic(&cfg.gen, 0..=9, n, &mut rng),
        TaskFamily::Multichoice => {
            let base = gen_arithmetic(&cfg.gen, 0..=9, n, &mut rng);
            gen_multichoice(&base, 4, &mut rng)
        }
    }
}

/// Builds a closed vocabulary covering the corpus: tag tokens, every truth
/// and choice token, a filler token, and end-of-sequence.
pub fn vocabulary_for(corpus: &[TaskInstance]) -> Result<Vocabulary, HarnessError> {
    let mut answers: std::collections::BTreeSet<String> = std::collections::BTreeSet::new();
    for inst in corpus {
        answers.insert(inst.truth.clone());
        if let Some(choices) = &inst.choice_list {
            for c in choices {
                answers.insert(c.clone());
            }
        }
    }
    let mut tokens: Vec<String> = vec![
        "<think>".into(),
        "</think>".into(),
        "<answer>".into(),
        "</answer>".into(),
        "<reason>".into(),
        "</reason>".into(),
        "...".into(),
    ];
    tokens.extend(answers);
    tokens.push("<eos>".into());
    Vocabulary::new(tokens, "<eos>").map_err(|e| HarnessError::Config(e.to_string()))
}

/// One evaluated response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub id: usize,
    pub template_id: String,
    pub response: String,
    pub reward: RewardBreakdown,
    pub form: Option<FormClass>,
    pub consistency: Option<ConsistencyRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub records: Vec<EvalRecord>,
    pub accuracy: f64,
    pub mean_format: f64,
    pub mean_length: f64,
    pub form_fractions: BTreeMap<String, f64>,
    pub inconsistency: Option<InconsistencyReport>,
}

/// Deterministic greedy evaluation of a parameter table on a corpus.
pub fn evaluate(
    params: &ParameterTable,
    corpus: &[TaskInstance],
    strat: &StrategySpec,
    vocab: &Vocabulary,
    max_len: usize,
) -> Result<EvalReport, HarnessError> {
    if corpus.is_empty() {
        return Err(HarnessError::Config("evaluation corpus is empty".into()));
    }
    if params.vocab_size() != vocab.len() {
        return Err(HarnessError::Config(format!(
            "vocabulary size {} does not match parameter table ({})",
            vocab.len(),
            params.vocab_size()
        )));
    }
    let mut records = Vec::with_capacity(corpus.len());
    let mut acc_sum = 0.0;
    let mut fmt_sum = 0.0;
    let mut len_sum = 0.0;
    let mut form_counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut consistency_records = Vec::new();
    for (id, inst) in corpus.iter().enumerate() {
        let response = params.greedy_response(&inst.template_id, vocab, max_len);
        let text = vocab.render(&response.tokens);
        let reward = total_reward(&text, strat, inst);
        acc_sum += f64::from(reward.accuracy);
        fmt_sum += f64::from(reward.format);
        len_sum += response.tokens.len() as f64;
        let parsed = parse_tags(&text, &strat.grammar);
        let form = (strat.kind == StrategyKind::AdaptiveThinking)
            .then(|| classify_response_form(&parsed));
        if let Some(f) = form {
            *form_counts.entry(format!("{f:?}")).or_insert(0) += 1;
        }
        let consistency = parsed.answer_text.as_ref().map(|_| {
            detect_inconsistency(&format!("eval-{id}"), &parsed, inst)
        });
        if let Some(c) = &consistency {
            consistency_records.push(c.clone());
        }
        records.push(EvalRecord {
            id,
            template_id: inst.template_id.clone(),
            response: text,
            reward,
            form,
            consistency,
        });
    }
    let n = corpus.len() as f64;
    let form_fractions = form_counts
        .into_iter()
        .map(|(k, v)| (k, v as f64 / n))
        .collect();
    Ok(EvalReport {
        records,
        accuracy: acc_sum / n,
        mean_format: fmt_sum / n,
        mean_length: len_sum / n,
        form_fractions,
        inconsistency: inconsistency_report(&consistency_records).ok(),
    })
}

/// Per-(strategy, seed) run summary, written as JSON next to the trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub strategy: String,
    pub seed: u64,
    pub final_accuracy: f64,
    pub steps_to_threshold: Option<u64>,
    pub mean_length_first_decile: f64,
    pub mean_length_last_decile: f64,
    pub eval_mean_length: f64,
    pub form_fractions: BTreeMap<String, f64>,
    pub drift_total_l1: f64,
    pub wall_ms: u128,
}

fn decile_means(trace: &[TraceRecord]) -> (f64, f64) {
    if trace.is_empty() {
        return (0.0, 0.0);
    }
    let d = (trace.len() / 10).max(1);
    let first: f64 = trace[..d].iter().map(|r| r.mean_response_length).sum::<f64>() / d as f64;
    let last: f64 =
        trace[trace.len() - d..].iter().map(|r| r.mean_response_length).sum::<f64>() / d as f64;
    (first, last)
}

fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), HarnessError> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    for item in items {
        serde_json::to_writer(&mut w, item).map_err(std::io::Error::other)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, HarnessError> {
    let text = fs::read_to_string(path)?;
    let mut out = Vec::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        out.push(
            serde_json::from_str(line)
                .map_err(|e| HarnessError::Runtime(format!("{}: {e}", path.display())))?,
        );
    }
    Ok(out)
}

fn cell_name(kind: StrategyKind, seed: u64) -> String {
    format!("{}_{seed}", kind.name())
}

/// Runs the full experiment grid and writes every artifact into the output
/// directory. Pure function of the config, including all file contents except
/// wall-time fields in summaries.
pub fn run(cfg: &ExperimentConfig) -> Result<Vec<CellSummary>, HarnessError> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.out_dir)?;
    fs::write(cfg.out_dir.join("config_echo.txt"), cfg.echo())?;

    let train_corpus = gen_corpus(cfg, cfg.n_train, 0);
    let eval_corpus = gen_corpus(cfg, cfg.eval_set_size, 1_000_003);
    write_jsonl(&cfg.out_dir.join("tasks_train.jsonl"), &train_corpus)?;
    write_jsonl(&cfg.out_dir.join("tasks_eval.jsonl"), &eval_corpus)?;

    let vocab = vocabulary_for(&train_corpus)?;
    let initial = ParameterTable::new(vocab.len(), cfg.context_order);
    fs::write(cfg.out_dir.join("params_init.txt"), initial.to_text())?;

    let mut summaries = Vec::new();
    for &kind in &cfg.strategies {
        let strat = strategy(kind);
        for &seed in &cfg.seeds {
            let cell = cell_name(kind, seed);
            let trace_path = cfg.out_dir.join(format!("trace_{cell}.jsonl"));
            let mut sink = BufWriter::new(fs::File::create(&trace_path)?);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let outcome = train(
                initial.clone(),
                &train_corpus,
                &strat,
                &vocab,
                &cfg.grpo,
                cfg.max_len,
                &mut rng,
                Some(&mut sink),
            )?;
            sink.flush()?;
            fs::write(
                cfg.out_dir.join(format!("params_{cell}.txt")),
                outcome.params.to_text(),
            )?;

            let report = evaluate(&outcome.params, &eval_corpus, &strat, &vocab, cfg.max_len)?;
            write_jsonl(&cfg.out_dir.join(format!("eval_{cell}.jsonl")), &report.records)?;

            let drift = param_drift(&initial, &outcome.params, DriftGrouping::TemplateFamily)
                .map_err(|e| HarnessError::Runtime(e.to_string()))?;
            let (first_decile, last_decile) = decile_means(&outcome.trace);
            let summary = CellSummary {
                strategy: kind.name().to_string(),
                seed,
                final_accuracy: report.accuracy,
                steps_to_threshold: steps_to_threshold(
                    &outcome.trace,
                    "mean_accuracy_reward",
                    cfg.threshold,
                    cfg.window,
                )
                .map_err(|e| HarnessError::Runtime(e.to_string()))?,
                mean_length_first_decile: first_decile,
                mean_length_last_decile: last_decile,
                eval_mean_length: report.mean_length,
                form_fractions: report.form_fractions,
                drift_total_l1: drift.total_norm,
                wall_ms: outcome.wall_ms,
            };
            fs::write(
                cfg.out_dir.join(format!("summary_{cell}.json")),
                serde_json::to_string_pretty(&summary).map_err(std::io::Error::other)?,
            )?;
            summaries.push(summary);
        }
    }
    write_comparison(&cfg.out_dir, &summaries)?;
    Ok(summaries)
}

fn median(mut values: Vec<f64>) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    })
}

/// Cross-strategy comparison row, medians across seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub strategy: String,
    pub n_seeds: usize,
    /// Median across seeds; a seed that never crosses counts as missing.
    pub median_steps_to_threshold: Option<f64>,
    pub seeds_reaching_threshold: usize,
    pub median_final_accuracy: f64,
    pub median_final_length: f64,
    pub median_with_thinking_fraction: Option<f64>,
}

pub fn comparison_rows(summaries: &[CellSummary]) -> Vec<ComparisonRow> {
    let mut by_strategy: BTreeMap<&str, Vec<&CellSummary>> = BTreeMap::new();
    for s in summaries {
        by_strategy.entry(&s.strategy).or_default().push(s);
    }
    let mut rows = Vec::new();
    for (name, cells) in by_strategy {
        let crossed: Vec<f64> = cells
            .iter()
            .filter_map(|c| c.steps_to_threshold.map(|s| s as f64))
            .collect();
        let with_thinking: Vec<f64> = cells
            .iter()
            .filter_map(|c| c.form_fractions.get("WithThinking").copied())
            .collect();
        rows.push(ComparisonRow {
            strategy: name.to_string(),
            n_seeds: cells.len(),
            seeds_reaching_threshold: crossed.len(),
            median_steps_to_threshold: median(crossed),
            median_final_accuracy: median(cells.iter().map(|c| c.final_accuracy).collect())
                .unwrap_or(0.0),
            median_final_length: median(cells.iter().map(|c| c.eval_mean_length).collect())
                .unwrap_or(0.0),
            median_with_thinking_fraction: if with_thinking.is_empty() {
                None
            } else {
                median(with_thinking)
            },
        });
    }
    rows
}

fn write_comparison(dir: &Path, summaries: &[CellSummary]) -> Result<(), HarnessError> {
    let rows = comparison_rows(summaries);
    let mut table = String::new();
    let _ = writeln!(
        table,
        "{:<20} {:>8} {:>18} {:>10} {:>12} {:>14}",
        "strategy", "seeds", "median-steps-0.9", "reached", "median-acc", "median-length"
    );
    for r in &rows {
        let steps = r
            .median_steps_to_threshold
            .map_or("-".to_string(), |s| format!("{s:.0}"));
        let _ = writeln!(
            table,
            "{:<20} {:>8} {:>18} {:>10} {:>12.4} {:>14.2}",
            r.strategy, r.n_seeds, steps, r.seeds_reaching_threshold, r.median_final_accuracy,
            r.median_final_length
        );
    }
    fs::write(dir.join("comparison.txt"), &table)?;

    let mut csv = String::from("metric,strategy,value\n");
    for r in &rows {
        if let Some(s) = r.median_steps_to_threshold {
            let _ = writeln!(csv, "median_steps_to_threshold,{},{s}", r.strategy);
        }
        let _ = writeln!(csv, "seeds_reaching_threshold,{},{}", r.strategy, r.seeds_reaching_threshold);
        let _ = writeln!(csv, "median_final_accuracy,{},{}", r.strategy, r.median_final_accuracy);
        let _ = writeln!(csv, "median_final_length,{},{}", r.strategy, r.median_final_length);
        if let Some(f) = r.median_with_thinking_fraction {
            let _ = writeln!(csv, "median_with_thinking_fraction,{},{f}", r.strategy);
        }
    }
    fs::write(dir.join("comparison.csv"), csv)?;
    Ok(())
}

/// Recomputes the comparison table for an existing run directory.
pub fn compare_dir(dir: &Path) -> Result<Vec<ComparisonRow>, HarnessError> {
    let summaries = load_summaries(dir)?;
    write_comparison(dir, &summaries)?;
    Ok(comparison_rows(&summaries))
}

fn load_summaries(dir: &Path) -> Result<Vec<CellSummary>, HarnessError> {
    let mut summaries = Vec::new();
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("summary_") && n.ends_with(".json"))
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(HarnessError::Runtime(format!(
            "no summary_*.json files in {}",
            dir.display()
        )));
    }
    for p in paths {
        let text = fs::read_to_string(&p)?;
        summaries.push(
            serde_json::from_str(&text)
                .map_err(|e| HarnessError::Runtime(format!("{}: {e}", p.display())))?,
        );
    }
    Ok(summaries)
}

/// Checks a run directory for artifact closure: config echo, per-cell traces,
/// evaluations, summaries and parameter tables, and the comparison table.
pub fn validate_run(dir: &Path) -> Result<Vec<String>, HarnessError> {
    let mut missing = Vec::new();
    let echo_path = dir.join("config_echo.txt");
    if !echo_path.exists() {
        return Err(HarnessError::Runtime(format!("{} missing config_echo.txt", dir.display())));
    }
    let cfg = ExperimentConfig::parse(&fs::read_to_string(&echo_path)?)?;
    let mut expect = vec![
        "tasks_train.jsonl".to_string(),
        "tasks_eval.jsonl".to_string(),
        "params_init.txt".to_string(),
        "comparison.txt".to_string(),
        "comparison.csv".to_string(),
    ];
    for &kind in &cfg.strategies {
        for &seed in &cfg.seeds {
            let cell = cell_name(kind, seed);
            expect.push(format!("trace_{cell}.jsonl"));
            expect.push(format!("eval_{cell}.jsonl"));
            expect.push(format!("summary_{cell}.json"));
            expect.push(format!("params_{cell}.txt"));
        }
    }
    for name in expect {
        if !dir.join(&name).exists() {
            missing.push(name);
        }
    }
    Ok(missing)
}
