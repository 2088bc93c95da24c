//! Runs the full experiment harness over all four strategies and two seeds,
//! writes the run directory, then prints the per-strategy comparison.
//!
//!     cargo run --example compare_strategies

use rftlab::harness::{comparison_rows, run, validate_run, ExperimentConfig, TaskFamily};
use rftlab::strategies::StrategyKind;

fn main() {
    let mut cfg = ExperimentConfig::default();
    cfg.strategies = StrategyKind::ALL.to_vec();
    cfg.seeds = vec![100, 101];
    cfg.task_family = TaskFamily::Classification;
    cfg.gen.n_classes = 3;
    cfg.n_train = 3;
    cfg.eval_set_size = 3;
    cfg.max_len = 12;
    cfg.grpo.learning_rate = 3.0;
    cfg.grpo.max_steps = 800;
    cfg.out_dir = std::env::temp_dir().join("rftlab-compare-demo");

    let summaries = run(&cfg).unwrap();
    println!("run directory: {}", cfg.out_dir.display());
    println!("cells trained: {}", summaries.len());

    let issues = validate_run(&cfg.out_dir).unwrap();
    println!("validate-run issues: {issues:?}");

    println!(
        "\n{:<20} {:>9} {:>14} {:>8} {:>10}",
        "strategy", "accuracy", "median steps", "length", "reached"
    );
    for row in comparison_rows(&summaries) {
        println!(
            "{:<20} {:>9.3} {:>14} {:>8.2} {:>7}/{}",
            row.strategy,
            row.median_final_accuracy,
            row.median_steps_to_threshold.map_or("-".into(), |s| format!("{s:.0}")),
            row.median_final_length,
            row.seeds_reaching_threshold,
            row.n_seeds
        );
    }
}
