//! Trains the Thinking strategy on the synthetic classification family and
//! reports trace milestones, the greedy evaluation, and steps-to-threshold.
//!
//!     cargo run --example train_classification

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rftlab::analysis::steps_to_threshold;
use rftlab::grpo::train;
use rftlab::harness::{evaluate, gen_corpus, vocabulary_for, ExperimentConfig, TaskFamily};
use rftlab::policy::ParameterTable;
use rftlab::strategies::{strategy, StrategyKind};

fn main() {
    let mut cfg = ExperimentConfig::default();
    cfg.task_family = TaskFamily::Classification;
    cfg.gen.n_classes = 3;
    cfg.n_train = 3;
    cfg.max_len = 12;
    cfg.grpo.learning_rate = 3.0;
    cfg.grpo.max_steps = 1500;

    let corpus = gen_corpus(&cfg, cfg.n_train, 0);
    let vocab = vocabulary_for(&corpus).unwrap();
    println!("corpus: {} questions, vocabulary of {} tokens", corpus.len(), vocab.len());
    println!("sample question: {}", corpus[0].question);

    let strat = strategy(StrategyKind::Thinking);
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    let outcome = train(
        ParameterTable::new(vocab.len(), cfg.context_order),
        &corpus,
        &strat,
        &vocab,
        &cfg.grpo,
        cfg.max_len,
        &mut rng,
        None,
    )
    .unwrap();

    println!("\n{:>5} {:>8} {:>8} {:>8} {:>8}", "step", "reward", "acc", "format", "length");
    for r in outcome.trace.iter().step_by(150) {
        println!(
            "{:>5} {:>8.3} {:>8.3} {:>8.3} {:>8.2}",
            r.step, r.mean_reward, r.mean_accuracy_reward, r.format_pass_rate, r.mean_response_length
        );
    }

    let hit = steps_to_threshold(&outcome.trace, "mean_accuracy_reward", 0.9, 20).unwrap();
    println!("\nsteps to windowed accuracy >= 0.9: {hit:?}");

    let report = evaluate(&outcome.params, &corpus, &strat, &vocab, cfg.max_len).unwrap();
    println!(
        "greedy eval: accuracy {:.2}, format {:.2}, mean length {:.2}",
        report.accuracy, report.mean_format, report.mean_length
    );
    for rec in report.records.iter().take(3) {
        println!("  {:<14} -> {:?}", rec.template_id, rec.response);
    }
}
