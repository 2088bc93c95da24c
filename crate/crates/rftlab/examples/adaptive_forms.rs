//! Trains the adaptive strategy, which accepts both a think-then-answer
//! shape and a bare answer shape, and shows which form the policy settles
//! on per seed.
//!
//!     cargo run --example adaptive_forms

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rftlab::grpo::{train, GrpoConfig};
use rftlab::harness::{evaluate, gen_corpus, vocabulary_for, ExperimentConfig, TaskFamily};
use rftlab::policy::ParameterTable;
use rftlab::strategies::{strategy, StrategyKind};

fn main() {
    let mut cfg = ExperimentConfig::default();
    cfg.task_family = TaskFamily::Multichoice;
    cfg.n_train = 4;
    cfg.eval_set_size = 4;
    cfg.max_len = 6;
    // beta = 0: once the group reward variance vanishes, a KL penalty is the
    // only remaining force and it slowly pulls the converged form apart
    cfg.grpo = GrpoConfig {
        kl_beta: 0.0,
        learning_rate: 1.0,
        max_steps: 20_000,
        ..GrpoConfig::default()
    };

    let corpus = gen_corpus(&cfg, cfg.n_train, 0);
    let vocab = vocabulary_for(&corpus).unwrap();
    let strat = strategy(StrategyKind::AdaptiveThinking);

    // the interesting outcome is the response *shape*: once every rollout in
    // a group shares one shape the advantages vanish and the form is frozen,
    // whether or not the frozen answer happens to be the right letter
    println!("{:>6} {:>9} {:>9}  form fractions", "seed", "format", "length");
    for seed in [100u64, 101, 102] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
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
        let report = evaluate(&outcome.params, &corpus, &strat, &vocab, cfg.max_len).unwrap();
        let fractions: Vec<String> =
            report.form_fractions.iter().map(|(k, v)| format!("{k}={v:.2}")).collect();
        println!(
            "{:>6} {:>9.2} {:>9.2}  {}",
            seed,
            report.mean_format,
            report.mean_length,
            fractions.join(" ")
        );
    }
}
