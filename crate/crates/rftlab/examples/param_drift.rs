//! Trains briefly, then decomposes the parameter movement into grouped L1
//! norms three different ways; each grouping sums to the same total.
//!
//!     cargo run --example param_drift

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rftlab::analysis::{param_drift, DriftGrouping};
use rftlab::grpo::{train, GrpoConfig};
use rftlab::harness::{gen_corpus, vocabulary_for, ExperimentConfig, TaskFamily};
use rftlab::policy::ParameterTable;
use rftlab::strategies::{strategy, StrategyKind};

fn main() {
    let mut cfg = ExperimentConfig::default();
    cfg.task_family = TaskFamily::Classification;
    cfg.gen.n_classes = 3;
    cfg.n_train = 3;
    cfg.max_len = 12;
    cfg.grpo = GrpoConfig { learning_rate: 3.0, max_steps: 300, ..GrpoConfig::default() };

    let corpus = gen_corpus(&cfg, cfg.n_train, 0);
    let vocab = vocabulary_for(&corpus).unwrap();
    let before = ParameterTable::new(vocab.len(), cfg.context_order);
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    let after = train(
        before.clone(),
        &corpus,
        &strategy(StrategyKind::Thinking),
        &vocab,
        &cfg.grpo,
        cfg.max_len,
        &mut rng,
        None,
    )
    .unwrap()
    .params;

    for grouping in [DriftGrouping::TemplateFamily, DriftGrouping::ContextFill, DriftGrouping::LastToken]
    {
        let report = param_drift(&before, &after, grouping).unwrap();
        println!("grouping {:?} (total L1 {:.3}):", grouping, report.total_norm);
        for (group, norm) in &report.group_norms {
            println!("  {group:<10} {norm:>10.3}");
        }
    }
}
