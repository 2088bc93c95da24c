//! Verifies the analytic objective gradient against central finite
//! differences on a randomly perturbed rollout group and prints the worst
//! relative error per probed context.
//!
//!     cargo run --example gradient_check

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rftlab::grpo::{build_rollout_group, grpo_gradient, grpo_objective, GrpoConfig};
use rftlab::policy::{ParameterTable, Vocabulary};
use rftlab::strategies::{strategy, StrategyKind};
use rftlab::tasks::{TaskInstance, VerifierKind};

const TEMPLATE: &str = "gradcheck";

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let vocab = Vocabulary::new(vec!["a", "b", "c", "<eos>"], "<eos>").unwrap();
    let instance = TaskInstance {
        template_id: TEMPLATE.into(),
        question: "emit a".into(),
        truth: "a".into(),
        choice_list: None,
        verifier_kind: VerifierKind::Exact,
        difficulty: 1,
    };
    let cfg = GrpoConfig::default();
    let strat = strategy(StrategyKind::NoThinking);

    // snapshots at the fresh table, then nudge the live parameters on every
    // context the rollouts visited so the surrogate is probed off rest
    let mut params = ParameterTable::new(vocab.len(), 1);
    let group =
        build_rollout_group(&params, &params, &instance, &strat, &vocab, &cfg, 4, &mut rng)
            .unwrap();
    for r in &group.responses {
        for pos in 0..r.tokens.len() {
            let ctx = params.context_at(TEMPLATE, &r.tokens, pos);
            let bump: f64 = rng.gen_range(-0.01..0.01);
            params.logits_mut(&ctx)[0] += bump;
        }
    }

    let h = 1e-5;
    let grad = grpo_gradient(&group, &params, &cfg).unwrap();
    println!("{:<40} {:>13} {:>13} {:>10}", "context", "analytic", "finite diff", "rel err");
    for (ctx, row) in &grad {
        let mut worst = (0.0f64, 0.0f64, 0.0f64);
        for slot in 0..row.len() {
            let mut plus = params.clone();
            plus.logits_mut(ctx)[slot] += h;
            let mut minus = params.clone();
            minus.logits_mut(ctx)[slot] -= h;
            let fd = (grpo_objective(&group, &plus, &cfg).unwrap()
                - grpo_objective(&group, &minus, &cfg).unwrap())
                / (2.0 * h);
            let rel = (row[slot] - fd).abs() / row[slot].abs().max(fd.abs()).max(1.0);
            if rel >= worst.2 {
                worst = (row[slot], fd, rel);
            }
        }
        println!("{:<40} {:>13.6e} {:>13.6e} {:>10.2e}", format!("{ctx:?}"), worst.0, worst.1, worst.2);
    }
}
