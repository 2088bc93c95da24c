//! Smallest possible training run: one question, tiny vocabulary, and a
//! printout of the reward climbing as the policy concentrates on the
//! correct sequence.
//!
//!     cargo run --example bandit_convergence

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rftlab::grpo::{train, GrpoConfig};
use rftlab::policy::{ParameterTable, Vocabulary};
use rftlab::strategies::{strategy, StrategyKind};
use rftlab::tasks::{TaskInstance, VerifierKind};

fn main() {
    let vocab = Vocabulary::new(vec!["yes", "no", "maybe", "<eos>"], "<eos>").unwrap();
    let task = TaskInstance {
        template_id: "bandit".into(),
        question: "Reply with exactly: yes".into(),
        truth: "yes".into(),
        choice_list: None,
        verifier_kind: VerifierKind::Exact,
        difficulty: 1,
    };
    let cfg = GrpoConfig {
        learning_rate: 0.5,
        kl_beta: 0.0,
        max_steps: 300,
        ..GrpoConfig::default()
    };
    let strat = strategy(StrategyKind::NoThinking);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let outcome = train(
        ParameterTable::new(vocab.len(), 1),
        std::slice::from_ref(&task),
        &strat,
        &vocab,
        &cfg,
        4,
        &mut rng,
        None,
    )
    .unwrap();

    println!("{:>5} {:>12} {:>10}", "step", "mean reward", "length");
    for r in outcome.trace.iter().step_by(25) {
        println!("{:>5} {:>12.3} {:>10.2}", r.step, r.mean_reward, r.mean_response_length);
    }
    let greedy = outcome.params.greedy_response("bandit", &vocab, 4);
    println!("greedy decode after training: {:?}", vocab.render(&greedy.tokens));
}
