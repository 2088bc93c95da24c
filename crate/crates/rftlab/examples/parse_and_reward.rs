//! Scores a handful of canned responses under each response strategy and
//! prints the format/accuracy breakdown plus the parsed segments.
//!
//!     cargo run --example parse_and_reward

use rftlab::rewards::{parse_tags, total_reward};
use rftlab::strategies::{strategy, StrategyKind};
use rftlab::tasks::{TaskInstance, VerifierKind};

fn instance() -> TaskInstance {
    TaskInstance {
        template_id: "demo-texture".into(),
        question: "What texture is shown? Please choose one from list [ grooved, smooth ].".into(),
        truth: "grooved".into(),
        choice_list: Some(vec!["grooved".into(), "smooth".into()]),
        verifier_kind: VerifierKind::Contains,
        difficulty: 1,
    }
}

fn main() {
    let samples: &[(StrategyKind, &str)] = &[
        (
            StrategyKind::Thinking,
            "<think>The ridges are parallel, so grooved.</think> <answer>grooved</answer>",
        ),
        (StrategyKind::Thinking, "<think>Looks smooth.</think> <answer>grooved</answer>"),
        (StrategyKind::Thinking, "grooved"), // malformed but the fallback can still score
        (StrategyKind::NoThinking, "grooved"),
        (StrategyKind::NoThinking, "it is grooved"), // exact shape: whole response must match
        (
            StrategyKind::ThinkAfterAnswer,
            "<answer>grooved</answer> <reason>parallel ridges</reason>",
        ),
        (StrategyKind::AdaptiveThinking, "<answer>grooved</answer>"),
        (
            StrategyKind::AdaptiveThinking,
            "<think>ridges</think> <answer>smooth</answer>",
        ),
    ];

    let inst = instance();
    for (kind, text) in samples {
        let spec = strategy(*kind);
        let parsed = parse_tags(text, &spec.grammar);
        let r = total_reward(text, &spec, &inst);
        println!(
            "{:<18} format={} accuracy={} total={:.1}  answer_tag={:?}  {:?}",
            kind.name(),
            r.format,
            r.accuracy,
            r.total,
            parsed.answer_text,
            text
        );
    }
}
