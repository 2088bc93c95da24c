//! Cross-checks the reasoning text of think-then-answer responses against
//! their answer tags and aggregates the verdicts into a report.
//!
//!     cargo run --example inconsistency_report

use rftlab::analysis::{detect_inconsistency, inconsistency_report};
use rftlab::rewards::parse_tags;
use rftlab::strategies::{strategy, StrategyKind};
use rftlab::tasks::{TaskInstance, VerifierKind};

fn texture_task(truth: &str) -> TaskInstance {
    TaskInstance {
        template_id: "demo-texture".into(),
        question: "What texture is shown? Please choose one from list [ grooved, smooth, swirly ]."
            .into(),
        truth: truth.into(),
        choice_list: Some(vec!["grooved".into(), "smooth".into(), "swirly".into()]),
        verifier_kind: VerifierKind::Contains,
        difficulty: 1,
    }
}

fn main() {
    let strat = strategy(StrategyKind::Thinking);
    // the last choice-list member mentioned in the think text is taken as
    // the reasoning's own answer and compared against the answer tag
    let samples: &[(&str, &str)] = &[
        ("grooved", "<think>Parallel ridges, so grooved.</think> <answer>grooved</answer>"),
        ("grooved", "<think>Could be smooth, maybe swirly.</think> <answer>grooved</answer>"),
        ("swirly", "<think>It spirals outward: swirly.</think> <answer>smooth</answer>"),
        ("smooth", "<think>No texture words come to mind.</think> <answer>smooth</answer>"),
        ("smooth", "<think>smooth, not grooved... final: smooth</think> <answer>grooved</answer>"),
    ];

    let mut records = Vec::new();
    for (i, (truth, text)) in samples.iter().enumerate() {
        let inst = texture_task(truth);
        let parsed = parse_tags(text, &strat.grammar);
        let rec = detect_inconsistency(&format!("sample-{i}"), &parsed, &inst);
        println!(
            "{:<10} verdict={:<14} think={:<18} tag={:<10} {:?}",
            rec.response_id,
            format!("{:?}", rec.verdict),
            format!("{:?}", rec.think_answer),
            format!("{:?}", rec.tag_answer),
            text
        );
        records.push(rec);
    }

    let report = inconsistency_report(&records).unwrap();
    println!("\n{}", serde_json::to_string_pretty(&report).unwrap());
}
