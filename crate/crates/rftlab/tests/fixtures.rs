//! Frozen response corpus: hand-labelled reward and consistency outcomes.
//! Every record must agree exactly with the scorer and the think/answer
//! comparison; any drift in parsing, verification, or extraction fails here.

mod common;

use common::load_fixtures;
use rftlab::analysis::detect_inconsistency;
use rftlab::rewards::{parse_tags, total_reward};
use rftlab::strategies::{strategy, StrategyKind};

#[test]
fn fixture_corpus_rewards_and_verdicts_agree() {
    let fixtures = load_fixtures();
    assert!(fixtures.len() >= 12, "corpus unexpectedly small: {}", fixtures.len());
    let mut failures = Vec::new();
    for f in &fixtures {
        let kind = StrategyKind::from_name(&f.strategy)
            .unwrap_or_else(|| panic!("{}: unknown strategy {:?}", f.id, f.strategy));
        let spec = strategy(kind);
        let instance = f.instance();

        let got = total_reward(&f.full_response, &spec, &instance);
        if got.format != f.expected_format
            || got.accuracy != f.expected_accuracy
            || (got.total - f.expected_total).abs() > 0.0
        {
            failures.push(format!(
                "{}: reward mismatch, got format={} accuracy={} total={}",
                f.id, got.format, got.accuracy, got.total
            ));
        }

        if let Some(expected_verdict) = f.expected_verdict {
            let parsed = parse_tags(&f.full_response, &spec.grammar);
            let rec = detect_inconsistency(&f.id, &parsed, &instance);
            if rec.verdict != expected_verdict {
                failures.push(format!(
                    "{}: verdict mismatch, got {:?} (think={:?} tag={:?})",
                    f.id, rec.verdict, rec.think_answer, rec.tag_answer
                ));
            }
            if f.expected_think_correct.is_some() && rec.think_correct != f.expected_think_correct {
                failures.push(format!(
                    "{}: think_correct mismatch, got {:?}",
                    f.id, rec.think_correct
                ));
            }
            if f.expected_tag_correct.is_some() && rec.tag_correct != f.expected_tag_correct {
                failures.push(format!("{}: tag_correct mismatch, got {:?}", f.id, rec.tag_correct));
            }
        }
    }
    assert!(failures.is_empty(), "fixture disagreements:\n{}", failures.join("\n"));
}
