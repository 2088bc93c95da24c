//! Post-hoc analyses: think/answer consistency accounting, steps-to-threshold
//! convergence measurement, and parameter-drift L1 norms by parameter group.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grpo::TraceRecord;
use crate::policy::ParameterTable;
use crate::rewards::{accuracy_choice, accuracy_exact, NormalizationPolicy, ParsedResponse};
use crate::tasks::{TaskInstance, VerifierKind};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("unknown trace field {0:?}")]
    UnknownField(String),
    #[error("window must be >= 1")]
    ZeroWindow,
    #[error("parameter tables differ in shape: {0}")]
    ShapeMismatch(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Consistent,
    Inconsistent,
    NoneInThink,
}

/// One response's think-tag vs answer-tag comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyRecord {
    pub response_id: String,
    pub think_answer: Option<String>,
    pub tag_answer: Option<String>,
    pub verdict: Verdict,
    pub think_correct: Option<u8>,
    pub tag_correct: Option<u8>,
}

fn is_word_boundary(c: Option<char>) -> bool {
    c.map_or(true, |c| !c.is_alphanumeric())
}

fn last_standalone_occurrence(text: &str, word: &str) -> Option<usize> {
    if word.is_empty() {
        return None;
    }
    let mut best = None;
    let mut from = 0;
    while let Some(i) = text[from..].find(word) {
        let at = from + i;
        let before = text[..at].chars().next_back();
        let after = text[at + word.len()..].chars().next();
        if is_word_boundary(before) && is_word_boundary(after) {
            best = Some(at);
        }
        from = at + 1;
    }
    best
}

fn last_numeric_literal(text: &str) -> Option<String> {
    let bytes = text.as_bytes();
    let mut best: Option<(usize, usize)> = None;
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i].is_ascii_digit() {
            let mut start = i;
            // attach a leading sign not glued to another alphanumeric
            if start > 0 && (bytes[start - 1] == b'-') {
                let before = if start >= 2 { Some(bytes[start - 2] as char) } else { None };
                if is_word_boundary(before) {
                    start -= 1;
                }
            }
            let mut end = i;
            let mut seen_dot = false;
            while end < bytes.len() {
                let b = bytes[end];
                if b.is_ascii_digit() {
                    end += 1;
                } else if b == b'.' && !seen_dot && end + 1 < bytes.len() && bytes[end + 1].is_ascii_digit() {
                    seen_dot = true;
                    end += 1;
                } else {
                    break;
                }
            }
            best = Some((start, end));
            i = end;
        } else {
            i += 1;
        }
    }
    best.map(|(s, e)| text[s..e].to_string())
}

/// Rule-based answer extraction from thinking text. For choice verifiers the
/// last standalone choice letter wins; for contains verifiers the choice-list
/// member whose last standalone mention is latest; for exact verifiers the
/// last numeric literal. Absent when nothing matches.
pub fn extract_think_answer(think_text: &str, instance: &TaskInstance) -> Option<String> {
    match instance.verifier_kind {
        VerifierKind::Choice => {
            let letters = instance.choice_list.as_deref().unwrap_or(&[]);
            let mut best: Option<(usize, &str)> = None;
            for letter in letters {
                // accept both "B" and "(B)" mentions
                let bare = last_standalone_occurrence(think_text, letter);
                if let Some(at) = bare {
                    if best.map_or(true, |(b, _)| at > b) {
                        best = Some((at, letter));
                    }
                }
            }
            best.map(|(_, l)| l.to_string())
        }
        VerifierKind::Contains => {
            let lower = think_text.to_lowercase();
            let members = instance.choice_list.as_deref().unwrap_or(std::slice::from_ref(&instance.truth));
            let mut best: Option<(usize, usize, &str)> = None;
            for member in members {
                let needle = member.to_lowercase();
                if let Some(at) = lower.rfind(&needle) {
                    let key = (at, member.len());
                    if best.map_or(true, |(b_at, b_len, _)| key > (b_at, b_len)) {
                        best = Some((at, member.len(), member));
                    }
                }
            }
            best.map(|(_, _, m)| m.to_string())
        }
        VerifierKind::Exact => last_numeric_literal(think_text),
    }
}

fn score(answer: &str, instance: &TaskInstance) -> u8 {
    match instance.verifier_kind {
        VerifierKind::Exact => accuracy_exact(answer, &instance.truth, NormalizationPolicy::TrimCaseFold),
        VerifierKind::Choice => accuracy_choice(answer, &instance.truth),
        VerifierKind::Contains => {
            u8::from(answer.to_lowercase().contains(&instance.truth.to_lowercase()))
        }
    }
}

/// Compares the thinking-tag answer with the answer-tag answer for one
/// parsed response. Requires `parsed.answer_text`.
pub fn detect_inconsistency(
    response_id: &str,
    parsed: &ParsedResponse,
    instance: &TaskInstance,
) -> ConsistencyRecord {
    let tag_answer = parsed
        .answer_text
        .clone()
        .expect("detect_inconsistency requires a parsed answer tag");
    let tag_correct = score(&tag_answer, instance);
    let think_answer = parsed
        .think_text
        .as_deref()
        .and_then(|t| extract_think_answer(t, instance));
    match think_answer {
        None => ConsistencyRecord {
            response_id: response_id.to_string(),
            think_answer: None,
            tag_answer: Some(tag_answer),
            verdict: Verdict::NoneInThink,
            think_correct: None,
            tag_correct: Some(tag_correct),
        },
        Some(think) => {
            let same = accuracy_exact(&think, tag_answer.trim(), NormalizationPolicy::TrimCaseFold) == 1;
            let think_correct = score(&think, instance);
            ConsistencyRecord {
                response_id: response_id.to_string(),
                think_answer: Some(think),
                tag_answer: Some(tag_answer),
                verdict: if same { Verdict::Consistent } else { Verdict::Inconsistent },
                think_correct: Some(think_correct),
                tag_correct: Some(tag_correct),
            }
        }
    }
}

/// Aggregate inconsistency statistics over a corpus of records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InconsistencyReport {
    pub n_records: usize,
    pub n_inconsistent: usize,
    pub proportion_inconsistent: f64,
    /// Mean think-tag accuracy over the inconsistent subset; absent when the
    /// subset is empty.
    pub acc_think_on_inconsistent: Option<f64>,
    pub acc_tag_on_inconsistent: Option<f64>,
    pub overall_tag_accuracy: f64,
}

pub fn inconsistency_report(records: &[ConsistencyRecord]) -> Result<InconsistencyReport, AnalysisError> {
    if records.is_empty() {
        return Err(AnalysisError::EmptyCorpus);
    }
    let n = records.len();
    let inconsistent: Vec<&ConsistencyRecord> =
        records.iter().filter(|r| r.verdict == Verdict::Inconsistent).collect();
    let n_inc = inconsistent.len();
    let mean = |vals: Vec<f64>| {
        if vals.is_empty() { None } else { Some(vals.iter().sum::<f64>() / vals.len() as f64) }
    };
    let overall_tag_accuracy = records
        .iter()
        .filter_map(|r| r.tag_correct)
        .map(f64::from)
        .sum::<f64>()
        / n as f64;
    Ok(InconsistencyReport {
        n_records: n,
        n_inconsistent: n_inc,
        proportion_inconsistent: n_inc as f64 / n as f64,
        acc_think_on_inconsistent: mean(
            inconsistent.iter().filter_map(|r| r.think_correct).map(f64::from).collect(),
        ),
        acc_tag_on_inconsistent: mean(
            inconsistent.iter().filter_map(|r| r.tag_correct).map(f64::from).collect(),
        ),
        overall_tag_accuracy,
    })
}

/// Trace fields addressable by [`steps_to_threshold`].
pub fn trace_field(record: &TraceRecord, field: &str) -> Option<f64> {
    Some(match field {
        "mean_reward" => record.mean_reward,
        "mean_accuracy_reward" => record.mean_accuracy_reward,
        "format_pass_rate" => record.format_pass_rate,
        "mean_response_length" => record.mean_response_length,
        "mean_kl" => record.mean_kl,
        "objective_value" => record.objective_value,
        _ => return None,
    })
}

/// Earliest step at which the trailing `window`-mean of `field` reaches
/// `threshold`; `None` if it never does.
pub fn steps_to_threshold(
    trace: &[TraceRecord],
    field: &str,
    threshold: f64,
    window: usize,
) -> Result<Option<u64>, AnalysisError> {
    if window == 0 {
        return Err(AnalysisError::ZeroWindow);
    }
    if !trace.is_empty() && trace_field(&trace[0], field).is_none() {
        return Err(AnalysisError::UnknownField(field.to_string()));
    }
    let values: Vec<f64> = trace.iter().map(|r| trace_field(r, field).unwrap()).collect();
    for i in (window - 1)..values.len() {
        let mean: f64 = values[i + 1 - window..=i].iter().sum::<f64>() / window as f64;
        if mean >= threshold {
            return Ok(Some(trace[i].step));
        }
    }
    Ok(None)
}

/// How parameters are grouped for drift reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DriftGrouping {
    /// By template family: the template id up to its first '-'.
    TemplateFamily,
    /// By how many real (non-padding) tokens fill the context window.
    ContextFill,
    /// By the most recent context token id.
    LastToken,
}

fn group_key(grouping: DriftGrouping, ctx: &crate::policy::ContextKey) -> String {
    match grouping {
        DriftGrouping::TemplateFamily => ctx
            .template_id
            .split('-')
            .next()
            .unwrap_or(&ctx.template_id)
            .to_string(),
        DriftGrouping::ContextFill => format!("fill{}", ctx.fill()),
        DriftGrouping::LastToken => match ctx.recent.last() {
            Some(&t) if t != crate::policy::BOS => format!("tok{t}"),
            _ => "tok^".to_string(),
        },
    }
}

/// Per-group L1 norms of the parameter difference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub grouping: DriftGrouping,
    pub group_norms: BTreeMap<String, f64>,
    pub total_norm: f64,
}

/// L1 drift between two tables, grouped. Contexts present in only one table
/// are compared against the zero vector (lazy-init semantics).
pub fn param_drift(
    before: &ParameterTable,
    after: &ParameterTable,
    grouping: DriftGrouping,
) -> Result<DriftReport, AnalysisError> {
    if before.vocab_size() != after.vocab_size() || before.context_order() != after.context_order() {
        return Err(AnalysisError::ShapeMismatch(format!(
            "vocab {} vs {}, order {} vs {}",
            before.vocab_size(),
            after.vocab_size(),
            before.context_order(),
            after.context_order()
        )));
    }
    let mut contexts: std::collections::BTreeSet<&crate::policy::ContextKey> =
        before.contexts().map(|(c, _)| c).collect();
    contexts.extend(after.contexts().map(|(c, _)| c));
    let mut group_norms: BTreeMap<String, f64> = BTreeMap::new();
    let mut total = 0.0;
    for ctx in contexts {
        let b = before.logits(ctx);
        let a = after.logits(ctx);
        let norm: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum();
        *group_norms.entry(group_key(grouping, ctx)).or_insert(0.0) += norm;
        total += norm;
    }
    Ok(DriftReport { grouping, group_norms, total_norm: total })
}
