//! Shared helpers for integration tests.
// compiled once per test target; not every target uses every helper
#![allow(dead_code)]

use serde::Deserialize;
use std::path::PathBuf;

use rand::Rng;
use rftlab::analysis::Verdict;
use rftlab::grpo::{GrpoConfig, RolloutGroup};
use rftlab::policy::{ParameterTable, Vocabulary};
use rftlab::tasks::{TaskInstance, VerifierKind};

/// From-scratch objective: no calls into the optimizer module, own softmax,
/// own clipping, own KL. Guards against shared-bug blindness in the main path.
pub fn objective_reimplementation(
    group: &RolloutGroup,
    params: &ParameterTable,
    cfg: &GrpoConfig,
) -> f64 {
    let template = group.instance.template_id.as_str();
    let seq_logp = |table: &ParameterTable, tokens: &[u32]| -> f64 {
        let mut total = 0.0;
        for pos in 0..tokens.len() {
            let ctx = table.context_at(template, tokens, pos);
            let logits = table.logits(&ctx);
            let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = logits.iter().map(|&x| (x - m).exp()).sum();
            total += logits[tokens[pos] as usize] - m - z.ln();
        }
        total
    };
    let g = group.responses.len() as f64;
    let mut acc = 0.0;
    for (i, r) in group.responses.iter().enumerate() {
        let cur = seq_logp(params, &r.tokens);
        let ratio = (cur - group.old_logps[i]).exp();
        let lo = 1.0 - cfg.clip_epsilon;
        let hi = 1.0 + cfg.clip_epsilon;
        let clipped = if ratio < lo { lo } else if ratio > hi { hi } else { ratio };
        let a = group.advantages[i];
        let surr = if ratio * a < clipped * a { ratio * a } else { clipped * a };
        let d = group.ref_logps[i] - cur;
        acc += surr - cfg.kl_beta * (d.exp() - d - 1.0);
    }
    acc / g
}

/// Exhaustively enumerates every sequence the sampler can emit: sequences
/// ending in end-of-sequence with length <= max_len, plus unterminated
/// sequences of exactly max_len. Returns (tokens, probability) pairs whose
/// probabilities partition the sample space.
pub fn enumerate_sequences(
    params: &ParameterTable,
    template_id: &str,
    vocab: &Vocabulary,
    max_len: usize,
) -> Vec<(Vec<u32>, f64)> {
    let mut out = Vec::new();
    let mut stack: Vec<(Vec<u32>, f64)> = vec![(Vec::new(), 1.0)];
    while let Some((prefix, prob)) = stack.pop() {
        let ctx = params.context_at(template_id, &prefix, prefix.len());
        let dist = params.token_distribution(&ctx);
        for (tok, &p) in dist.iter().enumerate() {
            let mut seq = prefix.clone();
            seq.push(tok as u32);
            let q = prob * p;
            if tok as u32 == vocab.eos() || seq.len() == max_len {
                out.push((seq, q));
            } else {
                stack.push((seq, q));
            }
        }
    }
    out
}

/// A parameter table with independent uniform(-spread, spread) logits on
/// every context reachable within max_len steps of one template.
pub fn random_table<R: Rng>(
    vocab_size: usize,
    context_order: usize,
    template_id: &str,
    spread: f64,
    rng: &mut R,
) -> ParameterTable {
    let mut params = ParameterTable::new(vocab_size, context_order);
    let mut contexts = vec![params.context_at(template_id, &[], 0)];
    // order-1: one context per previous token plus the start context
    if context_order == 1 {
        for t in 0..vocab_size as u32 {
            contexts.push(params.context_at(template_id, &[t], 1));
        }
    }
    for ctx in contexts {
        let row = params.logits_mut(&ctx);
        for v in row.iter_mut() {
            *v = rng.gen_range(-spread..spread);
        }
    }
    params
}

#[derive(Debug, Clone, Deserialize)]
pub struct FixtureRecord {
    pub id: String,
    pub strategy: String,
    pub verifier_kind: VerifierKind,
    pub truth: String,
    #[serde(default)]
    pub choices: Option<Vec<String>>,
    pub full_response: String,
    pub expected_format: u8,
    pub expected_accuracy: u8,
    pub expected_total: f64,
    #[serde(default)]
    pub expected_verdict: Option<Verdict>,
    #[serde(default)]
    pub expected_think_correct: Option<u8>,
    #[serde(default)]
    pub expected_tag_correct: Option<u8>,
}

impl FixtureRecord {
    pub fn instance(&self) -> TaskInstance {
        TaskInstance {
            template_id: self.id.clone(),
            question: format!("fixture question for {}", self.id),
            truth: self.truth.clone(),
            choice_list: self.choices.clone(),
            verifier_kind: self.verifier_kind,
            difficulty: 1,
        }
    }
}

pub fn fixture_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/fixture_responses.jsonl")
}

pub fn load_fixtures() -> Vec<FixtureRecord> {
    let text = std::fs::read_to_string(fixture_path()).expect("fixture corpus readable");
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).expect("fixture line parses"))
        .collect()
}
