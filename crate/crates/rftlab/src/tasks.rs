//! Synthetic verifiable task generators: symbolic classification with the
//! 40% / 30 / 100 choice-list rule, single-operation arithmetic, and lettered
//! multi-choice wrapping.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TaskError {
    #[error("label set must be non-empty")]
    EmptyLabels,
    #[error("truth {0:?} not in label set")]
    TruthNotInLabels(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerifierKind {
    Exact,
    Choice,
    Contains,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskInstance {
    pub template_id: String,
    pub question: String,
    pub truth: String,
    pub choice_list: Option<Vec<String>>,
    pub verifier_kind: VerifierKind,
    pub difficulty: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub n_classes: usize,
    pub choice_fraction: f64,
    pub min_all_threshold: usize,
    pub max_choices: usize,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            n_classes: 4,
            choice_fraction: 0.4,
            min_all_threshold: 30,
            max_choices: 100,
            seed: 0,
        }
    }
}

/// Samples the per-question choice list: target size is
/// round(fraction * |labels|); below the lower threshold all labels are
/// included, above the cap exactly `max_choices` are. The truth is always a
/// member and the final order is shuffled.
pub fn build_choice_list<R: Rng>(
    all_labels: &[String],
    truth: &str,
    cfg: &GeneratorConfig,
    rng: &mut R,
) -> Result<Vec<String>, TaskError> {
    if all_labels.is_empty() {
        return Err(TaskError::EmptyLabels);
    }
    if !all_labels.iter().any(|l| l == truth) {
        return Err(TaskError::TruthNotInLabels(truth.to_string()));
    }
    let target = (cfg.choice_fraction * all_labels.len() as f64).round() as usize;
    let size = if target < cfg.min_all_threshold {
        all_labels.len()
    } else if target > cfg.max_choices {
        cfg.max_choices
    } else {
        target
    };
    let mut chosen: Vec<String>;
    if size >= all_labels.len() {
        chosen = all_labels.to_vec();
    } else {
        chosen = vec![truth.to_string()];
        let mut others: Vec<&String> = all_labels.iter().filter(|l| *l != truth).collect();
        others.shuffle(rng);
        chosen.extend(others.into_iter().take(size - 1).cloned());
    }
    chosen.shuffle(rng);
    Ok(chosen)
}

/// Classification with a planted feature token: each question embeds a
/// feature deterministically mapped to its class, optionally flipped to a
/// random wrong class with probability `noise`.
pub fn gen_classification<R: Rng>(
    cfg: &GeneratorConfig,
    n_instances: usize,
    noise: f64,
    rng: &mut R,
) -> Vec<TaskInstance> {
    assert!((0.0..0.5).contains(&noise), "noise must be in [0, 0.5)");
    let classes: Vec<String> = (0..cfg.n_classes).map(|i| format!("class{i}")).collect();
    let mut instances = Vec::with_capacity(n_instances);
    for i in 0..n_instances {
        let class_idx = i % cfg.n_classes;
        let feature = format!("obj{class_idx:02}");
        let mut truth = classes[class_idx].clone();
        if noise > 0.0 && rng.gen::<f64>() < noise {
            let wrong = (class_idx + 1 + rng.gen_range(0..cfg.n_classes - 1)) % cfg.n_classes;
            truth = classes[wrong].clone();
        }
        let choices = build_choice_list(&classes, &truth, cfg, rng)
            .expect("truth drawn from the label set");
        let question = format!(
            "What type of object is in the photo? The photo shows {feature}. Please choose one from list [ {} ].",
            choices.join(", ")
        );
        instances.push(TaskInstance {
            template_id: format!("cls-{feature}"),
            question,
            truth,
            choice_list: Some(choices),
            verifier_kind: VerifierKind::Contains,
            difficulty: 1,
        });
    }
    instances
}

/// Single-operation addition/subtraction questions with decimal truths.
pub fn gen_arithmetic<R: Rng>(
    cfg: &GeneratorConfig,
    digit_range: std::ops::RangeInclusive<i64>,
    n_instances: usize,
    rng: &mut R,
) -> Vec<TaskInstance> {
    assert!(!digit_range.is_empty(), "digit_range must be non-empty");
    let _ = cfg;
    let (lo, hi) = (*digit_range.start(), *digit_range.end());
    let mut instances = Vec::with_capacity(n_instances);
    for _ in 0..n_instances {
        let a = rng.gen_range(lo..=hi);
        let b = rng.gen_range(lo..=hi);
        let (op, result) = if rng.gen::<bool>() {
            ('+', a + b)
        } else {
            ('-', a - b)
        };
        instances.push(TaskInstance {
            template_id: format!("arith-{a}{op}{b}"),
            question: format!("What is {a} {op} {b}?"),
            truth: result.to_string(),
            choice_list: None,
            verifier_kind: VerifierKind::Exact,
            difficulty: 1,
        });
    }
    instances
}

/// Wraps base instances with lettered options; the truth becomes the correct
/// letter and the verifier switches to choice matching.
pub fn gen_multichoice<R: Rng>(
    base: &[TaskInstance],
    n_options: usize,
    rng: &mut R,
) -> Vec<TaskInstance> {
    assert!(n_options >= 2, "n_options must be >= 2");
    let letters: Vec<String> = (0..n_options)
        .map(|i| char::from(b'A' + i as u8).to_string())
        .collect();
    base.iter()
        .map(|inst| {
            let mut options: Vec<String> = vec![inst.truth.clone()];
            let mut d = 0u64;
            while options.len() < n_options {
                let distractor = format!("not-{}-{d}", inst.truth);
                d += 1;
                if distractor != inst.truth {
                    options.push(distractor);
                }
            }
            options.shuffle(rng);
            let correct = options.iter().position(|o| *o == inst.truth).unwrap();
            let rendered: Vec<String> = options
                .iter()
                .zip(&letters)
                .map(|(o, l)| format!("{l}. {o}"))
                .collect();
            TaskInstance {
                template_id: format!("mc-{}", inst.template_id),
                question: format!("{} {}", inst.question, rendered.join(" ")),
                truth: letters[correct].clone(),
                choice_list: Some(letters.clone()),
                verifier_kind: VerifierKind::Choice,
                difficulty: inst.difficulty,
            }
        })
        .collect()
}
