//! The four response strategies as data: prompt template, tag grammar, and
//! whether the format reward is active.

use serde::{Deserialize, Serialize};

use crate::rewards::{ParsedResponse, ResponseShape, Segment, SegmentRole, TagGrammar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StrategyKind {
    Thinking,
    NoThinking,
    ThinkAfterAnswer,
    AdaptiveThinking,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 4] = [
        StrategyKind::Thinking,
        StrategyKind::NoThinking,
        StrategyKind::ThinkAfterAnswer,
        StrategyKind::AdaptiveThinking,
    ];

    /// CLI spelling.
    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::Thinking => "thinking",
            StrategyKind::NoThinking => "no-thinking",
            StrategyKind::ThinkAfterAnswer => "think-after-answer",
            StrategyKind::AdaptiveThinking => "adaptive",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategySpec {
    pub kind: StrategyKind,
    pub prompt_template: String,
    pub grammar: TagGrammar,
    pub format_reward_active: bool,
}

const THINKING_TEMPLATE: &str = "{Question} Please output the thinking process in <think> </think> and final answer in <answer> </answer> tags.";
const NO_THINKING_TEMPLATE: &str = "{Question} Please directly output the answer.";
const THINK_AFTER_ANSWER_TEMPLATE: &str = "{Question} Please first output the answer in <answer> </answer> tags and then output a brief reasoning process in <reason> </reason> tags.";
const ADAPTIVE_TEMPLATE: &str = "{Question}. Please first identify whether this problem requires intermediate thinking or calculation. If the problem requires thinking or calculation, output the thinking and calculation process inside <think> </think> tags and the final answer inside <answer> </answer> tags. If no thinking or calculation is required, directly output the final answer inside <answer> </answer> tags. Your output should follow one of two cases: (1) '<answer> ... </answer>', (2) '<think> ... </think> <answer> ... </answer>'.";

fn think_segment() -> Segment {
    Segment::new("<think>", "</think>", SegmentRole::Think)
}

fn answer_segment() -> Segment {
    Segment::new("<answer>", "</answer>", SegmentRole::Answer)
}

fn reason_segment() -> Segment {
    Segment::new("<reason>", "</reason>", SegmentRole::Reason)
}

/// Tag grammar for a strategy: thinking expects think-then-answer, think-after-
/// answer expects answer-then-reason, adaptive accepts answer-only or
/// think-then-answer, and no-thinking is tag-free.
pub fn response_grammar(kind: StrategyKind) -> TagGrammar {
    match kind {
        StrategyKind::Thinking => TagGrammar::new(vec![think_segment(), answer_segment()]),
        StrategyKind::NoThinking => TagGrammar::empty(),
        StrategyKind::ThinkAfterAnswer => {
            TagGrammar::new(vec![answer_segment(), reason_segment()])
        }
        StrategyKind::AdaptiveThinking => TagGrammar::with_alternatives(
            vec![answer_segment()],
            vec![think_segment(), answer_segment()],
        ),
    }
}

/// Builds the full strategy record for a kind.
pub fn strategy(kind: StrategyKind) -> StrategySpec {
    let prompt_template = match kind {
        StrategyKind::Thinking => THINKING_TEMPLATE,
        StrategyKind::NoThinking => NO_THINKING_TEMPLATE,
        StrategyKind::ThinkAfterAnswer => THINK_AFTER_ANSWER_TEMPLATE,
        StrategyKind::AdaptiveThinking => ADAPTIVE_TEMPLATE,
    };
    StrategySpec {
        kind,
        prompt_template: prompt_template.to_string(),
        grammar: response_grammar(kind),
        format_reward_active: kind != StrategyKind::NoThinking,
    }
}

/// Instantiates the prompt template with the question text.
pub fn build_prompt(strategy: &StrategySpec, question: &str) -> String {
    assert!(!question.is_empty(), "question must be non-empty");
    strategy.prompt_template.replacen("{Question}", question, 1)
}

/// Response-form classes tallied for the adaptive strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FormClass {
    WithThinking,
    WithoutThinking,
    Malformed,
}

/// Classifies a parsed adaptive response by whether it chose to think.
pub fn classify_response_form(parsed: &ParsedResponse) -> FormClass {
    match parsed.shape {
        ResponseShape::ThinkAnswer => FormClass::WithThinking,
        ResponseShape::AnswerOnly => FormClass::WithoutThinking,
        _ => FormClass::Malformed,
    }
}
