//! Tag-grammar parsing and the binary format / accuracy rewards.
//!
//! A response earns the format reward iff it consists of the grammar's
//! segments in order, each open/close tag occurring exactly once, with only
//! whitespace between and around segments. Accuracy is scored by the task's
//! verifier: strict equality, choice-letter matching, or class-name
//! containment with a whole-response fallback when the answer tag is absent.

use serde::{Deserialize, Serialize};

use crate::strategies::{StrategyKind, StrategySpec};
use crate::tasks::{TaskInstance, VerifierKind};

/// What a tagged segment holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SegmentRole {
    Think,
    Answer,
    Reason,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub open: String,
    pub close: String,
    pub role: SegmentRole,
}

impl Segment {
    pub fn new(open: &str, close: &str, role: SegmentRole) -> Self {
        Self { open: open.into(), close: close.into(), role }
    }
}

/// Ordered tag segments a response must emit, with an optional alternative
/// shape (the adaptive strategy accepts two).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagGrammar {
    pub required_segments: Vec<Segment>,
    pub alternatives: Option<Vec<Segment>>,
}

impl TagGrammar {
    pub fn new(required_segments: Vec<Segment>) -> Self {
        Self { required_segments, alternatives: None }
    }

    pub fn with_alternatives(required_segments: Vec<Segment>, alternatives: Vec<Segment>) -> Self {
        Self { required_segments, alternatives: Some(alternatives) }
    }

    pub fn empty() -> Self {
        Self { required_segments: Vec::new(), alternatives: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ResponseShape {
    ThinkAnswer,
    AnswerOnly,
    AnswerReason,
    Malformed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedResponse {
    pub think_text: Option<String>,
    pub answer_text: Option<String>,
    pub reason_text: Option<String>,
    pub shape: ResponseShape,
}

impl ParsedResponse {
    fn malformed() -> Self {
        Self { think_text: None, answer_text: None, reason_text: None, shape: ResponseShape::Malformed }
    }
}

/// How strict equality is judged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum NormalizationPolicy {
    /// Trim outer whitespace and case-fold before comparing.
    #[default]
    TrimCaseFold,
    ByteExact,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub format: u8,
    pub accuracy: u8,
    pub total: f64,
}

fn count_occurrences(haystack: &str, needle: &str) -> usize {
    let mut count = 0;
    let mut from = 0;
    while let Some(i) = haystack[from..].find(needle) {
        count += 1;
        from += i + needle.len();
    }
    count
}

/// Attempts to decompose `text` as the given segment list; returns inner
/// texts (verbatim, untrimmed) on success.
fn match_segments(text: &str, segments: &[Segment]) -> Option<Vec<String>> {
    for seg in segments {
        if count_occurrences(text, &seg.open) != 1 || count_occurrences(text, &seg.close) != 1 {
            return None;
        }
    }
    let mut pos = 0usize;
    let mut inners = Vec::with_capacity(segments.len());
    for seg in segments {
        let open_at = text[pos..].find(&seg.open)? + pos;
        if !text[pos..open_at].trim().is_empty() {
            return None;
        }
        let inner_start = open_at + seg.open.len();
        let close_at = text[inner_start..].find(&seg.close)? + inner_start;
        inners.push(text[inner_start..close_at].to_string());
        pos = close_at + seg.close.len();
    }
    if !text[pos..].trim().is_empty() {
        return None;
    }
    Some(inners)
}

fn shape_of(segments: &[Segment]) -> ResponseShape {
    let roles: Vec<SegmentRole> = segments.iter().map(|s| s.role).collect();
    match roles.as_slice() {
        [SegmentRole::Think, SegmentRole::Answer] => ResponseShape::ThinkAnswer,
        [SegmentRole::Answer] => ResponseShape::AnswerOnly,
        [SegmentRole::Answer, SegmentRole::Reason] => ResponseShape::AnswerReason,
        _ => ResponseShape::Malformed,
    }
}

fn parsed_from(segments: &[Segment], inners: Vec<String>) -> ParsedResponse {
    let mut parsed = ParsedResponse {
        think_text: None,
        answer_text: None,
        reason_text: None,
        shape: shape_of(segments),
    };
    for (seg, inner) in segments.iter().zip(inners) {
        match seg.role {
            SegmentRole::Think => parsed.think_text = Some(inner),
            SegmentRole::Answer => parsed.answer_text = Some(inner),
            SegmentRole::Reason => parsed.reason_text = Some(inner),
        }
    }
    parsed
}

/// Decomposes a response against a grammar. An empty grammar treats the whole
/// output as the answer. Malformed is a value, not an error.
pub fn parse_tags(text: &str, grammar: &TagGrammar) -> ParsedResponse {
    if grammar.required_segments.is_empty() && grammar.alternatives.is_none() {
        return ParsedResponse {
            think_text: None,
            answer_text: Some(text.to_string()),
            reason_text: None,
            shape: ResponseShape::AnswerOnly,
        };
    }
    if let Some(inners) = match_segments(text, &grammar.required_segments) {
        return parsed_from(&grammar.required_segments, inners);
    }
    if let Some(alt) = &grammar.alternatives {
        if let Some(inners) = match_segments(text, alt) {
            return parsed_from(alt, inners);
        }
    }
    ParsedResponse::malformed()
}

/// 1 iff the parsed shape is legal for the strategy. Inactive (always 0) for
/// the no-thinking strategy, whose total reward is accuracy only.
pub fn format_reward(parsed: &ParsedResponse, strategy: &StrategySpec) -> u8 {
    let ok = match strategy.kind {
        StrategyKind::Thinking => parsed.shape == ResponseShape::ThinkAnswer,
        StrategyKind::ThinkAfterAnswer => parsed.shape == ResponseShape::AnswerReason,
        StrategyKind::AdaptiveThinking => {
            parsed.shape == ResponseShape::AnswerOnly || parsed.shape == ResponseShape::ThinkAnswer
        }
        StrategyKind::NoThinking => false,
    };
    u8::from(ok)
}

pub fn normalize(s: &str, norm: NormalizationPolicy) -> String {
    match norm {
        NormalizationPolicy::TrimCaseFold => s.trim().to_lowercase(),
        NormalizationPolicy::ByteExact => s.to_string(),
    }
}

/// Strict equality accuracy.
pub fn accuracy_exact(candidate: &str, truth: &str, norm: NormalizationPolicy) -> u8 {
    u8::from(normalize(candidate, norm) == normalize(truth, norm))
}

/// Choice-letter accuracy: the candidate, after trimming, stripping an
/// optional surrounding "( )" and optional trailing answer text, must match
/// the letter case-insensitively.
pub fn accuracy_choice(candidate: &str, correct_letter: &str) -> u8 {
    let t = candidate.trim();
    let letter = if let Some(rest) = t.strip_prefix('(') {
        match rest.find(')') {
            Some(i) => rest[..i].trim(),
            None => return 0,
        }
    } else {
        t.split(|c: char| c.is_whitespace() || c == '.' || c == ')' || c == ':')
            .next()
            .unwrap_or("")
    };
    u8::from(letter.eq_ignore_ascii_case(correct_letter.trim()))
}

/// Class-containment accuracy: check the answer tag when present, otherwise
/// fall back to the whole response.
pub fn accuracy_contains_with_fallback(
    full_response: &str,
    parsed: &ParsedResponse,
    class_name: &str,
) -> u8 {
    let class = class_name.to_lowercase();
    match &parsed.answer_text {
        Some(ans) => u8::from(ans.to_lowercase().contains(&class)),
        None => u8::from(full_response.to_lowercase().contains(&class)),
    }
}

fn verify_answer(answer: &str, instance: &TaskInstance, norm: NormalizationPolicy) -> u8 {
    match instance.verifier_kind {
        VerifierKind::Exact => accuracy_exact(answer, &instance.truth, norm),
        VerifierKind::Choice => accuracy_choice(answer, &instance.truth),
        VerifierKind::Contains => {
            u8::from(answer.to_lowercase().contains(&instance.truth.to_lowercase()))
        }
    }
}

/// Combined reward for one response. Tag strategies add format and accuracy;
/// no-thinking scores strict equality of the whole output against the truth.
pub fn total_reward(
    full_response: &str,
    strategy: &StrategySpec,
    instance: &TaskInstance,
) -> RewardBreakdown {
    total_reward_with(full_response, strategy, instance, NormalizationPolicy::default())
}

pub fn total_reward_with(
    full_response: &str,
    strategy: &StrategySpec,
    instance: &TaskInstance,
    norm: NormalizationPolicy,
) -> RewardBreakdown {
    if strategy.kind == StrategyKind::NoThinking {
        let accuracy = accuracy_exact(full_response, &instance.truth, norm);
        return RewardBreakdown { format: 0, accuracy, total: f64::from(accuracy) };
    }
    let parsed = parse_tags(full_response, &strategy.grammar);
    let format = format_reward(&parsed, strategy);
    let accuracy = match (&parsed.answer_text, instance.verifier_kind) {
        (_, VerifierKind::Contains) => {
            accuracy_contains_with_fallback(full_response, &parsed, &instance.truth)
        }
        (Some(ans), _) => verify_answer(ans, instance, norm),
        (None, _) => 0,
    };
    RewardBreakdown {
        format,
        accuracy,
        total: f64::from(format) + f64::from(accuracy),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strategies::strategy;

    fn contains_instance(truth: &str) -> TaskInstance {
        TaskInstance {
            template_id: "t".into(),
            question: "q".into(),
            truth: truth.into(),
            choice_list: None,
            verifier_kind: VerifierKind::Contains,
            difficulty: 1,
        }
    }

    #[test]
    fn parse_think_answer() {
        let g = strategy(StrategyKind::Thinking).grammar;
        let p = parse_tags(
            "<think> The texture appears woven. </think> <answer> grooved </answer>",
            &g,
        );
        assert_eq!(p.shape, ResponseShape::ThinkAnswer);
        assert_eq!(p.answer_text.as_deref(), Some(" grooved "));
        assert_eq!(p.think_text.as_deref(), Some(" The texture appears woven. "));
    }

    #[test]
    fn parse_answer_only_under_adaptive() {
        let g = strategy(StrategyKind::AdaptiveThinking).grammar;
        let p = parse_tags("<answer> 5 </answer>", &g);
        assert_eq!(p.shape, ResponseShape::AnswerOnly);
        let p2 = parse_tags("<think> a </think> <answer> 5 </answer>", &g);
        assert_eq!(p2.shape, ResponseShape::ThinkAnswer);
    }

    #[test]
    fn unclosed_think_is_malformed() {
        let g = strategy(StrategyKind::Thinking).grammar;
        let p = parse_tags("<think> x <answer> y </answer>", &g);
        assert_eq!(p.shape, ResponseShape::Malformed);
    }

    #[test]
    fn duplicated_tag_is_malformed() {
        let g = strategy(StrategyKind::Thinking).grammar;
        let p = parse_tags("<think> <think> x </think> <answer> y </answer>", &g);
        assert_eq!(p.shape, ResponseShape::Malformed);
    }

    #[test]
    fn non_whitespace_between_segments_is_malformed() {
        let g = strategy(StrategyKind::Thinking).grammar;
        let p = parse_tags("<think> x </think> uh <answer> y </answer>", &g);
        assert_eq!(p.shape, ResponseShape::Malformed);
    }

    #[test]
    fn format_reward_by_strategy() {
        let thinking = strategy(StrategyKind::Thinking);
        let adaptive = strategy(StrategyKind::AdaptiveThinking);
        let ta = parse_tags("<think> a </think> <answer> b </answer>", &thinking.grammar);
        assert_eq!(format_reward(&ta, &thinking), 1);
        let ao = parse_tags("<answer> b </answer>", &adaptive.grammar);
        assert_eq!(format_reward(&ao, &thinking), 0);
        assert_eq!(format_reward(&ao, &adaptive), 1);
        let ta_adaptive = parse_tags("<think> a </think> <answer> b </answer>", &adaptive.grammar);
        assert_eq!(format_reward(&ta_adaptive, &adaptive), 1);
    }

    #[test]
    fn exact_accuracy_normalization() {
        assert_eq!(accuracy_exact("5", "5", NormalizationPolicy::TrimCaseFold), 1);
        assert_eq!(accuracy_exact(" grooved ", "grooved", NormalizationPolicy::TrimCaseFold), 1);
        assert_eq!(accuracy_exact("a tabby cat", "tabby cat", NormalizationPolicy::TrimCaseFold), 0);
        assert_eq!(accuracy_exact(" grooved ", "grooved", NormalizationPolicy::ByteExact), 0);
    }

    #[test]
    fn choice_accuracy() {
        assert_eq!(accuracy_choice("B", "B"), 1);
        assert_eq!(accuracy_choice("(A) 1", "A"), 1);
        assert_eq!(accuracy_choice("B", "A"), 0);
        assert_eq!(accuracy_choice(" b ", "B"), 1);
        assert_eq!(accuracy_choice("BA", "B"), 0);
    }

    #[test]
    fn contains_with_fallback() {
        let g = strategy(StrategyKind::Thinking).grammar;
        let p = parse_tags("<think> x </think> <answer> 2012 Ford Fiesta Sedan </answer>", &g);
        assert_eq!(accuracy_contains_with_fallback("", &p, "2012 Ford Fiesta Sedan"), 1);
        let malformed = parse_tags("it is clearly a grooved surface", &g);
        assert_eq!(
            accuracy_contains_with_fallback("it is clearly a grooved surface", &malformed, "grooved"),
            1
        );
        let p3 = parse_tags("<think> x </think> <answer> swirly </answer>", &g);
        assert_eq!(accuracy_contains_with_fallback("", &p3, "spiral"), 0);
    }

    #[test]
    fn answer_tag_masks_fallback() {
        // class present in the think text but not in the answer tag -> 0
        let g = strategy(StrategyKind::Thinking).grammar;
        let text = "<think> looks grooved to me </think> <answer> woven </answer>";
        let p = parse_tags(text, &g);
        assert_eq!(accuracy_contains_with_fallback(text, &p, "grooved"), 0);
    }

    #[test]
    fn total_reward_composition() {
        let thinking = strategy(StrategyKind::Thinking);
        let inst = contains_instance("grooved");
        // well-formed, wrong answer
        let r = total_reward("<think> x </think> <answer> woven </answer>", &thinking, &inst);
        assert_eq!((r.format, r.accuracy), (1, 0));
        assert_eq!(r.total, 1.0);
        // malformed but class name present -> fallback accuracy
        let r = total_reward("surely grooved", &thinking, &inst);
        assert_eq!((r.format, r.accuracy), (0, 1));
        assert_eq!(r.total, 1.0);
    }

    #[test]
    fn no_thinking_total_is_exact_match_only() {
        let nt = strategy(StrategyKind::NoThinking);
        let inst = TaskInstance {
            template_id: "t".into(),
            question: "q".into(),
            truth: "grooved".into(),
            choice_list: None,
            verifier_kind: VerifierKind::Exact,
            difficulty: 1,
        };
        let r = total_reward("grooved", &nt, &inst);
        assert_eq!(r.accuracy, 1);
        assert_eq!(r.total, 1.0);
        let r = total_reward("a grooved thing", &nt, &inst);
        assert_eq!(r.total, 0.0);
    }
}
