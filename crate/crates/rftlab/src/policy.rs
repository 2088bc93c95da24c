//! Context-conditioned categorical sequence policy with closed-form
//! log-probability gradients.
//!
//! The policy is a table of logits keyed by (template id, last k emitted
//! tokens). Softmax over the logit vector gives the next-token
//! distribution. Unseen contexts read as all-zero logits, i.e. uniform.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::Rng;
use thiserror::Error;

/// Sentinel token id used to left-pad contexts before any token was emitted.
pub const BOS: u32 = u32::MAX;

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("vocabulary must be non-empty")]
    EmptyVocabulary,
    #[error("duplicate token {0:?} in vocabulary")]
    DuplicateToken(String),
    #[error("vocabulary must contain the end-of-sequence token {0:?} exactly once")]
    MissingEos(String),
    #[error("unknown token {0:?}")]
    UnknownToken(String),
    #[error("parameter table parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Ordered token inventory. Token ids are indices into `tokens`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    eos: u32,
}

impl Vocabulary {
    pub fn new<S: Into<String>>(tokens: Vec<S>, eos_token: &str) -> Result<Self, PolicyError> {
        let tokens: Vec<String> = tokens.into_iter().map(Into::into).collect();
        if tokens.is_empty() {
            return Err(PolicyError::EmptyVocabulary);
        }
        let mut seen = std::collections::BTreeSet::new();
        for t in &tokens {
            if !seen.insert(t.clone()) {
                return Err(PolicyError::DuplicateToken(t.clone()));
            }
        }
        let eos = tokens
            .iter()
            .position(|t| t == eos_token)
            .ok_or_else(|| PolicyError::MissingEos(eos_token.to_string()))?;
        Ok(Self { tokens, eos: eos as u32 })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn eos(&self) -> u32 {
        self.eos
    }

    pub fn token(&self, id: u32) -> &str {
        &self.tokens[id as usize]
    }

    pub fn id(&self, token: &str) -> Result<u32, PolicyError> {
        self.tokens
            .iter()
            .position(|t| t == token)
            .map(|i| i as u32)
            .ok_or_else(|| PolicyError::UnknownToken(token.to_string()))
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Renders a token-id sequence as text: tokens joined by single spaces,
    /// with the terminal end-of-sequence token dropped.
    pub fn render(&self, ids: &[u32]) -> String {
        let mut out = String::new();
        for &id in ids {
            if id == self.eos {
                break;
            }
            if !out.is_empty() {
                out.push(' ');
            }
            out.push_str(self.token(id));
        }
        out
    }
}

/// Key into the logit table: which template the question came from plus the
/// last `k` emitted token ids, left-padded with [`BOS`].
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ContextKey {
    pub template_id: String,
    pub recent: Vec<u32>,
}

impl ContextKey {
    /// Number of real (non-padding) tokens in the context window.
    pub fn fill(&self) -> usize {
        self.recent.iter().filter(|&&t| t != BOS).count()
    }
}

/// Sparse vector over the logit table, used for gradients.
pub type SparseGrad = BTreeMap<ContextKey, Vec<f64>>;

/// A sampled response together with the log-probabilities it was drawn under.
#[derive(Debug, Clone, PartialEq)]
pub struct Response {
    pub tokens: Vec<u32>,
    pub per_token_logp: Vec<f64>,
    pub total_logp: f64,
}

/// The policy parameters: one logit vector per visited context.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterTable {
    logits: BTreeMap<ContextKey, Vec<f64>>,
    context_order: usize,
    vocab_size: usize,
}

/// Numerically stable softmax (max-subtraction).
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&x| (x - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|&e| e / sum).collect()
}

impl ParameterTable {
    pub fn new(vocab_size: usize, context_order: usize) -> Self {
        Self { logits: BTreeMap::new(), context_order, vocab_size }
    }

    pub fn context_order(&self) -> usize {
        self.context_order
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn contexts(&self) -> impl Iterator<Item = (&ContextKey, &Vec<f64>)> {
        self.logits.iter()
    }

    pub fn num_contexts(&self) -> usize {
        self.logits.len()
    }

    /// Logits for a context; unseen contexts read as all zeros.
    pub fn logits(&self, ctx: &ContextKey) -> Vec<f64> {
        self.logits
            .get(ctx)
            .cloned()
            .unwrap_or_else(|| vec![0.0; self.vocab_size])
    }

    pub fn logits_mut(&mut self, ctx: &ContextKey) -> &mut Vec<f64> {
        let n = self.vocab_size;
        self.logits
            .entry(ctx.clone())
            .or_insert_with(|| vec![0.0; n])
    }

    /// Adds `scale * grad` to the stored logits.
    pub fn apply_gradient(&mut self, grad: &SparseGrad, scale: f64) {
        for (ctx, g) in grad {
            let row = self.logits_mut(ctx);
            for (v, d) in row.iter_mut().zip(g) {
                *v += scale * d;
            }
        }
    }

    /// Context for emitting the token at position `pos` of a sequence whose
    /// prefix is `tokens[..pos]`.
    pub fn context_at(&self, template_id: &str, tokens: &[u32], pos: usize) -> ContextKey {
        let k = self.context_order;
        let mut recent = Vec::with_capacity(k);
        for i in 0..k {
            // recent[i] is the token (k - i) positions back, BOS if before start
            let back = k - i;
            if pos >= back {
                recent.push(tokens[pos - back]);
            } else {
                recent.push(BOS);
            }
        }
        ContextKey { template_id: template_id.to_string(), recent }
    }

    /// Next-token distribution at a context. Sums to 1; stable under
    /// large-magnitude logits.
    pub fn token_distribution(&self, ctx: &ContextKey) -> Vec<f64> {
        softmax(&self.logits(ctx))
    }

    /// Ancestral sampling at temperature 1 until end-of-sequence or `max_len`.
    pub fn sample_response<R: Rng>(
        &self,
        template_id: &str,
        vocab: &Vocabulary,
        max_len: usize,
        rng: &mut R,
    ) -> Response {
        assert!(max_len >= 1, "max_len must be >= 1");
        let mut tokens: Vec<u32> = Vec::new();
        let mut per_token_logp: Vec<f64> = Vec::new();
        while tokens.len() < max_len {
            let ctx = self.context_at(template_id, &tokens, tokens.len());
            let dist = self.token_distribution(&ctx);
            let u: f64 = rng.gen::<f64>();
            let mut acc = 0.0;
            let mut chosen = dist.len() - 1;
            for (i, &p) in dist.iter().enumerate() {
                acc += p;
                if u < acc {
                    chosen = i;
                    break;
                }
            }
            per_token_logp.push(dist[chosen].ln());
            tokens.push(chosen as u32);
            if chosen as u32 == vocab.eos() {
                break;
            }
        }
        let total_logp = per_token_logp.iter().sum();
        Response { tokens, per_token_logp, total_logp }
    }

    /// Greedy (argmax) decoding, used for deterministic evaluation.
    pub fn greedy_response(&self, template_id: &str, vocab: &Vocabulary, max_len: usize) -> Response {
        let mut tokens: Vec<u32> = Vec::new();
        let mut per_token_logp: Vec<f64> = Vec::new();
        while tokens.len() < max_len {
            let ctx = self.context_at(template_id, &tokens, tokens.len());
            let dist = self.token_distribution(&ctx);
            let mut chosen = 0usize;
            for (i, &p) in dist.iter().enumerate() {
                if p > dist[chosen] {
                    chosen = i;
                }
            }
            per_token_logp.push(dist[chosen].ln());
            tokens.push(chosen as u32);
            if chosen as u32 == vocab.eos() {
                break;
            }
        }
        let total_logp = per_token_logp.iter().sum();
        Response { tokens, per_token_logp, total_logp }
    }

    /// Log-probability of a full token sequence under this table.
    pub fn sequence_log_prob(&self, template_id: &str, tokens: &[u32]) -> f64 {
        let mut total = 0.0;
        for pos in 0..tokens.len() {
            let ctx = self.context_at(template_id, tokens, pos);
            let dist = self.token_distribution(&ctx);
            total += dist[tokens[pos] as usize].ln();
        }
        total
    }

    /// Closed-form gradient of `sequence_log_prob` with respect to the logits:
    /// at each visited context, one-hot(chosen) minus the softmax there.
    pub fn log_prob_gradient(&self, template_id: &str, tokens: &[u32]) -> SparseGrad {
        let mut grad: SparseGrad = BTreeMap::new();
        for pos in 0..tokens.len() {
            let ctx = self.context_at(template_id, tokens, pos);
            let dist = self.token_distribution(&ctx);
            let row = grad.entry(ctx).or_insert_with(|| vec![0.0; self.vocab_size]);
            for (r, &p) in row.iter_mut().zip(&dist) {
                *r -= p;
            }
            row[tokens[pos] as usize] += 1.0;
        }
        grad
    }

    /// Serializes to the line-oriented text format: header lines carrying the
    /// table shape, then one record per context key,
    /// `template_id TAB token-ids TAB logits` (17 significant digits).
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# rftlab parameter table v1");
        let _ = writeln!(
            out,
            "# context_order={} vocab_size={}",
            self.context_order, self.vocab_size
        );
        for (ctx, row) in &self.logits {
            let ids: Vec<String> = ctx
                .recent
                .iter()
                .map(|&t| if t == BOS { "^".to_string() } else { t.to_string() })
                .collect();
            let vals: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            let _ = writeln!(out, "{}\t{}\t{}", ctx.template_id, ids.join(","), vals.join(" "));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, PolicyError> {
        let mut context_order: Option<usize> = None;
        let mut vocab_size: Option<usize> = None;
        let mut logits: BTreeMap<ContextKey, Vec<f64>> = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let n = lineno + 1;
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                for part in rest.split_whitespace() {
                    if let Some(v) = part.strip_prefix("context_order=") {
                        context_order = Some(v.parse().map_err(|_| PolicyError::Parse {
                            line: n,
                            msg: format!("bad context_order {v:?}"),
                        })?);
                    } else if let Some(v) = part.strip_prefix("vocab_size=") {
                        vocab_size = Some(v.parse().map_err(|_| PolicyError::Parse {
                            line: n,
                            msg: format!("bad vocab_size {v:?}"),
                        })?);
                    }
                }
                continue;
            }
            let mut fields = line.split('\t');
            let (Some(tmpl), Some(ids), Some(vals)) = (fields.next(), fields.next(), fields.next())
            else {
                return Err(PolicyError::Parse { line: n, msg: "expected 3 tab-separated fields".into() });
            };
            let recent: Result<Vec<u32>, _> = if ids.is_empty() {
                Ok(Vec::new())
            } else {
                ids.split(',')
                    .map(|s| {
                        if s == "^" {
                            Ok(BOS)
                        } else {
                            s.parse::<u32>().map_err(|_| PolicyError::Parse {
                                line: n,
                                msg: format!("bad token id {s:?}"),
                            })
                        }
                    })
                    .collect()
            };
            let row: Result<Vec<f64>, _> = vals
                .split(' ')
                .map(|s| {
                    s.parse::<f64>().map_err(|_| PolicyError::Parse {
                        line: n,
                        msg: format!("bad logit {s:?}"),
                    })
                })
                .collect();
            logits.insert(
                ContextKey { template_id: tmpl.to_string(), recent: recent? },
                row?,
            );
        }
        let context_order = context_order
            .ok_or(PolicyError::Parse { line: 0, msg: "missing context_order header".into() })?;
        let vocab_size = vocab_size
            .ok_or(PolicyError::Parse { line: 0, msg: "missing vocab_size header".into() })?;
        for (ctx, row) in &logits {
            if row.len() != vocab_size {
                return Err(PolicyError::Parse {
                    line: 0,
                    msg: format!("context {ctx:?} has {} logits, expected {vocab_size}", row.len()),
                });
            }
        }
        Ok(Self { logits, context_order, vocab_size })
    }
}
