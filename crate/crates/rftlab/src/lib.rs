//! Desk-scale rule-based reinforcement fine-tuning.
//!
//! A tabular softmax sequence policy with closed-form gradients is trained
//! with Group Relative Policy Optimization against binary rule-computed
//! rewards, under four response strategies (thinking, no-thinking,
//! think-after-answer, adaptive-thinking). Synthetic verifiable tasks and an
//! analysis suite make the training dynamics directly measurable.
//!
//! See the crate examples for runnable walkthroughs of each capability, and
//! the `rftlab` binary for the experiment CLI.

pub mod analysis;
pub mod grpo;
pub mod harness;
pub mod policy;
pub mod rewards;
pub mod strategies;
pub mod tasks;
