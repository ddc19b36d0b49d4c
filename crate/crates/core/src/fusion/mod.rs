//! Knowledge fusion: retrieved test cases plus a requirement become
//! validated, app-independent business logic. Invalid model output is fed
//! back as corrective feedback and regenerated.

mod grammar;
mod validate;

use tracing::{debug, warn};

pub use grammar::{
    action_synonym, code_marker, parse_line, parse_logic_step, LineError, ParsedStep,
};
pub use validate::{
    content_words, relevance_vocabulary, validate_logic, LogicValidator, Violation, ViolationCode,
    MAX_LOGIC_STEPS, MIN_LOGIC_STEPS,
};

use crate::llm::{render_prompt, with_feedback, LlmError, LlmSession, PromptContext, PromptRole};
use crate::model::{BusinessLogic, TestCase};

/// Provider calls allowed per fusion, the first one included.
pub const FUSION_ROUNDS: usize = 3;

#[derive(Debug, thiserror::Error)]
pub enum FusionError {
    #[error("fusion rejected after {rounds} rounds: {}", .violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Rejected {
        rounds: usize,
        violations: Vec<Violation>,
    },
    #[error(transparent)]
    Llm(#[from] LlmError),
}

/// Fuses `retrieved` into business logic for `requirement`. With no
/// retrieved cases the prompt carries the requirement alone.
pub fn fuse(
    requirement: &str,
    retrieved: &[TestCase],
    category: &str,
    session: &mut LlmSession,
) -> Result<BusinessLogic, FusionError> {
    let validator = LogicValidator::default().with_relevance(relevance_vocabulary(
        requirement,
        category,
        retrieved,
    ));
    fuse_with(requirement, retrieved, category, session, &validator)
}

pub fn fuse_with(
    requirement: &str,
    retrieved: &[TestCase],
    category: &str,
    session: &mut LlmSession,
    validator: &LogicValidator,
) -> Result<BusinessLogic, FusionError> {
    let base = render_prompt(
        PromptRole::KnowledgeFusion,
        &PromptContext::Fusion {
            requirement,
            category,
            cases: retrieved,
        },
    )?;
    let mut prompt = base.clone();
    let mut last = Vec::new();
    for round in 1..=FUSION_ROUNDS {
        let reply = session.complete(PromptRole::KnowledgeFusion, prompt)?.text;
        match validator.validate(requirement, &reply) {
            Ok(logic) => {
                debug!(round, steps = logic.len(), "fusion accepted");
                return Ok(logic);
            }
            Err(violations) => {
                warn!(round, count = violations.len(), "fusion output rejected");
                let problems: Vec<String> = violations.iter().map(ToString::to_string).collect();
                prompt = with_feedback(&base, &reply, &problems);
                last = violations;
            }
        }
    }
    Err(FusionError::Rejected {
        rounds: FUSION_ROUNDS,
        violations: last,
    })
}
