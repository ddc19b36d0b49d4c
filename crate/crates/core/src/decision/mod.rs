//! Decision generation: sliding-window step selection, instruction
//! generation and completion judgment, driving a device session until every
//! business logic step is consumed.

mod agent;
mod run;

pub use agent::{
    generate_instruction, judge_completion, parse_judgment, parse_selection, render_executed,
    select_step, BudgetedSession, Selection,
};
pub use run::{
    run_decision_loop, DecisionConfig, DecisionReport, DecisionRun, StepOutcome, TraceRecord,
    DEFAULT_ATTEMPT_LIMIT, DEFAULT_BUDGET_MULTIPLIER, DEFAULT_STEP_NUM,
};

use crate::device::DeviceError;
use crate::llm::{LlmError, PromptRole};

#[derive(Debug, thiserror::Error)]
pub enum DecisionError {
    #[error("unparseable {role} reply: {reply:?}")]
    UnparseableReply { role: PromptRole, reply: String },
    #[error("step failed: {0}")]
    StepFailed(String),
    #[error("provider call budget of {limit} exhausted")]
    BudgetExceeded { limit: usize },
    #[error("session aborted: {reason}")]
    SessionAborted {
        reason: String,
        /// Everything recorded up to the abort.
        partial: Box<DecisionRun>,
    },
    #[error("invalid decision config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Device(#[from] DeviceError),
    #[error(transparent)]
    Llm(#[from] LlmError),
}
