//! Prompt templates for the five agent roles.
//!
//! Every template has the same four parts in the same order: task
//! definition, input object, demonstration case and acceptance criteria.
//! Rendering is a pure function of the role and its context.

use std::fmt::Write as _;

use super::{LlmError, PromptRole};
use crate::model::{LogicStep, TestCase};

/// What the decision agent is asking the instruction generator for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InstructionTarget {
    Event,
    ExistenceAssertion,
}

/// Role-specific inputs for [`render_prompt`].
#[derive(Debug, Clone, Copy)]
pub enum PromptContext<'a> {
    Summary {
        case: &'a TestCase,
        category: &'a str,
    },
    Fusion {
        requirement: &'a str,
        category: &'a str,
        cases: &'a [TestCase],
    },
    StepSelection {
        requirement: &'a str,
        candidates: &'a [LogicStep],
        state_description: &'a str,
    },
    Instruction {
        requirement: &'a str,
        step: &'a LogicStep,
        target: InstructionTarget,
        executed: &'a [String],
        state_description: &'a str,
    },
    Completion {
        requirement: &'a str,
        step: &'a LogicStep,
        executed: &'a [String],
        state_description: &'a str,
    },
}

impl PromptContext<'_> {
    pub fn role(&self) -> PromptRole {
        match self {
            PromptContext::Summary { .. } => PromptRole::SummaryGeneration,
            PromptContext::Fusion { .. } => PromptRole::KnowledgeFusion,
            PromptContext::StepSelection { .. } => PromptRole::StepSelection,
            PromptContext::Instruction { .. } => PromptRole::InstructionGeneration,
            PromptContext::Completion { .. } => PromptRole::CompletionJudgment,
        }
    }
}

struct Sections {
    task: String,
    input: Option<String>,
    demo: String,
    criteria: String,
}

impl Sections {
    fn render(self, demo_title: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "## Task Definition\n{}\n", self.task);
        if let Some(input) = self.input {
            let _ = writeln!(out, "## Input Object\n{}\n", input);
        }
        let _ = writeln!(out, "## {demo_title}\n{}\n", self.demo);
        let _ = write!(out, "## Acceptance Criteria\n{}\n", self.criteria);
        out
    }
}

fn require<'s>(field: &'static str, value: &'s str) -> Result<&'s str, LlmError> {
    if value.trim().is_empty() {
        Err(LlmError::MissingContextField(field))
    } else {
        Ok(value.trim())
    }
}

/// Builds the prompt text for `role` from `ctx`.
pub fn render_prompt(role: PromptRole, ctx: &PromptContext<'_>) -> Result<String, LlmError> {
    if ctx.role() != role {
        return Err(LlmError::ContextRoleMismatch {
            role,
            context: ctx.role(),
        });
    }
    match *ctx {
        PromptContext::Summary { case, category } => summary_prompt(case, category),
        PromptContext::Fusion {
            requirement,
            category,
            cases,
        } => fusion_prompt(requirement, category, cases),
        PromptContext::StepSelection {
            requirement,
            candidates,
            state_description,
        } => selection_prompt(requirement, candidates, state_description),
        PromptContext::Instruction {
            requirement,
            step,
            target,
            executed,
            state_description,
        } => instruction_prompt(requirement, step, target, executed, state_description),
        PromptContext::Completion {
            requirement,
            step,
            executed,
            state_description,
        } => completion_prompt(requirement, step, executed, state_description),
    }
}

/// Appends corrective feedback after a rejected reply.
pub fn with_feedback(prompt: &str, rejected_reply: &str, problems: &[String]) -> String {
    let mut out = prompt.to_string();
    let _ = writeln!(
        out,
        "\n## Feedback\nYour previous answer was rejected.\nPrevious answer:\n{}",
        rejected_reply.trim()
    );
    let _ = writeln!(out, "Problems:");
    for p in problems {
        let _ = writeln!(out, "- {p}");
    }
    out.push_str("Please answer again and satisfy every acceptance criterion.\n");
    out
}

fn summary_prompt(case: &TestCase, category: &str) -> Result<String, LlmError> {
    let category = require("category", category)?;
    if case.steps.is_empty() {
        return Err(LlmError::MissingContextField("case.steps"));
    }
    Ok(Sections {
        task:
            "You are a functional summary generator. Based on the test cases for the Android app, \
               generate a natural and one-sentence description."
                .into(),
        input: Some(format!(
            "Test case from a [{category}] app\n{}\nFunctional summary:",
            case.render_steps()
        )),
        demo: "Example 1: Test case from a Browser app\n\
               Step 1: (Event) Click a widget \"search\"\n\
               Step 2: (Event) Edit a widget \"search\" with \"news\"\n\
               Step 3: (Event) Identify a widget \"latest news\" in the state\n\
               Functional summary: Test the search functionality\n\
               Example 2: Test case from a Note app\n\
               Step 1: (Event) Click a widget \"new note\"\n\
               Step 2: (Event) Edit a widget \"note title\" with \"groceries\"\n\
               Step 3: (Event) Click a widget \"save\"\n\
               Step 4: (Assertion) Identify a widget \"groceries\" in the state\n\
               Functional summary: Test the note creation functionality"
            .into(),
        criteria: format!(
            "Please generate the functional description for the [{category}] app.\n\
             1. Please keep it simple: only include at most the subject, verb, and object.\n\
             2. Please use natural English, not technical terms.\n\
             3. Please focus on the main actions, ignore the details."
        ),
    }
    .render("Demonstration Case"))
}

fn fusion_prompt(
    requirement: &str,
    category: &str,
    cases: &[TestCase],
) -> Result<String, LlmError> {
    let requirement = require("requirement", requirement)?;
    let category = require("category", category)?;
    let input = (!cases.is_empty()).then(|| {
        cases
            .iter()
            .enumerate()
            .map(|(i, c)| format!("Related Test Case {}:\n{}", i + 1, c.render_steps()))
            .collect::<Vec<_>>()
            .join("\n")
    });
    Ok(Sections {
        task: format!(
            "You are a summarizer to fuse test knowledge for the functionality: [{requirement}] in a [{category}] app."
        ),
        input,
        demo: "Example: Test knowledge for the functionality: [Test the search functionality] in a [Browser] app.\n\
               Step 1: (Event) Click a widget \"search\" or \"url\" in the search bar\n\
               Step 2: (Event) Edit a widget \"search\" or \"url\" in the search bar with \"news\"\n\
               Step 3: (Event) Identify a widget \"latest news\" in the state"
            .into(),
        criteria: format!(
            "Please generate the test knowledge for the [{category}] app.\n\
             1. The generated test step do not too short or too long.\n\
             2. Please strictly use steps in the format of Event and Assertion\n\
             (1) (Event) [Action] a widget [Widget] with [Value]\n\
             (2) (Assertion) Identify a widget [Widget] [Condition]\n\
             3. Please do not include any code, XPATH, or scripting instructions"
        ),
    }
    .render("Demonstrate Case"))
}

fn selection_prompt(
    requirement: &str,
    candidates: &[LogicStep],
    state: &str,
) -> Result<String, LlmError> {
    let requirement = require("requirement", requirement)?;
    let state = require("state_description", state)?;
    if candidates.is_empty() {
        return Err(LlmError::MissingContextField("candidates"));
    }
    let listed = candidates
        .iter()
        .enumerate()
        .map(|(i, s)| format!("Candidate {i}: {}", s.phrase))
        .collect::<Vec<_>>()
        .join("\n");
    Ok(Sections {
        task: "You are a test step selector for an Android app. Given the functionality under test, \
               the candidate business logic steps and the current GUI state, choose the candidate step \
               that can be carried out on the current state."
            .into(),
        input: Some(format!(
            "Functionality: {requirement}\nCandidate steps:\n{listed}\nCurrent state:\n{state}"
        )),
        demo: "Example: Functionality: Add and remove an item\n\
               Candidate 0: (Event) Click a widget \"add\"\n\
               Candidate 1: (Event) Edit a widget \"title\" with \"sample todo\"\n\
               Current state:\n\
               widget 0: text='To-Do' content-desc='' resource-id='toolbar_title' ops=[]\n\
               widget 1: text='' content-desc='Add' resource-id='add_todo_item_button' ops=[click]\n\
               Answer: 0"
            .into(),
        criteria: "1. Consider the candidates in order and pick the first one that applies to the current state.\n\
                   2. If no candidate applies, answer (-1).\n\
                   3. Answer with the candidate number only."
            .into(),
    }
    .render("Demonstration Case"))
}

fn executed_block(executed: &[String]) -> String {
    if executed.is_empty() {
        "(none)".to_string()
    } else {
        executed.join("\n")
    }
}

fn instruction_prompt(
    requirement: &str,
    step: &LogicStep,
    target: InstructionTarget,
    executed: &[String],
    state: &str,
) -> Result<String, LlmError> {
    let requirement = require("requirement", requirement)?;
    let state = require("state_description", state)?;
    let phrase = require("step", &step.phrase)?;
    let (demo, answer_rule) = match target {
        InstructionTarget::Event => (
            "Example: Logic step: (Event) Edit a widget \"title\" with \"sample todo\"\n\
             Current state:\n\
             widget 0: text='Title' content-desc='' resource-id='user_todo_edit_text' ops=[click, edit]\n\
             widget 1: text='' content-desc='Finish' resource-id='make_todo_fab' ops=[click]\n\
             Answer: {\"widget_id\": 0, \"action\": \"edit\", \"value\": \"sample todo\"}",
            "1. Answer with one JSON object {\"widget_id\": <id>, \"action\": <operation>, \"value\": <text>}.\n\
             2. widget_id must be one of the widgets listed in the current state.\n\
             3. action must be one of that widget's ops; include value only for edit.",
        ),
        InstructionTarget::ExistenceAssertion => (
            "Example: Logic step: (Assertion) Identify a widget \"sample todo\" in the state\n\
             Current state:\n\
             widget 0: text='' content-desc='Add' resource-id='add_todo_item_button' ops=[click]\n\
             widget 1: text='Sample todo' content-desc='' resource-id='todo_title' ops=[click, swipe_right]\n\
             Answer: {\"widget_id\": 1}",
            "1. Answer with one JSON object {\"widget_id\": <id>} naming the widget to verify.\n\
             2. widget_id must be one of the widgets listed in the current state.",
        ),
    };
    Ok(Sections {
        task: "You are a test instruction generator for an Android app. Turn the selected business logic \
               step into a concrete instruction on the current GUI state."
            .into(),
        input: Some(format!(
            "Functionality: {requirement}\nLogic step: {phrase}\nExecuted instructions:\n{}\nCurrent state:\n{state}",
            executed_block(executed)
        )),
        demo: demo.into(),
        criteria: answer_rule.into(),
    }
    .render("Demonstration Case"))
}

fn completion_prompt(
    requirement: &str,
    step: &LogicStep,
    executed: &[String],
    state: &str,
) -> Result<String, LlmError> {
    let requirement = require("requirement", requirement)?;
    let state = require("state_description", state)?;
    let phrase = require("step", &step.phrase)?;
    if executed.is_empty() {
        return Err(LlmError::MissingContextField("executed"));
    }
    Ok(Sections {
        task: "You are a test step completion judge for an Android app. Decide whether the logic step \
               has been completed by the instructions executed so far."
            .into(),
        input: Some(format!(
            "Functionality: {requirement}\nLogic step: {phrase}\nExecuted instructions for this step:\n{}\nLatest state:\n{state}",
            executed_block(executed)
        )),
        demo: "Example: Logic step: (Event) Click a widget \"add\"\n\
               Executed instructions for this step:\n\
               click widget 1 (content-desc='Add') in state 0\n\
               Latest state:\n\
               widget 0: text='Title' content-desc='' resource-id='user_todo_edit_text' ops=[click, edit]\n\
               Answer: Yes"
            .into(),
        criteria: "1. Answer Yes if the step is complete, otherwise No.\n\
                   2. Answer with a single word."
            .into(),
    }
    .render("Demonstration Case"))
}
