use std::path::Path;

use serde::{Deserialize, Serialize};

use super::step::StepKind;
use super::ModelError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogicStep {
    pub kind: StepKind,
    /// Step body without the "Step k:" prefix, e.g.
    /// `(Event) Click a widget "add"`.
    pub phrase: String,
}

/// Implementation-agnostic business logic distilled from related test cases.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BusinessLogic {
    pub functionality: String,
    pub steps: Vec<LogicStep>,
}

impl BusinessLogic {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Numbered "Step k: ..." rendering accepted back by the logic validator.
    pub fn render(&self) -> String {
        self.steps
            .iter()
            .enumerate()
            .map(|(i, s)| format!("Step {}: {}", i + 1, s.phrase))
            .collect::<Vec<_>>()
            .join("\n")
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| ModelError::Io(path.to_path_buf(), e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        let text = serde_json::to_string_pretty(self)? + "\n";
        std::fs::write(path, text).map_err(|e| ModelError::Io(path.to_path_buf(), e))
    }
}
