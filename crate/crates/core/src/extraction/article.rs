use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::ExtractionError;
use crate::rdf::Iri;

/// Deepest allowed substep level below a top-level step.
pub const MAX_SUBSTEP_DEPTH: usize = 3;

/// A semi-structured how-to article.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ArticleDoc {
    pub source_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_url: Option<Iri>,
    pub title: String,
    #[serde(default)]
    pub requirements: Vec<String>,
    pub sections: Vec<MethodSection>,
}

/// One way of doing the task. Articles with a single section have no
/// alternatives.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct MethodSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub steps: Vec<Step>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Step {
    pub text: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub substeps: Vec<Step>,
}

impl Step {
    pub fn new(text: impl Into<String>) -> Self {
        Step {
            text: text.into(),
            substeps: Vec::new(),
        }
    }

    pub fn with_substeps(text: impl Into<String>, substeps: Vec<Step>) -> Self {
        Step {
            text: text.into(),
            substeps,
        }
    }

    /// This step plus all of its substeps.
    pub fn count(&self) -> usize {
        1 + self.substeps.iter().map(Step::count).sum::<usize>()
    }
}

impl ArticleDoc {
    pub fn validate(&self) -> Result<(), ExtractionError> {
        if self.title.trim().is_empty() {
            return Err(ExtractionError::MissingTitle);
        }
        if !super::mint::is_valid_source_id(&self.source_id) {
            return Err(ExtractionError::InvalidSourceId(self.source_id.clone()));
        }
        if self.sections.is_empty() {
            return Err(ExtractionError::EmptySteps(None));
        }
        for section in &self.sections {
            if section.steps.is_empty() {
                return Err(ExtractionError::EmptySteps(section.name.clone()));
            }
            for step in &section.steps {
                check_step(step, 0)?;
            }
        }
        if self.requirements.iter().any(|r| r.trim().is_empty()) {
            return Err(ExtractionError::EmptyLabel);
        }
        Ok(())
    }

    /// Total number of steps and substeps.
    pub fn step_count(&self) -> usize {
        self.sections
            .iter()
            .flat_map(|s| &s.steps)
            .map(Step::count)
            .sum()
    }
}

fn check_step(step: &Step, depth: usize) -> Result<(), ExtractionError> {
    if depth > MAX_SUBSTEP_DEPTH {
        return Err(ExtractionError::NestingTooDeep(step.text.to_string()));
    }
    if step.text.trim().is_empty() {
        return Err(ExtractionError::EmptyStepText);
    }
    step.substeps.iter().try_for_each(|s| check_step(s, depth + 1))
}

/// Reads the JSON form of [`ArticleDoc`] and validates it.
pub fn parse_article_json(text: &str) -> Result<ArticleDoc, ExtractionError> {
    let doc: ArticleDoc = serde_json::from_str(text).map_err(|e| ExtractionError::Json(e.to_string()))?;
    doc.validate()?;
    Ok(doc)
}
