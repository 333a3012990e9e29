//! Parsing and admission of scene files.

use std::io;

use thiserror::Error;

use super::{validate, SceneAnnotation, ValidationReport};

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("scene file is not valid JSON: {0}")]
    Parse(#[from] serde_json::Error),
    /// An id or frame key in the file fails to resolve.
    #[error("scene references unknown targets:\n{0}")]
    Reference(ValidationReport),
    /// An attribute, value, category or difficulty falls outside the closed
    /// vocabulary the scene declares.
    #[error("scene violates its attribute schema:\n{0}")]
    Schema(ValidationReport),
    /// Any other structural problem (degenerate boxes, duplicate frames,
    /// overlapping authored slots, ...).
    #[error("scene annotation is inconsistent:\n{0}")]
    Invalid(ValidationReport),
}

impl LoadError {
    pub fn report(&self) -> Option<&ValidationReport> {
        match self {
            LoadError::Parse(_) => None,
            LoadError::Reference(r) | LoadError::Schema(r) | LoadError::Invalid(r) => Some(r),
        }
    }
}

fn admit(scene: SceneAnnotation) -> Result<SceneAnnotation, LoadError> {
    let report = validate(&scene);
    if report.is_empty() {
        return Ok(scene);
    }
    // The full report rides along either way; the variant reflects the most
    // actionable class of problem found.
    if report.violations.iter().any(|v| v.code.is_reference()) {
        Err(LoadError::Reference(report))
    } else if report.violations.iter().any(|v| v.code.is_schema()) {
        Err(LoadError::Schema(report))
    } else {
        Err(LoadError::Invalid(report))
    }
}

/// Reads a scene from a JSON byte stream and validates it. Scenes returned
/// from here always produce an empty [`validate`] report.
pub fn load_scene(reader: impl io::Read) -> Result<SceneAnnotation, LoadError> {
    let scene: SceneAnnotation = serde_json::from_reader(io::BufReader::new(reader))?;
    admit(scene)
}

/// [`load_scene`] over an in-memory string.
pub fn scene_from_str(json: &str) -> Result<SceneAnnotation, LoadError> {
    let scene: SceneAnnotation = serde_json::from_str(json)?;
    admit(scene)
}
