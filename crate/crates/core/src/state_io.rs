//! JSON state files:
//! `{"schema": "qwitness/1", "d": 3, "parties": 2, "kind": "pure"|"density", "re": [...], "im": [...]}`
//! with density matrices stored row-major. `schema` is optional on input.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{QwError, Result};
use crate::linalg::{ComplexMatrix, C64};
use crate::qudit::{QuditState, StateKind};
use crate::SCHEMA;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateFileKind {
    Pure,
    Density,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<String>,
    pub d: usize,
    pub parties: usize,
    pub kind: StateFileKind,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl StateFile {
    pub fn from_state(state: &QuditState) -> Self {
        let (kind, entries): (_, Vec<C64>) = match state.kind() {
            StateKind::Pure(v) => (StateFileKind::Pure, v.clone()),
            StateKind::Density(m) => (StateFileKind::Density, m.data().to_vec()),
        };
        Self {
            schema: Some(SCHEMA.to_string()),
            d: state.d(),
            parties: state.parties(),
            kind,
            re: entries.iter().map(|c| c.re).collect(),
            im: entries.iter().map(|c| c.im).collect(),
        }
    }

    pub fn into_state(self) -> Result<QuditState> {
        if let Some(s) = &self.schema {
            if s != SCHEMA {
                return Err(QwError::Parse(format!("unsupported schema '{s}', expected '{SCHEMA}'")));
            }
        }
        if self.re.len() != self.im.len() {
            return Err(QwError::Parse(format!(
                "'re' has {} entries but 'im' has {}",
                self.re.len(),
                self.im.len()
            )));
        }
        let entries: Vec<C64> = self.re.iter().zip(&self.im).map(|(&r, &i)| C64::new(r, i)).collect();
        match self.kind {
            StateFileKind::Pure => QuditState::pure(self.d, self.parties, entries),
            StateFileKind::Density => {
                QuditState::density(self.d, self.parties, ComplexMatrix::from_row_major(entries)?)
            }
        }
    }
}

pub fn state_to_json(state: &QuditState) -> String {
    serde_json::to_string(&StateFile::from_state(state)).expect("state serialization cannot fail")
}

pub fn state_from_json(text: &str) -> Result<QuditState> {
    let file: StateFile = serde_json::from_str(text)?;
    file.into_state()
}

pub fn read_state(path: &Path) -> Result<QuditState> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| QwError::Parse(format!("cannot read {}: {e}", path.display())))?;
    state_from_json(&text)
}

pub fn write_state(path: &Path, state: &QuditState) -> Result<()> {
    std::fs::write(path, state_to_json(state))
        .map_err(|e| QwError::Parse(format!("cannot write {}: {e}", path.display())))
}
