use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::aggregate::{GroupImportanceMatrix, ImportanceDelta, RankTable};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::metrics::BiasReport;

/// Importance shift of the audited model relative to a named baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineDelta {
    /// Where the baseline report came from, as given on the command line.
    pub baseline: String,
    #[serde(flatten)]
    pub delta: ImportanceDelta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub config: RunConfig,
    pub importance: GroupImportanceMatrix,
    pub ranking: RankTable,
    pub bias: BiasReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<BaselineDelta>,
}

/// Canonical JSON: object keys sorted, two-space indentation, floats in
/// shortest round-trip form, trailing newline. Equal reports produce equal
/// bytes.
pub fn audit_json_string(report: &AuditReport) -> Result<String> {
    // `Value` objects are BTreeMap-backed, which sorts keys.
    let value = serde_json::to_value(report)?;
    let mut text = serde_json::to_string_pretty(&value)?;
    text.push('\n');
    Ok(text)
}

pub fn write_audit_json(report: &AuditReport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = audit_json_string(report)?;
    std::fs::write(path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

pub fn read_audit_json(path: impl AsRef<Path>) -> Result<AuditReport> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    Ok(serde_json::from_str(&text)?)
}
