//! Run report emission. Reports are JSON with sorted keys and no
//! timestamps, so identical runs produce identical bytes.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::AppError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn write_report(dir: &Path, value: &Value) -> Result<PathBuf, AppError> {
    let path = dir.join("report.json");
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| AppError::Data(format!("cannot serialize report: {e}")))?;
    text.push('\n');
    fs::write(&path, text)
        .map_err(|e| AppError::Data(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

/// Plot-data export: resampled loop branches as `u,ascending,descending`.
pub fn write_branches(
    path: &Path,
    grid: &[f64],
    ascending: &[f64],
    descending: &[f64],
) -> Result<(), AppError> {
    let mut text = String::from("u,ascending,descending\n");
    for ((u, a), d) in grid.iter().zip(ascending).zip(descending) {
        text.push_str(&format!("{u},{a},{d}\n"));
    }
    fs::write(path, text)
        .map_err(|e| AppError::Data(format!("cannot write {}: {e}", path.display())))
}
