use std::path::Path;

use augtext::backends::BackendInfo;
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::settings::Job;

/// Record written next to a run's outputs. Everything except the two
/// timestamps is a function of the job, so mock-backend reruns produce the
/// same manifest apart from those.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub job: Job,
    pub global_seed: u64,
    pub backends: Vec<BackendInfo>,
    pub outputs: Vec<String>,
    pub started_at: String,
    pub finished_at: String,
}

pub const TIMESTAMP_KEYS: [&str; 2] = ["started_at", "finished_at"];

pub fn timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

impl RunManifest {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        std::fs::write(path, self.to_json()).map_err(|e| CliError::output(path, e))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
    }
}

/// Manifest JSON with the timestamps removed, for comparing reruns.
pub fn without_timestamps(json: &str) -> Result<serde_json::Value, serde_json::Error> {
    let mut v: serde_json::Value = serde_json::from_str(json)?;
    if let Some(obj) = v.as_object_mut() {
        for k in TIMESTAMP_KEYS {
            obj.remove(k);
        }
    }
    Ok(v)
}
