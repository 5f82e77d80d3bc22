//! Optional key=value config file backing the shared flags. Flags win
//! over config values; unknown keys are rejected up front.

use std::collections::BTreeMap;
use std::path::Path;

pub const CONFIG_KEYS: &[&str] = &[
    "input",
    "models",
    "instances",
    "benchmark",
    "metric",
    "window_n",
    "avg_k",
    "ema_alpha",
    "seed",
    "out",
    "format",
    "threads",
    "field_map",
];

#[derive(Debug, Clone, Default)]
pub struct FileConfig {
    entries: BTreeMap<String, String>,
}

impl FileConfig {
    pub fn empty() -> Self {
        FileConfig::default()
    }

    /// Parses `key = value` lines; `#` comments and blank lines are
    /// skipped. Errors are usage errors: they describe the invocation,
    /// not the data.
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, value) = trimmed.split_once('=').ok_or_else(|| {
                format!("{}:{line}: expected key=value, got {trimmed:?}", path.display())
            })?;
            let key = key.trim();
            let value = value.trim();
            if !CONFIG_KEYS.contains(&key) {
                return Err(format!(
                    "{}:{line}: unknown config key {key:?} (known: {})",
                    path.display(),
                    CONFIG_KEYS.join(", ")
                ));
            }
            if entries.insert(key.to_string(), value.to_string()).is_some() {
                return Err(format!("{}:{line}: duplicate config key {key:?}", path.display()));
            }
        }
        Ok(FileConfig { entries })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        debug_assert!(CONFIG_KEYS.contains(&key), "lookup of undeclared key {key}");
        self.entries.get(key).map(String::as_str)
    }
}
