//! Campaign configuration files: TOML in, validated `CampaignConfig` out.
//! Unknown keys are rejected, absent keys take the documented defaults,
//! and every loaded config passes the same validation the campaign runs.

use std::fs;
use std::path::{Path, PathBuf};

use crate::campaign::{CampaignConfig, CampaignError};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("config file not found: {0}")]
    ConfigNotFound(PathBuf),
    #[error("cannot read config {file}: {reason}")]
    Unreadable { file: PathBuf, reason: String },
    #[error("invalid config ({field}): {reason}")]
    ConfigInvalid { field: String, reason: String },
}

/// Pulls the offending key out of an error message: TOML errors quote it
/// in backticks, our validators lead with it.
fn offending_field(message: &str) -> String {
    if let Some(start) = message.find('`') {
        if let Some(len) = message[start + 1..].find('`') {
            return message[start + 1..start + 1 + len].to_string();
        }
    }
    let head: String = message
        .chars()
        .take_while(|c| c.is_ascii_alphanumeric() || *c == '_' || *c == '.')
        .collect();
    if head.is_empty() {
        "config".to_string()
    } else {
        head
    }
}

pub fn load_config(path: &Path) -> Result<CampaignConfig, ConfigError> {
    if !path.exists() {
        return Err(ConfigError::ConfigNotFound(path.to_path_buf()));
    }
    let text = fs::read_to_string(path).map_err(|e| ConfigError::Unreadable {
        file: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let cfg: CampaignConfig = toml::from_str(&text).map_err(|e| {
        let reason = e.message().to_string();
        ConfigError::ConfigInvalid {
            field: offending_field(&reason),
            reason,
        }
    })?;
    cfg.validate().map_err(|e| {
        let reason = match e {
            CampaignError::InvalidConfig(r) => r,
            other => other.to_string(),
        };
        ConfigError::ConfigInvalid {
            field: offending_field(&reason),
            reason,
        }
    })?;
    Ok(cfg)
}

/// Writes the config in the same format `load_config` reads.
pub fn save_config(path: &Path, cfg: &CampaignConfig) -> Result<(), ConfigError> {
    let text = toml::to_string_pretty(cfg).map_err(|e| ConfigError::ConfigInvalid {
        field: "config".to_string(),
        reason: e.to_string(),
    })?;
    fs::write(path, text).map_err(|e| ConfigError::Unreadable {
        file: path.to_path_buf(),
        reason: e.to_string(),
    })
}
