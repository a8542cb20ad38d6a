//! Run metadata: every output starts with a line naming the tool version and
//! a hash of the effective configuration.

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// SHA-256 of the compact JSON form. Object keys are sorted by serde_json's
/// default map, so equal configs hash equally.
pub fn config_hash(config: &Value) -> String {
    let digest = Sha256::digest(config.to_string().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn meta_line(config: &Value) -> String {
    json!({
        "meta": {
            "tool": "air",
            "version": VERSION,
            "config_hash": config_hash(config),
            "config": config,
        }
    })
    .to_string()
}

pub fn comment_line(config: &Value) -> String {
    format!("# air {VERSION} config_hash={} config={}", config_hash(config), config)
}

/// Splits off a leading metadata line. The returned body keeps a blank line
/// in its place so line numbers in later errors still match the file.
pub fn strip_meta(text: &str) -> (Option<Value>, String) {
    let first = text.lines().next().unwrap_or("");
    if let Ok(Value::Object(mut obj)) = serde_json::from_str::<Value>(first) {
        if let Some(meta) = obj.remove("meta") {
            if obj.is_empty() {
                let rest = text.split_once('\n').map(|(_, r)| r).unwrap_or("");
                return (Some(meta), format!("\n{rest}"));
            }
        }
    }
    (None, text.to_string())
}
