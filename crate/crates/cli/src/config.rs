use std::fmt;
use std::fs;
use std::path::Path;

use anyhow::Result;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

/// Invalid invocation or configuration (exit code 2).
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

pub fn config_error(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

/// Starts from `preset` and overlays the JSON object in `path`, if any.
/// Nested objects merge key by key; other values replace.
pub fn load_config<T: Serialize + DeserializeOwned>(preset: T, path: Option<&Path>) -> Result<T> {
    let Some(path) = path else {
        return Ok(preset);
    };
    let text = fs::read_to_string(path)
        .map_err(|e| config_error(format!("cannot read config file {}: {e}", path.display())))?;
    let overlay: Value = serde_json::from_str(&text)
        .map_err(|e| config_error(format!("invalid JSON in {}: {e}", path.display())))?;
    let mut base = serde_json::to_value(&preset)?;
    merge(&mut base, overlay);
    serde_json::from_value(base)
        .map_err(|e| config_error(format!("invalid configuration in {}: {e}", path.display())))
}

fn merge(base: &mut Value, overlay: Value) {
    match (base, overlay) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                merge(b.entry(k).or_insert(Value::Null), v);
            }
        }
        (b, o) => *b = o,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn merge_overrides_leaves() {
        let mut base = json!({"a": 1, "b": {"c": 2, "d": 3}, "e": [1, 2]});
        merge(&mut base, json!({"b": {"d": 4}, "e": [5]}));
        assert_eq!(base, json!({"a": 1, "b": {"c": 2, "d": 4}, "e": [5]}));
    }
}
