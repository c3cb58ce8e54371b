//! Reading network documents.

use std::path::Path;

use serde_json::Value;

use crate::adapters::NetworkSpec;
use crate::error::{Error, Result};

/// Parses a JSON network document. A document without a `model` tag is read
/// as a raw system.
pub fn parse_network(text: &str) -> Result<NetworkSpec> {
    let mut value: Value = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let Some(obj) = value.as_object_mut() else {
        return Err(Error::Parse("top level must be a JSON object".into()));
    };
    if !obj.contains_key("model") {
        obj.insert("model".into(), Value::String("raw".into()));
    }
    serde_json::from_value(value).map_err(|e| Error::Parse(e.to_string()))
}

pub fn read_network(path: &Path) -> Result<NetworkSpec> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
    parse_network(&text)
}
