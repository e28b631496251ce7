//! JSON config files. Keys mirror the long flag names with underscores;
//! flags given on the command line take precedence.

use std::fs;
use std::path::Path;

use anyhow::Context;
use serde::de::DeserializeOwned;

use crate::{usage, CliResult};

pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> CliResult<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    match serde_json::from_str(&text) {
        Ok(v) => Ok(v),
        Err(e) => usage(format!("invalid config {}: {e}", path.display())),
    }
}

/// Flag value if given, else file value, else a usage error naming the flag.
pub fn required<T>(flag: Option<T>, file: Option<T>, name: &str) -> CliResult<T> {
    match flag.or(file) {
        Some(v) => Ok(v),
        None => usage(format!("--{name} is required (flag or config file)")),
    }
}
