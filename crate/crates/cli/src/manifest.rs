//! Run manifests: enough to reproduce a run's outputs byte for byte.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::args::Command;
use crate::commands::Output;
use crate::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    /// The subcommand with its full parameter set, seed included.
    pub command: Command,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &Command, output: &Output) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.clone(),
            outputs: output.artifacts.iter().map(|a| a.name.clone()).collect(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}

/// Writes every artifact and the manifest into `dir`.
pub fn write_outputs(dir: &Path, command: &Command, output: &Output) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    for artifact in &output.artifacts {
        fs::write(dir.join(&artifact.name), &artifact.contents)?;
    }
    let manifest = RunManifest::new(command, output);
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(dir.join(MANIFEST_FILE), text)?;
    Ok(())
}
