use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use railbridge::{Config, Result};
use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

/// JSON document tagged with its schema name and version.
#[derive(Serialize)]
pub struct Tagged<'a, T: Serialize> {
    pub schema: String,
    #[serde(flatten)]
    pub body: &'a T,
}

pub fn tagged<'a, T: Serialize>(name: &str, body: &'a T) -> Tagged<'a, T> {
    Tagged {
        schema: format!("railbridge.{name}.v{SCHEMA_VERSION}"),
        body,
    }
}

/// Output directory that records every file written and finishes with a
/// manifest.
pub struct OutputDir {
    root: PathBuf,
    command: &'static str,
    inputs: Vec<String>,
    outputs: Vec<String>,
    started: u64,
}

#[derive(Serialize)]
struct Manifest<'a> {
    artifact_version: &'static str,
    command: &'a str,
    seed: u64,
    config: serde_json::Value,
    inputs: &'a [String],
    outputs: &'a [String],
    started_unix: u64,
    finished_unix: u64,
}

impl OutputDir {
    pub fn create(root: &Path, command: &'static str) -> Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            command,
            inputs: Vec::new(),
            outputs: Vec::new(),
            started: now(),
        })
    }

    pub fn input(&mut self, path: &Path) {
        self.inputs.push(path.display().to_string());
    }

    pub fn json<T: Serialize>(&mut self, name: &str, schema: &str, body: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(&tagged(schema, body))?;
        text.push('\n');
        self.text(name, &text)
    }

    pub fn text(&mut self, name: &str, contents: &str) -> Result<()> {
        fs::write(self.root.join(name), contents)?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    pub fn finish(self, config: &Config) -> Result<()> {
        let manifest = Manifest {
            artifact_version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            seed: config.seed,
            config: serde_json::to_value(config.to_table())?,
            inputs: &self.inputs,
            outputs: &self.outputs,
            started_unix: self.started,
            finished_unix: now(),
        };
        let mut text = serde_json::to_string_pretty(&tagged("manifest", &manifest))?;
        text.push('\n');
        fs::write(self.root.join("manifest.json"), text)?;
        Ok(())
    }
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}
