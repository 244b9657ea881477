//! Run manifest: inputs, tool version, wall time and artifact list.
//!
//! The manifest is the one output that is allowed to differ between
//! otherwise identical runs (it records wall time); every data artifact is
//! deterministic.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use serde::Serialize;
use tnc_market::io::RunSpec;
use tnc_market::Error;

/// CLI overrides applied on top of the config, in deterministic key order.
pub type Overrides = BTreeMap<&'static str, String>;

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config_source: &'a str,
    overrides: &'a Overrides,
    /// The fully resolved inputs the run used.
    inputs: &'a RunSpec,
    artifacts: &'a [String],
    wall_time_ms: u128,
}

/// Tracks a command run and writes `manifest.json` at the end.
pub struct RunContext {
    command: &'static str,
    config_source: String,
    overrides: Overrides,
    started: Instant,
    out_dir: PathBuf,
    artifacts: Vec<String>,
}

impl RunContext {
    pub fn new(
        command: &'static str,
        spec: &RunSpec,
        config_source: &str,
        overrides: Overrides,
    ) -> Self {
        Self {
            command,
            config_source: config_source.to_string(),
            overrides,
            started: Instant::now(),
            out_dir: PathBuf::from(&spec.output.dir),
            artifacts: Vec::new(),
        }
    }

    /// Record and write one data artifact.
    pub fn write_artifact(&mut self, name: &str, contents: &str) -> Result<(), Error> {
        let path = self.out_dir.join(name);
        tnc_market::io::write_string(&path, contents)?;
        self.artifacts.push(name.to_string());
        Ok(())
    }

    pub fn finish(self, spec: &RunSpec) -> Result<(), Error> {
        let manifest = Manifest {
            tool: "tnc",
            version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            config_source: &self.config_source,
            overrides: &self.overrides,
            inputs: spec,
            artifacts: &self.artifacts,
            wall_time_ms: self.started.elapsed().as_millis(),
        };
        let text = serde_json::to_string_pretty(&manifest)
            .map_err(|e| Error::Config(format!("manifest serialization: {e}")))?
            + "\n";
        tnc_market::io::write_string(&self.out_dir.join("manifest.json"), &text)?;
        Ok(())
    }
}
