//! Run directories: `<root>/<command>-<config hash>/`, with every file stamped with
//! the config hash and master seed.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::CliError;

/// Environment variable naming the directory under which run directories are created.
pub const RUN_ROOT_ENV: &str = "MESTIM_RUN_ROOT";

pub fn run_root() -> PathBuf {
    std::env::var_os(RUN_ROOT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("runs"))
}

pub struct RunOutput {
    dir: PathBuf,
    command: &'static str,
    hash: String,
    seed: u64,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    command: &'a str,
    config_hash: &'a str,
    seed: u64,
    config: &'a ExperimentConfig,
    result: &'a T,
}

impl RunOutput {
    pub fn create(root: &Path, command: &'static str, cfg: &ExperimentConfig) -> Result<Self, CliError> {
        let hash = cfg.hash();
        let dir = root.join(format!("{command}-{hash}"));
        fs::create_dir_all(&dir)?;
        Ok(RunOutput { dir, command, hash, seed: cfg.seed() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn stamp(&self) -> String {
        format!("config_hash={}, seed={}", self.hash, self.seed)
    }

    /// Writes `# <stamp>`, a header row and the rows.
    pub fn write_csv(&self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        let mut out = BufWriter::new(File::create(&path)?);
        writeln!(out, "# {}", self.stamp())?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(path)
    }

    /// Hands a stamped writer to one of the library's CSV exporters.
    pub fn write_with<F>(&self, name: &str, f: F) -> Result<PathBuf, CliError>
    where
        F: FnOnce(BufWriter<File>, Option<&str>) -> mestim::Result<()>,
    {
        let path = self.dir.join(name);
        f(BufWriter::new(File::create(&path)?), Some(&self.stamp()))?;
        Ok(path)
    }

    /// Writes `{command, config_hash, seed, config, result}` as pretty JSON.
    pub fn write_json<T: Serialize>(&self, name: &str, cfg: &ExperimentConfig, result: &T) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        let envelope =
            Envelope { command: self.command, config_hash: &self.hash, seed: self.seed, config: cfg, result };
        let mut text = serde_json::to_string_pretty(&envelope).expect("reports serialise");
        text.push('\n');
        fs::write(&path, text)?;
        Ok(path)
    }
}

/// Shortest round-trip decimal form.
pub fn num(x: f64) -> String {
    format!("{x}")
}
