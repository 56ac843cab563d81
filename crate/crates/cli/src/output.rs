//! CSV files with a provenance header, and the optional run manifest.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::{CliError, ExperimentConfig};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Shortest round-trip text, in exponent form only for very small or large magnitudes.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub struct OutputDir {
    dir: PathBuf,
    header: String,
}

impl OutputDir {
    pub fn create(config: &ExperimentConfig, command: &str) -> Result<Self, CliError> {
        std::fs::create_dir_all(&config.run.out)?;
        let mut header = format!("# risprop {VERSION} {command}\n");
        for line in config.provenance_toml().lines() {
            header.push_str("# ");
            header.push_str(line);
            header.push('\n');
        }
        Ok(OutputDir {
            dir: config.run.out.clone(),
            header,
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// A buffered file that already holds the header and `extra` comment lines.
    pub fn raw(&self, name: &str, extra: &[String]) -> Result<BufWriter<File>, CliError> {
        let mut file = BufWriter::new(File::create(self.path(name))?);
        file.write_all(self.header.as_bytes())?;
        for line in extra {
            writeln!(file, "# {line}")?;
        }
        Ok(file)
    }

    pub fn csv(&self, name: &str, extra: &[String], columns: &[&str]) -> Result<csv::Writer<BufWriter<File>>, CliError> {
        let mut writer = csv::Writer::from_writer(self.raw(name, extra)?);
        writer.write_record(columns)?;
        Ok(writer)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'a str,
    seed: u64,
    config_sha256: String,
    version: String,
}

/// `v<crate version>`, or the describe string injected at build time.
pub fn version_string() -> String {
    option_env!("RISPROP_GIT_DESCRIBE")
        .map(str::to_owned)
        .unwrap_or_else(|| format!("v{VERSION}"))
}

pub fn write_manifest(out: &OutputDir, config: &ExperimentConfig, command: &str) -> Result<(), CliError> {
    let manifest = Manifest {
        command,
        seed: config.run.seed,
        config_sha256: config.hash(),
        version: version_string(),
    };
    let mut file = BufWriter::new(File::create(out.path("manifest.json"))?);
    serde_json::to_writer_pretty(&mut file, &manifest).map_err(std::io::Error::from)?;
    writeln!(file)?;
    Ok(())
}
