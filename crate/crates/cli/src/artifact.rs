//! Output directory handling and artifact headers.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use tempfile::NamedTempFile;

use crate::config::ExperimentConfig;
use crate::error::CliError;

pub const TOOL: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// The `#` comment block that starts every artifact.
#[derive(Debug, Clone)]
pub struct Header {
    lines: Vec<String>,
}

impl Header {
    pub fn new(config: &ExperimentConfig, input_sha256: &str) -> Self {
        Header {
            lines: vec![
                format!("tool: {TOOL}"),
                format!("config: {}", config.to_json()),
                format!(
                    "seeds: global={} u-vectors={} xfill={}",
                    config.seed,
                    config.u_seed(),
                    config.fill_seed()
                ),
                format!("input: {} sha256={input_sha256}", config.netlist.display()),
            ],
        }
    }

    /// A copy with extra artifact-specific lines.
    pub fn with(&self, extra: impl IntoIterator<Item = String>) -> Header {
        let mut lines = self.lines.clone();
        lines.extend(extra);
        Header { lines }
    }

    pub fn render(&self) -> String {
        self.lines.iter().map(|l| format!("# {l}\n")).collect()
    }
}

/// Destination directory; refuses to reuse a non-empty directory unless forced.
#[derive(Debug)]
pub struct OutDir {
    path: PathBuf,
}

impl OutDir {
    pub fn prepare(path: &Path, force: bool) -> Result<OutDir, CliError> {
        if path.exists() {
            let mut entries = fs::read_dir(path).map_err(|e| CliError::io(path, e))?;
            if entries.next().is_some() && !force {
                return Err(CliError::Usage(format!(
                    "output directory {} is not empty; pass --force to overwrite",
                    path.display()
                )));
            }
        } else {
            fs::create_dir_all(path).map_err(|e| CliError::io(path, e))?;
        }
        Ok(OutDir { path: path.to_path_buf() })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Writes `header` then `body` to `name`, replacing any old file atomically.
    pub fn write(&self, name: &str, header: &Header, body: &str) -> Result<PathBuf, CliError> {
        let target = self.path.join(name);
        let mut tmp = NamedTempFile::new_in(&self.path).map_err(|e| CliError::io(&self.path, e))?;
        tmp.write_all(header.render().as_bytes())
            .and_then(|_| tmp.write_all(body.as_bytes()))
            .and_then(|_| tmp.flush())
            .map_err(|e| CliError::io(&target, e))?;
        tmp.persist(&target).map_err(|e| CliError::io(&target, e.error))?;
        Ok(target)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn refuses_non_empty_directory() {
        let dir = tempfile::tempdir().unwrap();
        let out = OutDir::prepare(dir.path(), false).unwrap();
        let h = Header::new(&ExperimentConfig::default(), "00");
        out.write("a.csv", &h, "x\n").unwrap();
        let err = OutDir::prepare(dir.path(), false).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(OutDir::prepare(dir.path(), true).is_ok());
        let text = fs::read_to_string(dir.path().join("a.csv")).unwrap();
        assert!(text.starts_with("# tool: adi-bench "));
        assert!(text.ends_with("x\n"));
    }
}
