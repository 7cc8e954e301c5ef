use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use carfollow_core::config::{file_digest, RunConfig};
use carfollow_core::{Error, Result};

/// Everything needed to rerun a command: version, seed, input and output
/// digests, and the effective configuration.
pub struct Manifest {
    command: &'static str,
    seed: Option<u64>,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
}

impl Manifest {
    pub fn new(command: &'static str, seed: Option<u64>) -> Self {
        Self {
            command,
            seed,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn input(&mut self, path: &Path) {
        self.inputs.push(path.to_path_buf());
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.to_path_buf());
    }

    fn digest_lines(out: &mut String, label: &str, paths: &[PathBuf]) -> Result<()> {
        for p in paths {
            let mut files = Vec::new();
            if p.is_dir() {
                let mut entries: Vec<_> = fs::read_dir(p)
                    .map_err(|e| Error::io(p, e))?
                    .filter_map(|e| e.ok().map(|e| e.path()))
                    .filter(|p| p.is_file())
                    .collect();
                entries.sort();
                files.extend(entries);
            } else {
                files.push(p.clone());
            }
            for f in files {
                let _ = writeln!(out, "{label}: {} sha256={}", f.display(), file_digest(&f)?);
            }
        }
        Ok(())
    }

    /// Writes `<command>.manifest` into `dir` and returns its path.
    pub fn write(&self, dir: &Path, config: &RunConfig) -> Result<PathBuf> {
        let mut out = String::new();
        let _ = writeln!(out, "command: {}", self.command);
        let _ = writeln!(out, "artifact_version: carfollow {}", env!("CARGO_PKG_VERSION"));
        match self.seed {
            Some(s) => {
                let _ = writeln!(out, "seed: {s}");
            }
            None => out.push_str("seed: none\n"),
        }
        let _ = writeln!(out, "config_hash: {}", config.hash());
        Self::digest_lines(&mut out, "input", &self.inputs)?;
        Self::digest_lines(&mut out, "output", &self.outputs)?;
        out.push_str("\n# effective configuration\n");
        out.push_str(&config.echo());
        let path = dir.join(format!("{}.manifest", self.command));
        fs::write(&path, out).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}
