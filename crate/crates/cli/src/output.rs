use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{CliError, Classify};

const LOCK_NAME: &str = ".crossprice.lock";

/// Exclusive hold on an output directory for the duration of one command.
#[derive(Debug)]
pub struct OutputDir {
    dir: PathBuf,
    lock: PathBuf,
    written: Vec<String>,
}

impl OutputDir {
    pub fn lock(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).data(format!("creating {}", dir.display()))?;
        let lock = dir.join(LOCK_NAME);
        match OpenOptions::new().write(true).create_new(true).open(&lock) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                return Err(CliError::data(format!(
                    "{} is locked by another run (remove {} if stale)",
                    dir.display(),
                    lock.display()
                )));
            }
            Err(e) => return Err(CliError::data(format!("locking {}: {e}", dir.display()))),
        }
        Ok(OutputDir {
            dir: dir.to_path_buf(),
            lock,
            written: Vec::new(),
        })
    }

    /// Writes `name` through a sibling temp file and a rename, so a failed
    /// run never leaves a truncated artifact behind.
    pub fn write<F>(&mut self, name: &str, body: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut BufWriter<&mut File>) -> anyhow::Result<()>,
    {
        let path = self.dir.join(name);
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir).data(format!("creating temp file in {}", self.dir.display()))?;
        {
            let mut w = BufWriter::new(tmp.as_file_mut());
            body(&mut w).map_err(|e| CliError::data(format!("writing {name}: {e:#}")))?;
            w.flush().data(format!("writing {name}"))?;
        }
        tmp.as_file().sync_all().data(format!("syncing {name}"))?;
        tmp.persist(&path).map_err(|e| e.error).data(format!("renaming into {}", path.display()))?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }
}

impl Drop for OutputDir {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.lock);
    }
}

/// The one JSON line each command prints on stdout.
#[derive(Debug, Default)]
pub struct Summary {
    pub counts: Map<String, Value>,
    pub warnings: Vec<String>,
}

impl Summary {
    pub fn count(&mut self, key: &str, value: impl Serialize) {
        self.counts.insert(key.to_string(), serde_json::to_value(value).expect("summary values serialize"));
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        let msg = msg.into();
        eprintln!("warning: {msg}");
        self.warnings.push(msg);
    }

    pub fn render(&self, command: &str, outputs: &[String]) -> String {
        serde_json::json!({
            "command": command,
            "status": "ok",
            "outputs": outputs,
            "counts": self.counts,
            "warnings": self.warnings,
        })
        .to_string()
    }
}

pub fn failure_line(command: &str, err: &CliError) -> String {
    serde_json::json!({
        "command": command,
        "status": "error",
        "exit_code": err.code(),
        "error": err.to_string(),
    })
    .to_string()
}
