//! Output directories and the metadata sidecar.

use std::fs;
use std::path::PathBuf;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Value};

use crate::args::OutArgs;
use crate::error::{CliError, Result};

pub const META_FILE: &str = "meta.json";

/// An output directory being written. Files go through [`OutDir::write`];
/// unless [`OutDir::finish`] runs, dropping it removes them again.
pub struct OutDir {
    path: PathBuf,
    created_dir: bool,
    written: Vec<PathBuf>,
    done: bool,
    started_ms: u64,
    clock: Instant,
}

fn unix_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

impl OutDir {
    pub fn prepare(args: &OutArgs) -> Result<Self> {
        let path = args.out.clone();
        let exists = path.exists();
        if exists {
            if !path.is_dir() {
                return Err(CliError::data(format!("{} exists and is not a directory", path.display())));
            }
            let non_empty = fs::read_dir(&path)
                .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?
                .next()
                .is_some();
            if non_empty && !args.force {
                return Err(CliError::usage(format!(
                    "{} is not empty; pass --force to write into it",
                    path.display()
                )));
            }
        } else {
            fs::create_dir_all(&path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        }
        Ok(Self {
            path,
            created_dir: !exists,
            written: Vec::new(),
            done: false,
            started_ms: unix_ms(),
            clock: Instant::now(),
        })
    }

    pub fn write(&mut self, name: &str, bytes: impl AsRef<[u8]>) -> Result<PathBuf> {
        let target = self.path.join(name);
        fs::write(&target, bytes).map_err(|e| CliError::internal(format!("{}: {e}", target.display())))?;
        self.written.push(target.clone());
        Ok(target)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let mut body = serde_json::to_vec_pretty(value).map_err(|e| CliError::internal(e.to_string()))?;
        body.push(b'\n');
        self.write(name, body)
    }

    /// Writes the metadata sidecar and keeps every output.
    pub fn finish(mut self, command: &str, seed: Option<u64>, extra: Value) -> Result<()> {
        let meta = json!({
            "command": command,
            "version": env!("CARGO_PKG_VERSION"),
            "seed": seed,
            "started_at_ms": self.started_ms,
            "finished_at_ms": unix_ms(),
            "elapsed_ms": self.clock.elapsed().as_millis() as u64,
            "details": extra,
        });
        self.write_json(META_FILE, &meta)?;
        self.done = true;
        Ok(())
    }

    /// Keeps what was written so far without a metadata sidecar.
    pub fn keep(mut self) {
        self.done = true;
    }
}

impl Drop for OutDir {
    fn drop(&mut self) {
        if self.done {
            return;
        }
        for f in &self.written {
            let _ = fs::remove_file(f);
        }
        if self.created_dir {
            let _ = fs::remove_dir(&self.path);
        }
    }
}
