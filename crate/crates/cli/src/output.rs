//! Staged output files, committed together at the end of a command.
//!
//! Everything is rendered in memory first; `commit` writes hidden temp
//! files next to their targets and only renames them once all writes
//! succeeded, so a failing command leaves no partial outputs behind.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

pub struct Outputs {
    dir: PathBuf,
    staged: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    pub fn new(dir: &Path) -> Self {
        Self { dir: dir.to_path_buf(), staged: Vec::new() }
    }

    pub fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.staged.retain(|(n, _)| n != name);
        self.staged.push((name.to_string(), bytes));
    }

    pub fn add_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.add(name, bytes);
        Ok(())
    }

    pub fn commit(self) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(&self.dir).with_context(|| format!("creating {}", self.dir.display()))?;
        let mut temps = Vec::with_capacity(self.staged.len());
        for (name, bytes) in &self.staged {
            let target = self.dir.join(name);
            let tmp = self.dir.join(format!(".{name}.{}.tmp", std::process::id()));
            if let Err(e) = fs::write(&tmp, bytes) {
                let _ = fs::remove_file(&tmp);
                for (t, _) in &temps {
                    let _ = fs::remove_file(t);
                }
                return Err(e).with_context(|| format!("writing {}", target.display()));
            }
            temps.push((tmp, target));
        }
        let mut written = Vec::with_capacity(temps.len());
        for (tmp, target) in temps {
            fs::rename(&tmp, &target).with_context(|| format!("renaming into {}", target.display()))?;
            written.push(target);
        }
        Ok(written)
    }
}
