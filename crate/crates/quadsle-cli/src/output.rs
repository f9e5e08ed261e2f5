//! Run artifacts: collected in memory, then written through temporary files and
//! renamed into place so a failed run leaves no partial outputs.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde::Serialize;

use crate::CliError;

#[derive(Debug, Default)]
pub struct Artifacts {
    files: Vec<(String, Vec<u8>)>,
}

impl Artifacts {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn text(&mut self, name: &str, body: String) {
        self.files.push((name.into(), body.into_bytes()));
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut body = serde_json::to_string_pretty(value).map_err(|e| CliError::Numerical(format!("{name}: {e}")))?;
        body.push('\n');
        self.text(name, body);
        Ok(())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.iter().map(|(n, _)| n.as_str())
    }

    /// Writes every file to `<name>.tmp` first, then renames them all.
    pub fn commit(&self, dir: &Path) -> Result<(), CliError> {
        let io = |p: &Path, e: std::io::Error| CliError::Io(format!("{}: {e}", p.display()));
        fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        let mut staged: Vec<(PathBuf, PathBuf)> = Vec::new();
        let cleanup = |staged: &[(PathBuf, PathBuf)]| {
            for (tmp, _) in staged {
                let _ = fs::remove_file(tmp);
            }
        };
        for (name, body) in &self.files {
            let target = dir.join(name);
            let tmp = dir.join(format!(".{name}.tmp"));
            let res = fs::File::create(&tmp).and_then(|mut f| {
                f.write_all(body)?;
                f.sync_all()
            });
            staged.push((tmp.clone(), target));
            if let Err(e) = res {
                cleanup(&staged);
                return Err(io(&tmp, e));
            }
        }
        for (tmp, target) in &staged {
            if let Err(e) = fs::rename(tmp, target) {
                cleanup(&staged);
                return Err(io(target, e));
            }
        }
        Ok(())
    }
}

/// `git describe --always --dirty` of the working directory, or "unknown".
pub fn git_describe() -> String {
    Command::new("git")
        .args(["describe", "--always", "--dirty"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "unknown".into())
}

/// Appends one timestamped line to `run.log`; the only non-reproducible output.
pub fn append_log(dir: &Path, line: &str) -> Result<(), CliError> {
    let now = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let path = dir.join("run.log");
    fs::create_dir_all(dir)
        .and_then(|_| fs::OpenOptions::new().create(true).append(true).open(&path))
        .and_then(|mut f| writeln!(f, "{now} {line}"))
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}
