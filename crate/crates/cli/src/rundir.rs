use std::path::{Path, PathBuf};
use std::sync::Mutex;

use bloomtrack::mission::MissionLog;
use bloomtrack::sweep::{ReplicateCache, ReplicateKey, ReplicateResult};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

/// First 12 hex digits of the SHA-256 of the command name and its
/// effective config.
pub fn config_hash<T: Serialize>(command: &str, config: &T) -> String {
    let json = serde_json::to_vec(config).expect("config serializes");
    let mut h = Sha256::new();
    h.update(command.as_bytes());
    h.update([0]);
    h.update(&json);
    hex::encode(h.finalize())[..12].to_string()
}

/// `<out>/<command>-<hash>-<UTC timestamp>`; with `resume`, the newest
/// existing directory with the same command and hash instead.
pub fn run_dir(out: &Path, command: &str, hash: &str, resume: bool) -> Result<PathBuf, CliError> {
    let prefix = format!("{command}-{hash}-");
    if resume {
        let mut found: Vec<PathBuf> = std::fs::read_dir(out)
            .into_iter()
            .flatten()
            .flatten()
            .filter(|e| e.file_name().to_string_lossy().starts_with(&prefix))
            .map(|e| e.path())
            .filter(|p| p.is_dir())
            .collect();
        found.sort();
        if let Some(dir) = found.pop() {
            return Ok(dir);
        }
    }
    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%S%.3fZ");
    let dir = out.join(format!("{prefix}{stamp}"));
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    Ok(dir)
}

/// Writes through a temporary file so readers never see half a file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes).map_err(|e| CliError::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut s = serde_json::to_string_pretty(value).expect("value serializes");
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

/// One JSON file per finished replicate under `<run>/replicates/`, plus the
/// mission log CSV when `keep_logs` is set.
pub struct DirCache {
    dir: PathBuf,
    keep_logs: bool,
    errors: Mutex<Vec<String>>,
}

impl DirCache {
    pub fn new(run: &Path, keep_logs: bool) -> Result<Self, CliError> {
        let dir = run.join("replicates");
        std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        Ok(Self {
            dir,
            keep_logs,
            errors: Mutex::new(Vec::new()),
        })
    }

    fn stem(key: &ReplicateKey) -> String {
        format!("s{:e}-{}-r{}", key.sigma, key.estimator, key.replicate)
    }

    pub fn take_errors(&self) -> Vec<String> {
        std::mem::take(&mut self.errors.lock().unwrap())
    }
}

impl ReplicateCache for DirCache {
    fn load(&self, key: &ReplicateKey) -> Option<ReplicateResult> {
        let path = self.dir.join(format!("{}.json", Self::stem(key)));
        let text = std::fs::read_to_string(path).ok()?;
        serde_json::from_str(&text).ok()
    }

    fn store(&self, key: &ReplicateKey, result: &ReplicateResult, log: Option<&MissionLog>) {
        let stem = Self::stem(key);
        let mut errs = Vec::new();
        if let (true, Some(log)) = (self.keep_logs, log) {
            let mut buf = Vec::new();
            match log.write_csv(&mut buf) {
                Ok(()) => {
                    if let Err(e) = write_atomic(&self.dir.join(format!("{stem}.csv")), &buf) {
                        errs.push(e.to_string());
                    }
                }
                Err(e) => errs.push(e.to_string()),
            }
        }
        if let Err(e) = write_json(&self.dir.join(format!("{stem}.json")), result) {
            errs.push(e.to_string());
        }
        if !errs.is_empty() {
            self.errors.lock().unwrap().extend(errs);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_depends_on_command_and_config() {
        let a = config_hash("simulate", &1);
        assert_eq!(a.len(), 12);
        assert_eq!(a, config_hash("simulate", &1));
        assert_ne!(a, config_hash("sweep", &1));
        assert_ne!(a, config_hash("simulate", &2));
    }

    #[test]
    fn resume_picks_newest_matching_dir() {
        let tmp = tempfile::tempdir().unwrap();
        for name in ["sweep-abc-1", "sweep-abc-2", "sweep-abd-3", "fit-abc-4"] {
            std::fs::create_dir(tmp.path().join(name)).unwrap();
        }
        let d = run_dir(tmp.path(), "sweep", "abc", true).unwrap();
        assert_eq!(d.file_name().unwrap(), "sweep-abc-2");
        let fresh = run_dir(tmp.path(), "sweep", "zzz", true).unwrap();
        assert!(fresh
            .file_name()
            .unwrap()
            .to_string_lossy()
            .starts_with("sweep-zzz-"));
    }
}
