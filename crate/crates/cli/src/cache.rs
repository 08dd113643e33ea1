//! Run records under `<out>/<command>-<hash>/`, created atomically.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const RECORD_FILE: &str = "record.json";
pub const CONFIG_FILE: &str = "config.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub file: String,
    pub sha256: String,
    pub bytes: usize,
}

/// Metadata of one command run. Timestamps live here and never in payloads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub command: String,
    pub config_hash: String,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub exit_code: i32,
    pub artifacts: Vec<Artifact>,
    /// Digest over the artifact names and digests, in name order.
    pub payload_hash: String,
    pub summary: serde_json::Value,
}

/// Outcome of a command: where it lives and whether it came from the cache.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub dir: PathBuf,
    pub record: RunRecord,
    pub cache_hit: bool,
}

impl RunSummary {
    pub fn exit_code(&self) -> i32 {
        self.record.exit_code
    }

    pub fn read(&self, file: &str) -> Result<Vec<u8>, CliError> {
        let p = self.dir.join(file);
        fs::read(&p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn config_hash(key: &serde_json::Value) -> String {
    // `Value` objects keep keys sorted, so this encoding is canonical.
    sha256_hex(&serde_json::to_vec(key).expect("values serialize"))
}

fn now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

fn io_err(p: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", p.display()))
}

pub fn run_dir(out: &Path, command: &str, hash: &str) -> PathBuf {
    out.join(format!("{command}-{}", &hash[..16]))
}

pub fn load_record(dir: &Path) -> Option<RunRecord> {
    let bytes = fs::read(dir.join(RECORD_FILE)).ok()?;
    serde_json::from_slice(&bytes).ok()
}

/// What a command produces: payload files, an exit code and a short summary.
pub struct Produced {
    pub files: Vec<(String, Vec<u8>)>,
    pub exit_code: i32,
    pub summary: serde_json::Value,
}

static TMP_COUNTER: AtomicUsize = AtomicUsize::new(0);

/// Returns the cached record for `key` unless `force`, otherwise runs
/// `produce` and publishes its files by renaming a private directory into
/// place.
pub fn run_cached(
    out: &Path,
    command: &str,
    key: &serde_json::Value,
    force: bool,
    produce: impl FnOnce() -> Result<Produced, CliError>,
) -> Result<RunSummary, CliError> {
    let hash = config_hash(key);
    let dir = run_dir(out, command, &hash);
    if !force {
        if let Some(record) = load_record(&dir) {
            return Ok(RunSummary { dir, record, cache_hit: true });
        }
    }
    let started = now();
    let produced = produce()?;
    let mut files = produced.files;
    files.sort_by(|a, b| a.0.cmp(&b.0));
    let artifacts: Vec<Artifact> =
        files.iter().map(|(f, b)| Artifact { file: f.clone(), sha256: sha256_hex(b), bytes: b.len() }).collect();
    let mut h = Sha256::new();
    for a in &artifacts {
        h.update(a.file.as_bytes());
        h.update([0]);
        h.update(a.sha256.as_bytes());
        h.update(b"\n");
    }
    let payload_hash = h.finalize().iter().map(|b| format!("{b:02x}")).collect();
    let record = RunRecord {
        command: command.into(),
        config_hash: hash.clone(),
        started_unix: started,
        finished_unix: now(),
        exit_code: produced.exit_code,
        artifacts,
        payload_hash,
        summary: produced.summary,
    };

    fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
    let tmp = out.join(format!(
        ".{command}-{}.tmp-{}-{}",
        &hash[..16],
        std::process::id(),
        TMP_COUNTER.fetch_add(1, Ordering::Relaxed)
    ));
    fs::create_dir(&tmp).map_err(|e| io_err(&tmp, e))?;
    let write = |name: &str, bytes: &[u8]| fs::write(tmp.join(name), bytes).map_err(|e| io_err(&tmp.join(name), e));
    for (name, bytes) in &files {
        write(name, bytes)?;
    }
    write(CONFIG_FILE, &crate::json::to_bytes(key).map_err(|e| CliError::Io(e.to_string()))?)?;
    write(RECORD_FILE, &crate::json::to_bytes(&record).map_err(|e| CliError::Io(e.to_string()))?)?;
    if force && dir.exists() {
        fs::remove_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
    }
    if fs::rename(&tmp, &dir).is_err() {
        // Another worker published the same run first; keep theirs.
        let _ = fs::remove_dir_all(&tmp);
        if let Some(existing) = load_record(&dir) {
            return Ok(RunSummary { dir, record: existing, cache_hit: true });
        }
        return Err(CliError::Io(format!("could not publish {}", dir.display())));
    }
    Ok(RunSummary { dir, record, cache_hit: false })
}
