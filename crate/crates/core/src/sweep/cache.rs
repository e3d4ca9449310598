//! Append-only JSONL store of evaluated records, keyed by a SHA-256 content hash.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::codes::{CodeFamily, CodeSeeds};
use crate::error::{Error, Result};
use crate::noise::NoisePoint;
use crate::recovery::SUPPORT_THRESHOLD;
use crate::sdp::SdpSettings;

use super::record::SweepRecord;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CacheLine {
    pub key: String,
    pub record: SweepRecord,
}

/// Hash of everything that determines an evaluation.
pub fn cache_key(
    family: CodeFamily,
    n: usize,
    param: &str,
    seeds: Option<CodeSeeds>,
    noise: NoisePoint,
    dim: usize,
    solver: &SdpSettings,
) -> String {
    let seeds = seeds.map(|s| format!("{}:{}:{}", s.master, s.zero_stream, s.one_stream)).unwrap_or_else(|| "-".into());
    let canonical = format!(
        "v1|{family}|{n}|{param}|{seeds}|{:016x}|{:016x}|{dim}|{}|{:016x}|{:016x}|{:016x}|{:016x}",
        noise.kappa_l_t.to_bits(),
        noise.kappa_phi_t.to_bits(),
        solver.max_iterations,
        solver.feasibility_tol.to_bits(),
        solver.gap_tol.to_bits(),
        solver.near_optimal_tol.to_bits(),
        SUPPORT_THRESHOLD.to_bits(),
    );
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

/// Parse one cache line, rejecting anything that is not a well-formed entry.
pub fn parse_cache_line(line: &str) -> Result<CacheLine> {
    let entry: CacheLine = serde_json::from_str(line)?;
    if entry.key.len() != 64 || !entry.key.bytes().all(|b| b.is_ascii_hexdigit()) {
        return Err(Error::Parse("cache key is not a SHA-256 hex digest".into()));
    }
    Ok(entry)
}

pub struct ResultCache {
    path: Option<PathBuf>,
    entries: HashMap<String, SweepRecord>,
    writer: Mutex<Option<File>>,
    skipped_lines: usize,
}

impl ResultCache {
    pub fn in_memory() -> Self {
        Self { path: None, entries: HashMap::new(), writer: Mutex::new(None), skipped_lines: 0 }
    }

    /// Load existing entries (malformed lines are skipped and counted) and open
    /// the file for appending.
    pub fn open(path: &Path) -> Result<Self> {
        let mut entries = HashMap::new();
        let mut skipped_lines = 0;
        if path.exists() {
            for line in BufReader::new(File::open(path)?).lines() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                match parse_cache_line(&line) {
                    Ok(e) => {
                        entries.insert(e.key, e.record);
                    }
                    Err(_) => skipped_lines += 1,
                }
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self { path: Some(path.to_path_buf()), entries, writer: Mutex::new(Some(file)), skipped_lines })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn get(&self, key: &str) -> Option<&SweepRecord> {
        self.entries.get(key)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn skipped_lines(&self) -> usize {
        self.skipped_lines
    }

    /// Append a fresh entry. Safe to call from worker threads.
    pub fn append(&self, key: &str, record: &SweepRecord) -> Result<()> {
        let mut guard = self.writer.lock().expect("cache writer poisoned");
        if let Some(file) = guard.as_mut() {
            let line = serde_json::to_string(&CacheLine { key: key.to_string(), record: record.clone() })?;
            file.write_all(line.as_bytes())?;
            file.write_all(b"\n")?;
            file.flush()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdp::SolverStatus;

    fn record() -> SweepRecord {
        SweepRecord {
            family: CodeFamily::Bin,
            n: 2,
            param: "K=1".into(),
            seed0: None,
            seed1: None,
            kappa_l_t: 0.01,
            kappa_phi_t: 0.001,
            cutoff_d: 5,
            fidelity: 0.999_876_543_210_987_6,
            infidelity: 1.234_567_890_123_4e-4,
            nbar_code: 2.0,
            solver_status: SolverStatus::Optimal,
            runtime_ms: 1.0,
        }
    }

    #[test]
    fn keys_separate_inputs() {
        let s = SdpSettings::default();
        let noise = NoisePoint { kappa_l_t: 0.01, kappa_phi_t: 0.001 };
        let a = cache_key(CodeFamily::Bin, 2, "K=1", None, noise, 5, &s);
        assert_eq!(a, cache_key(CodeFamily::Bin, 2, "K=1", None, noise, 5, &s));
        assert_ne!(a, cache_key(CodeFamily::Bin, 2, "K=2", None, noise, 5, &s));
        assert_ne!(a, cache_key(CodeFamily::Bin, 2, "K=1", None, noise, 6, &s));
        let tighter = SdpSettings { gap_tol: 1e-9, ..s };
        assert_ne!(a, cache_key(CodeFamily::Bin, 2, "K=1", None, noise, 5, &tighter));
        assert_eq!(a.len(), 64);
    }

    #[test]
    fn persisted_entries_are_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");
        let key = "ab".repeat(32);
        {
            let cache = ResultCache::open(&path).unwrap();
            cache.append(&key, &record()).unwrap();
        }
        std::fs::OpenOptions::new().append(true).open(&path).unwrap().write_all(b"{truncated\n").unwrap();
        let cache = ResultCache::open(&path).unwrap();
        assert_eq!(cache.get(&key), Some(&record()));
        assert_eq!(cache.skipped_lines(), 1);
    }

    #[test]
    fn rejects_bad_keys() {
        let line = serde_json::to_string(&CacheLine { key: "xyz".into(), record: record() }).unwrap();
        assert!(parse_cache_line(&line).is_err());
        assert!(parse_cache_line("").is_err());
    }
}
