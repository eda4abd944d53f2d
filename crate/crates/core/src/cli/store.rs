//! Output directory bookkeeping: atomic writes and the run manifest.
//!
//! `manifest.tsv` lists every artifact a command produced with the command
//! name, configuration hash, seed and SHA-256 of the bytes. Downstream
//! commands refuse inputs that are missing, were produced under a different
//! configuration hash, or no longer match their recorded digest.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const MANIFEST: &str = "manifest.tsv";

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes `bytes` to a temporary sibling and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::Config(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub sha256: String,
}

/// Run directory with its manifest and the identity of the current run.
#[derive(Debug)]
pub struct Store {
    pub dir: PathBuf,
    pub config_hash: String,
    pub seed: u64,
    entries: BTreeMap<String, Entry>,
}

impl Store {
    pub fn open(dir: &Path, config_hash: String, seed: u64) -> Result<Self> {
        let path = dir.join(MANIFEST);
        let mut entries = BTreeMap::new();
        match fs::read_to_string(&path) {
            Ok(text) => {
                for (i, line) in text.lines().enumerate() {
                    if i == 0 || line.is_empty() {
                        continue;
                    }
                    let f: Vec<&str> = line.split('\t').collect();
                    let bad = || Error::Format {
                        path: path.display().to_string(),
                        line: Some(i as u64 + 1),
                        msg: "expected artifact, command, config_hash, seed, sha256".into(),
                    };
                    if f.len() != 5 {
                        return Err(bad());
                    }
                    entries.insert(
                        f[0].to_string(),
                        Entry {
                            command: f[1].to_string(),
                            config_hash: f[2].to_string(),
                            seed: f[3].parse().map_err(|_| bad())?,
                            sha256: f[4].to_string(),
                        },
                    );
                }
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
            Err(e) => return Err(Error::io(&path, e)),
        }
        Ok(Store {
            dir: dir.to_path_buf(),
            config_hash,
            seed,
            entries,
        })
    }

    /// `# config_hash=… seed=…`, the first line of every report.
    pub fn header(&self) -> String {
        format!("# config_hash={} seed={}\n", self.config_hash, self.seed)
    }

    /// Atomically writes an artifact and records it in the manifest.
    pub fn put(&mut self, name: &str, command: &str, bytes: &[u8]) -> Result<()> {
        write_atomic(&self.dir.join(name), bytes)?;
        self.entries.insert(
            name.to_string(),
            Entry {
                command: command.to_string(),
                config_hash: self.config_hash.clone(),
                seed: self.seed,
                sha256: sha256_hex(bytes),
            },
        );
        self.save()
    }

    fn save(&self) -> Result<()> {
        let mut s = String::from("artifact\tcommand\tconfig_hash\tseed\tsha256\n");
        for (name, e) in &self.entries {
            s.push_str(&format!(
                "{name}\t{}\t{}\t{}\t{}\n",
                e.command, e.config_hash, e.seed, e.sha256
            ));
        }
        write_atomic(&self.dir.join(MANIFEST), s.as_bytes())
    }

    /// Artifact names recorded under `prefix`, sorted.
    pub fn names_with_prefix(&self, prefix: &str) -> Vec<String> {
        self.entries.keys().filter(|k| k.starts_with(prefix)).cloned().collect()
    }

    /// Bytes of an upstream artifact after checking it exists, belongs to
    /// this configuration and is unmodified. `producer` names the command to
    /// run when it is missing.
    pub fn get(&self, name: &str, producer: &str) -> Result<Vec<u8>> {
        let path = self.dir.join(name);
        let missing = || Error::MissingArtifact {
            path: path.clone(),
            command: producer.to_string(),
        };
        let entry = self.entries.get(name).ok_or_else(missing)?;
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Err(missing()),
            Err(e) => return Err(Error::io(&path, e)),
        };
        if entry.config_hash != self.config_hash {
            return Err(Error::HashMismatch {
                path,
                expected: self.config_hash.clone(),
                found: entry.config_hash.clone(),
            });
        }
        let digest = sha256_hex(&bytes);
        if digest != entry.sha256 {
            return Err(Error::HashMismatch {
                path,
                expected: entry.sha256.clone(),
                found: digest,
            });
        }
        Ok(bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn put_get_and_rejections() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = Store::open(dir.path(), "aaa".into(), 1).unwrap();
        s.put("x.tsv", "ingest", b"hello").unwrap();
        assert_eq!(s.get("x.tsv", "ingest").unwrap(), b"hello");
        assert!(matches!(s.get("y.tsv", "train"), Err(Error::MissingArtifact { .. })));

        let other = Store::open(dir.path(), "bbb".into(), 1).unwrap();
        assert!(matches!(other.get("x.tsv", "ingest"), Err(Error::HashMismatch { .. })));

        fs::write(dir.path().join("x.tsv"), b"tampered").unwrap();
        let again = Store::open(dir.path(), "aaa".into(), 1).unwrap();
        assert!(matches!(again.get("x.tsv", "ingest"), Err(Error::HashMismatch { .. })));
    }
}
