//! Known-peer list: normalized server URLs, never the server's own,
//! persisted to `peers.txt` in the data directory.

use std::fs;
use std::path::{Path, PathBuf};

use nanomesh::config::normalize_server_url;
use parking_lot::RwLock;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AddOutcome {
    Added,
    Duplicate,
    SelfUrl,
}

pub struct PeerSet {
    own_url: String,
    path: Option<PathBuf>,
    urls: RwLock<Vec<String>>,
}

impl PeerSet {
    /// Loads `peers.txt` (when a directory is given) and merges the seeds.
    /// Seeds and file entries must already be valid server URLs.
    pub fn open(
        own_url: String,
        data_dir: Option<&Path>,
        seeds: &[String],
    ) -> std::io::Result<PeerSet> {
        let path = data_dir.map(|d| d.join("peers.txt"));
        let mut urls: Vec<String> = Vec::new();
        if let Some(path) = &path {
            match fs::read_to_string(path) {
                Ok(text) => {
                    for line in text.lines() {
                        let line = line.trim();
                        if line.is_empty() {
                            continue;
                        }
                        if let Ok(url) = normalize_server_url(line) {
                            if url != own_url && !urls.contains(&url) {
                                urls.push(url);
                            }
                        }
                    }
                }
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
                Err(e) => return Err(e),
            }
        }
        let set = PeerSet {
            own_url,
            path,
            urls: RwLock::new(urls),
        };
        let mut grew = false;
        for seed in seeds {
            grew |= set.insert(seed) == AddOutcome::Added;
        }
        if grew {
            set.persist()?;
        }
        Ok(set)
    }

    pub fn own_url(&self) -> &str {
        &self.own_url
    }

    /// Peer URLs in first-seen order.
    pub fn list(&self) -> Vec<String> {
        self.urls.read().clone()
    }

    /// Normalizes and adds a peer URL; persistence is best-effort.
    pub fn add(&self, url: &str) -> Result<AddOutcome, String> {
        let url = normalize_server_url(url)?;
        let outcome = self.insert(&url);
        if outcome == AddOutcome::Added {
            let _ = self.persist();
        }
        Ok(outcome)
    }

    fn insert(&self, normalized: &str) -> AddOutcome {
        if normalized == self.own_url {
            return AddOutcome::SelfUrl;
        }
        let mut urls = self.urls.write();
        if urls.iter().any(|u| u == normalized) {
            return AddOutcome::Duplicate;
        }
        urls.push(normalized.to_owned());
        AddOutcome::Added
    }

    fn persist(&self) -> std::io::Result<()> {
        let Some(path) = &self.path else {
            return Ok(());
        };
        let mut text = String::new();
        for url in self.urls.read().iter() {
            text.push_str(url);
            text.push('\n');
        }
        let tmp = path.with_extension("txt.tmp");
        fs::write(&tmp, text)?;
        fs::rename(&tmp, path)
    }
}
