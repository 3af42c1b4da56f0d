//! Server configuration: defaults, overridden by a config file, overridden by
//! `NANOMESH_*` environment variables.
//!
//! File format is line-based `key: value`; `#` starts a comment. Keys:
//! `listen-address`, `public-url`, `data-dir`, `page-size`, `accepts-posts`,
//! `loop-interval` (seconds), and `peer-seed` (repeatable).

use std::path::{Path, PathBuf};
use std::time::Duration;

use crate::vocab::DEFAULT_PAGE_SIZE;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("missing required setting {0:?}")]
    Missing(&'static str),
    #[error("unknown setting {0:?}")]
    UnknownKey(String),
    #[error("invalid value for {key}: {detail}")]
    BadValue { key: String, detail: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServerConfig {
    /// Socket address to bind; defaults to the public URL's host and port.
    pub listen_address: String,
    /// Externally reachable base URL, normalized to end with `/`. Prepended
    /// to artifact codes to form full URIs.
    pub public_url: String,
    pub data_dir: PathBuf,
    pub page_size: u64,
    /// Whether the publish endpoint accepts new nanopublications.
    pub accepts_posts: bool,
    /// Servers to announce to and replicate from at startup.
    pub peer_seeds: Vec<String>,
    /// Delay between replication rounds.
    pub loop_interval: Duration,
}

impl ServerConfig {
    /// Reads the optional file and process environment.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let text = match path {
            Some(path) => Some(std::fs::read_to_string(path)?),
            None => None,
        };
        Self::from_sources(text.as_deref(), |key| std::env::var(key).ok())
    }

    /// Testable core of [`ServerConfig::load`].
    pub fn from_sources(
        file: Option<&str>,
        env: impl Fn(&str) -> Option<String>,
    ) -> Result<Self, ConfigError> {
        let mut public_url: Option<String> = None;
        let mut listen_address: Option<String> = None;
        let mut data_dir: Option<PathBuf> = None;
        let mut page_size: Option<String> = None;
        let mut accepts_posts: Option<String> = None;
        let mut loop_interval: Option<String> = None;
        let mut peer_seeds: Vec<String> = Vec::new();

        if let Some(text) = file {
            for raw in text.lines() {
                let line = raw.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let Some((key, value)) = line.split_once(':') else {
                    return Err(ConfigError::BadValue {
                        key: line.to_owned(),
                        detail: "expected 'key: value'".into(),
                    });
                };
                let value = value.trim().to_owned();
                match key.trim() {
                    "listen-address" => listen_address = Some(value),
                    "public-url" => public_url = Some(value),
                    "data-dir" => data_dir = Some(PathBuf::from(value)),
                    "page-size" => page_size = Some(value),
                    "accepts-posts" => accepts_posts = Some(value),
                    "loop-interval" => loop_interval = Some(value),
                    "peer-seed" => peer_seeds.push(value),
                    other => return Err(ConfigError::UnknownKey(other.to_owned())),
                }
            }
        }

        if let Some(v) = env("NANOMESH_LISTEN_ADDRESS") {
            listen_address = Some(v);
        }
        if let Some(v) = env("NANOMESH_PUBLIC_URL") {
            public_url = Some(v);
        }
        if let Some(v) = env("NANOMESH_DATA_DIR") {
            data_dir = Some(PathBuf::from(v));
        }
        if let Some(v) = env("NANOMESH_PAGE_SIZE") {
            page_size = Some(v);
        }
        if let Some(v) = env("NANOMESH_ACCEPTS_POSTS") {
            accepts_posts = Some(v);
        }
        if let Some(v) = env("NANOMESH_LOOP_INTERVAL") {
            loop_interval = Some(v);
        }
        if let Some(v) = env("NANOMESH_PEER_SEEDS") {
            peer_seeds = v
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(str::to_owned)
                .collect();
        }

        let public_url = normalize_server_url(
            &public_url.ok_or(ConfigError::Missing("public-url"))?,
        )
        .map_err(|detail| ConfigError::BadValue {
            key: "public-url".into(),
            detail,
        })?;
        let data_dir = data_dir.ok_or(ConfigError::Missing("data-dir"))?;

        let listen_address = match listen_address {
            Some(addr) => addr,
            None => {
                derive_listen_address(&public_url).map_err(|detail| ConfigError::BadValue {
                    key: "public-url".into(),
                    detail,
                })?
            }
        };

        let page_size = match page_size {
            None => DEFAULT_PAGE_SIZE,
            Some(v) => match v.parse::<u64>() {
                Ok(n) if n > 0 => n,
                _ => {
                    return Err(ConfigError::BadValue {
                        key: "page-size".into(),
                        detail: format!("expected a positive integer, got {v:?}"),
                    })
                }
            },
        };

        let accepts_posts = match accepts_posts.as_deref() {
            None => true,
            Some("true") => true,
            Some("false") => false,
            Some(other) => {
                return Err(ConfigError::BadValue {
                    key: "accepts-posts".into(),
                    detail: format!("expected true or false, got {other:?}"),
                })
            }
        };

        let loop_interval = match loop_interval {
            None => Duration::from_secs(10),
            Some(v) => match v.parse::<f64>() {
                Ok(secs) if secs > 0.0 && secs.is_finite() => Duration::from_secs_f64(secs),
                _ => {
                    return Err(ConfigError::BadValue {
                        key: "loop-interval".into(),
                        detail: format!("expected seconds > 0, got {v:?}"),
                    })
                }
            },
        };

        let peer_seeds = peer_seeds
            .iter()
            .map(|s| {
                normalize_server_url(s).map_err(|detail| ConfigError::BadValue {
                    key: "peer-seed".into(),
                    detail,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;

        Ok(ServerConfig {
            listen_address,
            public_url,
            data_dir,
            page_size,
            accepts_posts,
            peer_seeds,
            loop_interval,
        })
    }
}

/// Validates an http(s) URL and normalizes it to end with one `/`.
pub fn normalize_server_url(url: &str) -> Result<String, String> {
    let url = url.trim();
    if !(url.starts_with("http://") || url.starts_with("https://")) {
        return Err(format!("expected an http(s) URL, got {url:?}"));
    }
    let rest = &url[url.find("//").unwrap() + 2..];
    if rest.is_empty() || rest.starts_with('/') {
        return Err(format!("missing host in {url:?}"));
    }
    if url.chars().any(|c| c.is_whitespace()) {
        return Err(format!("whitespace in URL {url:?}"));
    }
    let mut out = url.to_owned();
    while out.ends_with("//") {
        out.pop();
    }
    if !out.ends_with('/') {
        out.push('/');
    }
    Ok(out)
}

fn derive_listen_address(public_url: &str) -> Result<String, String> {
    // public_url is normalized: scheme://host[:port]/...
    let (scheme, rest) = public_url.split_once("//").ok_or("missing scheme")?;
    let authority = rest.split('/').next().unwrap_or("");
    if authority.is_empty() {
        return Err("missing host".into());
    }
    if authority.contains(':') {
        Ok(authority.to_owned())
    } else {
        let port = if scheme.starts_with("https") { 443 } else { 80 };
        Ok(format!("{authority}:{port}"))
    }
}
