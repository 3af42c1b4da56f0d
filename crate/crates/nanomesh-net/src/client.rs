//! Blocking HTTP client for the server protocol.
//!
//! Line formats mirror the server handlers: info is `key: value` lines,
//! journal pages are one trusty URI per line, peers one URL per line.

use std::io::Read;
use std::time::Duration;

use nanomesh::rdf::{self, Format, Nanopub};
use nanomesh::trusty::{ArtifactCode, TrustyUri, CODE_LEN};

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("request to {url} failed: {source}")]
    Http {
        url: String,
        source: reqwest::Error,
    },
    #[error("{url} answered {status}")]
    Status {
        url: String,
        status: reqwest::StatusCode,
    },
    #[error("{url} sent a malformed {what}: {detail}")]
    Malformed {
        url: String,
        what: &'static str,
        detail: String,
    },
}

impl ClientError {
    pub fn is_not_found(&self) -> bool {
        matches!(
            self,
            ClientError::Status {
                status: reqwest::StatusCode::NOT_FOUND,
                ..
            }
        )
    }
}

/// Parsed `GET /` response.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServerInfo {
    pub protocol_version: String,
    pub journal_id: u64,
    pub nanopub_count: u64,
    pub page_size: u64,
    pub accepts_posts: bool,
    pub public_url: String,
}

impl ServerInfo {
    /// Parses the `key: value` lines of an info body.
    pub fn parse(body: &str) -> Result<ServerInfo, String> {
        let mut protocol_version = None;
        let mut journal_id = None;
        let mut nanopub_count = None;
        let mut page_size = None;
        let mut accepts_posts = None;
        let mut public_url = None;
        for line in body.lines() {
            let Some((key, value)) = line.split_once(':') else {
                return Err(format!("bad info line {line:?}"));
            };
            let value = value.trim();
            match key.trim() {
                "protocol-version" => protocol_version = Some(value.to_owned()),
                "journal-id" => {
                    journal_id =
                        Some(value.parse().map_err(|_| format!("bad journal-id {value:?}"))?)
                }
                "nanopub-count" => {
                    nanopub_count =
                        Some(value.parse().map_err(|_| format!("bad nanopub-count {value:?}"))?)
                }
                "page-size" => {
                    page_size =
                        Some(value.parse().map_err(|_| format!("bad page-size {value:?}"))?)
                }
                "accepts-posts" => {
                    accepts_posts = Some(match value {
                        "true" => true,
                        "false" => false,
                        other => return Err(format!("bad accepts-posts {other:?}")),
                    })
                }
                "public-url" => public_url = Some(value.to_owned()),
                other => return Err(format!("unknown info key {other:?}")),
            }
        }
        Ok(ServerInfo {
            protocol_version: protocol_version.ok_or("missing protocol-version")?,
            journal_id: journal_id.ok_or("missing journal-id")?,
            nanopub_count: nanopub_count.ok_or("missing nanopub-count")?,
            page_size: page_size.ok_or("missing page-size")?,
            accepts_posts: accepts_posts.ok_or("missing accepts-posts")?,
            public_url: public_url.ok_or("missing public-url")?,
        })
    }

    pub fn render(&self) -> String {
        format!(
            "protocol-version: {}\njournal-id: {}\nnanopub-count: {}\npage-size: {}\naccepts-posts: {}\npublic-url: {}\n",
            self.protocol_version,
            self.journal_id,
            self.nanopub_count,
            self.page_size,
            self.accepts_posts,
            self.public_url,
        )
    }
}

/// Outcome of posting a nanopublication.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PostOutcome {
    Added,
    AlreadyPresent,
}

pub struct ServerClient {
    base: String,
    http: reqwest::blocking::Client,
}

impl ServerClient {
    /// `base` must end with `/` (see `config::normalize_server_url`).
    pub fn new(base: impl Into<String>) -> ServerClient {
        ServerClient::with_timeout(base, Duration::from_secs(60))
    }

    pub fn with_timeout(base: impl Into<String>, timeout: Duration) -> ServerClient {
        let base = base.into();
        debug_assert!(base.ends_with('/'), "server URL must be normalized");
        ServerClient {
            base,
            http: reqwest::blocking::Client::builder()
                .timeout(timeout)
                .build()
                .expect("client construction cannot fail with these options"),
        }
    }

    pub fn base(&self) -> &str {
        &self.base
    }

    fn url(&self, path: &str) -> String {
        format!("{}{}", self.base, path)
    }

    fn get_ok(&self, url: &str) -> Result<reqwest::blocking::Response, ClientError> {
        let response = self
            .http
            .get(url)
            .send()
            .map_err(|source| ClientError::Http {
                url: url.to_owned(),
                source,
            })?;
        if !response.status().is_success() {
            return Err(ClientError::Status {
                url: url.to_owned(),
                status: response.status(),
            });
        }
        Ok(response)
    }

    fn read_text(url: &str, response: reqwest::blocking::Response) -> Result<String, ClientError> {
        response.text().map_err(|source| ClientError::Http {
            url: url.to_owned(),
            source,
        })
    }

    pub fn info(&self) -> Result<ServerInfo, ClientError> {
        let url = self.url("");
        let body = Self::read_text(&url, self.get_ok(&url)?)?;
        ServerInfo::parse(&body).map_err(|detail| ClientError::Malformed {
            url,
            what: "info body",
            detail,
        })
    }

    /// Fetches, parses, and structurally validates one nanopublication.
    /// Verification of the artifact code is the caller's responsibility.
    pub fn get_nanopub(&self, code: &ArtifactCode) -> Result<Nanopub, ClientError> {
        let url = self.url(&format!("np/{}", code.as_str()));
        let body = Self::read_text(&url, self.get_ok(&url)?)?;
        parse_single(&url, &body)
    }

    /// Raw response body for a nanopublication with an explicit Accept header.
    pub fn get_nanopub_raw(
        &self,
        code: &ArtifactCode,
        accept: &str,
    ) -> Result<(reqwest::StatusCode, String), ClientError> {
        let url = self.url(&format!("np/{}", code.as_str()));
        let response = self
            .http
            .get(&url)
            .header(reqwest::header::ACCEPT, accept)
            .send()
            .map_err(|source| ClientError::Http {
                url: url.clone(),
                source,
            })?;
        let status = response.status();
        let body = Self::read_text(&url, response)?;
        Ok((status, body))
    }

    /// Journal page as a list of codes (the body lists full trusty URIs).
    pub fn journal_page(&self, page: u64) -> Result<Vec<ArtifactCode>, ClientError> {
        let url = self.url(&format!("journal/{page}"));
        let body = Self::read_text(&url, self.get_ok(&url)?)?;
        let mut codes = Vec::new();
        for line in body.lines() {
            if line.len() < CODE_LEN {
                return Err(ClientError::Malformed {
                    url,
                    what: "journal page line",
                    detail: format!("line too short: {line:?}"),
                });
            }
            let tail = &line[line.len() - CODE_LEN..];
            let code = ArtifactCode::parse(tail).map_err(|e| ClientError::Malformed {
                url: url.clone(),
                what: "journal page line",
                detail: e.to_string(),
            })?;
            codes.push(code);
        }
        Ok(codes)
    }

    /// Decompressed package content: `# <code>` comment lines interleaved
    /// with canonical line-quads, split back into nanopublications.
    pub fn package(&self, page: u64) -> Result<Vec<Nanopub>, ClientError> {
        let url = self.url(&format!("package/{page}"));
        let response = self.get_ok(&url)?;
        let compressed = response
            .bytes()
            .map_err(|source| ClientError::Http {
                url: url.clone(),
                source,
            })?;
        let mut decoder = flate2::read::GzDecoder::new(&compressed[..]);
        let mut plain = String::new();
        decoder
            .read_to_string(&mut plain)
            .map_err(|e| ClientError::Malformed {
                url: url.clone(),
                what: "package",
                detail: format!("gzip or UTF-8 error: {e}"),
            })?;
        let quads = rdf::line::parse(&plain).map_err(|e| ClientError::Malformed {
            url: url.clone(),
            what: "package",
            detail: e.to_string(),
        })?;
        rdf::split_document(quads).map_err(|e| ClientError::Malformed {
            url,
            what: "package",
            detail: e.to_string(),
        })
    }

    pub fn peers(&self) -> Result<Vec<String>, ClientError> {
        let url = self.url("peers");
        let body = Self::read_text(&url, self.get_ok(&url)?)?;
        Ok(body.lines().map(str::to_owned).collect())
    }

    pub fn post_nanopub(&self, np: &Nanopub) -> Result<PostOutcome, ClientError> {
        let url = self.url("np");
        let response = self
            .http
            .post(&url)
            .header(
                reqwest::header::CONTENT_TYPE,
                Format::LineQuads.media_type(),
            )
            .body(np.to_line_quads())
            .send()
            .map_err(|source| ClientError::Http {
                url: url.clone(),
                source,
            })?;
        match response.status() {
            reqwest::StatusCode::CREATED => Ok(PostOutcome::Added),
            reqwest::StatusCode::OK => Ok(PostOutcome::AlreadyPresent),
            status => Err(ClientError::Status { url, status }),
        }
    }

    pub fn post_peer(&self, peer_url: &str) -> Result<(), ClientError> {
        let url = self.url("peers");
        let response = self
            .http
            .post(&url)
            .body(peer_url.to_owned())
            .send()
            .map_err(|source| ClientError::Http {
                url: url.clone(),
                source,
            })?;
        match response.status() {
            reqwest::StatusCode::ACCEPTED | reqwest::StatusCode::OK => Ok(()),
            status => Err(ClientError::Status { url, status }),
        }
    }
}

fn parse_single(url: &str, body: &str) -> Result<Nanopub, ClientError> {
    let quads = rdf::line::parse(body).map_err(|e| ClientError::Malformed {
        url: url.to_owned(),
        what: "nanopublication body",
        detail: e.to_string(),
    })?;
    let mut nanopubs = rdf::split_document(quads).map_err(|e| ClientError::Malformed {
        url: url.to_owned(),
        what: "nanopublication body",
        detail: e.to_string(),
    })?;
    if nanopubs.len() != 1 {
        return Err(ClientError::Malformed {
            url: url.to_owned(),
            what: "nanopublication body",
            detail: format!("expected 1 nanopublication, found {}", nanopubs.len()),
        });
    }
    Ok(nanopubs.remove(0))
}

/// Full artifact URL a server exposes a code at.
pub fn artifact_url(public_url: &str, code: &ArtifactCode) -> String {
    format!("{public_url}{}", code.as_str())
}

/// Extracts the artifact code from a URI, bare code, or artifact URL.
pub fn code_from_argument(arg: &str) -> Option<ArtifactCode> {
    if arg.len() == CODE_LEN {
        return ArtifactCode::parse(arg).ok();
    }
    TrustyUri::parse(arg).ok().map(|t| t.code())
}
