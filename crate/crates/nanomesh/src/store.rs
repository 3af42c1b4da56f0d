//! Append-only content-addressed store.
//!
//! Layout under the data directory:
//!
//! ```text
//! meta              journal id and page size
//! journal           fixed 46-byte records: 45-char code + newline
//! np/<xx>/<code>    canonical line-quads bytes, named by code
//! packages/<n>.gz   cached page packages (complete pages only)
//! tmp/              staging for atomic renames
//! ```
//!
//! Writes go content file first, then journal record. The journal is the
//! source of truth: a content file without a journal record is invisible, so
//! a crash between the two steps loses nothing but disk space. Reopening
//! truncates a partially written trailing record.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use parking_lot::RwLock;

use crate::rdf::Nanopub;
use crate::trusty::{self, ArtifactCode, TrustyError, TrustyUri, CODE_LEN};
use crate::vocab::DEFAULT_PAGE_SIZE;

/// One journal record: the code plus a newline.
pub const RECORD_LEN: u64 = CODE_LEN as u64 + 1;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("journal corrupt at record {index}: {reason}")]
    CorruptJournal { index: u64, reason: String },
    #[error("meta file malformed: {0}")]
    BadMeta(String),
    #[error("store was created with page size {stored}, configured {configured}")]
    PageSizeMismatch { stored: u64, configured: u64 },
    #[error("content file for {code} is missing")]
    MissingContent { code: String },
    #[error("nanopublication <{0}> failed verification")]
    VerificationFailed(String),
    #[error(transparent)]
    Trusty(#[from] TrustyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PutOutcome {
    /// Journal position (1-based) the nanopublication was appended at.
    Added(u64),
    AlreadyPresent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StoreInfo {
    pub journal_id: u64,
    pub count: u64,
    pub page_size: u64,
}

#[derive(Debug, Clone, Copy)]
pub struct StoreOptions {
    pub page_size: u64,
    pub cache_packages: bool,
}

impl Default for StoreOptions {
    fn default() -> Self {
        StoreOptions {
            page_size: DEFAULT_PAGE_SIZE,
            cache_packages: true,
        }
    }
}

/// Per-file outcome of a bulk load.
#[derive(Debug, Default)]
pub struct LoadReport {
    pub added: u64,
    pub already_present: u64,
    pub errors: Vec<(PathBuf, String)>,
}

struct Inner {
    journal: File,
    codes: Vec<ArtifactCode>,
    positions: HashMap<String, u64>,
}

/// Thread-safe handle: one writer at a time, any number of readers.
pub struct Store {
    dir: PathBuf,
    page_size: u64,
    journal_id: u64,
    cache_packages: bool,
    inner: RwLock<Inner>,
}

impl Store {
    /// Opens or creates a store, repairing a torn trailing journal record.
    pub fn open(dir: impl Into<PathBuf>, options: StoreOptions) -> Result<Self, StoreError> {
        assert!(options.page_size > 0, "page size must be positive");
        let dir = dir.into();
        fs::create_dir_all(dir.join("np"))?;
        fs::create_dir_all(dir.join("packages"))?;
        fs::create_dir_all(dir.join("tmp"))?;

        let meta_path = dir.join("meta");
        let (journal_id, page_size) = if meta_path.exists() {
            let (journal_id, stored) = read_meta(&meta_path)?;
            if stored != options.page_size {
                return Err(StoreError::PageSizeMismatch {
                    stored,
                    configured: options.page_size,
                });
            }
            (journal_id, stored)
        } else {
            let journal_id: u64 = rand::random();
            let tmp = dir.join("tmp").join("meta");
            fs::write(
                &tmp,
                format!("journal-id: {journal_id}\npage-size: {}\n", options.page_size),
            )?;
            fs::rename(&tmp, &meta_path)?;
            (journal_id, options.page_size)
        };

        let journal_path = dir.join("journal");
        let mut journal = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(&journal_path)?;
        let len = journal.metadata()?.len();
        let torn = len % RECORD_LEN;
        if torn != 0 {
            journal.set_len(len - torn)?;
        }

        let mut raw = Vec::new();
        journal.read_to_end(&mut raw)?;
        let mut codes = Vec::new();
        let mut positions = HashMap::new();
        for (i, record) in raw.chunks_exact(RECORD_LEN as usize).enumerate() {
            let index = i as u64 + 1;
            let corrupt = |reason: &str| StoreError::CorruptJournal {
                index,
                reason: reason.to_owned(),
            };
            if record[RECORD_LEN as usize - 1] != b'\n' {
                return Err(corrupt("missing record terminator"));
            }
            let text = std::str::from_utf8(&record[..CODE_LEN])
                .map_err(|_| corrupt("record is not UTF-8"))?;
            let code = ArtifactCode::parse(text).map_err(|e| corrupt(&e.to_string()))?;
            if positions.insert(text.to_owned(), index).is_some() {
                return Err(corrupt("duplicate code"));
            }
            codes.push(code);
        }

        Ok(Store {
            dir,
            page_size,
            journal_id,
            cache_packages: options.cache_packages,
            inner: RwLock::new(Inner {
                journal,
                codes,
                positions,
            }),
        })
    }

    pub fn info(&self) -> StoreInfo {
        StoreInfo {
            journal_id: self.journal_id,
            count: self.inner.read().codes.len() as u64,
            page_size: self.page_size,
        }
    }

    pub fn count(&self) -> u64 {
        self.inner.read().codes.len() as u64
    }

    pub fn contains(&self, code: &ArtifactCode) -> bool {
        self.inner.read().positions.contains_key(code.as_str())
    }

    /// Verifies and appends. Re-putting an existing nanopublication is a
    /// no-op reported as [`PutOutcome::AlreadyPresent`].
    pub fn put(&self, np: &Nanopub) -> Result<PutOutcome, StoreError> {
        if !trusty::verify(np)? {
            return Err(StoreError::VerificationFailed(np.uri().as_str().to_owned()));
        }
        let code = TrustyUri::parse(np.uri().as_str())
            .expect("verified nanopublications are content-addressed")
            .code();
        if self.contains(&code) {
            return Ok(PutOutcome::AlreadyPresent);
        }

        let bytes = np.to_line_quads().into_bytes();
        self.write_content(&code, &bytes)?;

        let position = {
            let mut inner = self.inner.write();
            if inner.positions.contains_key(code.as_str()) {
                return Ok(PutOutcome::AlreadyPresent);
            }
            let mut record = Vec::with_capacity(RECORD_LEN as usize);
            record.extend_from_slice(code.as_str().as_bytes());
            record.push(b'\n');
            inner.journal.write_all(&record)?;
            inner.journal.sync_data()?;
            inner.codes.push(code.clone());
            let position = inner.codes.len() as u64;
            inner.positions.insert(code.as_str().to_owned(), position);
            position
        };
        if self.cache_packages && position % self.page_size == 0 {
            // Cache eagerly; on failure the package is rebuilt on demand.
            let _ = self.package(position / self.page_size);
        }
        Ok(PutOutcome::Added(position))
    }

    /// Raw stored bytes (canonical line-quads) for a code.
    pub fn get(&self, code: &ArtifactCode) -> Result<Option<Vec<u8>>, StoreError> {
        if !self.contains(code) {
            return Ok(None);
        }
        match fs::read(self.content_path(code)) {
            Ok(bytes) => Ok(Some(bytes)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(StoreError::MissingContent {
                code: code.as_str().to_owned(),
            }),
            Err(e) => Err(e.into()),
        }
    }

    /// Codes on a 1-based journal page; the trailing page may be partial.
    /// `None` when the page is beyond the journal.
    pub fn journal_page(&self, page: u64) -> Option<Vec<ArtifactCode>> {
        if page == 0 {
            return None;
        }
        let inner = self.inner.read();
        let count = inner.codes.len() as u64;
        let start = (page - 1) * self.page_size;
        if start >= count {
            return None;
        }
        let end = (start + self.page_size).min(count);
        Some(inner.codes[start as usize..end as usize].to_vec())
    }

    /// Number of pages the journal currently spans (last may be partial).
    pub fn page_count(&self) -> u64 {
        self.count().div_ceil(self.page_size)
    }

    /// Gzipped package of a complete page: for each nanopublication a comment
    /// line `# <code>` followed by its content bytes. `None` when the page is
    /// incomplete or out of range. Cached packages are byte-stable.
    pub fn package(&self, page: u64) -> Result<Option<Vec<u8>>, StoreError> {
        let codes = {
            match self.journal_page(page) {
                Some(codes) if codes.len() as u64 == self.page_size => codes,
                _ => return Ok(None),
            }
        };
        let cache_path = self.dir.join("packages").join(format!("{page}.gz"));
        if self.cache_packages {
            match fs::read(&cache_path) {
                Ok(bytes) => return Ok(Some(bytes)),
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
                Err(e) => return Err(e.into()),
            }
        }
        let mut plain = Vec::new();
        for code in &codes {
            plain.extend_from_slice(b"# ");
            plain.extend_from_slice(code.as_str().as_bytes());
            plain.push(b'\n');
            let bytes = self.get(code)?.ok_or_else(|| StoreError::MissingContent {
                code: code.as_str().to_owned(),
            })?;
            plain.extend_from_slice(&bytes);
        }
        let mut encoder =
            flate2::write::GzEncoder::new(Vec::new(), flate2::Compression::default());
        encoder.write_all(&plain)?;
        let packed = encoder.finish()?;
        if self.cache_packages {
            let tmp = self.dir.join("tmp").join(format!("pkg-{page}.gz"));
            fs::write(&tmp, &packed)?;
            fs::rename(&tmp, &cache_path)?;
        }
        Ok(Some(packed))
    }

    /// Loads line-quads files, each holding any number of nanopublications.
    /// Failures are collected per file; loading continues.
    pub fn load_files(&self, paths: &[PathBuf]) -> LoadReport {
        let mut report = LoadReport::default();
        for path in paths {
            match self.load_file(path, &mut report) {
                Ok(()) => {}
                Err(detail) => report.errors.push((path.clone(), detail)),
            }
        }
        report
    }

    fn load_file(&self, path: &Path, report: &mut LoadReport) -> Result<(), String> {
        let text = fs::read_to_string(path).map_err(|e| e.to_string())?;
        let quads = crate::rdf::line::parse(&text).map_err(|e| e.to_string())?;
        let nanopubs = crate::rdf::split_document(quads).map_err(|e| e.to_string())?;
        for np in &nanopubs {
            match self.put(np) {
                Ok(PutOutcome::Added(_)) => report.added += 1,
                Ok(PutOutcome::AlreadyPresent) => report.already_present += 1,
                Err(e) => report
                    .errors
                    .push((path.to_path_buf(), format!("<{}>: {e}", np.uri()))),
            }
        }
        Ok(())
    }

    fn content_path(&self, code: &ArtifactCode) -> PathBuf {
        // Codes start with the scheme prefix; shard on the first varying pair.
        let shard = &code.as_str()[2..4];
        self.dir.join("np").join(shard).join(code.as_str())
    }

    fn write_content(&self, code: &ArtifactCode, bytes: &[u8]) -> Result<(), StoreError> {
        let target = self.content_path(code);
        fs::create_dir_all(target.parent().expect("content path has a parent"))?;
        let tmp = self
            .dir
            .join("tmp")
            .join(format!("{}-{:x}", code.as_str(), rand::random::<u32>()));
        let mut file = File::create(&tmp)?;
        file.write_all(bytes)?;
        file.sync_all()?;
        drop(file);
        fs::rename(&tmp, &target)?;
        Ok(())
    }
}

fn read_meta(path: &Path) -> Result<(u64, u64), StoreError> {
    let text = fs::read_to_string(path)?;
    let mut journal_id = None;
    let mut page_size = None;
    for line in text.lines() {
        let Some((key, value)) = line.split_once(':') else {
            return Err(StoreError::BadMeta(format!("bad line {line:?}")));
        };
        let value = value.trim();
        match key.trim() {
            "journal-id" => {
                journal_id = Some(value.parse::<u64>().map_err(|_| {
                    StoreError::BadMeta(format!("bad journal-id {value:?}"))
                })?)
            }
            "page-size" => {
                page_size = Some(value.parse::<u64>().map_err(|_| {
                    StoreError::BadMeta(format!("bad page-size {value:?}"))
                })?)
            }
            other => return Err(StoreError::BadMeta(format!("unknown key {other:?}"))),
        }
    }
    match (journal_id, page_size) {
        (Some(j), Some(p)) if p > 0 => Ok((j, p)),
        _ => Err(StoreError::BadMeta(
            "missing journal-id or page-size".into(),
        )),
    }
}
