//! Pull replication: visit peers, detect journal growth, fetch new
//! nanopublications (packages for complete pages, individual requests for
//! the rest), verify every one, and store what passes.
//!
//! Trust boundary: nothing a peer sends is believed until it verifies
//! locally. A peer can at worst withhold content or waste effort.

use std::collections::HashMap;
use std::io::Write as _;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use parking_lot::Mutex;

use nanomesh::store::PutOutcome;
use nanomesh::trusty::{self, ArtifactCode};

use crate::client::{ClientError, ServerClient};
use crate::server::ServerState;

/// Failing peers are skipped for exponentially many rounds, capped here.
pub const MAX_BACKOFF_ROUNDS: u64 = 16;

#[derive(Debug, Default, Clone)]
struct PeerProgress {
    last_seen_journal_id: Option<u64>,
    last_seen_count: u64,
    consecutive_failures: u32,
    cooldown_rounds: u64,
    announced: bool,
}

/// Outcome of one peer visit. `verified_ok + verify_failures` equals the
/// number of nanopublications attempted (listed as new and not yet held).
#[derive(Debug)]
pub struct SyncReport {
    pub peer: String,
    pub new_nanopubs: u64,
    pub verified_ok: u64,
    pub verify_failures: u64,
    pub duration: Duration,
    pub error: Option<String>,
}

pub struct Replicator {
    state: Arc<ServerState>,
    progress: Mutex<HashMap<String, PeerProgress>>,
    in_flight: AtomicBool,
}

/// Enforces the one-outgoing-connection discipline.
struct InFlightGuard<'a>(&'a AtomicBool);

impl<'a> InFlightGuard<'a> {
    fn acquire(flag: &'a AtomicBool) -> InFlightGuard<'a> {
        let was_active = flag.swap(true, Ordering::SeqCst);
        assert!(!was_active, "two outgoing syncs at once");
        InFlightGuard(flag)
    }
}

impl Drop for InFlightGuard<'_> {
    fn drop(&mut self) {
        self.0.store(false, Ordering::SeqCst);
    }
}

impl Replicator {
    pub fn new(state: Arc<ServerState>) -> Replicator {
        Replicator {
            state,
            progress: Mutex::new(HashMap::new()),
            in_flight: AtomicBool::new(false),
        }
    }

    /// Visits one peer: pulls new content, merges its peer list, announces
    /// this server once. Network failures end the visit early but keep the
    /// page-level progress already made.
    pub fn sync_once(&self, peer_url: &str) -> SyncReport {
        let _guard = InFlightGuard::acquire(&self.in_flight);
        let start = Instant::now();
        let mut report = SyncReport {
            peer: peer_url.to_owned(),
            new_nanopubs: 0,
            verified_ok: 0,
            verify_failures: 0,
            duration: Duration::ZERO,
            error: None,
        };
        let client = ServerClient::new(peer_url.to_owned());

        let info = match client.info() {
            Ok(info) => info,
            Err(e) => {
                self.note_failure(peer_url);
                report.error = Some(e.to_string());
                report.duration = start.elapsed();
                return report;
            }
        };

        let mut cursor = {
            let mut map = self.progress.lock();
            let entry = map.entry(peer_url.to_owned()).or_default();
            if entry.last_seen_journal_id != Some(info.journal_id) {
                entry.last_seen_journal_id = Some(info.journal_id);
                entry.last_seen_count = 0;
            }
            entry.last_seen_count
        };

        while cursor < info.nanopub_count {
            let page = cursor / info.page_size + 1;
            let page_start = (page - 1) * info.page_size;
            let page_end = (page * info.page_size).min(info.nanopub_count);
            let page_is_complete = page * info.page_size <= info.nanopub_count;

            let outcome = if page_is_complete && cursor == page_start {
                match client.package(page) {
                    Ok(nanopubs) => {
                        self.ingest(nanopubs, &mut report);
                        Ok(())
                    }
                    // Missing or mangled package: the per-entry path still works.
                    Err(e) if e.is_not_found() || matches!(e, ClientError::Malformed { .. }) => {
                        self.fetch_listed(&client, page, page_start, cursor, page_end, &mut report)
                    }
                    Err(e) => Err(e),
                }
            } else {
                self.fetch_listed(&client, page, page_start, cursor, page_end, &mut report)
            };

            match outcome {
                Ok(()) => {
                    cursor = page_end;
                    let mut map = self.progress.lock();
                    let entry = map.entry(peer_url.to_owned()).or_default();
                    entry.last_seen_count = entry.last_seen_count.max(cursor);
                }
                Err(e) => {
                    self.note_failure(peer_url);
                    report.error = Some(e.to_string());
                    report.duration = start.elapsed();
                    return report;
                }
            }
        }

        if let Ok(urls) = client.peers() {
            for url in urls {
                let _ = self.state.peers.add(&url);
            }
        }
        let announced = self
            .progress
            .lock()
            .get(peer_url)
            .is_some_and(|p| p.announced);
        if !announced && info.accepts_posts && self.announce_to(&client).is_ok() {
            self.progress
                .lock()
                .entry(peer_url.to_owned())
                .or_default()
                .announced = true;
        }

        {
            let mut map = self.progress.lock();
            let entry = map.entry(peer_url.to_owned()).or_default();
            entry.consecutive_failures = 0;
            entry.cooldown_rounds = 0;
        }
        report.duration = start.elapsed();
        report
    }

    /// Best-effort registration of this server's URL with a peer.
    pub fn announce_to(&self, client: &ServerClient) -> Result<(), ClientError> {
        client.post_peer(self.state.peers.own_url())
    }

    /// Stores every verifying nanopublication from a package. Claimed codes
    /// in the package are ignored; content speaks for itself.
    fn ingest(&self, nanopubs: Vec<nanomesh::rdf::Nanopub>, report: &mut SyncReport) {
        for np in nanopubs {
            match trusty::verify(&np) {
                Ok(true) => {
                    let code = trusty::extract_code(np.uri().as_str())
                        .expect("verified nanopublication has a code");
                    if self.state.store.contains(&code) {
                        continue;
                    }
                    report.new_nanopubs += 1;
                    match self.state.store.put(&np) {
                        Ok(PutOutcome::Added(_) | PutOutcome::AlreadyPresent) => {
                            report.verified_ok += 1
                        }
                        Err(_) => report.verify_failures += 1,
                    }
                }
                Ok(false) | Err(_) => {
                    report.new_nanopubs += 1;
                    report.verify_failures += 1;
                }
            }
        }
    }

    /// Fetches journal positions `cursor+1 ..= page_end` of one page
    /// individually. Bad responses for single entries are counted and
    /// skipped; transport failures abort the page.
    fn fetch_listed(
        &self,
        client: &ServerClient,
        page: u64,
        page_start: u64,
        cursor: u64,
        page_end: u64,
        report: &mut SyncReport,
    ) -> Result<(), ClientError> {
        let codes = client.journal_page(page)?;
        for (i, code) in codes.iter().enumerate() {
            let position = page_start + i as u64 + 1;
            if position <= cursor {
                continue;
            }
            if position > page_end {
                break;
            }
            if self.state.store.contains(code) {
                continue;
            }
            report.new_nanopubs += 1;
            match self.fetch_and_store(client, code) {
                Ok(true) => report.verified_ok += 1,
                Ok(false) => report.verify_failures += 1,
                Err(e) => {
                    report.new_nanopubs -= 1;
                    return Err(e);
                }
            }
        }
        Ok(())
    }

    /// `Ok(true)` stored, `Ok(false)` rejected (content untrustworthy),
    /// `Err` transport-level failure.
    fn fetch_and_store(
        &self,
        client: &ServerClient,
        code: &ArtifactCode,
    ) -> Result<bool, ClientError> {
        let np = match client.get_nanopub(code) {
            Ok(np) => np,
            Err(ClientError::Malformed { .. }) => return Ok(false),
            Err(e) => return Err(e),
        };
        match trusty::verify(&np) {
            Ok(true) => {}
            Ok(false) | Err(_) => return Ok(false),
        }
        let actual = trusty::extract_code(np.uri().as_str())
            .expect("verified nanopublication has a code");
        if actual.as_str() != code.as_str() {
            // Valid content, wrong document: do not let a peer substitute.
            return Ok(false);
        }
        match self.state.store.put(&np) {
            Ok(_) => Ok(true),
            Err(_) => Ok(false),
        }
    }

    fn note_failure(&self, peer_url: &str) {
        let mut map = self.progress.lock();
        let entry = map.entry(peer_url.to_owned()).or_default();
        entry.consecutive_failures += 1;
        let exponent = entry.consecutive_failures.min(10);
        entry.cooldown_rounds = (1u64 << exponent).min(MAX_BACKOFF_ROUNDS);
    }

    /// Round-robin service loop: one outgoing sync at a time, `interval`
    /// sleep between rounds, exponential backoff for failing peers.
    pub fn run_loop(&self, interval: Duration, shutdown: &AtomicBool) {
        while !shutdown.load(Ordering::Relaxed) {
            let peers = self.state.peers.list();
            for peer in peers {
                if shutdown.load(Ordering::Relaxed) {
                    return;
                }
                let cooling = {
                    let mut map = self.progress.lock();
                    let entry = map.entry(peer.clone()).or_default();
                    if entry.cooldown_rounds > 0 {
                        entry.cooldown_rounds -= 1;
                        true
                    } else {
                        false
                    }
                };
                if cooling {
                    continue;
                }
                let report = self.sync_once(&peer);
                let mut out = std::io::stdout().lock();
                let _ = writeln!(
                    out,
                    "SYNC peer={} new={} failed={} ms={}",
                    report.peer,
                    report.verified_ok,
                    report.verify_failures,
                    report.duration.as_millis(),
                );
                if let Some(error) = &report.error {
                    let _ = writeln!(out, "SYNC-ERROR peer={} detail={}", report.peer, error);
                }
                let _ = out.flush();
            }
            sleep_interruptibly(interval, shutdown);
        }
    }
}

fn sleep_interruptibly(total: Duration, shutdown: &AtomicBool) {
    let step = Duration::from_millis(50);
    let deadline = Instant::now() + total;
    while Instant::now() < deadline {
        if shutdown.load(Ordering::Relaxed) {
            return;
        }
        std::thread::sleep(step.min(deadline.saturating_duration_since(Instant::now())));
    }
}
