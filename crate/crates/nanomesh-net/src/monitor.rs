//! Server health probing: timed info request, fetch of one uniformly random
//! journal entry, verification of the returned bytes, CSV results log.

use std::io::Write;
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::{Duration, Instant, SystemTime};

use rand::Rng;

use nanomesh::trusty;

use crate::client::ServerClient;

/// One probe of one server. `verified: Some(true)` implies no error and a
/// present fetch latency.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProbeResult {
    pub server: String,
    /// Milliseconds since the Unix epoch.
    pub timestamp: u64,
    pub info_ms: Option<u64>,
    pub fetch_ms: Option<u64>,
    pub verified: Option<bool>,
    pub count: Option<u64>,
    pub error: Option<String>,
}

pub const CSV_HEADER: [&str; 7] = [
    "server",
    "timestamp",
    "info_ms",
    "fetch_ms",
    "verified",
    "count",
    "error",
];

/// Probes one server, choosing the journal position with `rng`.
/// Never returns an error; failures land in the result's `error` field.
pub fn probe_with(server: &str, rng: &mut impl Rng) -> ProbeResult {
    let timestamp = SystemTime::now()
        .duration_since(SystemTime::UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0);
    let mut result = ProbeResult {
        server: server.to_owned(),
        timestamp,
        info_ms: None,
        fetch_ms: None,
        verified: None,
        count: None,
        error: None,
    };
    let client = ServerClient::new(server.to_owned());

    let start = Instant::now();
    let info = match client.info() {
        Ok(info) => info,
        Err(e) => {
            result.error = Some(e.to_string());
            return result;
        }
    };
    result.info_ms = Some(start.elapsed().as_millis() as u64);
    result.count = Some(info.nanopub_count);
    if info.nanopub_count == 0 {
        result.error = Some("journal is empty, nothing to fetch".to_owned());
        return result;
    }

    // Uniform over journal positions, not pages, so a short trailing page
    // is not oversampled.
    let position = rng.random_range(1..=info.nanopub_count);
    let page = (position - 1) / info.page_size + 1;
    let offset = ((position - 1) % info.page_size) as usize;

    let start = Instant::now();
    let outcome = client.journal_page(page).and_then(|codes| {
        let code = codes.get(offset).cloned().ok_or_else(|| {
            crate::client::ClientError::Malformed {
                url: server.to_owned(),
                what: "journal page",
                detail: format!("page {page} has no offset {offset}"),
            }
        })?;
        client.get_nanopub(&code).map(|np| (code, np))
    });
    match outcome {
        Ok((code, np)) => {
            result.fetch_ms = Some(start.elapsed().as_millis() as u64);
            let matches = trusty::verify(&np).unwrap_or(false)
                && trusty::extract_code(np.uri().as_str())
                    .is_some_and(|c| c.as_str() == code.as_str());
            result.verified = Some(matches);
        }
        Err(e) => {
            result.fetch_ms = Some(start.elapsed().as_millis() as u64);
            result.error = Some(e.to_string());
        }
    }
    result
}

pub fn probe(server: &str) -> ProbeResult {
    probe_with(server, &mut rand::rng())
}

fn opt_to_field<T: ToString>(value: &Option<T>) -> String {
    value.as_ref().map(T::to_string).unwrap_or_default()
}

pub fn write_csv_header<W: Write>(writer: &mut csv::Writer<W>) -> csv::Result<()> {
    writer.write_record(CSV_HEADER)
}

pub fn write_csv_row<W: Write>(
    writer: &mut csv::Writer<W>,
    row: &ProbeResult,
) -> csv::Result<()> {
    writer.write_record([
        row.server.clone(),
        row.timestamp.to_string(),
        opt_to_field(&row.info_ms),
        opt_to_field(&row.fetch_ms),
        opt_to_field(&row.verified),
        opt_to_field(&row.count),
        row.error.clone().unwrap_or_default(),
    ])
}

fn parse_opt<T: std::str::FromStr>(field: &str, what: &str) -> Result<Option<T>, String> {
    if field.is_empty() {
        return Ok(None);
    }
    field
        .parse::<T>()
        .map(Some)
        .map_err(|_| format!("bad {what}: {field:?}"))
}

/// Reads back a results log written by `write_csv_row`.
pub fn read_csv(input: impl std::io::Read) -> Result<Vec<ProbeResult>, String> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| e.to_string())?;
        if record.len() != CSV_HEADER.len() {
            return Err(format!("expected {} fields, got {}", CSV_HEADER.len(), record.len()));
        }
        let error_field = record.get(6).unwrap_or("");
        rows.push(ProbeResult {
            server: record.get(0).unwrap_or("").to_owned(),
            timestamp: record
                .get(1)
                .unwrap_or("")
                .parse()
                .map_err(|_| "bad timestamp".to_owned())?,
            info_ms: parse_opt(record.get(2).unwrap_or(""), "info_ms")?,
            fetch_ms: parse_opt(record.get(3).unwrap_or(""), "fetch_ms")?,
            verified: parse_opt(record.get(4).unwrap_or(""), "verified")?,
            count: parse_opt(record.get(5).unwrap_or(""), "count")?,
            error: if error_field.is_empty() {
                None
            } else {
                Some(error_field.to_owned())
            },
        });
    }
    Ok(rows)
}

/// Probes every server each round, appending CSV rows to `sink`.
/// `rounds` 0 means run until `shutdown` is set.
pub fn monitor_loop<W: Write>(
    servers: &[String],
    interval: Duration,
    rounds: u64,
    sink: W,
    shutdown: &AtomicBool,
) -> std::io::Result<()> {
    let mut writer = csv::WriterBuilder::new().from_writer(sink);
    write_csv_header(&mut writer).map_err(csv_io)?;
    writer.flush()?;
    let mut round = 0u64;
    loop {
        round += 1;
        for server in servers {
            if shutdown.load(Ordering::Relaxed) {
                return Ok(());
            }
            let row = probe(server);
            write_csv_row(&mut writer, &row).map_err(csv_io)?;
            writer.flush()?;
        }
        if rounds != 0 && round >= rounds {
            return Ok(());
        }
        let deadline = Instant::now() + interval;
        while Instant::now() < deadline {
            if shutdown.load(Ordering::Relaxed) {
                return Ok(());
            }
            std::thread::sleep(Duration::from_millis(20));
        }
    }
}

fn csv_io(e: csv::Error) -> std::io::Error {
    std::io::Error::other(e)
}

/// Per-server latency and correctness digest of a results log. Percentiles
/// pool info and fetch latencies (every timed request counts once) and use
/// the nearest-rank method.
#[derive(Debug, Clone, PartialEq)]
pub struct ServerSummary {
    pub server: String,
    pub probes: u64,
    pub samples: u64,
    pub p50_ms: u64,
    pub p99_ms: u64,
    pub max_ms: u64,
    pub success_rate: f64,
    pub verify_failures: u64,
}

/// Nearest-rank percentile: the element at ceil(p/100 * n), 1-indexed.
pub fn nearest_rank<T: Copy>(sorted: &[T], percentile: f64) -> T {
    assert!(!sorted.is_empty(), "percentile of an empty sample set");
    let n = sorted.len();
    let rank = ((percentile / 100.0) * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

pub fn summarize(rows: &[ProbeResult]) -> Result<Vec<ServerSummary>, String> {
    if rows.is_empty() {
        return Err("results log is empty".to_owned());
    }
    let mut servers: Vec<String> = Vec::new();
    for row in rows {
        if !servers.contains(&row.server) {
            servers.push(row.server.clone());
        }
    }
    let mut summaries = Vec::new();
    for server in servers {
        let rows: Vec<&ProbeResult> = rows.iter().filter(|r| r.server == server).collect();
        let mut latencies: Vec<u64> = rows
            .iter()
            .flat_map(|r| [r.info_ms, r.fetch_ms])
            .flatten()
            .collect();
        latencies.sort_unstable();
        let successes = rows.iter().filter(|r| r.error.is_none()).count();
        let verify_failures = rows
            .iter()
            .filter(|r| r.verified == Some(false))
            .count() as u64;
        let (p50_ms, p99_ms, max_ms) = if latencies.is_empty() {
            (0, 0, 0)
        } else {
            (
                nearest_rank(&latencies, 50.0),
                nearest_rank(&latencies, 99.0),
                *latencies.last().expect("nonempty"),
            )
        };
        summaries.push(ServerSummary {
            server,
            probes: rows.len() as u64,
            samples: latencies.len() as u64,
            p50_ms,
            p99_ms,
            max_ms,
            success_rate: successes as f64 / rows.len() as f64,
            verify_failures,
        });
    }
    Ok(summaries)
}
