//! Load experiment: a linearly growing swarm of clients walks a target
//! server's journal, fetching random pages and a fraction of the entries
//! on each. Latency is sampled per request and bucketed by how many
//! clients were active when the request started.

use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use anyhow::{bail, Context};
use parking_lot::Mutex;
use rand::prelude::*;

use crate::client::ServerClient;
use crate::monitor::nearest_rank;

pub struct LoadPlan {
    pub target: String,
    /// Swarm size at the end of the ramp.
    pub max_clients: usize,
    /// Total experiment duration; clients start evenly spread across it.
    pub ramp: Duration,
    /// Chance of fetching each entry of a listed page.
    pub fetch_probability: f64,
    pub request_timeout: Duration,
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RequestKind {
    Page,
    Nanopub,
}

impl RequestKind {
    fn label(self) -> &'static str {
        match self {
            RequestKind::Page => "page",
            RequestKind::Nanopub => "nanopub",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Sample {
    pub offset_ms: u64,
    pub active_clients: usize,
    pub kind: RequestKind,
    pub latency_ms: f64,
    pub ok: bool,
}

#[derive(Debug, Clone)]
pub struct Bucket {
    pub clients: usize,
    pub count: usize,
    pub mean_ms: f64,
    pub p50_ms: f64,
    pub p99_ms: f64,
}

#[derive(Debug, Clone)]
pub struct LoadMetrics {
    pub request_count: u64,
    pub error_count: u64,
    pub mean_latency_ms: f64,
    pub duration: Duration,
    pub requests_per_second: f64,
    pub per_client_counts: Vec<u64>,
    pub buckets: Vec<Bucket>,
}

pub fn run_load_experiment(plan: &LoadPlan) -> anyhow::Result<LoadMetrics> {
    if plan.max_clients == 0 || plan.ramp.is_zero() {
        bail!("need at least one client and a nonzero duration");
    }
    if !(0.0..=1.0).contains(&plan.fetch_probability) {
        bail!("fetch probability must lie in [0, 1]");
    }
    std::fs::create_dir_all(&plan.out_dir)?;

    let probe = ServerClient::with_timeout(plan.target.clone(), Duration::from_secs(10));
    let info = probe.info().context("target server unreachable")?;
    if info.nanopub_count == 0 {
        bail!("target server is empty, nothing to fetch");
    }
    let page_count = info.nanopub_count.div_ceil(info.page_size);

    let n = plan.max_clients;
    let samples: Arc<Mutex<Vec<Sample>>> = Arc::new(Mutex::new(Vec::new()));
    let started_count = Arc::new(AtomicU64::new(0));
    let start = Instant::now();
    let end = start + plan.ramp;
    let slice = plan.ramp / n as u32;

    let mut handles = Vec::with_capacity(n);
    for i in 0..n {
        let target = plan.target.clone();
        let timeout = plan.request_timeout;
        let fetch_probability = plan.fetch_probability;
        let samples = Arc::clone(&samples);
        let started_count = Arc::clone(&started_count);
        let client_start = start + slice * i as u32;
        handles.push(std::thread::spawn(move || -> u64 {
            let wait = client_start.saturating_duration_since(Instant::now());
            std::thread::sleep(wait);
            started_count.fetch_add(1, Ordering::SeqCst);
            let client = ServerClient::with_timeout(target, timeout);
            let mut rng = rand::rng();
            let mut requests = 0u64;
            while Instant::now() < end {
                let active = started_count.load(Ordering::SeqCst) as usize;
                let page = rng.random_range(1..=page_count);
                let at = Instant::now();
                let listed = client.journal_page(page);
                let latency = at.elapsed();
                let ok = listed.is_ok();
                samples.lock().push(Sample {
                    offset_ms: at.duration_since(start).as_millis() as u64,
                    active_clients: active,
                    kind: RequestKind::Page,
                    latency_ms: latency.as_secs_f64() * 1000.0,
                    ok,
                });
                requests += 1;
                let codes = listed.unwrap_or_default();
                for code in codes {
                    if Instant::now() >= end {
                        break;
                    }
                    if !rng.random_bool(fetch_probability) {
                        continue;
                    }
                    let active = started_count.load(Ordering::SeqCst) as usize;
                    let at = Instant::now();
                    let got = client.get_nanopub(&code);
                    let latency = at.elapsed();
                    samples.lock().push(Sample {
                        offset_ms: at.duration_since(start).as_millis() as u64,
                        active_clients: active,
                        kind: RequestKind::Nanopub,
                        latency_ms: latency.as_secs_f64() * 1000.0,
                        ok: got.is_ok(),
                    });
                    requests += 1;
                }
            }
            requests
        }));
    }

    let mut per_client_counts = Vec::with_capacity(n);
    for handle in handles {
        per_client_counts.push(handle.join().expect("load client panicked"));
    }
    let duration = start.elapsed();

    let samples = Arc::try_unwrap(samples)
        .expect("all clients joined")
        .into_inner();
    let metrics = summarize(&samples, &per_client_counts, duration, n);

    write_samples_csv(&plan.out_dir.join("samples.csv"), &samples)?;
    write_buckets_csv(&plan.out_dir.join("buckets.csv"), &metrics.buckets)?;
    write_metrics_csv(&plan.out_dir.join("metrics.csv"), &metrics)?;
    write_summary(&plan.out_dir.join("summary.txt"), &metrics)?;
    Ok(metrics)
}

fn summarize(
    samples: &[Sample],
    per_client_counts: &[u64],
    duration: Duration,
    max_clients: usize,
) -> LoadMetrics {
    let request_count = samples.len() as u64;
    assert_eq!(
        per_client_counts.iter().sum::<u64>(),
        request_count,
        "every request must be sampled exactly once"
    );
    let error_count = samples.iter().filter(|s| !s.ok).count() as u64;
    let mean_latency_ms = if samples.is_empty() {
        0.0
    } else {
        samples.iter().map(|s| s.latency_ms).sum::<f64>() / samples.len() as f64
    };

    let mut buckets = Vec::new();
    for clients in 1..=max_clients {
        let mut lats: Vec<f64> = samples
            .iter()
            .filter(|s| s.active_clients == clients)
            .map(|s| s.latency_ms)
            .collect();
        if lats.is_empty() {
            continue;
        }
        lats.sort_by(|a, b| a.partial_cmp(b).expect("latencies are finite"));
        buckets.push(Bucket {
            clients,
            count: lats.len(),
            mean_ms: lats.iter().sum::<f64>() / lats.len() as f64,
            p50_ms: nearest_rank(&lats, 50.0),
            p99_ms: nearest_rank(&lats, 99.0),
        });
    }

    LoadMetrics {
        request_count,
        error_count,
        mean_latency_ms,
        duration,
        requests_per_second: request_count as f64 / duration.as_secs_f64(),
        per_client_counts: per_client_counts.to_vec(),
        buckets,
    }
}

fn write_samples_csv(path: &PathBuf, samples: &[Sample]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["offset_ms", "active_clients", "kind", "latency_ms", "ok"])?;
    for s in samples {
        w.write_record([
            s.offset_ms.to_string(),
            s.active_clients.to_string(),
            s.kind.label().to_owned(),
            format!("{:.3}", s.latency_ms),
            s.ok.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_buckets_csv(path: &PathBuf, buckets: &[Bucket]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["clients", "count", "mean_ms", "p50_ms", "p99_ms"])?;
    for b in buckets {
        w.write_record([
            b.clients.to_string(),
            b.count.to_string(),
            format!("{:.3}", b.mean_ms),
            format!("{:.3}", b.p50_ms),
            format!("{:.3}", b.p99_ms),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_metrics_csv(path: &PathBuf, m: &LoadMetrics) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "request_count",
        "error_count",
        "mean_latency_ms",
        "duration_seconds",
        "requests_per_second",
    ])?;
    w.write_record([
        m.request_count.to_string(),
        m.error_count.to_string(),
        format!("{:.3}", m.mean_latency_ms),
        format!("{:.3}", m.duration.as_secs_f64()),
        format!("{:.1}", m.requests_per_second),
    ])?;
    w.flush()?;
    Ok(())
}

fn write_summary(path: &PathBuf, m: &LoadMetrics) -> anyhow::Result<()> {
    use std::io::Write;
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "requests: {} ({} errors)", m.request_count, m.error_count)?;
    writeln!(f, "duration: {:.1} s", m.duration.as_secs_f64())?;
    writeln!(f, "throughput: {:.1} req/s", m.requests_per_second)?;
    writeln!(f, "mean latency: {:.2} ms", m.mean_latency_ms)?;
    if let Some(last) = m.buckets.last() {
        writeln!(
            f,
            "at {} clients: {} requests, mean {:.2} ms, p50 {:.2} ms, p99 {:.2} ms",
            last.clients, last.count, last.mean_ms, last.p50_ms, last.p99_ms
        )?;
    }
    Ok(())
}
