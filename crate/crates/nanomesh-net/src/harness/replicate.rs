//! Replication experiment: N server processes, each preloaded with a
//! disjoint slice of a generated corpus, cross-seeded as peers. Measures
//! how long full convergence takes and spot-verifies the result.

use std::io::Write;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use anyhow::{bail, Context};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use nanomesh::trusty;

use super::corpus;
use super::procs::{self, ChildGuard};
use crate::client::ServerClient;

pub struct ReplicatePlan {
    /// Path to the server binary to spawn.
    pub server_bin: PathBuf,
    /// Nanopubs preloaded at each server; length fixes the server count.
    pub assignments: Vec<u64>,
    pub seed: u64,
    pub page_size: u64,
    pub loop_interval_secs: f64,
    pub out_dir: PathBuf,
    /// Give up if the network has not converged by then.
    pub timeout: Duration,
    /// Random fetch+verify probes per server after convergence.
    pub spot_checks: usize,
}

#[derive(Debug, Clone)]
pub struct ReplicationMetrics {
    pub servers: usize,
    pub total: u64,
    pub convergence_seconds: f64,
    /// Corpus size divided by convergence time.
    pub nanopubs_per_second: f64,
    pub throughput_per_hour: f64,
    /// Entries that arrived over the wire: sum of (final - preloaded).
    pub replicated_copies: u64,
    pub copy_rate_per_second: f64,
    pub spot_check_failures: u64,
    pub per_server_final: Vec<u64>,
}

struct PollRow {
    offset_ms: u64,
    counts: Vec<u64>,
}

pub fn run_replication_experiment(plan: &ReplicatePlan) -> anyhow::Result<ReplicationMetrics> {
    if plan.assignments.is_empty() {
        bail!("at least one server required");
    }
    let total: u64 = plan.assignments.iter().sum();
    if total == 0 {
        bail!("corpus must not be empty");
    }
    std::fs::create_dir_all(&plan.out_dir)?;

    let corpus = corpus::gen_corpus(total, plan.seed);
    let mut load_files = Vec::new();
    let mut offset = 0usize;
    for (i, take) in plan.assignments.iter().enumerate() {
        let slice = &corpus[offset..offset + *take as usize];
        offset += *take as usize;
        let path = plan.out_dir.join(format!("corpus-{i}.nq"));
        corpus::write_corpus_file(slice, &path)?;
        load_files.push(path);
    }
    drop(corpus);

    let n = plan.assignments.len();
    let ports = procs::pick_free_ports(n)?;
    let mut servers: Vec<ChildGuard> = Vec::with_capacity(n);
    let started = Instant::now();
    for i in 0..n {
        let config = plan.out_dir.join(format!("server-{i}.conf"));
        let data_dir = plan.out_dir.join(format!("data-{i}"));
        procs::write_server_config(
            &config,
            ports[i],
            &data_dir,
            plan.page_size,
            plan.loop_interval_secs,
            &ports,
        )?;
        let log = plan.out_dir.join(format!("server-{i}.log"));
        servers.push(procs::spawn_server(
            &plan.server_bin,
            &config,
            std::slice::from_ref(&load_files[i]),
            &log,
        )?);
    }

    let urls: Vec<String> = ports
        .iter()
        .map(|p| format!("http://127.0.0.1:{p}/"))
        .collect();
    for url in &urls {
        procs::wait_ready(url, Duration::from_secs(60))
            .context("server did not come up")?;
    }

    let clients: Vec<ServerClient> = urls
        .iter()
        .map(|u| ServerClient::with_timeout(u.clone(), Duration::from_secs(10)))
        .collect();

    let mut series: Vec<PollRow> = Vec::new();
    let deadline = started + plan.timeout;
    let convergence = loop {
        let mut counts = Vec::with_capacity(n);
        for client in &clients {
            counts.push(client.info().map(|i| i.nanopub_count).unwrap_or(0));
        }
        let now = Instant::now();
        series.push(PollRow {
            offset_ms: now.duration_since(started).as_millis() as u64,
            counts: counts.clone(),
        });
        if counts.iter().all(|c| *c == total) {
            break now.duration_since(started);
        }
        if counts.iter().any(|c| *c > total) {
            bail!("server reports more nanopubs than the corpus holds: {counts:?}");
        }
        if now >= deadline {
            kill_all(&mut servers);
            bail!(
                "no convergence within {:?}; counts {:?} of {}",
                plan.timeout,
                counts,
                total
            );
        }
        std::thread::sleep(Duration::from_millis(250));
    };

    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed ^ 0x5eed_5eed);
    let mut spot_check_failures = 0u64;
    for client in &clients {
        for _ in 0..plan.spot_checks {
            let position = rng.random_range(1..=total);
            let page = (position - 1) / plan.page_size + 1;
            let index_in_page = ((position - 1) % plan.page_size) as usize;
            let ok = (|| -> anyhow::Result<bool> {
                let codes = client.journal_page(page)?;
                let code = codes
                    .get(index_in_page)
                    .context("journal page shorter than expected")?
                    .clone();
                let np = client.get_nanopub(&code)?;
                Ok(trusty::verify(&np).unwrap_or(false)
                    && trusty::extract_code(np.uri().as_str()).as_ref() == Some(&code))
            })()
            .unwrap_or(false);
            if !ok {
                spot_check_failures += 1;
            }
        }
    }

    let per_server_final: Vec<u64> = clients
        .iter()
        .map(|c| c.info().map(|i| i.nanopub_count).unwrap_or(0))
        .collect();
    kill_all(&mut servers);

    let convergence_seconds = convergence.as_secs_f64();
    let replicated_copies: u64 = per_server_final
        .iter()
        .zip(&plan.assignments)
        .map(|(fin, pre)| fin.saturating_sub(*pre))
        .sum();
    let metrics = ReplicationMetrics {
        servers: n,
        total,
        convergence_seconds,
        nanopubs_per_second: total as f64 / convergence_seconds,
        throughput_per_hour: total as f64 / convergence_seconds * 3600.0,
        replicated_copies,
        copy_rate_per_second: replicated_copies as f64 / convergence_seconds,
        spot_check_failures,
        per_server_final,
    };

    write_convergence_csv(&plan.out_dir.join("convergence.csv"), n, &series)?;
    write_metrics_csv(&plan.out_dir.join("metrics.csv"), &metrics)?;
    write_summary(&plan.out_dir.join("summary.txt"), &metrics)?;
    Ok(metrics)
}

fn kill_all(servers: &mut [ChildGuard]) {
    for s in servers {
        s.kill();
    }
}

fn write_convergence_csv(path: &PathBuf, n: usize, series: &[PollRow]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["offset_ms".to_owned()];
    for i in 0..n {
        header.push(format!("server_{i}"));
    }
    w.write_record(&header)?;
    for row in series {
        let mut record = vec![row.offset_ms.to_string()];
        record.extend(row.counts.iter().map(u64::to_string));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

fn write_metrics_csv(path: &PathBuf, m: &ReplicationMetrics) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "servers",
        "total",
        "convergence_seconds",
        "nanopubs_per_second",
        "throughput_per_hour",
        "replicated_copies",
        "copy_rate_per_second",
        "spot_check_failures",
    ])?;
    w.write_record([
        m.servers.to_string(),
        m.total.to_string(),
        format!("{:.3}", m.convergence_seconds),
        format!("{:.1}", m.nanopubs_per_second),
        format!("{:.0}", m.throughput_per_hour),
        m.replicated_copies.to_string(),
        format!("{:.1}", m.copy_rate_per_second),
        m.spot_check_failures.to_string(),
    ])?;
    w.flush()?;
    Ok(())
}

fn write_summary(path: &PathBuf, m: &ReplicationMetrics) -> anyhow::Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "servers: {}", m.servers)?;
    writeln!(f, "corpus: {} nanopubs", m.total)?;
    writeln!(f, "convergence: {:.3} s", m.convergence_seconds)?;
    writeln!(f, "rate: {:.1} nanopubs/s ({:.0}/hour)", m.nanopubs_per_second, m.throughput_per_hour)?;
    writeln!(f, "replicated copies: {} ({:.1}/s)", m.replicated_copies, m.copy_rate_per_second)?;
    writeln!(f, "spot check failures: {}", m.spot_check_failures)?;
    writeln!(f, "final counts: {:?}", m.per_server_final)?;
    Ok(())
}
