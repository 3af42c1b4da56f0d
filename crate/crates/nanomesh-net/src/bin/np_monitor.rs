//! Health monitor: periodically probes servers, logging latency and
//! verification results as CSV. Can also summarize an existing log.

use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Duration;

use clap::Parser;

use nanomesh::config::normalize_server_url;
use nanomesh_net::monitor;

#[derive(Parser)]
#[command(name = "np-monitor", version, about = "Probe nanopublication servers")]
struct Args {
    /// File listing one server URL per line.
    #[arg(long, value_name = "FILE", required_unless_present = "summarize")]
    servers: Option<PathBuf>,

    /// Seconds between rounds.
    #[arg(long, default_value_t = 60.0)]
    interval: f64,

    /// CSV results log (appended to stdout when omitted).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,

    /// Number of rounds; 0 runs until interrupted.
    #[arg(long, default_value_t = 0)]
    rounds: u64,

    /// Print a per-server digest of an existing results log and exit.
    #[arg(long, value_name = "CSV")]
    summarize: Option<PathBuf>,
}

fn main() -> anyhow::Result<()> {
    let args = Args::parse();

    if let Some(log) = &args.summarize {
        let file = std::fs::File::open(log)?;
        let rows = monitor::read_csv(file).map_err(|e| anyhow::anyhow!("{}: {e}", log.display()))?;
        let summaries = monitor::summarize(&rows).map_err(|e| anyhow::anyhow!(e))?;
        println!("server,probes,samples,p50_ms,p99_ms,max_ms,success_rate,verify_failures");
        for s in summaries {
            println!(
                "{},{},{},{},{},{},{:.4},{}",
                s.server, s.probes, s.samples, s.p50_ms, s.p99_ms, s.max_ms, s.success_rate,
                s.verify_failures
            );
        }
        return Ok(());
    }

    let list = args.servers.expect("clap enforces --servers here");
    let text = std::fs::read_to_string(&list)?;
    let mut servers = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        servers.push(normalize_server_url(line).map_err(|e| anyhow::anyhow!("{line:?}: {e}"))?);
    }
    if servers.is_empty() {
        anyhow::bail!("no servers in {}", list.display());
    }

    let shutdown = Arc::new(AtomicBool::new(false));
    let flag = Arc::clone(&shutdown);
    ctrlc_handler(move || flag.store(true, Ordering::Relaxed));

    let interval = Duration::from_secs_f64(args.interval);
    match &args.out {
        Some(path) => {
            let file = std::fs::File::create(path)?;
            monitor::monitor_loop(&servers, interval, args.rounds, file, &shutdown)?;
        }
        None => {
            let stdout = std::io::stdout().lock();
            monitor::monitor_loop(&servers, interval, args.rounds, stdout, &shutdown)?;
        }
    }
    Ok(())
}

/// Minimal SIGINT hook; the monitor only needs a stop flag.
fn ctrlc_handler(on_interrupt: impl Fn() + Send + 'static) {
    let runtime = tokio::runtime::Builder::new_current_thread()
        .enable_io()
        .build()
        .expect("signal runtime");
    std::thread::spawn(move || {
        runtime.block_on(async {
            if tokio::signal::ctrl_c().await.is_ok() {
                on_interrupt();
            }
        });
    });
}
