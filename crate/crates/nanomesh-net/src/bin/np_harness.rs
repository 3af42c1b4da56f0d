//! Experiment harness: deterministic corpus generation, multi-server
//! replication runs, and client load runs against a single server.

use std::path::PathBuf;
use std::time::Duration;

use clap::{Parser, Subcommand};

use nanomesh_net::harness::{self, corpus, LoadPlan, ReplicatePlan};

#[derive(Parser)]
#[command(name = "np-harness", version, about = "Run nanopublication network experiments")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a deterministic corpus file.
    Gen {
        #[arg(long)]
        nanopubs: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
    /// Spawn servers, preload disjoint corpus slices, measure convergence.
    Replicate {
        #[arg(long, default_value_t = 3)]
        servers: usize,
        /// Total corpus size, split evenly unless --split is given.
        #[arg(long, default_value_t = 10_000)]
        nanopubs: u64,
        /// Comma-separated per-server preload counts; overrides --nanopubs.
        #[arg(long, value_name = "N,N,...")]
        split: Option<String>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        page_size: u64,
        /// Replication loop interval in seconds.
        #[arg(long, default_value_t = 1.0)]
        interval: f64,
        /// Give up after this many seconds without convergence.
        #[arg(long, default_value_t = 600.0)]
        timeout: f64,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Ramp up concurrent read clients against one server.
    Load {
        #[arg(long, default_value_t = 50)]
        clients: usize,
        /// Experiment duration in seconds; clients start evenly across it.
        #[arg(long, default_value_t = 120.0)]
        duration: f64,
        /// Chance of fetching each entry of a listed journal page.
        #[arg(long, default_value_t = 0.1)]
        fetch_probability: f64,
        #[arg(long, value_name = "URL")]
        target: String,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
}

fn main() -> anyhow::Result<()> {
    match Args::parse().command {
        Command::Gen { nanopubs, seed, out } => {
            let corpus = corpus::gen_corpus(nanopubs, seed);
            corpus::write_corpus_file(&corpus, &out)?;
            println!("{} nanopubs written to {}", corpus.len(), out.display());
        }
        Command::Replicate {
            servers,
            nanopubs,
            split,
            seed,
            page_size,
            interval,
            timeout,
            out,
        } => {
            let assignments = match split {
                Some(text) => text
                    .split(',')
                    .map(|s| s.trim().parse::<u64>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| anyhow::anyhow!("bad --split: {e}"))?,
                None => even_split(nanopubs, servers),
            };
            let plan = ReplicatePlan {
                server_bin: server_binary()?,
                assignments,
                seed,
                page_size,
                loop_interval_secs: interval,
                out_dir: out.clone(),
                timeout: Duration::from_secs_f64(timeout),
                spot_checks: 20,
            };
            let metrics = harness::run_replication_experiment(&plan)?;
            print!("{}", std::fs::read_to_string(out.join("summary.txt"))?);
            if metrics.spot_check_failures > 0 {
                anyhow::bail!("{} spot checks failed", metrics.spot_check_failures);
            }
        }
        Command::Load {
            clients,
            duration,
            fetch_probability,
            target,
            out,
        } => {
            let plan = LoadPlan {
                target,
                max_clients: clients,
                ramp: Duration::from_secs_f64(duration),
                fetch_probability,
                request_timeout: Duration::from_secs(60),
                out_dir: out.clone(),
            };
            harness::run_load_experiment(&plan)?;
            print!("{}", std::fs::read_to_string(out.join("summary.txt"))?);
        }
    }
    Ok(())
}

fn even_split(total: u64, servers: usize) -> Vec<u64> {
    let n = servers.max(1) as u64;
    (0..n).map(|i| total / n + u64::from(i < total % n)).collect()
}

/// The server binary ships alongside this one; an explicit path wins.
fn server_binary() -> anyhow::Result<PathBuf> {
    if let Ok(path) = std::env::var("NANOMESH_SERVER_BIN") {
        return Ok(PathBuf::from(path));
    }
    let me = std::env::current_exe()?;
    let sibling = me.with_file_name(format!("np-server{}", std::env::consts::EXE_SUFFIX));
    if sibling.exists() {
        Ok(sibling)
    } else {
        anyhow::bail!(
            "np-server not found next to {}; set NANOMESH_SERVER_BIN",
            me.display()
        )
    }
}
