//! Nanopublication server daemon.

use std::io::Write;
use std::path::PathBuf;

use clap::Parser;

use nanomesh::config::ServerConfig;
use nanomesh_net::server::RunningServer;

#[derive(Parser)]
#[command(name = "np-server", version, about = "Serve and replicate nanopublications")]
struct Args {
    /// Config file; NANOMESH_* environment variables override its keys.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Bulk-load these files into the store before serving.
    #[arg(long = "load", value_name = "FILE")]
    load: Vec<PathBuf>,
}

fn main() -> anyhow::Result<()> {
    let args = Args::parse();
    let config = ServerConfig::load(args.config.as_deref())
        .map_err(|e| anyhow::anyhow!("config: {e}"))?;
    let server = RunningServer::start(config)?;
    println!("LISTENING {}", server.addr);
    std::io::stdout().flush().ok();

    if !args.load.is_empty() {
        let report = server.state.store.load_files(&args.load);
        println!(
            "LOADED added={} present={} errors={}",
            report.added,
            report.already_present,
            report.errors.len()
        );
        for (path, error) in &report.errors {
            eprintln!("load error: {}: {error}", path.display());
        }
        std::io::stdout().flush().ok();
    }

    server.wait();
    Ok(())
}
