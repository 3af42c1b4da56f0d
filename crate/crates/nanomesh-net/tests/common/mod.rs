#![allow(dead_code)]

use std::path::Path;
use std::time::{Duration, Instant};

use nanomesh::config::ServerConfig;
use nanomesh::rdf::Nanopub;
use nanomesh_net::client::ServerClient;
use nanomesh_net::harness::corpus;
use nanomesh_net::server::RunningServer;

pub fn server_config(
    data_dir: &Path,
    page_size: u64,
    accepts_posts: bool,
    peer_seeds: Vec<String>,
    loop_interval: Duration,
) -> ServerConfig {
    ServerConfig {
        listen_address: "127.0.0.1:0".to_owned(),
        public_url: "http://127.0.0.1:0/".to_owned(),
        data_dir: data_dir.to_path_buf(),
        page_size,
        accepts_posts,
        peer_seeds,
        loop_interval,
    }
}

/// A posting-enabled server with no peers and a fast replication loop.
pub fn start_server(data_dir: &Path, page_size: u64) -> RunningServer {
    RunningServer::start(server_config(
        data_dir,
        page_size,
        true,
        Vec::new(),
        Duration::from_millis(100),
    ))
    .expect("server starts")
}

pub fn sample(n: u64, seed: u64) -> Vec<Nanopub> {
    corpus::gen_corpus(n, seed)
}

/// Polls `GET /` until the server holds `expected` nanopublications.
pub fn await_count(url: &str, expected: u64, timeout: Duration) {
    let client = ServerClient::with_timeout(url.to_owned(), Duration::from_secs(5));
    let deadline = Instant::now() + timeout;
    loop {
        let count = client.info().map(|i| i.nanopub_count).unwrap_or(0);
        if count == expected {
            return;
        }
        assert!(
            Instant::now() < deadline,
            "{url} stuck at {count} of {expected} after {timeout:?}"
        );
        std::thread::sleep(Duration::from_millis(100));
    }
}
