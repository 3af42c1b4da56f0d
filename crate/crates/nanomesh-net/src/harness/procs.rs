//! Helpers for running server processes: port picking, config files,
//! spawn-with-cleanup, readiness polling.

use std::fs::File;
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};
use std::time::{Duration, Instant};

use anyhow::{bail, Context};

use crate::client::ServerClient;

/// Reserves `n` distinct localhost ports by binding and releasing them.
/// A later bind can race another process; desk-scale runs accept that.
pub fn pick_free_ports(n: usize) -> std::io::Result<Vec<u16>> {
    let mut listeners = Vec::with_capacity(n);
    for _ in 0..n {
        listeners.push(TcpListener::bind("127.0.0.1:0")?);
    }
    listeners
        .iter()
        .map(|l| l.local_addr().map(|a| a.port()))
        .collect()
}

/// Writes a server config file; peer seeds are all other servers.
pub fn write_server_config(
    path: &Path,
    port: u16,
    data_dir: &Path,
    page_size: u64,
    loop_interval_secs: f64,
    peer_ports: &[u16],
) -> std::io::Result<()> {
    let mut text = String::new();
    text.push_str(&format!("listen-address: 127.0.0.1:{port}\n"));
    text.push_str(&format!("public-url: http://127.0.0.1:{port}/\n"));
    text.push_str(&format!("data-dir: {}\n", data_dir.display()));
    text.push_str(&format!("page-size: {page_size}\n"));
    text.push_str(&format!("loop-interval: {loop_interval_secs}\n"));
    for peer in peer_ports {
        if *peer != port {
            text.push_str(&format!("peer-seed: http://127.0.0.1:{peer}/\n"));
        }
    }
    std::fs::write(path, text)
}

/// A child process killed (hard) when the guard drops.
pub struct ChildGuard {
    pub name: String,
    child: Option<Child>,
}

impl ChildGuard {
    pub fn new(name: impl Into<String>, child: Child) -> ChildGuard {
        ChildGuard {
            name: name.into(),
            child: Some(child),
        }
    }

    pub fn id(&self) -> Option<u32> {
        self.child.as_ref().map(Child::id)
    }

    /// SIGKILL and reap. Safe to call repeatedly.
    pub fn kill(&mut self) {
        if let Some(mut child) = self.child.take() {
            let _ = child.kill();
            let _ = child.wait();
        }
    }

    pub fn is_running(&mut self) -> bool {
        match self.child.as_mut() {
            None => false,
            Some(child) => matches!(child.try_wait(), Ok(None)),
        }
    }
}

impl Drop for ChildGuard {
    fn drop(&mut self) {
        self.kill();
    }
}

/// Spawns `server_bin --config <config> [--load <file>...]` with output
/// redirected to `log_path`.
pub fn spawn_server(
    server_bin: &Path,
    config: &Path,
    load: &[PathBuf],
    log_path: &Path,
) -> anyhow::Result<ChildGuard> {
    let log = File::create(log_path)
        .with_context(|| format!("creating {}", log_path.display()))?;
    let err_log = log.try_clone()?;
    let mut command = Command::new(server_bin);
    command.arg("--config").arg(config);
    for file in load {
        command.arg("--load").arg(file);
    }
    command.stdin(Stdio::null()).stdout(log).stderr(err_log);
    let child = command
        .spawn()
        .with_context(|| format!("spawning {}", server_bin.display()))?;
    Ok(ChildGuard::new(
        config.display().to_string(),
        child,
    ))
}

/// Polls `GET /` until the server answers or the deadline passes.
pub fn wait_ready(url: &str, timeout: Duration) -> anyhow::Result<()> {
    let client = ServerClient::with_timeout(url.to_owned(), Duration::from_secs(2));
    let deadline = Instant::now() + timeout;
    loop {
        if client.info().is_ok() {
            return Ok(());
        }
        if Instant::now() >= deadline {
            bail!("server {url} not ready within {timeout:?}");
        }
        std::thread::sleep(Duration::from_millis(50));
    }
}
