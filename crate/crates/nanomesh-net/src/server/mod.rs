//! HTTP facade over the store.
//!
//! Routes: `GET /` (info), `GET /np/{code}`, `GET /journal/{page}`,
//! `GET /package/{page}`, `GET /peers`, `POST /np`, `POST /peers`.
//! Journal pages are 1-indexed; page bodies list full artifact URLs.

mod peers;

pub use peers::{AddOutcome, PeerSet};

use std::net::SocketAddr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;

use axum::extract::{DefaultBodyLimit, Path, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;

use nanomesh::config::ServerConfig;
use nanomesh::rdf::{self, Format};
use nanomesh::store::{PutOutcome, Store, StoreError, StoreOptions};
use nanomesh::trusty::{self, ArtifactCode};
use nanomesh::vocab::PROTOCOL_VERSION;

use crate::client::ServerInfo;
use crate::replicator::Replicator;

/// Request body cap for POST /np: nanopublications are small by contract.
pub const MAX_POST_BYTES: usize = 1024 * 1024;

const TEXT_PLAIN: &str = "text/plain; charset=utf-8";

pub struct ServerState {
    pub store: Store,
    pub peers: PeerSet,
    pub public_url: String,
    pub accepts_posts: bool,
}

impl ServerState {
    pub fn render_info(&self) -> String {
        let info = self.store.info();
        ServerInfo {
            protocol_version: PROTOCOL_VERSION.to_owned(),
            journal_id: info.journal_id,
            nanopub_count: info.count,
            page_size: info.page_size,
            accepts_posts: self.accepts_posts,
            public_url: self.public_url.clone(),
        }
        .render()
    }
}

pub fn router(state: Arc<ServerState>) -> Router {
    Router::new()
        .route("/", get(get_info))
        .route("/np", post(post_nanopub))
        .route("/np/{code}", get(get_nanopub))
        .route("/journal/{page}", get(get_journal_page))
        .route("/package/{page}", get(get_package))
        .route("/peers", get(get_peers).post(post_peer))
        .layer(DefaultBodyLimit::max(MAX_POST_BYTES))
        .with_state(state)
}

async fn get_info(State(state): State<Arc<ServerState>>) -> impl IntoResponse {
    ([(header::CONTENT_TYPE, TEXT_PLAIN)], state.render_info())
}

/// Picks the response format from an Accept header, first supported
/// media range wins. `None` means nothing offered is supported.
fn negotiate(accept: Option<&str>) -> Option<Format> {
    let Some(accept) = accept else {
        return Some(Format::LineQuads);
    };
    for part in accept.split(',') {
        let media = part.split(';').next().unwrap_or("").trim();
        match media {
            "application/trig" => return Some(Format::Grouped),
            "" | "*/*" | "text/*" | "text/plain" | "application/n-quads" => {
                return Some(Format::LineQuads)
            }
            _ => {}
        }
    }
    None
}

async fn get_nanopub(
    State(state): State<Arc<ServerState>>,
    Path(code): Path<String>,
    headers: HeaderMap,
) -> Response {
    let Ok(code) = ArtifactCode::parse(&code) else {
        return plain(StatusCode::BAD_REQUEST, "malformed artifact code\n");
    };
    let accept = headers
        .get(header::ACCEPT)
        .and_then(|v| v.to_str().ok());
    let Some(format) = negotiate(accept) else {
        return plain(StatusCode::NOT_ACCEPTABLE, "supported: text/plain, application/trig\n");
    };
    let bytes = match state.store.get(&code) {
        Ok(Some(bytes)) => bytes,
        Ok(None) => return plain(StatusCode::NOT_FOUND, "unknown nanopublication\n"),
        Err(e) => return internal(e),
    };
    match format {
        Format::LineQuads => (
            StatusCode::OK,
            [(header::CONTENT_TYPE, Format::LineQuads.media_type())],
            bytes,
        )
            .into_response(),
        Format::Grouped => {
            let text = String::from_utf8(bytes).expect("stored bytes are UTF-8");
            let quads = rdf::line::parse(&text).expect("stored bytes parse");
            (
                StatusCode::OK,
                [(header::CONTENT_TYPE, Format::Grouped.media_type())],
                rdf::serialize(Format::Grouped, &quads),
            )
                .into_response()
        }
    }
}

async fn get_journal_page(
    State(state): State<Arc<ServerState>>,
    Path(page): Path<u64>,
) -> Response {
    match state.store.journal_page(page) {
        None => plain(StatusCode::NOT_FOUND, "page out of range\n"),
        Some(codes) => {
            let mut body = String::with_capacity(codes.len() * 64);
            for code in &codes {
                body.push_str(&state.public_url);
                body.push_str(code.as_str());
                body.push('\n');
            }
            (StatusCode::OK, [(header::CONTENT_TYPE, TEXT_PLAIN)], body).into_response()
        }
    }
}

async fn get_package(State(state): State<Arc<ServerState>>, Path(page): Path<u64>) -> Response {
    match state.store.package(page) {
        Ok(None) => plain(StatusCode::NOT_FOUND, "no package for this page\n"),
        Ok(Some(bytes)) => (
            StatusCode::OK,
            [
                (header::CONTENT_TYPE, TEXT_PLAIN),
                (header::CONTENT_ENCODING, "gzip"),
            ],
            bytes,
        )
            .into_response(),
        Err(e) => internal(e),
    }
}

async fn get_peers(State(state): State<Arc<ServerState>>) -> impl IntoResponse {
    let mut body = String::new();
    for url in state.peers.list() {
        body.push_str(&url);
        body.push('\n');
    }
    ([(header::CONTENT_TYPE, TEXT_PLAIN)], body)
}

async fn post_nanopub(
    State(state): State<Arc<ServerState>>,
    headers: HeaderMap,
    body: String,
) -> Response {
    if !state.accepts_posts {
        return plain(StatusCode::METHOD_NOT_ALLOWED, "posting is disabled\n");
    }
    let format = match headers
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
    {
        Some(ct) if ct.contains("trig") => Format::Grouped,
        _ => Format::LineQuads,
    };
    let quads = match rdf::parse(format, &body) {
        Ok(quads) => quads,
        Err(e) => return plain(StatusCode::BAD_REQUEST, format!("{e}\n")),
    };
    let mut nanopubs = match rdf::split_document(quads) {
        Ok(nps) => nps,
        Err(e) => return plain(StatusCode::BAD_REQUEST, format!("{e}\n")),
    };
    if nanopubs.len() != 1 {
        return plain(
            StatusCode::BAD_REQUEST,
            format!("expected 1 nanopublication, found {}\n", nanopubs.len()),
        );
    }
    let np = nanopubs.remove(0);
    match trusty::verify(&np) {
        Ok(true) => {}
        Ok(false) => return plain(StatusCode::BAD_REQUEST, "verification failed\n"),
        Err(e) => return plain(StatusCode::BAD_REQUEST, format!("{e}\n")),
    }
    match state.store.put(&np) {
        Ok(PutOutcome::Added(_)) => {
            let code = trusty::extract_code(np.uri().as_str()).expect("verified URI has a code");
            let location = format!("{}{}", state.public_url, code.as_str());
            (
                StatusCode::CREATED,
                [
                    (header::CONTENT_TYPE, TEXT_PLAIN.to_owned()),
                    (header::LOCATION, location.clone()),
                ],
                format!("{location}\n"),
            )
                .into_response()
        }
        Ok(PutOutcome::AlreadyPresent) => plain(StatusCode::OK, "already present\n"),
        Err(e @ (StoreError::VerificationFailed(_) | StoreError::Trusty(_))) => {
            plain(StatusCode::BAD_REQUEST, format!("{e}\n"))
        }
        Err(e) => internal(e),
    }
}

async fn post_peer(State(state): State<Arc<ServerState>>, body: String) -> Response {
    if !state.accepts_posts {
        return plain(StatusCode::METHOD_NOT_ALLOWED, "posting is disabled\n");
    }
    match state.peers.add(body.trim()) {
        Ok(AddOutcome::Added) => plain(StatusCode::ACCEPTED, "peer added\n"),
        Ok(AddOutcome::Duplicate) => plain(StatusCode::OK, "already known\n"),
        Ok(AddOutcome::SelfUrl) => plain(StatusCode::OK, "that is this server\n"),
        Err(detail) => plain(StatusCode::BAD_REQUEST, format!("{detail}\n")),
    }
}

fn plain(status: StatusCode, body: impl Into<String>) -> Response {
    (status, [(header::CONTENT_TYPE, TEXT_PLAIN)], body.into()).into_response()
}

fn internal(e: StoreError) -> Response {
    plain(StatusCode::INTERNAL_SERVER_ERROR, format!("{e}\n"))
}

/// A server embedded in this process: HTTP listener plus replication loop.
/// Stops (non-gracefully for in-flight requests) on drop.
pub struct RunningServer {
    pub addr: SocketAddr,
    pub public_url: String,
    pub state: Arc<ServerState>,
    shutdown_http: Option<tokio::sync::oneshot::Sender<()>>,
    shutdown_flag: Arc<AtomicBool>,
    threads: Vec<JoinHandle<()>>,
}

impl RunningServer {
    /// Binds, opens the store, and spawns the HTTP and replication threads.
    /// A `:0` listen port is resolved by the bind; when `public_url` also
    /// names port 0 it is rewritten to the bound address.
    pub fn start(config: ServerConfig) -> anyhow::Result<RunningServer> {
        let listener = bind_reusable(&config.listen_address)?;
        listener.set_nonblocking(true)?;
        let addr = listener.local_addr()?;
        let public_url = if config.public_url.ends_with(":0/") {
            format!("http://{addr}/")
        } else {
            config.public_url.clone()
        };

        let store = Store::open(
            &config.data_dir,
            StoreOptions {
                page_size: config.page_size,
                cache_packages: true,
            },
        )?;
        let peers = PeerSet::open(public_url.clone(), Some(&config.data_dir), &config.peer_seeds)?;
        let state = Arc::new(ServerState {
            store,
            peers,
            public_url: public_url.clone(),
            accepts_posts: config.accepts_posts,
        });

        let (shutdown_http, http_rx) = tokio::sync::oneshot::channel::<()>();
        let app = router(state.clone());
        let http_thread = std::thread::Builder::new()
            .name("http".to_owned())
            .spawn(move || {
                let runtime = tokio::runtime::Builder::new_multi_thread()
                    .worker_threads(4)
                    .enable_all()
                    .build()
                    .expect("runtime construction");
                runtime.block_on(async move {
                    let listener = tokio::net::TcpListener::from_std(listener)
                        .expect("listener registration");
                    axum::serve(listener, app)
                        .with_graceful_shutdown(async {
                            let _ = http_rx.await;
                        })
                        .await
                        .expect("server loop");
                });
            })?;

        let shutdown_flag = Arc::new(AtomicBool::new(false));
        let replicator = Replicator::new(state.clone());
        let interval = config.loop_interval;
        let flag = shutdown_flag.clone();
        let replicator_thread = std::thread::Builder::new()
            .name("replicator".to_owned())
            .spawn(move || replicator.run_loop(interval, &flag))?;

        Ok(RunningServer {
            addr,
            public_url,
            state,
            shutdown_http: Some(shutdown_http),
            shutdown_flag,
            threads: vec![http_thread, replicator_thread],
        })
    }

    pub fn stop(mut self) {
        self.shutdown();
    }

    /// Blocks until the server shuts down (normally never; for binaries).
    pub fn wait(mut self) {
        let threads = std::mem::take(&mut self.threads);
        for thread in threads {
            let _ = thread.join();
        }
    }

    fn shutdown(&mut self) {
        self.shutdown_flag.store(true, Ordering::Relaxed);
        if let Some(tx) = self.shutdown_http.take() {
            let _ = tx.send(());
        }
        for thread in self.threads.drain(..) {
            let _ = thread.join();
        }
    }
}

impl Drop for RunningServer {
    fn drop(&mut self) {
        self.shutdown();
    }
}

/// Binds with SO_REUSEADDR so a restart can reclaim its port while old
/// connections linger in TIME_WAIT.
fn bind_reusable(listen_address: &str) -> anyhow::Result<std::net::TcpListener> {
    use std::net::ToSocketAddrs;
    let addr = listen_address
        .to_socket_addrs()?
        .next()
        .ok_or_else(|| anyhow::anyhow!("{listen_address:?} resolves to no address"))?;
    let domain = if addr.is_ipv6() {
        socket2::Domain::IPV6
    } else {
        socket2::Domain::IPV4
    };
    let socket = socket2::Socket::new(domain, socket2::Type::STREAM, Some(socket2::Protocol::TCP))?;
    socket.set_reuse_address(true)?;
    socket.bind(&addr.into())?;
    socket.listen(1024)?;
    Ok(socket.into())
}
