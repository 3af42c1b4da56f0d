//! End-to-end acceptance suite: ten checks covering identifier integrity,
//! index scaling, replication, load behaviour, monitoring, the command-line
//! tool, tamper resistance, and crash recovery. Every check prints a single
//! `ACCEPTANCE <id> ...: PASS` line with its measurements; thresholds are the
//! named constants below. The checks spawn real server processes and share
//! the machine, so run them serially with output visible:
//!
//! ```text
//! cargo test -p nanomesh-net --test acceptance -- --test-threads=1 --nocapture
//! ```
//!
//! (They also pass under plain `cargo test`: a process-wide gate keeps the
//! bodies from overlapping.)

mod common;

use std::collections::{HashMap, HashSet};
use std::path::{Path, PathBuf};
use std::sync::atomic::AtomicBool;
use std::sync::{Mutex, OnceLock};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nanomesh::index::{self, IndexBuilder};
use nanomesh::rdf::{self, Format, Iri, Literal, Nanopub};
use nanomesh::store::{Store, StoreOptions};
use nanomesh::trusty::{self, ArtifactCode};
use nanomesh::vocab::{DCT_CREATOR, PROV_WAS_ATTRIBUTED_TO};
use nanomesh_net::client::ServerClient;
use nanomesh_net::harness::corpus;
use nanomesh_net::harness::procs;
use nanomesh_net::monitor;
use nanomesh_net::server::RunningServer;
use nanomesh_net::harness::{
    run_load_experiment, run_replication_experiment, LoadPlan, ReplicatePlan, ReplicationMetrics,
};

// Pinned thresholds. Time limits are wall-clock for the whole check body.
const C1_TIME_LIMIT_SECS: f64 = 60.0;
const C1_DOCUMENTS: u64 = 1000;
const C1_PERMUTED_DOCUMENTS: usize = 50;
const C1_PERMUTATIONS_EACH: usize = 100;
const C2_TIME_LIMIT_SECS: f64 = 120.0;
const C2_MEMBERS: u64 = 100_000;
const C2_EXPECTED_NODES: usize = 100;
const REPLICATION_TIME_LIMIT: Duration = Duration::from_secs(300);
const REPLICATION_TOTAL: u64 = 10_000;
const SPOT_CHECKS_PER_SERVER: usize = 100;
const C5_MIN_NANOPUBS_PER_SECOND: f64 = 100.0;
const C6_CLIENTS: usize = 50;
const C6_RAMP: Duration = Duration::from_secs(120);
const C6_FETCH_PROBABILITY: f64 = 0.1;
const C6_REQUEST_TIMEOUT: Duration = Duration::from_secs(60);
const C6_MAX_MEDIAN_MS_AT_FULL_LOAD: f64 = 50.0;
const C6_MIN_REQUESTS_PER_SECOND: f64 = 377.0;
const C7_ROUNDS: u64 = 10;
const C7_INTERVAL: Duration = Duration::from_secs(1);
const C9_TAMPERED_EVERY: usize = 10;
const C10_CRASH_CYCLES: usize = 20;

/// Serializes check bodies so measurements never overlap, whatever thread
/// count the harness picked.
static GATE: Mutex<()> = Mutex::new(());

fn criterion(id: &str, what: &str, body: impl FnOnce() -> Result<String, String>) {
    // Writing to the stdout handle directly (not println!) keeps these
    // verdict lines visible even when the harness captures test output.
    fn emit(line: String) {
        use std::io::Write;
        let mut out = std::io::stdout().lock();
        let _ = writeln!(out, "{line}");
        let _ = out.flush();
    }
    let _gate = GATE.lock().unwrap_or_else(|e| e.into_inner());
    let started = Instant::now();
    match body() {
        Ok(detail) => emit(format!(
            "ACCEPTANCE {id} {what}: PASS ({detail}; {:.1}s)",
            started.elapsed().as_secs_f64()
        )),
        Err(reason) => {
            emit(format!("ACCEPTANCE {id} {what}: FAIL ({reason})"));
            panic!("{id} {what}: {reason}");
        }
    }
}

macro_rules! require {
    ($cond:expr, $($arg:tt)+) => {
        if !$cond {
            return Err(format!($($arg)+));
        }
    };
}

fn scratch(label: &str) -> tempfile::TempDir {
    tempfile::Builder::new()
        .prefix(label)
        .tempdir()
        .expect("scratch directory")
}

fn server_bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_np-server"))
}

/// A small publication without an artifact code, ASCII-only content.
fn raw_nanopub(i: u64, rng: &mut ChaCha8Rng) -> Nanopub {
    let base = format!("http://acceptance.test/raw/{i}/");
    let uri = Iri::new(base.clone()).unwrap();
    let agent = Iri::new(format!(
        "http://acceptance.test/agent/{}",
        rng.random_range(0..20u32)
    ))
    .unwrap();
    let mut builder = Nanopub::builder(uri.clone());
    let assertion_graph = builder.assertion_graph().clone();
    for f in 0..rng.random_range(1..=4u32) {
        builder = builder.assert(
            Iri::new(format!("{base}subject/{f}")).unwrap(),
            Iri::new("http://acceptance.test/voc/states").unwrap(),
            Literal::string(format!("observation {i}/{f}: {}", rng.random_range(0..u64::MAX)))
                .unwrap(),
        );
    }
    builder
        .provenance(
            assertion_graph,
            Iri::new(PROV_WAS_ATTRIBUTED_TO).unwrap(),
            agent.clone(),
        )
        .pubinfo(uri, Iri::new(DCT_CREATOR).unwrap(), agent)
        .build()
        .unwrap()
}

/// Flips one non-whitespace byte to a different printable character.
/// Whitespace is left alone: the line reader tolerates extra inline spacing,
/// so only content-bearing bytes make a meaningful corruption.
fn mutate_one_byte(text: &str, rng: &mut ChaCha8Rng) -> String {
    let mut bytes = text.as_bytes().to_vec();
    loop {
        let i = rng.random_range(0..bytes.len());
        let b = bytes[i];
        if b == b' ' || b == b'\n' || b == b'\t' {
            continue;
        }
        let replacement = loop {
            let c = rng.random_range(33u8..=126u8);
            if c != b {
                break c;
            }
        };
        bytes[i] = replacement;
        return String::from_utf8(bytes).expect("fixtures are ASCII");
    }
}

/// A corruption counts as detected when the document no longer parses, no
/// longer forms exactly one publication, or fails code verification.
fn corruption_detected(mutated: &str) -> bool {
    let quads = match rdf::parse(Format::LineQuads, mutated) {
        Ok(quads) => quads,
        Err(_) => return true,
    };
    match rdf::split_document(quads) {
        Ok(nanopubs) => nanopubs.len() != 1 || !matches!(trusty::verify(&nanopubs[0]), Ok(true)),
        Err(_) => true,
    }
}

#[test]
fn c01_content_codes_detect_any_mutation() {
    criterion("C1", "artifact codes bind content", || {
        let started = Instant::now();
        let mut rng = ChaCha8Rng::seed_from_u64(0xACC1);

        let mut minted = Vec::with_capacity(C1_DOCUMENTS as usize);
        for i in 0..C1_DOCUMENTS {
            let raw = raw_nanopub(i, &mut rng);
            let np = trusty::make_trusty(&raw).map_err(|e| format!("minting {i}: {e}"))?;
            require!(
                matches!(trusty::verify(&np), Ok(true)),
                "freshly minted publication {i} does not verify"
            );
            minted.push(np);
        }

        for (i, np) in minted.iter().enumerate() {
            let mutated = mutate_one_byte(&np.to_line_quads(), &mut rng);
            require!(
                corruption_detected(&mutated),
                "single-byte mutation of publication {i} went undetected"
            );
        }

        for np in minted.iter().take(C1_PERMUTED_DOCUMENTS) {
            let code = trusty::extract_code(np.uri().as_str())
                .ok_or("minted publication lacks an artifact code")?;
            for _ in 0..C1_PERMUTATIONS_EACH {
                let mut quads = np.quads().to_vec();
                quads.shuffle(&mut rng);
                let reassembled = rdf::split_document(quads)
                    .map_err(|e| format!("permuted statements no longer split: {e}"))?;
                require!(
                    reassembled.len() == 1,
                    "permuted statements split into {} documents",
                    reassembled.len()
                );
                require!(
                    matches!(trusty::verify(&reassembled[0]), Ok(true)),
                    "statement order changed the verification result"
                );
                let recovered = trusty::extract_code(reassembled[0].uri().as_str());
                require!(
                    recovered.as_ref() == Some(&code),
                    "statement order changed the artifact code"
                );
            }
        }

        let elapsed = started.elapsed().as_secs_f64();
        require!(
            elapsed < C1_TIME_LIMIT_SECS,
            "took {elapsed:.1}s, limit {C1_TIME_LIMIT_SECS}s"
        );
        Ok(format!(
            "{C1_DOCUMENTS} minted and verified, {C1_DOCUMENTS} mutations detected, \
             {C1_PERMUTED_DOCUMENTS}x{C1_PERMUTATIONS_EACH} permutations stable"
        ))
    });
}

fn synthetic_member(i: u64) -> Iri {
    Iri::new(format!("http://synthetic.test/pub/RA{i:043}")).expect("synthetic member URI")
}

#[test]
fn c02_index_chains_cover_and_resolve_in_order() {
    criterion("C2", "index chains scale and resolve", || {
        let started = Instant::now();

        let members: Vec<Iri> = (0..C2_MEMBERS).map(synthetic_member).collect();
        let chain = index::build_index_chain(&members, Some("hundred-thousand member set"))
            .map_err(|e| format!("chain construction: {e}"))?;
        require!(
            chain.len() == C2_EXPECTED_NODES,
            "chain has {} nodes, expected {C2_EXPECTED_NODES}",
            chain.len()
        );

        let by_uri: HashMap<String, Nanopub> = chain
            .iter()
            .map(|np| (np.uri().as_str().to_owned(), np.clone()))
            .collect();
        let root = chain.last().expect("nonempty chain").uri().clone();
        let resolved = index::resolve_index(&root, |iri| {
            by_uri
                .get(iri.as_str())
                .cloned()
                .ok_or_else(|| "node not in fixture".into())
        })
        .map_err(|e| format!("resolution: {e}"))?;
        require!(
            resolved.members.len() as u64 == C2_MEMBERS,
            "resolution returned {} members of {C2_MEMBERS}",
            resolved.members.len()
        );
        require!(
            resolved.members == members,
            "resolution returned members out of order"
        );
        require!(
            resolved.visited.len() == C2_EXPECTED_NODES,
            "resolution visited {} nodes",
            resolved.visited.len()
        );

        // Nested shape: one sub-index shared by two indexes, one of which
        // also pulls a node that grew twice by appending.
        let m = |k: u64| synthetic_member(200_000 + k);
        let fail = |step: &'static str| move |e: index::IndexError| format!("{step}: {e}");
        let shared = IndexBuilder::new()
            .title("shared sub-index")
            .element(m(1))
            .element(m(2))
            .element(m(3))
            .build()
            .map_err(fail("shared"))?;
        let top_a = IndexBuilder::new()
            .title("direct members plus sub-index")
            .element(m(10))
            .element(m(11))
            .sub_index(shared.uri().clone())
            .build()
            .map_err(fail("top a"))?;
        let oldest = IndexBuilder::new()
            .incomplete(true)
            .element(m(20))
            .element(m(21))
            .element(m(22))
            .build()
            .map_err(fail("oldest"))?;
        let middle = IndexBuilder::new()
            .incomplete(true)
            .appends_to(oldest.uri().clone())
            .element(m(23))
            .element(m(24))
            .element(m(25))
            .build()
            .map_err(fail("middle"))?;
        let appended = IndexBuilder::new()
            .title("appended twice")
            .appends_to(middle.uri().clone())
            .element(m(26))
            .element(m(27))
            .build()
            .map_err(fail("appended"))?;
        let top_b = IndexBuilder::new()
            .title("two sub-indexes")
            .sub_index(shared.uri().clone())
            .sub_index(appended.uri().clone())
            .build()
            .map_err(fail("top b"))?;

        let nodes: HashMap<String, Nanopub> = [&shared, &top_a, &oldest, &middle, &appended, &top_b]
            .into_iter()
            .map(|np| (np.uri().as_str().to_owned(), np.clone()))
            .collect();
        let resolve = |root: &Iri| {
            index::resolve_index(root, |iri| {
                nodes
                    .get(iri.as_str())
                    .cloned()
                    .ok_or_else(|| "node not in fixture".into())
            })
        };

        let set_a = resolve(top_a.uri()).map_err(|e| format!("resolving top a: {e}"))?;
        let want_a = vec![m(10), m(11), m(1), m(2), m(3)];
        require!(
            set_a.members == want_a,
            "first index resolved to {} members, expected 5 in document order",
            set_a.members.len()
        );

        let set_b = resolve(top_b.uri()).map_err(|e| format!("resolving top b: {e}"))?;
        let want_b = vec![
            m(1),
            m(2),
            m(3),
            m(20),
            m(21),
            m(22),
            m(23),
            m(24),
            m(25),
            m(26),
            m(27),
        ];
        require!(
            set_b.members == want_b,
            "second index resolved to {} members, expected 11 with the append \
             chain oldest-first",
            set_b.members.len()
        );

        let elapsed = started.elapsed().as_secs_f64();
        require!(
            elapsed < C2_TIME_LIMIT_SECS,
            "took {elapsed:.1}s, limit {C2_TIME_LIMIT_SECS}s"
        );
        Ok(format!(
            "{C2_MEMBERS} members over {C2_EXPECTED_NODES} nodes resolved in order; \
             nested indexes yielded 5 and 11 members"
        ))
    });
}

fn replication_plan(assignments: Vec<u64>, seed: u64, out_dir: PathBuf) -> ReplicatePlan {
    ReplicatePlan {
        server_bin: server_bin(),
        assignments,
        seed,
        page_size: 1000,
        loop_interval_secs: 1.0,
        out_dir,
        timeout: REPLICATION_TIME_LIMIT,
        spot_checks: SPOT_CHECKS_PER_SERVER,
    }
}

fn check_replication(metrics: &ReplicationMetrics) -> Result<(), String> {
    require!(
        metrics.per_server_final == vec![REPLICATION_TOTAL; 3],
        "final counts {:?}, expected {REPLICATION_TOTAL} everywhere",
        metrics.per_server_final
    );
    require!(
        metrics.spot_check_failures == 0,
        "{} spot checks failed",
        metrics.spot_check_failures
    );
    require!(
        metrics.convergence_seconds <= REPLICATION_TIME_LIMIT.as_secs_f64(),
        "converged in {:.1}s, limit {:?}",
        metrics.convergence_seconds,
        REPLICATION_TIME_LIMIT
    );
    Ok(())
}

#[test]
fn c03_single_loader_replicates_to_all() {
    criterion("C3", "bulk load reaches every server", || {
        let dir = scratch("acceptance-c3");
        let metrics = run_replication_experiment(&replication_plan(
            vec![REPLICATION_TOTAL, 0, 0],
            0xC3,
            dir.path().join("out"),
        ))
        .map_err(|e| format!("experiment: {e}"))?;
        check_replication(&metrics)?;
        Ok(format!(
            "{REPLICATION_TOTAL} publications loaded at one of 3 servers reached all \
             in {:.1}s; {SPOT_CHECKS_PER_SERVER} spot checks per server clean",
            metrics.convergence_seconds
        ))
    });
}

/// The disjoint-load run backs both the convergence check and the
/// throughput floor, so it executes once for whichever check comes first.
static DISJOINT_RUN: OnceLock<Result<ReplicationMetrics, String>> = OnceLock::new();

fn disjoint_run() -> &'static Result<ReplicationMetrics, String> {
    DISJOINT_RUN.get_or_init(|| {
        let dir = scratch("acceptance-c4");
        run_replication_experiment(&replication_plan(
            vec![4000, 3000, 3000],
            0xC4C5,
            dir.path().join("out"),
        ))
        .map_err(|e| format!("experiment: {e}"))
    })
}

#[test]
fn c04_disjoint_loads_converge_to_union() {
    criterion("C4", "disjoint loads converge to the union", || {
        let metrics = disjoint_run().as_ref().map_err(Clone::clone)?;
        check_replication(metrics)?;
        Ok(format!(
            "4000/3000/3000 split converged to {REPLICATION_TOTAL} everywhere in {:.1}s",
            metrics.convergence_seconds
        ))
    });
}

#[test]
fn c05_throughput_floor() {
    criterion("C5", "end-to-end throughput floor", || {
        let metrics = disjoint_run().as_ref().map_err(Clone::clone)?;
        require!(
            metrics.nanopubs_per_second >= C5_MIN_NANOPUBS_PER_SECOND,
            "{:.1} nanopubs/s, floor {C5_MIN_NANOPUBS_PER_SECOND}",
            metrics.nanopubs_per_second
        );
        Ok(format!(
            "{:.0} nanopubs/s end-to-end (floor {C5_MIN_NANOPUBS_PER_SECOND:.0}), \
             {:.0} copies/s",
            metrics.nanopubs_per_second, metrics.copy_rate_per_second
        ))
    });
}

#[test]
fn c06_load_ramp_stays_fast_and_clean() {
    criterion("C6", "client ramp meets the latency budget", || {
        let dir = scratch("acceptance-c6");
        let server = RunningServer::start(common::server_config(
            &dir.path().join("data"),
            1000,
            false,
            Vec::new(),
            Duration::from_secs(3600),
        ))
        .map_err(|e| format!("server: {e}"))?;
        for np in corpus::gen_corpus(REPLICATION_TOTAL, 0xC6) {
            server
                .state
                .store
                .put(&np)
                .map_err(|e| format!("preload: {e}"))?;
        }

        let metrics = run_load_experiment(&LoadPlan {
            target: server.public_url.clone(),
            max_clients: C6_CLIENTS,
            ramp: C6_RAMP,
            fetch_probability: C6_FETCH_PROBABILITY,
            request_timeout: C6_REQUEST_TIMEOUT,
            out_dir: dir.path().join("load"),
        })
        .map_err(|e| format!("experiment: {e}"))?;
        server.stop();

        require!(
            metrics.error_count == 0,
            "{} of {} requests failed or timed out",
            metrics.error_count,
            metrics.request_count
        );
        let full_load = metrics
            .buckets
            .iter()
            .find(|b| b.clients == C6_CLIENTS)
            .ok_or("no samples at full concurrency")?;
        require!(
            full_load.p50_ms < C6_MAX_MEDIAN_MS_AT_FULL_LOAD,
            "median at {C6_CLIENTS} clients is {:.2}ms, budget {C6_MAX_MEDIAN_MS_AT_FULL_LOAD}ms",
            full_load.p50_ms
        );
        require!(
            metrics.requests_per_second > C6_MIN_REQUESTS_PER_SECOND,
            "{:.0} requests/s aggregate, floor {C6_MIN_REQUESTS_PER_SECOND}",
            metrics.requests_per_second
        );
        Ok(format!(
            "{} requests, 0 errors, median {:.1}ms at {C6_CLIENTS} clients, {:.0} req/s",
            metrics.request_count, full_load.p50_ms, metrics.requests_per_second
        ))
    });
}

/// Rewrites one stored entry so its content no longer matches its code.
fn poison_entry(data_dir: &Path, code: &ArtifactCode) {
    let shard = &code.as_str()[2..4];
    let path = data_dir.join("np").join(shard).join(code.as_str());
    let text = std::fs::read_to_string(&path).expect("stored content");
    let poisoned = text.replace("/agent/", "/tnega/");
    assert_ne!(text, poisoned, "fixture content must name an agent");
    std::fs::write(&path, poisoned).expect("rewrite content");
}

#[test]
fn c07_monitor_flags_health_and_tampering() {
    criterion("C7", "monitoring reports health and tampering", || {
        let dir = scratch("acceptance-c7");
        let corpus = corpus::gen_corpus(300, 0xC7);
        let mut servers = Vec::new();
        let mut urls: Vec<String> = Vec::new();
        for i in 0..3 {
            let server = RunningServer::start(common::server_config(
                &dir.path().join(format!("data-{i}")),
                100,
                true,
                urls.clone(),
                Duration::from_millis(500),
            ))
            .map_err(|e| format!("server {i}: {e}"))?;
            for np in &corpus {
                server
                    .state
                    .store
                    .put(np)
                    .map_err(|e| format!("preload {i}: {e}"))?;
            }
            urls.push(server.public_url.clone());
            servers.push(server);
        }

        let mut sink = Vec::new();
        monitor::monitor_loop(&urls, C7_INTERVAL, C7_ROUNDS, &mut sink, &AtomicBool::new(false))
            .map_err(|e| format!("monitor loop: {e}"))?;
        let rows = monitor::read_csv(sink.as_slice())?;
        require!(
            rows.len() as u64 == C7_ROUNDS * 3,
            "expected {} probe rows, got {}",
            C7_ROUNDS * 3,
            rows.len()
        );
        let summaries = monitor::summarize(&rows)?;
        require!(summaries.len() == 3, "expected 3 summaries");
        for summary in &summaries {
            require!(
                summary.probes == C7_ROUNDS,
                "{} probed {} times",
                summary.server,
                summary.probes
            );
            require!(
                summary.success_rate == 1.0,
                "{} success rate {:.4}",
                summary.server,
                summary.success_rate
            );
            require!(
                summary.verify_failures == 0,
                "{} saw {} verification failures on a healthy network",
                summary.server,
                summary.verify_failures
            );
        }

        // A server whose single stored entry was rewritten on disk must be
        // flagged on every probe.
        let bad_dir = dir.path().join("data-bad");
        let doctored = corpus::gen_corpus(1, 0x7A11).remove(0);
        {
            let store = Store::open(
                &bad_dir,
                StoreOptions {
                    page_size: 100,
                    cache_packages: false,
                },
            )
            .map_err(|e| format!("tampered store: {e}"))?;
            store.put(&doctored).map_err(|e| format!("tampered put: {e}"))?;
        }
        let code = trusty::extract_code(doctored.uri().as_str()).expect("corpus carries codes");
        poison_entry(&bad_dir, &code);
        let bad = RunningServer::start(common::server_config(
            &bad_dir,
            100,
            false,
            Vec::new(),
            Duration::from_secs(3600),
        ))
        .map_err(|e| format!("tampered server: {e}"))?;

        let mut bad_sink = Vec::new();
        monitor::monitor_loop(
            std::slice::from_ref(&bad.public_url),
            Duration::from_millis(100),
            2,
            &mut bad_sink,
            &AtomicBool::new(false),
        )
        .map_err(|e| format!("monitor loop over tampered server: {e}"))?;
        let bad_rows = monitor::read_csv(bad_sink.as_slice())?;
        require!(bad_rows.len() == 2, "expected 2 tamper probes");
        for row in &bad_rows {
            require!(
                row.verified == Some(false),
                "tampered content passed a probe: {row:?}"
            );
        }
        let bad_summary = monitor::summarize(&bad_rows)?;
        require!(
            bad_summary[0].verify_failures == 2,
            "tamper summary counted {} verification failures",
            bad_summary[0].verify_failures
        );

        bad.stop();
        for server in servers {
            server.stop();
        }
        Ok(format!(
            "{} healthy probes all verified (success rate 1.0); \
             tampered server flagged verified=false on every probe",
            C7_ROUNDS * 3
        ))
    });
}

fn np_cli(cwd: &Path, args: &[&str]) -> (i32, String, String) {
    let output = std::process::Command::new(env!("CARGO_BIN_EXE_np"))
        .args(args)
        .current_dir(cwd)
        .env_remove("NANOMESH_SERVERS")
        .output()
        .expect("np binary runs");
    (
        output.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&output.stdout).into_owned(),
        String::from_utf8_lossy(&output.stderr).into_owned(),
    )
}

#[test]
fn c08_cli_session_sees_network_grow() {
    criterion("C8", "command-line session across a growing network", || {
        let dir = scratch("acceptance-c8");
        let work = dir.path();
        let mut rng = ChaCha8Rng::seed_from_u64(0xC8);
        let raws: Vec<Nanopub> = (0..3).map(|i| raw_nanopub(900 + i, &mut rng)).collect();
        let quads: Vec<_> = raws.iter().flat_map(|np| np.quads().iter().cloned()).collect();
        std::fs::write(work.join("claims.trig"), rdf::serialize(Format::Grouped, &quads))
            .map_err(|e| format!("fixture: {e}"))?;

        let a = RunningServer::start(common::server_config(
            &work.join("data-a"),
            100,
            true,
            Vec::new(),
            Duration::from_millis(200),
        ))
        .map_err(|e| format!("first server: {e}"))?;
        let url_a = a.public_url.clone();

        let (status, out, err) = np_cli(work, &["mktrusty", "-v", "claims.trig"]);
        require!(status == 0, "mktrusty exited {status}: {err}");
        let uris: Vec<String> = out
            .lines()
            .filter_map(|l| l.strip_prefix("Nanopub URI: "))
            .map(str::to_owned)
            .collect();
        require!(uris.len() == 3, "mktrusty reported {} URIs: {out:?}", uris.len());

        let (status, out, err) =
            np_cli(work, &["publish", "trusty.claims.trig", "--server", &url_a]);
        require!(status == 0, "publish exited {status}: {err}");
        require!(
            out == format!("3 nanopubs published at {url_a}\n"),
            "publish transcript was {out:?}"
        );

        let code0 = trusty::extract_code(&uris[0]).ok_or("minted URI lacks a code")?;
        let (status, out, _) = np_cli(work, &["status", "-a", &uris[0], "--server", &url_a]);
        require!(status == 0, "status exited {status}");
        let want = format!("URL: {url_a}{}\nFound on 1 nanopub server.\n", code0.as_str());
        require!(out == want, "single-server status was {out:?}, expected {want:?}");

        let b = RunningServer::start(common::server_config(
            &work.join("data-b"),
            100,
            true,
            vec![url_a.clone()],
            Duration::from_millis(200),
        ))
        .map_err(|e| format!("second server: {e}"))?;
        let c = RunningServer::start(common::server_config(
            &work.join("data-c"),
            100,
            true,
            vec![url_a.clone()],
            Duration::from_millis(200),
        ))
        .map_err(|e| format!("third server: {e}"))?;
        poll_count(&b.public_url, 3, Duration::from_secs(60))?;
        poll_count(&c.public_url, 3, Duration::from_secs(60))?;

        // The pullers announce themselves to the first server; wait until its
        // peer list names both so one bootstrap server reveals the network.
        let deadline = Instant::now() + Duration::from_secs(30);
        let client_a = ServerClient::with_timeout(url_a.clone(), Duration::from_secs(5));
        loop {
            let peers = client_a.peers().unwrap_or_default();
            if peers.contains(&b.public_url) && peers.contains(&c.public_url) {
                break;
            }
            require!(
                Instant::now() < deadline,
                "first server never learned its peers: {peers:?}"
            );
            std::thread::sleep(Duration::from_millis(100));
        }

        let (status, out, _) = np_cli(work, &["status", "-a", &uris[0], "--server", &url_a]);
        require!(status == 0, "second status exited {status}");
        for url in [&url_a, &b.public_url, &c.public_url] {
            require!(
                out.contains(&format!("URL: {url}{}\n", code0.as_str())),
                "status lost {url}: {out:?}"
            );
        }
        require!(
            out.ends_with("Found on 3 nanopub servers.\n"),
            "status tail was {out:?}"
        );

        let (status, out, err) = np_cli(
            work,
            &["mkindex", "-t", "acceptance set", "-o", "set.trig", "trusty.claims.trig"],
        );
        require!(status == 0, "mkindex exited {status}: {err}");
        let index_uri = out
            .lines()
            .find_map(|l| l.strip_prefix("Index URI: "))
            .ok_or_else(|| format!("mkindex transcript was {out:?}"))?
            .to_owned();

        let (status, out, err) = np_cli(work, &["publish", "set.trig", "--server", &url_a]);
        require!(status == 0, "index publish exited {status}: {err}");
        require!(
            out == format!("1 nanopub published at {url_a}\n"),
            "index publish transcript was {out:?}"
        );
        poll_count(&b.public_url, 4, Duration::from_secs(60))?;

        let (status, _, err) = np_cli(
            work,
            &["get", "-c", &index_uri, "-o", "members.trig", "--server", &b.public_url],
        );
        require!(status == 0, "get -c exited {status}: {err}");
        let text = std::fs::read_to_string(work.join("members.trig"))
            .map_err(|e| format!("members file: {e}"))?;
        let members = rdf::split_document(
            rdf::parse(Format::Grouped, &text).map_err(|e| format!("members parse: {e}"))?,
        )
        .map_err(|e| format!("members split: {e}"))?;
        let got: Vec<String> = members
            .iter()
            .map(|np| np.uri().as_str().to_owned())
            .collect();
        require!(
            got == uris,
            "index round-trip returned {got:?}, published {uris:?}"
        );

        a.stop();
        b.stop();
        c.stop();
        Ok(
            "transcripts matched: publish, status growing from 1 to 3 servers, \
             index round-trip through a replica"
                .to_owned(),
        )
    });
}

fn poll_count(url: &str, expected: u64, timeout: Duration) -> Result<f64, String> {
    let client = ServerClient::with_timeout(url.to_owned(), Duration::from_secs(5));
    let start = Instant::now();
    loop {
        let count = client
            .info()
            .map(|info| info.nanopub_count)
            .unwrap_or_default();
        if count == expected {
            return Ok(start.elapsed().as_secs_f64());
        }
        if count > expected {
            return Err(format!("{url} holds {count}, beyond the expected {expected}"));
        }
        if start.elapsed() >= timeout {
            return Err(format!("{url} stuck at {count} of {expected} after {timeout:?}"));
        }
        std::thread::sleep(Duration::from_millis(100));
    }
}

#[test]
fn c09_tampered_peer_cannot_corrupt_the_honest() {
    criterion("C9", "tampered peer corrupts nothing", || {
        let dir = scratch("acceptance-c9");
        let corpus = corpus::gen_corpus(1000, 0xC9);
        let (hostile_slice, honest) = corpus.split_at(300);
        let (slice_a, slice_b) = honest.split_at(350);

        // The hostile server's store: one entry in ten rewritten on disk, so
        // every package it serves carries tampered members.
        let hostile_dir = dir.path().join("data-hostile");
        {
            let store = Store::open(
                &hostile_dir,
                StoreOptions {
                    page_size: 100,
                    cache_packages: false,
                },
            )
            .map_err(|e| format!("hostile store: {e}"))?;
            for np in hostile_slice {
                store.put(np).map_err(|e| format!("hostile preload: {e}"))?;
            }
        }
        let mut poisoned = HashSet::new();
        for (k, np) in hostile_slice.iter().enumerate() {
            if k % C9_TAMPERED_EVERY == 0 {
                let code = trusty::extract_code(np.uri().as_str()).expect("corpus carries codes");
                poison_entry(&hostile_dir, &code);
                poisoned.insert(code.as_str().to_owned());
            }
        }

        let file_a = dir.path().join("honest-a.nq");
        let file_b = dir.path().join("honest-b.nq");
        corpus::write_corpus_file(slice_a, &file_a).map_err(|e| format!("corpus: {e}"))?;
        corpus::write_corpus_file(slice_b, &file_b).map_err(|e| format!("corpus: {e}"))?;

        let ports = procs::pick_free_ports(3).map_err(|e| format!("ports: {e}"))?;
        let bin = server_bin();
        let mut guards = Vec::new();
        for (i, (port, load)) in [
            (ports[0], None),
            (ports[1], Some(file_a.clone())),
            (ports[2], Some(file_b.clone())),
        ]
        .into_iter()
        .enumerate()
        {
            let data_dir = if i == 0 {
                hostile_dir.clone()
            } else {
                dir.path().join(format!("data-{i}"))
            };
            let config = dir.path().join(format!("server-{i}.conf"));
            procs::write_server_config(&config, port, &data_dir, 100, 0.3, &ports)
                .map_err(|e| format!("config: {e}"))?;
            let load: Vec<PathBuf> = load.into_iter().collect();
            let guard = procs::spawn_server(&bin, &config, &load, &dir.path().join(format!("server-{i}.log")))
                .map_err(|e| format!("spawn {i}: {e}"))?;
            guards.push(guard);
        }
        let honest_urls = [
            format!("http://127.0.0.1:{}/", ports[1]),
            format!("http://127.0.0.1:{}/", ports[2]),
        ];
        for url in &honest_urls {
            procs::wait_ready(url, Duration::from_secs(30)).map_err(|e| e.to_string())?;
        }

        // Everything except the 30 rewritten entries must converge.
        let expected = 350 + 350 + (300 - 300 / C9_TAMPERED_EVERY) as u64;
        for url in &honest_urls {
            poll_count(url, expected, Duration::from_secs(180))?;
        }
        std::thread::sleep(Duration::from_secs(1));

        let valid_codes: HashSet<String> = corpus
            .iter()
            .filter_map(|np| trusty::extract_code(np.uri().as_str()))
            .map(|code| code.as_str().to_owned())
            .filter(|code| !poisoned.contains(code))
            .collect();
        for url in &honest_urls {
            let count = ServerClient::with_timeout(url.clone(), Duration::from_secs(5))
                .info()
                .map_err(|e| format!("{url}: {e}"))?
                .nanopub_count;
            require!(count == expected, "{url} moved to {count} after settling");

            let client = ServerClient::with_timeout(url.clone(), Duration::from_secs(10));
            let mut held = HashSet::new();
            for page in 1..=expected.div_ceil(100) {
                let codes = client
                    .journal_page(page)
                    .map_err(|e| format!("{url} page {page}: {e}"))?;
                for code in codes {
                    let np = client
                        .get_nanopub(&code)
                        .map_err(|e| format!("{url} {}: {e}", code.as_str()))?;
                    require!(
                        matches!(trusty::verify(&np), Ok(true)),
                        "{url} serves a corrupted entry {}",
                        code.as_str()
                    );
                    require!(
                        trusty::extract_code(np.uri().as_str()).as_ref() == Some(&code),
                        "{url} returned the wrong document for {}",
                        code.as_str()
                    );
                    held.insert(code.as_str().to_owned());
                }
            }
            require!(
                held.len() as u64 == expected,
                "{url} journal listed {} distinct entries",
                held.len()
            );
            for code in &poisoned {
                require!(!held.contains(code), "{url} accepted poisoned entry {code}");
            }
            for code in &valid_codes {
                require!(held.contains(code), "{url} is missing valid entry {code}");
            }
        }

        for guard in &mut guards {
            guard.kill();
        }
        Ok(format!(
            "both honest servers hold exactly the {expected} valid entries, all \
             verified; {} rewritten entries rejected",
            poisoned.len()
        ))
    });
}

fn read_listen_url(log: &Path, timeout: Duration) -> Result<String, String> {
    let deadline = Instant::now() + timeout;
    loop {
        if let Ok(text) = std::fs::read_to_string(log) {
            if let Some(line) = text.lines().find(|l| l.starts_with("LISTENING ")) {
                return Ok(format!("http://{}/", line["LISTENING ".len()..].trim()));
            }
        }
        if Instant::now() >= deadline {
            return Err(format!("no LISTENING line in {}", log.display()));
        }
        std::thread::sleep(Duration::from_millis(50));
    }
}

#[test]
fn c10_crash_cycles_keep_the_store_sound() {
    criterion("C10", "crashes mid-load never corrupt the store", || {
        let dir = scratch("acceptance-c10");
        let corpus = corpus::gen_corpus(4000, 0xC10);
        let corpus_file = dir.path().join("corpus.nq");
        corpus::write_corpus_file(&corpus, &corpus_file).map_err(|e| format!("corpus: {e}"))?;

        let data_dir = dir.path().join("data-primary");
        let config = dir.path().join("primary.conf");
        procs::write_server_config(&config, 0, &data_dir, 500, 0.5, &[])
            .map_err(|e| format!("config: {e}"))?;
        let bin = server_bin();
        let load = vec![corpus_file.clone()];

        let mut previous_count = 0u64;
        for cycle in 0..C10_CRASH_CYCLES {
            let log = dir.path().join(format!("cycle-{cycle}.log"));
            let mut child = procs::spawn_server(&bin, &config, &load, &log)
                .map_err(|e| format!("cycle {cycle} spawn: {e}"))?;
            std::thread::sleep(Duration::from_millis(100 + 150 * cycle as u64));
            child.kill();

            let store = Store::open(
                &data_dir,
                StoreOptions {
                    page_size: 500,
                    cache_packages: false,
                },
            )
            .map_err(|e| format!("reopen after crash {cycle}: {e}"))?;
            let count = store.count();
            require!(
                count >= previous_count,
                "journal shrank after crash {cycle}: {previous_count} -> {count}"
            );
            previous_count = count;

            let mut walked = 0u64;
            let mut page = 1u64;
            while let Some(codes) = store.journal_page(page) {
                walked += codes.len() as u64;
                require!(
                    codes.len() as u64 == 500 || walked == count,
                    "short journal page {page} after crash {cycle}"
                );
                page += 1;
            }
            require!(
                walked == count,
                "journal pages cover {walked} of {count} entries after crash {cycle}"
            );

            let mut positions: Vec<u64> = (1..=count).step_by(97).collect();
            positions.push(count);
            for position in positions {
                if position == 0 {
                    continue;
                }
                let page = (position - 1) / 500 + 1;
                let index = ((position - 1) % 500) as usize;
                let code = store
                    .journal_page(page)
                    .and_then(|codes| codes.get(index).cloned())
                    .ok_or_else(|| format!("crash {cycle}: position {position} unlisted"))?;
                let bytes = store
                    .get(&code)
                    .map_err(|e| format!("crash {cycle}: {e}"))?
                    .ok_or_else(|| format!("crash {cycle}: {} journaled but absent", code.as_str()))?;
                let text = String::from_utf8(bytes)
                    .map_err(|_| format!("crash {cycle}: stored bytes are not UTF-8"))?;
                let nanopubs = rdf::split_document(
                    rdf::parse(Format::LineQuads, &text)
                        .map_err(|e| format!("crash {cycle}: stored entry unparsable: {e}"))?,
                )
                .map_err(|e| format!("crash {cycle}: stored entry malformed: {e}"))?;
                require!(
                    nanopubs.len() == 1
                        && matches!(trusty::verify(&nanopubs[0]), Ok(true))
                        && trusty::extract_code(nanopubs[0].uri().as_str()).as_ref() == Some(&code),
                    "stored entry {} fails verification after crash {cycle}",
                    code.as_str()
                );
            }
        }

        // A final uninterrupted run completes the load, and a fresh mirror
        // replicates the result.
        let final_log = dir.path().join("final.log");
        let mut primary = procs::spawn_server(&bin, &config, &load, &final_log)
            .map_err(|e| format!("final spawn: {e}"))?;
        let url_primary = read_listen_url(&final_log, Duration::from_secs(30))?;
        poll_count(&url_primary, 4000, Duration::from_secs(120))?;

        let primary_port: u16 = url_primary
            .trim_start_matches("http://127.0.0.1:")
            .trim_end_matches('/')
            .parse()
            .map_err(|_| format!("unparsable primary address {url_primary}"))?;
        let mirror_config = dir.path().join("mirror.conf");
        procs::write_server_config(
            &mirror_config,
            0,
            &dir.path().join("data-mirror"),
            500,
            0.5,
            &[primary_port],
        )
        .map_err(|e| format!("mirror config: {e}"))?;
        let mirror_log = dir.path().join("mirror.log");
        let mut mirror = procs::spawn_server(&bin, &mirror_config, &[], &mirror_log)
            .map_err(|e| format!("mirror spawn: {e}"))?;
        let url_mirror = read_listen_url(&mirror_log, Duration::from_secs(30))?;
        let caught_up = poll_count(&url_mirror, 4000, REPLICATION_TIME_LIMIT)?;

        let client = ServerClient::with_timeout(url_mirror.clone(), Duration::from_secs(10));
        let mut rng = ChaCha8Rng::seed_from_u64(0x10F1);
        for _ in 0..25 {
            let position = rng.random_range(1..=4000u64);
            let page = (position - 1) / 500 + 1;
            let index = ((position - 1) % 500) as usize;
            let code = client
                .journal_page(page)
                .map_err(|e| format!("mirror page {page}: {e}"))?
                .get(index)
                .cloned()
                .ok_or("mirror journal page shorter than expected")?;
            let np = client
                .get_nanopub(&code)
                .map_err(|e| format!("mirror {}: {e}", code.as_str()))?;
            require!(
                matches!(trusty::verify(&np), Ok(true)),
                "mirror serves an unverifiable entry {}",
                code.as_str()
            );
        }

        primary.kill();
        mirror.kill();
        Ok(format!(
            "{C10_CRASH_CYCLES} crash cycles reopened cleanly (last interrupted count \
             {previous_count}); final load and mirror both reached 4000 in {caught_up:.1}s"
        ))
    });
}
