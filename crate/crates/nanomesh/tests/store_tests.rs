//! Store behavior: journal format, pages, packages, reopen, and recovery
//! from torn writes.

use std::fs;
use std::io::Read;
use std::path::PathBuf;

use nanomesh::rdf::{Iri, Literal, Nanopub};
use nanomesh::store::{PutOutcome, Store, StoreError, StoreOptions, RECORD_LEN};
use nanomesh::trusty::{self, TrustyUri};
use nanomesh::vocab::PROV_WAS_ATTRIBUTED_TO;

fn iri(s: &str) -> Iri {
    Iri::new(s).unwrap()
}

fn make_np(n: usize) -> Nanopub {
    let base = iri(&format!("http://ex.org/stored/{n}/"));
    let np = Nanopub::builder(base.clone())
        .assert(
            iri(&format!("http://ex.org/entity/{n}")),
            iri("http://ex.org/value"),
            Literal::string(format!("value {n}")).unwrap(),
        )
        .provenance(
            iri(&format!("{base}#assertion")),
            iri(PROV_WAS_ATTRIBUTED_TO),
            iri("http://ex.org/agent"),
        )
        .pubinfo(
            base,
            iri("http://purl.org/dc/terms/creator"),
            iri("http://ex.org/agent"),
        )
        .build()
        .unwrap();
    trusty::make_trusty(&np).unwrap()
}

fn opts(page_size: u64) -> StoreOptions {
    StoreOptions {
        page_size,
        cache_packages: true,
    }
}

#[test]
fn put_get_and_info() {
    let dir = tempfile::tempdir().unwrap();
    let store = Store::open(dir.path(), opts(3)).unwrap();
    assert_eq!(store.count(), 0);

    let np = make_np(1);
    let code = TrustyUri::parse(np.uri().as_str()).unwrap().code();
    assert_eq!(store.put(&np).unwrap(), PutOutcome::Added(1));
    assert_eq!(store.put(&np).unwrap(), PutOutcome::AlreadyPresent);
    assert!(store.contains(&code));
    assert_eq!(store.count(), 1);

    let bytes = store.get(&code).unwrap().unwrap();
    assert_eq!(bytes, np.to_line_quads().into_bytes());

    let info = store.info();
    assert_eq!(info.count, 1);
    assert_eq!(info.page_size, 3);
}

#[test]
fn rejects_unverifiable_nanopubs() {
    let dir = tempfile::tempdir().unwrap();
    let store = Store::open(dir.path(), opts(10)).unwrap();

    let np = make_np(1);
    let other = make_np(2);
    let tampered_text = np
        .to_line_quads()
        .replace("value 1", "value one");
    let tampered = nanomesh::rdf::split_document(
        nanomesh::rdf::line::parse(&tampered_text).unwrap(),
    )
    .unwrap()
    .remove(0);
    assert!(matches!(
        store.put(&tampered),
        Err(StoreError::VerificationFailed(_)),
    ));

    // A nanopublication without a code is an error too, not a silent accept.
    let plain = Nanopub::builder(iri("http://ex.org/plain/"))
        .assert(
            iri("http://ex.org/s"),
            iri("http://ex.org/p"),
            other.uri().clone(),
        )
        .provenance(
            iri("http://ex.org/plain/#assertion"),
            iri(PROV_WAS_ATTRIBUTED_TO),
            iri("http://ex.org/agent"),
        )
        .pubinfo(
            iri("http://ex.org/plain/"),
            iri("http://purl.org/dc/terms/creator"),
            iri("http://ex.org/agent"),
        )
        .build()
        .unwrap();
    assert!(matches!(store.put(&plain), Err(StoreError::Trusty(_))));
    assert_eq!(store.count(), 0);
}

#[test]
fn journal_records_are_fixed_width() {
    let dir = tempfile::tempdir().unwrap();
    let store = Store::open(dir.path(), opts(10)).unwrap();
    let nps: Vec<Nanopub> = (0..4).map(make_np).collect();
    for np in &nps {
        store.put(np).unwrap();
    }

    let raw = fs::read(dir.path().join("journal")).unwrap();
    assert_eq!(raw.len() as u64, 4 * RECORD_LEN);
    for (i, record) in raw.chunks_exact(RECORD_LEN as usize).enumerate() {
        assert_eq!(record[45], b'\n');
        let code = std::str::from_utf8(&record[..45]).unwrap();
        assert_eq!(
            code,
            TrustyUri::parse(nps[i].uri().as_str()).unwrap().code_str(),
        );
    }
}

#[test]
fn journal_pages_split_at_page_size() {
    let dir = tempfile::tempdir().unwrap();
    let store = Store::open(dir.path(), opts(3)).unwrap();
    let nps: Vec<Nanopub> = (0..7).map(make_np).collect();
    for np in &nps {
        store.put(np).unwrap();
    }

    assert_eq!(store.page_count(), 3);
    assert_eq!(store.journal_page(1).unwrap().len(), 3);
    assert_eq!(store.journal_page(2).unwrap().len(), 3);
    assert_eq!(store.journal_page(3).unwrap().len(), 1);
    assert_eq!(store.journal_page(4), None);
    assert_eq!(store.journal_page(0), None);

    let page2 = store.journal_page(2).unwrap();
    for (i, code) in page2.iter().enumerate() {
        assert_eq!(
            code.as_str(),
            TrustyUri::parse(nps[3 + i].uri().as_str()).unwrap().code_str(),
        );
    }
}

#[test]
fn packages_cover_complete_pages_only() {
    let dir = tempfile::tempdir().unwrap();
    let store = Store::open(dir.path(), opts(3)).unwrap();
    let nps: Vec<Nanopub> = (0..7).map(make_np).collect();
    for np in &nps {
        store.put(np).unwrap();
    }

    assert!(store.package(3).unwrap().is_none(), "partial page");
    assert!(store.package(9).unwrap().is_none(), "page out of range");

    let packed = store.package(1).unwrap().unwrap();
    let mut decoder = flate2::read::GzDecoder::new(&packed[..]);
    let mut plain = String::new();
    decoder.read_to_string(&mut plain).unwrap();

    let mut expected = String::new();
    for np in &nps[..3] {
        let code = TrustyUri::parse(np.uri().as_str()).unwrap();
        expected.push_str(&format!("# {}\n", code.code_str()));
        expected.push_str(&np.to_line_quads());
    }
    assert_eq!(plain, expected);

    // Rebuilding after dropping the cache yields identical bytes.
    let cache = dir.path().join("packages").join("1.gz");
    assert!(cache.exists());
    fs::remove_file(&cache).unwrap();
    let rebuilt = store.package(1).unwrap().unwrap();
    assert_eq!(rebuilt, packed);
}

#[test]
fn reopen_preserves_state_and_identity() {
    let dir = tempfile::tempdir().unwrap();
    let nps: Vec<Nanopub> = (0..5).map(make_np).collect();
    let journal_id = {
        let store = Store::open(dir.path(), opts(2)).unwrap();
        for np in &nps {
            store.put(np).unwrap();
        }
        store.info().journal_id
    };

    let store = Store::open(dir.path(), opts(2)).unwrap();
    assert_eq!(store.info().journal_id, journal_id);
    assert_eq!(store.count(), 5);
    for np in &nps {
        let code = TrustyUri::parse(np.uri().as_str()).unwrap().code();
        assert_eq!(
            store.get(&code).unwrap().unwrap(),
            np.to_line_quads().into_bytes(),
        );
    }
    // Re-put after reopen is still deduplicated.
    assert_eq!(store.put(&nps[0]).unwrap(), PutOutcome::AlreadyPresent);

    assert!(matches!(
        Store::open(dir.path(), opts(7)),
        Err(StoreError::PageSizeMismatch { stored: 2, configured: 7 }),
    ));
}

#[test]
fn torn_journal_tail_is_truncated() {
    let dir = tempfile::tempdir().unwrap();
    let nps: Vec<Nanopub> = (0..3).map(make_np).collect();
    {
        let store = Store::open(dir.path(), opts(10)).unwrap();
        for np in &nps {
            store.put(np).unwrap();
        }
    }
    // Simulate a crash mid-append: a partial record at the tail.
    let journal = dir.path().join("journal");
    let mut raw = fs::read(&journal).unwrap();
    raw.extend_from_slice(b"RAtruncated");
    fs::write(&journal, &raw).unwrap();

    let store = Store::open(dir.path(), opts(10)).unwrap();
    assert_eq!(store.count(), 3);
    assert_eq!(
        fs::read(&journal).unwrap().len() as u64,
        3 * RECORD_LEN,
    );
    // The store still accepts new writes afterwards.
    store.put(&make_np(99)).unwrap();
    assert_eq!(store.count(), 4);
}

#[test]
fn content_without_journal_record_is_invisible() {
    let dir = tempfile::tempdir().unwrap();
    let orphan = make_np(42);
    let code = TrustyUri::parse(orphan.uri().as_str()).unwrap().code();
    {
        let store = Store::open(dir.path(), opts(10)).unwrap();
        store.put(&orphan).unwrap();
    }
    // Keep the content file but delete its journal record: the nanopub must
    // disappear, and a later put must restore it.
    fs::write(dir.path().join("journal"), b"").unwrap();

    let store = Store::open(dir.path(), opts(10)).unwrap();
    assert_eq!(store.count(), 0);
    assert!(!store.contains(&code));
    assert_eq!(store.get(&code).unwrap(), None);

    assert_eq!(store.put(&orphan).unwrap(), PutOutcome::Added(1));
    assert!(store.contains(&code));
}

#[test]
fn corrupted_journal_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    {
        let store = Store::open(dir.path(), opts(10)).unwrap();
        store.put(&make_np(0)).unwrap();
        store.put(&make_np(1)).unwrap();
    }
    let journal = dir.path().join("journal");
    let mut raw = fs::read(&journal).unwrap();
    raw[RECORD_LEN as usize + 3] = b'!';
    fs::write(&journal, &raw).unwrap();

    match Store::open(dir.path(), opts(10)) {
        Err(StoreError::CorruptJournal { index: 2, .. }) => {}
        Err(other) => panic!("expected corrupt journal at record 2, got {other:?}"),
        Ok(_) => panic!("expected corrupt journal at record 2, store opened"),
    }
}

#[test]
fn load_files_collects_errors_and_continues() {
    let dir = tempfile::tempdir().unwrap();
    let store = Store::open(dir.path(), opts(10)).unwrap();

    let good = dir.path().join("good.nq");
    let mut text = String::new();
    for n in 0..3 {
        text.push_str(&make_np(n).to_line_quads());
    }
    fs::write(&good, &text).unwrap();

    let bad = dir.path().join("bad.nq");
    fs::write(&bad, "not quads at all\n").unwrap();

    let tampered = dir.path().join("tampered.nq");
    fs::write(
        &tampered,
        make_np(7).to_line_quads().replace("value 7", "value 7!"),
    )
    .unwrap();

    let missing = dir.path().join("does-not-exist.nq");

    let report = store.load_files(&[
        good.clone(),
        bad.clone(),
        tampered.clone(),
        missing.clone(),
        good.clone(),
    ]);
    assert_eq!(report.added, 3);
    assert_eq!(report.already_present, 3, "second pass deduplicates");
    assert_eq!(report.errors.len(), 3);
    let failed: Vec<&PathBuf> = report.errors.iter().map(|(p, _)| p).collect();
    assert!(failed.contains(&&bad));
    assert!(failed.contains(&&tampered));
    assert!(failed.contains(&&missing));
    assert_eq!(store.count(), 3);
}
