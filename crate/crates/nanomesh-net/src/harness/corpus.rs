//! Deterministic synthetic nanopublication corpora: 20 to 40 quads each,
//! content unique per (seed, position), already content-addressed.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nanomesh::rdf::{Iri, Literal, Nanopub, Term};
use nanomesh::trusty;
use nanomesh::vocab::{DCT_CREATOR, PROV_WAS_ATTRIBUTED_TO};

const PREDICATES: [&str; 8] = [
    "http://nanomesh.dev/voc/relatesTo",
    "http://nanomesh.dev/voc/observedIn",
    "http://nanomesh.dev/voc/measuredAs",
    "http://nanomesh.dev/voc/derivedFrom",
    "http://nanomesh.dev/voc/classifiedAs",
    "http://nanomesh.dev/voc/interactsWith",
    "http://nanomesh.dev/voc/locatedAt",
    "http://nanomesh.dev/voc/reportedBy",
];

fn iri(s: String) -> Iri {
    Iri::new(s).expect("generated IRIs are valid")
}

fn random_word(rng: &mut impl Rng) -> String {
    let len = rng.random_range(3..12);
    (0..len)
        .map(|_| rng.sample(rand::distr::Alphanumeric) as char)
        .collect()
}

fn gen_one(rng: &mut impl Rng, seed: u64, position: u64) -> Nanopub {
    let base = iri(format!("http://nanomesh.dev/corpus/{seed}/{position}/"));
    let agent = iri(format!("http://nanomesh.dev/agent/{}", rng.random_range(0..50)));

    // 4 head + 1 serial + 1 provenance + 2 pubinfo are fixed, the rest is
    // random assertion content; totals stay within 20..=40.
    let total: usize = rng.random_range(20..=40);
    let extra_assertions = total - 8;

    let mut builder = Nanopub::builder(base.clone()).assert(
        iri(format!("{base}item")),
        iri("http://nanomesh.dev/voc/serial".to_owned()),
        Literal::string(format!("{seed}/{position}")).expect("plain string"),
    );
    for k in 0..extra_assertions {
        let subject = iri(format!(
            "http://nanomesh.dev/thing/{}",
            rng.random_range(0..10_000)
        ));
        let predicate = iri(PREDICATES[rng.random_range(0..PREDICATES.len())].to_owned());
        let object: Term = match k % 3 {
            0 => Literal::string(random_word(rng)).expect("plain string").into(),
            1 => Literal::typed(
                rng.random_range(0..1_000_000).to_string(),
                Iri::new("http://www.w3.org/2001/XMLSchema#integer").expect("xsd"),
            )
            .expect("typed literal")
            .into(),
            _ => iri(format!(
                "http://nanomesh.dev/thing/{}",
                rng.random_range(0..10_000)
            ))
            .into(),
        };
        builder = builder.assert(subject, predicate, object);
    }
    let np = builder
        .provenance(
            iri(format!("{base}#assertion")),
            Iri::new(PROV_WAS_ATTRIBUTED_TO).expect("vocab"),
            agent.clone(),
        )
        .pubinfo(base.clone(), Iri::new(DCT_CREATOR).expect("vocab"), agent)
        .pubinfo(
            base.clone(),
            iri("http://nanomesh.dev/voc/generator".to_owned()),
            Literal::string("nanomesh harness").expect("plain string"),
        )
        .build()
        .expect("generated structure is valid");
    trusty::make_trusty(&np).expect("generated nanopublications transform")
}

/// `n` nanopublications, fully determined by `seed`.
pub fn gen_corpus(n: u64, seed: u64) -> Vec<Nanopub> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|i| gen_one(&mut rng, seed, i)).collect()
}

/// Writes nanopublications as one concatenated line-quads file.
pub fn write_corpus_file(nanopubs: &[Nanopub], path: &Path) -> std::io::Result<()> {
    let mut text = String::new();
    for np in nanopubs {
        text.push_str(&np.to_line_quads());
    }
    std::fs::write(path, text)
}
