//! Content-addressed identifiers.
//!
//! A nanopublication's URI ends in a 45-character artifact code derived from
//! a SHA-256 over its canonical form. The canonical form replaces the
//! nanopublication's own URI prefix with a placeholder in every IRI, so the
//! code does not depend on where the artifact lives: renaming the base URI
//! leaves the code unchanged, and the code can be computed before it is
//! embedded into the document.

use sha2::{Digest, Sha256};

use crate::rdf::{Iri, Nanopub, Quad, StructureError, Term, TermError};

/// Total length of an artifact code, prefix included.
pub const CODE_LEN: usize = 45;

/// Identifies the hash and encoding scheme in use.
const CODE_PREFIX: &str = "RA";

/// 64-character alphabet; values map to six-bit groups in order.
const ALPHABET: &[u8; 64] =
    b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789-_";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CodeError {
    #[error("artifact code must be {CODE_LEN} characters, got {0}")]
    WrongLength(usize),
    #[error("artifact code must start with {CODE_PREFIX:?}")]
    MissingPrefix,
    #[error("invalid character {0:?} in artifact code")]
    InvalidChar(char),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TrustyError {
    #[error("<{uri}> does not end in a well-formed artifact code: {reason}")]
    NotContentAddressed { uri: String, reason: String },
    #[error("<{0}> already carries an artifact code")]
    AlreadyContentAddressed(String),
    #[error("base URI <{0}> must end with '#', '/', or '.'")]
    MissingTerminator(String),
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error(transparent)]
    Term(#[from] TermError),
}

/// A 45-character artifact code: the scheme prefix plus 43 characters
/// encoding a SHA-256 digest, most significant bit first, with the final two
/// padding bits zero.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ArtifactCode(String);

impl ArtifactCode {
    pub fn parse(s: &str) -> Result<Self, CodeError> {
        if s.len() != CODE_LEN {
            return Err(CodeError::WrongLength(s.len()));
        }
        if !s.starts_with(CODE_PREFIX) {
            return Err(CodeError::MissingPrefix);
        }
        for ch in s.chars() {
            if !ch.is_ascii() || !ALPHABET.contains(&(ch as u8)) {
                return Err(CodeError::InvalidChar(ch));
            }
        }
        Ok(ArtifactCode(s.to_owned()))
    }

    pub fn from_digest(digest: &[u8; 32]) -> Self {
        let mut out = String::with_capacity(CODE_LEN);
        out.push_str(CODE_PREFIX);
        let mut acc: u32 = 0;
        let mut nbits: u32 = 0;
        for &byte in digest {
            acc = (acc << 8) | u32::from(byte);
            nbits += 8;
            while nbits >= 6 {
                nbits -= 6;
                out.push(ALPHABET[((acc >> nbits) & 0x3f) as usize] as char);
            }
        }
        // 256 = 42 * 6 + 4: the last four bits land left-aligned in one more
        // character with two zero bits of padding.
        debug_assert_eq!(nbits, 4);
        out.push(ALPHABET[((acc << (6 - nbits)) & 0x3f) as usize] as char);
        ArtifactCode(out)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl std::fmt::Display for ArtifactCode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

/// A URI whose tail is an artifact code: `<base><code>` where the base ends
/// with `#`, `/`, or `.`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TrustyUri {
    uri: String,
    base_len: usize,
}

impl TrustyUri {
    pub fn parse(uri: &str) -> Result<Self, TrustyError> {
        let not_ca = |reason: String| TrustyError::NotContentAddressed {
            uri: uri.to_owned(),
            reason,
        };
        if uri.len() <= CODE_LEN {
            return Err(not_ca("URI too short to carry a code".into()));
        }
        let split = uri.len() - CODE_LEN;
        if !uri.is_char_boundary(split) {
            return Err(not_ca("tail is not ASCII".into()));
        }
        let (base, tail) = uri.split_at(split);
        ArtifactCode::parse(tail).map_err(|e| not_ca(e.to_string()))?;
        if !ends_with_terminator(base) {
            return Err(not_ca("no '#', '/', or '.' before the code".into()));
        }
        Ok(TrustyUri {
            uri: uri.to_owned(),
            base_len: split,
        })
    }

    pub fn as_str(&self) -> &str {
        &self.uri
    }

    pub fn base(&self) -> &str {
        &self.uri[..self.base_len]
    }

    pub fn code(&self) -> ArtifactCode {
        ArtifactCode(self.uri[self.base_len..].to_owned())
    }

    pub fn code_str(&self) -> &str {
        &self.uri[self.base_len..]
    }

    pub fn to_iri(&self) -> Iri {
        Iri::new(self.uri.clone()).expect("parsed from a valid IRI")
    }
}

impl std::fmt::Display for TrustyUri {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.uri)
    }
}

/// Returns the artifact code if the URI ends in a well-formed one.
pub fn extract_code(uri: &str) -> Option<ArtifactCode> {
    TrustyUri::parse(uri).ok().map(|t| t.code())
}

fn ends_with_terminator(s: &str) -> bool {
    s.ends_with(['#', '/', '.'])
}

/// Canonical bytes of a nanopublication: each statement rendered on one line
/// with the nanopublication's own URI prefix replaced by `"< "` in IRI terms,
/// lines sorted by code point, joined with `\n`, trailing `\n`, UTF-8.
///
/// For a content-addressed nanopublication the substituted prefix is the full
/// URI including the code; otherwise it is the URI itself, which must end
/// with a terminator character.
pub fn canonical_bytes(np: &Nanopub) -> Result<Vec<u8>, TrustyError> {
    let uri = np.uri().as_str();
    let prefix = if TrustyUri::parse(uri).is_ok() {
        uri
    } else if ends_with_terminator(uri) {
        uri
    } else {
        return Err(TrustyError::MissingTerminator(uri.to_owned()));
    };
    let mut lines: Vec<String> = np
        .quads()
        .iter()
        .map(|q| canonical_line(q, prefix))
        .collect();
    lines.sort_unstable();
    let mut text = lines.join("\n");
    text.push('\n');
    Ok(text.into_bytes())
}

fn canonical_line(quad: &Quad, prefix: &str) -> String {
    let mut out = String::new();
    canonical_iri(&quad.subject, prefix, &mut out);
    out.push(' ');
    canonical_iri(&quad.predicate, prefix, &mut out);
    out.push(' ');
    match &quad.object {
        Term::Iri(iri) => canonical_iri(iri, prefix, &mut out),
        Term::Literal(lit) => crate::rdf::line::write_literal(lit, &mut out),
    }
    out.push(' ');
    canonical_iri(&quad.graph, prefix, &mut out);
    out.push_str(" .");
    out
}

fn canonical_iri(iri: &Iri, prefix: &str, out: &mut String) {
    match iri.as_str().strip_prefix(prefix) {
        Some(rest) => {
            out.push_str("< ");
            out.push_str(rest);
            out.push('>');
        }
        None => {
            out.push('<');
            out.push_str(iri.as_str());
            out.push('>');
        }
    }
}

/// Computes the artifact code of a nanopublication without changing it.
pub fn compute_code(np: &Nanopub) -> Result<ArtifactCode, TrustyError> {
    let bytes = canonical_bytes(np)?;
    let digest: [u8; 32] = Sha256::digest(&bytes).into();
    Ok(ArtifactCode::from_digest(&digest))
}

/// Rewrites a nanopublication so its URI and internal references carry the
/// artifact code of its own content.
///
/// A URI without a terminator gets `.` appended first; its fragment
/// references move onto the new base. Every IRI that starts with the base
/// then has the base replaced by `<base><code>`. References to other
/// artifacts (different bases) are preserved verbatim.
pub fn make_trusty(np: &Nanopub) -> Result<Nanopub, TrustyError> {
    let uri = np.uri().as_str().to_owned();
    if TrustyUri::parse(&uri).is_ok() {
        return Err(TrustyError::AlreadyContentAddressed(uri));
    }
    let normalized: Nanopub;
    let (base, base_np) = if ends_with_terminator(&uri) {
        (uri, np)
    } else {
        let base = format!("{uri}.");
        let quads = rewrite_quads(np.quads(), |v| {
            if v == uri {
                Some(base.clone())
            } else {
                v.strip_prefix(uri.as_str())
                    .filter(|rest| rest.starts_with('#'))
                    .map(|rest| format!("{base}{rest}"))
            }
        })?;
        normalized = Nanopub::from_quads(quads)?;
        (base, &normalized)
    };
    let code = compute_code(base_np)?;
    let trusty_prefix = format!("{base}{code}");
    let quads = rewrite_quads(base_np.quads(), |v| {
        v.strip_prefix(base.as_str())
            .map(|rest| format!("{trusty_prefix}{rest}"))
    })?;
    let out = Nanopub::from_quads(quads)?;
    debug_assert_eq!(verify(&out), Ok(true));
    Ok(out)
}

/// Recomputes the code over the canonical form and compares it with the code
/// embedded in the URI. A URI without a well-formed code is an error, not a
/// mismatch.
pub fn verify(np: &Nanopub) -> Result<bool, TrustyError> {
    let embedded = TrustyUri::parse(np.uri().as_str())?;
    let computed = compute_code(np)?;
    Ok(computed.as_str() == embedded.code_str())
}

fn rewrite_quads(
    quads: &[Quad],
    rewrite: impl Fn(&str) -> Option<String>,
) -> Result<Vec<Quad>, TermError> {
    let map_iri = |iri: &Iri| -> Result<Iri, TermError> {
        match rewrite(iri.as_str()) {
            Some(new) => Iri::new(new),
            None => Ok(iri.clone()),
        }
    };
    quads
        .iter()
        .map(|q| {
            Ok(Quad {
                subject: map_iri(&q.subject)?,
                predicate: map_iri(&q.predicate)?,
                object: match &q.object {
                    Term::Iri(iri) => Term::Iri(map_iri(iri)?),
                    lit => lit.clone(),
                },
                graph: map_iri(&q.graph)?,
            })
        })
        .collect()
}
