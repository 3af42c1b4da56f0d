use std::fmt;

use crate::vocab::{RDF_LANG_STRING, XSD_STRING};

/// An absolute IRI. Construction validates the characters, so every held
/// value is safe to embed in angle brackets without escaping.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Iri(String);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TermError {
    #[error("relative IRI: {0:?}")]
    RelativeIri(String),
    #[error("forbidden character {ch:?} in IRI {iri:?}")]
    ForbiddenChar { iri: String, ch: char },
    #[error("empty IRI")]
    EmptyIri,
    #[error("invalid language tag: {0:?}")]
    InvalidLanguageTag(String),
    #[error("language-tagged literal must use the language-string datatype")]
    LanguageDatatypeMismatch,
    #[error("control character {0:?} cannot be represented in a literal")]
    ForbiddenLiteralChar(char),
}

impl Iri {
    pub fn new(value: impl Into<String>) -> Result<Self, TermError> {
        let value = value.into();
        if value.is_empty() {
            return Err(TermError::EmptyIri);
        }
        for ch in value.chars() {
            if ch <= ' ' || matches!(ch, '<' | '>' | '"' | '{' | '}' | '|' | '^' | '`' | '\\') {
                return Err(TermError::ForbiddenChar { iri: value, ch });
            }
        }
        if !has_scheme(&value) {
            return Err(TermError::RelativeIri(value));
        }
        Ok(Iri(value))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn into_string(self) -> String {
        self.0
    }
}

fn has_scheme(value: &str) -> bool {
    let Some(colon) = value.find(':') else {
        return false;
    };
    let scheme = &value[..colon];
    let mut chars = scheme.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'))
}

impl fmt::Debug for Iri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}>", self.0)
    }
}

impl fmt::Display for Iri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for Iri {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

/// A literal value with its datatype and, for language strings, a tag.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Literal {
    value: String,
    datatype: Iri,
    language: Option<String>,
}

impl Literal {
    /// Plain string literal (`xsd:string`).
    ///
    /// Values may contain any characters representable in serialized form:
    /// the escape set covers `\t`, `\n`, and `\r`, so other control
    /// characters are rejected. Applies to all constructors.
    pub fn string(value: impl Into<String>) -> Result<Self, TermError> {
        let value = validate_value(value.into())?;
        Ok(Literal {
            value,
            datatype: Iri::new(XSD_STRING).expect("constant IRI"),
            language: None,
        })
    }

    /// Typed literal. The language-string datatype requires a tag; use
    /// [`Literal::lang`] for that.
    pub fn typed(value: impl Into<String>, datatype: Iri) -> Result<Self, TermError> {
        if datatype.as_str() == RDF_LANG_STRING {
            return Err(TermError::LanguageDatatypeMismatch);
        }
        Ok(Literal {
            value: validate_value(value.into())?,
            datatype,
            language: None,
        })
    }

    /// Language-tagged literal; the datatype is fixed to the language-string
    /// datatype.
    pub fn lang(value: impl Into<String>, tag: impl Into<String>) -> Result<Self, TermError> {
        let tag = tag.into();
        if !valid_language_tag(&tag) {
            return Err(TermError::InvalidLanguageTag(tag));
        }
        Ok(Literal {
            value: validate_value(value.into())?,
            datatype: Iri::new(RDF_LANG_STRING).expect("constant IRI"),
            language: Some(tag),
        })
    }

    pub fn value(&self) -> &str {
        &self.value
    }

    pub fn datatype(&self) -> &Iri {
        &self.datatype
    }

    pub fn language(&self) -> Option<&str> {
        self.language.as_deref()
    }
}

fn validate_value(value: String) -> Result<String, TermError> {
    match value
        .chars()
        .find(|&c| c < ' ' && !matches!(c, '\t' | '\n' | '\r'))
    {
        Some(ch) => Err(TermError::ForbiddenLiteralChar(ch)),
        None => Ok(value),
    }
}

fn valid_language_tag(tag: &str) -> bool {
    let mut parts = tag.split('-');
    match parts.next() {
        Some(first) if !first.is_empty() && first.chars().all(|c| c.is_ascii_alphabetic()) => {}
        _ => return false,
    }
    parts.all(|p| !p.is_empty() && p.chars().all(|c| c.is_ascii_alphanumeric()))
}

/// Subject, predicate, and graph positions hold IRIs; objects may also be
/// literals. Blank nodes do not exist in this model.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Term {
    Iri(Iri),
    Literal(Literal),
}

impl Term {
    pub fn iri(value: impl Into<String>) -> Result<Self, TermError> {
        Ok(Term::Iri(Iri::new(value)?))
    }

    pub fn as_iri(&self) -> Option<&Iri> {
        match self {
            Term::Iri(iri) => Some(iri),
            Term::Literal(_) => None,
        }
    }

    pub fn as_literal(&self) -> Option<&Literal> {
        match self {
            Term::Iri(_) => None,
            Term::Literal(lit) => Some(lit),
        }
    }
}

impl From<Iri> for Term {
    fn from(iri: Iri) -> Self {
        Term::Iri(iri)
    }
}

impl From<Literal> for Term {
    fn from(lit: Literal) -> Self {
        Term::Literal(lit)
    }
}
