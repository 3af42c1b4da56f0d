use super::term::{Iri, Literal, TermError};

/// Position-aware parse failure. Lines and columns are 1-based; columns count
/// characters, not bytes.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}, column {column}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseErrorKind {
    #[error("{0}")]
    Syntax(String),
    #[error("blank nodes are not allowed")]
    BlankNode,
    #[error("{0}")]
    Term(#[from] TermError),
    #[error("undeclared prefix {0:?}")]
    UnknownPrefix(String),
}

/// Character cursor shared by the statement parsers.
pub(crate) struct Cursor<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
    col: usize,
}

impl<'a> Cursor<'a> {
    pub fn new(src: &'a str) -> Self {
        Cursor {
            src,
            pos: 0,
            line: 1,
            col: 1,
        }
    }

    pub fn with_line(src: &'a str, line: usize) -> Self {
        Cursor {
            src,
            pos: 0,
            line,
            col: 1,
        }
    }

    pub fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    pub fn remaining(&self) -> &str {
        &self.src[self.pos..]
    }

    pub fn line(&self) -> usize {
        self.line
    }

    pub fn col(&self) -> usize {
        self.col
    }

    /// Steps back over one ASCII character on the current line.
    pub fn unbump_ascii(&mut self) {
        debug_assert!(self.pos > 0 && self.src.as_bytes()[self.pos - 1].is_ascii());
        debug_assert!(self.src.as_bytes()[self.pos - 1] != b'\n');
        self.pos -= 1;
        self.col -= 1;
    }

    pub fn starts_with(&self, s: &str) -> bool {
        self.src[self.pos..].starts_with(s)
    }

    pub fn bump(&mut self) -> Option<char> {
        let ch = self.peek()?;
        self.pos += ch.len_utf8();
        if ch == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(ch)
    }

    pub fn eof(&self) -> bool {
        self.pos >= self.src.len()
    }

    pub fn error(&self, kind: ParseErrorKind) -> ParseError {
        ParseError {
            line: self.line,
            column: self.col,
            kind,
        }
    }

    pub fn syntax(&self, msg: impl Into<String>) -> ParseError {
        self.error(ParseErrorKind::Syntax(msg.into()))
    }

    /// Spaces and tabs only.
    pub fn skip_inline_ws(&mut self) {
        while matches!(self.peek(), Some(' ' | '\t')) {
            self.bump();
        }
    }

    /// Whitespace including newlines, plus `#` comments to end of line.
    pub fn skip_ws_and_comments(&mut self) {
        loop {
            match self.peek() {
                Some(' ' | '\t' | '\r' | '\n') => {
                    self.bump();
                }
                Some('#') => {
                    while !matches!(self.peek(), None | Some('\n')) {
                        self.bump();
                    }
                }
                _ => return,
            }
        }
    }

    pub fn expect(&mut self, want: char) -> Result<(), ParseError> {
        match self.peek() {
            Some(ch) if ch == want => {
                self.bump();
                Ok(())
            }
            Some(ch) => Err(self.syntax(format!("expected {want:?}, found {ch:?}"))),
            None => Err(self.syntax(format!("expected {want:?}, found end of input"))),
        }
    }

    /// `<...>` with raw characters; no escape sequences, so each IRI has
    /// exactly one spelling.
    pub fn scan_iri(&mut self) -> Result<Iri, ParseError> {
        let start = (self.line, self.col);
        self.expect('<')?;
        let mut value = String::new();
        loop {
            match self.peek() {
                Some('>') => {
                    self.bump();
                    break;
                }
                Some('\n') | None => {
                    return Err(self.syntax("unterminated IRI"));
                }
                Some(ch) => {
                    self.bump();
                    value.push(ch);
                }
            }
        }
        Iri::new(value).map_err(|e| ParseError {
            line: start.0,
            column: start.1,
            kind: ParseErrorKind::Term(e),
        })
    }

    /// `"..."` with `\\ \" \n \r \t` escapes, optionally followed by a
    /// language tag or datatype.
    pub fn scan_literal(&mut self) -> Result<Literal, ParseError> {
        let start = (self.line, self.col);
        self.expect('"')?;
        let mut value = String::new();
        loop {
            match self.peek() {
                Some('"') => {
                    self.bump();
                    break;
                }
                Some('\\') => {
                    self.bump();
                    let esc = self
                        .peek()
                        .ok_or_else(|| self.syntax("unterminated escape"))?;
                    self.bump();
                    value.push(match esc {
                        '\\' => '\\',
                        '"' => '"',
                        'n' => '\n',
                        'r' => '\r',
                        't' => '\t',
                        other => {
                            return Err(self.syntax(format!("unsupported escape \\{other}")));
                        }
                    });
                }
                Some('\n') | Some('\r') | None => {
                    return Err(self.syntax("unterminated literal"));
                }
                Some(ch) if ch < ' ' && ch != '\t' => {
                    return Err(self.syntax(format!("raw control character {ch:?} in literal")));
                }
                Some(ch) => {
                    self.bump();
                    value.push(ch);
                }
            }
        }
        match self.peek() {
            Some('@') => {
                self.bump();
                let mut tag = String::new();
                while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '-') {
                    tag.push(self.bump().unwrap());
                }
                Literal::lang(value, tag).map_err(|e| ParseError {
                    line: start.0,
                    column: start.1,
                    kind: ParseErrorKind::Term(e),
                })
            }
            Some('^') => {
                self.bump();
                self.expect('^')?;
                let datatype = self.scan_iri()?;
                Literal::typed(value, datatype).map_err(|e| ParseError {
                    line: start.0,
                    column: start.1,
                    kind: ParseErrorKind::Term(e),
                })
            }
            _ => Literal::string(value).map_err(|e| ParseError {
                line: start.0,
                column: start.1,
                kind: ParseErrorKind::Term(e),
            }),
        }
    }

    /// Rejects `_:...` with a dedicated error before term parsing.
    pub fn check_blank_node(&self) -> Result<(), ParseError> {
        if self.starts_with("_:") {
            return Err(self.error(ParseErrorKind::BlankNode));
        }
        Ok(())
    }
}

/// Escapes a literal value for serialized output.
pub(crate) fn escape_literal(value: &str, out: &mut String) {
    for ch in value.chars() {
        match ch {
            '\\' => out.push_str("\\\\"),
            '"' => out.push_str("\\\""),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            other => out.push(other),
        }
    }
}
