#!/usr/bin/env python3
"""Independent reference computation of artifact codes for the golden fixtures.

Implements the canonical form from first principles (own escaping, sorting,
hashing, encoding) so the Rust implementation can be checked against values
that were not produced by it. Run: python3 tools/oracle/artifact_code_oracle.py
"""

import base64
import hashlib

RDF_TYPE = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type"
NP = "http://www.nanopub.org/nschema#"
PROV_ATTR = "http://www.w3.org/ns/prov#wasAttributedTo"
DCT_CREATOR = "http://purl.org/dc/terms/creator"
XSD_STRING = "http://www.w3.org/2001/XMLSchema#string"
XSD_INTEGER = "http://www.w3.org/2001/XMLSchema#integer"


def esc(value: str) -> str:
    out = []
    for ch in value:
        if ch == "\\":
            out.append("\\\\")
        elif ch == '"':
            out.append('\\"')
        elif ch == "\n":
            out.append("\\n")
        elif ch == "\r":
            out.append("\\r")
        elif ch == "\t":
            out.append("\\t")
        else:
            out.append(ch)
    return "".join(out)


def render_iri(value: str, base: str) -> str:
    if value.startswith(base):
        return "< " + value[len(base):] + ">"
    return "<" + value + ">"


def render_literal(lit) -> str:
    value, datatype, lang = lit
    s = '"' + esc(value) + '"'
    if lang is not None:
        return s + "@" + lang
    if datatype != XSD_STRING:
        return s + "^^<" + datatype + ">"
    return s


def render_term(term, base: str) -> str:
    if isinstance(term, str):
        return render_iri(term, base)
    return render_literal(term)


def canonical_bytes(quads, base: str) -> bytes:
    lines = []
    for s, p, o, g in quads:
        lines.append(
            "%s %s %s %s ." % (
                render_iri(s, base),
                render_iri(p, base),
                render_term(o, base),
                render_iri(g, base),
            )
        )
    lines.sort()  # python sorts str by code point, matching byte order for UTF-8
    return ("\n".join(lines) + "\n").encode("utf-8")


def artifact_code(quads, base: str) -> str:
    digest = hashlib.sha256(canonical_bytes(quads, base)).digest()
    # 256 bits, big-endian bit order, left-aligned into 43 six-bit groups
    # (the final group gets two zero padding bits) = urlsafe base64, no '='.
    encoded = base64.urlsafe_b64encode(digest + b"\x00").decode("ascii")[:43]
    return "RA" + encoded


def head(uri, h, a, p, i):
    return [
        (uri, RDF_TYPE, NP + "Nanopublication", h),
        (uri, NP + "hasAssertion", a, h),
        (uri, NP + "hasProvenance", p, h),
        (uri, NP + "hasPublicationInfo", i, h),
    ]


def fixture_minimal():
    u = "http://example.org/np1."
    h, a, p, i = u + "#head", u + "#assertion", u + "#provenance", u + "#pubinfo"
    quads = head(u, h, a, p, i) + [
        ("http://example.org/subject", "http://example.org/predicate",
         ("Hello, world!", XSD_STRING, None), a),
        (a, PROV_ATTR, "http://example.org/alice", p),
        (u, DCT_CREATOR, "http://example.org/alice", i),
    ]
    return quads, u


def fixture_unterminated_normalized():
    # Original URI http://example.org/pub/note lacks a terminator; the
    # transform appends '.' and shifts fragment references onto the new base.
    u = "http://example.org/pub/note."
    h, a, p, i = u + "#head", u + "#assertion", u + "#provenance", u + "#pubinfo"
    quads = head(u, h, a, p, i) + [
        ("http://example.org/s", "http://example.org/p", ("x", None, "en"), a),
        (a, PROV_ATTR, "http://example.org/bob", p),
        (u, DCT_CREATOR, "http://example.org/bob", i),
    ]
    return quads, u


def fixture_escapes():
    u = "http://example.org/esc."
    h, a, p, i = u + "#head", u + "#assertion", u + "#provenance", u + "#pubinfo"
    tricky = 'He said "hi"\n\\col\t\rπ'
    quads = head(u, h, a, p, i) + [
        ("http://example.org/s", "http://example.org/p",
         (tricky, XSD_STRING, None), a),
        (a, PROV_ATTR, "http://example.org/alice", p),
        (u, "http://example.org/count", ("42", XSD_INTEGER, None), i),
        (u, "http://example.org/note", ("plain", XSD_STRING, None), i),
    ]
    return quads, u


def main():
    for name, (quads, base) in [
        ("minimal", fixture_minimal()),
        ("normalized", fixture_unterminated_normalized()),
        ("escapes", fixture_escapes()),
    ]:
        code = artifact_code(quads, base)
        print("%s: %s" % (name, code))
        print("  trusty uri: %s%s" % (base, code))


if __name__ == "__main__":
    main()
