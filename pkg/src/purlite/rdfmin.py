"""A small RDF model with a Turtle-subset reader and Turtle/N-Triples writers.

Supported Turtle: ``@prefix``/``PREFIX`` directives, ``<iri>`` (resolved
against the base), prefixed names, ``a``, ``;`` and ``,`` lists, double
quoted single-line literals with ``\\" \\\\ \\n \\t`` escapes, ``^^datatype``,
``@lang``, ``_:label`` blank nodes and ``#`` comments. Anything else is a
:class:`ParseError` carrying line and column.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Literal as Kind, Optional
from urllib.parse import urljoin

__all__ = [
    "Term",
    "Triple",
    "Graph",
    "ParseError",
    "SameUri",
    "IRI",
    "Literal",
    "BNode",
    "parse_turtle",
    "serialize",
    "describe_link",
    "replacement_links",
    "W3ID_303",
    "RDF_TYPE",
    "DCTERMS",
    "SCHEMA",
    "XSD",
]

RDF_TYPE = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type"
RDFS = "http://www.w3.org/2000/01/rdf-schema#"
XSD = "http://www.w3.org/2001/XMLSchema#"
DCTERMS = "http://purl.org/dc/terms/"
SCHEMA = "https://schema.org/"
OWL = "http://www.w3.org/2002/07/owl#"
W3ID_303 = "https://w3id.org/303"

_ABSOLUTE = re.compile(r"^[A-Za-z][A-Za-z0-9+.-]*:")
_LANG = re.compile(r"^[a-zA-Z]+(?:-[a-zA-Z0-9]+)*$")


@dataclass(frozen=True)
class Term:
    kind: Kind["iri", "blank", "literal"]
    value: str
    datatype: Optional[str] = None
    language: Optional[str] = None

    def __post_init__(self) -> None:
        if self.kind == "iri" and not _ABSOLUTE.match(self.value):
            raise ValueError(f"IRI is not absolute: {self.value!r}")
        if self.kind != "literal" and (self.datatype or self.language):
            raise ValueError("only literals carry datatype or language")
        if self.datatype and self.language:
            raise ValueError("a literal has either a datatype or a language")
        if self.language is not None and not _LANG.match(self.language):
            raise ValueError(f"bad language tag {self.language!r}")

    def sort_key(self) -> tuple[str, str, str, str]:
        return (self.kind, self.value, self.datatype or "", self.language or "")

    def __lt__(self, other: "Term") -> bool:
        return self.sort_key() < other.sort_key()

    def n3(self) -> str:
        if self.kind == "iri":
            return f"<{_escape_iri(self.value)}>"
        if self.kind == "blank":
            return f"_:{self.value}"
        out = f'"{_escape_string(self.value)}"'
        if self.language:
            return f"{out}@{self.language}"
        if self.datatype:
            return f"{out}^^<{_escape_iri(self.datatype)}>"
        return out


def IRI(value: str) -> Term:
    return Term("iri", value)


def BNode(label: str) -> Term:
    return Term("blank", label)


def Literal(value: str, datatype: Optional[str] = None, language: Optional[str] = None) -> Term:
    return Term("literal", value, datatype, language)


@dataclass(frozen=True)
class Triple:
    subject: Term
    predicate: Term
    object: Term

    def __post_init__(self) -> None:
        if self.subject.kind == "literal":
            raise ValueError("literal in subject position")
        if self.predicate.kind != "iri":
            raise ValueError("predicate must be an IRI")

    def sort_key(self) -> tuple:
        return (self.subject.sort_key(), self.predicate.sort_key(), self.object.sort_key())

    def __lt__(self, other: "Triple") -> bool:
        return self.sort_key() < other.sort_key()

    def n3(self) -> str:
        return f"{self.subject.n3()} {self.predicate.n3()} {self.object.n3()} ."


class Graph:
    """A set of triples plus the prefix map used when writing Turtle."""

    def __init__(self, triples: Iterable[Triple] = (), prefixes: Optional[dict[str, str]] = None):
        self.triples = set(triples)
        self.prefixes = dict(prefixes or {})

    def add(self, triple: Triple) -> None:
        self.triples.add(triple)

    def update(self, triples: Iterable[Triple]) -> None:
        self.triples.update(triples)

    def __len__(self) -> int:
        return len(self.triples)

    def __iter__(self) -> Iterator[Triple]:
        return iter(sorted(self.triples))

    def __contains__(self, triple: object) -> bool:
        return triple in self.triples

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self.triples == other.triples

    def __repr__(self) -> str:
        return f"Graph({len(self.triples)} triples)"

    def subjects(self) -> set[Term]:
        return {t.subject for t in self.triples}

    def match(self, s: Optional[Term] = None, p: Optional[Term] = None, o: Optional[Term] = None) -> list[Triple]:
        return [
            t for t in self
            if (s is None or t.subject == s) and (p is None or t.predicate == p) and (o is None or t.object == o)
        ]


class ParseError(ValueError):
    def __init__(self, line: int, column: int, expected: str, found: str = ""):
        self.line = line
        self.column = column
        self.expected = expected
        self.found = found
        super().__init__(f"line {line}, column {column}: expected {expected}" + (f", found {found!r}" if found else ""))


class SameUri(ValueError):
    pass


# --- escaping -------------------------------------------------------------

_STRING_ESCAPES = {'"': '\\"', "\\": "\\\\", "\n": "\\n", "\t": "\\t", "\r": "\\r"}


def _escape_string(value: str) -> str:
    return "".join(_STRING_ESCAPES.get(c, c) for c in value)


def _escape_iri(value: str) -> str:
    return "".join(c if c not in '<>"{}|^`\\' and ord(c) > 0x20 else f"\\u{ord(c):04X}" for c in value)


# --- tokenizer ------------------------------------------------------------

_PN_PREFIX = r"[A-Za-z](?:[A-Za-z0-9_.-]*[A-Za-z0-9_-])?"
_PN_LOCAL = r"[A-Za-z0-9_](?:[A-Za-z0-9_.-]*[A-Za-z0-9_-])?"
_TOKEN_SPEC = [
    ("WS", r"[ \t\r\n]+"),
    ("COMMENT", r"#[^\r\n]*"),
    ("IRI", r"<[^<>\"{}|^`\\\x00-\x20]*>"),
    ("STRING", r'"(?:[^"\\\r\n]|\\.)*"'),
    ("DTYPE", r"\^\^"),
    ("PREFIX_AT", r"@prefix(?![A-Za-z0-9-])"),
    ("LANG", r"@[a-zA-Z]+(?:-[a-zA-Z0-9]+)*"),
    ("BLANK", rf"_:{_PN_LOCAL}"),
    ("PNAME", rf"(?:{_PN_PREFIX})?:(?:{_PN_LOCAL})?"),
    ("PREFIX_KW", r"(?i:PREFIX)(?![A-Za-z0-9_:.-])"),
    ("A", r"a(?![A-Za-z0-9_:-]|\.[A-Za-z0-9_])"),
    ("PUNCT", r"[.;,]"),
]
_TOKENS = re.compile("|".join(f"(?P<{name}>{rx})" for name, rx in _TOKEN_SPEC))


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    out = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKENS.match(text, pos)
        if m is None:
            raise ParseError(line, pos - line_start + 1, "a Turtle token", text[pos : pos + 10])
        kind = m.lastgroup
        if kind not in ("WS", "COMMENT"):
            out.append(_Tok(kind, m.group(), line, pos - line_start + 1))
        chunk = m.group()
        nl = chunk.count("\n")
        if nl:
            line += nl
            line_start = pos + chunk.rfind("\n") + 1
        pos = m.end()
    out.append(_Tok("EOF", "", line, pos - line_start + 1))
    return out


_UNESCAPE = {'"': '"', "\\": "\\", "n": "\n", "t": "\t"}


class _Parser:
    def __init__(self, text: str, base: Optional[str]):
        self.toks = _tokenize(text)
        self.i = 0
        self.base = base
        self.graph = Graph()

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def take(self, *kinds: str, expected: str = "") -> _Tok:
        tok = self.toks[self.i]
        if tok.kind not in kinds:
            raise ParseError(tok.line, tok.col, expected or " or ".join(kinds), tok.text)
        self.i += 1
        return tok

    def punct(self, char: str) -> None:
        tok = self.peek()
        if tok.kind != "PUNCT" or tok.text != char:
            raise ParseError(tok.line, tok.col, repr(char), tok.text)
        self.i += 1

    def iri(self, tok: _Tok) -> str:
        raw = tok.text[1:-1]
        if not _ABSOLUTE.match(raw):
            if self.base is None:
                raise ParseError(tok.line, tok.col, "an absolute IRI (no base given)", tok.text)
            try:
                raw = urljoin(self.base, raw)
            except ValueError:
                raise ParseError(tok.line, tok.col, "a resolvable IRI", tok.text) from None
            if not _ABSOLUTE.match(raw):
                raise ParseError(tok.line, tok.col, "an absolute IRI", tok.text)
        return raw

    def pname(self, tok: _Tok) -> str:
        prefix, _, local = tok.text.partition(":")
        if prefix not in self.graph.prefixes:
            raise ParseError(tok.line, tok.col, f"a declared prefix (got {prefix!r}:)", tok.text)
        return self.graph.prefixes[prefix] + local

    def run(self) -> Graph:
        while self.peek().kind != "EOF":
            tok = self.peek()
            if tok.kind in ("PREFIX_AT", "PREFIX_KW"):
                self.i += 1
                name = self.take("PNAME", expected="a prefix name")
                if not name.text.endswith(":"):
                    raise ParseError(name.line, name.col, "a prefix name ending in ':'", name.text)
                self.graph.prefixes[name.text[:-1]] = self.iri(self.take("IRI", expected="a prefix IRI"))
                if tok.kind == "PREFIX_AT":
                    self.punct(".")
            else:
                self.statement()
        return self.graph

    def statement(self) -> None:
        tok = self.take("IRI", "PNAME", "BLANK", expected="a subject")
        subject = self.node(tok)
        while True:
            predicate = self.predicate()
            while True:
                self.graph.add(Triple(subject, predicate, self.object()))
                nxt = self.peek()
                if nxt.kind == "PUNCT" and nxt.text == ",":
                    self.i += 1
                    continue
                break
            nxt = self.peek()
            if nxt.kind == "PUNCT" and nxt.text == ";":
                while self.peek().kind == "PUNCT" and self.peek().text == ";":
                    self.i += 1
                if self.peek().kind == "PUNCT" and self.peek().text == ".":
                    break
                continue
            break
        self.punct(".")

    def node(self, tok: _Tok) -> Term:
        if tok.kind == "IRI":
            return IRI(self.iri(tok))
        if tok.kind == "PNAME":
            return IRI(self.checked(tok, self.pname(tok)))
        return BNode(tok.text[2:])

    def checked(self, tok: _Tok, iri: str) -> str:
        if not _ABSOLUTE.match(iri):
            raise ParseError(tok.line, tok.col, "a prefix expanding to an absolute IRI", tok.text)
        return iri

    def predicate(self) -> Term:
        tok = self.take("IRI", "PNAME", "A", expected="a predicate")
        if tok.kind == "A":
            return IRI(RDF_TYPE)
        return self.node(tok)

    def object(self) -> Term:
        tok = self.take("IRI", "PNAME", "BLANK", "STRING", expected="an object")
        if tok.kind != "STRING":
            return self.node(tok)
        value = self.unescape(tok)
        nxt = self.peek()
        if nxt.kind == "DTYPE":
            self.i += 1
            dt = self.take("IRI", "PNAME", expected="a datatype IRI")
            return Literal(value, datatype=self.node(dt).value)
        if nxt.kind == "LANG":
            self.i += 1
            return Literal(value, language=nxt.text[1:])
        return Literal(value)

    def unescape(self, tok: _Tok) -> str:
        body = tok.text[1:-1]
        out = []
        k = 0
        while k < len(body):
            c = body[k]
            if c == "\\":
                esc = body[k + 1]
                if esc not in _UNESCAPE:
                    raise ParseError(tok.line, tok.col + k + 1, 'one of the escapes \\" \\\\ \\n \\t', "\\" + esc)
                out.append(_UNESCAPE[esc])
                k += 2
            else:
                out.append(c)
                k += 1
        return "".join(out)


def parse_turtle(text: str, base_iri: Optional[str] = None) -> Graph:
    return _Parser(text, base_iri).run()


# --- writers --------------------------------------------------------------

_LOCAL_OK = re.compile(rf"^(?:{_PN_LOCAL})?$")


def _ntriples(graph: Graph) -> str:
    lines = sorted((t.n3() for t in graph.triples), key=lambda s: s.encode("utf-8"))
    return "".join(line + "\n" for line in lines)


def _qname(iri: str, prefixes: dict[str, str]) -> Optional[str]:
    best = None
    for prefix, ns in prefixes.items():
        if iri.startswith(ns) and _LOCAL_OK.match(iri[len(ns) :]):
            if best is None or len(ns) > len(prefixes[best]):
                best = prefix
    return None if best is None else f"{best}:{iri[len(prefixes[best]):]}"


def _turtle_term(term: Term, prefixes: dict[str, str]) -> str:
    if term.kind == "iri":
        return _qname(term.value, prefixes) or term.n3()
    if term.kind == "literal" and term.datatype:
        dt = _qname(term.datatype, prefixes) or f"<{_escape_iri(term.datatype)}>"
        return f'"{_escape_string(term.value)}"^^{dt}'
    return term.n3()


def _turtle(graph: Graph) -> str:
    prefixes = graph.prefixes
    out = [f"@prefix {p}: <{_escape_iri(ns)}> ." for p, ns in sorted(prefixes.items())]
    if out and graph.triples:
        out.append("")
    by_subject: dict[Term, dict[Term, list[Term]]] = {}
    for t in sorted(graph.triples):
        by_subject.setdefault(t.subject, {}).setdefault(t.predicate, []).append(t.object)
    for subject, preds in by_subject.items():
        parts = []
        for predicate, objects in preds.items():
            p = "a" if predicate.value == RDF_TYPE else _turtle_term(predicate, prefixes)
            parts.append(f"{p} " + " , ".join(_turtle_term(o, prefixes) for o in objects))
        out.append(f"{_turtle_term(subject, prefixes)} " + " ;\n    ".join(parts) + " .")
    return "\n".join(out) + ("\n" if out else "")


def serialize(graph: Graph, format: Kind["turtle", "ntriples"] = "turtle") -> str:
    """Write ``graph``; N-Triples output is canonical (sorted lines)."""
    if format == "ntriples":
        return _ntriples(graph)
    if format == "turtle":
        return _turtle(graph)
    raise ValueError(f"unknown format {format!r}")


MEDIA_TYPES = {"text/turtle": "turtle", "application/n-triples": "ntriples"}


# --- metadata patterns ----------------------------------------------------

def describe_link(resource: str, document: str) -> Triple:
    """State which URI names the thing and which names the document about it."""
    return Triple(IRI(resource), IRI(W3ID_303), IRI(document))


def replacement_links(old: str, new: str) -> list[Triple]:
    if old == new:
        raise SameUri(old)
    return [
        Triple(IRI(new), IRI(DCTERMS + "replaces"), IRI(old)),
        Triple(IRI(old), IRI(DCTERMS + "isReplacedBy"), IRI(new)),
    ]
