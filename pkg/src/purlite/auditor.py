"""Dereference a URI hop by hop and check the chain against publishing practice.

Fetching and judging are separate: :func:`audit` records hops through a
:class:`Fetcher`, :func:`evaluate` turns a recorded chain into findings and
never touches the network, so every check can be exercised offline.

Codes::

    C1  insecure-hop           a hop uses http
    C2  multi-303              more than one 303 in the chain
    C3  no-303                 no 303 at all (warn; error with strict)
    C4  content-type-mismatch  final type not acceptable, or body does not parse as it
    C5  subject-absent         audited URI is not a subject of the final graph
    C6  link-absent            no resource/document link triple
    C7  loop/too-long          a URI repeats or the hop budget ran out
    C8  stale-301              subjects still use a URI that answered 301
    C9  empty-tombstone        final 410 without a body
    C10 missing-replacement    a 301 body lacks the dcterms replaces/isReplacedBy pair
"""

from __future__ import annotations

import http.client
from dataclasses import dataclass
from typing import Mapping, Optional, Protocol, Sequence
from urllib.parse import urljoin, urlsplit

from . import rdfmin, urikit
from .conneg import acceptable, parse_accept
from .rdfmin import DCTERMS, IRI, Graph, ParseError

__all__ = [
    "Hop",
    "Finding",
    "ChainReport",
    "Fetcher",
    "HttpFetcher",
    "audit",
    "evaluate",
    "report_render",
    "SEVERITIES",
]

SEVERITIES = ("error", "warn", "info")
LINK_PREDICATES = {
    "https://w3id.org/303",
    "http://www.w3.org/2007/05/powder-s#describedby",
    "https://www.w3.org/2007/05/powder-s#describedby",
}
ABOUT = {"https://schema.org/about", "http://schema.org/about"}


@dataclass(frozen=True)
class Hop:
    uri: str
    status: int
    location: Optional[str] = None
    content_type: Optional[str] = None
    body: bytes = b""
    error: Optional[str] = None

    @property
    def media_type(self) -> Optional[str]:
        if not self.content_type:
            return None
        return self.content_type.split(";")[0].strip().lower()

    @property
    def redirect(self) -> bool:
        return 300 <= self.status < 400 and self.location is not None


@dataclass(frozen=True)
class Finding:
    code: str
    severity: str
    hop: Optional[int]
    message: str

    @property
    def number(self) -> int:
        return int(self.code[1:])


@dataclass
class ChainReport:
    uri: str
    accept: str
    hops: list[Hop]
    findings: list[Finding]
    final_graph: Optional[Graph] = None

    @property
    def errors(self) -> list[Finding]:
        return [f for f in self.findings if f.severity == "error"]

    @property
    def network_error(self) -> Optional[str]:
        return next((h.error for h in self.hops if h.error), None)

    def codes(self, severity: Optional[str] = None) -> set[str]:
        return {f.code for f in self.findings if severity is None or f.severity == severity}


class Fetcher(Protocol):
    def fetch(self, uri: str, accept: str) -> Hop: ...


class HttpFetcher:
    """One GET per call, never following redirects.

    ``routes`` maps an origin such as ``https://purl.example.com`` to the
    address that actually serves it (``http://127.0.0.1:8080``); the Host
    header and the recorded hop URI keep the public origin, and
    X-Forwarded-Proto carries the public scheme.
    """

    def __init__(self, timeout: float = 10.0, routes: Optional[Mapping[str, str]] = None):
        self.timeout = timeout
        self.routes = {k.rstrip("/"): v.rstrip("/") for k, v in (routes or {}).items()}

    def fetch(self, uri: str, accept: str) -> Hop:
        parts = urlsplit(uri)
        origin = f"{parts.scheme}://{parts.netloc}"
        target = urlsplit(self.routes.get(origin, origin))
        conn_cls = http.client.HTTPSConnection if target.scheme == "https" else http.client.HTTPConnection
        path = (parts.path or "/") + (f"?{parts.query}" if parts.query else "")
        headers = {"Host": parts.netloc, "Accept": accept}
        if origin in self.routes:
            # behave like a TLS-terminating proxy in front of the routed server
            headers["X-Forwarded-Proto"] = parts.scheme
        conn = conn_cls(target.netloc, timeout=self.timeout)
        try:
            conn.request("GET", path, headers=headers)
            resp = conn.getresponse()
            body = resp.read()
        except (OSError, http.client.HTTPException) as exc:
            return Hop(uri, 0, error=f"{type(exc).__name__}: {exc}")
        finally:
            conn.close()
        location = resp.getheader("Location")
        return Hop(uri, resp.status, urljoin(uri, location) if location else None,
                   resp.getheader("Content-Type"), body)


def audit(uri: str, accept: str = "text/turtle", max_hops: int = 10, fetcher: Optional[Fetcher] = None,
          strict: bool = False) -> ChainReport:
    """Follow ``uri`` manually, then :func:`evaluate` the recorded chain."""
    urikit.parse(uri)
    fetcher = fetcher or HttpFetcher()
    hops: list[Hop] = []
    seen: set[str] = set()
    current: Optional[str] = uri
    while current is not None and current not in seen and len(hops) < max_hops:
        seen.add(current)
        hop = fetcher.fetch(current, accept)
        hops.append(hop)
        current = hop.location if hop.redirect and hop.error is None else None
    return evaluate(uri, accept, hops, max_hops=max_hops, strict=strict)


def _parse(hop: Hop) -> Optional[Graph]:
    fmt = rdfmin.MEDIA_TYPES.get(hop.media_type or "")
    if fmt is None:
        return None
    return rdfmin.parse_turtle(hop.body.decode("utf-8"), hop.uri)


def _has_link(graph: Graph, resource: str) -> bool:
    for t in graph:
        if t.predicate.value in LINK_PREDICATES and t.subject == IRI(resource) and t.object.kind == "iri":
            return True
        if t.predicate.value in ABOUT and t.object == IRI(resource) and t.subject.kind == "iri":
            return True
    return False


def evaluate(uri: str, accept: str, hops: Sequence[Hop], max_hops: int = 10, strict: bool = False) -> ChainReport:
    """Findings for a recorded chain; deterministic in its inputs."""
    if not hops:
        raise ValueError("a chain has at least one hop")
    findings: list[Finding] = []
    add = lambda code, severity, hop, message: findings.append(Finding(code, severity, hop, message))

    for i, hop in enumerate(hops):
        if urlsplit(hop.uri).scheme.lower() == "http":
            add("C1", "error", i, f"hop uses http: {hop.uri}")

    see_other = [i for i, h in enumerate(hops) if h.status == 303]
    if len(see_other) > 1:
        add("C2", "error", see_other[1], f"{len(see_other)} 303 redirects in one chain")

    uris = [h.uri for h in hops]
    repeated = next((i for i, u in enumerate(uris) if u in uris[:i]), None)
    last = hops[-1]
    if repeated is not None:
        add("C7", "error", repeated, f"redirect loop back to {uris[repeated]}")
    elif last.redirect and last.location in uris:
        add("C7", "error", len(hops) - 1, f"redirect loop back to {last.location}")
    elif last.redirect and len(hops) >= max_hops:
        add("C7", "error", len(hops) - 1, f"more than {max_hops} hops")

    moved = [i for i, h in enumerate(hops) if h.status == 301]
    for i in moved:
        hop = hops[i]
        pair = hop.location and hop.location != hop.uri and set(rdfmin.replacement_links(hop.uri, hop.location))
        try:
            note = _parse(hop)
        except (ParseError, UnicodeDecodeError):
            note = None
        if not pair or note is None or not pair <= set(note):
            add("C10", "warn", i, f"301 body does not state {DCTERMS}replaces/isReplacedBy")

    final = len(hops) - 1
    graph: Optional[Graph] = None
    if last.error:
        note = f"not evaluated: {last.error}"
        for code in ("C3", "C4", "C5", "C6", "C8"):
            add(code, "info", final, note)
    elif last.status == 410:
        if last.body.strip():
            add("C9", "info", final, "tombstone explains the deprecation")
        else:
            add("C9", "error", final, "410 without a human-readable explanation")
        for code in ("C3", "C4", "C5", "C6", "C8"):
            add(code, "info", final, "not evaluated: resource is gone")
    elif last.status != 200:
        for code in ("C3", "C4", "C5", "C6", "C8"):
            add(code, "info", final, f"not evaluated: final status {last.status}")
    else:
        if not see_other:
            add("C3", "error" if strict else "warn", None, "no 303: resource and document are not distinguished")
        ranges = parse_accept(accept)
        if not last.media_type or not acceptable(ranges, last.media_type):
            add("C4", "error", final, f"got {last.content_type or 'no Content-Type'} for Accept: {accept}")
        skipped = f"not evaluated: {last.media_type} body is not parsed"
        try:
            graph = _parse(last)
        except (ParseError, UnicodeDecodeError) as exc:
            add("C4", "error", final, f"body does not parse as {last.media_type}: {exc}")
            skipped = "not evaluated: no graph"
        if graph is None:
            for code in ("C5", "C6", "C8"):
                add(code, "info", final, skipped)
        else:
            subjects = {t.subject for t in graph}
            if IRI(uri) not in subjects:
                add("C5", "error", final, f"{uri} is not a subject of the final document")
            if not _has_link(graph, uri):
                add("C6", "error", final, "no w3id.org/303, schema:about or wdrs:describedby link for the resource")
            stale = {hops[i].uri for i in range(moved[-1] + 1)} if moved else set()
            used = sorted(s.value for s in subjects if s.kind == "iri" and s.value in stale)
            if used:
                add("C8", "warn", final, f"document still uses pre-301 URI {used[0]}")

    findings.sort(key=lambda f: (f.number, -1 if f.hop is None else f.hop))
    return ChainReport(uri, accept, list(hops), findings, graph)


def report_render(report: ChainReport, format: str = "text") -> str:
    if format == "lines":
        return "".join(
            f"{f.code} {f.severity} {'-' if f.hop is None else f.hop} {f.message}\n" for f in report.findings
        )
    if format != "text":
        raise ValueError(f"unknown format {format!r}")
    out = [f"audit {report.uri} (Accept: {report.accept})"]
    for i, hop in enumerate(report.hops):
        if hop.error:
            out.append(f"  {i}  ERR  {hop.uri}  {hop.error}")
            continue
        line = f"  {i}  {hop.status}  {hop.uri}"
        if hop.location:
            line += f"  -> {hop.location}"
        elif hop.content_type:
            line += f"  [{hop.content_type}]"
        out.append(line)
    for f in report.findings:
        where = "" if f.hop is None else f" (hop {f.hop})"
        out.append(f"{f.code} {f.severity}{where}: {f.message}")
    if not any(f.severity in ("error", "warn") for f in report.findings):
        out.append("OK")
    return "\n".join(out) + "\n"
