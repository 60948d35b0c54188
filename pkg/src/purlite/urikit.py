"""URI decomposition, RDF-style comparison and the path lint catalog.

Parsing follows the generic syntax regex of RFC 3986 appendix B so the
path, query and fragment survive byte for byte; only scheme and host are
case-folded. Comparison is simple string comparison after that folding
and after dropping an explicit default port, which is what RDF tooling
does with IRIs.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Literal

__all__ = [
    "CoolUri",
    "Diagnostic",
    "MalformedUri",
    "RULES",
    "TECH_EXTENSIONS",
    "parse",
    "equivalent",
    "lint",
    "format_diagnostic",
]

Profile = Literal["resource", "document"]

DEFAULT_PORTS = {"https": 443, "http": 80}
TECH_EXTENSIONS = (".php", ".html", ".htm", ".ttl", ".jsp", ".asp", ".aspx", ".cgi", ".xml", ".json")
MAX_PATH_LENGTH = 64

_GENERIC = re.compile(r"^(?:([^:/?#]+):)?(?://([^/?#]*))?([^?#]*)(?:\?([^#]*))?(?:#(.*))?$", re.DOTALL)
_SCHEME = re.compile(r"[A-Za-z][A-Za-z0-9+.-]*")
_AUTHORITY = re.compile(r"^(?:([^@]*)@)?(\[[^\]]*\]|[^:]*)(?::(\d*))?$")


class MalformedUri(ValueError):
    pass


@dataclass(frozen=True)
class CoolUri:
    scheme: str
    host: str
    port: int | None = None
    path_segments: tuple[str, ...] = ()
    query: str | None = None
    fragment: str | None = None
    userinfo: str | None = None

    @property
    def path(self) -> str:
        return "/" + "/".join(self.path_segments) if self.path_segments else ""

    @property
    def accession_id(self) -> str | None:
        return self.path_segments[-1] if self.path_segments else None

    @property
    def folders(self) -> tuple[str, ...]:
        return self.path_segments[:-1]

    def authority(self, keep_default_port: bool = True) -> str:
        out = f"{self.userinfo}@" if self.userinfo is not None else ""
        out += self.host
        if self.port is not None and (keep_default_port or DEFAULT_PORTS.get(self.scheme) != self.port):
            out += f":{self.port}"
        return out

    def serialize(self, keep_default_port: bool = True) -> str:
        out = f"{self.scheme}://{self.authority(keep_default_port)}{self.path}"
        if self.query is not None:
            out += "?" + self.query
        if self.fragment is not None:
            out += "#" + self.fragment
        return out

    def __str__(self) -> str:
        return self.serialize()


def parse(text: str) -> CoolUri:
    m = _GENERIC.match(text)
    scheme, authority, path, query, fragment = m.groups()
    if scheme is None or not _SCHEME.fullmatch(scheme):
        raise MalformedUri(f"missing or invalid scheme: {text!r}")
    if authority is None:
        raise MalformedUri(f"missing authority: {text!r}")
    am = _AUTHORITY.match(authority)
    if am is None or not am.group(2):
        raise MalformedUri(f"missing or invalid host: {text!r}")
    userinfo, host, port = am.groups()
    if any(c.isspace() for c in text):
        raise MalformedUri(f"whitespace in URI: {text!r}")
    if port == "":
        raise MalformedUri(f"empty port: {text!r}")
    return CoolUri(
        scheme=scheme.lower(),
        host=host.lower(),
        port=int(port) if port else None,
        path_segments=tuple(path[1:].split("/")) if path else (),
        query=query,
        fragment=fragment,
        userinfo=userinfo,
    )


def equivalent(a: CoolUri, b: CoolUri) -> bool:
    return a.serialize(keep_default_port=False) == b.serialize(keep_default_port=False)


@dataclass(frozen=True)
class Diagnostic:
    code: str
    severity: str
    offset: int
    length: int
    message: str

    def __str__(self) -> str:
        return format_diagnostic(self)


RULES: dict[str, tuple[str, str]] = {
    "L1": ("error", "scheme is not https; coin https URIs"),
    "L2": ("error", "uppercase character in a folder before the accession identifier"),
    "L3": ("error", "character outside the RFC 3986 unreserved set in the path"),
    "L4": ("warn", "ambiguous character (0, O, 1, I, l) in the accession identifier"),
    "L5": ("error", "trailing slash; the accession identifier must end the path"),
    "L6": ("error", "technology extension on a resource URI"),
    "L7": ("error", "fragment on a resource URI; use slash URIs with 303 instead of hash URIs"),
    "L8": ("warn", f"path longer than {MAX_PATH_LENGTH} characters"),
    "L10": ("warn", "digit run with a leading zero in the accession identifier"),
    "L11": ("warn", "explicit default port"),
    "L12": ("warn", "percent-encoded octet; RDF compares IRIs as plain strings"),
    "L13": ("warn", "underscore or dot used as a word separator; prefer hyphens"),
}

_UNRESERVED = re.compile(r"[A-Za-z0-9._~-]")
_PCT = re.compile(r"%[0-9A-Fa-f]{2}")
_LEADING_ZERO = re.compile(r"(?<![0-9])0[0-9]+")
_SEPARATOR = re.compile(r"(?<=[A-Za-z0-9])[_.](?=[A-Za-z0-9])")


def _extension(segment: str) -> str | None:
    low = segment.lower()
    for ext in TECH_EXTENSIONS:
        if low.endswith(ext) and len(low) > len(ext):
            return ext
    return None


def lint(uri: CoolUri, profile: Profile = "resource", max_path_length: int = MAX_PATH_LENGTH) -> list[Diagnostic]:
    """Check ``uri`` against the rule catalog.

    Spans are offsets into ``uri.serialize()``, which has the same length
    as the original text for ASCII input.
    """
    if profile not in ("resource", "document"):
        raise ValueError(f"unknown profile {profile!r}")
    found: list[Diagnostic] = []

    def add(code: str, offset: int, length: int, detail: str = "") -> None:
        severity, message = RULES[code]
        found.append(Diagnostic(code, severity, offset, length, f"{message}{': ' + detail if detail else ''}"))

    text = uri.serialize()
    if uri.scheme != "https":
        add("L1", 0, len(uri.scheme), uri.scheme)

    authority_start = len(uri.scheme) + 3
    if uri.port is not None and DEFAULT_PORTS.get(uri.scheme) == uri.port:
        port_text = f":{uri.port}"
        add("L11", authority_start + len(uri.authority()) - len(port_text), len(port_text), port_text)

    path_start = authority_start + len(uri.authority())
    path = uri.path
    last = len(uri.path_segments) - 1
    pos = path_start
    for i, seg in enumerate(uri.path_segments):
        pos += 1  # the slash
        if i < last and seg != seg.lower():
            add("L2", pos, len(seg), seg)
        j = 0
        while j < len(seg):
            if _PCT.match(seg, j):
                j += 3
                continue
            if _UNRESERVED.match(seg, j):
                j += 1
                continue
            k = j
            while k < len(seg) and not _UNRESERVED.match(seg, k) and not _PCT.match(seg, k):
                k += 1
            add("L3", pos + j, k - j, repr(seg[j:k]))
            j = k
        ext = _extension(seg) if i == last else None
        for m in _SEPARATOR.finditer(seg):
            if ext and m.start() == len(seg) - len(ext):
                continue
            add("L13", pos + m.start(), 1, seg)
        if i == last:
            stem = seg[: len(seg) - len(ext)] if ext else seg
            for k, c in enumerate(stem):
                if c in "0O1Il":
                    add("L4", pos + k, 1, c)
            for m in _LEADING_ZERO.finditer(stem):
                add("L10", pos + m.start(), m.end() - m.start(), m.group())
            if ext and profile == "resource":
                add("L6", pos + len(seg) - len(ext), len(ext), ext)
        pos += len(seg)

    if path.endswith("/"):
        add("L5", path_start + len(path) - 1, 1)
    if len(path) > max_path_length:
        add("L8", path_start, len(path), f"{len(path)} > {max_path_length}")
    if uri.fragment is not None and profile == "resource":
        frag_start = len(text) - len(uri.fragment) - 1
        add("L7", frag_start, len(uri.fragment) + 1)
    for m in _PCT.finditer(text):
        add("L12", m.start(), 3, m.group())

    found.sort(key=lambda d: (d.offset, d.length, int(d.code[1:])))
    return found


def format_diagnostic(d: Diagnostic) -> str:
    return f"{d.code} {d.severity} {d.offset}:{d.length} {d.message}"
