"""Accept-header parsing and variant selection."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional, Sequence

__all__ = ["MediaRange", "VariantSet", "Selection", "parse_accept", "select", "acceptable", "quality"]

_TOKEN = r"[!#$%&'*+.^_`|~0-9A-Za-z-]+"
_RANGE = re.compile(rf"^({_TOKEN})/({_TOKEN})$")
_QVALUE = re.compile(r"^(?:0(?:\.[0-9]{0,3})?|1(?:\.0{0,3})?)$")


@dataclass(frozen=True)
class MediaRange:
    type: str
    subtype: str
    q: float = 1.0

    def __post_init__(self) -> None:
        if self.type == "*" and self.subtype != "*":
            raise ValueError("'*' type requires '*' subtype")
        if not 0.0 <= self.q <= 1.0:
            raise ValueError(f"q out of range: {self.q}")

    @property
    def specificity(self) -> int:
        if self.type == "*":
            return 0
        return 1 if self.subtype == "*" else 2

    def matches(self, media_type: str) -> bool:
        t, _, s = media_type.lower().partition("/")
        return self.type in ("*", t) and self.subtype in ("*", s)

    def __str__(self) -> str:
        return f"{self.type}/{self.subtype}" + ("" if self.q == 1.0 else f";q={self.q:g}")


ANY = MediaRange("*", "*", 1.0)


def _parse_element(element: str) -> Optional[MediaRange]:
    parts = [p.strip() for p in element.split(";")]
    m = _RANGE.match(parts[0])
    if not m:
        return None
    type_, subtype = m.group(1).lower(), m.group(2).lower()
    if type_ == "*" and subtype != "*":
        return None
    q = 1.0
    for param in parts[1:]:
        name, eq, value = param.partition("=")
        if not eq:
            return None
        if name.strip().lower() == "q":
            value = value.strip()
            if not _QVALUE.match(value):
                return None
            q = float(value)
            # accept-ext parameters after q are not used for matching
            break
    return MediaRange(type_, subtype, q)


def parse_accept(header: Optional[str]) -> list[MediaRange]:
    """Parse an Accept header; never raises.

    An absent or blank header means ``*/*``. Malformed elements are dropped.
    Ranges come back sorted by descending q, header order kept among equals.
    """
    if header is None or not header.strip():
        return [ANY]
    ranges = []
    for element in header.split(","):
        if not element.strip():
            continue
        parsed = _parse_element(element)
        if parsed is not None:
            ranges.append(parsed)
    ranges.sort(key=lambda r: -r.q)
    return ranges


def quality(ranges: Sequence[MediaRange], media_type: str) -> tuple[float, int]:
    """q-value and specificity the most specific matching range assigns; (0, -1) if none match."""
    best: Optional[MediaRange] = None
    for r in ranges:
        if r.matches(media_type) and (best is None or r.specificity > best.specificity):
            best = r
    if best is None:
        return 0.0, -1
    return best.q, best.specificity


def acceptable(ranges: Sequence[MediaRange], media_type: str) -> bool:
    return quality(ranges, media_type.split(";")[0].strip())[0] > 0


@dataclass(frozen=True)
class VariantSet:
    entries: tuple[tuple[str, str], ...] = ()
    default_index: Optional[int] = None

    def __post_init__(self) -> None:
        seen = set()
        for media_type, _ in self.entries:
            m = _RANGE.match(media_type)
            if not m or "*" in media_type:
                raise ValueError(f"variant media type must be concrete: {media_type!r}")
            if media_type.lower() in seen:
                raise ValueError(f"duplicate variant media type {media_type!r}")
            seen.add(media_type.lower())
        if self.default_index is not None and not 0 <= self.default_index < len(self.entries):
            raise ValueError("default_index out of range")

    def __len__(self) -> int:
        return len(self.entries)

    def media_types(self) -> list[str]:
        return [m for m, _ in self.entries]

    def index_of(self, media_type: str) -> Optional[int]:
        for i, (m, _) in enumerate(self.entries):
            if m.lower() == media_type.lower():
                return i
        return None


@dataclass(frozen=True)
class Selection:
    index: int
    media_type: str
    target: str
    q: float
    fallback: bool = field(default=False)


def select(ranges: Sequence[MediaRange], variants: VariantSet) -> Optional[Selection]:
    """Pick the variant the client prefers.

    Highest q wins, then the specificity of the range that matched, then
    variant order. Returns the default variant flagged as ``fallback`` when
    nothing is acceptable, or None (not acceptable) without a default.
    """
    if not len(variants):
        raise ValueError("empty variant set")
    best: Optional[tuple[float, int, int]] = None
    for i, (media_type, _) in enumerate(variants.entries):
        q, spec = quality(ranges, media_type)
        if q <= 0:
            continue
        key = (q, spec, -i)
        if best is None or key > best:
            best = key
    if best is not None:
        q, _, neg_i = best
        media_type, target = variants.entries[-neg_i]
        return Selection(-neg_i, media_type, target, q)
    if variants.default_index is not None:
        media_type, target = variants.entries[variants.default_index]
        return Selection(variants.default_index, media_type, target, 0.0, fallback=True)
    return None
