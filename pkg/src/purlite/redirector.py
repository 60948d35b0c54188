"""Rule matching, lifecycle semantics and response planning.

Everything here is pure: given a request path, the parsed Accept ranges
and an immutable :class:`RuleSet`, :func:`plan` decides status, Location,
body kind and the RDF metadata the body should carry. The server only
renders plans.

Topology of an active rule (``generic`` optional)::

    resource --303--> html                       (client prefers text/html)
    resource --303--> generic --302--> variant   (machine-readable type)
    resource --303--> variant                    (no generic document)

so a chain started at a resource sees exactly one 303, and a chain started
at a document sees none.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Literal, Optional, Sequence, Union

from .conneg import MediaRange, VariantSet, parse_accept, select
from .rdfmin import OWL, RDFS, XSD, IRI, Graph, Literal as Lit, Triple, describe_link, replacement_links

__all__ = [
    "RedirectRule",
    "ResponsePlan",
    "RuleSet",
    "Resolution",
    "AlreadyDecommissioned",
    "InvalidRule",
    "match",
    "resolve",
    "plan",
    "trace",
    "decommission",
    "expand",
    "HTML",
    "BODY_TYPES",
]

State = Literal["active", "moved", "gone"]
Kind = Literal["resource", "generic", "variant"]

HTML = "text/html"
# renderings offered for tombstones and moved notes
BODY_TYPES = VariantSet(((HTML, ""), ("text/turtle", ""), ("application/n-triples", "")), default_index=0)


class InvalidRule(ValueError):
    pass


class AlreadyDecommissioned(ValueError):
    pass


def expand(template: str, capture: str) -> str:
    return template.replace("$1", capture)


@dataclass(frozen=True)
class RedirectRule:
    pattern: str
    state: State = "active"
    html: Optional[str] = None
    generic: Optional[str] = None
    variants: VariantSet = field(default_factory=VariantSet)
    default: Optional[str] = None
    successor: Optional[str] = None
    reason: Optional[str] = None

    def __post_init__(self) -> None:
        p = self.pattern
        if not p.startswith("/"):
            raise InvalidRule(f"pattern must start with '/': {p!r}")
        if "*" in p[:-1]:
            raise InvalidRule(f"'*' is only allowed at the end of a pattern: {p!r}")
        if self.state not in ("active", "moved", "gone"):
            raise InvalidRule(f"unknown state {self.state!r}")
        if self.state == "active" and not (len(self.variants) or self.html):
            raise InvalidRule(f"active rule {p} needs a variant or an html target")
        if self.state == "moved" and not self.successor:
            raise InvalidRule(f"moved rule {p} needs a successor")
        if self.state == "gone" and not (self.reason and self.reason.strip()):
            raise InvalidRule(f"gone rule {p} needs a reason")
        for template in self.templates():
            if "$1" in template and not self.wildcard:
                raise InvalidRule(f"'$1' used but pattern {p} has no '*'")
        if self.default is not None and self.default != HTML and self.variants.index_of(self.default) is None:
            raise InvalidRule(f"default {self.default} is not one of the rule's targets")
        if self.default == HTML and not self.html:
            raise InvalidRule("default text/html without an html target")

    @property
    def wildcard(self) -> bool:
        return self.pattern.endswith("*")

    @property
    def prefix(self) -> str:
        return self.pattern[:-1] if self.wildcard else self.pattern

    def templates(self) -> list[str]:
        out = [t for t in (self.html, self.generic, self.successor) if t]
        return out + [t for _, t in self.variants.entries]

    def resource_path(self, capture: str) -> str:
        return self.prefix + capture if self.wildcard else self.pattern


@dataclass(frozen=True)
class Resolution:
    rule: RedirectRule
    capture: str
    kind: Kind
    media_type: Optional[str] = None


@dataclass(frozen=True)
class _Route:
    literal: int
    rank: int
    kind: Kind
    rule: RedirectRule
    regex: re.Pattern
    media_type: Optional[str]


def _template_regex(template: str) -> re.Pattern:
    pieces = template.split("$1")
    out = re.escape(pieces[0])
    for i, piece in enumerate(pieces[1:]):
        out += ("(?P<c>.+)" if i == 0 else "(?P=c)") + re.escape(piece)
    return re.compile(out)


_RANK = {"variant": 2, "generic": 1, "resource": 0}


class RuleSet:
    """An immutable, compiled snapshot of rules under one public base."""

    def __init__(self, rules: Sequence[RedirectRule] = (), base: str = "https://purl.example.com"):
        self.rules: tuple[RedirectRule, ...] = tuple(rules)
        self.base = base.rstrip("/")
        routes = []
        for rule in self.rules:
            rx = re.compile(re.escape(rule.prefix) + ("(?P<c>.+)" if rule.wildcard else ""))
            routes.append(_Route(len(rule.prefix), 0, "resource", rule, rx, None))
            if rule.state != "active":
                continue
            local = [("generic", rule.generic, None), ("variant", rule.html, HTML)]
            local += [("variant", t, m) for m, t in rule.variants.entries]
            for kind, template, media_type in local:
                path = self.local_path(template) if template else None
                if path is None:
                    continue
                literal = len(path) - 2 * path.count("$1")
                routes.append(_Route(literal, _RANK[kind], kind, rule, _template_regex(path), media_type))
        routes.sort(key=lambda r: (-r.literal, -r.rank))
        self.routes: tuple[_Route, ...] = tuple(routes)

    def __iter__(self):
        return iter(self.rules)

    def __len__(self) -> int:
        return len(self.rules)

    def local_path(self, uri: str) -> Optional[str]:
        """The path part of ``uri`` if it is served by this rule set, else None."""
        if uri.startswith("/"):
            return uri
        if uri.startswith(self.base + "/"):
            return uri[len(self.base):]
        return None

    def absolute(self, template_or_path: str) -> str:
        return self.base + template_or_path if template_or_path.startswith("/") else template_or_path

    def get(self, pattern: str) -> Optional[RedirectRule]:
        for rule in self.rules:
            if rule.pattern == pattern:
                return rule
        return None


def _as_ruleset(rules: Union[RuleSet, Sequence[RedirectRule]]) -> RuleSet:
    return rules if isinstance(rules, RuleSet) else RuleSet(rules)


def match(path: str, rules: Union[RuleSet, Sequence[RedirectRule]]) -> Optional[tuple[RedirectRule, str]]:
    """Longest rule pattern matching ``path``; the capture is what '*' bound."""
    for route in _as_ruleset(rules).routes:
        if route.kind != "resource":
            continue
        m = route.regex.fullmatch(path)
        if m:
            return route.rule, m.groupdict().get("c") or ""
    return None


def resolve(path: str, rules: Union[RuleSet, Sequence[RedirectRule]], kind: Optional[Kind] = None) -> Optional[Resolution]:
    """Like :func:`match`, but also recognises generic-document and variant paths.

    ``kind`` restricts the lookup to one requester kind.
    """
    for route in _as_ruleset(rules).routes:
        if kind is not None and route.kind != kind:
            continue
        m = route.regex.fullmatch(path)
        if m:
            return Resolution(route.rule, m.groupdict().get("c") or "", route.kind, route.media_type)
    return None


@dataclass
class ResponsePlan:
    status: int
    location: Optional[str] = None
    body_kind: Literal["none", "tombstone", "movedNote", "document"] = "none"
    content_type: Optional[str] = None
    metadata: Graph = field(default_factory=Graph)
    vary: bool = False
    resource: Optional[str] = None
    reason: Optional[str] = None
    kind: Optional[Kind] = None
    rule: Optional[RedirectRule] = None


def _body_type(ranges: Sequence[MediaRange]) -> str:
    return select(ranges, BODY_TYPES).media_type


def _candidates(rule: RedirectRule, with_html: bool) -> VariantSet:
    entries = ((HTML, rule.html),) if with_html and rule.html else ()
    entries += rule.variants.entries
    default = None
    if rule.default is not None:
        default = next((i for i, (m, _) in enumerate(entries) if m == rule.default), None)
    return VariantSet(entries, default)


def plan(
    path: str,
    accept: Union[str, None, Sequence[MediaRange]],
    rules: Union[RuleSet, Sequence[RedirectRule]],
    requester_kind: Optional[Kind] = None,
) -> ResponsePlan:
    """Decide the response for a GET on ``path``. Never raises for any rule outcome.

    The requester kind is inferred from the path unless given.
    """
    rules = _as_ruleset(rules)
    ranges = parse_accept(accept) if accept is None or isinstance(accept, str) else list(accept)
    hit = resolve(path, rules, requester_kind)
    if hit is None:
        return ResponsePlan(404)
    rule, capture = hit.rule, hit.capture
    resource = rules.absolute(rule.resource_path(capture))
    common = dict(resource=resource, kind=hit.kind, rule=rule)

    if rule.state == "gone":
        g = Graph([
            Triple(IRI(resource), IRI(OWL + "deprecated"), Lit("true", datatype=XSD + "boolean")),
            Triple(IRI(resource), IRI(RDFS + "comment"), Lit(rule.reason)),
        ])
        return ResponsePlan(410, body_kind="tombstone", content_type=_body_type(ranges), metadata=g,
                            vary=True, reason=rule.reason, **common)

    if rule.state == "moved":
        successor = rules.absolute(expand(rule.successor, capture))
        g = Graph(replacement_links(resource, successor)) if successor != resource else Graph()
        return ResponsePlan(301, location=successor, body_kind="movedNote", content_type=_body_type(ranges),
                            metadata=g, vary=True, **common)

    generic = rules.absolute(expand(rule.generic, capture)) if rule.generic else None

    if hit.kind == "variant":
        document = rules.absolute(rules.local_path(path) or path)
        return ResponsePlan(200, body_kind="document", content_type=hit.media_type,
                            metadata=Graph([describe_link(resource, generic or document)]), **common)

    if hit.kind == "generic":
        choice = select(ranges, _candidates(rule, with_html=False)) if len(rule.variants) else None
        if choice is None:
            return ResponsePlan(406, vary=True, **common)
        return ResponsePlan(302, location=rules.absolute(expand(choice.target, capture)), vary=True,
                            metadata=Graph([describe_link(resource, generic)]), **common)

    choice = select(ranges, _candidates(rule, with_html=True))
    if choice is None:
        return ResponsePlan(406, vary=True, **common)
    if choice.media_type == HTML:
        target = rules.absolute(expand(rule.html, capture))
    elif generic is not None:
        target = generic
    else:
        target = rules.absolute(expand(choice.target, capture))
    return ResponsePlan(303, location=target, vary=True, metadata=Graph([describe_link(resource, target)]), **common)


def trace(path: str, accept: Optional[str], rules: Union[RuleSet, Sequence[RedirectRule]], max_steps: int = 10) -> list[ResponsePlan]:
    """Follow locations that stay inside the rule set, without any network."""
    rules = _as_ruleset(rules)
    plans = []
    seen = set()
    while path is not None and path not in seen and len(plans) < max_steps:
        seen.add(path)
        p = plan(path, accept, rules)
        plans.append(p)
        path = rules.local_path(p.location) if p.location and 300 <= p.status < 400 else None
    return plans


def decommission(rule: RedirectRule, mode: Literal["moved", "gone"], argument: str) -> RedirectRule:
    """Retire an active rule: ``moved`` takes a successor template, ``gone`` a reason."""
    if rule.state != "active":
        raise AlreadyDecommissioned(f"{rule.pattern} is already {rule.state}")
    if mode == "moved":
        return replace(rule, state="moved", successor=argument)
    if mode == "gone":
        return replace(rule, state="gone", reason=argument)
    raise ValueError(f"unknown decommission mode {mode!r}")
