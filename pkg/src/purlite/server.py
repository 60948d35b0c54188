"""HTTP front end: rules-file loading, request handling, admin API.

Request handling is a plain function of (method, target, headers, body) and
the current rule snapshot, returning a :class:`Response`; the socket layer
in :class:`Handler` only copies it onto the wire. Snapshots are immutable
and replaced by a single assignment, so a request sees either the old rules
or the new ones.
"""

from __future__ import annotations

import hmac
import html
import json
import logging
import os
import re
import signal
import sys
import tempfile
import threading
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Mapping, Optional, Sequence, Union
from urllib.parse import parse_qs, quote, unquote, urlsplit

from . import idstore, rdfmin, urikit
from .conneg import VariantSet
from .erdi8 import SpaceExhausted
from .idstore import Ledger, MintStrategy, RetriesExhausted
from .rdfmin import Graph, ParseError
from .redirector import (
    HTML,
    AlreadyDecommissioned,
    InvalidRule,
    RedirectRule,
    ResponsePlan,
    RuleSet,
    decommission,
    expand,
    plan,
)

__all__ = [
    "RulesError",
    "RuleSyntaxError",
    "DuplicatePattern",
    "InvalidTemplate",
    "check_rules",
    "load_rules",
    "dump_rules",
    "ServerConfig",
    "ConfigError",
    "Response",
    "Service",
    "make_server",
    "serve",
]

log = logging.getLogger("purlite.server")

RULES_HEADER = "purlite-rules 1"
TOKEN_HEADER = "X-Purlite-Token"
FAULT_ENV = "PURLITE_FAULT_INJECT"
MAX_BODY = 1 << 20
PROBE_CAPTURE = "e42"


# rules file

class RulesError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line
        self.message = message


class RuleSyntaxError(RulesError):
    pass


class DuplicatePattern(RulesError):
    pass


class InvalidTemplate(RulesError):
    pass


_RULE_KEYS = ("html", "generic", "default", "successor", "reason")
_STATES = ("active", "moved", "gone")
_MEDIA_TYPE = re.compile(r"^[A-Za-z0-9!#$&^_.+-]+/[A-Za-z0-9!#$&^_.+-]+$")


@dataclass
class _Draft:
    line: int
    pattern: str
    state: str
    keys: dict[str, str]
    variants: list[tuple[str, str, int]] = field(default_factory=list)


def _check_template(template: str, pattern: str, line: int) -> Optional[RulesError]:
    if "$1" in template and not pattern.endswith("*"):
        return InvalidTemplate(line, f"'$1' in {template} but pattern {pattern} has no '*'")
    probe = expand(template, PROBE_CAPTURE)
    if probe.startswith("/"):
        probe = "https://purl.example.com" + probe
    try:
        urikit.parse(probe)
    except urikit.MalformedUri as exc:
        return InvalidTemplate(line, f"template {template} does not expand to a URI: {exc}")
    return None


def _shape(path: str) -> str:
    return path[:-1] + "$1" if path.endswith("*") else path


def check_rules(text: str) -> tuple[list[RedirectRule], list[RulesError]]:
    """Parse a rules file, collecting every problem instead of stopping at the first."""
    errors: list[RulesError] = []
    drafts: dict[str, _Draft] = {}
    seen_header = False
    for number, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if not seen_header:
            if line != RULES_HEADER:
                errors.append(RuleSyntaxError(number, f"first directive must be '{RULES_HEADER}'"))
                return [], errors
            seen_header = True
            continue
        fields = line.split()
        directive = fields[0]
        if directive == "rule":
            if len(fields) < 3:
                errors.append(RuleSyntaxError(number, "expected 'rule <pattern> <state> [key=value ...]'"))
                continue
            pattern, state = fields[1], fields[2]
            if state not in _STATES:
                errors.append(RuleSyntaxError(number, f"unknown state {state!r}"))
                continue
            if not pattern.startswith("/") or "*" in pattern[:-1]:
                errors.append(RuleSyntaxError(number, f"bad pattern {pattern!r}"))
                continue
            keys: dict[str, str] = {}
            for item in fields[3:]:
                key, eq, value = item.partition("=")
                if not eq or not value:
                    errors.append(RuleSyntaxError(number, f"expected key=value, got {item!r}"))
                elif key not in _RULE_KEYS:
                    errors.append(RuleSyntaxError(number, f"unknown key {key!r}"))
                elif key in keys:
                    errors.append(RuleSyntaxError(number, f"key {key!r} given twice"))
                else:
                    keys[key] = value
            if pattern in drafts:
                errors.append(DuplicatePattern(number, f"{pattern} already declared on line {drafts[pattern].line}"))
                continue
            drafts[pattern] = _Draft(number, pattern, state, keys)
        elif directive == "variant":
            if len(fields) != 4:
                errors.append(RuleSyntaxError(number, "expected 'variant <pattern> <media-type> <template>'"))
                continue
            pattern, media_type, template = fields[1:]
            draft = drafts.get(pattern)
            if draft is None:
                errors.append(RuleSyntaxError(number, f"variant for undeclared rule {pattern}"))
            elif not _MEDIA_TYPE.match(media_type):
                errors.append(RuleSyntaxError(number, f"bad media type {media_type!r}"))
            elif media_type.lower() == HTML:
                errors.append(RuleSyntaxError(number, "use html= on the rule for text/html"))
            elif any(m.lower() == media_type.lower() for m, _, _ in draft.variants):
                errors.append(RuleSyntaxError(number, f"{media_type} declared twice for {pattern}"))
            else:
                draft.variants.append((media_type, template, number))
        else:
            errors.append(RuleSyntaxError(number, f"unknown directive {directive!r}"))
    if not seen_header:
        errors.append(RuleSyntaxError(1, f"missing '{RULES_HEADER}' header"))

    rules = []
    shapes: dict[str, int] = {}
    for draft in drafts.values():
        problems = []
        templates = [(draft.keys[k], draft.line) for k in ("html", "generic", "successor") if k in draft.keys]
        templates += [(t, n) for _, t, n in draft.variants]
        for template, number in templates:
            err = _check_template(template, draft.pattern, number)
            if err:
                problems.append(err)
        reason = unquote(draft.keys["reason"]) if "reason" in draft.keys else None
        if not problems:
            try:
                rule = RedirectRule(
                    draft.pattern,
                    state=draft.state,
                    html=draft.keys.get("html"),
                    generic=draft.keys.get("generic"),
                    variants=VariantSet(tuple((m, t) for m, t, _ in draft.variants)),
                    default=draft.keys.get("default"),
                    successor=draft.keys.get("successor"),
                    reason=reason,
                )
            except (InvalidRule, ValueError) as exc:
                problems.append(RuleSyntaxError(draft.line, str(exc)))
        if problems:
            errors.extend(problems)
            continue
        rules.append(rule)
        # local routes must not shadow each other
        local = [(draft.pattern, draft.line)]
        if draft.state == "active":
            served = [(draft.keys[k], draft.line) for k in ("html", "generic") if k in draft.keys]
            served += [(t, n) for _, t, n in draft.variants]
            local += [(t, n) for t, n in served if t.startswith("/")]
        for path, number in local:
            shape = _shape(path)
            if shape in shapes and shapes[shape] != draft.line:
                errors.append(InvalidTemplate(number, f"{path} collides with a route declared on line {shapes[shape]}"))
            shapes.setdefault(shape, draft.line)
    errors.sort(key=lambda e: e.line)
    return rules, errors


def load_rules(text: str) -> list[RedirectRule]:
    """Validated rules in file order; raises the first :class:`RulesError`."""
    rules, errors = check_rules(text)
    if errors:
        raise errors[0]
    return rules


def dump_rules(rules: Sequence[RedirectRule]) -> str:
    lines = [RULES_HEADER]
    for rule in rules:
        parts = ["rule", rule.pattern, rule.state]
        # the key that defines the state comes first, provenance after
        lead = {"moved": ("successor",), "gone": ("reason",)}.get(rule.state, ())
        for key in lead + tuple(k for k in _RULE_KEYS if k not in lead):
            value = getattr(rule, key)
            if value is not None:
                parts.append(f"{key}={quote(value, safe='') if key == 'reason' else value}")
        lines.append(" ".join(parts))
        lines += [f"variant {rule.pattern} {m} {t}" for m, t in rule.variants.entries]
    return "\n".join(lines) + "\n"


# configuration

class ConfigError(ValueError):
    pass


@dataclass
class ServerConfig:
    rules: Path
    ledger: Path
    listen: str = "127.0.0.1:8080"
    doc_root: Optional[Path] = None
    admin_token: Optional[str] = None
    strict_http: bool = False
    public_base: str = "https://purl.example.com"
    machine_seed: str = "purlite"
    strategies: dict[str, MintStrategy] = field(default_factory=dict)

    @property
    def address(self) -> tuple[str, int]:
        host, sep, port = self.listen.rpartition(":")
        if not sep or not port.isdigit():
            raise ConfigError(f"listen must be host:port, got {self.listen!r}")
        return host or "127.0.0.1", int(port)

    @classmethod
    def from_dict(cls, data: Mapping, base_dir: Union[str, Path] = ".") -> "ServerConfig":
        base_dir = Path(base_dir)
        known = {"listen", "rules", "ledger", "doc_root", "admin_token", "strict_http", "public_base",
                 "machine_seed", "strategies"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        for required in ("rules", "ledger"):
            if required not in data:
                raise ConfigError(f"missing config key {required!r}")
        try:
            strategies = {name: idstore.strategy_from_dict(name, spec)
                          for name, spec in data.get("strategies", {"counter": {"kind": "counter"}}).items()}
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        token = os.environ.get("PURLITE_ADMIN_TOKEN") or data.get("admin_token") or None
        public_base = str(data.get("public_base", "https://purl.example.com")).rstrip("/")
        try:
            urikit.parse(public_base)
        except urikit.MalformedUri as exc:
            raise ConfigError(f"public_base: {exc}") from exc
        config = cls(
            rules=base_dir / data["rules"],
            ledger=base_dir / data["ledger"],
            listen=str(data.get("listen", "127.0.0.1:8080")),
            doc_root=base_dir / data["doc_root"] if data.get("doc_root") else None,
            admin_token=token,
            strict_http=bool(data.get("strict_http", False)),
            public_base=public_base,
            machine_seed=str(data.get("machine_seed", "purlite")),
            strategies=strategies,
        )
        config.address  # rejects a malformed listen value early
        return config

    @classmethod
    def load(cls, path: Union[str, Path]) -> "ServerConfig":
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: expected a JSON object")
        return cls.from_dict(data, path.parent)


# rendering

@dataclass
class Response:
    status: int
    headers: list[tuple[str, str]] = field(default_factory=list)
    body: bytes = b""
    refuse: bool = False

    def header(self, name: str) -> Optional[str]:
        for key, value in self.headers:
            if key.lower() == name.lower():
                return value
        return None


CONTENT_TYPES = {
    "text/html": "text/html; charset=utf-8",
    "text/plain": "text/plain; charset=utf-8",
}
RDF_TYPES = ("text/turtle", "application/n-triples", "application/ld+json")


def _text(status: int, message: str, extra: Sequence[tuple[str, str]] = ()) -> Response:
    return Response(status, [("Content-Type", CONTENT_TYPES["text/plain"]), *extra], (message + "\n").encode())


def render_jsonld(graph: Graph) -> str:
    nodes: dict[str, dict] = {}
    for t in graph:
        node = nodes.setdefault(t.subject.n3(), {"@id": t.subject.value if t.subject.kind == "iri" else t.subject.n3()})
        obj = t.object
        if obj.kind == "iri":
            value = {"@id": obj.value}
        elif obj.kind == "bnode":
            value = {"@id": obj.n3()}
        else:
            value = {"@value": obj.value}
            if obj.language:
                value["@language"] = obj.language
            elif obj.datatype:
                value["@type"] = obj.datatype
        key = "@type" if t.predicate.value == rdfmin.RDF_TYPE and obj.kind == "iri" else t.predicate.value
        if key == "@type":
            node.setdefault("@type", []).append(obj.value)
        else:
            node.setdefault(key, []).append(value)
    return json.dumps(list(nodes.values()), indent=2, sort_keys=True) + "\n"


def _html_page(title: str, paragraphs: Sequence[str], graph: Graph) -> str:
    rows = "".join(
        f"<tr><td>{html.escape(t.subject.n3())}</td><td>{html.escape(t.predicate.n3())}</td>"
        f"<td>{html.escape(t.object.n3())}</td></tr>\n"
        for t in graph
    )
    body = "".join(f"<p>{p}</p>\n" for p in paragraphs)
    table = f"<table>\n{rows}</table>\n" if rows else ""
    return (
        "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\">"
        f"<title>{html.escape(title)}</title></head>\n<body>\n<h1>{html.escape(title)}</h1>\n{body}{table}</body></html>\n"
    )


def render_graph(graph: Graph, media_type: str, title: str = "", paragraphs: Sequence[str] = ()) -> bytes:
    if media_type == "text/turtle":
        return rdfmin.serialize(graph, "turtle").encode()
    if media_type == "application/n-triples":
        return rdfmin.serialize(graph, "ntriples").encode()
    if media_type == "application/ld+json":
        return render_jsonld(graph).encode()
    return _html_page(title, paragraphs, graph).encode()


# service

class Service:
    """Request handling over an atomically swappable rule snapshot."""

    def __init__(self, config: ServerConfig):
        self.config = config
        try:
            self.rules_text = config.rules.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"{config.rules}: {exc}") from exc
        rules, errors = check_rules(self.rules_text)
        if errors:
            raise ConfigError("\n".join(f"{config.rules}:{e.line}: {e.message}" for e in errors))
        self.snapshot = RuleSet(rules, config.public_base)
        try:
            self.ledger = Ledger(config.ledger)
        except (OSError, idstore.LedgerError) as exc:
            raise ConfigError(str(exc)) from exc
        self._writer = threading.Lock()

    # public entry point

    def handle(self, method: str, target: str, headers: Mapping[str, str], body: bytes = b"") -> Response:
        headers = {k.lower(): v for k, v in headers.items()}
        parts = urlsplit(target)
        path = parts.path or "/"
        if headers.get("x-forwarded-proto", "").lower() == "http":
            if self.config.strict_http:
                return Response(0, refuse=True)
            return _text(301, "use https", [("Location", self.config.public_base + target)])
        if path == "/healthz":
            return _text(200, "ok") if method in ("GET", "HEAD") else self._not_allowed()
        if path == "/admin" or path.startswith("/admin/"):
            return self._admin(method, path, headers, body)
        if method not in ("GET", "HEAD"):
            return self._not_allowed()
        snapshot = self.snapshot
        return self.render(plan(path, headers.get("accept"), snapshot), snapshot, path)

    @staticmethod
    def _not_allowed() -> Response:
        return _text(405, "method not allowed", [("Allow", "GET, HEAD")])

    def render(self, p: ResponsePlan, snapshot: RuleSet, path: str) -> Response:
        headers = [("Vary", "Accept")] if p.vary else []
        if p.status == 404:
            return _text(404, "not found")
        if p.status == 406:
            offered = [HTML] if p.rule.html else []
            offered += p.rule.variants.media_types()
            return _text(406, "acceptable types: " + ", ".join(offered), headers)
        if p.status in (302, 303):
            return Response(p.status, headers + [("Location", p.location), ("Content-Length", "0")])
        if p.body_kind == "tombstone":
            reason = html.escape(p.reason or "")
            body = render_graph(p.metadata, p.content_type, "410 Gone", [
                f"<code>{html.escape(p.resource)}</code> has been deprecated.", reason])
            return Response(410, headers + [("Content-Type", CONTENT_TYPES.get(p.content_type, p.content_type))], body)
        if p.body_kind == "movedNote":
            loc = html.escape(p.location)
            body = render_graph(p.metadata, p.content_type, "301 Moved Permanently", [
                f"<code>{html.escape(p.resource)}</code> has moved.",
                f"Kindly use <a href=\"{loc}\">{loc}</a> for future pointers."])
            return Response(301, headers + [("Location", p.location),
                                             ("Content-Type", CONTENT_TYPES.get(p.content_type, p.content_type))], body)
        return self._document(p, path, headers)

    def _hosted(self, path: str) -> Optional[Path]:
        root = self.config.doc_root
        if root is None:
            return None
        candidate = (root / unquote(path).lstrip("/")).resolve()
        try:
            candidate.relative_to(root.resolve())
        except ValueError:
            return None
        return candidate if candidate.is_file() else None

    def _document(self, p: ResponsePlan, path: str, headers: list) -> Response:
        hosted = self._hosted(path)
        media_type = p.content_type
        graph = Graph(p.metadata)
        if media_type in RDF_TYPES:
            if hosted is not None and hosted.suffix in (".ttl", ".nt"):
                try:
                    graph.update(rdfmin.parse_turtle(hosted.read_text(encoding="utf-8"), self.config.public_base + path))
                except (OSError, ParseError) as exc:
                    log.error("cannot read %s: %s", hosted, exc)
                    return _text(500, "hosted document is unreadable")
            body = render_graph(graph, media_type)
        elif hosted is not None:
            body = hosted.read_bytes()
        elif media_type == HTML:
            resource = html.escape(p.resource)
            body = render_graph(graph, HTML, p.resource, [f"A document about <code>{resource}</code>."])
        else:
            return _text(404, "document not hosted here")
        return Response(200, headers + [("Content-Type", CONTENT_TYPES.get(media_type, media_type))], body)

    # admin

    def _admin(self, method: str, path: str, headers: Mapping[str, str], body: bytes) -> Response:
        token = self.config.admin_token
        if not token:
            return _text(404, "not found")
        given = headers.get(TOKEN_HEADER.lower(), "")
        if not hmac.compare_digest(given.encode(), token.encode()):
            return _text(401, "bad or missing token")
        routes = {
            ("GET", "/admin/rules"): self._get_rules,
            ("PUT", "/admin/rules"): self._put_rules,
            ("POST", "/admin/decommission"): self._decommission,
            ("POST", "/admin/mint"): self._mint,
        }
        handler = routes.get((method, path))
        if handler is None:
            if any(p == path for _, p in routes):
                return _text(405, "method not allowed")
            return _text(404, "not found")
        return handler(body)

    def _get_rules(self, body: bytes) -> Response:
        return _text(200, self.rules_text.rstrip("\n"))

    def _swap(self, text: str) -> Optional[Response]:
        """Validate, persist and install ``text``. Caller holds the writer lock."""
        rules, errors = check_rules(text)
        if errors:
            return _text(422, "\n".join(str(e) for e in errors))
        fd, tmp = tempfile.mkstemp(dir=self.config.rules.parent, prefix=".rules-")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                fh.write(text)
                fh.flush()
                os.fsync(fh.fileno())
            os.replace(tmp, self.config.rules)
        except OSError:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        self.snapshot, self.rules_text = RuleSet(rules, self.config.public_base), text
        return None

    def _put_rules(self, body: bytes) -> Response:
        try:
            text = body.decode("utf-8")
        except UnicodeDecodeError:
            return _text(422, "line 1: rules must be UTF-8")
        with self._writer:
            failed = self._swap(text)
        return failed or _text(200, "OK")

    def _decommission(self, body: bytes) -> Response:
        form = _form(body)
        pattern, mode = form.get("pattern"), form.get("mode")
        argument = form.get("target") if mode == "moved" else form.get("reason")
        if not pattern or mode not in ("moved", "gone") or not argument:
            return _text(422, "need pattern, mode=moved with target, or mode=gone with reason")
        with self._writer:
            snapshot = self.snapshot
            rule = snapshot.get(pattern)
            if rule is None:
                return _text(404, f"no rule {pattern}")
            try:
                replacement = decommission(rule, mode, argument)
            except AlreadyDecommissioned as exc:
                return _text(409, str(exc))
            except (InvalidRule, ValueError) as exc:
                return _text(422, str(exc))
            rules = [replacement if r is rule else r for r in snapshot.rules]
            failed = self._swap(dump_rules(rules))
            if failed:
                return failed
            if not rule.wildcard:
                accession = rule.pattern.rstrip("/").rsplit("/", 1)[-1]
                if accession in self.ledger.issued:
                    self.ledger.decommission(accession)
        return _text(200, f"{pattern} {mode}")

    def _mint(self, body: bytes) -> Response:
        form = _form(body, multi=True)
        name = (form.get("strategy") or [""])[0]
        strategy = self.config.strategies.get(name)
        if strategy is None:
            return _text(422, f"unknown strategy {name!r}")
        try:
            with self._writer:
                identifier = idstore.mint(strategy, self.ledger, fields=form.get("field", []),
                                          machine_seed=self.config.machine_seed)
        except (SpaceExhausted, RetriesExhausted) as exc:
            return _text(409, str(exc))
        except ValueError as exc:
            return _text(422, str(exc))
        if os.environ.get(FAULT_ENV) == "after-journal":
            # test hook: die after the journal write, before anyone hears of the id
            os._exit(70)
        return _text(200, identifier)


def _form(body: bytes, multi: bool = False) -> dict:
    parsed = parse_qs(body.decode("utf-8", errors="replace"), keep_blank_values=True)
    return parsed if multi else {k: v[0] for k, v in parsed.items()}


# socket layer

class Handler(BaseHTTPRequestHandler):
    server_version = "purlite"
    service: Service

    def _dispatch(self) -> None:
        length = self.headers.get("Content-Length")
        body = b""
        if length:
            if not length.isdigit() or int(length) > MAX_BODY:
                self._send(_text(413, "body too large"))
                return
            body = self.rfile.read(int(length))
        try:
            response = self.server.service.handle(self.command, self.path, dict(self.headers.items()), body)
        except Exception:
            log.exception("unhandled error for %s %s", self.command, self.path)
            response = _text(500, "internal error")
        if response.refuse:
            self.close_connection = True
            return
        self._send(response)

    def _send(self, response: Response) -> None:
        self.send_response(response.status)
        for key, value in response.headers:
            self.send_header(key, value)
        if response.header("Content-Length") is None:
            self.send_header("Content-Length", str(len(response.body)))
        self.end_headers()
        if self.command != "HEAD" and response.body:
            self.wfile.write(response.body)

    do_GET = do_HEAD = do_PUT = do_POST = do_DELETE = do_PATCH = do_OPTIONS = _dispatch

    def log_message(self, format: str, *args) -> None:
        log.info("%s %s", self.address_string(), format % args)


class PurliteHTTPServer(ThreadingHTTPServer):
    daemon_threads = True
    # the socketserver default of 5 resets connections under modest bursts
    request_queue_size = 128

    def __init__(self, address, service: Service):
        self.service = service
        super().__init__(address, Handler)

    @property
    def url(self) -> str:
        host, port = self.server_address[:2]
        return f"http://{host}:{port}"


def make_server(config: ServerConfig) -> PurliteHTTPServer:
    """Bind (port 0 picks a free port) without starting the loop."""
    return PurliteHTTPServer(config.address, Service(config))


def serve(config_path: Union[str, Path], stderr=None) -> int:
    """Run until SIGINT/SIGTERM. Returns 0 on clean shutdown, 2 if loading fails."""
    stderr = stderr or sys.stderr
    try:
        config = ServerConfig.load(config_path)
        httpd = make_server(config)
    except (ConfigError, OSError) as exc:
        print(f"purlite serve: {exc}", file=stderr)
        return 2
    stop = lambda *_: threading.Thread(target=httpd.shutdown, daemon=True).start()
    if threading.current_thread() is threading.main_thread():
        signal.signal(signal.SIGTERM, stop)
    log.info("serving %s on %s", config.public_base, httpd.url)
    try:
        httpd.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        httpd.server_close()
    return 0
