import pytest
from hypothesis import given, settings, strategies as st

from purlite.conneg import VariantSet
from purlite.rdfmin import DCTERMS, IRI, Graph, Triple, W3ID_303, describe_link
from purlite.redirector import (
    AlreadyDecommissioned,
    InvalidRule,
    RedirectRule,
    RuleSet,
    decommission,
    match,
    plan,
    resolve,
    trace,
)

BASE = "https://purl.example.com"

# page/document topology with external targets, as a w3id-style config would write it
A9_EXTERNAL = RedirectRule(
    "/a9/*",
    html="https://sys.example.com/page/$1.html",
    generic="https://sys.example.com/doc/$1",
    variants=VariantSet((("text/turtle", "https://sys.example.com/doc/$1.ttl"),)),
)

# same topology with every document served under the public base
A9 = RedirectRule(
    "/a9/*",
    html="/a9/page/$1.html",
    generic="/a9/doc/$1",
    variants=VariantSet((
        ("text/turtle", "/a9/doc/$1.ttl"),
        ("application/n-triples", "/a9/doc/$1.nt"),
    )),
)
A9_RULES = RuleSet([A9], BASE)


def test_match_capture():
    rule, capture = match("/a9/e42", [A9_EXTERNAL])
    assert rule is A9_EXTERNAL and capture == "e42"


def test_match_no_match():
    assert match("/zz/1", [A9_EXTERNAL]) is None


def test_match_longest_pattern_wins():
    short = RedirectRule("/a9/*", html="https://x.example/$1")
    long = RedirectRule("/a9/doc/*", html="https://y.example/$1")
    for order in ([short, long], [long, short]):
        rule, capture = match("/a9/doc/e42", order)
        assert rule is long and capture == "e42"


def test_match_exact_pattern():
    rule = RedirectRule("/about", html="https://x.example/about")
    assert match("/about", [rule]) == (rule, "")
    assert match("/about/more", [rule]) is None


def test_star_needs_nonempty_capture():
    assert match("/a9/", [A9_EXTERNAL]) is None


def test_html_branch():
    p = plan("/a9/e42", "text/html", [A9_EXTERNAL])
    assert (p.status, p.location) == (303, "https://sys.example.com/page/e42.html")
    assert p.body_kind == "none"


def test_machine_branch_two_steps():
    p = plan("/a9/e42", "text/turtle", A9_RULES)
    assert (p.status, p.location) == (303, BASE + "/a9/doc/e42")
    p2 = plan("/a9/doc/e42", "text/turtle", A9_RULES)
    assert (p2.status, p2.location) == (302, BASE + "/a9/doc/e42.ttl")
    p3 = plan("/a9/doc/e42.ttl", "text/turtle", A9_RULES)
    assert (p3.status, p3.body_kind, p3.content_type) == (200, "document", "text/turtle")


def test_external_generic_is_a_single_hop():
    p = plan("/a9/e42", "text/turtle", [A9_EXTERNAL])
    assert (p.status, p.location) == (303, "https://sys.example.com/doc/e42")


def test_no_generic_goes_straight_to_variant():
    rule = RedirectRule("/b1/*", variants=VariantSet((("text/turtle", "/b1/doc/$1.ttl"),)))
    chain = trace("/b1/e7", "text/turtle", RuleSet([rule], BASE))
    assert [p.status for p in chain] == [303, 200]
    assert chain[0].location == BASE + "/b1/doc/e7.ttl"


def test_nothing_acceptable():
    assert plan("/a9/e42", "image/png", A9_RULES).status == 406
    with_default = RedirectRule("/a9/*", html=A9.html, generic=A9.generic, variants=A9.variants,
                                default="text/turtle")
    p = plan("/a9/e42", "image/png", [with_default])
    assert (p.status, p.location) == (303, BASE + "/a9/doc/e42")


def test_gone_plan():
    gone = decommission(A9, "gone", "entity split; human review required")
    p = plan("/a9/e42", "text/html", [gone])
    assert (p.status, p.body_kind, p.content_type) == (410, "tombstone", "text/html")
    assert p.reason == "entity split; human review required"
    assert any(t.object.value == p.reason for t in p.metadata)
    assert plan("/a9/e42", "text/turtle", [gone]).content_type == "text/turtle"
    assert plan("/a9/e42", "image/png", [gone]).content_type == "text/html"


def test_moved_plan():
    moved = decommission(A9, "moved", "/b1/$1")
    p = plan("/a9/e42", "text/turtle", RuleSet([moved], BASE))
    assert (p.status, p.location, p.body_kind) == (301, BASE + "/b1/e42", "movedNote")
    old, new = IRI(BASE + "/a9/e42"), IRI(BASE + "/b1/e42")
    assert p.metadata == Graph([
        Triple(new, IRI(DCTERMS + "replaces"), old),
        Triple(old, IRI(DCTERMS + "isReplacedBy"), new),
    ])


def test_moved_rule_no_longer_serves_documents():
    moved = decommission(A9, "moved", "/b1/$1")
    p = plan("/a9/doc/e42.ttl", "text/turtle", RuleSet([moved], BASE))
    assert (p.status, p.location) == (301, BASE + "/b1/doc/e42.ttl")


def test_unknown_path_is_404():
    p = plan("/zz/1", None, A9_RULES)
    assert (p.status, p.body_kind, p.location) == (404, "none", None)


def test_active_metadata_has_describe_link():
    p = plan("/a9/e42", "text/turtle", A9_RULES)
    assert describe_link(BASE + "/a9/e42", BASE + "/a9/doc/e42") in p.metadata
    doc = plan("/a9/doc/e42.ttl", "text/turtle", A9_RULES)
    assert describe_link(BASE + "/a9/e42", BASE + "/a9/doc/e42") in doc.metadata


def test_requester_kind_restricts_lookup():
    assert resolve("/a9/doc/e42", A9_RULES).kind == "generic"
    assert resolve("/a9/doc/e42", A9_RULES, "resource").capture == "doc/e42"
    assert plan("/a9/doc/e42", "text/turtle", A9_RULES, "variant").status == 404


def test_decommission():
    moved = decommission(A9, "moved", "/b1/$1")
    assert moved.state == "moved" and moved.successor == "/b1/$1"
    assert moved.generic == A9.generic  # kept for provenance
    gone = decommission(A9, "gone", "entity split; human review required")
    assert gone.state == "gone"
    with pytest.raises(AlreadyDecommissioned):
        decommission(moved, "moved", "/c2/$1")
    with pytest.raises(AlreadyDecommissioned):
        decommission(gone, "moved", "/c2/$1")


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(pattern="/a9/*"),
        dict(pattern="/a9/*", state="moved"),
        dict(pattern="/a9/*", state="gone", reason="  "),
        dict(pattern="/a9", html="https://x.example/$1"),
        dict(pattern="a9/*", html="https://x.example/$1"),
        dict(pattern="/a*/b", html="https://x.example/$1"),
        dict(pattern="/a9/*", html="https://x.example/$1", default="text/turtle"),
    ],
)
def test_rule_invariants(kwargs):
    with pytest.raises(InvalidRule):
        RedirectRule(**kwargs)


# random page/document configurations for the walk invariants
SUBTYPES = [("text/turtle", "ttl"), ("application/n-triples", "nt"), ("application/ld+json", "jsonld")]


@st.composite
def rules_and_paths(draw):
    rules = []
    for i in range(draw(st.integers(1, 3))):
        local = lambda tail: draw(st.sampled_from([f"/d{i}/{tail}", f"https://sys{i}.example.com/{tail}"]))
        types = draw(st.lists(st.sampled_from(SUBTYPES), unique=True, max_size=3))
        html = local("page/$1.html") if draw(st.booleans()) or not types else None
        generic = local("gen/$1") if types and draw(st.booleans()) else None
        variants = VariantSet(tuple((m, local(f"v/$1.{ext}")) for m, ext in types))
        options = [None] + (["text/html"] if html else []) + [m for m, _ in types]
        rules.append(RedirectRule(f"/p{i}/*", html=html, generic=generic, variants=variants,
                                  default=draw(st.sampled_from(options))))
    capture = draw(st.text("abcdefghijkmnpqrstuvwxyz23456789-/", min_size=1, max_size=12))
    return RuleSet(rules, BASE), rules, capture


accepts = st.lists(
    st.sampled_from(["text/html", "text/turtle", "application/ld+json", "application/n-triples", "text/*",
                     "*/*", "image/png", "application/*"]).flatmap(
        lambda t: st.sampled_from([t, t + ";q=0.5", t + ";q=0"])),
    max_size=4,
).map(", ".join)


@settings(max_examples=300)
@given(rules_and_paths(), accepts)
def test_single_303_invariant(config, accept):
    ruleset, rules, capture = config
    for i, rule in enumerate(rules):
        chain = trace(f"/p{i}/{capture}", accept, ruleset)
        statuses = [p.status for p in chain]
        if statuses[0] == 406:
            continue
        assert statuses.count(303) == 1, statuses
        assert statuses[0] == 303
        # restarting the walk at any document it reached sees no 303
        for p in chain[1:]:
            assert p.kind in ("generic", "variant")
        for p in chain:
            doc = ruleset.local_path(p.location) if p.location else None
            if doc is not None:
                assert 303 not in [q.status for q in trace(doc, accept, ruleset)]


@settings(max_examples=300)
@given(rules_and_paths(), accepts)
def test_plan_shape_invariants(config, accept):
    ruleset, rules, capture = config
    for i, _ in enumerate(rules):
        for p in trace(f"/p{i}/{capture}", accept, ruleset):
            assert not (p.status == 200 and p.body_kind == "none")
            if 300 <= p.status < 400:
                assert p.location
            if p.status in (303, 302, 200):
                assert any(t.predicate == IRI(W3ID_303) for t in p.metadata)


@given(st.text("abcdefghijkmnpqrstuvwxyz23456789-_.~/", min_size=1, max_size=20),
       st.sampled_from(["/b1/$1", "/b1/$1/x", "https://other.example/$1?v=1", "/$1/$1"]))
def test_capture_preserved(capture, successor):
    moved = RedirectRule("/a9/*", state="moved", successor=successor)
    p = plan("/a9/" + capture, None, RuleSet([moved], BASE))
    assert p.status == 301 and capture in p.location
    assert p.location.count(capture) >= successor.count("$1")
