import random
from pathlib import Path

import pytest

from purlite import rdfmin
from purlite.rdfmin import IRI, Graph, Literal, ParseError, Triple, parse_turtle, serialize

FIXTURES = Path(__file__).parent / "fixtures"
BASE = "https://purl.example.com/a9/"


def fixture(name):
    return (FIXTURES / name).read_text(encoding="utf-8")


@pytest.mark.parametrize("stem", ["birthdate", "wikidata_dataset"])
def test_reference_snippets(stem):
    g = parse_turtle(fixture(stem + ".ttl"), BASE)
    assert serialize(g, "ntriples") == fixture(stem + ".nt")


def test_wikidata_shared_subject():
    g = parse_turtle(fixture("wikidata_dataset.ttl"), BASE)
    assert len(g) == 2
    assert len(g.subjects()) == 1


def test_typed_literal():
    g = parse_turtle(
        '@prefix ex: <https://purl.example.com/a9/> . @prefix dbo: <http://dbpedia.org/ontology/> .\n'
        '@prefix xsd: <http://www.w3.org/2001/XMLSchema#> .\n'
        'ex:e42 dbo:birthDate "1952-03-11"^^xsd:date .'
    )
    (t,) = g
    assert t.object == Literal("1952-03-11", datatype=rdfmin.XSD + "date")


def test_empty_document():
    assert len(parse_turtle("")) == 0
    assert len(parse_turtle("# only a comment\n")) == 0


def test_mixed_constructs():
    g = parse_turtle(fixture("mixed.ttl"), BASE)
    e42 = IRI(BASE + "e42")
    assert Triple(e42, IRI(rdfmin.RDF_TYPE), IRI(BASE + "t3")) in g
    assert Triple(e42, IRI("http://www.w3.org/2000/01/rdf-schema#label"),
                  Literal('Douglas "DNA" Adams', language="en")) in g
    assert Triple(e42, IRI("http://www.w3.org/2000/01/rdf-schema#label"),
                  Literal("tab\there\\back\nline")) in g
    assert Triple(e42, IRI(rdfmin.DCTERMS + "relation"), IRI(BASE + "e43")) in g
    assert Triple(e42, IRI(rdfmin.W3ID_303), IRI(BASE + "doc/e42")) in g
    assert len(g) == 8


@pytest.mark.parametrize(
    "text,line,column",
    [
        ("<https://a/b> <https://a/p> 42 .", 1, 29),  # numeric literals are outside the subset
        ("<https://a/b> <https://a/p> 'x' .", 1, 29),
        ('<https://a/b> <https://a/p> """x""" .', 1, 31),
        ("<https://a/b> <https://a/p> [] .", 1, 29),
        ("<https://a/b> <https://a/p> (1) .", 1, 29),
        ("ex:b <https://a/p> <https://a/o> .", 1, 1),  # undeclared prefix
        ("<https://a/b> <https://a/p> <https://a/o>", 1, 42),  # missing terminator
        ('<https://a/b> <https://a/p>\n  "bad \\u0041" .', 2, 8),
        ("@base <https://a/> .", 1, 1),
        ('"lit" <https://a/p> <https://a/o> .', 1, 1),
        ("<https://a/b> \"p\" <https://a/o> .", 1, 15),
    ],
)
def test_parse_errors_are_positioned(text, line, column):
    with pytest.raises(ParseError) as err:
        parse_turtle(text)
    assert (err.value.line, err.value.column) == (line, column)


def test_relative_iri_without_base():
    with pytest.raises(ParseError):
        parse_turtle("<e42> <https://a/p> <https://a/o> .")


def test_serialize_empty():
    assert serialize(Graph(), "ntriples") == ""
    assert serialize(Graph(), "turtle") == ""


@pytest.mark.parametrize("name", ["birthdate.ttl", "wikidata_dataset.ttl", "mixed.ttl"])
def test_turtle_roundtrip(name):
    g = parse_turtle(fixture(name), BASE)
    again = parse_turtle(serialize(g, "turtle"))
    assert again == g
    # N-Triples is itself accepted by the Turtle reader
    assert parse_turtle(serialize(g, "ntriples")) == g


def test_ntriples_canonical_regardless_of_order():
    triples = list(parse_turtle(fixture("mixed.ttl"), BASE))
    shuffled = triples[:]
    random.Random(3).shuffle(shuffled)
    assert serialize(Graph(triples), "ntriples") == serialize(Graph(shuffled), "ntriples")
    duplicated = Graph(triples + triples)
    assert len(duplicated) == len(triples)


def test_describe_link():
    t = rdfmin.describe_link("https://purl.example.com/a9/e42", "https://purl.example.com/a9/doc/e42")
    assert serialize(Graph([t]), "ntriples") == (
        "<https://purl.example.com/a9/e42> <https://w3id.org/303> <https://purl.example.com/a9/doc/e42> .\n"
    )
    same = rdfmin.describe_link("https://x/a", "https://x/a")
    assert same.subject == same.object and same.predicate == IRI("https://w3id.org/303")


def test_replacement_links():
    links = rdfmin.replacement_links("https://x/A", "https://x/B")
    assert set(links) == {
        Triple(IRI("https://x/B"), IRI(rdfmin.DCTERMS + "replaces"), IRI("https://x/A")),
        Triple(IRI("https://x/A"), IRI(rdfmin.DCTERMS + "isReplacedBy"), IRI("https://x/B")),
    }
    with pytest.raises(rdfmin.SameUri):
        rdfmin.replacement_links("https://x/A", "https://x/A")


def test_term_invariants():
    with pytest.raises(ValueError):
        IRI("relative")
    with pytest.raises(ValueError):
        Literal("x", datatype=rdfmin.XSD + "string", language="en")
    with pytest.raises(ValueError):
        Triple(Literal("x"), IRI("https://a/p"), Literal("y"))


def test_prefixed_names_expand_to_absolute():
    g = parse_turtle(fixture("mixed.ttl"), BASE)
    for t in g:
        for term in (t.subject, t.predicate, t.object):
            if term.kind == "iri":
                assert rdfmin._ABSOLUTE.match(term.value)


def test_fuzz_mutations_only_raise_parse_error():
    rng = random.Random(2024)
    seeds = [fixture(n).encode() for n in ("birthdate.ttl", "wikidata_dataset.ttl", "mixed.ttl")]
    for _ in range(10_000):
        data = bytearray(rng.choice(seeds))
        for _ in range(rng.randint(1, 4)):
            op = rng.random()
            pos = rng.randrange(len(data))
            if op < 0.4:
                data[pos] = rng.randrange(256)
            elif op < 0.7:
                del data[pos]
            else:
                data.insert(pos, rng.randrange(256))
        text = data.decode("utf-8", errors="replace")
        try:
            parse_turtle(text, BASE)
        except ParseError:
            pass
