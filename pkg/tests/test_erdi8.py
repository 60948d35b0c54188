import itertools
import math
import random

import pytest
from hypothesis import given, strategies as st

from purlite import erdi8
from purlite.erdi8 import SAFE, STANDARD


def enumerate_ids(length, alphabet=STANDARD):
    """Brute-force oracle: every id of ``length`` in counting order."""
    for head in alphabet.letters:
        for tail in itertools.product(alphabet.symbols, repeat=length - 1):
            yield head + "".join(tail)


def enumerate_from(min_length, alphabet=STANDARD):
    for length in itertools.count(min_length):
        yield from enumerate_ids(length, alphabet)


def oracle_nth(n, min_length, alphabet=STANDARD):
    return next(itertools.islice(enumerate_from(min_length, alphabet), n, None))


def test_alphabets():
    assert STANDARD.symbols == "23456789abcdefghijkmnopqrstuvwxyz"
    assert STANDARD.base == 33 and STANDARD.n_letters == 25
    assert SAFE.symbols == "23456789bcdfghjkmnpqrstvwxyz"
    assert SAFE.base == 28 and SAFE.n_letters == 20
    for alphabet in (STANDARD, SAFE):
        assert not set(alphabet.symbols) & set("0O1Il")


@pytest.mark.parametrize("text,expected", [("a2", True), ("2a", False), ("alb", False), ("", False), ("A2", False)])
def test_validate(text, expected):
    assert erdi8.validate(text) is expected


def test_validate_safe_rejects_vowels():
    assert erdi8.validate("b2", SAFE)
    assert not erdi8.validate("a2", SAFE)


def test_space_counts_by_enumeration():
    assert len(set(enumerate_ids(2))) == 825
    assert len(set(enumerate_ids(2, SAFE))) == 560
    assert erdi8.space_size(2) == 825
    assert erdi8.space_size(2, SAFE) == 560
    assert all(erdi8.validate(x) for x in enumerate_ids(2))


@pytest.mark.parametrize("text,expected", [("a2", 0), ("a3", 1), ("a22", 825)])
def test_ordinal_examples(text, expected):
    assert erdi8.ordinal(text, min_length=2) == expected


def test_ordinal_matches_enumeration():
    ids = list(itertools.islice(enumerate_from(2), 3000))
    assert [erdi8.ordinal(x, 2) for x in ids] == list(range(3000))


def test_ordinal_errors():
    with pytest.raises(erdi8.InvalidId):
        erdi8.ordinal("2a")
    with pytest.raises(erdi8.LengthBelowMinimum):
        erdi8.ordinal("a", min_length=2)


def test_from_ordinal_examples():
    assert erdi8.from_ordinal(0, min_length=1) == "a"
    assert erdi8.from_ordinal(824, min_length=2) == "zz" == oracle_nth(824, 2)
    assert erdi8.from_ordinal(825, min_length=2) == "a22" == oracle_nth(825, 2)


@pytest.mark.parametrize("alphabet", [STANDARD, SAFE])
def test_from_ordinal_matches_enumeration(alphabet):
    for n, expected in enumerate(itertools.islice(enumerate_from(1, alphabet), 20000)):
        assert erdi8.from_ordinal(n, 1, alphabet) == expected


@pytest.mark.parametrize("text,expected", [("a2", "a3"), ("a9", "aa"), ("zz", "a22"), ("z", "a2")])
def test_increment(text, expected):
    assert erdi8.increment(text) == expected


def test_increment_is_successor():
    for x in itertools.islice(enumerate_from(2), 2000):
        assert erdi8.ordinal(erdi8.increment(x), 2) == erdi8.ordinal(x, 2) + 1


def next_prime_coprime(n, size):
    def prime(p):
        return p > 1 and all(p % d for d in range(2, p))

    while not (prime(n) and math.gcd(n, size) == 1):
        n += 1
    return n


def test_fancy_stride_examples():
    # ceil(825 / phi) = 510; 511 = 7*73, 513 = 3^3*19, 517 = 11*47, 519 = 3*173
    assert math.ceil(825 / 1.6180339887) == 510
    assert erdi8.fancy_stride(2) == 521
    assert math.gcd(521, 825) == 1
    assert erdi8.fancy_stride(1) == 17
    for length in (1, 2, 3):
        for alphabet in (STANDARD, SAFE):
            size = erdi8.space_size(length, alphabet)
            stride = erdi8.fancy_stride(length, alphabet)
            assert stride == next_prime_coprime(math.ceil(size / 1.6180339887), size)
            assert math.gcd(stride, size) == 1


def test_fancy_next_example():
    two = list(enumerate_ids(2))
    assert erdi8.fancy_next("a2", start="a2") == two[521] == "qt"


def test_fancy_walk_from_a2():
    seen = set()
    current = "a2"
    for _ in range(824):
        current = erdi8.fancy_next(current, start="a2")
        assert current != "a2"
        seen.add(current)
    assert len(seen) == 824
    with pytest.raises(erdi8.SpaceExhausted):
        erdi8.fancy_next(current, start="a2")


def test_fancy_length_mismatch():
    with pytest.raises(erdi8.LengthMismatch):
        erdi8.fancy_next("a2", start="a22")


@pytest.mark.parametrize(
    "hex_text,expected",
    [("00", "a"), ("00000000-0000-0000-0000-000000000000", "a"), ("ff", oracle_nth(255, 1))],
)
def test_reencode_hex(hex_text, expected):
    assert erdi8.reencode_hex(hex_text, min_length=1) == expected


def test_reencode_ff_is_two_characters():
    assert len(erdi8.reencode_hex("ff")) == 2


@pytest.mark.parametrize("bad", ["", "xyz", "0x10", "12 34"])
def test_reencode_rejects_non_hex(bad):
    with pytest.raises(erdi8.InvalidHex):
        erdi8.reencode_hex(bad)


def test_reencode_injective_on_uuids():
    rng = random.Random(7)
    values = {rng.getrandbits(128) for _ in range(10_000)}
    ids = {erdi8.reencode_hex(f"{v:032x}") for v in values}
    assert len(ids) == len(values)


@given(st.integers(min_value=0, max_value=2**64), st.integers(min_value=1, max_value=4), st.sampled_from([STANDARD, SAFE]))
def test_roundtrip_property(n, min_length, alphabet):
    text = erdi8.from_ordinal(n, min_length, alphabet)
    assert erdi8.validate(text, alphabet)
    assert not set(text) & set("0O1Il")
    assert text == text.lower()
    assert erdi8.ordinal(text, min_length, alphabet) == n
