"""Constrained base-33 identifiers.

An erdi8 identifier is a string over ``23456789abcdefghijkmnopqrstuvwxyz``
that never starts with a digit. Identifiers are ordered first by length,
then by a mixed-radix value (first character base-L over the letters,
every following character base-A over the full alphabet), which gives
every valid identifier a unique non-negative *ordinal*.

    >>> increment("a2")
    'a3'
    >>> increment("zz")
    'a22'
    >>> from_ordinal(825, min_length=2)
    'a22'

Besides plain counting, the module offers "fancy" counting: a full-cycle
stride walk over the fixed-length space, so consecutive identifiers look
unrelated, and re-encoding of hex strings (digests, UUIDs) into the same
alphabet.
"""

from __future__ import annotations

import functools
import math
import re
from dataclasses import dataclass

__all__ = [
    "Alphabet",
    "STANDARD",
    "SAFE",
    "Erdi8Error",
    "InvalidId",
    "LengthBelowMinimum",
    "LengthMismatch",
    "SpaceExhausted",
    "InvalidHex",
    "validate",
    "space_size",
    "ordinal",
    "from_ordinal",
    "within_index",
    "from_within_index",
    "increment",
    "fancy_stride",
    "fancy_next",
    "reencode_hex",
]

GOLDEN_RATIO = 1.6180339887


class Erdi8Error(ValueError):
    pass


class InvalidId(Erdi8Error):
    pass


class LengthBelowMinimum(Erdi8Error):
    pass


class LengthMismatch(Erdi8Error):
    pass


class SpaceExhausted(Erdi8Error):
    """The fancy cycle came back to its start; every id of the length is used."""


class InvalidHex(Erdi8Error):
    pass


@dataclass(frozen=True)
class Alphabet:
    name: str
    symbols: str
    letter_start: int

    def __post_init__(self) -> None:
        if len(set(self.symbols)) != len(self.symbols):
            raise ValueError("alphabet symbols must be unique")
        if any(c in "01lOI" or not (c.isascii() and (c.islower() or c.isdigit())) for c in self.symbols):
            raise ValueError(f"illegal symbol in alphabet {self.symbols!r}")
        if not all(c.isdigit() for c in self.symbols[: self.letter_start]):
            raise ValueError("digit block must precede the letters")
        if any(c.isdigit() for c in self.symbols[self.letter_start :]):
            raise ValueError("digits after letter_start")

    @property
    def base(self) -> int:
        return len(self.symbols)

    @property
    def letters(self) -> str:
        return self.symbols[self.letter_start :]

    @property
    def n_letters(self) -> int:
        return len(self.symbols) - self.letter_start

    @functools.cached_property
    def index(self) -> dict[str, int]:
        return {c: i for i, c in enumerate(self.symbols)}


STANDARD = Alphabet("standard", "23456789abcdefghijkmnopqrstuvwxyz", 8)
# no vowels, so no words can be spelled by accident
SAFE = Alphabet("safe", "".join(c for c in STANDARD.symbols if c not in "aeiou"), 8)


def validate(text: str, alphabet: Alphabet = STANDARD) -> bool:
    """Return True iff ``text`` is a well-formed id over ``alphabet``."""
    if not isinstance(text, str) or not text:
        return False
    if text[0] not in alphabet.letters:
        return False
    return all(c in alphabet.index for c in text)


def space_size(length: int, alphabet: Alphabet = STANDARD) -> int:
    """Number of valid ids of exactly ``length`` characters."""
    if length < 1:
        raise ValueError("length must be >= 1")
    return alphabet.n_letters * alphabet.base ** (length - 1)


def _offset(length: int, min_length: int, alphabet: Alphabet) -> int:
    # sum of S(m) for m in [min_length, length), closed form of a geometric series
    if length <= min_length:
        return 0
    a = alphabet.base
    return alphabet.n_letters * (a ** (length - 1) - a ** (min_length - 1)) // (a - 1)


def within_index(text: str, alphabet: Alphabet = STANDARD) -> int:
    """Mixed-radix position of ``text`` among ids of its own length."""
    if not validate(text, alphabet):
        raise InvalidId(f"not a valid {alphabet.name} erdi8 id: {text!r}")
    value = alphabet.index[text[0]] - alphabet.letter_start
    for c in text[1:]:
        value = value * alphabet.base + alphabet.index[c]
    return value


def from_within_index(value: int, length: int, alphabet: Alphabet = STANDARD) -> str:
    size = space_size(length, alphabet)
    if not 0 <= value < size:
        raise ValueError(f"index {value} outside the length-{length} space of {size}")
    tail = []
    for _ in range(length - 1):
        value, digit = divmod(value, alphabet.base)
        tail.append(alphabet.symbols[digit])
    head = alphabet.letters[value]
    return head + "".join(reversed(tail))


def ordinal(text: str, min_length: int = 2, alphabet: Alphabet = STANDARD) -> int:
    """Global counting-order position of ``text`` among ids of length >= ``min_length``."""
    if not validate(text, alphabet):
        raise InvalidId(f"not a valid {alphabet.name} erdi8 id: {text!r}")
    if len(text) < min_length:
        raise LengthBelowMinimum(f"{text!r} is shorter than {min_length}")
    return _offset(len(text), min_length, alphabet) + within_index(text, alphabet)


def from_ordinal(value: int, min_length: int = 2, alphabet: Alphabet = STANDARD) -> str:
    """Inverse of :func:`ordinal`."""
    if value < 0:
        raise ValueError("ordinal must be non-negative")
    if min_length < 1:
        raise ValueError("min_length must be >= 1")
    length = min_length
    while True:
        size = space_size(length, alphabet)
        if value < size:
            return from_within_index(value, length, alphabet)
        value -= size
        length += 1


def increment(text: str, alphabet: Alphabet = STANDARD) -> str:
    """Next id in counting order; ``zz..z`` rolls over to ``a2..2`` one longer."""
    return from_ordinal(ordinal(text, len(text), alphabet) + 1, len(text), alphabet)


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    for f in range(3, math.isqrt(n) + 1, 2):
        if n % f == 0:
            return False
    return True


@functools.lru_cache(maxsize=None)
def fancy_stride(length: int, alphabet: Alphabet = STANDARD) -> int:
    """Smallest prime >= ceil(S/phi) that is coprime to S, S being the length's space size."""
    size = space_size(length, alphabet)
    p = math.ceil(size / GOLDEN_RATIO)
    while not (_is_prime(p) and math.gcd(p, size) == 1):
        p += 1
    return p


def fancy_next(text: str, start: str, alphabet: Alphabet = STANDARD) -> str:
    """Step ``text`` one stride forward within its length.

    Raises :class:`SpaceExhausted` instead of returning ``start`` again,
    i.e. once every id of this length has been produced.
    """
    if len(text) != len(start):
        raise LengthMismatch(f"{text!r} and start {start!r} differ in length")
    size = space_size(len(text), alphabet)
    nxt = (within_index(text, alphabet) + fancy_stride(len(text), alphabet)) % size
    if nxt == within_index(start, alphabet):
        raise SpaceExhausted(f"fancy cycle of length {len(text)} completed at {start!r}")
    return from_within_index(nxt, len(text), alphabet)


_HEX = re.compile(r"[0-9a-fA-F]+")


def reencode_hex(hex_text: str, min_length: int = 1, alphabet: Alphabet = STANDARD) -> str:
    """Re-encode a hex string (hyphens allowed, as in UUIDs) as an erdi8 id.

    The value is read as a big-endian integer, so leading zeros collapse;
    the mapping is injective for inputs of a fixed width.
    """
    digits = hex_text.replace("-", "")
    if not _HEX.fullmatch(digits):
        raise InvalidHex(f"not hexadecimal: {hex_text!r}")
    return from_ordinal(int(digits, 16), min_length, alphabet)
