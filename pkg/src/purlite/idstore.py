"""Minting strategies and the ledger that keeps identifiers unique.

The ledger is an append-only journal, one record per line::

    I <id>                  issued
    D <id>                  decommissioned
    C <strategy> <state>    counter checkpoint (last erdi8 part issued)

Every mint is journaled and fsynced before the id is handed out, so a crash
between minting and answering can lose a response but never re-issue an id.
"""

from __future__ import annotations

import functools
import hashlib
import itertools
import math
import os
import random
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

from . import erdi8
from .erdi8 import SAFE, STANDARD, Alphabet, SpaceExhausted

__all__ = [
    "KINDS",
    "MintStrategy",
    "Ledger",
    "LedgerError",
    "RetriesExhausted",
    "mint",
    "mint_counter",
    "mint_random",
    "mint_stateless_time",
    "stateless_value",
    "machine_hash",
    "StatelessMinter",
    "mint_natural_key",
    "collision_probability",
    "strategy_from_dict",
    "SpaceExhausted",
]

KINDS = ("counter", "fancyCounter", "randomLedger", "statelessTime", "naturalKeyHash")


class LedgerError(Exception):
    """The journal cannot be replayed."""


class RetriesExhausted(RuntimeError):
    """Random minting found only taken ids; the configured length is too short."""


@dataclass(frozen=True)
class MintStrategy:
    name: str
    kind: str
    prefix: str = ""
    alphabet: Alphabet = STANDARD
    length: int = 2
    max_retries: int = 10
    digest_bits: int = 64
    start: Optional[str] = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown strategy kind {self.kind!r}")
        if not self.name or any(c.isspace() for c in self.name):
            raise ValueError(f"strategy name must be a nonempty word: {self.name!r}")
        if self.prefix and not erdi8.validate(self.prefix, self.alphabet):
            raise ValueError(f"prefix {self.prefix!r} is not a valid erdi8 id")
        if self.length < 1:
            raise ValueError("length must be positive")
        if self.max_retries < 1:
            raise ValueError("max_retries must be positive")
        if self.start is not None:
            if not erdi8.validate(self.start, self.alphabet):
                raise ValueError(f"start {self.start!r} is not a valid erdi8 id")
            if self.kind == "fancyCounter" and len(self.start) != self.length:
                raise ValueError("fancy counter start must have the configured length")

    @property
    def first(self) -> str:
        """The counter value issued by a fresh ledger."""
        if self.start is not None:
            return self.start
        length = self.length if self.kind == "fancyCounter" else 2
        return erdi8.from_within_index(0, length, self.alphabet)


class Ledger:
    """Issued and decommissioned ids plus counter states, optionally journaled to ``path``.

    Mutations are serialized by an internal lock; callers still own the
    single-writer policy across processes.
    """

    def __init__(self, path: Union[str, Path, None] = None):
        self.path = Path(path) if path is not None else None
        self.issued: set[str] = set()
        self.decommissioned: set[str] = set()
        self.counters: dict[str, str] = {}
        self.lock = threading.RLock()
        if self.path is not None and self.path.exists():
            self._replay()

    @classmethod
    def loads(cls, text: str) -> "Ledger":
        ledger = cls()
        ledger._apply_lines(text.split("\n"))
        return ledger

    def dumps(self) -> str:
        """Compact journal reproducing the current state."""
        with self.lock:
            lines = [f"I {i}" for i in sorted(self.issued)]
            lines += [f"D {i}" for i in sorted(self.decommissioned)]
            lines += [f"C {name} {state}" for name, state in sorted(self.counters.items())]
        return "".join(line + "\n" for line in lines)

    def _replay(self) -> None:
        data = self.path.read_bytes()
        complete = data.rfind(b"\n") + 1
        if complete < len(data):
            # a torn final record was never acknowledged; drop it
            with open(self.path, "r+b") as fh:
                fh.truncate(complete)
                fh.flush()
                os.fsync(fh.fileno())
            data = data[:complete]
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise LedgerError(f"{self.path}: not UTF-8") from exc
        self._apply_lines(text.split("\n"))

    def _apply_lines(self, lines: Iterable[str]) -> None:
        for number, line in enumerate(lines, 1):
            if not line:
                continue
            parts = line.split(" ")
            kind = parts[0]
            if kind == "I" and len(parts) == 2:
                self.issued.add(parts[1])
            elif kind == "D" and len(parts) == 2:
                self.decommissioned.add(parts[1])
            elif kind == "C" and len(parts) == 3:
                self.counters[parts[1]] = parts[2]
            else:
                where = f"{self.path}:" if self.path else "line "
                raise LedgerError(f"{where}{number}: unknown record {line!r}")

    def _journal(self, records: Sequence[str]) -> None:
        if self.path is None:
            return
        payload = "".join(r + "\n" for r in records).encode("utf-8")
        with open(self.path, "ab") as fh:
            fh.write(payload)
            fh.flush()
            os.fsync(fh.fileno())

    def taken(self, identifier: str) -> bool:
        return identifier in self.issued or identifier in self.decommissioned

    def record_issue(self, identifier: str, counter: Optional[tuple[str, str]] = None) -> None:
        with self.lock:
            if identifier in self.issued:
                raise ValueError(f"{identifier} was already issued")
            records = [f"I {identifier}"]
            if counter is not None:
                records.append(f"C {counter[0]} {counter[1]}")
            self._journal(records)
            self.issued.add(identifier)
            if counter is not None:
                self.counters[counter[0]] = counter[1]

    def decommission(self, identifier: str) -> None:
        with self.lock:
            if identifier in self.decommissioned:
                return
            self._journal([f"D {identifier}"])
            self.decommissioned.add(identifier)

    def snapshot(self) -> tuple[frozenset, frozenset, dict]:
        with self.lock:
            return frozenset(self.issued), frozenset(self.decommissioned), dict(self.counters)


def mint_counter(strategy: MintStrategy, ledger: Ledger) -> str:
    """Issue prefix + the next counter value, skipping ids the ledger has seen."""
    if strategy.kind not in ("counter", "fancyCounter"):
        raise ValueError(f"{strategy.kind} is not a counter strategy")
    fancy = strategy.kind == "fancyCounter"
    with ledger.lock:
        state = ledger.counters.get(strategy.name)
        candidate = strategy.first if state is None else None
        while True:
            if candidate is None:
                if fancy:
                    candidate = erdi8.fancy_next(state, strategy.first, strategy.alphabet)
                else:
                    candidate = erdi8.increment(state, strategy.alphabet)
            identifier = strategy.prefix + candidate
            if not ledger.taken(identifier):
                ledger.record_issue(identifier, (strategy.name, candidate))
                return identifier
            state, candidate = candidate, None


def mint_random(strategy: MintStrategy, ledger: Ledger, rng: Optional[random.Random] = None) -> str:
    """Draw uniformly among ids of the configured length, retrying on collisions."""
    if strategy.kind != "randomLedger":
        raise ValueError(f"{strategy.kind} is not a random strategy")
    rng = rng or random.SystemRandom()
    size = erdi8.space_size(strategy.length, strategy.alphabet)
    with ledger.lock:
        for _ in range(strategy.max_retries):
            candidate = erdi8.from_within_index(rng.randrange(size), strategy.length, strategy.alphabet)
            identifier = strategy.prefix + candidate
            if not ledger.taken(identifier):
                ledger.record_issue(identifier)
                return identifier
    raise RetriesExhausted(f"{strategy.max_retries} draws of length {strategy.length} all collided")


def machine_hash(seed: Union[str, bytes]) -> bytes:
    if isinstance(seed, str):
        seed = seed.encode("utf-8")
    return hashlib.sha256(seed).digest()[:3]


def stateless_value(seconds: int, machine: bytes, process_id: int, counter: int) -> bytes:
    """The 12-byte layout: seconds(4) machine(3) pid(2) counter(3), big-endian."""
    if len(machine) != 3:
        raise ValueError("machine hash must be 3 bytes")
    return (
        (seconds & 0xFFFFFFFF).to_bytes(4, "big")
        + machine
        + (process_id & 0xFFFF).to_bytes(2, "big")
        + (counter & 0xFFFFFF).to_bytes(3, "big")
    )


def mint_stateless_time(
    machine_seed: Union[str, bytes],
    process_id: int,
    seconds: int,
    counter: int,
    alphabet: Alphabet = STANDARD,
) -> str:
    value = stateless_value(seconds, machine_hash(machine_seed), process_id, counter)
    return erdi8.reencode_hex(value.hex(), 1, alphabet)


class StatelessMinter:
    """Thread-safe stateless minting with a per-process monotonic counter."""

    def __init__(self, machine_seed: Union[str, bytes], process_id: Optional[int] = None,
                 clock=time.time, alphabet: Alphabet = STANDARD):
        self.machine = machine_hash(machine_seed)
        self.process_id = os.getpid() if process_id is None else process_id
        self.clock = clock
        self.alphabet = alphabet
        self._counter = itertools.count()
        self._lock = threading.Lock()

    def __call__(self) -> str:
        with self._lock:
            seconds = int(self.clock())
            counter = next(self._counter)
        value = stateless_value(seconds, self.machine, self.process_id, counter)
        return erdi8.reencode_hex(value.hex(), 1, self.alphabet)


_UNIT_SEPARATOR = b"\x1f"


def mint_natural_key(fields: Sequence[str], digest_bits: int = 64, alphabet: Alphabet = STANDARD) -> str:
    """Deterministic id from ordered fields: truncated SHA-256, re-encoded."""
    if not fields:
        raise ValueError("at least one field is required")
    if not (24 <= digest_bits <= 256 and digest_bits % 8 == 0):
        raise ValueError(f"digest_bits must be a multiple of 8 in [24, 256], got {digest_bits}")
    digest = hashlib.sha256(_UNIT_SEPARATOR.join(f.encode("utf-8") for f in fields)).digest()
    return erdi8.reencode_hex(digest[: digest_bits // 8].hex(), 1, alphabet)


def mint(strategy: MintStrategy, ledger: Optional[Ledger] = None, *, rng: Optional[random.Random] = None,
         fields: Sequence[str] = (), machine_seed: Union[str, bytes] = "") -> str:
    """Mint with any strategy kind; ledger-backed kinds record the id."""
    if strategy.kind in ("counter", "fancyCounter", "randomLedger"):
        if ledger is None:
            raise ValueError(f"{strategy.kind} needs a ledger")
        if strategy.kind == "randomLedger":
            return mint_random(strategy, ledger, rng)
        return mint_counter(strategy, ledger)
    if strategy.kind == "naturalKeyHash":
        return strategy.prefix + mint_natural_key(fields, strategy.digest_bits, strategy.alphabet)
    return strategy.prefix + _minter(machine_seed, strategy.alphabet)()


@functools.lru_cache(maxsize=None)
def _minter(machine_seed: Union[str, bytes], alphabet: Alphabet) -> StatelessMinter:
    # one counter per seed and process, shared by every caller of mint()
    return StatelessMinter(machine_seed, alphabet=alphabet)


def strategy_from_dict(name: str, spec: dict) -> MintStrategy:
    """Build a strategy from a config mapping such as ``{"kind": "counter", "prefix": "e"}``."""
    known = {"kind", "prefix", "safe", "length", "max_retries", "digest_bits", "start"}
    unknown = set(spec) - known
    if unknown:
        raise ValueError(f"strategy {name}: unknown keys {sorted(unknown)}")
    if "kind" not in spec:
        raise ValueError(f"strategy {name}: missing kind")
    kwargs = {k: v for k, v in spec.items() if k not in ("safe",)}
    kwargs["alphabet"] = SAFE if spec.get("safe") else STANDARD
    return MintStrategy(name=name, **kwargs)


def collision_probability(k: int, space_size: int) -> float:
    """Birthday bound 1 - exp(-k(k-1)/2N)."""
    if k < 0 or space_size < 1:
        raise ValueError("need k >= 0 and space_size >= 1")
    return -math.expm1(-k * (k - 1) / (2 * space_size))
