"""Seeded random streams with draw accounting."""

from __future__ import annotations

import hashlib
import random
from collections.abc import Sequence
from typing import Any, TypeVar

T = TypeVar("T")


def derive_seed(*parts: Any) -> int:
    """Stable 63-bit seed from an arbitrary tuple of printable parts."""
    text = "/".join(repr(p) for p in parts)
    digest = hashlib.sha256(text.encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1


class Stream:
    """A ``random.Random`` wrapper that counts how many draws were made."""

    def __init__(self, seed: int | None = None):
        self._rng = random.Random(seed)
        self.draws = 0

    def choice(self, seq: Sequence[T]) -> T:
        if not seq:
            raise IndexError("choice from empty sequence")
        self.draws += 1
        return seq[self._rng.randrange(len(seq))]

    def weighted_choice(self, seq: Sequence[T], weights: Sequence[float]) -> T:
        self.draws += 1
        return self._rng.choices(seq, weights=weights, k=1)[0]

    def random(self) -> float:
        self.draws += 1
        return self._rng.random()

    def uniform(self, lo: float, hi: float) -> float:
        self.draws += 1
        return self._rng.uniform(lo, hi)

    def sample(self, seq: Sequence[T], k: int) -> list[T]:
        self.draws += 1
        return self._rng.sample(list(seq), k)

    def randbits(self, k: int) -> int:
        self.draws += 1
        return self._rng.getrandbits(k)


class ScriptedStream(Stream):
    """Replays a fixed script of values; used to force specific draws.

    ``choice`` returns the next scripted value, which must be a member of
    the offered sequence. Once the script is exhausted the stream falls
    back to a seeded generator.
    """

    def __init__(self, script: Sequence[Any], seed: int = 0):
        super().__init__(seed)
        self._script = list(script)

    @property
    def remaining(self) -> int:
        return len(self._script)

    def _next(self) -> Any:
        self.draws += 1
        return self._script.pop(0)

    def choice(self, seq):
        if not self._script:
            return super().choice(seq)
        value = self._next()
        if value not in seq:
            raise ValueError(f"scripted value {value!r} not among {list(seq)!r}")
        return value

    def weighted_choice(self, seq, weights):
        if not self._script:
            return super().weighted_choice(seq, weights)
        value = self._next()
        if value not in seq:
            raise ValueError(f"scripted value {value!r} not among {list(seq)!r}")
        return value

    def random(self):
        if not self._script:
            return super().random()
        return float(self._next())

    def uniform(self, lo, hi):
        if not self._script:
            return super().uniform(lo, hi)
        return float(self._next())
