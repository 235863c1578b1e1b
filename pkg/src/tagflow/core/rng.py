"""Deterministic, label-forked random streams.

A stream is an immutable (seed, stream) key pair feeding a counter-based
Philox generator. Children are derived by hashing the parent key with a
string label, so forking is order-independent: forking "a" then "b" yields
the same pair of streams as forking "b" then "a", and parallel consumers
can fork their own streams without coordinating.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class RngStream:
    """Immutable handle for a reproducible random sequence."""

    seed: int
    stream: int = 0

    def fork(self, label: str) -> "RngStream":
        """Derive the child stream for `label`; same label, same child."""
        payload = f"{self.seed & _MASK64}:{self.stream & _MASK64}:{label}"
        digest = hashlib.sha256(payload.encode("utf-8")).digest()
        return RngStream(self.seed & _MASK64, int.from_bytes(digest[:8], "little"))

    def generator(self) -> np.random.Generator:
        """Fresh generator over this stream; always restarts at draw 0."""
        key = ((self.seed & _MASK64) << 64) | (self.stream & _MASK64)
        return np.random.Generator(np.random.Philox(key=key))


def rng_fork(stream: RngStream, label: str) -> RngStream:
    """Functional alias for `RngStream.fork`."""
    return stream.fork(label)
