"""Deterministic, splittable random streams.

Every random decision in the pipeline is drawn from a stream addressed by a
key path (seed, utterance id, epoch, operation tag). Equal paths give
bit-identical draw sequences on every platform; distinct paths give
statistically independent streams. There is no shared generator state, so
utterances can be processed in any order and on any number of workers
without changing the draws.
"""

from __future__ import annotations

import hashlib

import numpy as np


def _encode(part: object) -> bytes:
    # type-tagged encoding so ("1",) and (1,) hash differently
    if isinstance(part, bool):
        return b"b:1" if part else b"b:0"
    if isinstance(part, (int, np.integer)):
        return b"i:" + str(int(part)).encode("ascii")
    if isinstance(part, float):
        return b"f:" + repr(part).encode("ascii")
    if isinstance(part, str):
        return b"s:" + part.encode("utf-8")
    raise TypeError(f"unsupported rng key part: {part!r}")


class SplitRng:
    """Random stream derived by hashing a key path into a PCG64 seed."""

    __slots__ = ("_key", "_gen")

    def __init__(self, *key: object):
        self._key = tuple(key)
        digest = hashlib.blake2b(
            b"\x1f".join(_encode(p) for p in self._key), digest_size=32
        ).digest()
        seq = np.random.SeedSequence(int.from_bytes(digest, "little"))
        self._gen = np.random.Generator(np.random.PCG64(seq))

    @property
    def key(self) -> tuple:
        return self._key

    def split(self, *parts: object) -> "SplitRng":
        """Child stream for an extended key path; independent of the parent."""
        return SplitRng(*self._key, *parts)

    def uniform(self, low: float = 0.0, high: float = 1.0) -> float:
        return float(self._gen.uniform(low, high))

    def integers(self, low: int, high: int) -> int:
        """Draw from [low, high), numpy's half-open convention."""
        return int(self._gen.integers(low, high))

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def __repr__(self) -> str:
        return f"SplitRng{self._key!r}"


def rng_for(seed: int, utterance_id: str, epoch: int, op_tag: str) -> SplitRng:
    """Stream for one (utterance, epoch, operation) triple.

    Pure function of its arguments: the same triple yields the same draws
    across runs, platforms and worker counts.
    """
    return SplitRng(int(seed), str(utterance_id), int(epoch), str(op_tag))
