"""Reproducible random streams.

Every random draw in the package goes through an :class:`RngStream`, a thin
wrapper around a numpy ``Generator`` driven by the counter-based Philox bit
generator.  A stream is identified by ``(seed, stream_id)``; two streams with
different ids are statistically independent and adding new streams never
changes existing ones.
"""
from __future__ import annotations

import zlib
from dataclasses import dataclass, field

import numpy as np

# Module codes for the stream schedule: stream id = (code << 32) | index.
MODULE_CODES = {
    "processes": 1,
    "queues": 2,
    "lpp_core": 3,
    "stationary": 4,
    "ejs_rains": 5,
    "scaling": 6,
    "harness": 7,
}


def stream_id(module: str, index: int = 0) -> int:
    """Deterministic stream id for replica ``index`` of ``module``."""
    code = MODULE_CODES.get(module)
    if code is None:
        code = 1024 + (zlib.crc32(module.encode()) & 0xFFFF)
    if index < 0 or index >= 1 << 32:
        raise ValueError("replica index out of range")
    return (code << 32) | int(index)


@dataclass
class RngStream:
    seed: int
    stream: int = 0
    parents: tuple = ()
    gen: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.seed < 0 or self.stream < 0:
            raise ValueError("seed and stream must be non-negative")
        words = [int(self.seed)]
        for sid in (*self.parents, int(self.stream)):
            words += [sid & 0xFFFFFFFF, sid >> 32]
        self.gen = np.random.Generator(np.random.Philox(np.random.SeedSequence(words)))

    def child(self, module: str, index: int = 0) -> "RngStream":
        """Independent sub-stream; distinct parents give distinct children."""
        return RngStream(self.seed, stream_id(module, index), (*self.parents, int(self.stream)))

    # thin delegation keeps call sites short
    def uniform(self, low=0.0, high=1.0, size=None):
        return self.gen.uniform(low, high, size)

    def exponential(self, scale=1.0, size=None):
        return self.gen.exponential(scale, size)

    def poisson(self, lam, size=None):
        return self.gen.poisson(lam, size)

    def normal(self, loc=0.0, scale=1.0, size=None):
        return self.gen.normal(loc, scale, size)

    def random(self, size=None):
        return self.gen.random(size)

    def geometric_support0(self, mean: float, size=None):
        """Geometric variables on {0, 1, ...} with the given mean."""
        q = mean / (1.0 + mean)  # P(X >= k+1 | X >= k)
        return self.gen.geometric(1.0 - q, size) - 1

    def bernoulli(self, p: float, size=None):
        return (self.gen.random(size) < p).astype(np.int64)
