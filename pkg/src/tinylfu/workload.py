"""Seeded key streams and analytic hit-ratio bounds.

Keys are non-negative integers.  Synthetic sources draw item ranks
``1..N``; burst keys are allocated above ``N`` so they never collide with
background items.
"""

from __future__ import annotations

import hashlib
import heapq
import math
from collections import Counter
from typing import Iterable, Iterator, Sequence

import numpy as np

_CHUNK = 1 << 16


class TraceFormatError(ValueError):
    def __init__(self, path, lineno: int, line: str, reason: str):
        super().__init__(f"{path}:{lineno}: {reason}: {line!r}")
        self.lineno = lineno


class ZipfDistribution:
    """p(i) proportional to i**-alpha over ranks 1..N, sampled by CDF search."""

    def __init__(self, universe_size: int, skew: float, seed: int = 0):
        if universe_size < 1:
            raise ValueError("universe_size must be positive")
        if skew < 0:
            raise ValueError("skew must be non-negative")
        self.universe_size = universe_size
        self.skew = skew
        self.seed = seed
        ranks = np.arange(1, universe_size + 1, dtype=np.float64)
        weights = ranks ** -skew
        self.normalization = math.fsum(weights.tolist())
        self.probabilities = weights / self.normalization
        cdf = np.cumsum(self.probabilities)
        cdf[-1] = 1.0
        self.cdf = cdf
        self.rng = np.random.default_rng(seed)
        self._buffer: list[int] = []

    def probability(self, rank: int) -> float:
        return float(self.probabilities[rank - 1])

    def sample(self, n: int) -> np.ndarray:
        u = self.rng.random(n)
        return np.searchsorted(self.cdf, u, side="right").astype(np.int64) + 1

    def next(self) -> int:
        if not self._buffer:
            self._buffer = self.sample(_CHUNK).tolist()[::-1]
        return self._buffer.pop()

    def __iter__(self) -> Iterator[int]:
        while True:
            yield from self.sample(_CHUNK).tolist()

    def take(self, n: int) -> list[int]:
        return self.sample(n).tolist()


class EpochSwapSource:
    """Constant-shape distribution whose rank-to-item mapping is re-permuted
    every ``epoch_length`` requests."""

    def __init__(self, base: ZipfDistribution, epoch_length: int, seed: int = 0):
        if epoch_length < 1:
            raise ValueError("epoch_length must be positive")
        self.base = base
        self.epoch_length = epoch_length
        self.seed = seed

    def permutation(self, epoch: int) -> np.ndarray:
        rng = np.random.default_rng([self.seed, epoch])
        return rng.permutation(self.base.universe_size) + 1

    def __iter__(self) -> Iterator[int]:
        epoch = 0
        while True:
            perm = self.permutation(epoch)
            left = self.epoch_length
            while left:
                n = min(left, _CHUNK)
                yield from perm[self.base.sample(n) - 1].tolist()
                left -= n
            epoch += 1


class BurstSource:
    """Background distribution interleaved with short bursts of fresh keys.

    At each position a new burst starts with probability ``burst_rate``: a
    never-seen key is emitted now and ``burst_length - 1`` more times at
    offsets drawn uniformly from the next ``burst_span`` positions.  Due
    burst emissions pre-empt background draws.
    """

    def __init__(self, background: ZipfDistribution, burst_rate: float,
                 burst_length: int, burst_span: int, seed: int = 0):
        if not 0 <= burst_rate <= 1:
            raise ValueError("burst_rate must be in [0, 1]")
        if burst_length < 1 or burst_span < burst_length - 1:
            raise ValueError("need burst_length >= 1 and span >= length - 1")
        self.background = background
        self.burst_rate = burst_rate
        self.burst_length = burst_length
        self.burst_span = burst_span
        self.seed = seed

    def __iter__(self) -> Iterator[int]:
        rng = np.random.default_rng(self.seed)
        background = iter(self.background)
        pending: list[tuple[int, int, int]] = []
        next_key = self.background.universe_size + 1
        seq = 0
        pos = 0
        while True:
            coins = rng.random(_CHUNK).tolist()
            for coin in coins:
                if pending and pending[0][0] <= pos:
                    yield heapq.heappop(pending)[2]
                elif coin < self.burst_rate:
                    key = next_key
                    next_key += 1
                    if self.burst_length > 1:
                        offsets = rng.choice(self.burst_span,
                                             self.burst_length - 1,
                                             replace=False)
                        for off in offsets.tolist():
                            seq += 1
                            heapq.heappush(pending, (pos + 1 + off, seq, key))
                    yield key
                else:
                    yield next(background)
                pos += 1


class KeyInterner:
    """Maps string tokens to 64-bit keys; a hash collision is a hard error."""

    def __init__(self):
        self.names: dict[int, str] = {}

    def __call__(self, token: str) -> int:
        digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
        key = int.from_bytes(digest, "little")
        seen = self.names.setdefault(key, token)
        if seen != token:
            raise ValueError(f"key collision between {seen!r} and {token!r}")
        return key


class TraceFile:
    """File-backed trace.

    ``keys``: one token per line, blank and ``#`` lines skipped.
    ``blocks``: ``start_byte_offset,length_bytes`` per line, expanded to the
    page keys it covers.
    """

    def __init__(self, path, format: str = "keys", page_size: int = 4096):
        if format not in ("keys", "blocks"):
            raise ValueError(f"unknown trace format {format!r}")
        if page_size < 1:
            raise ValueError("page_size must be positive")
        self.path = path
        self.format = format
        self.page_size = page_size

    def __iter__(self) -> Iterator[int]:
        intern = KeyInterner()
        with open(self.path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                if self.format == "keys":
                    if len(line.split()) != 1:
                        raise TraceFormatError(self.path, lineno, line,
                                               "expected one token")
                    yield intern(line)
                else:
                    yield from self._pages(lineno, line)

    def _pages(self, lineno: int, line: str) -> Iterator[int]:
        parts = line.split(",")
        if len(parts) != 2:
            raise TraceFormatError(self.path, lineno, line,
                                   "expected start,length")
        try:
            start, length = (int(p.strip()) for p in parts)
        except ValueError:
            raise TraceFormatError(self.path, lineno, line,
                                   "non-integer field") from None
        if start < 0 or length < 0:
            raise TraceFormatError(self.path, lineno, line, "negative field")
        first = start // self.page_size
        yield from range(first, first + -(-length // self.page_size))


def infinite_cache_bound(trace: Iterable[int]) -> float:
    """Hit ratio of an unbounded cache: only first occurrences miss."""
    counts = Counter(trace)
    total = sum(counts.values())
    if total == 0:
        raise ValueError("empty trace")
    return (total - len(counts)) / total


def ideal_static_hit_ratio(dist, capacity: int) -> float:
    """Sum of the ``capacity`` largest item probabilities."""
    if isinstance(dist, ZipfDistribution):
        probs = dist.probabilities
    else:
        probs = np.asarray(dist, dtype=np.float64)
    if capacity > len(probs):
        raise ValueError("capacity exceeds universe size")
    top = np.sort(probs)[::-1][:capacity]
    return math.fsum(top.tolist())


def take(source: Iterable[int], n: int) -> list[int]:
    if isinstance(source, ZipfDistribution):
        return source.take(n)
    out = []
    for key in source:
        out.append(key)
        if len(out) >= n:
            break
    return out


def expected_distinct(probs: Sequence[float] | np.ndarray, n: int) -> float:
    """Expected number of distinct items in ``n`` independent draws."""
    q = 1.0 - np.asarray(probs, dtype=np.float64)
    return float(np.sum(1.0 - q ** n))


def expected_repeated(probs: Sequence[float] | np.ndarray, n: int) -> float:
    """Expected number of items drawn at least twice in ``n`` draws."""
    p = np.asarray(probs, dtype=np.float64)
    q = 1.0 - p
    return float(np.sum(1.0 - q ** n - n * p * q ** (n - 1)))
