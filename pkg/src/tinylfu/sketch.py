"""Approximate frequency counting over packed small counters.

Two layouts share one packed counter array: a counting Bloom filter with
minimal-increment updates (``single-array-cbf``) and a count-min sketch with
equal-width rows (``rows-cms``), optionally with conservative update.  The
module also holds the plain Bloom filter used as a doorkeeper and an exact
dictionary histogram used as an error-free reference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from tinylfu import _kernels as _k

MASK64 = (1 << 64) - 1
PACKING_WIDTHS = (1, 2, 4, 8)

CBF = "single-array-cbf"
CMS = "rows-cms"


def mix64(x: int) -> int:
    """64-bit avalanche finalizer (murmur3 fmix64)."""
    x &= MASK64
    x ^= x >> 33
    x = (x * 0xFF51AFD7ED558CCD) & MASK64
    x ^= x >> 33
    x = (x * 0xC4CEB9FE1A85EC53) & MASK64
    x ^= x >> 33
    return x


def seed_key(seed: int) -> int:
    return mix64(seed ^ 0x9E3779B97F4A7C15)


def keyed_hash(key: int, seed: int) -> int:
    return mix64(key ^ seed_key(seed))


def hash_indexes(key: int, seed: int, count: int, span: int) -> list[int]:
    """``count`` indexes in ``[0, span)`` derived by double hashing."""
    h = keyed_hash(key, seed)
    h1 = h & 0xFFFFFFFF
    h2 = (h >> 32) | 1
    return [(h1 + j * h2) % span for j in range(count)]


def packing_width(bits: int) -> int:
    """Smallest cell width that divides a 64-bit word and holds ``bits``."""
    for width in PACKING_WIDTHS:
        if width >= bits:
            return width
    raise ValueError(f"counter width {bits} exceeds 8 bits")


def logical_width(max_count: int) -> int:
    """Bits needed to count 1..max_count (zero being the absent state)."""
    if max_count <= 1:
        return 1
    return math.ceil(math.log2(max_count))


def halve_mask(cell_bits: int) -> int:
    """Word mask that clears the top bit of every cell after a right shift."""
    cell = (1 << (cell_bits - 1)) - 1
    mask = 0
    for shift in range(0, 64, cell_bits):
        mask |= cell << shift
    return mask


@dataclass(frozen=True)
class SketchConfig:
    counter_count: int
    hash_count: int = 3
    counter_bits: int = 4
    cap: int = 15
    seed: int = 0
    layout: str = CBF
    cms_depth: int = 4
    conservative_update: bool = False

    def __post_init__(self):
        if self.counter_count < 1:
            raise ValueError("counter_count must be positive")
        if self.hash_count < 1:
            raise ValueError("hash_count must be positive")
        if not 1 <= self.counter_bits <= 8:
            raise ValueError("counter_bits must be in 1..8")
        if not 0 <= self.cap <= (1 << self.counter_bits) - 1:
            raise ValueError(
                f"cap {self.cap} does not fit in {self.counter_bits} bits")
        if self.layout not in (CBF, CMS):
            raise ValueError(f"unknown layout {self.layout!r}")
        if self.layout == CMS:
            if self.cms_depth < 1:
                raise ValueError("cms_depth must be positive")
            if self.counter_count % self.cms_depth:
                raise ValueError("counter_count must be divisible by cms_depth")
            if self.hash_count != self.cms_depth:
                raise ValueError("rows-cms requires hash_count == cms_depth")

    @property
    def cell_bits(self) -> int:
        return packing_width(self.counter_bits)

    @classmethod
    def cms(cls, counter_count: int, depth: int = 4, **kw) -> "SketchConfig":
        counter_count -= counter_count % depth
        return cls(counter_count=max(counter_count, depth), hash_count=depth,
                   layout=CMS, cms_depth=depth, **kw)


def as_signed(key: int) -> int:
    """Two's-complement image of an unsigned 64-bit key, for the kernels."""
    if not 0 <= key <= MASK64:
        raise ValueError(f"key {key} is not an unsigned 64-bit integer")
    return key - (1 << 64) if key >> 63 else key


class FrequencySketch:
    """Packed array of saturating counters with min-based estimation.

    Counters are stored little-endian in a numpy uint64 word array; halving
    shifts whole words and masks the bit that crossed each cell boundary.
    """

    def __init__(self, config: SketchConfig):
        self.config = config
        self.cell_bits = config.cell_bits
        self.per_word = 64 // self.cell_bits
        self.cell_mask = (1 << self.cell_bits) - 1
        self.words = np.zeros(-(-config.counter_count // self.per_word),
                              dtype=np.uint64)
        self._halve_mask = np.uint64(halve_mask(self.cell_bits))
        self.cap = config.cap
        self.skey = np.uint64(seed_key(config.seed))
        self.k = config.hash_count
        self.rows = config.layout == CMS
        self.width = (config.counter_count // config.cms_depth
                      if self.rows else config.counter_count)
        self.minimal = not self.rows or config.conservative_update

    def indexes(self, key: int) -> list[int]:
        return _k.indexes(as_signed(key), self.skey, self.k, self.width,
                          self.rows).tolist()

    def get(self, index: int) -> int:
        word, slot = divmod(index, self.per_word)
        return (int(self.words[word]) >> (slot * self.cell_bits)) & self.cell_mask

    def set(self, index: int, value: int) -> None:
        if not 0 <= value <= self.cap:
            raise ValueError(f"value {value} outside [0, {self.cap}]")
        word, slot = divmod(index, self.per_word)
        shift = slot * self.cell_bits
        w = int(self.words[word]) & ~(self.cell_mask << shift)
        self.words[word] = w | (value << shift)

    def counters(self) -> list[int]:
        return _k.unpack(self.words, self.config.counter_count,
                         self.cell_bits).tolist()

    def record(self, key: int) -> None:
        if key >> 63:
            key = as_signed(key)
        _k.sketch_record(self.words, key, self.skey, self.k, self.width,
                         self.rows, self.minimal, self.cell_bits, self.cap)

    def estimate(self, key: int) -> int:
        if key >> 63:
            key = as_signed(key)
        return _k.sketch_estimate(self.words, key, self.skey, self.k,
                                  self.width, self.rows, self.cell_bits)

    def halve(self) -> None:
        self.words >>= np.uint64(1)
        self.words &= self._halve_mask

    def clear(self) -> None:
        self.words[:] = 0

    def size_bits(self) -> dict:
        cfg = self.config
        return {
            "counters": cfg.counter_count,
            "cell_bits": self.cell_bits,
            "logical_bits": cfg.counter_bits,
            "storage_bits": self.words.size * 64,
            "counter_bits_total": cfg.counter_count * self.cell_bits,
        }


class Doorkeeper:
    """Plain Bloom filter placed in front of the main sketch."""

    def __init__(self, bit_count: int, hash_count: int = 3, seed: int = 1):
        if bit_count < 1 or hash_count < 1:
            raise ValueError("bit_count and hash_count must be positive")
        self.bit_count = bit_count
        self.hash_count = hash_count
        self.seed = seed
        self.skey = np.uint64(seed_key(seed))
        self.bits = np.zeros(-(-bit_count // 64), dtype=np.uint64)

    def insert(self, key: int) -> bool:
        """Set the key's bits; return True if all were already set."""
        if key >> 63:
            key = as_signed(key)
        return _k.bloom_insert(self.bits, key, self.skey, self.hash_count,
                               self.bit_count)

    def __contains__(self, key: int) -> bool:
        if key >> 63:
            key = as_signed(key)
        return _k.bloom_contains(self.bits, key, self.skey, self.hash_count,
                                 self.bit_count)

    def clear(self) -> None:
        self.bits[:] = 0

    def popcount(self) -> int:
        return int(np.unpackbits(self.bits.view(np.uint8)).sum())

    def false_positive_bound(self, inserted: int) -> float:
        k, m = self.hash_count, self.bit_count
        return (1.0 - math.exp(-k * inserted / m)) ** k

    def size_bits(self) -> dict:
        return {"bits": self.bit_count, "storage_bits": self.bits.size * 64}


# Float-mode halving is deferred through a power-of-two scale; values are
# renormalized once the exponent grows past this bound.
_RESCALE_AFTER = 256


class ExactHistogram:
    """Error-free frequency table with the same record/estimate/halve surface.

    ``mode='float'`` halves by exactly 2.0; ``mode='integer'`` floors.
    """

    def __init__(self, mode: str = "integer", cap: float = math.inf):
        if mode not in ("float", "integer"):
            raise ValueError(f"unknown mode {mode!r}")
        self.mode = mode
        self.cap = cap
        self.table: dict[int, float] = {}
        self._exp = 0  # stored value = true value * 2**_exp (float mode)

    def record(self, key: int) -> None:
        table = self.table
        if self.mode == "integer":
            value = table.get(key, 0)
            if value < self.cap:
                table[key] = value + 1
            return
        scale = math.ldexp(1.0, self._exp)
        value = table.get(key, 0.0)
        table[key] = min(value + scale, self.cap * scale)

    def estimate(self, key: int):
        if self.mode == "integer":
            return self.table.get(key, 0)
        return math.ldexp(self.table.get(key, 0.0), -self._exp)

    def halve(self) -> None:
        if self.mode == "integer":
            self.table = {k: v >> 1 for k, v in self.table.items() if v > 1}
            return
        self._exp += 1
        if self._exp >= _RESCALE_AFTER:
            exp = self._exp
            rescaled = {k: math.ldexp(v, -exp) for k, v in self.table.items()}
            self.table = {k: v for k, v in rescaled.items() if v > 0.0}
            self._exp = 0

    def clear(self) -> None:
        self.table = {}
        self._exp = 0

    def items(self):
        for key in self.table:
            yield key, self.estimate(key)

    def __len__(self) -> int:
        return len(self.table)

    def size_bits(self) -> dict:
        return {"entries": len(self.table), "storage_bits": 0}
