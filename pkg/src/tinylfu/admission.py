"""TinyLFU frequency histogram and admission decision."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from tinylfu import _kernels as _k
from tinylfu.sketch import (
    CBF,
    Doorkeeper,
    ExactHistogram,
    FrequencySketch,
    SketchConfig,
    as_signed,
    logical_width,
    packing_width,
)

BACKENDS = ("cbf", "cms", "exact-float", "exact-int")


@dataclass(frozen=True)
class HistogramConfig:
    """Sizing for a TinyLFU histogram.

    ``counter_cap`` defaults to ceil(W/C). With the doorkeeper enabled the
    main sketch saturates one below it, the doorkeeper bit supplying the
    last unit.  The exact backends never use a doorkeeper.
    """

    sample_size: int
    cache_size: int
    counter_cap: int | None = None
    doorkeeper_enabled: bool = True
    budget_bits_per_sample_item: float = 10.0
    doorkeeper_share: float = 0.3
    sketch_backend: str = "cbf"
    hash_count: int = 3
    cms_depth: int = 4
    conservative_update: bool = False
    doorkeeper_hashes: int = 3
    seed: int = 0

    def __post_init__(self):
        if self.cache_size < 1 or self.sample_size < self.cache_size:
            raise ValueError("need 1 <= cache_size <= sample_size")
        if self.counter_cap is None:
            object.__setattr__(
                self, "counter_cap", -(-self.sample_size // self.cache_size))
        if self.counter_cap < 1:
            raise ValueError("counter_cap must be >= 1")
        if not 0 < self.doorkeeper_share < 1:
            raise ValueError("doorkeeper_share must be in (0, 1)")
        if self.budget_bits_per_sample_item <= 0:
            raise ValueError("budget must be positive")
        if self.sketch_backend not in BACKENDS:
            raise ValueError(f"unknown backend {self.sketch_backend!r}")

    @property
    def exact(self) -> bool:
        return self.sketch_backend.startswith("exact")

    @property
    def uses_doorkeeper(self) -> bool:
        return self.doorkeeper_enabled and not self.exact

    @property
    def main_cap(self) -> int:
        return self.counter_cap - 1 if self.uses_doorkeeper else self.counter_cap

    @property
    def main_counter_bits(self) -> int:
        """Packed cell width for the main sketch."""
        return packing_width(max(1, math.ceil(math.log2(self.main_cap + 1))))

    @property
    def main_logical_bits(self) -> int:
        return logical_width(self.main_cap)

    @property
    def total_budget_bits(self) -> int:
        return int(self.budget_bits_per_sample_item * self.sample_size)

    @property
    def doorkeeper_bits(self) -> int:
        if not self.uses_doorkeeper:
            return 0
        return max(64, int(self.total_budget_bits * self.doorkeeper_share))

    @property
    def main_counter_count(self) -> int:
        main_budget = self.total_budget_bits - self.doorkeeper_bits
        return max(self.cms_depth, main_budget // self.main_counter_bits)

    def build_main(self):
        if self.sketch_backend == "exact-float":
            return ExactHistogram("float", cap=self.counter_cap)
        if self.sketch_backend == "exact-int":
            return ExactHistogram("integer", cap=self.counter_cap)
        common = dict(counter_bits=self.main_counter_bits, cap=self.main_cap,
                      seed=self.seed)
        if self.sketch_backend == "cms":
            return FrequencySketch(SketchConfig.cms(
                self.main_counter_count, self.cms_depth,
                conservative_update=self.conservative_update, **common))
        return FrequencySketch(SketchConfig(
            counter_count=self.main_counter_count, hash_count=self.hash_count,
            layout=CBF, **common))


class FrequencyHistogram:
    """Doorkeeper + main sketch + event counter, aged by periodic halving.

    Every ``sample_size`` recorded events all counters (including the event
    counter) are halved and the doorkeeper is cleared, so after the first
    reset one happens every W/2 events.
    """

    def __init__(self, config: HistogramConfig, main=None):
        self.config = config
        self.main = main if main is not None else config.build_main()
        self.doorkeeper = (
            Doorkeeper(config.doorkeeper_bits, config.doorkeeper_hashes,
                       seed=config.seed + 0x5BD1E995)
            if config.uses_doorkeeper else None)
        self.sample_size = config.sample_size
        self.counter_cap = config.counter_cap
        self.events = 0
        self.resets = 0
        self._listeners: list[Callable[[], None]] = []
        self._fused = None
        if (isinstance(self.main, FrequencySketch)
                and self.doorkeeper is not None):
            # One compiled call per record/estimate instead of two.
            dk, m = self.doorkeeper, self.main
            self._fused = (
                (dk.bits, dk.skey, dk.hash_count, dk.bit_count, m.words),
                (m.skey, m.k, m.width, m.rows, m.minimal, m.cell_bits, m.cap),
                (m.skey, m.k, m.width, m.rows, m.cell_bits, self.counter_cap),
            )

    def record(self, key: int) -> None:
        fused = self._fused
        if fused is not None:
            if key >> 63:
                key = as_signed(key)
            _k.gated_record(*fused[0], key, *fused[1])
        else:
            dk = self.doorkeeper
            if dk is None or dk.insert(key):
                self.main.record(key)
        self.events += 1
        if self.events >= self.sample_size:
            self.reset()

    def estimate(self, key: int):
        fused = self._fused
        if fused is not None:
            if key >> 63:
                key = as_signed(key)
            return _k.gated_estimate(*fused[0], key, *fused[2])
        value = self.main.estimate(key)
        dk = self.doorkeeper
        if dk is not None and key in dk:
            value = min(value + 1, self.counter_cap)
        return value

    def reset(self) -> None:
        self.main.halve()
        if self.doorkeeper is not None:
            self.doorkeeper.clear()
        self.events //= 2
        self.resets += 1
        for hook in self._listeners:
            hook()

    def admit(self, candidate: int, victim: int) -> bool:
        """True iff the candidate is strictly more frequent than the victim."""
        return self.estimate(candidate) > self.estimate(victim)

    def add_reset_listener(self, hook: Callable[[], None]) -> None:
        if hook in self._listeners:
            raise ValueError("reset listener already registered")
        self._listeners.append(hook)

    def size_bits(self) -> dict:
        main = self.main.size_bits()
        dk_bits = self.doorkeeper.bit_count if self.doorkeeper else 0
        main_bits = main.get("counter_bits_total", 0)
        return {
            "doorkeeper_bits": dk_bits,
            "main_bits": main_bits,
            "event_counter_bits": max(1, math.ceil(math.log2(self.sample_size))),
            "total_bits": dk_bits + main_bits,
        }
