"""Caches built from an eviction policy, optionally gated by TinyLFU."""

from __future__ import annotations

from tinylfu.admission import FrequencyHistogram, HistogramConfig
from tinylfu.eviction import LFU, LRU, SLRU, Policy, split_protected


class PlainCache:
    """Eviction policy alone: every miss is inserted."""

    def __init__(self, policy: Policy):
        self.policy = policy
        self.histogram = None
        self.hits = 0
        self.misses = 0

    def access(self, key) -> bool:
        policy = self.policy
        if policy.access(key):
            self.hits += 1
            return True
        self.misses += 1
        if policy.full:
            policy.evict(policy.victim())
        policy.insert(key)
        return False

    def __contains__(self, key) -> bool:
        return key in self.policy

    def __len__(self) -> int:
        return len(self.policy)

    @property
    def capacity(self) -> int:
        return self.policy.capacity


class AugmentedCache(PlainCache):
    """Eviction policy behind a TinyLFU admission gate.

    Each access is recorded in the histogram.  On a miss with a full cache
    the policy's proposed victim is replaced only if the histogram admits
    the newcomer.
    """

    def __init__(self, policy: Policy, histogram: FrequencyHistogram):
        if histogram.config.cache_size != policy.capacity:
            raise ValueError("histogram cache_size must match policy capacity")
        super().__init__(policy)
        self.histogram = histogram
        self.rejected = 0
        if isinstance(policy, LFU):
            histogram.add_reset_listener(policy.halve_counts)

    def access(self, key) -> bool:
        self.histogram.record(key)
        policy = self.policy
        if policy.access(key):
            self.hits += 1
            return True
        self.misses += 1
        if not policy.full:
            policy.insert(key)
            return False
        victim = policy.victim()
        if self.histogram.admit(key, victim):
            policy.evict(victim)
            policy.insert(key)
        else:
            self.rejected += 1
        return False


def window_split(capacity: int, window_fraction: float) -> tuple[int, int, int]:
    """(window, probation, protected) capacities for W-TinyLFU."""
    if capacity < 1:
        raise ValueError("capacity must be positive")
    if not 0 < window_fraction <= 1:
        raise ValueError("window_fraction must be in (0, 1]")
    window = min(capacity, max(1, int(window_fraction * capacity + 0.5)))
    main = capacity - window
    protected = split_protected(main) if main else 0
    return window, main - protected, protected


class WTinyLfuCache:
    """Admission-free LRU window in front of a TinyLFU-gated SLRU main region."""

    def __init__(self, capacity: int, histogram: FrequencyHistogram,
                 window_fraction: float = 0.01):
        window, probation, protected = window_split(capacity, window_fraction)
        self.capacity = capacity
        self.window_fraction = window_fraction
        self.window = LRU(window)
        main = probation + protected
        self.main = SLRU(main, protected_capacity=protected) if main else None
        self.histogram = histogram
        self.hits = 0
        self.misses = 0
        self.rejected = 0

    def access(self, key) -> bool:
        self.histogram.record(key)
        if self.window.access(key) or (
                self.main is not None and self.main.access(key)):
            self.hits += 1
            return True
        self.misses += 1
        window = self.window
        if not window.full:
            window.insert(key)
            return False
        candidate = window.pop_lru()
        window.insert(key)
        main = self.main
        if main is None:
            return False
        if not main.full:
            main.insert(candidate)
            return False
        victim = main.victim()
        if self.histogram.admit(candidate, victim):
            main.evict(victim)
            main.insert(candidate)
        else:
            self.rejected += 1
        return False

    def region_of(self, key):
        if key in self.window:
            return "window"
        if self.main is not None:
            return self.main.segment_of(key)
        return None

    def __contains__(self, key) -> bool:
        return key in self.window or (self.main is not None and key in self.main)

    def __len__(self) -> int:
        return len(self.window) + (len(self.main) if self.main else 0)


def default_histogram(capacity: int, sample_factor: float = 10,
                      **overrides) -> FrequencyHistogram:
    sample = max(capacity, int(round(sample_factor * capacity)))
    return FrequencyHistogram(
        HistogramConfig(sample_size=sample, cache_size=capacity, **overrides))
