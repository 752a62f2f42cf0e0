"""Eviction policies behind one driver interface.

A policy never inserts on a miss by itself.  The driver calls ``access``;
on a miss it may ask for ``victim()``, ``evict`` it and ``insert`` the new
key, which lets an admission filter sit between the two steps.
"""

from __future__ import annotations

from collections import OrderedDict


class CacheFullError(RuntimeError):
    pass


class Policy:
    name = "policy"

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity

    @property
    def full(self) -> bool:
        return len(self) >= self.capacity

    def _check_insert(self, key) -> None:
        if self.full:
            raise CacheFullError(f"{self.name} is full; evict first")
        if key in self:
            raise KeyError(f"{key!r} already cached")

    def _check_victim(self) -> None:
        if not self.full:
            raise CacheFullError(f"{self.name} is not full; no victim needed")

    def access(self, key) -> bool:
        raise NotImplementedError

    def victim(self):
        raise NotImplementedError

    def insert(self, key) -> None:
        raise NotImplementedError

    def evict(self, key) -> None:
        raise NotImplementedError

    def __contains__(self, key) -> bool:
        raise NotImplementedError

    def __len__(self) -> int:
        raise NotImplementedError


class LRU(Policy):
    name = "lru"

    def __init__(self, capacity: int):
        super().__init__(capacity)
        self.items: OrderedDict = OrderedDict()

    def access(self, key) -> bool:
        if key in self.items:
            self.items.move_to_end(key)
            return True
        return False

    def victim(self):
        self._check_victim()
        return next(iter(self.items))

    def insert(self, key) -> None:
        self._check_insert(key)
        self.items[key] = None

    def evict(self, key) -> None:
        del self.items[key]

    def pop_lru(self):
        return self.items.popitem(last=False)[0]

    def __contains__(self, key) -> bool:
        return key in self.items

    def __len__(self) -> int:
        return len(self.items)


class SplitMix64:
    """Tiny seeded 64-bit generator (splitmix64 update and output mix)."""

    def __init__(self, seed: int):
        self.state = seed & 0xFFFFFFFFFFFFFFFF

    def next(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
        return z ^ (z >> 31)

    def below(self, n: int) -> int:
        return self.next() % n


class RandomPolicy(Policy):
    """Uniform random victim.

    The proposed victim is drawn once per request: repeated ``victim()``
    calls agree until the next access, insert or evict.
    """

    name = "random"

    def __init__(self, capacity: int, seed: int = 0):
        super().__init__(capacity)
        self.keys: list = []
        self.pos: dict = {}
        self.rng = SplitMix64(seed)
        self._pending = None

    def access(self, key) -> bool:
        self._pending = None
        return key in self.pos

    def victim(self):
        self._check_victim()
        if self._pending is None:
            self._pending = self.keys[self.rng.below(len(self.keys))]
        return self._pending

    def insert(self, key) -> None:
        self._check_insert(key)
        self.pos[key] = len(self.keys)
        self.keys.append(key)
        self._pending = None

    def evict(self, key) -> None:
        i = self.pos.pop(key)
        last = self.keys.pop()
        if i < len(self.keys):
            self.keys[i] = last
            self.pos[last] = i
        self._pending = None

    def __contains__(self, key) -> bool:
        return key in self.pos

    def __len__(self) -> int:
        return len(self.keys)


class LFU(Policy):
    """In-memory LFU over cached items; ties go to the least recently used.

    ``halve_counts`` is the reset hook used when the cache sits behind a
    TinyLFU histogram.
    """

    name = "lfu"

    def __init__(self, capacity: int):
        super().__init__(capacity)
        self.freq: dict = {}
        self.buckets: dict[int, OrderedDict] = {}
        self.min_freq = 0
        self._recency: dict = {}
        self._tick = 0

    def _place(self, key, f: int) -> None:
        self.freq[key] = f
        self._tick += 1
        self._recency[key] = self._tick
        bucket = self.buckets.get(f)
        if bucket is None:
            bucket = self.buckets[f] = OrderedDict()
        bucket[key] = None

    def _unplace(self, key) -> int:
        f = self.freq.pop(key)
        del self._recency[key]
        bucket = self.buckets[f]
        del bucket[key]
        if not bucket:
            del self.buckets[f]
        return f

    def access(self, key) -> bool:
        if key not in self.freq:
            return False
        f = self._unplace(key)
        self._place(key, f + 1)
        if f == self.min_freq and f not in self.buckets:
            self.min_freq = f + 1
        return True

    def victim(self):
        self._check_victim()
        return next(iter(self.buckets[self.min_freq]))

    def insert(self, key) -> None:
        self._check_insert(key)
        self.min_freq = min(self.min_freq, 1) if self.freq else 1
        self._place(key, 1)

    def evict(self, key) -> None:
        f = self._unplace(key)
        if f == self.min_freq and f not in self.buckets and self.freq:
            self.min_freq = min(self.buckets)

    def count(self, key) -> int:
        return self.freq[key]

    def halve_counts(self) -> None:
        # Rebuild buckets in global recency order so tie-breaks survive.
        order = sorted(self._recency, key=self._recency.__getitem__)
        old = self.freq
        self.freq = {}
        self.buckets = {}
        self._recency = {}
        for key in order:
            self._place(key, old[key] // 2)
        self.min_freq = min(self.buckets) if self.buckets else 0

    def __contains__(self, key) -> bool:
        return key in self.freq

    def __len__(self) -> int:
        return len(self.freq)


def split_protected(capacity: int, protected_fraction: float = 0.8) -> int:
    """Protected-segment size: round-half-up of the fraction, leaving
    probation at least one slot whenever capacity allows it."""
    protected = int(protected_fraction * capacity + 0.5)
    return min(protected, capacity - 1) if capacity > 1 else 0


class SLRU(Policy):
    """Segmented LRU with probation and protected segments.

    The protected segment is bounded by ``protected_capacity``; probation
    holds the rest of the capacity.  A probation hit promotes to protected,
    and protected overflow demotes its LRU item to probation's MRU end.
    """

    name = "slru"

    def __init__(self, capacity: int, protected_capacity: int | None = None):
        super().__init__(capacity)
        if protected_capacity is None:
            protected_capacity = split_protected(capacity)
        if not 0 <= protected_capacity <= capacity:
            raise ValueError("protected_capacity out of range")
        self.protected_capacity = protected_capacity
        self.probation: OrderedDict = OrderedDict()
        self.protected: OrderedDict = OrderedDict()

    @property
    def probation_capacity(self) -> int:
        return self.capacity - self.protected_capacity

    def access(self, key) -> bool:
        if key in self.protected:
            self.protected.move_to_end(key)
            return True
        if key in self.probation:
            del self.probation[key]
            if self.protected_capacity == 0:
                self.probation[key] = None
                return True
            self.protected[key] = None
            if len(self.protected) > self.protected_capacity:
                demoted, _ = self.protected.popitem(last=False)
                self.probation[demoted] = None
            return True
        return False

    def victim(self):
        self._check_victim()
        if self.probation:
            return next(iter(self.probation))
        return next(iter(self.protected))

    def insert(self, key) -> None:
        self._check_insert(key)
        self.probation[key] = None

    def evict(self, key) -> None:
        if key in self.probation:
            del self.probation[key]
        else:
            del self.protected[key]

    def segment_of(self, key):
        if key in self.probation:
            return "probation"
        if key in self.protected:
            return "protected"
        return None

    def __contains__(self, key) -> bool:
        return key in self.probation or key in self.protected

    def __len__(self) -> int:
        return len(self.probation) + len(self.protected)


class ARC(Policy):
    """Adaptive Replacement Cache (Megiddo and Modha), split into the
    access / victim / evict / insert steps of the driver interface.

    ``access`` classifies a miss (ghost hit in B1 or B2, or brand new) and
    adapts the target ``p``; ``victim`` applies REPLACE; ``evict`` moves
    the resident victim to its ghost list; ``insert`` finishes the request.
    """

    name = "arc"

    def __init__(self, capacity: int):
        super().__init__(capacity)
        self.p = 0.0
        self.t1: OrderedDict = OrderedDict()
        self.t2: OrderedDict = OrderedDict()
        self.b1: OrderedDict = OrderedDict()
        self.b2: OrderedDict = OrderedDict()
        self._case = None

    def access(self, key) -> bool:
        if key in self.t1:
            del self.t1[key]
            self.t2[key] = None
            return True
        if key in self.t2:
            self.t2.move_to_end(key)
            return True
        c = self.capacity
        if key in self.b1:
            self.p = min(float(c), self.p + max(len(self.b2) / len(self.b1), 1.0))
            self._case = ("b1", key)
        elif key in self.b2:
            self.p = max(0.0, self.p - max(len(self.b1) / len(self.b2), 1.0))
            self._case = ("b2", key)
        else:
            l1 = len(self.t1) + len(self.b1)
            total = l1 + len(self.t2) + len(self.b2)
            if l1 == c:
                kind = "l1-full" if len(self.t1) < c else "t1-full"
            elif total >= c and total == 2 * c:
                kind = "all-full"
            else:
                kind = "new"
            self._case = (kind, key)
        return False

    def _replace_target(self):
        in_b2 = self._case is not None and self._case[0] == "b2"
        if self.t1 and (len(self.t1) > self.p or (in_b2 and len(self.t1) == self.p)):
            return next(iter(self.t1))
        return next(iter(self.t2))

    def victim(self):
        self._check_victim()
        if self._case is not None and self._case[0] == "t1-full":
            return next(iter(self.t1))
        return self._replace_target()

    def evict(self, key) -> None:
        discard = self._case is not None and self._case[0] == "t1-full"
        if key in self.t1:
            del self.t1[key]
            if not discard:
                self.b1[key] = None
        else:
            del self.t2[key]
            self.b2[key] = None

    def insert(self, key) -> None:
        self._check_insert(key)
        kind = self._case[0] if self._case and self._case[1] == key else "new"
        self._case = None
        if kind in ("b1", "b2"):
            (self.b1 if kind == "b1" else self.b2).pop(key)
            self.t2[key] = None
            return
        if kind == "l1-full" and self.b1:
            self.b1.popitem(last=False)
        elif kind == "all-full" and self.b2:
            self.b2.popitem(last=False)
        self.t1[key] = None
        self._trim_ghosts()

    def _trim_ghosts(self) -> None:
        # Directory bounds: |T1|+|B1| <= c and the four lists <= 2c.
        c = self.capacity
        while len(self.t1) + len(self.b1) > c and self.b1:
            self.b1.popitem(last=False)
        while (len(self.t1) + len(self.t2) + len(self.b1) + len(self.b2) > 2 * c
               and self.b2):
            self.b2.popitem(last=False)

    def __contains__(self, key) -> bool:
        return key in self.t1 or key in self.t2

    def __len__(self) -> int:
        return len(self.t1) + len(self.t2)


def make_policy(name: str, capacity: int, seed: int = 0) -> Policy:
    name = name.lower()
    if name == "lru":
        return LRU(capacity)
    if name == "random":
        return RandomPolicy(capacity, seed=seed)
    if name == "lfu":
        return LFU(capacity)
    if name == "slru":
        return SLRU(capacity)
    if name == "arc":
        return ARC(capacity)
    raise ValueError(f"unknown eviction policy {name!r}")
