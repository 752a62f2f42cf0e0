"""Trace-driven experiment driver: single runs, grids, error decomposition
and memory accounting."""

from __future__ import annotations

import csv
import io
import itertools
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

from tinylfu.admission import FrequencyHistogram, HistogramConfig
from tinylfu.cache import AugmentedCache, PlainCache, WTinyLfuCache
from tinylfu.eviction import make_policy
from tinylfu.sketch import logical_width
from tinylfu.workload import (
    BurstSource,
    EpochSwapSource,
    TraceFile,
    ZipfDistribution,
    expected_distinct,
    expected_repeated,
    ideal_static_hit_ratio,
)

log = logging.getLogger(__name__)

PLAIN_POLICIES = ("lru", "random", "lfu", "slru", "arc")
AUGMENTED_POLICIES = {"tlru": "lru", "trandom": "random", "tlfu": "lfu"}
POLICIES = PLAIN_POLICIES + tuple(AUGMENTED_POLICIES) + ("wtinylfu",)

CSV_FIELDS = ("policy", "capacity", "sample_factor", "window_fraction",
              "workload", "requests", "warmup", "hits", "hit_ratio",
              "sketch_bits", "bits_per_sample_item", "seed", "error")

WARMUP_SAMPLE_MULTIPLE = 20
WARMUP_CAP = 1_000_000


@dataclass(frozen=True)
class WorkloadSpec:
    kind: str = "zipf"
    universe: int = 1_000_000
    skew: float = 0.9
    epoch_length: int = 10_000
    burst_rate: float = 0.05
    burst_length: int = 4
    burst_span: int = 8
    path: str | None = None
    format: str = "keys"
    page_size: int = 4096

    def __post_init__(self):
        if self.kind not in ("zipf", "epoch-swap", "burst", "trace"):
            raise ValueError(f"unknown workload kind {self.kind!r}")
        if self.kind == "trace" and not self.path:
            raise ValueError("trace workload needs a path")

    @property
    def synthetic(self) -> bool:
        return self.kind != "trace"

    def label(self) -> str:
        if self.kind == "zipf":
            return f"zipf({self.universe};{self.skew:g})"
        if self.kind == "epoch-swap":
            return f"epoch-swap({self.universe};{self.skew:g};{self.epoch_length})"
        if self.kind == "burst":
            return (f"burst({self.universe};{self.skew:g};{self.burst_rate:g};"
                    f"{self.burst_length};{self.burst_span})")
        return f"trace({self.path};{self.format})"

    def source(self, seed: int):
        if self.kind == "trace":
            return TraceFile(self.path, self.format, self.page_size)
        base = ZipfDistribution(self.universe, self.skew, seed=seed)
        if self.kind == "zipf":
            return base
        if self.kind == "epoch-swap":
            return EpochSwapSource(base, self.epoch_length, seed=seed + 1)
        return BurstSource(base, self.burst_rate, self.burst_length,
                           self.burst_span, seed=seed + 1)


@dataclass(frozen=True)
class RunConfig:
    policy: str
    capacity: int
    workload: WorkloadSpec = field(default_factory=WorkloadSpec)
    sample_factor: float = 10.0
    window_fraction: float = 0.01
    requests: int | None = 2_000_000
    warmup: int | None = None
    seed: int = 0
    budget_bits: float = 10.0
    backend: str = "cbf"
    doorkeeper: bool = True
    conservative_update: bool = False

    def __post_init__(self):
        if self.policy not in POLICIES:
            raise ValueError(f"unknown policy {self.policy!r}")
        if self.capacity < 1:
            raise ValueError("capacity must be positive")
        if self.sample_factor < 1:
            raise ValueError("sample_factor must be >= 1")
        if not 0 < self.window_fraction <= 1:
            raise ValueError("window_fraction must be in (0, 1]")
        if self.requests is not None and self.requests < 1:
            raise ValueError("requests must be positive")
        if self.warmup is not None and self.warmup < 0:
            raise ValueError("warmup must be non-negative")
        if self.requests is None and self.workload.synthetic:
            raise ValueError("synthetic workloads need a request budget")

    @property
    def gated(self) -> bool:
        return self.policy not in PLAIN_POLICIES

    @property
    def sample_size(self) -> int:
        return max(self.capacity, int(self.sample_factor * self.capacity + 0.5))

    @property
    def effective_warmup(self) -> int:
        if self.warmup is not None:
            return self.warmup
        if not self.workload.synthetic:
            return 0
        warmup = WARMUP_SAMPLE_MULTIPLE * self.sample_size
        if warmup > WARMUP_CAP:
            log.info("warm-up %d capped at %d requests", warmup, WARMUP_CAP)
            warmup = WARMUP_CAP
        return warmup

    def histogram_config(self, **overrides) -> HistogramConfig:
        params = dict(
            sample_size=self.sample_size, cache_size=self.capacity,
            doorkeeper_enabled=self.doorkeeper,
            budget_bits_per_sample_item=self.budget_bits,
            sketch_backend=self.backend,
            conservative_update=self.conservative_update, seed=self.seed)
        params.update(overrides)
        return HistogramConfig(**params)


@dataclass
class RunReport:
    config: RunConfig
    requests: int
    warmup: int
    hits: int
    sketch_bits: int
    wall_time: float

    @property
    def misses(self) -> int:
        return self.requests - self.hits

    @property
    def hit_ratio(self) -> float:
        return self.hits / self.requests if self.requests else 0.0

    @property
    def bits_per_sample_item(self) -> float:
        if not self.config.gated:
            return 0.0
        return self.sketch_bits / self.config.sample_size

    def row(self) -> dict:
        row = config_row(self.config)
        row.update(requests=self.requests, warmup=self.warmup, hits=self.hits,
                   hit_ratio=repr(self.hit_ratio), sketch_bits=self.sketch_bits,
                   bits_per_sample_item=repr(self.bits_per_sample_item))
        return row


def config_row(cfg: RunConfig) -> dict:
    row = dict.fromkeys(CSV_FIELDS, "")
    row.update(policy=cfg.policy, capacity=cfg.capacity,
               workload=cfg.workload.label(), seed=cfg.seed)
    if cfg.gated:
        row["sample_factor"] = repr(float(cfg.sample_factor))
    if cfg.policy == "wtinylfu":
        row["window_fraction"] = repr(float(cfg.window_fraction))
    return row


def build_cache(cfg: RunConfig, histogram: FrequencyHistogram | None = None):
    if cfg.gated and histogram is None:
        histogram = FrequencyHistogram(cfg.histogram_config())
    if cfg.policy == "wtinylfu":
        return WTinyLfuCache(cfg.capacity, histogram, cfg.window_fraction)
    if cfg.policy in AUGMENTED_POLICIES:
        policy = make_policy(AUGMENTED_POLICIES[cfg.policy], cfg.capacity,
                             seed=cfg.seed)
        return AugmentedCache(policy, histogram)
    return PlainCache(make_policy(cfg.policy, cfg.capacity, seed=cfg.seed))


def key_stream(cfg: RunConfig):
    """Warm-up plus counted keys for ``cfg``, as one iterator."""
    source = cfg.workload.source(cfg.seed)
    if cfg.requests is None:
        return iter(source)
    return itertools.islice(source, cfg.effective_warmup + cfg.requests)


def run_simulation(cfg: RunConfig, cache=None, keys=None) -> RunReport:
    """Replay the configured workload and count hits after warm-up."""
    start = time.perf_counter()
    if cache is None:
        cache = build_cache(cfg)
    stream = iter(keys) if keys is not None else key_stream(cfg)
    access = cache.access
    warmup = cfg.effective_warmup
    seen = 0
    for key in itertools.islice(stream, warmup):
        access(key)
        seen += 1
    hits = 0
    counted = 0
    for key in stream:
        hits += access(key)
        counted += 1
    if counted == 0:
        raise ValueError(f"no requests left after {seen} warm-up requests")
    histogram = cache.histogram
    bits = histogram.size_bits()["total_bits"] if histogram is not None else 0
    return RunReport(config=cfg, requests=counted, warmup=seen, hits=hits,
                     sketch_bits=bits, wall_time=time.perf_counter() - start)


def _run_row(cfg: RunConfig) -> dict:
    try:
        return run_simulation(cfg).row()
    except Exception as exc:  # reported in the row's error column
        row = config_row(cfg)
        row["error"] = f"{type(exc).__name__}: {exc}"
        return row


def run_grid(cfgs, workers: int = 1) -> list[dict]:
    """One CSV row per config, in input order."""
    cfgs = list(cfgs)
    if workers > 1 and len(cfgs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_run_row, cfgs))
    return [_run_row(cfg) for cfg in cfgs]


def write_csv(rows, fh) -> None:
    writer = csv.DictWriter(fh, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)


def grid_csv(cfgs, workers: int = 1) -> str:
    buf = io.StringIO()
    write_csv(run_grid(cfgs, workers), buf)
    return buf.getvalue()


@dataclass(frozen=True)
class ErrorReport:
    ideal: float
    hr_float: float
    hr_int: float
    hr_approx: float

    @property
    def sampling_error(self) -> float:
        return self.ideal - self.hr_float

    @property
    def truncation_error(self) -> float:
        return self.hr_float - self.hr_int

    @property
    def approximation_error(self) -> float:
        return self.hr_int - self.hr_approx

    def as_dict(self) -> dict:
        out = asdict(self)
        out.update(sampling_error=self.sampling_error,
                   truncation_error=self.truncation_error,
                   approximation_error=self.approximation_error)
        return out


def run_error_decomposition(cfg: RunConfig) -> ErrorReport:
    """Split the gap to the ideal static hit ratio into sampling, truncation
    and approximation components.

    Three TinyLFU-gated LRU caches replay the same seeded stream: exact
    counting with real-valued halving, exact counting with integer halving,
    and the configured approximate sketch.
    """
    if cfg.workload.kind != "zipf":
        raise ValueError("error decomposition needs a static zipf workload")
    base = replace(cfg, policy="tlru")
    ratios = {}
    for backend in ("exact-float", "exact-int", cfg.backend):
        run = replace(base, backend=backend)
        ratios[backend] = run_simulation(run).hit_ratio
    dist = ZipfDistribution(cfg.workload.universe, cfg.workload.skew)
    return ErrorReport(ideal=ideal_static_hit_ratio(dist, cfg.capacity),
                       hr_float=ratios["exact-float"],
                       hr_int=ratios["exact-int"],
                       hr_approx=ratios[cfg.backend])


def memory_accounting(sample_size: int, cache_size: int,
                      budget_bits: float = 10.0, doorkeeper_share: float = 0.3,
                      backend: str = "cbf", skew: float = 0.9,
                      universe: int = 1_000_000,
                      strawman_sketches: int = 10) -> dict:
    """Bit budget of a TinyLFU histogram next to the sliding-window strawman.

    Two views are reported.  ``configured_*`` is what the histogram actually
    allocates.  The occupancy view charges every distinct sample item one
    doorkeeper bit plus one small counter for items seen at least twice,
    against a strawman of ``strawman_sketches`` uncapped sub-sketches each
    covering ``W / strawman_sketches`` events; distinct counts are the
    expected values under Zipf(skew) over ``universe`` items.
    """
    cfg = HistogramConfig(sample_size=sample_size, cache_size=cache_size,
                          budget_bits_per_sample_item=budget_bits,
                          doorkeeper_share=doorkeeper_share,
                          sketch_backend=backend)
    hist = FrequencyHistogram(cfg)
    size = hist.size_bits()
    probs = ZipfDistribution(universe, skew).probabilities
    unique = expected_distinct(probs, sample_size)
    repeated = expected_repeated(probs, sample_size)
    tinylfu_bits = unique * 1 + repeated * cfg.main_logical_bits
    window = sample_size // strawman_sketches
    straw_width = logical_width(window)
    straw_unique = strawman_sketches * expected_distinct(probs, window)
    straw_bits = straw_unique * straw_width
    return {
        "sample_size": sample_size,
        "cache_size": cache_size,
        "counter_cap": cfg.counter_cap,
        "main_cap": cfg.main_cap,
        "main_cell_bits": cfg.main_counter_bits,
        "main_logical_bits": cfg.main_logical_bits,
        "configured_doorkeeper_bits": size["doorkeeper_bits"],
        "configured_main_bits": size["main_bits"],
        "configured_total_bits": size["total_bits"],
        "configured_bits_per_sample_item": size["total_bits"] / sample_size,
        "unique_items": unique,
        "repeated_items": repeated,
        "tinylfu_bits": tinylfu_bits,
        "tinylfu_average_bits": tinylfu_bits / unique,
        "strawman_counter_bits": straw_width,
        "strawman_unique_items": straw_unique,
        "strawman_bits": straw_bits,
        "reduction": 1.0 - tinylfu_bits / straw_bits,
    }
