"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Tolerances are pinned here and never tuned to the measured values.  The
long hit-ratio runs are shared through module-scoped fixtures.  Run alone
with ``pytest tests/test_acceptance.py -v`` (the summary section at the end
lists every line) or ``python tests/test_acceptance.py``.
"""

import random
import sys
from dataclasses import replace

import numpy as np
import pytest

from oracles import lfu_trace, lru_trace, slru_trace
from tinylfu.admission import FrequencyHistogram, HistogramConfig
from tinylfu.cache import PlainCache
from tinylfu.eviction import LFU, LRU, SLRU
from tinylfu.simulator import (
    RunConfig,
    WorkloadSpec,
    grid_csv,
    memory_accounting,
    run_error_decomposition,
    run_simulation,
)
from tinylfu.sketch import ExactHistogram, FrequencySketch, SketchConfig
from tinylfu.workload import ZipfDistribution, ideal_static_hit_ratio

# Pinned tolerances.
C1_STREAMS = 100_000
C2_ARRAYS = 10_000
C3_RESETS = 300
C3_REL_TOL = 0.05
C4_SIGMA = 64.0
C4_TRIALS = 2000
C4_RATIO_TOL = 0.25
C5_EVENTS = 1_000_000
C6_BAND_PP = 2.0
C6_IDEAL_PP = 3.0
C7_APPROX_PP = 0.3
C9_MIN_REDUCTION = 0.80
C10_STATIC_RETAIN = 0.95
C11_STREAMS = 10_000

ZIPF = WorkloadSpec(kind="zipf", universe=1_000_000, skew=0.9)
BURST = WorkloadSpec(kind="burst", universe=1_000_000, skew=0.9,
                     burst_rate=0.1, burst_length=4, burst_span=8)


def pct(x):
    return f"{100 * x:.3f}%"


# 1 ---------------------------------------------------------------------------

def test_c01_no_underestimation(criterion):
    rng = random.Random(1)
    # 8-bit cells with cap 255 stand in for an unbounded counter: no stream
    # here is long enough to reach it.
    pools = {
        "cbf": [FrequencySketch(SketchConfig(counter_count=16, counter_bits=8,
                                             cap=255, seed=s)) for s in range(8)],
        "cms": [FrequencySketch(SketchConfig.cms(16, 4, counter_bits=8, cap=255,
                                                 seed=s)) for s in range(8)],
    }
    violations = 0
    for n in range(C1_STREAMS):
        universe = rng.randint(2, 40)
        stream = [rng.randrange(universe) for _ in range(rng.randint(1, 40))]
        exact = {}
        for key in stream:
            exact[key] = exact.get(key, 0) + 1
        for pool in pools.values():
            sk = pool[n % len(pool)]
            sk.clear()
            for key in stream:
                sk.record(key)
            violations += sum(sk.estimate(k) < c for k, c in exact.items())
    criterion(1, "sketch never underestimates", violations == 0,
              f"{C1_STREAMS} streams x {len(pools)} backends, {violations} violations")


# 2 ---------------------------------------------------------------------------

def _unpack_reference(words, cell_bits):
    per = 64 // cell_bits
    shifts = (np.arange(per, dtype=np.uint64) * np.uint64(cell_bits))
    mask = np.uint64((1 << cell_bits) - 1)
    return ((words[:, None] >> shifts[None, :]) & mask).reshape(-1)


def test_c02_halving_exact(criterion):
    rng = np.random.default_rng(2)
    mismatches = 0
    for n in range(C2_ARRAYS):
        bits = (1, 2, 4, 8)[n % 4]
        n_words = int(rng.integers(1, 17))
        count = n_words * (64 // bits)
        sk = FrequencySketch(SketchConfig(counter_count=count, counter_bits=bits,
                                          cap=(1 << bits) - 1))
        sk.words[:] = rng.integers(0, 2**64, n_words, dtype=np.uint64)
        before = _unpack_reference(sk.words.copy(), bits)
        sk.halve()
        after = _unpack_reference(sk.words, bits)
        mismatches += int(not np.array_equal(after, before // 2))
    criterion(2, "word-wise halving equals per-counter floor", mismatches == 0,
              f"{C2_ARRAYS} arrays over widths 1/2/4/8, {mismatches} mismatches")


# 3 and 4 ---------------------------------------------------------------------

def _float_histogram(W):
    cfg = HistogramConfig(sample_size=W, cache_size=1, counter_cap=W,
                          sketch_backend="exact-float")
    return FrequencyHistogram(cfg, main=ExactHistogram("float"))


def _drive(hist, f, n_events, rng):
    # constant distribution: key 0 with probability f, one lumped "rest" key
    for hit in (rng.random(n_events) < f).tolist():
        hist.record(0 if hit else 1)


def test_c03_expected_histogram_value(criterion):
    W, f = 1024, 0.1
    hist = _float_histogram(W)
    pre_reset = []
    # float halving is exact, so the pre-reset value is twice the post-reset one
    hist.add_reset_listener(lambda: pre_reset.append(2 * hist.main.estimate(0)))
    rng = np.random.default_rng(3)
    while len(pre_reset) < C3_RESETS:
        _drive(hist, f, W // 2, rng)
    mean = float(np.mean(pre_reset))
    rel = abs(mean - f * W) / (f * W)
    criterion(3, "pre-reset mean matches f*W", rel <= C3_REL_TOL,
              f"mean {mean:.2f} over {len(pre_reset)} resets vs {f * W:.1f} "
              f"(rel err {rel:.4f}, tol {C3_REL_TOL})")


def test_c04_deviation_decay(criterion):
    W, f = 1024, 0.1
    target = f * W
    rng = np.random.default_rng(4)
    resets = 5
    dev = np.zeros(resets)
    for _ in range(C4_TRIALS):
        hist = _float_histogram(W)
        # start from the steady post-reset state, shifted by sigma
        hist.events = W // 2
        hist.main.table[0] = target / 2 + C4_SIGMA
        pre = []
        hist.add_reset_listener(lambda h=hist, p=pre: p.append(2 * h.main.estimate(0)))
        while len(pre) < resets:
            _drive(hist, f, W // 2, rng)
        dev += np.array(pre) - target
    dev /= C4_TRIALS
    ratios = dev[1:] / dev[:-1]
    ok = abs(dev[0] - C4_SIGMA) <= C4_RATIO_TOL * C4_SIGMA and all(
        abs(r - 0.5) <= C4_RATIO_TOL * 0.5 for r in ratios)
    criterion(4, "seeded deviation halves per reset", ok,
              "mean deviation " + ", ".join(f"{d:.2f}" for d in dev)
              + "; ratios " + ", ".join(f"{r:.3f}" for r in ratios))


# 5 ---------------------------------------------------------------------------

def test_c05_truncation_gap(criterion):
    rng = np.random.default_rng(5)
    cases = [
        ("uniform(500) uncapped", rng.integers(0, 500, C5_EVENTS), 1000, float("inf")),
        ("zipf(10^4, 0.9) cap 10", ZipfDistribution(10_000, 0.9, seed=5).sample(C5_EVENTS),
         10_000, 10),
    ]
    worst_lo, worst_hi, boundaries = 0.0, 0.0, 0
    for _, stream, W, cap in cases:
        hf = ExactHistogram("float", cap=cap)
        hi = ExactHistogram("integer", cap=cap)
        events = 0
        for key in stream.tolist():
            hf.record(key)
            hi.record(key)
            events += 1
            if events == W:
                for phase in ("before", "after"):
                    if phase == "after":
                        hf.halve()
                        hi.halve()
                    gaps = [v - hi.estimate(k) for k, v in hf.items()]
                    worst_lo = min(worst_lo, min(gaps))
                    worst_hi = max(worst_hi, max(gaps))
                boundaries += 1
                events //= 2
    ok = worst_lo >= 0 and worst_hi < 1
    criterion(5, "float-int gap in [0, 1) at reset boundaries", ok,
              f"{boundaries} boundaries over {len(cases)} streams of {C5_EVENTS}, "
              f"gap range [{worst_lo:.6f}, {worst_hi:.6f}]")


# 6 and 10 --------------------------------------------------------------------

def _static(policy, **kw):
    return RunConfig(policy=policy, capacity=1000, workload=ZIPF, sample_factor=32,
                     requests=2_000_000, seed=0, **kw)


@pytest.fixture(scope="module")
def static_runs():
    policies = ("tlru", "trandom", "tlfu", "lru", "random", "lfu", "wtinylfu")
    out = {p: run_simulation(_static(p)).hit_ratio for p in policies}
    out["exact-float"] = run_simulation(_static("tlru", backend="exact-float")).hit_ratio
    out["ideal"] = ideal_static_hit_ratio(
        ZipfDistribution(ZIPF.universe, ZIPF.skew), 1000)
    return out


@pytest.mark.slow
def test_c06_static_augmentation(criterion, static_runs):
    r = static_runs
    gated = {p: r[p] for p in ("tlru", "trandom", "tlfu")}
    band = max(gated.values()) - min(gated.values())
    a = band <= C6_BAND_PP / 100
    pairs = {"tlru": "lru", "trandom": "random", "tlfu": "lfu"}
    losers = [f"{g} {pct(r[g])} <= {b} {pct(r[b])}"
              for g, b in pairs.items() if not r[g] > r[b]]
    b = not losers
    # ideal minus the measured sampling error is the exact-float hit ratio
    adjusted = r["exact-float"]
    far = {p: v for p, v in gated.items() if abs(v - adjusted) > C6_IDEAL_PP / 100}
    c = not far
    detail = (
        "hit ratios " + ", ".join(f"{p} {pct(v)}" for p, v in r.items())
        + f" | (a) band {100 * band:.2f}pp {'ok' if a else 'FAIL'}"
        + f" | (b) {'ok' if b else 'FAIL: ' + '; '.join(losers)}"
        + f" | (c) adjusted ideal {pct(adjusted)} {'ok' if c else 'FAIL: ' + str(far)}")
    criterion(6, "static-skew augmentation", a and b and c, detail)


@pytest.mark.slow
def test_c10_burst_repair(criterion, static_runs):
    burst = {}
    for policy in ("lru", "tlru", "wtinylfu"):
        cfg = RunConfig(policy=policy, capacity=1000, workload=BURST,
                        sample_factor=32, requests=500_000, seed=0)
        burst[policy] = run_simulation(cfg).hit_ratio
    degraded = burst["tlru"] < burst["lru"]
    repaired = burst["wtinylfu"] >= burst["lru"]
    retained = static_runs["wtinylfu"] >= C10_STATIC_RETAIN * static_runs["tlru"]
    criterion(10, "W-TinyLFU repairs bursts", degraded and repaired and retained,
              f"burst: lru {pct(burst['lru'])}, tlru {pct(burst['tlru'])}, "
              f"wtinylfu {pct(burst['wtinylfu'])}; static: wtinylfu "
              f"{pct(static_runs['wtinylfu'])} vs {C10_STATIC_RETAIN} x tlru "
              f"{pct(static_runs['tlru'])}")


# 7 and 8 ---------------------------------------------------------------------

def _decomposition_cfg(sample_factor, budget_bits=10.0):
    return RunConfig(policy="tlru", capacity=1000, workload=ZIPF,
                     sample_factor=sample_factor, requests=2_000_000, seed=0,
                     budget_bits=budget_bits)


@pytest.fixture(scope="module")
def decomposition():
    return {W: run_error_decomposition(_decomposition_cfg(W // 1000))
            for W in (9000, 17000)}


@pytest.mark.slow
def test_c07_approximation_threshold(criterion, decomposition):
    rep = decomposition[9000]
    low = run_simulation(_decomposition_cfg(9, budget_bits=4.0)).hit_ratio
    gap_hi = abs(rep.hr_approx - rep.hr_float)
    gap_lo = abs(low - rep.hr_float)
    first = gap_hi <= C7_APPROX_PP / 100
    second = gap_lo > gap_hi
    criterion(7, "approximation error vanishes at 1.25 bytes/item", first and second,
              f"float {pct(rep.hr_float)}, int {pct(rep.hr_int)}, "
              f"approx@1.25B {pct(rep.hr_approx)} (gap {100 * gap_hi:.3f}pp, "
              f"tol {C7_APPROX_PP}pp {'ok' if first else 'FAIL'}), "
              f"approx@0.5B {pct(low)} (gap {100 * gap_lo:.3f}pp, "
              f"{'>' if second else 'not >'} 1.25B gap)")


@pytest.mark.slow
def test_c08_truncation_shrinks_with_sample(criterion, decomposition):
    t9 = decomposition[9000].truncation_error
    t17 = decomposition[17000].truncation_error
    criterion(8, "truncation error lower at 17k than 9k", t17 < t9,
              f"truncation 9k {100 * t9:+.3f}pp, 17k {100 * t17:+.3f}pp")


# 9 ---------------------------------------------------------------------------

def test_c09_memory_accounting(criterion):
    m = memory_accounting(9000, 1000)
    ok = (m["main_cap"] == 8 and m["main_cell_bits"] == 4
          and m["main_logical_bits"] == 3 and m["strawman_counter_bits"] == 10
          and m["reduction"] >= C9_MIN_REDUCTION)
    criterion(9, "memory reduction vs strawman", ok,
              f"main cap {m['main_cap']} in {m['main_cell_bits']}-bit cells "
              f"({m['main_logical_bits']} logical), strawman "
              f"{m['strawman_counter_bits']}-bit counters, "
              f"{m['tinylfu_average_bits']:.2f} bits/item, "
              f"reduction {100 * m['reduction']:.1f}% (min {100 * C9_MIN_REDUCTION:.0f}%)")


# 11 --------------------------------------------------------------------------

def test_c11_oracle_equivalence(criterion):
    rng = random.Random(11)
    mismatches = {"lru": 0, "slru": 0, "lfu": 0}
    for _ in range(C11_STREAMS):
        cap = rng.randint(1, 8)
        universe = rng.randint(1, 3 * cap + 2)
        stream = [rng.randrange(universe) for _ in range(rng.randint(0, 80))]
        prot = rng.randint(0, cap)
        runs = {
            "lru": (LRU(cap), lru_trace(stream, cap)),
            "slru": (SLRU(cap, protected_capacity=prot), slru_trace(stream, cap, prot)),
            "lfu": (LFU(cap), lfu_trace(stream, cap)),
        }
        for name, (policy, expected) in runs.items():
            cache = PlainCache(policy)
            if [cache.access(k) for k in stream] != expected:
                mismatches[name] += 1
    criterion(11, "LRU/SLRU/LFU match brute-force oracles",
              not any(mismatches.values()),
              f"{C11_STREAMS} streams, capacities 1..8, mismatches {mismatches}")


# 12 --------------------------------------------------------------------------

@pytest.mark.slow
def test_c12_determinism(criterion):
    small = dict(universe=20_000, skew=0.9)
    workloads = [WorkloadSpec(kind="zipf", **small),
                 WorkloadSpec(kind="epoch-swap", epoch_length=5000, **small),
                 WorkloadSpec(kind="burst", **small)]
    policies = ("lru", "random", "lfu", "slru", "arc", "tlru", "trandom", "tlfu",
                "wtinylfu")
    cfgs = [RunConfig(policy=p, capacity=cap, workload=w, requests=20_000,
                      warmup=2000, seed=7)
            for w in workloads for p in policies for cap in (64, 256)]
    first = grid_csv(cfgs)
    second = grid_csv(cfgs)
    parallel = grid_csv(cfgs, workers=2)
    reseeded = grid_csv([replace(c, seed=8) for c in cfgs[:3]])
    ok = first == second == parallel and reseeded != grid_csv(cfgs[:3])
    criterion(12, "grid CSV is byte-identical across runs", ok,
              f"{len(cfgs)} configs, {len(first.encode())} bytes, serial x2 and "
              f"2 workers identical: {first == second == parallel}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
