"""Command-line driver for the cache simulator."""

from __future__ import annotations

import argparse
import io
import json
import logging
import sys

from tinylfu.simulator import (
    POLICIES,
    RunConfig,
    WorkloadSpec,
    memory_accounting,
    run_error_decomposition,
    run_grid,
    write_csv,
)


def parse_capacities(values: list[str]) -> list[int]:
    """Accept plain integers and doubling ranges such as ``128..65536``."""
    out = []
    for value in values:
        if ".." in value:
            lo, hi = (int(v) for v in value.split("..", 1))
            if lo < 1 or hi < lo:
                raise argparse.ArgumentTypeError(f"bad capacity range {value!r}")
            cap = lo
            while cap <= hi:
                out.append(cap)
                cap *= 2
        else:
            out.append(int(value))
    return out


def _numbers(text: str, count: int, flag: str) -> list[str]:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != count:
        raise SystemExit(f"{flag} expects {count} comma-separated values")
    return parts


def workload_from_args(args) -> WorkloadSpec:
    chosen = [f for f in ("zipf", "trace", "epoch_swap", "burst")
              if getattr(args, f) is not None]
    if len(chosen) > 1:
        raise SystemExit("choose one of --zipf, --trace, --epoch-swap, --burst")
    if args.trace is not None:
        return WorkloadSpec(kind="trace", path=args.trace, format=args.format,
                            page_size=args.page_size)
    if args.epoch_swap is not None:
        n, alpha, epoch = _numbers(args.epoch_swap, 3, "--epoch-swap")
        return WorkloadSpec(kind="epoch-swap", universe=int(n),
                            skew=float(alpha), epoch_length=int(epoch))
    if args.burst is not None:
        n, alpha, rate, length, span = _numbers(args.burst, 5, "--burst")
        return WorkloadSpec(kind="burst", universe=int(n), skew=float(alpha),
                            burst_rate=float(rate), burst_length=int(length),
                            burst_span=int(span))
    n, alpha = _numbers(args.zipf or "1000000,0.9", 2, "--zipf")
    return WorkloadSpec(kind="zipf", universe=int(n), skew=float(alpha))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="tinylfu-sim",
        description="Trace-driven hit-ratio simulator for TinyLFU-gated caches.")
    p.add_argument("--policy", action="append", choices=POLICIES,
                   help="policy to run (repeatable; default tlru)")
    p.add_argument("--capacity", action="append", default=None,
                   help="cache size in items, or a doubling range LO..HI "
                        "(repeatable; default 1000)")
    p.add_argument("--sample-factor", type=float, default=10.0,
                   help="sample size W as a multiple of capacity")
    p.add_argument("--window-fraction", type=float, default=0.01)
    p.add_argument("--zipf", metavar="N,ALPHA")
    p.add_argument("--trace", metavar="PATH")
    p.add_argument("--format", choices=("keys", "blocks"), default="keys")
    p.add_argument("--page-size", type=int, default=4096)
    p.add_argument("--epoch-swap", metavar="N,ALPHA,EPOCH_LENGTH")
    p.add_argument("--burst", metavar="N,ALPHA,RATE,LENGTH,SPAN")
    p.add_argument("--requests", type=int, default=None,
                   help="counted requests (default 2e6 synthetic, whole trace)")
    p.add_argument("--warmup", type=int, default=None,
                   help="uncounted prefix (default 20*W synthetic, 0 traces)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budget-bits", type=float, default=10.0,
                   help="sketch bits per sample item")
    p.add_argument("--backend", choices=("cbf", "cms"), default="cbf")
    p.add_argument("--no-doorkeeper", action="store_true")
    p.add_argument("--conservative-update", action="store_true",
                   help="minimal-increment updates for the cms backend")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", metavar="CSV_PATH", help="write CSV here (default stdout)")
    p.add_argument("--error-decomposition", action="store_true",
                   help="report sampling/truncation/approximation errors (zipf only)")
    p.add_argument("--memory-report", action="store_true",
                   help="report sketch memory against the sliding-window strawman")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def configs_from_args(args) -> list[RunConfig]:
    workload = workload_from_args(args)
    requests = args.requests
    if requests is None and workload.synthetic:
        requests = 2_000_000
    policies = args.policy or ["tlru"]
    capacities = parse_capacities(args.capacity or ["1000"])
    return [
        RunConfig(policy=policy, capacity=cap, workload=workload,
                  sample_factor=args.sample_factor,
                  window_fraction=args.window_fraction, requests=requests,
                  warmup=args.warmup, seed=args.seed,
                  budget_bits=args.budget_bits, backend=args.backend,
                  doorkeeper=not args.no_doorkeeper,
                  conservative_update=args.conservative_update)
        for policy in policies for cap in capacities
    ]


def _emit(text: str, path: str | None) -> None:
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfgs = configs_from_args(args)
    except (ValueError, argparse.ArgumentTypeError) as exc:
        print(f"tinylfu-sim: {exc}", file=sys.stderr)
        return 2

    if args.memory_report:
        reports = [memory_accounting(
            cfg.sample_size, cfg.capacity, budget_bits=cfg.budget_bits,
            backend=cfg.backend, skew=cfg.workload.skew,
            universe=cfg.workload.universe) for cfg in cfgs]
        _emit(json.dumps(reports, indent=2) + "\n", args.out)
        return 0

    if args.error_decomposition:
        try:
            reports = [dict(capacity=cfg.capacity,
                            sample_size=cfg.sample_size,
                            budget_bits=cfg.budget_bits,
                            **run_error_decomposition(cfg).as_dict())
                       for cfg in cfgs]
        except ValueError as exc:
            print(f"tinylfu-sim: {exc}", file=sys.stderr)
            return 2
        _emit(json.dumps(reports, indent=2) + "\n", args.out)
        return 0

    rows = run_grid(cfgs, workers=args.workers)
    buf = io.StringIO()
    write_csv(rows, buf)
    _emit(buf.getvalue(), args.out)
    return 1 if any(row["error"] for row in rows) else 0


if __name__ == "__main__":
    sys.exit(main())
