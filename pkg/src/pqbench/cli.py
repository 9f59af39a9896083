"""Command-line front end for the benchmark harness."""
from __future__ import annotations

import argparse
import csv
import sys
from typing import List, Optional

from .bench import (BenchConfig, BenchResult, ConfigError, LogOverflowError,
                    SelfCheckError, run_benchmark)

CSV_FIELDS = (
    "queue", "k", "c", "threads", "workload", "keydist", "prefill",
    "duration", "repetition", "ops_total", "mops_per_sec", "rank_mean",
    "rank_std", "rank_max", "bound", "violations",
    "ci95_mops_per_sec", "ci95_rank_mean",
)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="pqbench",
        description="Throughput and ordering-quality benchmarks for "
                    "relaxed concurrent priority queues.",
    )
    p.add_argument("--queue", choices=["klsm", "multiq", "globallock", "seqlsm"],
                   default="klsm")
    p.add_argument("--k", type=int, default=None,
                   help="relaxation parameter for klsm (default 256)")
    p.add_argument("--c", type=int, default=4,
                   help="sub-queues per thread for multiq (default 4)")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--workload", choices=["uniform", "split", "alternating"],
                   default="uniform")
    p.add_argument("--keys", choices=["uniform32", "uniform16", "uniform8",
                                      "ascending", "descending", "unique32"],
                   default="uniform32")
    p.add_argument("--prefill", type=int, default=1_000_000)
    p.add_argument("--duration-s", type=float, default=10.0, dest="duration_s")
    p.add_argument("--reps", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=["throughput", "quality", "latency"],
                   default="throughput",
                   help="latency is accepted for compatibility but not "
                        "implemented")
    p.add_argument("--csv", metavar="PATH", default=None,
                   help="write per-repetition rows plus a summary row here")
    p.add_argument("--depend-on-deleted", action="store_true",
                   help="experimental: inserted keys drift from the last "
                        "key this thread deleted")
    return p


def config_from_args(args: argparse.Namespace) -> BenchConfig:
    if args.k is not None and args.queue != "klsm":
        print(f"warning: --k only affects the klsm queue; ignored for "
              f"{args.queue}", file=sys.stderr)
    return BenchConfig(
        queue=args.queue,
        k=256 if args.k is None else args.k,
        c=args.c,
        threads=args.threads,
        workload=args.workload,
        keys=args.keys,
        prefill=args.prefill,
        duration_s=args.duration_s,
        reps=args.reps,
        seed=args.seed,
        mode=args.mode,
        depend_on_deleted=args.depend_on_deleted,
    )


def _cell(x) -> str:
    return "" if x is None else str(x)


def csv_rows(result: BenchResult) -> List[List[str]]:
    """Header, one row per repetition, then a summary row."""
    if not result.reps:
        raise ValueError("no repetitions to report")
    cfg = result.config
    base = [cfg.queue, str(cfg.k), str(cfg.c), str(cfg.threads), cfg.workload,
            cfg.keys, str(cfg.prefill), str(cfg.duration_s)]
    rows = [list(CSV_FIELDS)]
    for r in result.reps:
        rows.append(base + [
            str(r.repetition), str(r.ops_total), str(r.mops_per_sec),
            _cell(r.rank_mean), _cell(r.rank_std), _cell(r.rank_max),
            _cell(result.bound), _cell(r.violations), "", "",
        ])
    s = result.summary
    rows.append(base + [
        "mean", str(s.ops_total_mean), str(s.mops_mean),
        _cell(s.rank_mean), _cell(s.rank_std_mean), _cell(s.rank_max),
        _cell(result.bound), _cell(s.violations),
        _cell(s.mops_ci95), _cell(s.rank_mean_ci95),
    ])
    return rows


def emit_report(result: BenchResult, path: Optional[str] = None,
                out=None) -> None:
    out = out if out is not None else sys.stdout
    cfg = result.config
    print(
        f"queue={cfg.queue} k={cfg.k} c={cfg.c} threads={cfg.threads} "
        f"workload={cfg.workload} keys={cfg.keys} prefill={cfg.prefill} "
        f"duration={cfg.duration_s}s reps={cfg.reps} mode={cfg.mode} "
        f"bound={'-' if result.bound is None else result.bound}",
        file=out,
    )
    hdr = (f"{'rep':>5} {'ops_total':>12} {'mops/s':>10} {'rank_mean':>10} "
           f"{'rank_std':>10} {'rank_max':>9} {'viol':>6}")
    print(hdr, file=out)

    def fmt(x, spec="{:.3f}"):
        return "-" if x is None else spec.format(x)

    for r in result.reps:
        print(f"{r.repetition:>5} {r.ops_total:>12} {r.mops_per_sec:>10.4f} "
              f"{fmt(r.rank_mean):>10} {fmt(r.rank_std):>10} "
              f"{fmt(r.rank_max, '{}'):>9} {fmt(r.violations, '{}'):>6}",
              file=out)
    s = result.summary
    ci = "-" if s.mops_ci95 is None else f"{s.mops_ci95:.4f}"
    print(f"{'mean':>5} {s.ops_total_mean:>12.1f} {s.mops_mean:>10.4f} "
          f"{fmt(s.rank_mean):>10} {fmt(s.rank_std_mean):>10} "
          f"{fmt(s.rank_max, '{}'):>9} {fmt(s.violations, '{}'):>6}  "
          f"(mops ±{ci} 95% CI)",
          file=out)

    if path is not None:
        with open(path, "w", newline="", encoding="utf-8") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerows(csv_rows(result))


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.mode == "latency":
        parser.error("latency mode is not implemented")
    cfg = config_from_args(args)
    try:
        cfg.validate()
    except ConfigError as e:
        parser.error(str(e))   # exits with code 2 and usage text
    try:
        result = run_benchmark(cfg)
    except (SelfCheckError, LogOverflowError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    try:
        emit_report(result, args.csv)
    except OSError as e:
        print(f"error: cannot write report: {e}", file=sys.stderr)
        return 1
    if result.summary.violations:
        print(f"error: {result.summary.violations} deletions exceeded the "
              f"rank bound {result.bound}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
