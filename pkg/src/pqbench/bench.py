"""Benchmark harness: timed multi-thread runs with statistics.

Throughput mode runs the configured workload unperturbed and reports
million-ops-per-second over the wall-clock window.  Quality mode
additionally logs every operation; a global commit lock plus a logical
ticker make each operation's effect and its timestamp one atomic step,
so the merged log is a faithful serialization and replayed ranks reflect
the queue, not scheduler preemption.  Quality numbers therefore measure
ordering quality; their throughput is logging-perturbed by design.

Each repetition builds a fresh queue, prefills it according to the
workload, releases all threads from a barrier, and stops them with a
flag after the configured duration.  Repetition r derives its seed as
``seed + 1000003 * r``.
"""
from __future__ import annotations

import math
import os
import threading
import time
import warnings
from collections import Counter
from dataclasses import dataclass
from statistics import fmean, stdev
from typing import Callable, List, Optional, Sequence, Tuple

from scipy.stats import t as _student_t

from .baseline import LockedHeap, SeqLsmQueue
from .klsm import Klsm, rank_bound
from .multiqueue import MultiQueue
from .ranks import (DELETE, INSERT, OpRecord, merge_logs, replay_ranks,
                    summarize_ranks)
from .workload import (KEY_KINDS, WORKLOAD_KINDS, ThreadWorkload,
                       inserter_ids, prefill_shares, stream)

QUEUE_KINDS = ("klsm", "multiq", "globallock", "seqlsm")
MODES = ("throughput", "quality")

REP_SEED_STRIDE = 1000003
MAX_LOG_EVENTS = 20_000_000


class ConfigError(ValueError):
    """Invalid benchmark configuration."""


class LogOverflowError(RuntimeError):
    """A quality run produced more events than the configured cap."""


class SelfCheckError(RuntimeError):
    """A run-level invariant (item conservation) failed."""


@dataclass
class BenchConfig:
    queue: str = "klsm"
    k: int = 256
    c: int = 4
    threads: int = 1
    workload: str = "uniform"
    keys: str = "uniform32"
    prefill: int = 1_000_000
    duration_s: float = 10.0
    reps: int = 30
    seed: int = 0
    mode: str = "throughput"
    insert_fraction: float = 0.5
    depend_on_deleted: bool = False
    self_check: Optional[bool] = None    # None: on in quality mode only
    max_log_events: int = MAX_LOG_EVENTS

    def validate(self) -> None:
        if self.queue not in QUEUE_KINDS:
            raise ConfigError(f"unknown queue kind {self.queue!r}")
        if self.workload not in WORKLOAD_KINDS:
            raise ConfigError(f"unknown workload {self.workload!r}")
        if self.keys not in KEY_KINDS:
            raise ConfigError(f"unknown key distribution {self.keys!r}")
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.k < 0:
            raise ConfigError("k must be >= 0")
        if self.c < 1:
            raise ConfigError("c must be >= 1")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if self.queue == "seqlsm" and self.threads != 1:
            raise ConfigError("seqlsm is single-threaded; use --threads 1")
        if self.prefill < 0:
            raise ConfigError("prefill must be >= 0")
        if self.duration_s <= 0:
            raise ConfigError("duration must be positive")
        if self.reps < 1:
            raise ConfigError("reps must be >= 1")
        if not 0.0 <= self.insert_fraction <= 1.0:
            raise ConfigError("insert fraction must be within [0, 1]")

    @property
    def bound(self) -> Optional[int]:
        """Worst-case deletion rank, or None when no guarantee exists."""
        if self.queue == "klsm":
            return rank_bound(self.k, self.threads)
        if self.queue in ("globallock", "seqlsm"):
            return 1
        return None

    @property
    def checks_enabled(self) -> bool:
        if self.self_check is None:
            return self.mode == "quality"
        return self.self_check


def make_queue(cfg: BenchConfig):
    if cfg.queue == "klsm":
        return Klsm(cfg.k, cfg.threads)
    if cfg.queue == "multiq":
        return MultiQueue(cfg.threads, cfg.c)
    if cfg.queue == "globallock":
        return LockedHeap()
    return SeqLsmQueue()


@dataclass
class RepResult:
    repetition: int
    ops_total: int
    inserts: int
    deletes: int
    absent_deletes: int
    elapsed: float
    mops_per_sec: float
    rank_mean: Optional[float] = None
    rank_std: Optional[float] = None
    rank_max: Optional[int] = None
    violations: Optional[int] = None


@dataclass
class Summary:
    reps: int
    ops_total_mean: float
    mops_mean: float
    mops_ci95: Optional[float]    # None with a single repetition
    rank_mean: Optional[float] = None
    rank_mean_ci95: Optional[float] = None
    rank_std_mean: Optional[float] = None
    rank_max: Optional[int] = None
    violations: Optional[int] = None


@dataclass
class BenchResult:
    config: BenchConfig
    bound: Optional[int]
    reps: List[RepResult]
    summary: Summary


def mean_ci95(xs: Sequence[float]) -> Tuple[float, Optional[float]]:
    """Sample mean and the half-width of its 95% confidence interval.

    The interval needs at least two samples; with one, the half-width is
    reported as None (absent), not zero.
    """
    n = len(xs)
    m = fmean(xs)
    if n < 2:
        return m, None
    s = stdev(xs)
    half = float(_student_t.ppf(0.975, n - 1)) * s / math.sqrt(n)
    return m, half


# ----------------------------------------------------------------------
# thread pinning

def pinning_supported() -> bool:
    if os.environ.get("PQBENCH_NO_PIN"):
        return False
    return hasattr(os, "sched_setaffinity")


def _pin_self(index: int) -> bool:
    """Pin the calling thread to a core, ascending by worker index."""
    if not pinning_supported():
        return False
    try:
        cores = sorted(os.sched_getaffinity(0))
        os.sched_setaffinity(0, {cores[index % len(cores)]})
        return True
    except OSError:
        return False


# ----------------------------------------------------------------------
# workers

class _Ticker:
    """Strictly increasing logical clock; call only inside the commit lock."""

    __slots__ = ("t",)

    def __init__(self):
        self.t = 0

    def tick(self) -> int:
        self.t += 1
        return self.t


def _throughput_worker(idx, handle, wl, barrier, stop, out, track):
    _pin_self(idx)
    barrier.wait()
    ins = dels = absent = 0
    while not stop.is_set():
        kind, key = wl.next()
        if kind == INSERT:
            handle.insert(key)
            ins += 1
            if track is not None:
                track[idx][0][key] += 1
        else:
            it = handle.delete_min()
            if it is None:
                absent += 1
            else:
                dels += 1
                if wl.depend_on_deleted:
                    wl.note_deleted(it.key)
                if track is not None:
                    track[idx][1][it.key] += 1
    out[idx] = (ins, dels, absent)


def _quality_worker(idx, handle, wl, barrier, stop, out, log, commit, ticker,
                    per_cap, overflow):
    _pin_self(idx)
    barrier.wait()
    ins = dels = absent = 0
    append = log.append
    while not stop.is_set():
        kind, key = wl.next()
        if kind == INSERT:
            with commit:
                it = handle.insert(key)
                ts = ticker.tick()
            append(OpRecord(INSERT, key, it.seq, ts, idx))
            ins += 1
        else:
            with commit:
                it = handle.delete_min()
                ts = ticker.tick()
            if it is None:
                absent += 1
            else:
                append(OpRecord(DELETE, it.key, it.seq, ts, idx))
                dels += 1
                if wl.depend_on_deleted:
                    wl.note_deleted(it.key)
        if len(log) >= per_cap:
            overflow.set()
            stop.set()
            break
    out[idx] = (ins, dels, absent)


# ----------------------------------------------------------------------
# single repetition

def _build_run(cfg: BenchConfig, rep: int):
    seed = cfg.seed + REP_SEED_STRIDE * rep
    queue = make_queue(cfg)
    wls = [
        ThreadWorkload(cfg.workload, cfg.keys, seed, i, cfg.threads,
                       cfg.insert_fraction, cfg.depend_on_deleted)
        for i in range(cfg.threads)
    ]
    handles = [queue.register(stream(seed, i, "queue")) for i in range(cfg.threads)]
    return queue, wls, handles


def _prefill(cfg, wls, handles, logs=None, ticker=None, track=None):
    ids = inserter_ids(cfg.workload, cfg.threads)
    shares = prefill_shares(cfg.prefill, len(ids))
    for tid, share in zip(ids, shares):
        handle, wl = handles[tid], wls[tid]
        for _ in range(share):
            key = wl.prefill_key()
            it = handle.insert(key)
            if logs is not None:
                logs[tid].append(OpRecord(INSERT, key, it.seq, ticker.tick(), tid))
            if track is not None:
                track[tid][0][key] += 1


def _drain(handle) -> Counter:
    drained: Counter = Counter()
    while True:
        it = handle.delete_min()
        if it is None:
            return drained
        drained[it.key] += 1


def _check_conservation(inserted: Counter, deleted: Counter, drained: Counter):
    consumed = deleted + drained
    if consumed != inserted:
        lost = inserted - consumed
        fabricated = consumed - inserted
        raise SelfCheckError(
            f"conservation violated: {sum(lost.values())} items lost, "
            f"{sum(fabricated.values())} items fabricated"
        )


def run_throughput_rep(cfg: BenchConfig, rep: int, track=None) -> RepResult:
    queue, wls, handles = _build_run(cfg, rep)
    _prefill(cfg, wls, handles, track=track)
    stop = threading.Event()
    barrier = threading.Barrier(cfg.threads + 1)
    out: List[Optional[Tuple[int, int, int]]] = [None] * cfg.threads
    workers = [
        threading.Thread(
            target=_throughput_worker,
            args=(i, handles[i], wls[i], barrier, stop, out, track),
            daemon=True,
        )
        for i in range(cfg.threads)
    ]
    for w in workers:
        w.start()
    barrier.wait()
    t0 = time.perf_counter()
    time.sleep(cfg.duration_s)
    stop.set()
    elapsed = time.perf_counter() - t0
    for w in workers:
        w.join()
    ins = sum(o[0] for o in out)
    dels = sum(o[1] for o in out)
    absent = sum(o[2] for o in out)
    ops = ins + dels
    result = RepResult(rep, ops, ins, dels, absent, elapsed, ops / elapsed / 1e6)
    if track is not None:
        inserted = Counter()
        deleted = Counter()
        for tins, tdel in track:
            inserted.update(tins)
            deleted.update(tdel)
        drained = _drain(handles[0])
        _check_conservation(inserted, deleted, drained)
    return result


def run_conservation(cfg: BenchConfig, rep: int = 0) -> RepResult:
    """Throughput-style run that tracks and verifies item conservation:
    inserted keys = deleted keys + keys drained afterwards, as multisets.
    """
    track = [(Counter(), Counter()) for _ in range(cfg.threads)]
    return run_throughput_rep(cfg, rep, track=track)


def run_quality_rep(cfg: BenchConfig, rep: int) -> RepResult:
    queue, wls, handles = _build_run(cfg, rep)
    logs: List[List[OpRecord]] = [[] for _ in range(cfg.threads)]
    ticker = _Ticker()
    _prefill(cfg, wls, handles, logs=logs, ticker=ticker)
    stop = threading.Event()
    overflow = threading.Event()
    commit = threading.Lock()
    barrier = threading.Barrier(cfg.threads + 1)
    out: List[Optional[Tuple[int, int, int]]] = [None] * cfg.threads
    per_cap = max(1, cfg.max_log_events // cfg.threads)
    workers = [
        threading.Thread(
            target=_quality_worker,
            args=(i, handles[i], wls[i], barrier, stop, out, logs[i], commit,
                  ticker, per_cap, overflow),
            daemon=True,
        )
        for i in range(cfg.threads)
    ]
    for w in workers:
        w.start()
    barrier.wait()
    t0 = time.perf_counter()
    time.sleep(cfg.duration_s)
    stop.set()
    elapsed = time.perf_counter() - t0
    for w in workers:
        w.join()
    if overflow.is_set():
        raise LogOverflowError(
            f"quality log exceeded {cfg.max_log_events} events; shorten the run"
        )
    ins = sum(o[0] for o in out)
    dels = sum(o[1] for o in out)
    absent = sum(o[2] for o in out)
    ops = ins + dels

    merged = merge_logs(logs)
    ranks = replay_ranks(merged)
    stats = summarize_ranks(ranks, bound=cfg.bound)

    if cfg.checks_enabled:
        inserted = Counter(r.key for r in merged if r.kind == INSERT)
        deleted = Counter(r.key for r in merged if r.kind == DELETE)
        drained = _drain(handles[0])
        _check_conservation(inserted, deleted, drained)

    return RepResult(
        rep, ops, ins, dels, absent, elapsed, ops / elapsed / 1e6,
        rank_mean=stats.rank_mean, rank_std=stats.rank_std,
        rank_max=stats.rank_max, violations=stats.violations,
    )


# ----------------------------------------------------------------------
# full runs

def aggregate(cfg: BenchConfig, results: Sequence[RepResult]) -> Summary:
    mops_mean, mops_ci = mean_ci95([r.mops_per_sec for r in results])
    summary = Summary(
        reps=len(results),
        ops_total_mean=fmean(r.ops_total for r in results),
        mops_mean=mops_mean,
        mops_ci95=mops_ci,
    )
    if results and results[0].rank_mean is not None:
        rm, rci = mean_ci95([r.rank_mean for r in results])
        summary.rank_mean = rm
        summary.rank_mean_ci95 = rci
        summary.rank_std_mean = fmean(r.rank_std for r in results)
        summary.rank_max = max(r.rank_max for r in results)
        if all(r.violations is not None for r in results):
            summary.violations = sum(r.violations for r in results)
    return summary


def run_benchmark(cfg: BenchConfig) -> BenchResult:
    cfg.validate()
    if not pinning_supported():
        warnings.warn("thread pinning unavailable; running unpinned",
                      RuntimeWarning, stacklevel=2)
    rep_fn: Callable[[BenchConfig, int], RepResult]
    rep_fn = run_quality_rep if cfg.mode == "quality" else run_throughput_rep
    results = [rep_fn(cfg, rep) for rep in range(cfg.reps)]
    return BenchResult(cfg, cfg.bound, results, aggregate(cfg, results))
