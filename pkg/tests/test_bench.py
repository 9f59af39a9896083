"""Benchmark harness: config validation, statistics, runs, self-checks."""
import math
import random
import statistics

import pytest

from pqbench.baseline import LockedHeap, SeqLsmQueue
from pqbench.bench import (BenchConfig, ConfigError, LogOverflowError,
                           RepResult, _build_run, _prefill, _Ticker, aggregate,
                           make_queue, mean_ci95, pinning_supported,
                           run_benchmark, run_conservation, run_quality_rep,
                           run_throughput_rep)
from pqbench.klsm import Klsm
from pqbench.multiqueue import MultiQueue


def cfg(**kw):
    base = dict(queue="globallock", threads=1, prefill=0, duration_s=0.05,
                reps=1, seed=42, workload="uniform", keys="uniform32")
    base.update(kw)
    return BenchConfig(**base)


# ----------------------------------------------------------------------
# configuration

@pytest.mark.parametrize("bad", [
    dict(queue="nope"),
    dict(workload="nope"),
    dict(keys="nope"),
    dict(mode="latency"),
    dict(k=-1, queue="klsm"),
    dict(c=0, queue="multiq"),
    dict(threads=0),
    dict(queue="seqlsm", threads=4),
    dict(prefill=-1),
    dict(duration_s=0.0),
    dict(duration_s=-1.0),
    dict(reps=0),
    dict(insert_fraction=1.5),
])
def test_validate_rejects(bad):
    with pytest.raises(ConfigError):
        cfg(**bad).validate()


def test_validate_accepts_defaults():
    BenchConfig().validate()


def test_bound_per_queue():
    assert cfg(queue="klsm", k=128, threads=4).bound == 513
    assert cfg(queue="klsm", k=128, threads=20).bound == 2561
    assert cfg(queue="globallock").bound == 1
    assert cfg(queue="seqlsm").bound == 1
    assert cfg(queue="multiq").bound is None


def test_self_check_defaults_to_quality_mode_only():
    assert not cfg(mode="throughput").checks_enabled
    assert cfg(mode="quality").checks_enabled
    assert cfg(mode="throughput", self_check=True).checks_enabled
    assert not cfg(mode="quality", self_check=False).checks_enabled


def test_make_queue_kinds():
    q = make_queue(cfg(queue="klsm", k=64, threads=3))
    assert isinstance(q, Klsm) and q.k == 64 and q.threads == 3
    q = make_queue(cfg(queue="multiq", threads=8, c=4))
    assert isinstance(q, MultiQueue) and q.n == 32
    assert isinstance(make_queue(cfg(queue="globallock")), LockedHeap)
    assert isinstance(make_queue(cfg(queue="seqlsm")), SeqLsmQueue)


# ----------------------------------------------------------------------
# statistics

T975_DF1 = 12.706204736432095
T975_DF29 = 2.0452296421327034


def test_mean_ci95_constant_samples():
    m, half = mean_ci95([4.0, 4.0, 4.0])
    assert m == 4.0
    assert half == 0.0


def test_mean_ci95_two_samples():
    m, half = mean_ci95([2.0, 4.0])
    assert m == 3.0
    assert statistics.stdev([2.0, 4.0]) == pytest.approx(math.sqrt(2))
    # s/sqrt(n) == 1 here, so the half-width is the t quantile itself
    assert half == pytest.approx(T975_DF1, rel=1e-9)


def test_mean_ci95_single_sample_has_no_interval():
    m, half = mean_ci95([7.5])
    assert m == 7.5
    assert half is None


def test_mean_ci95_matches_formula_on_30_samples():
    rng = random.Random(99)
    xs = [rng.uniform(0, 100) for _ in range(30)]
    m, half = mean_ci95(xs)
    expect_m = sum(xs) / 30
    expect_half = T975_DF29 * statistics.stdev(xs) / math.sqrt(30)
    assert m == pytest.approx(expect_m, rel=1e-9)
    assert half == pytest.approx(expect_half, rel=1e-9)


def test_ticker_is_strictly_increasing():
    tick = _Ticker()
    seen = [tick.tick() for _ in range(100)]
    assert seen == list(range(1, 101))


# ----------------------------------------------------------------------
# run construction

def test_repetition_seeds_are_deterministic_and_distinct():
    c = cfg(queue="klsm", threads=2)
    _, wls_a, _ = _build_run(c, 0)
    _, wls_b, _ = _build_run(c, 0)
    _, wls_c, _ = _build_run(c, 1)
    ops_a = [wls_a[0].next() for _ in range(10)]
    ops_b = [wls_b[0].next() for _ in range(10)]
    ops_c = [wls_c[0].next() for _ in range(10)]
    assert ops_a == ops_b
    assert ops_a != ops_c


def test_prefill_populates_queue():
    c = cfg(queue="klsm", k=16, threads=2, prefill=500)
    queue, wls, handles = _build_run(c, 0)
    _prefill(c, wls, handles)
    assert queue.live_count() == 500


def test_prefill_split_workload_uses_inserters_only():
    c = cfg(queue="globallock", threads=4, workload="split", prefill=100)
    queue, wls, handles = _build_run(c, 0)
    _prefill(c, wls, handles)
    assert queue.live_count() == 100


# ----------------------------------------------------------------------
# repetitions

def test_throughput_rep_counts_operations():
    r = run_throughput_rep(cfg(queue="klsm", k=8, threads=2, prefill=100,
                               duration_s=0.1), 0)
    assert r.ops_total == r.inserts + r.deletes > 0
    assert r.elapsed >= 0.1
    assert r.mops_per_sec == pytest.approx(r.ops_total / r.elapsed / 1e6)
    assert r.rank_mean is None


def test_delete_only_run_reports_absent_deletes():
    r = run_throughput_rep(cfg(insert_fraction=0.0, duration_s=0.05), 0)
    assert r.inserts == 0
    assert r.deletes == 0
    assert r.absent_deletes > 0


@pytest.mark.parametrize("kind,threads", [
    ("klsm", 2), ("multiq", 2), ("globallock", 2), ("seqlsm", 1),
])
def test_conservation_run_per_queue(kind, threads):
    r = run_conservation(cfg(queue=kind, threads=threads, prefill=200,
                             duration_s=0.15))
    assert r.ops_total > 0


def test_quality_rep_globallock_ranks_are_exactly_one():
    r = run_quality_rep(cfg(mode="quality", prefill=100, duration_s=0.1), 0)
    assert r.rank_mean == 1.0
    assert r.rank_max == 1
    assert r.violations == 0


def test_quality_rep_klsm_respects_bound():
    c = cfg(queue="klsm", k=16, threads=2, mode="quality", prefill=500,
            duration_s=0.15)
    r = run_quality_rep(c, 0)
    assert r.deletes > 0
    assert r.rank_max <= c.bound
    assert r.violations == 0


def test_quality_rep_logs_prefill_inserts():
    # no timed inserts: every delete consumes a prefill item, so the
    # replay only balances if prefill made it into the log
    c = cfg(mode="quality", prefill=50, insert_fraction=0.0, duration_s=0.1)
    r = run_quality_rep(c, 0)
    assert r.inserts == 0
    assert r.deletes == 50
    assert r.rank_mean == 1.0


def test_quality_rep_overflow():
    c = cfg(mode="quality", duration_s=0.5, max_log_events=100)
    with pytest.raises(LogOverflowError):
        run_quality_rep(c, 0)


# ----------------------------------------------------------------------
# aggregation and full runs

def rep(i, mops, rank_mean=None, violations=None):
    return RepResult(i, 1000, 500, 500, 0, 1.0, mops,
                     rank_mean=rank_mean, rank_std=0.0 if rank_mean else None,
                     rank_max=int(rank_mean) if rank_mean else None,
                     violations=violations)


def test_aggregate_throughput_only():
    s = aggregate(cfg(), [rep(0, 1.0), rep(1, 3.0)])
    assert s.reps == 2
    assert s.mops_mean == 2.0
    assert s.mops_ci95 == pytest.approx(T975_DF1, rel=1e-9)
    assert s.rank_mean is None


def test_aggregate_single_rep_interval_absent():
    s = aggregate(cfg(), [rep(0, 2.0)])
    assert s.mops_ci95 is None


def test_aggregate_sums_violations():
    s = aggregate(cfg(), [rep(0, 1.0, rank_mean=2.0, violations=1),
                          rep(1, 1.0, rank_mean=4.0, violations=2)])
    assert s.rank_mean == 3.0
    assert s.violations == 3
    assert s.rank_max == 4


def test_run_benchmark_end_to_end():
    res = run_benchmark(cfg(reps=2, duration_s=0.05))
    assert res.bound == 1
    assert len(res.reps) == 2
    assert res.summary.reps == 2
    assert res.summary.mops_mean > 0


def test_pinning_respects_opt_out(monkeypatch):
    monkeypatch.setenv("PQBENCH_NO_PIN", "1")
    assert not pinning_supported()
    with pytest.warns(RuntimeWarning):
        run_benchmark(cfg(duration_s=0.05))


def test_single_thread_throughput_is_stable_across_runs():
    c = cfg(prefill=1000, duration_s=1.0)
    a = run_throughput_rep(c, 0).mops_per_sec
    b = run_throughput_rep(c, 1).mops_per_sec
    assert a > 0 and b > 0
    assert max(a, b) / min(a, b) < 1.25
