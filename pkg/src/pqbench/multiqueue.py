"""Randomized multi-heap priority queue.

c heaps per thread, each behind its own lock.  Inserts push to a random
heap; deletions sample two distinct heaps and pop the one whose top is
smaller.  Quality is good in practice but carries no worst-case rank
guarantee.  Lock acquisition is try-lock with re-sampling so threads
rarely wait on each other.
"""
from __future__ import annotations

import heapq
import random
import threading
from typing import List, Optional

from .core import Item, make_seq

INSERT_ATTEMPTS = 8
DELETE_ATTEMPTS = 8


class MultiQueue:
    def __init__(self, threads: int = 1, c: int = 4):
        if threads < 1:
            raise ValueError("threads must be >= 1")
        if c < 1:
            raise ValueError("c must be >= 1")
        self.c = c
        self.threads = threads
        self.n = c * threads
        self.locks = [threading.Lock() for _ in range(self.n)]
        self.heaps: List[List[Item]] = [[] for _ in range(self.n)]
        # cached tops, read without locking when choosing a victim heap
        self.tops: List[Optional[Item]] = [None] * self.n
        self._reg_lock = threading.Lock()
        self._registered = 0

    def register(self, rng: Optional[random.Random] = None) -> "MqHandle":
        with self._reg_lock:
            owner = self._registered
            self._registered += 1
        return MqHandle(self, owner, rng or random.Random())

    # ------------------------------------------------------------------

    def insert_item(self, it: Item, rng: random.Random) -> None:
        n = self.n
        for _ in range(INSERT_ATTEMPTS):
            i = rng.randrange(n)
            if self.locks[i].acquire(blocking=False):
                try:
                    self._push(i, it)
                finally:
                    self.locks[i].release()
                return
        i = rng.randrange(n)
        with self.locks[i]:
            self._push(i, it)

    def _push(self, i: int, it: Item) -> None:
        h = self.heaps[i]
        heapq.heappush(h, it)
        self.tops[i] = h[0]

    def delete_min(self, rng: random.Random) -> Optional[Item]:
        n = self.n
        for _ in range(DELETE_ATTEMPTS):
            chosen_top = None
            if n == 1:
                i = 0
            else:
                i = rng.randrange(n)
                j = rng.randrange(n - 1)
                if j >= i:
                    j += 1
                ti, tj = self.tops[i], self.tops[j]
                if ti is None and tj is None:
                    continue
                if ti is None or (tj is not None and tj < ti):
                    i, ti = j, tj
                chosen_top = ti
            if not self.locks[i].acquire(blocking=False):
                continue
            try:
                h = self.heaps[i]
                if not h:
                    self.tops[i] = None
                    continue
                if chosen_top is not None and h[0] is not chosen_top:
                    # the top moved between sampling and locking, so the
                    # two-choice comparison was stale; re-sample
                    continue
                it = heapq.heappop(h)
                self.tops[i] = h[0] if h else None
                return it
            finally:
                self.locks[i].release()
        return self._sweep()

    def _sweep(self) -> Optional[Item]:
        """Hold every lock at once for a consistent global pop or a firm
        answer that the structure is empty."""
        for lock in self.locks:
            lock.acquire()
        try:
            best = None
            for i, h in enumerate(self.heaps):
                if h and (best is None or h[0] < self.heaps[best][0]):
                    best = i
            if best is None:
                return None
            h = self.heaps[best]
            it = heapq.heappop(h)
            self.tops[best] = h[0] if h else None
            return it
        finally:
            for lock in self.locks:
                lock.release()

    # ------------------------------------------------------------------

    def live_count(self) -> int:
        with self._all_locks():
            return sum(len(h) for h in self.heaps)

    def live_items(self) -> List[Item]:
        with self._all_locks():
            return [it for h in self.heaps for it in h]

    def _all_locks(self):
        return _MultiLock(self.locks)


class _MultiLock:
    def __init__(self, locks):
        self.locks = locks

    def __enter__(self):
        for lock in self.locks:
            lock.acquire()

    def __exit__(self, *exc):
        for lock in self.locks:
            lock.release()
        return False


class MqHandle:
    """Per-thread front end carrying the sequence counter and random stream."""

    __slots__ = ("q", "owner", "rng", "_counter")

    def __init__(self, q: MultiQueue, owner: int, rng: random.Random):
        self.q = q
        self.owner = owner
        self.rng = rng
        self._counter = 0

    @property
    def thread_id(self) -> int:
        return self.owner

    def insert(self, key: int, value=None) -> Item:
        it = Item(key, make_seq(self.owner, self._counter), value)
        self._counter += 1
        self.q.insert_item(it, self.rng)
        return it

    def delete_min(self) -> Optional[Item]:
        return self.q.delete_min(self.rng)
