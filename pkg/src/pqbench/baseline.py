"""Strict reference queue: one binary heap behind one lock.

Deletions always return the true minimum, so every deletion has rank 1.
Used as the quality gold standard and the throughput floor.  The timed
variants read the clock while still holding the lock, which pins the
timestamp to the operation's effective point and keeps replayed ranks
honest even if the scheduler preempts between unlock and logging.
"""
from __future__ import annotations

import heapq
import random
import threading
from typing import Callable, List, Optional, Tuple

from .core import Item, Lsm, make_seq


class SeqLsmQueue:
    """Single-threaded block-merge queue behind the common calling shape."""

    def __init__(self):
        self.lsm = Lsm()
        self._next_seq = 0

    def register(self, rng: Optional[random.Random] = None) -> "SeqLsmQueue":
        return self

    def insert(self, key: int, value=None) -> Item:
        it = Item(key, make_seq(0, self._next_seq), value)
        self._next_seq += 1
        self.lsm.insert(it)
        return it

    def delete_min(self) -> Optional[Item]:
        return self.lsm.delete_min()

    def live_count(self) -> int:
        return sum(1 for _ in self.lsm.live_items())

    def live_items(self) -> List[Item]:
        return list(self.lsm.live_items())


class LockedHeap:
    def __init__(self):
        self._lock = threading.Lock()
        self._heap: List[Item] = []
        self._next_seq = 0

    def register(self, rng: Optional[random.Random] = None) -> "LockedHeapHandle":
        return LockedHeapHandle(self)

    def insert(self, key: int, value=None) -> Item:
        with self._lock:
            it = Item(key, make_seq(0, self._next_seq), value)
            self._next_seq += 1
            heapq.heappush(self._heap, it)
        return it

    def delete_min(self) -> Optional[Item]:
        with self._lock:
            if not self._heap:
                return None
            return heapq.heappop(self._heap)

    def insert_timed(self, key: int, clock: Callable[[], float], value=None):
        with self._lock:
            it = Item(key, make_seq(0, self._next_seq), value)
            self._next_seq += 1
            heapq.heappush(self._heap, it)
            t = clock()
        return it, t

    def delete_min_timed(self, clock: Callable[[], float]):
        with self._lock:
            it = heapq.heappop(self._heap) if self._heap else None
            t = clock()
        return it, t

    def live_count(self) -> int:
        with self._lock:
            return len(self._heap)

    def live_items(self) -> List[Item]:
        with self._lock:
            return list(self._heap)


class LockedHeapHandle:
    """Thin per-thread wrapper so all queue kinds share one calling shape."""

    __slots__ = ("q",)

    def __init__(self, q: LockedHeap):
        self.q = q

    def insert(self, key: int, value=None) -> Item:
        return self.q.insert(key, value)

    def delete_min(self) -> Optional[Item]:
        return self.q.delete_min()
