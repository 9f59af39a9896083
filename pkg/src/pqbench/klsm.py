"""Composed relaxed priority queue: fast thread-local part, shared part.

Each thread owns a small local merge structure capped at k items; overflow
spills whole blocks into the shared structure, whose deletions are drawn
from a window of the k+1 globally smallest.  A deletion peeks both parts
and claims the smaller head (ties go to the local part, which is cheaper).
Every item an operation can observe passes through one shared claim table,
so an item is handed out exactly once no matter how many stale copies of
it exist in spied snapshots or spilled blocks.

With P threads, a deletion returns one of the k*P + 1 smallest items.
"""
from __future__ import annotations

import random
from typing import List, Optional, Tuple

from .core import Block, ClaimTable, Item, make_seq
from .dlsm import DlsmShared
from .slsm import Slsm


def rank_bound(k: int, threads: int) -> int:
    """Worst-case rank of a deleted item among those currently present."""
    return k * threads + 1


class Klsm:
    """Shared state plus a registry of per-thread handles."""

    def __init__(self, k: int = 256, threads: int = 1):
        if k < 0:
            raise ValueError("k must be >= 0")
        if threads < 1:
            raise ValueError("threads must be >= 1")
        self.k = k
        self.threads = threads
        self.claims = ClaimTable()
        self.dlsm = DlsmShared(threads, claims=self.claims)
        self.slsm = Slsm(k, claims=self.claims)

    def register(self, rng: Optional[random.Random] = None) -> "KlsmHandle":
        """Hand out a per-thread handle; call once from each worker."""
        return KlsmHandle(self, self.dlsm.register(), rng or random.Random())

    @property
    def bound(self) -> int:
        return rank_bound(self.k, self.threads)

    def live_items(self) -> List[Item]:
        """Deduplicated live items across snapshots and the shared part."""
        seen = set()
        out = []
        for snap in self.dlsm.slots:
            for blk in snap:
                for it in blk.items[blk.head:]:
                    if not it.taken and id(it) not in seen:
                        seen.add(id(it))
                        out.append(it)
        for it in self.slsm.live_items():
            if id(it) not in seen:
                seen.add(id(it))
                out.append(it)
        return out

    def live_count(self) -> int:
        return len(self.live_items())


class KlsmHandle:
    """One thread's view of the queue.  Not thread-safe; one per thread."""

    __slots__ = ("q", "dlsm", "rng", "_counter")

    def __init__(self, q: Klsm, dlsm_handle, rng: random.Random):
        self.q = q
        self.dlsm = dlsm_handle
        self.rng = rng
        self._counter = 0

    @property
    def thread_id(self) -> int:
        return self.dlsm.owner

    def insert(self, key: int, value=None) -> Item:
        it = Item(key, make_seq(self.dlsm.owner, self._counter), value)
        self._counter += 1
        self.dlsm.insert(it)
        local = self.dlsm.local
        while local.size > self.q.k:
            blk = local.spill_largest()
            self.dlsm.publish()
            self.q.slsm.insert_batch(blk)
        return it

    def delete_min(self) -> Optional[Item]:
        """One of the k*P+1 smallest live items, or None if observed empty."""
        q = self.q
        while True:
            pair = self.dlsm.peek()
            cand = q.slsm.peek_candidate(self.rng)
            if pair is None and cand is None:
                return None
            use_local = cand is None or (
                pair is not None and pair[1].sort_key() <= cand.sort_key()
            )
            it = pair[1] if use_local else cand
            if q.claims.try_claim(it):
                if use_local:
                    self.dlsm.consume(pair[0])
                return it
            # lost the race for this item; peek again from fresh state
