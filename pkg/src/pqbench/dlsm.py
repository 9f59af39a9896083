"""Per-thread queue with cross-thread item copying on local emptiness.

Every registered thread owns a private :class:`~pqbench.core.Lsm` and
publishes an immutable snapshot of its block list after each structural
change.  A thread whose local queue runs dry copies ("spies") another
thread's published snapshot instead of stealing; the shared claim table
makes delivery at-most-once even though copies duplicate items.  Returned
items are only guaranteed minimal among the calling thread's items.
"""
from __future__ import annotations

import threading
from typing import List, Optional, Tuple

from .core import Block, ClaimTable, Item, Lsm, fit_capacity

Snapshot = Tuple[Block, ...]


class DlsmShared:
    """Registration slots and published snapshots for a thread group."""

    def __init__(self, threads: int, claims: Optional[ClaimTable] = None):
        if threads < 1:
            raise ValueError("threads must be >= 1")
        self.nthreads = threads
        self.claims = claims if claims is not None else ClaimTable()
        self.slots: List[Snapshot] = [() for _ in range(threads)]
        self._reg_lock = threading.Lock()
        self._registered = 0

    def register(self) -> "DlsmHandle":
        with self._reg_lock:
            if self._registered >= self.nthreads:
                raise RuntimeError("all thread slots already registered")
            owner = self._registered
            self._registered += 1
        return DlsmHandle(self, owner)


class DlsmHandle:
    """Single-owner view; must only be used by its registering thread."""

    __slots__ = ("shared", "owner", "local", "_dead_snaps")

    def __init__(self, shared: DlsmShared, owner: int):
        self.shared = shared
        self.owner = owner
        self.local = Lsm()
        # victim id -> snapshot object this handle saw fully consumed
        self._dead_snaps: dict = {}

    def publish(self) -> None:
        # readers only ever see complete, immutable block tuples
        self.shared.slots[self.owner] = tuple(self.local.blocks)

    def insert(self, item: Item) -> None:
        self.local.insert(item)
        self.publish()

    def delete_min(self) -> Optional[Item]:
        it = self._take_local()
        if it is not None:
            return it
        if self.spy() > 0:
            return self._take_local()
        return None

    def peek(self) -> Optional[Tuple[Block, Item]]:
        """Smallest live local entry, spying once if the local queue is dry.

        Nothing is claimed; callers that want the item must win it in the
        claim table and then :meth:`consume` the block head.
        """
        loc = self.local.peek_min()
        if loc is not None:
            return loc
        self.publish()
        if self.spy() > 0:
            return self.local.peek_min()
        return None

    def consume(self, blk: Block) -> None:
        """Drop a block head that the caller just claimed via :meth:`peek`."""
        self.local.pop_head(blk)
        self.publish()

    def _take_local(self) -> Optional[Item]:
        local = self.local
        claims = self.shared.claims
        while True:
            loc = local.peek_min()
            if loc is None:
                self.publish()
                return None
            blk, it = loc
            won = claims.try_claim(it)
            local.pop_head(blk)
            self.publish()
            if won:
                return it

    def spy(self) -> int:
        """Copy the first non-empty victim snapshot into the local queue.

        Victims are scanned round-robin from the next thread id.  Items
        are copied by reference, so their consumption flags stay shared
        with the victim's originals.
        """
        shared = self.shared
        dead = self._dead_snaps
        for step in range(1, shared.nthreads):
            victim = (self.owner + step) % shared.nthreads
            snap = shared.slots[victim]
            if snap is dead.get(victim):
                # consumption flags are one-shot, so a snapshot object once
                # seen fully consumed stays that way; republishing swaps in
                # a new object and falls through this identity check
                continue
            copied: List[Block] = []
            live = 0
            for blk in snap:
                head = blk.head  # racy read; stale is fine, claims dedupe
                items = blk.items
                blk_live = sum(1 for it in items[head:] if not it.taken)
                if blk_live == 0:
                    # a stale snapshot full of consumed items must not
                    # count as success, or victims further along the ring
                    # would never be reached
                    continue
                # the victim may have advanced the shared head since
                # publishing, so restore the half-full invariant here
                occ = len(items) - head
                cap = blk.capacity
                if occ <= cap // 2:
                    cap = fit_capacity(occ)
                copied.append(Block(cap, items, head))
                live += blk_live
            if live:
                local = self.local
                for blk in copied:  # _place merges any capacity collisions
                    local._place(blk)
                self.publish()
                return live
            dead[victim] = snap
        return 0
