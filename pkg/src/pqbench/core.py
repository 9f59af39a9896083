"""Core item model and the sequential merge-structured priority queue.

Items are (key, value) pairs ordered by (key, seq), where seq is a unique
insertion sequence number that makes the order total and replay
deterministic.  The queue keeps its items in sorted blocks whose
power-of-two capacities are pairwise distinct; inserting adds a singleton
block and merges equal capacities binary-counter style, deleting pops the
smallest block head.  Both operations are O(log n) amortised.
"""
from __future__ import annotations

import threading
from typing import Iterator, List, Optional, Tuple

SEQ_THREAD_SHIFT = 48


def make_seq(thread_id: int, counter: int) -> int:
    """Pack a per-thread counter into a globally unique sequence number."""
    if counter >= (1 << SEQ_THREAD_SHIFT):
        raise OverflowError("per-thread insertion counter exhausted")
    return (thread_id << SEQ_THREAD_SHIFT) | counter


class Item:
    """A prioritised payload.  Smaller (key, seq) means higher priority.

    ``taken`` is a one-shot consumption flag: once an item is handed to a
    caller it is dead everywhere, even if block snapshots still reference
    it.  The flag is flipped only through :class:`ClaimTable`.
    """

    __slots__ = ("key", "seq", "value", "taken")

    def __init__(self, key: int, seq: int, value: int = 0):
        self.key = key
        self.seq = seq
        self.value = value
        self.taken = False

    def __lt__(self, other: "Item") -> bool:
        return (self.key, self.seq) < (other.key, other.seq)

    def sort_key(self) -> Tuple[int, int]:
        return (self.key, self.seq)

    def __repr__(self) -> str:
        flag = "#" if self.taken else ""
        return f"Item({self.key}, seq={self.seq}{flag})"


class ClaimTable:
    """Striped test-and-set over item ``taken`` flags.

    One table must be shared by every component that can reach the same
    items, otherwise two claimants could both win.
    """

    __slots__ = ("_locks", "_mask")

    def __init__(self, stripes: int = 64):
        if stripes & (stripes - 1):
            raise ValueError("stripes must be a power of two")
        self._locks = [threading.Lock() for _ in range(stripes)]
        self._mask = stripes - 1

    def try_claim(self, item: Item) -> bool:
        if item.taken:
            return False
        with self._locks[item.seq & self._mask]:
            if item.taken:
                return False
            item.taken = True
            return True


def fit_capacity(occupancy: int) -> int:
    """Smallest power of two C with occupancy in (C/2, C]."""
    if occupancy <= 0:
        raise ValueError("occupancy must be positive")
    return 1 << (occupancy - 1).bit_length()


def merge_sorted_live(
    items_a: List[Item], start_a: int, items_b: List[Item], start_b: int
) -> List[Item]:
    """Two-way merge of the live tails of two sorted item lists.

    Consumed (taken) items are dropped.  Inputs are never mutated, so the
    result can safely replace blocks that snapshots still reference.
    """
    out: List[Item] = []
    i, j = start_a, start_b
    na, nb = len(items_a), len(items_b)
    while i < na and j < nb:
        a, b = items_a[i], items_b[j]
        if a.taken:
            i += 1
            continue
        if b.taken:
            j += 1
            continue
        if (a.key, a.seq) < (b.key, b.seq):
            out.append(a)
            i += 1
        else:
            out.append(b)
            j += 1
    for k in range(i, na):
        it = items_a[k]
        if not it.taken:
            out.append(it)
    for k in range(j, nb):
        it = items_b[k]
        if not it.taken:
            out.append(it)
    return out


class Block:
    """A sorted run of items with a power-of-two capacity.

    ``head`` indexes the first unconsumed slot; everything before it has
    been handed out by the owner.  Slots at or after ``head`` may still be
    dead via their item's ``taken`` flag (set by another thread that holds
    a copy); those are skipped lazily.  ``occupancy`` is therefore the
    structural count, not necessarily the live count.
    """

    __slots__ = ("capacity", "items", "head")

    def __init__(self, capacity: int, items: List[Item], head: int = 0):
        self.capacity = capacity
        self.items = items
        self.head = head

    @property
    def occupancy(self) -> int:
        return len(self.items) - self.head

    def check(self) -> None:
        cap = self.capacity
        if cap < 1 or cap & (cap - 1):
            raise ValueError(f"capacity {cap} not a power of two")
        if not 0 <= self.head <= len(self.items):
            raise ValueError("head out of bounds")
        occ = self.occupancy
        if not cap // 2 < occ <= cap:
            raise ValueError(f"occupancy {occ} outside ({cap // 2}, {cap}]")
        items = self.items
        for i in range(1, len(items)):
            if (items[i - 1].key, items[i - 1].seq) >= (items[i].key, items[i].seq):
                raise ValueError("items not strictly sorted by (key, seq)")

    def __repr__(self) -> str:
        return f"Block(cap={self.capacity}, occ={self.occupancy})"


def merge_blocks(a: Block, b: Block) -> Optional[Block]:
    """Merge two equal-capacity blocks into one of doubled capacity.

    Returns None when every input item was already consumed.  If enough
    items were consumed remotely that the doubled capacity would be less
    than half full, the result is shrunk to fit.
    """
    if a.capacity != b.capacity:
        raise ValueError("merge requires equal capacities")
    merged = merge_sorted_live(a.items, a.head, b.items, b.head)
    if not merged:
        return None
    capacity = 2 * a.capacity
    if len(merged) <= capacity // 2:
        capacity = fit_capacity(len(merged))
    return Block(capacity, merged)


class Lsm:
    """Sequential priority queue over distinct-capacity sorted blocks.

    Single-owner: no internal synchronisation.  Other threads may read
    blocks (via published snapshots) and kill individual items through a
    shared :class:`ClaimTable`; only the owner restructures.
    """

    __slots__ = ("blocks",)

    def __init__(self) -> None:
        # descending capacity; capacities pairwise distinct
        self.blocks: List[Block] = []

    @property
    def size(self) -> int:
        return sum(len(b.items) - b.head for b in self.blocks)

    def __len__(self) -> int:
        return self.size

    def insert(self, item: Item) -> None:
        self._place(Block(1, [item]))

    def _place(self, blk: Block) -> None:
        # binary-counter cascade: merge while an equal capacity exists
        blocks = self.blocks
        while True:
            match = None
            for b in blocks:
                if b.capacity == blk.capacity:
                    match = b
                    break
            if match is None:
                break
            blocks.remove(match)
            merged = merge_blocks(match, blk)
            if merged is None:
                return
            blk = merged
        for i, b in enumerate(blocks):
            if b.capacity < blk.capacity:
                blocks.insert(i, blk)
                return
        blocks.append(blk)

    def _maintain(self, blk: Block) -> None:
        # restore the half-full invariant after head advances
        occ = blk.occupancy
        if occ == 0:
            self.blocks.remove(blk)
            return
        if occ > blk.capacity // 2:
            return
        self.blocks.remove(blk)
        self._place(Block(fit_capacity(occ), blk.items, blk.head))

    def _cleanup(self) -> None:
        # drop remotely consumed items sitting at block heads
        restart = True
        while restart:
            restart = False
            for blk in self.blocks:
                items = blk.items
                n = len(items)
                h = blk.head
                while h < n and items[h].taken:
                    h += 1
                if h != blk.head:
                    blk.head = h
                    before = len(self.blocks)
                    self._maintain(blk)
                    if len(self.blocks) != before or blk not in self.blocks:
                        restart = True
                        break

    def peek_min(self) -> Optional[Tuple[Block, Item]]:
        """Smallest live head and the block to pop it from.

        Skipping dead heads may restructure blocks, but the live contents
        are untouched.
        """
        self._cleanup()
        best: Optional[Tuple[Block, Item]] = None
        for blk in self.blocks:
            it = blk.items[blk.head]
            if best is None or (it.key, it.seq) < (best[1].key, best[1].seq):
                best = (blk, it)
        return best

    def pop_head(self, blk: Block) -> Item:
        item = blk.items[blk.head]
        blk.head += 1
        self._maintain(blk)
        return item

    def delete_min(self) -> Optional[Item]:
        loc = self.peek_min()
        if loc is None:
            return None
        blk, _ = loc
        return self.pop_head(blk)

    def spill_largest(self) -> Optional[Block]:
        """Detach and return the largest-capacity block."""
        if not self.blocks:
            return None
        return self.blocks.pop(0)

    def live_items(self) -> Iterator[Item]:
        for blk in self.blocks:
            for it in blk.items[blk.head:]:
                if not it.taken:
                    yield it

    def check(self) -> None:
        caps = [b.capacity for b in self.blocks]
        if caps != sorted(caps, reverse=True):
            raise ValueError("blocks not in descending capacity order")
        if len(set(caps)) != len(caps):
            raise ValueError("duplicate block capacities")
        for b in self.blocks:
            b.check()
