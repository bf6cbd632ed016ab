"""Event vocabulary, the policy interface and the recency queue."""

from __future__ import annotations

import abc
from enum import IntEnum
from typing import Iterator, NamedTuple

from .config import ceil_frac
from .trace import MemoryAccess


class Event(IntEnum):
    """One costed action. Hit events carry the request type in the name."""

    HIT_DRAM_READ = 0
    HIT_DRAM_WRITE = 1
    HIT_NVM_READ = 2
    HIT_NVM_WRITE = 3
    FAULT_TO_DRAM = 4
    FAULT_TO_NVM = 5
    MIGRATE_NVM_TO_DRAM = 6
    MIGRATE_DRAM_TO_NVM = 7
    EVICT_TO_DISK = 8

    @property
    def is_primary(self) -> bool:
        """True for the single hit-or-fault event every access produces."""
        return self <= Event.FAULT_TO_NVM


HIT_DRAM = (Event.HIT_DRAM_READ, Event.HIT_DRAM_WRITE)
HIT_NVM = (Event.HIT_NVM_READ, Event.HIT_NVM_WRITE)


class QueueError(LookupError):
    pass


class _Entry:
    __slots__ = ("page", "prev", "next", "reads", "writes", "in_read", "in_write")

    def __init__(self, page):
        self.page = page
        self.prev = self.next = None
        self.reads = self.writes = 0
        self.in_read = self.in_write = False


class Touched(NamedTuple):
    """Result of :meth:`LruQueue.touch`: the entry and its regions before the move."""

    entry: _Entry
    in_read_region: bool
    in_write_region: bool


class LruQueue:
    """Doubly linked recency list, most recent first, with two top regions.

    The read region is the top ``ceil(readperc * capacity)`` ranks and the
    write region the top ``ceil(writeperc * capacity)`` ranks. A cursor on
    the last entry of each region lets every operation keep membership flags
    current in O(1); an entry pushed past a boundary has that region's
    counter zeroed, so counters are only ever non-zero inside their region.
    Regions are disabled when the percentages are zero.
    """

    def __init__(self, capacity: int, readperc: float = 0.0, writeperc: float = 0.0):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.read_region = ceil_frac(readperc, capacity) if readperc else 0
        self.write_region = ceil_frac(writeperc, capacity) if writeperc else 0
        self._head = _Entry(None)  # sentinel; head.next is rank 0
        self._head.next = self._head.prev = self._head
        self._map: dict = {}
        # last entry inside each region (the sentinel when the region is empty)
        self._rcur = self._wcur = self._head
        self._rcount = self._wcount = 0

    def __len__(self) -> int:
        return len(self._map)

    def __contains__(self, page) -> bool:
        return page in self._map

    def __iter__(self) -> Iterator:
        node = self._head.next
        while node is not self._head:
            yield node.page
            node = node.next

    @property
    def full(self) -> bool:
        return len(self._map) >= self.capacity

    def entry(self, page) -> _Entry:
        try:
            return self._map[page]
        except KeyError:
            raise QueueError(f"page {page!r} not in queue") from None

    def lru(self):
        if not self._map:
            raise QueueError("queue is empty")
        return self._head.prev.page

    def rank(self, page) -> int:
        """Position from the front, by scan. Diagnostic use only."""
        target = self.entry(page)
        r, node = 0, self._head.next
        while node is not target:
            node = node.next
            r += 1
        return r

    def counters(self) -> list[tuple]:
        """(page, reads, writes) from most to least recent."""
        out = []
        node = self._head.next
        while node is not self._head:
            out.append((node.page, node.reads, node.writes))
            node = node.next
        return out

    # region bookkeeping -------------------------------------------------

    def _push_front(self, e: _Entry):
        head = self._head
        first = head.next
        e.prev, e.next = head, first
        first.prev = e
        head.next = e
        if self.read_region:
            e.in_read = True
            if self._rcount == 0:
                self._rcur = e
                self._rcount = 1
            elif self._rcount == self.read_region:
                out = self._rcur
                out.in_read = False
                out.reads = 0
                self._rcur = out.prev
            else:
                self._rcount += 1
        if self.write_region:
            e.in_write = True
            if self._wcount == 0:
                self._wcur = e
                self._wcount = 1
            elif self._wcount == self.write_region:
                out = self._wcur
                out.in_write = False
                out.writes = 0
                self._wcur = out.prev
            else:
                self._wcount += 1

    def _unlink(self, e: _Entry):
        # cursor moves off e before the splice; the first entry below the
        # region (counter already zero) is pulled in afterwards
        head = self._head
        if e.in_read:
            if self._rcur is e:
                self._rcur = e.prev
            e.in_read = False
            self._rcount -= 1
        if e.in_write:
            if self._wcur is e:
                self._wcur = e.prev
            e.in_write = False
            self._wcount -= 1
        e.prev.next = e.next
        e.next.prev = e.prev
        if self._rcount < self.read_region and self._rcur.next is not head:
            self._rcur = self._rcur.next
            self._rcur.in_read = True
            self._rcount += 1
        if self._wcount < self.write_region and self._wcur.next is not head:
            self._wcur = self._wcur.next
            self._wcur.in_write = True
            self._wcount += 1

    # public operations -------------------------------------------------

    def touch(self, page) -> Touched:
        """Move ``page`` to the front, keeping its counters."""
        e = self._map.get(page)
        if e is None:
            raise QueueError(f"page {page!r} not in queue")
        res = Touched(e, e.in_read, e.in_write)
        if self._head.next is not e:
            self._unlink(e)
            self._push_front(e)
        return res

    def insert(self, page) -> _Entry:
        """Add a new page at the front with zeroed counters."""
        if page in self._map:
            raise QueueError(f"page {page!r} already queued")
        if len(self._map) >= self.capacity:
            raise QueueError("queue is full")
        e = _Entry(page)
        self._map[page] = e
        self._push_front(e)
        return e

    def remove(self, page) -> _Entry:
        e = self._map.pop(page, None)
        if e is None:
            raise QueueError(f"page {page!r} not in queue")
        self._unlink(e)
        return e

    def evict(self):
        """Remove and return the least recently used page."""
        if not self._map:
            raise QueueError("queue is empty")
        e = self._head.prev
        del self._map[e.page]
        self._unlink(e)
        return e.page

    def clear(self):
        head = self._head
        head.next = head.prev = head
        self._map.clear()
        self._rcur = self._wcur = head
        self._rcount = self._wcount = 0

    def check(self):
        """Scan-verify structure and the counter-region invariant."""
        seen = set()
        node, r = self._head.next, 0
        while node is not self._head:
            assert node.page not in seen, "duplicate page"
            seen.add(node.page)
            assert node.next.prev is node
            in_r = r < self.read_region
            in_w = r < self.write_region
            assert node.in_read == in_r and node.in_write == in_w, f"region flag at rank {r}"
            assert in_r or node.reads == 0, f"read counter outside region at rank {r}"
            assert in_w or node.writes == 0, f"write counter outside region at rank {r}"
            node = node.next
            r += 1
        assert seen == set(self._map) and r <= self.capacity
        assert self._rcount == min(r, self.read_region)
        assert self._wcount == min(r, self.write_region)


class Policy(abc.ABC):
    """A page placement policy driven one access at a time.

    ``on_access`` returns the events produced by that access, the hit or
    fault event first.
    """

    name: str = ""

    def __init__(self, dram_pages: int, nvm_pages: int):
        self.dram_pages = dram_pages
        self.nvm_pages = nvm_pages

    @abc.abstractmethod
    def on_access(self, access: MemoryAccess) -> list[Event]:
        ...

    @abc.abstractmethod
    def reset(self):
        ...

    @abc.abstractmethod
    def occupancy(self) -> tuple[int, int]:
        """Resident (dram, nvm) page counts."""

    @abc.abstractmethod
    def resident(self) -> tuple[list, list]:
        """Resident pages per tier in policy order (for cross-checks)."""

    def describe(self) -> dict:
        return {"policy": self.name, "dram_pages": self.dram_pages, "nvm_pages": self.nvm_pages}
