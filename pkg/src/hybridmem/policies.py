"""Concrete placement policies: single-tier LRU, CLOCK-DWF and two-LRU."""

from __future__ import annotations

import heapq

from .config import Capacities, PolicyParams
from .core import Event, LruQueue, Policy, QueueError
from .trace import MemoryAccess, Op

HDR, HDW = Event.HIT_DRAM_READ, Event.HIT_DRAM_WRITE
HNR, HNW = Event.HIT_NVM_READ, Event.HIT_NVM_WRITE
F2D, F2N = Event.FAULT_TO_DRAM, Event.FAULT_TO_NVM
N2D, D2N = Event.MIGRATE_NVM_TO_DRAM, Event.MIGRATE_DRAM_TO_NVM
EVICT = Event.EVICT_TO_DISK
WRITE = Op.WRITE


class SingleTierLru(Policy):
    """Plain LRU over one technology holding the whole memory capacity."""

    def __init__(self, capacity: int, tier: str = "dram"):
        if tier not in ("dram", "nvm"):
            raise ValueError("tier must be 'dram' or 'nvm'")
        super().__init__(capacity if tier == "dram" else 0, capacity if tier == "nvm" else 0)
        self.tier = tier
        self.name = f"{tier}_lru"
        self.capacity = capacity
        if tier == "dram":
            self._hits = (HDR, HDW)
            self._fault = F2D
        else:
            self._hits = (HNR, HNW)
            self._fault = F2N
        self.reset()

    def reset(self):
        self.queue = LruQueue(self.capacity)

    def on_access(self, access: MemoryAccess) -> list[Event]:
        q = self.queue
        page = access.page_id
        if page in q:
            q.touch(page)
            return [self._hits[access.op is WRITE]]
        events = [self._fault]
        if q.full:
            q.evict()
            events.append(EVICT)
        q.insert(page)
        return events

    def occupancy(self):
        n = len(self.queue)
        return (n, 0) if self.tier == "dram" else (0, n)

    def resident(self):
        pages = list(self.queue)
        return (pages, []) if self.tier == "dram" else ([], pages)


class ClockState:
    """Frames swept by a clock hand, with a reference bit and write count per frame.

    New pages take the lowest-numbered free frame, which after an eviction is
    the frame just vacated, i.e. directly behind the hand.
    """

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.pages: list = [None] * capacity
        self.ref = [0] * capacity
        self.write_freq = [0] * capacity
        self.slot: dict = {}
        self.hand = 0
        self._free = list(range(capacity))

    def __len__(self):
        return len(self.slot)

    def __contains__(self, page):
        return page in self.slot

    @property
    def full(self) -> bool:
        return len(self.slot) >= self.capacity

    def insert(self, page, ref: int = 1, write_freq: int = 0) -> int:
        if page in self.slot:
            raise QueueError(f"page {page!r} already resident")
        if not self._free:
            raise QueueError("clock is full")
        i = heapq.heappop(self._free)
        self.pages[i] = page
        self.ref[i] = ref
        self.write_freq[i] = write_freq
        self.slot[page] = i
        return i

    def remove(self, page) -> int:
        i = self.slot.pop(page)
        self.pages[i] = None
        self.ref[i] = self.write_freq[i] = 0
        heapq.heappush(self._free, i)
        return i

    def _take(self, i: int):
        page = self.pages[i]
        self.remove(page)
        self.hand = (i + 1) % self.capacity
        return page

    def select_victim(self):
        """Second-chance clock: clear set reference bits until an unset one is found."""
        if not self.slot:
            raise QueueError("clock is empty")
        pages, ref, cap = self.pages, self.ref, self.capacity
        while True:
            i = self.hand
            if pages[i] is not None:
                if not ref[i]:
                    return self._take(i)
                ref[i] = 0
            self.hand = (i + 1) % cap

    def select_write_aware_victim(self):
        """Prefer unreferenced pages with no recorded writes.

        A referenced page has its bit cleared and is skipped; the first
        unreferenced page with write_freq 0 is evicted. A full sweep without
        a victim halves every write_freq and sweeps again.
        """
        if not self.slot:
            raise QueueError("clock is empty")
        pages, ref, wf, cap = self.pages, self.ref, self.write_freq, self.capacity
        while True:
            for _ in range(cap):
                i = self.hand
                if pages[i] is not None:
                    if ref[i]:
                        ref[i] = 0
                    elif wf[i] == 0:
                        return self._take(i)
                self.hand = (i + 1) % cap
            for i in range(cap):
                wf[i] >>= 1


def clock_dwf_select_dram_victim(state: ClockState):
    return state.select_write_aware_victim()


class ClockDwf(Policy):
    """CLOCK-DWF: write-aware DRAM clock over a plain NVM clock.

    Writes are never serviced by NVM: a write hit on an NVM page migrates it
    to DRAM and the request is then serviced (and counted) at DRAM. Read
    faults fill NVM and write faults fill DRAM, except that every fault
    fills DRAM while DRAM still has free frames.
    """

    name = "clock_dwf"

    def __init__(self, dram_pages: int, nvm_pages: int):
        super().__init__(dram_pages, nvm_pages)
        self.reset()

    def reset(self):
        self.dram = ClockState(self.dram_pages)
        self.nvm = ClockState(self.nvm_pages)

    def _room_in_dram(self, events: list):
        dram, nvm = self.dram, self.nvm
        if dram.full:
            victim = dram.select_write_aware_victim()
            events.append(D2N)
            if nvm.full:
                nvm.select_victim()
                events.append(EVICT)
            nvm.insert(victim)

    def on_access(self, access: MemoryAccess) -> list[Event]:
        page = access.page_id
        write = access.op is WRITE
        dram, nvm = self.dram, self.nvm
        i = dram.slot.get(page)
        if i is not None:
            dram.ref[i] = 1
            if write:
                dram.write_freq[i] += 1
                return [HDW]
            return [HDR]
        i = nvm.slot.get(page)
        if i is not None:
            if not write:
                nvm.ref[i] = 1
                return [HNR]
            nvm.remove(page)
            events = [HDW, N2D]
            self._room_in_dram(events)
            dram.insert(page, 1, 1)
            return events
        if write or not dram.full:
            events = [F2D]
            self._room_in_dram(events)
            dram.insert(page, 1, int(write))
            return events
        events = [F2N]
        if nvm.full:
            nvm.select_victim()
            events.append(EVICT)
        nvm.insert(page)
        return events

    def occupancy(self):
        return len(self.dram), len(self.nvm)

    def resident(self):
        return list(self.dram.pages), list(self.nvm.pages)


class TwoLru(Policy):
    """Two LRU queues with counter-gated promotion from NVM to DRAM.

    Faults always fill DRAM; the DRAM LRU victim moves to the front of the
    NVM queue. An NVM hit counts reads (writes) while the page sits in the
    top read (write) region of the NVM queue and restarts the count at 1
    when it was hit from below the region. A count above its threshold
    promotes the page to DRAM. A promoting write is serviced at DRAM; a
    promoting read is serviced from NVM.
    """

    name = "two_lru"

    def __init__(self, dram_pages: int, nvm_pages: int, params: PolicyParams | None = None):
        super().__init__(dram_pages, nvm_pages)
        self.params = params or PolicyParams()
        self.reset()

    def reset(self):
        p = self.params
        self.dram = LruQueue(self.dram_pages)
        self.nvm = LruQueue(self.nvm_pages, p.readperc, p.writeperc)

    def _demote_dram_lru(self, events: list):
        dram, nvm = self.dram, self.nvm
        if dram.full:
            victim = dram.evict()
            events.append(D2N)
            if nvm.full:
                nvm.evict()
                events.append(EVICT)
            nvm.insert(victim)

    def on_access(self, access: MemoryAccess) -> list[Event]:
        page = access.page_id
        write = access.op is WRITE
        dram, nvm = self.dram, self.nvm
        if page in dram:
            dram.touch(page)
            return [HDW if write else HDR]
        if page in nvm:
            e, in_read, in_write = nvm.touch(page)
            if write:
                e.writes = e.writes + 1 if in_write else 1
                if not e.writes > self.params.write_threshold:
                    return [HNW]
                events = [HDW, N2D]
            else:
                e.reads = e.reads + 1 if in_read else 1
                if not e.reads > self.params.read_threshold:
                    return [HNR]
                events = [HNR, N2D]
            nvm.remove(page)
            self._demote_dram_lru(events)
            dram.insert(page)
            return events
        events = [F2D]
        self._demote_dram_lru(events)
        dram.insert(page)
        return events

    def occupancy(self):
        return len(self.dram), len(self.nvm)

    def resident(self):
        return list(self.dram), list(self.nvm)

    def describe(self):
        d = super().describe()
        d.update(read_region=self.nvm.read_region, write_region=self.nvm.write_region)
        return d


def make_policy(name: str, caps: Capacities, params: PolicyParams | None = None) -> Policy:
    """Instantiate a policy by name. Single-tier baselines get the whole memory."""
    if name == "dram_lru":
        return SingleTierLru(caps.total, "dram")
    if name == "nvm_lru":
        return SingleTierLru(caps.total, "nvm")
    if name == "clock_dwf":
        return ClockDwf(caps.dram_pages, caps.nvm_pages)
    if name == "two_lru":
        return TwoLru(caps.dram_pages, caps.nvm_pages, params)
    raise ValueError(f"unknown policy {name!r}")
