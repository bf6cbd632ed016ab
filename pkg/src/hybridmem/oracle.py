"""Brute-force reference simulator used to cross-check the fast policies.

Nothing here is shared with the optimized modules: tiers are plain Python
lists scanned linearly, ranks are list indices, and the NVM counter reset
is positional: after the queue is reordered, whatever page sits at index
``readperc`` (``writeperc``) has its read (write) counter cleared.

Traces are sequences of ``(op, page)`` with ``op`` in ``{"R", "W"}``.
Event names follow ``HitDram(R)``, ``FaultToNvm``, ``MigrateDramToNvm``...
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import ROUND_CEILING, Decimal

COUNTER_NAMES = (
    "n_total", "n_hit_dram_read", "n_hit_dram_write", "n_hit_nvm_read",
    "n_hit_nvm_write", "n_miss", "n_fault_to_dram", "n_fault_to_nvm",
    "n_mig_nvm_to_dram", "n_mig_dram_to_nvm", "n_evict_to_disk",
)

_COUNTER_OF = {
    "HitDram(R)": "n_hit_dram_read",
    "HitDram(W)": "n_hit_dram_write",
    "HitNvm(R)": "n_hit_nvm_read",
    "HitNvm(W)": "n_hit_nvm_write",
    "FaultToDram": "n_fault_to_dram",
    "FaultToNvm": "n_fault_to_nvm",
    "MigrateNvmToDram": "n_mig_nvm_to_dram",
    "MigrateDramToNvm": "n_mig_dram_to_nvm",
    "EvictToDisk": "n_evict_to_disk",
}


def region_size(perc: float, capacity: int) -> int:
    value = Decimal(repr(perc)) * capacity
    return int(value.to_integral_value(rounding=ROUND_CEILING))


@dataclass
class NaiveTierState:
    """One tier: ``[page, read_counter, write_counter]`` rows, most recent first."""

    capacity: int
    rows: list = field(default_factory=list)

    def find(self, page):
        for i, row in enumerate(self.rows):
            if row[0] == page:
                return i
        return -1

    def pages(self):
        return [row[0] for row in self.rows]


@dataclass
class OracleResult:
    counters: dict
    log: list           # one tuple of event names per access
    dram: list          # final resident pages, policy order
    nvm: list
    nvm_counters: list  # two_lru only: [page, reads, writes] rows


def _lru(trace, capacity, tier):
    mem = NaiveTierState(capacity)
    hit = "HitDram" if tier == "dram" else "HitNvm"
    fault = "FaultToDram" if tier == "dram" else "FaultToNvm"
    log = []
    for op, page in trace:
        i = mem.find(page)
        if i >= 0:
            mem.rows.insert(0, mem.rows.pop(i))
            log.append((f"{hit}({op})",))
            continue
        ev = [fault]
        mem.rows.insert(0, [page, 0, 0])
        if len(mem.rows) > capacity:
            mem.rows.pop()
            ev.append("EvictToDisk")
        log.append(tuple(ev))
    pages = mem.pages()
    if tier == "dram":
        return log, pages, [], []
    return log, [], pages, []


def _two_lru(trace, dram_pages, nvm_pages, readperc, writeperc,
             read_threshold, write_threshold, reset_on_insert=True):
    dram = NaiveTierState(dram_pages)
    nvm = NaiveTierState(nvm_pages)
    kr = region_size(readperc, nvm_pages)
    kw = region_size(writeperc, nvm_pages)

    def reset_boundaries():
        if len(nvm.rows) > kr:
            nvm.rows[kr][1] = 0
        if len(nvm.rows) > kw:
            nvm.rows[kw][2] = 0

    def to_nvm_front(page, ev):
        nvm.rows.insert(0, [page, 0, 0])
        if reset_on_insert:
            reset_boundaries()
        if len(nvm.rows) > nvm.capacity:
            nvm.rows.pop()
            ev.append("EvictToDisk")

    def dram_insert(page, ev):
        # "Migrate from DRAM to NVM if necessary"
        dram.rows.insert(0, [page, 0, 0])
        if len(dram.rows) > dram.capacity:
            victim = dram.rows.pop()[0]
            ev.append("MigrateDramToNvm")
            to_nvm_front(victim, ev)

    log = []
    for op, page in trace:
        i = dram.find(page)
        if i >= 0:
            dram.rows.insert(0, dram.rows.pop(i))
            log.append((f"HitDram({op})",))
            continue
        r = nvm.find(page)
        if r >= 0:
            row = nvm.rows.pop(r)
            nvm.rows.insert(0, row)
            reset_boundaries()
            if op == "R":
                row[1] = row[1] + 1 if r < kr else 1
                migrate = row[1] > read_threshold
            else:
                row[2] = row[2] + 1 if r < kw else 1
                migrate = row[2] > write_threshold
            if not migrate:
                log.append((f"HitNvm({op})",))
                continue
            ev = ["HitDram(W)" if op == "W" else "HitNvm(R)", "MigrateNvmToDram"]
            nvm.rows.pop(0)
            dram_insert(page, ev)
            log.append(tuple(ev))
            continue
        ev = ["FaultToDram"]
        dram_insert(page, ev)
        log.append(tuple(ev))
    return log, dram.pages(), nvm.pages(), [list(row) for row in nvm.rows]


class _Frames:
    """Clock frames as parallel lists; empty frames hold None."""

    def __init__(self, n):
        self.page = [None] * n
        self.ref = [0] * n
        self.wf = [0] * n
        self.hand = 0

    def where(self, page):
        for i, p in enumerate(self.page):
            if p == page:
                return i
        return -1

    def used(self):
        return sum(p is not None for p in self.page)

    def full(self):
        return None not in self.page

    def put(self, page, ref, wf):
        i = self.page.index(None)
        self.page[i], self.ref[i], self.wf[i] = page, ref, wf

    def drop(self, i):
        page = self.page[i]
        self.page[i], self.ref[i], self.wf[i] = None, 0, 0
        return page

    def second_chance(self):
        n = len(self.page)
        while True:
            i = self.hand
            self.hand = (i + 1) % n
            if self.page[i] is None:
                continue
            if self.ref[i] == 1:
                self.ref[i] = 0
                continue
            return self.drop(i)

    def write_aware(self):
        n = len(self.page)
        while True:
            for _ in range(n):
                i = self.hand
                self.hand = (i + 1) % n
                if self.page[i] is None:
                    continue
                if self.ref[i] == 1:
                    self.ref[i] = 0
                elif self.wf[i] == 0:
                    return self.drop(i)
            self.wf = [w // 2 for w in self.wf]


def _clock_dwf(trace, dram_pages, nvm_pages):
    dram = _Frames(dram_pages)
    nvm = _Frames(nvm_pages)

    def place_in_dram(page, wf, ev):
        if dram.full():
            victim = dram.write_aware()
            ev.append("MigrateDramToNvm")
            if nvm.full():
                nvm.second_chance()
                ev.append("EvictToDisk")
            nvm.put(victim, 1, 0)
        dram.put(page, 1, wf)

    log = []
    for op, page in trace:
        i = dram.where(page)
        if i >= 0:
            dram.ref[i] = 1
            if op == "W":
                dram.wf[i] += 1
            log.append((f"HitDram({op})",))
            continue
        j = nvm.where(page)
        if j >= 0:
            if op == "R":
                nvm.ref[j] = 1
                log.append(("HitNvm(R)",))
                continue
            # writes are never serviced by NVM
            nvm.drop(j)
            ev = ["HitDram(W)", "MigrateNvmToDram"]
            place_in_dram(page, 1, ev)
            log.append(tuple(ev))
            continue
        if op == "W" or not dram.full():
            ev = ["FaultToDram"]
            place_in_dram(page, 1 if op == "W" else 0, ev)
        else:
            ev = ["FaultToNvm"]
            if nvm.full():
                nvm.second_chance()
                ev.append("EvictToDisk")
            nvm.put(page, 1, 0)
        log.append(tuple(ev))
    return log, list(dram.page), list(nvm.page), []


def oracle_simulate(trace, policy: str, dram_pages: int, nvm_pages: int,
                    readperc: float = 0.2, writeperc: float = 0.4,
                    read_threshold: float = 4, write_threshold: float = 8,
                    reset_on_insert: bool = True) -> OracleResult:
    """Reference run of ``policy`` on a short trace.

    Single-tier baselines use ``dram_pages + nvm_pages`` frames of one kind.
    ``reset_on_insert=False`` applies the positional reset only on NVM hits.
    """
    trace = list(trace)
    if len(trace) > 10**5:
        raise ValueError("oracle traces are limited to 1e5 accesses")
    if policy == "dram_lru":
        out = _lru(trace, dram_pages + nvm_pages, "dram")
    elif policy == "nvm_lru":
        out = _lru(trace, dram_pages + nvm_pages, "nvm")
    elif policy == "two_lru":
        out = _two_lru(trace, dram_pages, nvm_pages, readperc, writeperc,
                       read_threshold, write_threshold, reset_on_insert)
    elif policy == "clock_dwf":
        out = _clock_dwf(trace, dram_pages, nvm_pages)
    else:
        raise ValueError(f"unknown policy {policy!r}")
    log, dram, nvm, rows = out
    counters = dict.fromkeys(COUNTER_NAMES, 0)
    for batch in log:
        counters["n_total"] += 1
        for name in batch:
            counters[_COUNTER_OF[name]] += 1
            if name.startswith("Fault"):
                counters["n_miss"] += 1
    return OracleResult(counters, log, dram, nvm, rows)


def oracle_accumulate_costs(log, params: dict, page_factor: int) -> tuple[float, float]:
    """Charge every logged event its latency and energy; return per-access means.

    ``params`` uses the model's symbol names: T_R_DRAM, T_W_DRAM, T_R_NVM,
    T_W_NVM, T_Disk, Po_R_DRAM, Po_W_DRAM, Po_R_NVM, Po_W_NVM.
    """
    if not log:
        raise ValueError("empty event log: metrics are undefined")
    p = params
    latency = {
        "HitDram(R)": p["T_R_DRAM"], "HitDram(W)": p["T_W_DRAM"],
        "HitNvm(R)": p["T_R_NVM"], "HitNvm(W)": p["T_W_NVM"],
        "FaultToDram": p["T_Disk"], "FaultToNvm": p["T_Disk"],
        "MigrateNvmToDram": page_factor * (p["T_R_NVM"] + p["T_W_DRAM"]),
        "MigrateDramToNvm": page_factor * (p["T_R_DRAM"] + p["T_W_NVM"]),
        "EvictToDisk": 0.0,
    }
    energy = {
        "HitDram(R)": p["Po_R_DRAM"], "HitDram(W)": p["Po_W_DRAM"],
        "HitNvm(R)": p["Po_R_NVM"], "HitNvm(W)": p["Po_W_NVM"],
        "FaultToDram": page_factor * p["Po_W_DRAM"],
        "FaultToNvm": page_factor * p["Po_W_NVM"],
        "MigrateNvmToDram": page_factor * (p["Po_R_NVM"] + p["Po_W_DRAM"]),
        "MigrateDramToNvm": page_factor * (p["Po_R_DRAM"] + p["Po_W_NVM"]),
        "EvictToDisk": 0.0,
    }
    t = e = 0.0
    for batch in log:
        for name in batch:
            t += latency[name]
            e += energy[name]
    return t / len(log), e / len(log)


def naive_lru_misses(pages, capacity: int) -> int:
    """Textbook LRU miss count via recency stacks."""
    stack: list = []
    misses = 0
    for p in pages:
        if p in stack:
            stack.remove(p)
        else:
            misses += 1
            if len(stack) == capacity:
                stack.pop(0)
        stack.append(p)
    return misses


__all__ = [
    "COUNTER_NAMES", "NaiveTierState", "OracleResult", "oracle_simulate",
    "oracle_accumulate_costs", "naive_lru_misses", "region_size",
]
