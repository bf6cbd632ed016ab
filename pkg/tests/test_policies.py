import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from conftest import accesses, random_trace, run_names, to_accesses
from hybridmem.config import Capacities, PolicyParams, SimConfig
from hybridmem.core import Event
from hybridmem.experiment import run_policy
from hybridmem.metrics import nvm_write_breakdown
from hybridmem.policies import (ClockDwf, ClockState, SingleTierLru, TwoLru,
                                clock_dwf_select_dram_victim, make_policy)

POLICY_NAMES = ("dram_lru", "nvm_lru", "clock_dwf", "two_lru")


# single-tier LRU ----------------------------------------------------------

def test_lru_step_through():
    p = SingleTierLru(2)
    names = run_names(p, accesses("RA RB RA RC RB"))
    assert names == [("FaultToDram",), ("FaultToDram",), ("HitDram(R)",),
                     ("FaultToDram", "EvictToDisk"), ("FaultToDram", "EvictToDisk")]
    assert sum(n[0].startswith("Hit") for n in names) == 1
    assert list(p.queue) == [ord("B"), ord("C")]


def test_lru_repeated_page():
    names = run_names(SingleTierLru(3, "nvm"), accesses("WA RA WA RA"))
    assert names == [("FaultToNvm",), ("HitNvm(R)",), ("HitNvm(W)",), ("HitNvm(R)",)]


def test_nvm_only_read_trace_writes_come_from_faults():
    rng = random.Random(4)
    trace = to_accesses(random_trace(rng, 2000, 50, write_ratio=0.0))
    cfg = SimConfig(policy="nvm_lru")
    res = run_policy(trace, SingleTierLru(20, "nvm"), cfg)
    w = nvm_write_breakdown(res.counters, 64)
    assert w["requests"] == 0 and w["migrations"] == 0
    assert w.total == res.counters.n_fault_to_nvm * 64 > 0


def test_bad_tier():
    with pytest.raises(ValueError):
        SingleTierLru(4, "flash")


# CLOCK-DWF ----------------------------------------------------------------

def test_clock_dwf_first_read_fills_dram():
    assert run_names(ClockDwf(2, 2), accesses("RX")) == [("FaultToDram",)]


def test_clock_dwf_nvm_write_hit_migrates():
    p = ClockDwf(1, 2)
    names = run_names(p, accesses("RX RY WY"))
    assert names[1] == ("FaultToNvm",)
    assert names[2] == ("HitDram(W)", "MigrateNvmToDram", "MigrateDramToNvm")
    dram, nvm = p.resident()
    assert dram == [ord("Y")] and ord("X") in nvm


def test_clock_dwf_write_fault_goes_to_dram():
    names = run_names(ClockDwf(1, 1), accesses("RA WB WC"))
    assert names == [("FaultToDram",), ("FaultToDram", "MigrateDramToNvm"),
                     ("FaultToDram", "MigrateDramToNvm", "EvictToDisk")]


def test_clock_dwf_read_only_never_promotes():
    rng = random.Random(9)
    p = ClockDwf(4, 12)
    trace = to_accesses(random_trace(rng, 5000, 40, write_ratio=0.0))
    for a in trace:
        assert Event.MIGRATE_NVM_TO_DRAM not in p.on_access(a)


def _clock(ref, wf):
    s = ClockState(len(ref))
    for i, (r, w) in enumerate(zip(ref, wf)):
        s.insert(f"p{i}", r, w)
    return s


def test_victim_prefers_unwritten():
    s = _clock([0, 0, 0], [0, 3, 1])
    assert clock_dwf_select_dram_victim(s) == "p0"
    assert s.hand == 1


def test_victim_skips_referenced():
    s = _clock([1, 0], [0, 0])
    assert clock_dwf_select_dram_victim(s) == "p1"
    assert s.ref[0] == 0


def test_victim_after_halving():
    s = _clock([0, 0], [2, 1])
    assert clock_dwf_select_dram_victim(s) == "p1"
    assert s.write_freq[0] == 1


def test_new_page_takes_vacated_frame():
    s = _clock([0, 0, 0], [0, 0, 0])
    s.hand = 1
    assert s.select_victim() == "p1"
    assert s.insert("q") == 1 and s.hand == 2


def test_clock_empty():
    from hybridmem.core import QueueError
    with pytest.raises(QueueError):
        ClockState(2).select_victim()


# two-LRU ------------------------------------------------------------------

def test_two_lru_read_promotion_on_third_read():
    p = TwoLru(1, 4, PolicyParams(readperc=0.5, read_threshold=2))
    names = run_names(p, accesses("RA RB RA RA RA"))
    assert names[1] == ("FaultToDram", "MigrateDramToNvm")
    assert names[2:4] == [("HitNvm(R)",), ("HitNvm(R)",)]
    assert names[4] == ("HitNvm(R)", "MigrateNvmToDram", "MigrateDramToNvm")
    assert p.resident() == ([ord("A")], [ord("B")])


def test_two_lru_write_below_boundary_restarts_counter():
    p = TwoLru(1, 10, PolicyParams(writeperc=0.1, write_threshold=1))
    run_names(p, accesses("RA RB RC"))  # NVM: B, A
    assert p.nvm.rank(ord("A")) == 1
    assert run_names(p, accesses("WA")) == [("HitNvm(W)",)]
    assert p.nvm.entry(ord("A")).writes == 1


def test_two_lru_write_promotion_serviced_at_dram():
    p = TwoLru(1, 4, PolicyParams(writeperc=0.5, write_threshold=1))
    names = run_names(p, accesses("RA RB WA WA"))
    assert names[2] == ("HitNvm(W)",)
    assert names[3] == ("HitDram(W)", "MigrateNvmToDram", "MigrateDramToNvm")


def test_two_lru_miss_with_room():
    p = TwoLru(3, 3)
    assert run_names(p, accesses("RA WB")) == [("FaultToDram",), ("FaultToDram",)]


def test_two_lru_overflow_evicts():
    p = TwoLru(1, 1)
    assert run_names(p, accesses("RA RB RC"))[2] == (
        "FaultToDram", "MigrateDramToNvm", "EvictToDisk")


# properties ---------------------------------------------------------------

def exclusive_hierarchy(trace, dram_pages, nvm_pages):
    """Faults fill DRAM; DRAM LRU victims go to the NVM front; NVM hits stay put."""
    dram, nvm, log = [], [], []
    for op, page in trace:
        if page in dram:
            dram.remove(page)
            dram.insert(0, page)
            log.append(("HitDram(R)" if op == "R" else "HitDram(W)",))
            continue
        if page in nvm:
            nvm.remove(page)
            nvm.insert(0, page)
            log.append(("HitNvm(R)" if op == "R" else "HitNvm(W)",))
            continue
        ev = ["FaultToDram"]
        if len(dram) == dram_pages:
            ev.append("MigrateDramToNvm")
            if len(nvm) == nvm_pages:
                nvm.pop()
                ev.append("EvictToDisk")
            nvm.insert(0, dram.pop())
        dram.insert(0, page)
        log.append(tuple(ev))
    return log


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32), st.integers(1, 6), st.integers(1, 12), st.integers(1, 400))
def test_infinite_thresholds_are_exclusive_lru(seed, d, n, length):
    trace = random_trace(random.Random(seed), length, 3 * (d + n))
    p = TwoLru(d, n, PolicyParams(read_threshold=math.inf, write_threshold=math.inf))
    assert run_names(p, to_accesses(trace)) == exclusive_hierarchy(trace, d, n)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(POLICY_NAMES), st.integers(0, 2**32), st.integers(1, 5),
       st.integers(1, 10), st.integers(1, 300))
def test_occupancy_and_primary_event(name, seed, d, n, length):
    p = make_policy(name, Capacities(d, n), PolicyParams(read_threshold=1, write_threshold=1))
    cap = d + n
    for a in to_accesses(random_trace(random.Random(seed), length, 2 * cap)):
        ev = p.on_access(a)
        assert ev[0].is_primary and not any(e.is_primary for e in ev[1:])
        # a demotion pairs with a DRAM fill; an eviction needs something entering NVM
        if Event.EVICT_TO_DISK in ev:
            assert ev[-1] is Event.EVICT_TO_DISK
        dram, nvm = p.occupancy()
        if name in ("dram_lru", "nvm_lru"):
            assert dram + nvm <= cap
        else:
            assert dram <= d and nvm <= n
        rd, rn = p.resident()
        rd = [x for x in rd if x is not None]
        rn = [x for x in rn if x is not None]
        assert not set(rd) & set(rn)
        assert a.page_id in rd + rn


@pytest.mark.parametrize("name", POLICY_NAMES)
def test_footprint_within_memory_gives_compulsory_misses(name):
    rng = random.Random(17)
    trace = to_accesses(random_trace(rng, 3000, 30))
    distinct = len({a.page_id for a in trace})
    p = make_policy(name, Capacities(8, 22))
    misses = sum(p.on_access(a)[0] in (Event.FAULT_TO_DRAM, Event.FAULT_TO_NVM) for a in trace)
    assert misses == distinct


def test_two_lru_demotions_pair_with_dram_fills():
    rng = random.Random(23)
    p = TwoLru(3, 9, PolicyParams(read_threshold=1, write_threshold=2))
    d2n = fills = 0
    for a in to_accesses(random_trace(rng, 5000, 40)):
        ev = p.on_access(a)
        d2n += ev.count(Event.MIGRATE_DRAM_TO_NVM)
        fills += ev.count(Event.FAULT_TO_DRAM) + ev.count(Event.MIGRATE_NVM_TO_DRAM)
    # every fill beyond the first dram_pages pushes exactly one page down
    assert d2n == fills - 3


@pytest.mark.parametrize("name", POLICY_NAMES)
def test_deterministic_and_reset(name):
    trace = to_accesses(random_trace(random.Random(5), 1500, 40))
    p = make_policy(name, Capacities(4, 12))
    first = [p.on_access(a) for a in trace]
    p.reset()
    assert p.occupancy() == (0, 0)
    assert [p.on_access(a) for a in trace] == first
    q = make_policy(name, Capacities(4, 12))
    assert [q.on_access(a) for a in trace] == first


def test_make_policy_sizes():
    caps = Capacities(3, 7)
    assert make_policy("dram_lru", caps).capacity == 10
    assert make_policy("nvm_lru", caps).describe()["nvm_pages"] == 10
    with pytest.raises(ValueError):
        make_policy("fifo", caps)
