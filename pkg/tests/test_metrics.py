import random

import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_trace, to_accesses
from hybridmem.config import GB, Capacities, DeviceParams, PolicyParams, SimConfig
from hybridmem.core import Event
from hybridmem.experiment import run_policy
from hybridmem.metrics import (AccountingError, EventCounters, MetricError, SimClock,
                               compute_amat, compute_appr_dynamic, compute_static_power,
                               event_costs, nvm_write_breakdown, power_breakdown)
from hybridmem.policies import make_policy

DEV = DeviceParams()
PAGE = 4096


def counters(**kw):
    c = EventCounters(**kw)
    c.n_miss = c.n_fault_to_dram + c.n_fault_to_nvm
    return c


def test_amat_all_dram_reads():
    assert compute_amat(counters(n_total=7, n_hit_dram_read=7), DEV, 64).total == 50


def test_amat_half_dram_read_half_nvm_write():
    b = compute_amat(counters(n_total=10, n_hit_dram_read=5, n_hit_nvm_write=5), DEV, 64)
    assert b.total == pytest.approx(200, rel=1e-12)
    assert b["hit_dram"] == 25 and b["hit_nvm"] == 175


def test_amat_all_misses():
    b = compute_amat(counters(n_total=3, n_fault_to_nvm=3), DEV, 64)
    assert b.total == 5e6


def test_amat_migration_terms():
    c = counters(n_total=2, n_hit_dram_write=2, n_mig_nvm_to_dram=1, n_mig_dram_to_nvm=2)
    b = compute_amat(c, DEV, 64)
    assert b["mig_to_dram"] == pytest.approx(0.5 * 64 * (100 + 50))
    assert b["mig_to_nvm"] == pytest.approx(1.0 * 64 * (50 + 350))


def test_appr_nvm_write_hits():
    assert compute_appr_dynamic(counters(n_total=4, n_hit_nvm_write=4), DEV, 64).total == 32


def test_appr_faults_to_dram():
    b = compute_appr_dynamic(counters(n_total=9, n_fault_to_dram=9), DEV, 64)
    assert b.total == pytest.approx(204.8, rel=1e-12)
    assert b["fault_to_nvm"] == 0


def test_appr_migration_adds():
    base = counters(n_total=5, n_hit_dram_read=5)
    mig = counters(n_total=5, n_hit_dram_read=5, n_mig_nvm_to_dram=5)
    diff = (compute_appr_dynamic(mig, DEV, 64).total - compute_appr_dynamic(base, DEV, 64).total)
    assert diff == pytest.approx(614.4, rel=1e-12)


def test_zero_requests_undefined():
    for fn in (compute_amat, compute_appr_dynamic):
        with pytest.raises(MetricError):
            fn(EventCounters(), DEV, 64)


def test_static_one_gb_dram():
    pages = GB // PAGE
    c = counters(n_total=10**9, n_hit_dram_read=10**9)
    assert compute_static_power(pages, 0, DEV, PAGE, c, SimClock(1e9)) == pytest.approx(1.0)
    assert compute_static_power(0, pages, DEV, PAGE, c, SimClock(1e9)) == pytest.approx(0.1)


def test_static_rate_doubling_halves():
    pages = GB // PAGE
    c = counters(n_total=10**6, n_hit_dram_read=10**6)
    slow = compute_static_power(pages, pages, DEV, PAGE, c, requests_per_second=1e6)
    fast = compute_static_power(pages, pages, DEV, PAGE, c, requests_per_second=2e6)
    assert fast == pytest.approx(slow / 2, rel=1e-12)


def test_static_busy_time_base_is_watts_times_amat():
    c = counters(n_total=4, n_hit_dram_read=2, n_hit_nvm_write=1, n_fault_to_dram=1)
    lat, _ = event_costs(DEV, 64)
    busy = 2 * lat[Event.HIT_DRAM_READ] + lat[Event.HIT_NVM_WRITE] + lat[Event.FAULT_TO_DRAM]
    watts = 1.0 + 0.5 * 0.1
    got = compute_static_power(GB // PAGE, GB // PAGE // 2, DEV, PAGE, c, SimClock(busy))
    assert got == pytest.approx(watts * compute_amat(c, DEV, 64).total, rel=1e-12)


def test_static_zero_elapsed():
    c = counters(n_total=1, n_hit_dram_read=1)
    with pytest.raises(MetricError):
        compute_static_power(1, 1, DEV, PAGE, c, SimClock(0.0))


def test_clock_never_runs_backwards():
    clk = SimClock()
    clk.advance(5)
    with pytest.raises(ValueError):
        clk.advance(-1)
    assert clk.total_request_ns == 5


def test_nvm_write_breakdown():
    b = nvm_write_breakdown(counters(n_total=1, n_hit_nvm_write=3, n_mig_dram_to_nvm=10,
                                     n_fault_to_nvm=2), 64)
    assert b["migrations"] == 640
    assert b.as_dict() == {"requests": 3, "migrations": 640, "faults": 128, "total": 771}


def test_accumulate_hit():
    c = EventCounters().accumulate([Event.HIT_DRAM_READ])
    assert (c.n_hit_dram_read, c.n_total) == (1, 1)


def test_accumulate_fault_batch():
    c = EventCounters().accumulate([Event.FAULT_TO_DRAM, Event.MIGRATE_DRAM_TO_NVM,
                                    Event.EVICT_TO_DISK])
    assert (c.n_miss, c.n_fault_to_dram, c.n_mig_dram_to_nvm, c.n_evict_to_disk) == (1, 1, 1, 1)
    c.check()


@pytest.mark.parametrize("batch", [[Event.HIT_DRAM_READ, Event.HIT_NVM_READ],
                                   [Event.MIGRATE_NVM_TO_DRAM], []])
def test_accumulate_rejects_bad_batches(batch):
    with pytest.raises(AccountingError):
        EventCounters().accumulate(batch)


def test_check_detects_inconsistency():
    with pytest.raises(AccountingError):
        EventCounters(n_total=2, n_hit_dram_read=1).check()


def test_power_breakdown_groups():
    appr = compute_appr_dynamic(counters(n_total=2, n_hit_nvm_read=1, n_fault_to_nvm=1,
                                         n_mig_dram_to_nvm=1), DEV, 64)
    p = power_breakdown(appr, 3.0)
    assert p.total == pytest.approx(appr.total + 3.0)
    assert p["static"] == 3.0


def _counter_strategy():
    @st.composite
    def build(draw):
        parts = draw(st.lists(st.integers(0, 50), min_size=6, max_size=6))
        if sum(parts) == 0:
            parts[0] = 1
        hdr, hdw, hnr, hnw, fd, fn = parts
        return counters(n_total=sum(parts), n_hit_dram_read=hdr, n_hit_dram_write=hdw,
                        n_hit_nvm_read=hnr, n_hit_nvm_write=hnw, n_fault_to_dram=fd,
                        n_fault_to_nvm=fn, n_mig_nvm_to_dram=draw(st.integers(0, 40)),
                        n_mig_dram_to_nvm=draw(st.integers(0, 40)))
    return build()


@given(_counter_strategy(), st.integers(1, 5))
def test_scale_invariance(c, k):
    big = c
    for _ in range(k):
        big = big + c
    for fn in (compute_amat, compute_appr_dynamic):
        assert fn(big, DEV, 64).total == pytest.approx(fn(c, DEV, 64).total, rel=1e-12)


@given(_counter_strategy(), st.sampled_from(["n_mig_nvm_to_dram", "n_mig_dram_to_nvm"]))
def test_adding_migration_never_lowers_cost(c, field):
    more = counters(**{**c.as_dict(), field: getattr(c, field) + 1})
    for fn in (compute_amat, compute_appr_dynamic):
        assert fn(more, DEV, 64).total >= fn(c, DEV, 64).total
        assert all(v >= 0 for v in fn(more, DEV, 64).components.values())


@given(_counter_strategy(), _counter_strategy())
def test_merge_is_commutative_and_consistent(a, b):
    assert a + b == b + a
    (a + b).check()


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(["dram_lru", "nvm_lru", "clock_dwf", "two_lru"]),
       st.integers(0, 2**32), st.integers(1, 800))
def test_per_event_sum_equals_closed_form(name, seed, length):
    trace = to_accesses(random_trace(random.Random(seed), length, 60))
    cfg = SimConfig(policy=name)
    policy = make_policy(name, Capacities(3, 15), PolicyParams(read_threshold=1,
                                                               write_threshold=2))
    res = run_policy(trace, policy, cfg, keep_events=True)
    lat, nrg = event_costs(cfg.device, 64)
    slow = EventCounters()
    t = e = 0.0
    for batch in res.events:
        slow.accumulate(batch)
        t += sum(lat[x] for x in batch)
        e += sum(nrg[x] for x in batch)
    assert slow == res.counters
    n = slow.n_total
    assert compute_amat(slow, cfg.device, 64).total == pytest.approx(t / n, rel=1e-9)
    assert compute_appr_dynamic(slow, cfg.device, 64).total == pytest.approx(e / n, rel=1e-9)
    assert res.clock.total_request_ns == pytest.approx(t, rel=1e-9)
