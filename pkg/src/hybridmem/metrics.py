"""Event counters and the closed-form latency, energy and endurance models.

Probabilities are count ratios over the measured accesses. Latencies are
in ns, energies in nJ.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields
from typing import Iterable

from .config import GB, DeviceParams
from .core import Event


class MetricError(ValueError):
    """A metric is undefined for the given counters (e.g. no requests)."""


class AccountingError(RuntimeError):
    """An access produced an event batch no policy may produce."""


_FIELD_OF = {
    Event.HIT_DRAM_READ: "n_hit_dram_read",
    Event.HIT_DRAM_WRITE: "n_hit_dram_write",
    Event.HIT_NVM_READ: "n_hit_nvm_read",
    Event.HIT_NVM_WRITE: "n_hit_nvm_write",
    Event.FAULT_TO_DRAM: "n_fault_to_dram",
    Event.FAULT_TO_NVM: "n_fault_to_nvm",
    Event.MIGRATE_NVM_TO_DRAM: "n_mig_nvm_to_dram",
    Event.MIGRATE_DRAM_TO_NVM: "n_mig_dram_to_nvm",
    Event.EVICT_TO_DISK: "n_evict_to_disk",
}


@dataclass
class EventCounters:
    n_total: int = 0
    n_hit_dram_read: int = 0
    n_hit_dram_write: int = 0
    n_hit_nvm_read: int = 0
    n_hit_nvm_write: int = 0
    n_miss: int = 0
    n_fault_to_dram: int = 0
    n_fault_to_nvm: int = 0
    n_mig_nvm_to_dram: int = 0
    n_mig_dram_to_nvm: int = 0
    n_evict_to_disk: int = 0

    def accumulate(self, events: Iterable[Event]) -> "EventCounters":
        """Add the events of one access."""
        events = list(events)
        primary = [e for e in events if e.is_primary]
        if len(primary) != 1:
            raise AccountingError(f"expected one hit or fault per access, got {events!r}")
        for e in events:
            name = _FIELD_OF[e]
            setattr(self, name, getattr(self, name) + 1)
        if primary[0] in (Event.FAULT_TO_DRAM, Event.FAULT_TO_NVM):
            self.n_miss += 1
        self.n_total += 1
        return self

    @classmethod
    def from_tally(cls, tally, n_total: int) -> "EventCounters":
        """Build from a per-Event count sequence indexed by ``Event`` value."""
        c = cls(n_total=n_total)
        for e, name in _FIELD_OF.items():
            setattr(c, name, tally[e])
        c.n_miss = c.n_fault_to_dram + c.n_fault_to_nvm
        return c

    def __add__(self, other: "EventCounters") -> "EventCounters":
        return EventCounters(**{f.name: getattr(self, f.name) + getattr(other, f.name)
                                for f in fields(self)})

    def check(self):
        hits = (self.n_hit_dram_read + self.n_hit_dram_write
                + self.n_hit_nvm_read + self.n_hit_nvm_write)
        if hits + self.n_miss != self.n_total:
            raise AccountingError("hits + misses != total")
        if self.n_fault_to_dram + self.n_fault_to_nvm != self.n_miss:
            raise AccountingError("faults != misses")

    def probabilities(self) -> dict[str, float]:
        """The model's probability terms as count ratios."""
        n = self.n_total
        if n <= 0:
            raise MetricError("no requests: metrics are undefined")
        hd = self.n_hit_dram_read + self.n_hit_dram_write
        hn = self.n_hit_nvm_read + self.n_hit_nvm_write

        def ratio(a, b):
            return a / b if b else 0.0

        return {
            "hit_dram": hd / n,
            "hit_nvm": hn / n,
            "r_dram": ratio(self.n_hit_dram_read, hd),
            "w_dram": ratio(self.n_hit_dram_write, hd),
            "r_nvm": ratio(self.n_hit_nvm_read, hn),
            "w_nvm": ratio(self.n_hit_nvm_write, hn),
            "miss": self.n_miss / n,
            "mig_d": self.n_mig_nvm_to_dram / n,
            "mig_n": self.n_mig_dram_to_nvm / n,
            "disk_to_d": ratio(self.n_fault_to_dram, self.n_miss),
            "disk_to_n": ratio(self.n_fault_to_nvm, self.n_miss),
        }

    def as_dict(self) -> dict[str, int]:
        return asdict(self)


@dataclass
class Breakdown:
    """A metric total and its additive components (insertion ordered)."""

    components: dict[str, float] = field(default_factory=dict)

    @property
    def total(self) -> float:
        return sum(self.components.values())

    def __getitem__(self, key):
        return self.components[key]

    def as_dict(self) -> dict[str, float]:
        return {**self.components, "total": self.total}


@dataclass
class SimClock:
    """Busy time of the memory: the sum of per-access service latencies."""

    total_request_ns: float = 0.0

    def advance(self, ns: float):
        if ns < 0:
            raise ValueError("time cannot run backwards")
        self.total_request_ns += ns

    @property
    def elapsed_seconds(self) -> float:
        return self.total_request_ns * 1e-9


def compute_amat(c: EventCounters, dev: DeviceParams, page_factor: int) -> Breakdown:
    p = c.probabilities()
    d, n = dev.dram, dev.nvm
    return Breakdown({
        "hit_dram": p["hit_dram"] * (p["r_dram"] * d.t_read + p["w_dram"] * d.t_write),
        "hit_nvm": p["hit_nvm"] * (p["r_nvm"] * n.t_read + p["w_nvm"] * n.t_write),
        "miss": p["miss"] * dev.t_disk,
        "mig_to_dram": p["mig_d"] * page_factor * (n.t_read + d.t_write),
        "mig_to_nvm": p["mig_n"] * page_factor * (d.t_read + n.t_write),
    })


def compute_appr_dynamic(c: EventCounters, dev: DeviceParams, page_factor: int) -> Breakdown:
    # a fault prices only the page write into memory, not the disk read
    p = c.probabilities()
    d, n = dev.dram, dev.nvm
    return Breakdown({
        "hit_dram": p["hit_dram"] * (p["r_dram"] * d.e_read + p["w_dram"] * d.e_write),
        "hit_nvm": p["hit_nvm"] * (p["r_nvm"] * n.e_read + p["w_nvm"] * n.e_write),
        "fault_to_dram": p["miss"] * p["disk_to_d"] * page_factor * d.e_write,
        "fault_to_nvm": p["miss"] * p["disk_to_n"] * page_factor * n.e_write,
        "mig_to_dram": p["mig_d"] * page_factor * (n.e_read + d.e_write),
        "mig_to_nvm": p["mig_n"] * page_factor * (d.e_read + n.e_write),
    })


def static_watts(dram_pages: int, nvm_pages: int, dev: DeviceParams, page_size: int) -> float:
    return (dram_pages * page_size / GB * dev.dram.static_power
            + nvm_pages * page_size / GB * dev.nvm.static_power)


def compute_static_power(dram_pages: int, nvm_pages: int, dev: DeviceParams, page_size: int,
                         counters: EventCounters, clock: SimClock | None = None,
                         requests_per_second: float | None = None) -> float:
    """Static energy prorated per request, in nJ.

    Elapsed time is the memory busy time from ``clock`` unless a fixed
    ``requests_per_second`` is given.
    """
    n = counters.n_total
    if n <= 0:
        raise MetricError("no requests: static power per request is undefined")
    if requests_per_second is not None:
        seconds = n / requests_per_second
    else:
        seconds = clock.elapsed_seconds if clock is not None else 0.0
    if not seconds > 0:
        raise MetricError("zero elapsed time: static power per request is undefined")
    return static_watts(dram_pages, nvm_pages, dev, page_size) * seconds / n * 1e9


def nvm_write_breakdown(c: EventCounters, page_factor: int) -> Breakdown:
    return Breakdown({
        "requests": c.n_hit_nvm_write,
        "migrations": page_factor * c.n_mig_dram_to_nvm,
        "faults": page_factor * c.n_fault_to_nvm,
    })


def power_breakdown(appr: Breakdown, static_nj: float) -> Breakdown:
    """Total energy per request grouped as static, dynamic, fault and migration."""
    return Breakdown({
        "static": static_nj,
        "dynamic": appr["hit_dram"] + appr["hit_nvm"],
        "fault": appr["fault_to_dram"] + appr["fault_to_nvm"],
        "migration": appr["mig_to_dram"] + appr["mig_to_nvm"],
    })


def event_costs(dev: DeviceParams, page_factor: int) -> tuple[list[float], list[float]]:
    """Per-event (latency ns, energy nJ) tables indexed by ``Event`` value."""
    d, n = dev.dram, dev.nvm
    lat = [0.0] * len(Event)
    nrg = [0.0] * len(Event)
    lat[Event.HIT_DRAM_READ], nrg[Event.HIT_DRAM_READ] = d.t_read, d.e_read
    lat[Event.HIT_DRAM_WRITE], nrg[Event.HIT_DRAM_WRITE] = d.t_write, d.e_write
    lat[Event.HIT_NVM_READ], nrg[Event.HIT_NVM_READ] = n.t_read, n.e_read
    lat[Event.HIT_NVM_WRITE], nrg[Event.HIT_NVM_WRITE] = n.t_write, n.e_write
    lat[Event.FAULT_TO_DRAM], nrg[Event.FAULT_TO_DRAM] = dev.t_disk, page_factor * d.e_write
    lat[Event.FAULT_TO_NVM], nrg[Event.FAULT_TO_NVM] = dev.t_disk, page_factor * n.e_write
    lat[Event.MIGRATE_NVM_TO_DRAM] = page_factor * (n.t_read + d.t_write)
    nrg[Event.MIGRATE_NVM_TO_DRAM] = page_factor * (n.e_read + d.e_write)
    lat[Event.MIGRATE_DRAM_TO_NVM] = page_factor * (d.t_read + n.t_write)
    nrg[Event.MIGRATE_DRAM_TO_NVM] = page_factor * (d.e_read + n.e_write)
    return lat, nrg
