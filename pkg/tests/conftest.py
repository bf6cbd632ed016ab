import random

import pytest

from hybridmem.core import Event
from hybridmem.trace import MemoryAccess, Op

EVENT_NAMES = {
    Event.HIT_DRAM_READ: "HitDram(R)",
    Event.HIT_DRAM_WRITE: "HitDram(W)",
    Event.HIT_NVM_READ: "HitNvm(R)",
    Event.HIT_NVM_WRITE: "HitNvm(W)",
    Event.FAULT_TO_DRAM: "FaultToDram",
    Event.FAULT_TO_NVM: "FaultToNvm",
    Event.MIGRATE_NVM_TO_DRAM: "MigrateNvmToDram",
    Event.MIGRATE_DRAM_TO_NVM: "MigrateDramToNvm",
    Event.EVICT_TO_DISK: "EvictToDisk",
}


def acc(op: str, page: int, page_size: int = 4096) -> MemoryAccess:
    return MemoryAccess(Op(op), page * page_size, page)


def accesses(spec: str):
    """'RA WB RA' -> accesses; page ids are the letters' ordinals."""
    return [acc(tok[0], ord(tok[1])) for tok in spec.split()]


def run_names(policy, trace):
    return [tuple(EVENT_NAMES[e] for e in policy.on_access(a)) for a in trace]


def random_trace(rng: random.Random, length: int, n_pages: int, write_ratio: float = 0.5):
    """(op, page) pairs with a skewed page distribution."""
    out = []
    for _ in range(length):
        page = min(int(rng.expovariate(3.0 / n_pages)), n_pages - 1)
        out.append(("W" if rng.random() < write_ratio else "R", page))
    return out


def to_accesses(pairs):
    return [acc(op, page) for op, page in pairs]


# acceptance summary --------------------------------------------------------

ACCEPTANCE = {}


@pytest.fixture
def criterion(request):
    """Record a pass/fail line for an acceptance criterion."""

    class _Rec:
        def __init__(self):
            self.key = None

        def __call__(self, key, text):
            self.key = key
            ACCEPTANCE[key] = ("FAIL", text)
            return self

        def ok(self, detail=""):
            ACCEPTANCE[self.key] = ("PASS", ACCEPTANCE[self.key][1] + (f" [{detail}]" if detail else ""))

    return _Rec()


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        status, text = ACCEPTANCE[key]
        terminalreporter.write_line(f"{status}  {key}: {text}")
