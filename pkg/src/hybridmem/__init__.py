"""Trace-driven simulator for hybrid DRAM-NVM main memory."""

from .config import (Capacities, DeviceParams, LayoutConfig, MemoryTech, PolicyParams,
                     SimConfig, derive_capacities, load_config)
from .core import Event, LruQueue, Policy
from .experiment import RunReport, emit_report, run_experiment, simulate
from .metrics import (EventCounters, SimClock, compute_amat, compute_appr_dynamic,
                      compute_static_power, nvm_write_breakdown)
from .policies import ClockDwf, ClockState, SingleTierLru, TwoLru, make_policy
from .trace import MemoryAccess, Op, SyntheticSpec, generate_synthetic, parse_trace_line, stream_trace

__version__ = "0.1.0"
