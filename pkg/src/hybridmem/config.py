"""Device characteristics, memory layout sizing and policy parameters.

Configuration files are flat ``key = value`` text with ``#`` comments.
Every key is optional; missing keys take the defaults below.

=====================  =======  ============================================
key                    default  meaning
=====================  =======  ============================================
policy                 two_lru  dram_lru | nvm_lru | clock_dwf | two_lru
dram_read_ns           50       DRAM read latency (ns)
dram_write_ns          50       DRAM write latency (ns)
dram_read_nj           3.2      DRAM read energy per access (nJ)
dram_write_nj          3.2      DRAM write energy per access (nJ)
dram_static_w_per_gb   1        DRAM static power, J/(GB*s)
nvm_read_ns            100      NVM read latency (ns)
nvm_write_ns           350      NVM write latency (ns)
nvm_read_nj            6.4      NVM read energy per access (nJ)
nvm_write_nj           32       NVM write energy per access (nJ)
nvm_static_w_per_gb    0.1      NVM static power, J/(GB*s)
disk_ns                5000000  page fault service time (ns)
page_size              4096     bytes per page
mem_fraction           0.75     memory pages / distinct trace pages
dram_fraction          0.10     DRAM pages / memory pages
page_factor            64       memory accesses needed to move one page
dram_pages             (none)   explicit DRAM size in pages
nvm_pages              (none)   explicit NVM size in pages
readperc               0.2      read-tracked share of the NVM queue top
writeperc              0.4      write-tracked share of the NVM queue top
read_threshold         4        reads above which an NVM page is promoted
write_threshold        8        writes above which an NVM page is promoted
requests_per_second    (none)   fixed request rate for static power
=====================  =======  ============================================

Thresholds accept ``inf`` to disable promotion. One GB is 2**30 bytes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from fractions import Fraction
from pathlib import Path

GB = 2**30
POLICIES = ("dram_lru", "nvm_lru", "clock_dwf", "two_lru")


class ConfigError(ValueError):
    pass


def ceil_frac(frac: float, n: int) -> int:
    """ceil(frac * n) computed on the decimal value of ``frac``.

    Plain float multiplication gives ceil(0.1 * 30) == 4.
    """
    return math.ceil(Fraction(repr(float(frac))) * n)


@dataclass(frozen=True)
class MemoryTech:
    t_read: float        # ns
    t_write: float       # ns
    e_read: float        # nJ
    e_write: float       # nJ
    static_power: float  # J/(GB*s)


@dataclass(frozen=True)
class DeviceParams:
    dram: MemoryTech = MemoryTech(50.0, 50.0, 3.2, 3.2, 1.0)
    nvm: MemoryTech = MemoryTech(100.0, 350.0, 6.4, 32.0, 0.1)
    t_disk: float = 5e6

    def validate(self):
        for name in ("dram", "nvm"):
            tech = getattr(self, name)
            for f in fields(tech):
                v = getattr(tech, f.name)
                if f.name == "static_power":
                    if not v >= 0:
                        raise ConfigError(f"{name}_{f.name} must be >= 0")
                elif not v > 0:
                    raise ConfigError(f"{name}_{f.name} must be > 0")
        slowest = max(self.dram.t_read, self.dram.t_write, self.nvm.t_read, self.nvm.t_write)
        if not self.t_disk >= slowest:
            raise ConfigError("disk_ns must be >= every memory latency")


@dataclass(frozen=True)
class LayoutConfig:
    page_size: int = 4096
    mem_fraction: float = 0.75
    dram_fraction: float = 0.10
    page_factor: int = 64
    dram_pages: int | None = None
    nvm_pages: int | None = None

    def validate(self):
        if self.page_size < 1:
            raise ConfigError("page_size must be >= 1")
        if not 0 < self.mem_fraction <= 1:
            raise ConfigError("mem_fraction must be in (0, 1]")
        if not 0 < self.dram_fraction < 1:
            raise ConfigError("dram_fraction must be in (0, 1)")
        if self.page_factor < 1:
            raise ConfigError("page_factor must be >= 1")
        for key in ("dram_pages", "nvm_pages"):
            v = getattr(self, key)
            if v is not None and v < 1:
                raise ConfigError(f"{key} must be >= 1")


@dataclass(frozen=True)
class PolicyParams:
    readperc: float = 0.2
    writeperc: float = 0.4
    read_threshold: float = 4
    write_threshold: float = 8

    def validate(self):
        if not 0 < self.readperc <= self.writeperc <= 1:
            raise ConfigError("need 0 < readperc <= writeperc <= 1")
        for key in ("read_threshold", "write_threshold"):
            if not getattr(self, key) >= 1:
                raise ConfigError(f"{key} must be >= 1")


@dataclass(frozen=True)
class Capacities:
    dram_pages: int
    nvm_pages: int

    @property
    def total(self) -> int:
        return self.dram_pages + self.nvm_pages


@dataclass(frozen=True)
class SimConfig:
    policy: str = "two_lru"
    device: DeviceParams = field(default_factory=DeviceParams)
    layout: LayoutConfig = field(default_factory=LayoutConfig)
    params: PolicyParams = field(default_factory=PolicyParams)
    requests_per_second: float | None = None

    def validate(self) -> "SimConfig":
        if self.policy not in POLICIES:
            raise ConfigError(f"policy: unknown policy {self.policy!r}")
        self.device.validate()
        self.layout.validate()
        self.params.validate()
        if self.requests_per_second is not None and not self.requests_per_second > 0:
            raise ConfigError("requests_per_second must be > 0")
        return self

    def with_overrides(self, overrides: dict) -> "SimConfig":
        return from_mapping(overrides, base=self)


def derive_capacities(distinct_pages: int, layout: LayoutConfig) -> Capacities:
    """Split memory into DRAM and NVM pages for a trace footprint."""
    if distinct_pages < 1:
        raise ConfigError("distinct_pages must be >= 1")
    total = max(2, ceil_frac(layout.mem_fraction, distinct_pages))
    if layout.dram_pages is not None and layout.nvm_pages is not None:
        dram, nvm = layout.dram_pages, layout.nvm_pages
    elif layout.dram_pages is not None:
        dram = layout.dram_pages
        nvm = total - dram
    else:
        # both tiers must keep at least one page
        dram = min(total - 1, max(1, ceil_frac(layout.dram_fraction, total)))
        nvm = total - dram if layout.nvm_pages is None else layout.nvm_pages
    if dram < 1 or nvm < 1:
        raise ConfigError(f"both tiers need >= 1 page (dram={dram}, nvm={nvm})")
    return Capacities(dram, nvm)


# flat key -> (section, attribute, parser)
def _num(text: str) -> float:
    return float(text)


def _int(text: str) -> int:
    v = float(text)
    if not v.is_integer():
        raise ValueError(f"{text!r} is not an integer")
    return int(v)


def _threshold(text: str) -> float:
    v = float(text)
    return int(v) if v.is_integer() else v


def _opt_int(text: str) -> int | None:
    return None if text.lower() in ("", "none") else _int(text)


def _opt_num(text: str) -> float | None:
    return None if text.lower() in ("", "none") else float(text)


_KEYS: dict[str, tuple[str, str, object]] = {"policy": ("", "policy", str)}
for _tier in ("dram", "nvm"):
    for _key, _attr in (("read_ns", "t_read"), ("write_ns", "t_write"),
                        ("read_nj", "e_read"), ("write_nj", "e_write"),
                        ("static_w_per_gb", "static_power")):
        _KEYS[f"{_tier}_{_key}"] = (f"device.{_tier}", _attr, _num)
_KEYS["disk_ns"] = ("device", "t_disk", _num)
_KEYS.update({
    "page_size": ("layout", "page_size", _int),
    "mem_fraction": ("layout", "mem_fraction", _num),
    "dram_fraction": ("layout", "dram_fraction", _num),
    "page_factor": ("layout", "page_factor", _int),
    "dram_pages": ("layout", "dram_pages", _opt_int),
    "nvm_pages": ("layout", "nvm_pages", _opt_int),
    "readperc": ("params", "readperc", _num),
    "writeperc": ("params", "writeperc", _num),
    "read_threshold": ("params", "read_threshold", _threshold),
    "write_threshold": ("params", "write_threshold", _threshold),
    "requests_per_second": ("", "requests_per_second", _opt_num),
})
CONFIG_KEYS = tuple(_KEYS)


def _get(cfg, section: str):
    obj = cfg
    for part in filter(None, section.split(".")):
        obj = getattr(obj, part)
    return obj


def _set(cfg, section: str, attr: str, value):
    if not section:
        return replace(cfg, **{attr: value})
    head, _, rest = section.partition(".")
    return replace(cfg, **{head: _set(getattr(cfg, head), rest, attr, value)})


def from_mapping(values: dict, base: SimConfig | None = None) -> SimConfig:
    """Build a validated config from flat keys; values may be text or numbers."""
    cfg = base or SimConfig()
    for key, raw in values.items():
        if key not in _KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        section, attr, conv = _KEYS[key]
        try:
            value = conv(raw.strip()) if isinstance(raw, str) else (
                raw if conv is str or raw is None else conv(str(raw)))
        except ValueError as exc:
            raise ConfigError(f"{key}: {exc}") from None
        cfg = _set(cfg, section, attr, value)
    try:
        return cfg.validate()
    except ConfigError as exc:
        raise ConfigError(f"invalid configuration: {exc}") from None


def parse_kv(text: str) -> dict[str, str]:
    """Parse flat ``key = value`` text into an ordered dict of strings."""
    out: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key = key.strip()
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value.strip()
    return out


def parse_config(text: str) -> SimConfig:
    return from_mapping(parse_kv(text))


def load_config(path) -> SimConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


def config_items(cfg: SimConfig) -> dict[str, object]:
    """Flat key -> value view of a resolved config (the report echo)."""
    return {key: getattr(_get(cfg, section), attr)
            for key, (section, attr, _) in _KEYS.items()}


def _fmt(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, float):
        return "inf" if math.isinf(value) else repr(value)
    return str(value)


def dump_config(cfg: SimConfig) -> str:
    return "".join(f"{k} = {_fmt(v)}\n" for k, v in config_items(cfg).items())
