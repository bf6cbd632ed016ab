"""Run policies over traces, build reports and normalized comparisons.

CSV columns (reports and comparisons share them)::

    run_id, policy, trace, metric, component, value, normalized_to, normalized_value

``metric`` is one of ``amat_ns``, ``appr_nj``, ``static_nj_per_req``,
``power_nj`` (static + dynamic energy per request) or ``nvm_writes``; every
metric has a ``total`` component. Numbers are rounded to 6 significant
digits. In comparison rows, ``normalized_value`` is the component divided
by the baseline run's total for the same metric.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable

from .config import Capacities, SimConfig, config_items, derive_capacities, load_config
from .core import Event, Policy
from .metrics import (Breakdown, EventCounters, SimClock, compute_amat, compute_appr_dynamic,
                      compute_static_power, event_costs, nvm_write_breakdown, power_breakdown)
from .policies import make_policy
from .trace import MemoryAccess, SyntheticSpec, TraceStream, generate_synthetic

log = logging.getLogger(__name__)

CSV_COLUMNS = ("run_id", "policy", "trace", "metric", "component", "value",
               "normalized_to", "normalized_value")
METRICS = ("amat_ns", "appr_nj", "static_nj_per_req", "power_nj", "nvm_writes")
# (metric, baseline kind) pairs in comparison tables
NORMALIZATIONS = (("power_nj", "dram_only"), ("amat_ns", "dram_only"),
                  ("amat_ns", "clock_dwf"), ("nvm_writes", "nvm_only"))
BASELINE_KINDS = ("dram_only", "nvm_only", "clock_dwf")

POLICY_NOTES = {
    "dram_lru": "single-tier DRAM LRU holding dram_pages + nvm_pages frames",
    "nvm_lru": "single-tier NVM LRU holding dram_pages + nvm_pages frames",
    "clock_dwf": "NVM write hits migrate the page to DRAM; the request is serviced at DRAM",
    "two_lru": "faults fill DRAM; a promoting write is serviced at DRAM, "
               "a promoting read from NVM",
}


class ExperimentError(ValueError):
    pass


def r6(x: float) -> float:
    """Round to 6 significant digits for stable output."""
    if isinstance(x, int):
        return x
    if math.isnan(x) or math.isinf(x):
        return x
    return float(f"{x:.6g}")


@dataclass
class RunReport:
    run_id: str
    policy: str
    trace: str
    config: dict
    capacities: dict
    counters: EventCounters
    amat: Breakdown
    appr: Breakdown
    static_nj_per_req: float
    power: Breakdown
    nvm_writes: Breakdown
    busy_ns: float
    warmup_accesses: int = 0
    notes: list = field(default_factory=list)
    lifetime_ratio: float | None = None

    def metric(self, name: str) -> Breakdown:
        if name == "static_nj_per_req":
            return Breakdown({"static": self.static_nj_per_req})
        return {"amat_ns": self.amat, "appr_nj": self.appr, "power_nj": self.power,
                "nvm_writes": self.nvm_writes}[name]

    def to_dict(self) -> dict:
        def bd(b: Breakdown):
            return {k: r6(v) for k, v in b.as_dict().items()}

        return {
            "run_id": self.run_id,
            "policy": self.policy,
            "trace": self.trace,
            "config": {k: _json_value(v) for k, v in self.config.items()},
            "capacities": self.capacities,
            "counters": self.counters.as_dict(),
            "amat_ns": bd(self.amat),
            "appr_nj": bd(self.appr),
            "static_nj_per_req": r6(self.static_nj_per_req),
            "power_nj": bd(self.power),
            "nvm_writes": bd(self.nvm_writes),
            "busy_ns": r6(self.busy_ns),
            "warmup_accesses": self.warmup_accesses,
            "notes": list(self.notes),
            "lifetime_ratio": None if self.lifetime_ratio is None else _json_value(
                r6(self.lifetime_ratio)),
        }


def _json_value(v):
    if isinstance(v, float) and math.isinf(v):
        return "inf"
    return v


@dataclass
class SimResult:
    counters: EventCounters
    clock: SimClock
    events: list | None = None


def run_policy(accesses: Iterable[MemoryAccess], policy: Policy, cfg: SimConfig,
               warmup: int = 0, keep_events: bool = False) -> SimResult:
    """Drive ``policy`` over ``accesses``; the first ``warmup`` are not measured."""
    lat, _ = event_costs(cfg.device, cfg.layout.page_factor)
    tally = [0] * len(Event)
    busy = 0.0
    n = 0
    kept = [] if keep_events else None
    on_access = policy.on_access
    primary_max = Event.FAULT_TO_NVM
    for k, acc in enumerate(accesses):
        events = on_access(acc)
        if events[0] > primary_max or (
                len(events) > 1 and min(events[1:]) <= primary_max):
            raise RuntimeError(f"policy {policy.name} emitted {events!r}")
        if kept is not None:
            kept.append(events)
        if k < warmup:
            continue
        n += 1
        for e in events:
            tally[e] += 1
            busy += lat[e]
    counters = EventCounters.from_tally(tally, n)
    counters.check()
    return SimResult(counters, SimClock(busy), kept)


def build_report(run_id: str, trace: str, cfg: SimConfig, policy: Policy,
                 result: SimResult, warmup: int = 0) -> RunReport:
    c = result.counters
    pf = cfg.layout.page_factor
    amat = compute_amat(c, cfg.device, pf)
    appr = compute_appr_dynamic(c, cfg.device, pf)
    static = compute_static_power(policy.dram_pages, policy.nvm_pages, cfg.device,
                                  cfg.layout.page_size, c, result.clock,
                                  cfg.requests_per_second)
    return RunReport(
        run_id=run_id, policy=policy.name, trace=trace,
        config=config_items(replace(cfg, policy=policy.name)),
        capacities={"dram_pages": policy.dram_pages, "nvm_pages": policy.nvm_pages},
        counters=c, amat=amat, appr=appr, static_nj_per_req=static,
        power=power_breakdown(appr, static), nvm_writes=nvm_write_breakdown(c, pf),
        busy_ns=result.clock.total_request_ns, warmup_accesses=warmup,
        notes=[POLICY_NOTES[policy.name]],
    )


def simulate(accesses, cfg: SimConfig, caps: Capacities, run_id: str = "run",
             trace: str = "", warmup: int = 0) -> RunReport:
    """One policy (``cfg.policy``) over an in-memory or re-iterable trace."""
    policy = make_policy(cfg.policy, caps, cfg.params)
    result = run_policy(accesses, policy, cfg, warmup)
    return build_report(run_id, trace, cfg, policy, result, warmup)


# experiment plans ---------------------------------------------------------

@dataclass(frozen=True)
class TraceSource:
    file: str | None = None
    synthetic: SyntheticSpec | None = None
    name: str = ""

    def label(self) -> str:
        if self.name:
            return self.name
        if self.file is not None:
            return Path(self.file).name
        s = self.synthetic
        return (f"synthetic(n={s.n_accesses},pages={s.n_pages},hot={s.hot_fraction},"
                f"hot_acc={s.hot_access_fraction},read={s.read_ratio},seed={s.seed})")

    def open(self, page_size: int) -> Iterable[MemoryAccess]:
        if self.file is not None:
            return _FileTrace(self.file, page_size)
        return _SyntheticTrace(self.synthetic, page_size)

    def footprint(self, page_size: int) -> tuple[int, int]:
        """(access count, distinct pages) from a counting pass."""
        if self.file is not None:
            with open(self.file, "rb") as fh:
                ts = TraceStream(fh, page_size)
                for _ in ts:
                    pass
                return ts.count, ts.distinct_pages
        pages = set()
        n = 0
        for acc in generate_synthetic(self.synthetic, page_size):
            pages.add(acc.page_id)
            n += 1
        return n, len(pages)


class _FileTrace:
    def __init__(self, path, page_size):
        self.path, self.page_size = path, page_size

    def __iter__(self):
        with open(self.path, "rb") as fh:
            yield from TraceStream(fh, self.page_size)


class _SyntheticTrace:
    def __init__(self, spec, page_size):
        self.spec, self.page_size = spec, page_size

    def __iter__(self):
        return generate_synthetic(self.spec, self.page_size)


@dataclass(frozen=True)
class RunSpec:
    run_id: str
    source: TraceSource
    policy: str
    overrides: dict = field(default_factory=dict)
    warmup_frac: float = 0.0
    baselines: dict = field(default_factory=dict)


@dataclass
class ExperimentPlan:
    runs: list
    baselines: dict = field(default_factory=dict)
    config: SimConfig = field(default_factory=SimConfig)
    workers: int = 1

    def validate(self) -> "ExperimentPlan":
        ids = [r.run_id for r in self.runs]
        if len(set(ids)) != len(ids):
            raise ExperimentError("run_ids must be unique")
        known = set(ids)
        for scope in [self.baselines] + [r.baselines for r in self.runs]:
            for kind, rid in scope.items():
                if kind not in BASELINE_KINDS:
                    raise ExperimentError(f"unknown baseline kind {kind!r}")
                if rid not in known:
                    raise ExperimentError(f"baseline {kind} references unknown run {rid!r}")
        for r in self.runs:
            if not 0 <= r.warmup_frac < 1:
                raise ExperimentError(f"{r.run_id}: warmup_frac must be in [0, 1)")
        return self

    def baselines_for(self, run: RunSpec) -> dict:
        return {**self.baselines, **run.baselines}


def _source_from(obj, base_dir: Path) -> TraceSource:
    if isinstance(obj, str):
        obj = {"file": obj}
    name = obj.get("name", "")
    if "file" in obj:
        path = Path(obj["file"])
        if not path.is_absolute():
            path = base_dir / path
        return TraceSource(file=str(path), name=name)
    if "synthetic" in obj:
        return TraceSource(synthetic=SyntheticSpec(**obj["synthetic"]), name=name)
    raise ExperimentError(f"trace source needs 'file' or 'synthetic': {obj!r}")


def plan_from_dict(d: dict, base_dir=".") -> ExperimentPlan:
    """Plan document::

        {"config": "base.cfg" | {flat keys},  "workers": 1, "warmup_frac": 0,
         "traces": {"name": {"file": ...} | {"synthetic": {...}}},
         "runs": [{"run_id", "trace": name | source, "policy",
                   "overrides": {...}, "warmup_frac", "baselines": {...}}],
         "baselines": {"dram_only": run_id, "nvm_only": run_id, "clock_dwf": run_id}}
    """
    base_dir = Path(base_dir)
    cfg_spec = d.get("config", {})
    if isinstance(cfg_spec, str):
        p = Path(cfg_spec)
        cfg = load_config(p if p.is_absolute() else base_dir / p)
    else:
        cfg = SimConfig().with_overrides(cfg_spec)
    named = {k: _source_from({**v, "name": v.get("name", k)}, base_dir)
             for k, v in d.get("traces", {}).items()}
    runs = []
    for r in d.get("runs", []):
        src = r.get("trace")
        if isinstance(src, str) and src in named:
            source = named[src]
        elif src is None:
            raise ExperimentError(f"run {r.get('run_id')!r} has no trace")
        else:
            source = _source_from(src, base_dir)
        runs.append(RunSpec(
            run_id=str(r["run_id"]), source=source,
            policy=r.get("policy", cfg.policy), overrides=dict(r.get("overrides", {})),
            warmup_frac=float(r.get("warmup_frac", d.get("warmup_frac", 0.0))),
            baselines=dict(r.get("baselines", {}))))
    if not runs:
        raise ExperimentError("plan has no runs")
    return ExperimentPlan(runs, dict(d.get("baselines", {})), cfg,
                          int(d.get("workers", 1))).validate()


def load_plan(path) -> ExperimentPlan:
    path = Path(path)
    return plan_from_dict(json.loads(path.read_text(encoding="utf-8")), path.parent)


def execute_run(run: RunSpec, base: SimConfig) -> RunReport:
    cfg = replace(base.with_overrides(run.overrides), policy=run.policy).validate()
    page_size = cfg.layout.page_size
    n, distinct = run.source.footprint(page_size)
    if n == 0:
        raise ExperimentError(f"{run.run_id}: empty trace")
    caps = derive_capacities(distinct, cfg.layout)
    warmup = int(run.warmup_frac * n)
    return simulate(run.source.open(page_size), cfg, caps, run.run_id,
                    run.source.label(), warmup)


def _safe_execute(args):
    run, base = args
    try:
        return run.run_id, execute_run(run, base), None
    except (OSError, ValueError, RuntimeError) as exc:
        return run.run_id, None, f"{type(exc).__name__}: {exc}"


@dataclass
class ExperimentResult:
    reports: list
    comparison: list
    failures: dict


def run_experiment(plan: ExperimentPlan) -> ExperimentResult:
    """Execute every run (in parallel when ``plan.workers > 1``) and normalize.

    A run whose trace fails is reported in ``failures``; the others proceed.
    """
    plan.validate()
    jobs = [(r, plan.config) for r in plan.runs]
    if plan.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=plan.workers) as pool:
            outcomes = list(pool.map(_safe_execute, jobs))
    else:
        outcomes = [_safe_execute(j) for j in jobs]
    reports, failures = {}, {}
    for rid, rep, err in outcomes:
        if err is None:
            reports[rid] = rep
        else:
            log.error("run %s failed: %s", rid, err)
            failures[rid] = err
    rows = []
    for run in sorted(plan.runs, key=lambda r: r.run_id):
        rep = reports.get(run.run_id)
        if rep is None:
            continue
        bases = plan.baselines_for(run)
        if "nvm_only" in bases and bases["nvm_only"] in reports:
            ref = reports[bases["nvm_only"]].nvm_writes.total
            own = rep.nvm_writes.total
            rep.lifetime_ratio = ref / own if own else math.inf
        for metric, kind in NORMALIZATIONS:
            if kind not in bases:
                continue
            base = reports.get(bases[kind])
            if base is None:
                raise ExperimentError(
                    f"{run.run_id}: baseline {kind} run {bases[kind]!r} did not complete")
            rows.extend(normalize(rep, base, metric))
    ordered = [reports[k] for k in sorted(reports)]
    return ExperimentResult(ordered, rows, failures)


def normalize(rep: RunReport, base: RunReport, metric: str) -> list[dict]:
    """Comparison rows: each component of ``rep`` over the baseline's total."""
    denom = base.metric(metric).total
    rows = []
    for comp, value in rep.metric(metric).as_dict().items():
        rows.append({
            "run_id": rep.run_id, "policy": rep.policy, "trace": rep.trace,
            "metric": metric, "component": comp, "value": value,
            "normalized_to": base.run_id,
            "normalized_value": value / denom if denom else math.nan,
        })
    return rows


def report_rows(rep: RunReport) -> list[dict]:
    rows = []
    for metric in METRICS:
        for comp, value in rep.metric(metric).as_dict().items():
            if metric == "static_nj_per_req" and comp != "total":
                continue
            rows.append({"run_id": rep.run_id, "policy": rep.policy, "trace": rep.trace,
                         "metric": metric, "component": comp, "value": value,
                         "normalized_to": "", "normalized_value": ""})
    return rows


def _cell(v):
    if isinstance(v, float):
        return repr(r6(v))
    return str(v)


def rows_to_csv(rows: Iterable[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for row in rows:
        w.writerow([_cell(row[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def reports_to_json(reports: list, comparison: list | None = None) -> str:
    doc = {"runs": [r.to_dict() for r in sorted(reports, key=lambda r: r.run_id)]}
    if comparison is not None:
        doc["comparison"] = [{k: (r6(v) if isinstance(v, float) else v) for k, v in row.items()}
                             for row in comparison]
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=True) + "\n"


def emit_report(reports: list, fmt: str, path, comparison: list | None = None) -> Path:
    """Write reports as one JSON document or CSV rows to ``path``."""
    if not reports:
        raise ExperimentError("no reports to emit")
    path = Path(path)
    if fmt == "json":
        text = reports_to_json(reports, comparison)
    elif fmt == "csv":
        rows = [row for r in sorted(reports, key=lambda r: r.run_id) for row in report_rows(r)]
        text = rows_to_csv(rows + list(comparison or []))
    else:
        raise ExperimentError(f"unknown report format {fmt!r}")
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return path
