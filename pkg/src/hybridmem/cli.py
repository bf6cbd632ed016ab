"""Command line driver.

    hybridmem simulate --config sim.cfg --trace app.trace --policy two_lru --out results/
    hybridmem compare --plan plan.json --out results/
    hybridmem gen-trace --spec workload.cfg --out app.trace [--seed N]
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .config import POLICIES, ConfigError, SimConfig, load_config, parse_kv
from .experiment import (ExperimentError, RunSpec, TraceSource, emit_report, execute_run,
                         load_plan, rows_to_csv, run_experiment)
from .trace import SyntheticSpec, TraceParseError, generate_synthetic, write_trace

log = logging.getLogger("hybridmem")


def _warmup(text: str) -> float:
    v = float(text)
    if not 0 <= v < 1:
        raise argparse.ArgumentTypeError("warm-up fraction must be in [0, 1)")
    return v


def _seed(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hybridmem",
                                     description="Hybrid DRAM-NVM page placement simulator.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one policy over one trace")
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--trace", required=True, help="trace file")
    p.add_argument("--policy", choices=POLICIES, help="overrides the config's policy")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--warmup-frac", type=_warmup, default=0.0,
                   help="leading fraction of accesses excluded from metrics")

    p = sub.add_parser("compare", help="run an experiment plan")
    p.add_argument("--plan", required=True, help="JSON experiment plan")
    p.add_argument("--out", default="results", help="output directory")
    p.add_argument("--warmup-frac", type=_warmup, default=None,
                   help="warm-up fraction for runs that do not set their own")

    p = sub.add_parser("gen-trace", help="write a synthetic trace")
    p.add_argument("--spec", required=True, help="key = value workload description")
    p.add_argument("--out", required=True, help="trace file to write")
    p.add_argument("--seed", type=_seed, help="overrides the workload's seed")
    p.add_argument("--page-size", type=int, default=4096)
    return parser


def _spec_from_file(path, seed=None) -> SyntheticSpec:
    kv = parse_kv(Path(path).read_text(encoding="utf-8"))
    conv = {"n_accesses": int, "n_pages": int, "hot_fraction": float,
            "hot_access_fraction": float, "read_ratio": float, "seed": lambda s: int(s, 0)}
    unknown = set(kv) - set(conv)
    if unknown:
        raise ConfigError(f"unknown workload key(s): {', '.join(sorted(unknown))}")
    values = {k: conv[k](v) for k, v in kv.items()}
    if seed is not None:
        values["seed"] = seed
    return SyntheticSpec(**values)


def cmd_simulate(args) -> int:
    cfg = load_config(args.config) if args.config else SimConfig()
    if args.policy:
        cfg = replace(cfg, policy=args.policy)
    run = RunSpec("run", TraceSource(file=args.trace), cfg.policy, warmup_frac=args.warmup_frac)
    report = execute_run(run, cfg)
    out = Path(args.out)
    emit_report([report], "json", out / "report.json")
    emit_report([report], "csv", out / "report.csv")
    a = report.amat.total
    print(f"{report.policy}: AMAT {a:.6g} ns, APPR {report.appr.total:.6g} nJ, "
          f"static {report.static_nj_per_req:.6g} nJ/req, NVM writes {report.nvm_writes.total:.6g}")
    return 0


def cmd_compare(args) -> int:
    plan = load_plan(args.plan)
    if args.warmup_frac is not None:
        plan.runs = [r if r.warmup_frac else replace(r, warmup_frac=args.warmup_frac)
                     for r in plan.runs]
    result = run_experiment(plan)
    out = Path(args.out)
    if result.reports:
        emit_report(result.reports, "json", out / "reports.json", result.comparison)
        emit_report(result.reports, "csv", out / "reports.csv")
    (out / "comparison.csv").parent.mkdir(parents=True, exist_ok=True)
    (out / "comparison.csv").write_text(rows_to_csv(result.comparison), encoding="utf-8")
    for rid, err in sorted(result.failures.items()):
        print(f"run {rid} failed: {err}", file=sys.stderr)
    print(f"{len(result.reports)} run(s) written to {out}")
    return 1 if result.failures else 0


def cmd_gen_trace(args) -> int:
    spec = _spec_from_file(args.spec, args.seed)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        n = write_trace(generate_synthetic(spec, args.page_size), fh)
    print(f"wrote {n} accesses to {out}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"simulate": cmd_simulate, "compare": cmd_compare,
               "gen-trace": cmd_gen_trace}[args.command]
    try:
        return handler(args)
    except (ConfigError, ExperimentError, TraceParseError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
