"""Command-line entry point.

Exit codes: 0 success, 1 claim or self-check failure, 2 invalid input,
3 integration failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import checks, scenarios, sim
from .dynamics import DynamicsError, IntegrationError

EXIT_OK, EXIT_CLAIM, EXIT_INVALID, EXIT_INTEGRATION = 0, 1, 2, 3
EXPERIMENTS = ("overshoot", "nonholonomy", "attitude")
ATTITUDE_SWEEP = (0.5, 2.0, 5.0)


class UsageError(Exception):
    pass


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(doc: dict, overrides) -> dict:
    """Apply ``a.b.c=value`` assignments in place; list items are addressed by index."""
    for item in overrides or ():
        if "=" not in item:
            raise sim.ScenarioError(item, "override must look like key.path=value")
        path, value = item.split("=", 1)
        keys = path.split(".")
        node = doc
        for k in keys[:-1]:
            if isinstance(node, list):
                node = node[_index(path, k, node)]
            else:
                node = node.setdefault(k, {})
        last = keys[-1]
        if isinstance(node, list):
            node[_index(path, last, node)] = _parse_value(value)
        elif isinstance(node, dict):
            node[last] = _parse_value(value)
        else:
            raise sim.ScenarioError(path, "cannot assign into a scalar")
    return doc


def _index(path, key, seq):
    if not key.isdigit() or int(key) >= len(seq):
        raise sim.ScenarioError(path, f"bad list index {key!r}")
    return int(key)


def _resolve(source: str, overrides=()) -> sim.ScenarioConfig:
    """Scenario from a file path or a canned name, with overrides applied."""
    path = Path(source)
    if path.exists():
        text = path.read_text(encoding="utf-8")
        name = path.name.removesuffix(".json")
    elif source in scenarios.CANNED:
        text = sim.dump_scenario(scenarios.CANNED[source]())
        name = source
    else:
        raise UsageError(f"no such scenario file or canned name: {source}")
    if not overrides:
        return sim.load_scenario(text, name)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise sim.ScenarioError("<document>", exc.msg, exc.lineno) from None
    return sim.load_scenario(apply_overrides(doc, overrides), name)


def _out_dir(arg) -> Path:
    out = Path(arg or os.environ.get("FREEFLYER_OUT") or "out")
    if out.exists() and not out.is_dir():
        raise UsageError(f"output path is not a directory: {out}")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _simulate_one(job):
    source, overrides, out = job
    cfg = _resolve(source, overrides)
    log = sim.run(cfg)
    paths = log.write(out, cfg.name)
    return [str(p) for p in paths]


def cmd_simulate(args) -> int:
    out = _out_dir(args.output)
    # validate everything before starting any work
    for src in args.scenario:
        _resolve(src, args.set)
    jobs = [(src, args.set, out) for src in args.scenario]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_simulate_one, jobs))
    else:
        results = [_simulate_one(j) for j in jobs]
    for paths in results:
        for p in paths:
            print(p)
    return EXIT_OK


def _report(result: dict, drop=("logs", "log")) -> dict:
    return {k: v for k, v in result.items() if k not in drop}


def _write_report(out: Path, name: str, report: dict) -> Path:
    path = out / f"{name}.report.json"
    path.write_text(json.dumps(report, indent=2, default=sim._json_default) + "\n", encoding="utf-8")
    return path


def cmd_experiment(args) -> int:
    if args.name not in EXPERIMENTS:
        raise UsageError(f"unknown experiment {args.name!r}; choose from {', '.join(EXPERIMENTS)}")
    out = _out_dir(args.output)
    written = []
    if args.name == "overshoot":
        cfg = _resolve(args.scenario or "reference-reach", args.set)
        res = sim.experiment_overshoot(cfg)
        ok = res["ordering_holds"] and res["accuracy_met"]
        for key, log in res["logs"].items():
            written += log.write(out, f"overshoot-{key}")
        report = _report(res)
    elif args.name == "nonholonomy":
        model = scenarios.planar_two_link()
        res = sim.experiment_nonholonomy(model, scenarios.reference_cycle())
        rev = sim.experiment_nonholonomy(model, scenarios.reference_cycle(reverse=True))
        ok = res["net_rotation"] > 1e-3 and res["com_drift"] < 1e-6 and rev["net_rotation"] < 1e-9
        written += res["log"].write(out, "nonholonomy-cycle")
        written += rev["log"].write(out, "nonholonomy-reversed")
        report = _report(res)
        report["reversed_net_rotation"] = rev["net_rotation"]
    else:
        cfg = _resolve(args.scenario or "reference-reach", args.set)
        res = sim.experiment_attitude_compensation(cfg, ATTITUDE_SWEEP)
        ok = res["ordering_holds"]
        for key, log in res["logs"].items():
            written += log.write(out, f"attitude-{key}")
        report = _report(res)
    report["claim_holds"] = bool(ok)
    written.append(_write_report(out, args.name, report))
    for p in written:
        print(p)
    if not ok:
        print(f"experiment {args.name}: expected ordering does not hold", file=sys.stderr)
    return EXIT_OK if ok else EXIT_CLAIM


def cmd_availability(args) -> int:
    try:
        a = sim.availability(sim.AvailabilityInputs(args.mtbf, args.mttr, args.mtfs))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    print(f"{a:#.6g}")
    return EXIT_OK


def cmd_check(args) -> int:
    results = checks.run_checks()
    for r in results:
        print(r.line())
    failed = [r.name for r in results if not r.passed]
    if failed:
        print("failed: " + ", ".join(failed), file=sys.stderr)
        return EXIT_CLAIM
    return EXIT_OK


def cmd_describe(args) -> int:
    cfg = _resolve(args.scenario, args.set)
    sys.stdout.write(sim.dump_scenario(cfg))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="freeflyer", description="Free-floating manipulator simulator.")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run one or more scenarios and write CSV + summary")
    s.add_argument("scenario", nargs="+", help="scenario JSON path or canned name")
    s.add_argument("-o", "--output", help="output directory (default $FREEFLYER_OUT or ./out)")
    s.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="dotted-path override")
    s.add_argument("--jobs", type=int, default=1, help="run scenarios in parallel processes")
    s.set_defaults(func=cmd_simulate)

    e = sub.add_parser("experiment", help="run a named experiment and check its expected ordering")
    e.add_argument("name", help="|".join(EXPERIMENTS))
    e.add_argument("-o", "--output")
    e.add_argument("--scenario", help="base scenario (overshoot, attitude)")
    e.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    e.set_defaults(func=cmd_experiment)

    a = sub.add_parser("availability", help="operational availability from MTBF, MTTR and MTFS")
    for flag in ("mtbf", "mttr", "mtfs"):
        a.add_argument(f"--{flag}", type=float, required=True, help="hours")
    a.set_defaults(func=cmd_availability)

    c = sub.add_parser("check", help="run the fast invariant self-checks")
    c.set_defaults(func=cmd_check)

    d = sub.add_parser("describe", help="print a scenario with all defaults filled in")
    d.add_argument("scenario")
    d.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    d.set_defaults(func=cmd_describe)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    logging.basicConfig(level=logging.WARNING - 10 * args.verbose, format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "jobs", 1) < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_INVALID
    try:
        return args.func(args)
    except (sim.ScenarioError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (IntegrationError, DynamicsError, np.linalg.LinAlgError) as exc:
        print(f"integration failure: {exc}", file=sys.stderr)
        return EXIT_INTEGRATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
