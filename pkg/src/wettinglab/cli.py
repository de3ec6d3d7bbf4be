"""Command-line entry point.

Verbs: verify-small, wetting, walks, boundary-crossing, export.  Flags
mirror the ExperimentConfig fields; --config loads a JSON config file
and explicit flags override it.  The exit code is nonzero iff any
declared acceptance check fails.
"""

from __future__ import annotations

import argparse
import json
import sys

from .experiments import (ExperimentConfig, Report, export, run_boundary_crossing,
                          run_verify_small, run_walk_suite, run_wetting)


def _add_common(p):
    p.add_argument("--q", type=float, default=None)
    p.add_argument("--sizes", type=str, default=None, help="comma separated")
    p.add_argument("--replicas", type=int, default=None)
    p.add_argument("--sweeps", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", type=str, default=None)
    p.add_argument("--config", type=str, default=None, help="JSON config file")


def _build_config(args, name, defaults) -> ExperimentConfig:
    base = dict(defaults)
    if args.config:
        with open(args.config) as f:
            base.update(json.load(f))
    for key, val in (("q", args.q), ("replicas", args.replicas),
                     ("sweeps", args.sweeps), ("seed", args.seed),
                     ("out_dir", args.out)):
        if val is not None:
            base[key] = val
    if args.sizes:
        base["sizes"] = tuple(int(s) for s in args.sizes.split(","))
    base["name"] = name
    return ExperimentConfig(**base)


def _finish(report: Report, args) -> int:
    path = export(report, "json", report.config.get("out_dir", "."))
    export(report, "csv", report.config.get("out_dir", "."))
    for c in report.checks:
        status = "PASS" if c.passed else "FAIL"
        print(f"[{status}] {c.name} = {c.value:.6g} band={c.band} ({c.criterion})")
    print(f"report written to {path}")
    return 0 if report.all_passed else 1


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="wettinglab")
    sub = ap.add_subparsers(dest="verb", required=True)
    for verb in ("verify-small", "wetting", "walks", "boundary-crossing"):
        _add_common(sub.add_parser(verb))
    pe = sub.add_parser("export")
    pe.add_argument("report_json")
    pe.add_argument("--format", choices=("json", "csv"), default="csv")
    pe.add_argument("--out", type=str, default=".")

    args = ap.parse_args(argv)
    if args.verb == "export":
        with open(args.report_json) as f:
            d = json.load(f)
        from .experiments import Check
        rpt = Report(name=d["name"], config=d["config"], per_size=d["per_size"],
                     checks=[Check(**c) for c in d["checks"]],
                     provenance=d["provenance"])
        for c in rpt.checks:
            c.band = tuple(c.band)
        path = export(rpt, args.format, args.out)
        print(f"report written to {path}")
        return 0

    if args.verb == "verify-small":
        cfg = _build_config(args, "verify-small",
                            dict(q=25.0, sizes=(16,), replicas=1, seed=1))
        return _finish(run_verify_small(cfg), args)
    if args.verb == "wetting":
        cfg = _build_config(args, "wetting",
                            dict(q=25.0, sizes=(16, 32, 64, 128), replicas=8, seed=1))
        return _finish(run_wetting(cfg), args)
    if args.verb == "walks":
        cfg = _build_config(args, "walks", dict(q=25.0, sizes=(16,), replicas=1, seed=1))
        return _finish(run_walk_suite(cfg), args)
    if args.verb == "boundary-crossing":
        cfg = _build_config(args, "boundary-crossing",
                            dict(q=25.0, sizes=(16, 24, 32), replicas=1, seed=1))
        return _finish(run_boundary_crossing(cfg), args)
    raise AssertionError(args.verb)


if __name__ == "__main__":
    sys.exit(main())
