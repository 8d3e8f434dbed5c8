"""Command line entry point: ``clustercons {run,check,props,plot}``.

Exit status is 0 when every verdict passes, 1 when any verdict fails and 2 on
usage or configuration errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .conditions import check_A1, check_A2, check_A4
from .experiments import ConfigError, ExperimentConfig, plot_measures, plot_states, run_experiment
from .graph import Clustering, CouplingSchedule
from .props import run_suites

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _load_clustering(arg: str, n: int) -> Clustering:
    """Accept a JSON file (assignment list or ``{"clusters": [[...], ...]}``),
    an inline JSON value, or a comma separated assignment like ``0,0,1,1``."""
    path = Path(arg)
    text = path.read_text() if path.is_file() else arg
    try:
        value = json.loads(text)
    except json.JSONDecodeError:
        try:
            value = [int(v) for v in text.split(",")]
        except ValueError:
            raise UsageError(f"cannot parse clustering {arg!r}") from None
    if isinstance(value, dict):
        if "clusters" in value:
            c = Clustering.from_members(value["clusters"])
        elif "assignment" in value:
            c = Clustering(value["assignment"])
        else:
            raise UsageError("clustering object needs 'clusters' or 'assignment'")
    elif isinstance(value, list) and value and all(isinstance(v, list) for v in value):
        c = Clustering.from_members(value)
    elif isinstance(value, list):
        c = Clustering(value)
    else:
        raise UsageError(f"cannot parse clustering {arg!r}")
    if c.n != n:
        raise UsageError(f"clustering covers {c.n} vertices, schedule has {n}")
    return c


def cmd_run(args) -> int:
    try:
        config = ExperimentConfig.from_json(args.config)
        overrides = {k: v for k, v in (("seed", args.seed), ("out_dir", args.out_dir),
                                       ("h", args.step), ("T", args.horizon)) if v is not None}
        config = config.replace(**overrides)
    except OSError as err:
        raise UsageError(str(err)) from None
    report = run_experiment(config)
    for cond in report.conditions:
        print(f"{cond.assumption}: {cond.verdict}")
    print(f"final Delta_C = {report.final_delta_c:.3e}")
    print(f"eta_c tail max = {report.eta_c_tail_max:.4f}")
    print(f"zero crossings = {report.zero_crossings}")
    if report.rho is not None:
        print(f"rho = {report.rho:.4f}")
    out = Path(config.out_dir) / f"seed_{config.seed}"
    print(f"wrote {len(report.manifest)} files to {out}")
    return EXIT_FAIL if report.failed else EXIT_OK


def cmd_check(args) -> int:
    try:
        with open(args.schedule) as fh:
            data = json.load(fh)
        schedule = CouplingSchedule.from_dict(data)
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as err:
        raise UsageError(f"cannot load schedule {args.schedule}: {err}") from None
    c = _load_clustering(args.clustering, schedule.n)
    a2, _ = check_A2(schedule, c, h=args.step)
    reports = [check_A1(schedule, h=args.step), a2]
    if not args.skip_a4:
        reports.append(check_A4(schedule, c, args.delta, args.M1, args.window_policy, h=args.step))
    failed = False
    for rep in reports:
        print(f"{rep.assumption}: {rep.verdict}")
        if not rep.passed:
            failed = True
            if rep.assumption == "A2":
                w = rep.evidence["worst"]
                print(f"  worst deviation {rep.evidence['max_deviation']:.3e} at t={w['t']:.6g}: "
                      f"p={w['p']} q={w['q']} i={w['i']} i'={w['i2']}")
    if args.report:
        with open(args.report, "w") as fh:
            json.dump([r.to_dict() for r in reports], fh, sort_keys=True, indent=2)
            fh.write("\n")
    return EXIT_FAIL if failed else EXIT_OK


def cmd_props(args) -> int:
    results = run_suites(args.cases, args.seed)
    for res in results:
        print(res.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


def _read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise UsageError(f"{path} is empty")
    return rows[0], np.array(rows[1:], dtype=float)


def cmd_plot(args) -> int:
    path = Path(args.csv)
    try:
        header, data = _read_csv(path)
    except (OSError, ValueError) as err:
        raise UsageError(f"cannot read {path}: {err}") from None
    out = Path(args.out_dir) if args.out_dir else path.parent
    out.mkdir(parents=True, exist_ok=True)
    if header[:4] == ["t", "delta_c", "eta_c", "eta_c_plus_v"]:
        written = plot_measures(out, data[:, 0], data[:, 1], data[:, 2], data[:, 3])
    elif header and header[0] == "t" and all(h.startswith("x_") for h in header[1:]):
        n = len(header) - 1
        sched = path.parent / "schedule.json"
        c = Clustering.single(n)
        if sched.is_file():
            clusters = json.loads(sched.read_text()).get("clusters")
            if clusters:
                c = Clustering.from_members(clusters)
        plot_states(out / "states.svg", data[:, 0], data[:, 1:], c)
        written = ["states.svg"]
    else:
        raise UsageError(f"unrecognised CSV header {header[:4]}")
    for name in written:
        print(out / name)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="clustercons",
                                description="Cluster consensus on switching networks.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a full experiment from a JSON config")
    r.add_argument("config")
    r.add_argument("--seed", type=int)
    r.add_argument("--out-dir")
    r.add_argument("--step", type=float)
    r.add_argument("--horizon", type=float)
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("check", help="evaluate A1, A2 and A4 on a schedule file")
    c.add_argument("schedule")
    c.add_argument("clustering")
    c.add_argument("--delta", type=float, default=1.0)
    c.add_argument("--M1", type=float, default=10.0)
    c.add_argument("--window-policy", choices=("greedy", "fixed"), default="greedy")
    c.add_argument("--step", type=float, default=1e-3)
    c.add_argument("--skip-a4", action="store_true", help="only check A1 and A2")
    c.add_argument("--report", help="write the condition reports as JSON")
    c.set_defaults(func=cmd_check)

    s = sub.add_parser("props", help="run the seeded property suites")
    s.add_argument("--cases", type=int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_props)

    g = sub.add_parser("plot", help="regenerate SVGs from measures.csv or trajectory.csv")
    g.add_argument("csv")
    g.add_argument("--out-dir")
    g.set_defaults(func=cmd_plot)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except UsageError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
