"""Command-line interface: ``ndsr <command> ...``.

Exit codes: 0 success/optimal, 2 usage or input error, 3 time limit (or any
non-optimal stop with an incumbent), 4 infeasible, 5 enumeration cap hit.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path as FsPath

from . import fixtures
from .arcflow import build_and_solve as arcflow_lp
from .bnp import MODES, TIMING_FIELDS, Params, solve
from .colgen import build_initial_master, solve_lp_by_colgen
from .core import InstanceError, load_instance, save_instance, validate_instance
from .enumerate import DEFAULT_LABEL_CAP, EnumerationLimitError, enumerate_all
from .gen import InfeasibleSpecError, ScenarioSpec, generate, scale_limits
from .lp import Status

log = logging.getLogger("ndsr")

EXIT_OK, EXIT_USAGE, EXIT_TIME, EXIT_INFEASIBLE, EXIT_CAP = 0, 2, 3, 4, 5
STATUS_EXIT = {"optimal": EXIT_OK, "feasible": EXIT_TIME, "time-limit": EXIT_TIME, "infeasible": EXIT_INFEASIBLE}
FIXTURES = {"figure1": fixtures.figure1, "figure2": fixtures.figure2}
CSV_HEADER = ["scenario", "instances", "opt", "mean_gap", "mean_time", "mean_paths", "mean_nodes", "mean_columns"]


class UsageError(Exception):
    pass


def _positive(kind):
    def conv(text):
        v = kind(text)
        if not v > 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return v

    return conv


def _nonneg_float(text):
    v = float(text)
    if not v >= 0 or not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"must be a finite non-negative number, got {text}")
    return v


def _alpha(text):
    v = float(text)
    if not (v >= 1 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"alpha must be >= 1, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ndsr", description="Network design with service requirements.")
    p.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    g = sub.add_parser("generate", help="generate a random instance")
    g.add_argument("--nodes", type=_positive(int), required=True)
    g.add_argument("--arcs", type=_positive(int), required=True)
    g.add_argument("--commodities", type=_positive(int), required=True)
    g.add_argument("--levels", required=True, help="four letters from L/M/H: beta gamma Qavg dQ")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("-o", "--output", help="instance file (default stdout)")

    f = sub.add_parser("fixture", help="write a built-in example instance")
    f.add_argument("name", choices=sorted(FIXTURES))
    f.add_argument("-o", "--output")

    e = sub.add_parser("enumerate", help="count feasible paths per commodity")
    e.add_argument("instance")
    e.add_argument("--alpha", type=_alpha, default=1.0)
    e.add_argument("--no-prune", action="store_true", help="disable sink-distance pruning")
    e.add_argument("--label-cap", type=_positive(int), default=DEFAULT_LABEL_CAP)
    e.add_argument("-o", "--output", help="JSON report path")

    s = sub.add_parser("solve", help="solve an instance, or every *.json in a directory")
    s.add_argument("instance")
    s.add_argument("--mode", choices=MODES, default="bnp")
    s.add_argument("--time-limit", type=_positive(float), default=3600.0, help="seconds (default 3600)")
    s.add_argument("--gap-limit", type=_nonneg_float, default=0.0, help="percent (default 0)")
    s.add_argument("--alpha", type=_alpha, default=1.0)
    s.add_argument("--engine", choices=("builtin", "highs"), default="builtin")
    s.add_argument("--label-cap", type=_positive(int), default=DEFAULT_LABEL_CAP)
    s.add_argument("--jobs", type=_positive(int), default=1, help="parallel instances in batch mode")
    s.add_argument("-o", "--output", help="JSON report (single) or CSV (directory)")

    c = sub.add_parser("compare", help="arc-flow LP, path LP and integer optimum")
    c.add_argument("instance")
    c.add_argument("--alpha", type=_alpha, default=1.0)
    c.add_argument("--time-limit", type=_positive(float), default=3600.0)
    c.add_argument("--engine", choices=("builtin", "highs"), default="builtin")
    c.add_argument("-o", "--output", help="JSON report path")

    v = sub.add_parser("validate", help="check an instance file")
    v.add_argument("instance")

    # debugging aid, deliberately left out of --help
    o = sub.add_parser("oracle")
    o.add_argument("what", choices=("paths", "solve"))
    o.add_argument("instance")
    o.add_argument("--alpha", type=_alpha, default=1.0)
    o.add_argument("--cap", type=_positive(int), default=1_000_000)
    sub._choices_actions = [a for a in sub._choices_actions if a.dest != "oracle"]
    return p


def _config(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("func",)}


def _load(path: str, alpha: float = 1.0):
    inst = load_instance(path)
    return scale_limits(inst, alpha) if alpha != 1 else inst


def _emit(text: str, output) -> None:
    if output:
        with open(output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _dump(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def cmd_generate(args) -> int:
    try:
        spec = ScenarioSpec.from_levels(args.nodes, args.arcs, args.commodities, args.levels, args.seed)
        inst = generate(spec)
    except InfeasibleSpecError as exc:
        raise UsageError(str(exc)) from exc
    _emit(save_instance(inst), args.output)
    return EXIT_OK


def cmd_fixture(args) -> int:
    _emit(save_instance(FIXTURES[args.name]()), args.output)
    return EXIT_OK


def cmd_enumerate(args) -> int:
    inst = _load(args.instance, args.alpha)
    try:
        per_k = enumerate_all(inst, not args.no_prune, args.label_cap)
    except EnumerationLimitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    counts = [len(ps) for ps in per_k]
    report = {"config": _config(args), "instance": inst.name, "paths": counts, "total": sum(counts)}
    if args.output:
        _emit(_dump(report), args.output)
    print(f"total {sum(counts)} paths over {len(counts)} commodities")
    return EXIT_OK


def _solve_one(path: str, args) -> dict:
    inst = _load(path, args.alpha)
    params = Params(
        time_limit=args.time_limit, gap_limit=args.gap_limit, engine=args.engine, label_cap=args.label_cap
    )
    res = solve(inst, args.mode, params)
    out = res.to_dict()
    out["instance"] = inst.name
    out["summary"] = res.summary_line()
    return out


def cmd_solve(args) -> int:
    target = FsPath(args.instance)
    if target.is_dir():
        return _solve_batch(sorted(target.glob("*.json")), args)
    try:
        out = _solve_one(args.instance, args)
    except EnumerationLimitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    report = {"config": _config(args), **out}
    if args.output:
        _emit(_dump(report), args.output)
    print(out["summary"])
    return STATUS_EXIT[out["status"]]


def _scenario(name: str) -> str:
    # generated names look like "30/120/90/MMMM/s1"; drop the seed part
    parts = name.split("/")
    if len(parts) > 1 and parts[-1].startswith("s") and parts[-1][1:].isdigit():
        parts = parts[:-1]
    return "/".join(parts) or name


def _mean(xs) -> float:
    xs = [x for x in xs if x is not None and math.isfinite(x)]
    return sum(xs) / len(xs) if xs else math.nan


def _solve_batch(files, args) -> int:
    if not files:
        raise UsageError(f"no *.json instances in {args.instance}")
    paths = [str(f) for f in files]
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as ex:
            results = list(ex.map(_solve_one, paths, [args] * len(paths)))
    else:
        results = [_solve_one(p, args) for p in paths]
    groups: dict[str, list[dict]] = {}
    for r in results:
        groups.setdefault(_scenario(r["instance"]), []).append(r)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for scen in sorted(groups):
        rs = groups[scen]
        w.writerow(
            [
                scen,
                len(rs),
                sum(1 for r in rs if r["opt"]),
                f"{_mean(r['gap_percent'] for r in rs):.4f}",
                f"{_mean(r['stats']['wall_time'] for r in rs):.3f}",
                f"{_mean(r['stats']['paths'] for r in rs):.1f}" if args.mode == "allpath" else "",
                f"{_mean(r['stats']['nodes'] for r in rs):.1f}",
                f"{_mean(r['stats']['columns'] for r in rs):.1f}",
            ]
        )
    _emit(buf.getvalue(), args.output)
    for p, r in zip(paths, results):
        print(f"{p}: {r['summary']}", file=sys.stderr)
    codes = [STATUS_EXIT[r["status"]] for r in results]
    return max(codes)


def cmd_compare(args) -> int:
    inst = _load(args.instance, args.alpha)
    af = arcflow_lp(inst, args.engine)
    path_lp = math.inf
    if all(validate_instance(inst).feasible):
        master = build_initial_master(inst, args.engine)
        cg = solve_lp_by_colgen(master)
        if cg.status is Status.OPTIMAL:
            path_lp = cg.value
    res = solve(inst, "bnp", Params(time_limit=args.time_limit, engine=args.engine))
    row = {"instance": inst.name, "arcflow_lp": af.value, "path_lp": path_lp, "ilp": res.value, "ilp_status": res.status}
    if args.output:
        doc = {"config": _config(args), **{k: (None if isinstance(v, float) and not math.isfinite(v) else v) for k, v in row.items()}}
        _emit(_dump(doc), args.output)
    print("instance,arcflow_lp,path_lp,ilp,status")
    print(f"{inst.name},{af.value:.6g},{path_lp:.6g},{res.value:.6g},{res.status}")
    return STATUS_EXIT[res.status]


def cmd_validate(args) -> int:
    inst = load_instance(args.instance)
    rep = validate_instance(inst)
    print(json.dumps(rep.as_dict(), sort_keys=True))
    if rep.structural:
        return EXIT_USAGE
    return EXIT_OK if rep.ok else EXIT_INFEASIBLE


def cmd_oracle(args) -> int:
    from . import oracles

    inst = _load(args.instance, args.alpha)
    if args.what == "paths":
        counts = [len(oracles.dfs_enumerate(inst, k)) for k in range(inst.num_commodities)]
        print(json.dumps({"paths": counts, "total": sum(counts)}))
        return EXIT_OK
    value, choice = oracles.exact_toy_solver(inst, args.cap)
    print(json.dumps({"value": None if not math.isfinite(value) else value}))
    return EXIT_OK if choice is not None else EXIT_INFEASIBLE


COMMANDS = {
    "generate": cmd_generate,
    "fixture": cmd_fixture,
    "enumerate": cmd_enumerate,
    "solve": cmd_solve,
    "compare": cmd_compare,
    "validate": cmd_validate,
    "oracle": cmd_oracle,
}


def strip_timing(report: dict) -> dict:
    """Copy of a JSON report without wall-clock fields (for determinism checks)."""
    out = json.loads(json.dumps(report))
    for key in ("stats",):
        if isinstance(out.get(key), dict):
            for t in TIMING_FIELDS:
                out[key].pop(t, None)
    out.pop("summary", None)
    return out


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (UsageError, InstanceError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
