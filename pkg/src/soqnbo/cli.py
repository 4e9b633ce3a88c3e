"""Command-line front end.

Exit codes: 0 ok, 2 invalid input, 3 unstable, 4 no feasible fleet size.
Data goes to stdout (or --out), diagnostics to stderr.
"""
from __future__ import annotations

import argparse
import csv
import re
import sys
from pathlib import Path

from . import soqn
from .analysis import analyze
from .errors import ModelError, SoqnError, StateSpaceTooLarge, UnknownNode, Unstable
from .modelfile import ModelFileError, format_number, load_model_file
from .rmfs import PICKING_NODES, RmfsParams, build_rmfs_model, minimal_robots, sweep
from .simulator import DAY, SimConfig, simulate, simulate_turnover

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_UNSTABLE = 3
EXIT_NO_SOLUTION = 4

SWEEP_COLUMNS = (
    "N", "lambda_max", "lambda_lc", "w_ex", "l_ex", "to_task",
    "idle_p1", "idle_p2", "idle_r", "sim_w_ex", "sim_std",
)
_UNITS = {"s": 1.0, "m": 60.0, "h": 3600.0, "d": DAY}


class _UsageError(Exception):
    pass


def parse_duration(text: str) -> float:
    """Seconds from '3600', '12h', '30d' or '1.5m'."""
    m = re.fullmatch(r"\s*([0-9.eE+-]+)\s*([smhd]?)\s*", text)
    if not m:
        raise argparse.ArgumentTypeError(f"bad duration {text!r}; use e.g. 3600, 12h or 30d")
    try:
        value = float(m.group(1)) * _UNITS[m.group(2) or "s"]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad duration {text!r}") from None
    if not value > 0:
        raise argparse.ArgumentTypeError("duration must be positive")
    return value


def _fmt(x) -> str:
    return format_number(x)


def _kv(out, key: str, value) -> None:
    if isinstance(value, bool) or isinstance(value, str):
        out.write(f"{key}: {value}\n")
    else:
        out.write(f"{key}: {_fmt(value)}\n")


def _sim_config(args) -> SimConfig:
    if args.seed is None:
        raise _UsageError("--seed is required together with simulation")
    return SimConfig(horizon=args.horizon, replications=args.reps, seed=args.seed)


def _is_rmfs(model) -> bool:
    return all(name in model.names for name in PICKING_NODES)


def cmd_stability(args, out) -> int:
    model = load_model_file(args.model).require_model()
    verdict = soqn.is_stable(model)
    _kv(out, "lambda_bo", model.arrival_rate)
    _kv(out, "lambda_bo_max", verdict.lambda_bo_max)
    _kv(out, "margin", verdict.margin)
    _kv(out, "verdict", "stable" if verdict.stable else "unstable")
    return EXIT_OK if verdict.stable else EXIT_UNSTABLE


def cmd_analyze(args, out) -> int:
    model = load_model_file(args.model).require_model()
    rep = analyze(model, tol=args.tol)
    _kv(out, "lambda_bo", model.arrival_rate)
    _kv(out, "lambda_bo_max", rep.lambda_max)
    _kv(out, "lambda_lc", rep.lambda_lc)
    _kv(out, "l_ex", rep.l_ex)
    _kv(out, "w_ex", rep.w_ex)
    _kv(out, "p_ex_empty", rep.p_ex_empty)
    _kv(out, "external_exact", rep.exact_external)
    out.write("\nnode          TH      idle         W         L\n")
    for j, name in enumerate(model.names):
        idle = rep.idle_probabilities.get(j)
        idle_s = f"{idle:9.4f}" if idle is not None else f"{'-':>9}"
        out.write(
            f"{name:<6}{rep.throughputs[j]:9.4f}{idle_s}{rep.waiting_times[j]:10.4f}{rep.mean_queue[j]:10.4f}\n"
        )
    for j, idle in rep.idle_probabilities.items():
        _kv(out, f"idle_{model.names[j]}", idle)

    if args.oracle:
        from .oracle import oracle_metrics, solve_auto

        gen, pi = solve_auto(model, tail_tol=1e-13)
        orc = oracle_metrics(gen, pi)
        deltas = {f"th_{model.names[j]}": abs(orc.throughputs[j] - rep.throughputs[j]) for j in range(model.J + 1)}
        deltas.update({f"idle_{model.names[j]}": abs(orc.idle_probabilities[j] - p) for j, p in rep.idle_probabilities.items()})
        deltas["l_ex"] = abs(orc.l_ex - rep.l_ex)
        deltas["w_ex"] = abs(orc.w_ex - rep.w_ex)
        out.write("\n")
        _kv(out, "oracle_levels", gen.M)
        _kv(out, "oracle_l_ex", orc.l_ex)
        _kv(out, "oracle_w_ex", orc.w_ex)
        for key, d in deltas.items():
            _kv(out, f"delta_{key}", d)
        _kv(out, "max_delta", max(deltas.values()))

    if args.simulate:
        cfg = _sim_config(args)
        est = _run_simulation(model, cfg)
        out.write("\n")
        _write_estimate(out, est)
    return EXIT_OK


def _run_simulation(model, cfg: SimConfig, tag=None):
    if tag is None and _is_rmfs(model):
        tag = PICKING_NODES
    if tag:
        return simulate_turnover(model, cfg, tag)
    return simulate(model, cfg)


def _write_estimate(out, est) -> None:
    _kv(out, "sim_replications", est.replications)
    for key in est.mean:
        out.write(f"sim_{key}: {_fmt(est.mean[key])} +- {_fmt(est.stderr(key))}\n")
    bad = [c for c in est.conservation if c["arrivals"] != c["completed"] + c["in_system"] or c["resource_violations"]]
    _kv(out, "sim_conservation", "ok" if not bad else f"violated in {len(bad)} replications")


def cmd_simulate(args, out) -> int:
    model = load_model_file(args.model).require_model()
    cfg = _sim_config(args)
    est = _run_simulation(model, cfg, tag=args.tag)
    _write_estimate(out, est)
    return EXIT_OK


def _params_with(args) -> RmfsParams:
    params = load_model_file(args.model).require_rmfs()
    d = params.to_dict()
    if getattr(args, "n_max", None) is not None:
        d["n_max"] = args.n_max
    return RmfsParams.from_dict(d)


def cmd_min_robots(args, out) -> int:
    params = _params_with(args)
    report = minimal_robots(params, to_task_max=args.to_max, tol=args.tol)
    bound = params.to_task_max if args.to_max is None else args.to_max
    _kv(out, "lambda_bo", params.lambda_bo)
    _kv(out, "to_task_max", bound)
    _kv(out, "stable_min", min(report.stable_set) if report.stable_set else "none")
    out.write("\n     N   lambda_max    lambda_lc         w_ex      to_task\n")
    for rec in report.records:
        if rec.error:
            out.write(f"{rec.n:6d}  {rec.lambda_max:11.4f}  error: {rec.error}\n")
        else:
            out.write(f"{rec.n:6d}  {rec.lambda_max:11.4f}  {rec.lambda_lc:11.4f}  {rec.w_ex:11.4f}  {rec.to_task:11.4f}\n")
    out.write("\n")
    if report.chosen_n is None:
        _kv(out, "minimal_robots", "no solution")
        return EXIT_NO_SOLUTION
    _kv(out, "minimal_robots", report.chosen_n)
    return EXIT_OK


def sweep_rows(params: RmfsParams, n_values, tol=soqn.DEFAULT_TOL, sim_cfg: SimConfig | None = None) -> list[dict]:
    rows = []
    for rec in sweep(params, n_values, tol):
        row = {"N": rec.n, "lambda_max": rec.lambda_max}
        if rec.error is None:
            model = build_rmfs_model(params, rec.n)
            idle = soqn.idle_probabilities_bo(model, nodes=["p1", "p2", "r"])
            row.update(
                lambda_lc=rec.lambda_lc, w_ex=rec.w_ex, l_ex=rec.l_ex, to_task=rec.to_task,
                idle_p1=idle[model.index("p1")], idle_p2=idle[model.index("p2")], idle_r=idle[model.index("r")],
            )
        if sim_cfg is not None:
            est = simulate_turnover(build_rmfs_model(params, rec.n), sim_cfg, PICKING_NODES)
            row["sim_w_ex"] = est["w_ex"]
            row["sim_std"] = est.std["w_ex"]
        rows.append(row)
    return rows


def write_sweep_csv(rows, stream) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for row in rows:
        w.writerow(["%d" % row["N"]] + [_fmt(row.get(c)) for c in SWEEP_COLUMNS[1:]])


def cmd_sweep(args, out) -> int:
    params = load_model_file(args.model).require_rmfs()
    if args.n_from < 1:
        raise _UsageError("--n-from must be >= 1")
    n_values = range(args.n_from, args.n_to + 1)
    sim_cfg = _sim_config(args) if args.simulate else None
    rows = sweep_rows(params, n_values, args.tol, sim_cfg)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            write_sweep_csv(rows, fh)
        print(f"wrote {len(rows)} rows to {args.out}", file=sys.stderr)
    else:
        write_sweep_csv(rows, out)
    return EXIT_OK


def _add_sim_flags(p, required_seed=False):
    p.add_argument("--seed", type=int, required=required_seed, help="master seed (required with simulation)")
    p.add_argument("--horizon", type=parse_duration, default=30 * DAY, help="simulated time, e.g. 30d (default)")
    p.add_argument("--reps", type=int, default=10, help="independent replications (default 10)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="soqnbo", description="Semi-open networks with backordering.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stability", help="stability limit and verdict")
    p.add_argument("model", type=Path)
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("analyze", help="full performance report")
    p.add_argument("model", type=Path)
    p.add_argument("--tol", type=float, default=soqn.DEFAULT_TOL)
    p.add_argument("--oracle", action="store_true", help="compare with the truncated CTMC (small models only)")
    p.add_argument("--simulate", action="store_true")
    _add_sim_flags(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("min-robots", help="smallest fleet meeting the turnover bound")
    p.add_argument("model", type=Path)
    p.add_argument("--to-max", type=float, default=None, help="turnover bound in seconds (inf allowed)")
    p.add_argument("--n-max", type=int, default=None)
    p.add_argument("--tol", type=float, default=soqn.DEFAULT_TOL)
    p.set_defaults(func=cmd_min_robots)

    p = sub.add_parser("sweep", help="per-N CSV for a range of fleet sizes")
    p.add_argument("model", type=Path)
    p.add_argument("--n-from", type=int, required=True)
    p.add_argument("--n-to", type=int, required=True)
    p.add_argument("--out", type=Path, default=None)
    p.add_argument("--tol", type=float, default=soqn.DEFAULT_TOL)
    p.add_argument("--simulate", action="store_true")
    _add_sim_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("simulate", help="replicated simulation of the backordering network")
    p.add_argument("model", type=Path)
    p.add_argument("--tag", nargs="*", default=None, help="nodes that end the turnover clock")
    _add_sim_flags(p, required_seed=True)
    p.set_defaults(func=cmd_simulate)
    return ap


def main(argv=None, stdout=None) -> int:
    out = stdout if stdout is not None else sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    try:
        return args.func(args, out)
    except Unstable as exc:
        print(f"unstable: {exc}", file=sys.stderr)
        return EXIT_UNSTABLE
    except (ModelFileError, ModelError, UnknownNode, _UsageError, StateSpaceTooLarge) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except SoqnError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
