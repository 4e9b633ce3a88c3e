"""Fleet-size sweep for the warehouse example, with optional simulation.

Writes one CSV with the analytic columns (stability limit, adjusted rate,
external wait, turnover time, idle probabilities) and, with --simulate, the
replicated simulation estimates of W_ex and TO_task next to them.

    python3 scripts/reproduce_figures.py --out sweep.csv
    python3 scripts/reproduce_figures.py --simulate --days 365 --reps 20 --out sim.csv
"""
from __future__ import annotations

import argparse
import csv
import sys
import time

from soqnbo.modelfile import format_number
from soqnbo.rmfs import PICKING_NODES, RmfsParams, build_rmfs_model, sweep
from soqnbo.simulator import DAY, SimConfig, simulate_turnover

COLUMNS = ("N", "lambda_max", "lambda_lc", "w_ex", "l_ex", "w_in", "to_task",
           "sim_w_ex", "sim_w_ex_se", "sim_to_task", "sim_to_task_se")


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n-from", type=int, default=18)
    ap.add_argument("--n-to", type=int, default=60)
    ap.add_argument("--simulate", action="store_true")
    ap.add_argument("--days", type=float, default=30.0)
    ap.add_argument("--reps", type=int, default=10)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--out", default="-")
    args = ap.parse_args(argv)

    params = RmfsParams()
    cfg = SimConfig(args.days * DAY, replications=args.reps, seed=args.seed)
    out = sys.stdout if args.out == "-" else open(args.out, "w", newline="", encoding="utf-8")
    w = csv.writer(out, lineterminator="\n")
    w.writerow(COLUMNS)
    for rec in sweep(params, range(args.n_from, args.n_to + 1)):
        row = {"N": rec.n, "lambda_max": rec.lambda_max, "lambda_lc": rec.lambda_lc, "w_ex": rec.w_ex,
               "l_ex": rec.l_ex, "w_in": rec.w_in, "to_task": rec.to_task}
        if args.simulate and rec.error is None:
            t = time.perf_counter()
            est = simulate_turnover(build_rmfs_model(params, rec.n), cfg, PICKING_NODES)
            row.update(sim_w_ex=est["w_ex"], sim_w_ex_se=est.stderr("w_ex"),
                       sim_to_task=est["to_task"], sim_to_task_se=est.stderr("to_task"))
            print(f"N={rec.n}: simulated in {time.perf_counter() - t:.1f} s", file=sys.stderr)
        w.writerow([str(row["N"])] + [format_number(row.get(c)) for c in COLUMNS[1:]])
    if out is not sys.stdout:
        out.close()
    return 0


if __name__ == "__main__":
    sys.exit(main())
