"""Closed forms against the brute-force CTMC on random small networks.

For every model the truncated chain is solved exactly and compared with the
product-form throughputs, idle probabilities and the reduced external-queue
approximation (exact for one inner node). Prints one line per model and the
worst deviations.

    python3 scripts/validate_oracle.py --models 40 --seed 3
"""
from __future__ import annotations

import argparse
import sys

import numpy as np

from soqnbo import soqn
from soqnbo.gnsolver import model_norm_constants, th0_profile
from soqnbo.netmodel import FCFS, PS, Node, RateFunction, SoqnModel, validate_model
from soqnbo.oracle import oracle_metrics, solve_auto
from soqnbo.reduced import approximate_external, norton_reduce


def random_model(rng) -> SoqnModel:
    J = int(rng.integers(1, 4))
    N = int(rng.integers(1, 5))
    k = J + 1
    r = rng.random((k, k)) * (rng.random((k, k)) < 0.7)
    for i in range(k):
        r[i, (i + 1) % k] += 0.1
    r[0, 0] = 0.0
    r /= r.sum(axis=1, keepdims=True)
    nodes = []
    for j in range(J):
        if rng.random() < 0.5:
            nodes.append(Node(f"n{j + 1}", RateFunction.constant(rng.uniform(0.5, 3)), FCFS))
        else:
            nodes.append(Node(f"n{j + 1}", RateFunction.infinite_server(rng.uniform(0.3, 2)), PS))
    m = validate_model(SoqnModel(tuple(nodes), r, N, 1.0))
    lam_max = th0_profile(model_norm_constants(m))[N]
    return validate_model(m.with_arrival_rate(rng.uniform(0.2, 0.85) * lam_max))


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--models", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(args.seed)
    worst_th = worst_idle = worst_exact = 0.0
    for i in range(args.models):
        m = random_model(rng)
        gen, pi = solve_auto(m, tail_tol=1e-13)
        exact = oracle_metrics(gen, pi)
        d_th = float(np.max(np.abs(exact.throughputs - soqn.throughputs_bo(m))))
        idle = soqn.idle_probabilities_bo(m)
        d_idle = max((abs(exact.idle_probabilities[j] - p) for j, p in idle.items()), default=0.0)
        ext = approximate_external(norton_reduce(m))
        rel_lex = abs(ext.l_ex - exact.l_ex) / exact.l_ex
        if m.J == 1:
            worst_exact = max(worst_exact, rel_lex)
        worst_th, worst_idle = max(worst_th, d_th), max(worst_idle, d_idle)
        print(f"{i:3d} J={m.J} N={m.N} states={len(pi):6d} dTH={d_th:.1e} didle={d_idle:.1e} "
              f"L_ex exact={exact.l_ex:.5g} approx={ext.l_ex:.5g} ({100 * rel_lex:.1f}%)")
    print(f"worst |dTH| {worst_th:.2e}, worst |d idle| {worst_idle:.2e}, worst J=1 L_ex rel {worst_exact:.2e}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
