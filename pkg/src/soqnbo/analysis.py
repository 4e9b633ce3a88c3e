"""Full performance report of a backordering network."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .gnsolver import lc_network_rates, model_norm_constants, mva_closed
from .netmodel import SoqnModel, solve_traffic


@dataclass
class PerformanceReport:
    throughputs: np.ndarray
    idle_probabilities: dict[int, float]
    l_ex: float
    w_ex: float
    waiting_times: np.ndarray | None = None
    mean_queue: np.ndarray | None = None
    p_ex_empty: float | None = None
    lambda_max: float | None = None
    stable: bool | None = None
    lambda_lc: float | None = None
    exact_external: bool | None = None
    extras: dict = field(default_factory=dict)


def analyze(model: SoqnModel, tol: float = 1e-10) -> PerformanceReport:
    """Throughputs, idle probabilities, per-node waits and external-queue metrics.

    Raises Unstable when lambda_BO >= lambda_BO,max.
    """
    from . import soqn
    from .reduced import approximate_external, norton_reduce

    table = model_norm_constants(model)
    verdict = soqn.is_stable(model, table)
    th = soqn.throughputs_bo(model, table)
    idle = soqn.idle_probabilities_bo(model, table=table)
    adj = soqn.adjust_lambda_lc(model, tol=tol, table=table)
    mva = mva_closed(lc_network_rates(model, adj.lambda_lc), solve_traffic(model.routing), model.N)
    ext = approximate_external(norton_reduce(model, table))
    return PerformanceReport(
        throughputs=th,
        idle_probabilities=idle,
        l_ex=ext.l_ex,
        w_ex=ext.w_ex,
        waiting_times=mva.W,
        mean_queue=mva.L,
        p_ex_empty=ext.p_empty,
        lambda_max=verdict.lambda_bo_max,
        stable=verdict.stable,
        lambda_lc=adj.lambda_lc,
        exact_external=ext.exact,
        extras={"adjustment": adj, "external": ext},
    )
