"""Robotic mobile fulfilment system: 12-node network and robot fleet sizing.

Times are in seconds and rates in 1/s throughout. The default parameters are
the warehouse experiment with two picking stations and one replenishment
station. Its routing probabilities are not given explicitly; the defaults
(q_pp = 0.5/0.5, q_pr = 0.2) are the values that reproduce the reported
station idle probabilities 0.35 / 0.35 / 0.22.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import soqn
from .errors import SoqnError, Unstable
from .gnsolver import NormConstantTable, lc_network_rates, model_norm_constants, mva_closed, th0_profile
from .netmodel import FCFS, PS, Node, RateFunction, SoqnModel, solve_traffic, validate_model
from .reduced import approximate_external, norton_reduce

NODE_NAMES = ("sp", "pp1", "pp2", "p1", "p2", "p1s", "p2s", "p1r", "p2r", "r", "rs")
PICKING_NODES = ("p1", "p2")
REPLENISH_NODES = ("r",)
_IDX = {name: i + 1 for i, name in enumerate(NODE_NAMES)}
PROB_TOL = 1e-12


@dataclass(frozen=True)
class RmfsParams:
    lambda_co: float = 0.13
    sigma_pod_per_order: float = 1.0
    w_alg: float = 0.0
    w_assembled: float = 0.0
    mu_sp: float = 1 / 18.4
    mu_pp1: float = 1 / 34.5
    mu_pp2: float = 1 / 34.5
    mu_p1s: float = 1 / 34.5
    mu_p2s: float = 1 / 34.5
    mu_p1r: float = 1 / 34.5
    mu_p2r: float = 1 / 34.5
    mu_rs: float = 1 / 34.5
    nu_p1: float = 1 / 10
    nu_p2: float = 1 / 10
    nu_r: float = 1 / 30
    q_pp1: float = 0.5
    q_pp2: float = 0.5
    q_p1s: float = 0.8
    q_p1r: float = 0.2
    q_p2s: float = 0.8
    q_p2r: float = 0.2
    n_max: int = 550
    to_task_max: float = math.inf

    def __post_init__(self):
        for a, b in (("q_pp1", "q_pp2"), ("q_p1s", "q_p1r"), ("q_p2s", "q_p2r")):
            total = getattr(self, a) + getattr(self, b)
            if abs(total - 1.0) > PROB_TOL:
                raise ValueError(f"{a} + {b} = {total!r}, must equal 1")
        for f in fields(self):
            if f.name.startswith(("mu_", "nu_")) or f.name in ("lambda_co", "sigma_pod_per_order"):
                if not getattr(self, f.name) > 0:
                    raise ValueError(f"{f.name} must be positive")
            if f.name.startswith("q_") and not 0 <= getattr(self, f.name) <= 1:
                raise ValueError(f"{f.name} must be a probability")
        if self.n_max < 1:
            raise ValueError("n_max must be >= 1")

    @property
    def lambda_bo(self) -> float:
        """Task rate: orders per second times pods per order."""
        return self.lambda_co * self.sigma_pod_per_order

    def to_dict(self) -> dict:
        d = asdict(self)
        if math.isinf(d["to_task_max"]):
            d["to_task_max"] = "inf"
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RmfsParams":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown rmfs parameters: {sorted(unknown)}")
        kw = dict(d)
        if "to_task_max" in kw:
            kw["to_task_max"] = float(kw["to_task_max"])
        return cls(**kw)


def routing_matrix(p: RmfsParams) -> np.ndarray:
    r = np.zeros((12, 12))
    r[0, _IDX["sp"]] = 1.0
    r[_IDX["sp"], _IDX["pp1"]] = p.q_pp1
    r[_IDX["sp"], _IDX["pp2"]] = p.q_pp2
    r[_IDX["pp1"], _IDX["p1"]] = 1.0
    r[_IDX["pp2"], _IDX["p2"]] = 1.0
    r[_IDX["p1"], _IDX["p1s"]] = p.q_p1s
    r[_IDX["p1"], _IDX["p1r"]] = p.q_p1r
    r[_IDX["p2"], _IDX["p2s"]] = p.q_p2s
    r[_IDX["p2"], _IDX["p2r"]] = p.q_p2r
    r[_IDX["p1s"], 0] = 1.0
    r[_IDX["p2s"], 0] = 1.0
    r[_IDX["p1r"], _IDX["r"]] = 1.0
    r[_IDX["p2r"], _IDX["r"]] = 1.0
    r[_IDX["r"], _IDX["rs"]] = 1.0
    r[_IDX["rs"], 0] = 1.0
    return r


def build_rmfs_model(params: RmfsParams, n: int) -> SoqnModel:
    """Movement nodes are infinite-server (robots do not interfere); stations are FCFS."""
    nodes = []
    for name in NODE_NAMES:
        if name in ("p1", "p2", "r"):
            nodes.append(Node(name, RateFunction.constant(getattr(params, f"nu_{name}")), FCFS))
        else:
            nodes.append(Node(name, RateFunction.infinite_server(getattr(params, f"mu_{name}")), PS))
    model = SoqnModel(nodes=tuple(nodes), routing=routing_matrix(params), resources=n, arrival_rate=params.lambda_bo)
    return validate_model(model)


def transport_time(params: RmfsParams) -> float:
    """Mean travel time from task start to arrival at a picking station."""
    return 1 / params.mu_sp + params.q_pp1 / params.mu_pp1 + params.q_pp2 / params.mu_pp2


def w_in(model: SoqnModel, lambda_lc: float) -> float:
    """Mean time in the inner network until picking starts, from MVA on the LC network."""
    mva = mva_closed(lc_network_rates(model, lambda_lc), solve_traffic(model.routing), model.N)
    W = mva.W
    r = model.routing
    sp = model.index("sp")
    total = W[sp]
    for k in (1, 2):
        pp = model.index(f"pp{k}")
        pk = model.index(f"p{k}")
        nu = model.nodes[pk - 1].rate.base_rate
        total += r[sp, pp] * (W[pp] + W[pk] - 1.0 / nu)
    return float(total)


def zero_load_w_in(params: RmfsParams) -> float:
    """W_in with a single robot: no queueing anywhere, so only travel remains."""
    model = build_rmfs_model(params, 1)
    return w_in(model, params.lambda_bo)


def turnover_task(model: SoqnModel, lambda_lc: float, table: NormConstantTable | None = None) -> float:
    """External wait (reduced-model approximation) plus inner wait until picking starts."""
    ext = approximate_external(norton_reduce(model, table))
    return ext.w_ex + w_in(model, lambda_lc)


def turnover_order(params: RmfsParams, to_task: float) -> float:
    return params.w_alg + to_task + params.w_assembled


def phi_profile(params: RmfsParams) -> tuple[np.ndarray, NormConstantTable]:
    """Composite throughput phi(0..n_max) from one convolution pass."""
    model = build_rmfs_model(params, params.n_max)
    table = model_norm_constants(model)
    return th0_profile(table, float(solve_traffic(model.routing).eta[0])), table


def stable_robots_set(params: RmfsParams, phi: np.ndarray | None = None) -> list[int]:
    """{N <= n_max : lambda_BO < phi(N)}.

    All RMFS rates are non-decreasing, so phi is non-decreasing and the set is
    an up-set; the threshold is then found by binary search. A full scan is
    kept for profiles that are not monotone.
    """
    if phi is None:
        phi, _ = phi_profile(params)
    lam = params.lambda_bo
    prof = phi[1 : params.n_max + 1]
    if np.all(np.diff(prof) >= 0):
        first = int(np.searchsorted(prof, lam, side="right"))
        return list(range(first + 1, params.n_max + 1))
    return [n for n in range(1, params.n_max + 1) if lam < phi[n]]


@dataclass
class SizingRecord:
    n: int
    lambda_max: float
    lambda_lc: float = math.nan
    to_task: float = math.nan
    w_ex: float = math.nan
    l_ex: float = math.nan
    w_in: float = math.nan
    error: str | None = None


@dataclass
class SizingReport:
    stable_set: list[int]
    chosen_n: int | None
    records: list[SizingRecord] = field(default_factory=list)


def evaluate_n(params: RmfsParams, n: int, table: NormConstantTable, tol: float = soqn.DEFAULT_TOL) -> SizingRecord:
    """All analytic per-fleet-size quantities for one N."""
    model = build_rmfs_model(params, n)
    t = table.truncated(n)
    rec = SizingRecord(n=n, lambda_max=soqn.lambda_bo_max(model, t))
    try:
        adj = soqn.adjust_lambda_lc(model, tol=tol, table=t)
        ext = approximate_external(norton_reduce(model, t))
        rec.lambda_lc = adj.lambda_lc
        rec.w_ex = ext.w_ex
        rec.l_ex = ext.l_ex
        rec.w_in = w_in(model, adj.lambda_lc)
        rec.to_task = rec.w_ex + rec.w_in
    except SoqnError as exc:
        rec.error = f"{type(exc).__name__}: {exc}"
    return rec


def minimal_robots(
    params: RmfsParams,
    stable_set: list[int] | None = None,
    to_task_max: float | None = None,
    tol: float = soqn.DEFAULT_TOL,
) -> SizingReport:
    """Smallest stable N whose task turnover time is acceptable.

    Candidates are tried in ascending order; an N whose adjustment fails is
    recorded and skipped.
    """
    phi, table = phi_profile(params)
    if stable_set is None:
        stable_set = stable_robots_set(params, phi)
    bound = params.to_task_max if to_task_max is None else to_task_max
    report = SizingReport(stable_set=list(stable_set), chosen_n=None)
    for n in sorted(stable_set):
        rec = evaluate_n(params, n, table, tol)
        report.records.append(rec)
        if rec.error is None and rec.to_task <= bound:
            report.chosen_n = n
            break
    return report


def sweep(params: RmfsParams, n_values, tol: float = soqn.DEFAULT_TOL) -> list[SizingRecord]:
    """Per-N records for a range of fleet sizes; unstable N get an error entry."""
    n_values = list(n_values)
    if not n_values:
        return []
    top = max(max(n_values), 1)
    p = params if top <= params.n_max else _with_n_max(params, top)
    phi, table = phi_profile(p)
    out = []
    for n in n_values:
        if params.lambda_bo >= phi[n]:
            out.append(SizingRecord(n=n, lambda_max=float(phi[n]), error=str(Unstable(params.lambda_bo, float(phi[n])))))
        else:
            out.append(evaluate_n(p, n, table, tol))
    return out


def _with_n_max(params: RmfsParams, n_max: int) -> RmfsParams:
    d = asdict(params)
    d["n_max"] = n_max
    return RmfsParams(**d)


def node_index(name: str) -> int:
    return _IDX[name]
