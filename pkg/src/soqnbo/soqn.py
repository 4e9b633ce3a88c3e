"""Backordering analytics and the lost-customers arrival-rate adjustment."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import NoConvergence, NotConstantRate, Unstable, UnsupportedN
from .gnsolver import (
    NormConstantTable,
    lc_log_norm_constants,
    model_norm_constants,
    node_idle_probability,
    th0_profile,
)
from .netmodel import CONSTANT, SoqnModel, solve_traffic

DEFAULT_TOL = 1e-10
MAX_ITER = 200
BRACKET_LIMIT = 1e12


@dataclass(frozen=True)
class StabilityVerdict:
    lambda_bo_max: float
    stable: bool
    margin: float


@dataclass(frozen=True)
class AdjustmentResult:
    lambda_lc: float
    residual: float
    iterations: int
    bracket: tuple[float, float]
    uniqueness_unverified: bool = False


def _table(model: SoqnModel, table: NormConstantTable | None) -> NormConstantTable:
    if table is None:
        return model_norm_constants(model)
    return table.truncated(model.N) if table.N > model.N else table


def _eta0(model: SoqnModel) -> float:
    return float(solve_traffic(model.routing).eta[0])


def lambda_bo_max(model: SoqnModel, table: NormConstantTable | None = None) -> float:
    """Largest admissible external arrival rate, eta_0 C(N-1)/C(N)."""
    t = _table(model, table)
    return float(th0_profile(t, _eta0(model))[model.N])


def is_stable(model: SoqnModel, table: NormConstantTable | None = None) -> StabilityVerdict:
    lmax = lambda_bo_max(model, table)
    return StabilityVerdict(
        lambda_bo_max=lmax,
        stable=model.arrival_rate < lmax,
        margin=lmax - model.arrival_rate,
    )


def _require_stable(model: SoqnModel, table=None) -> float:
    verdict = is_stable(model, table)
    if not verdict.stable:
        raise Unstable(model.arrival_rate, verdict.lambda_bo_max)
    return verdict.lambda_bo_max


def throughputs_bo(model: SoqnModel, table: NormConstantTable | None = None) -> np.ndarray:
    _require_stable(model, table)
    eta = solve_traffic(model.routing).eta
    return model.arrival_rate * eta / eta[0]


def idle_probabilities_bo(model: SoqnModel, nodes=None, table=None) -> dict[int, float]:
    """P(node j idle) = 1 - lambda_BO eta_j / (eta_0 nu_j) for constant-rate nodes.

    With ``nodes=None`` every constant-rate inner node is reported; asking for
    a node with a load-dependent rate raises NotConstantRate.
    """
    th = throughputs_bo(model, table)
    if nodes is None:
        nodes = [j for j in range(1, model.J + 1) if model.nodes[j - 1].rate.kind == CONSTANT]
    out = {}
    for key in nodes:
        j = model.index(key)
        if j < 1 or j > model.J:
            raise NotConstantRate(j)
        rf = model.nodes[j - 1].rate
        if rf.kind != CONSTANT:
            raise NotConstantRate(j)
        out[j] = 1.0 - th[j] / rf.base_rate
    return out


def _pool_terms(model: SoqnModel, lambda_lc: float, t: NormConstantTable) -> np.ndarray:
    # log of (eta_0/lambda_LC)^k C(N-k)/C(N), k = 0..N
    n = model.N
    k = np.arange(n + 1)
    return k * math.log(_eta0(model) / lambda_lc) + t.log_values[n - k] - t.log_values[n]


def pi_lc_empty(model: SoqnModel, lambda_lc: float, table=None) -> float:
    """Probability that the pool is empty in the lost-customers network."""
    terms = _pool_terms(model, lambda_lc, _table(model, table))
    return float(np.exp(-logsumexp(terms)))


_LOG_SAFE = 600.0


def lambda_eff(model: SoqnModel, lambda_lc: float, table=None) -> float:
    """Accepted-customer rate lambda_LC (1 - pi_LC,0(0)) of the lost-customers network.

    With r_m = phi(m)/lambda_LC the pool weights are t_k = r_N ... r_{N-k+1},
    so lambda_eff = lambda_LC S / (1 + S), S = sum_{k>=1} t_k. S is summed by
    Horner's rule from whichever end cannot overflow; this keeps the result
    within a few ulp, which matters near saturation where lambda_eff moves by
    less than that. The log-space form is the fallback for extreme ranges.
    """
    t = _table(model, table)
    n = model.N
    phi = th0_profile(t, _eta0(model))[1 : n + 1]
    log_r = np.log(phi) - math.log(lambda_lc)  # only used to pick a safe branch
    suffix = np.cumsum(log_r[::-1])  # log t_1 .. log t_N
    if suffix.max() < _LOG_SAFE:
        r = phi / lambda_lc
        g = 0.0
        for m in range(n - 1):
            g = r[m] * (1.0 + g)
        # lambda_LC S = phi(N) (1 + g), g the part of the sum below level N
        return float(phi[n - 1] * (1.0 + g) / (1.0 + r[n - 1] * (1.0 + g)))
    prefix = np.cumsum(-log_r[:-1])
    if prefix.size == 0 or prefix.max() < _LOG_SAFE:
        s = lambda_lc / phi
        u = 0.0
        for m in range(n - 2, -1, -1):
            u = s[m] * (1.0 + u)
        # S = P (1 + u), P = r_1 ... r_N; 1/S may underflow harmlessly
        inv = math.exp(min(-suffix[-1], _LOG_SAFE)) / (1.0 + u)
        return float(lambda_lc / (1.0 + inv))
    terms = _pool_terms(model, lambda_lc, t)
    return float(lambda_lc * np.exp(logsumexp(terms[1:]) - logsumexp(terms)))


def _all_nondecreasing(model: SoqnModel) -> bool:
    return all(nd.rate.is_nondecreasing(model.N) for nd in model.nodes)


def adjust_lambda_lc(
    model: SoqnModel,
    tol: float = DEFAULT_TOL,
    max_iter: int = MAX_ITER,
    table: NormConstantTable | None = None,
) -> AdjustmentResult:
    """Find lambda_LC with lambda_eff(lambda_LC) = lambda_BO by bisection.

    lambda_eff(x) < x always, so lo = lambda_BO is a valid left end; the
    right end doubles until it overshoots. For non-monotone rate tables the
    root may not be unique and the leftmost sign change is taken.
    """
    t = _table(model, table)
    _require_stable(model, t)
    target = model.arrival_rate

    def g(x):
        return lambda_eff(model, x, t) - target

    lo = target
    hi = 2.0 * target
    while g(hi) <= 0:
        lo = hi
        hi *= 2.0
        if hi > BRACKET_LIMIT * target:
            raise NoConvergence(f"no bracket found below {BRACKET_LIMIT:g} * lambda_BO")

    monotone = _all_nondecreasing(model)
    if not monotone:
        grid = np.linspace(lo, hi, 65)
        for a, b in zip(grid[:-1], grid[1:]):
            if g(b) > 0:
                lo, hi = a, b
                break

    it = 0
    mid = 0.5 * (lo + hi)
    resid = abs(g(mid))
    while resid > tol * target:
        if it >= max_iter:
            raise NoConvergence(f"bisection did not reach tolerance in {max_iter} iterations")
        if g(mid) > 0:
            hi = mid
        else:
            lo = mid
        mid = 0.5 * (lo + hi)
        resid = abs(g(mid))
        it += 1
    return AdjustmentResult(
        lambda_lc=mid,
        residual=resid,
        iterations=it,
        bracket=(lo, hi),
        uniqueness_unverified=not monotone,
    )


def closed_form_lambda_lc(model: SoqnModel, lambda_bo: float | None = None, table=None) -> float:
    """Explicit adjusted rate for N = 1 and N = 2, with b(m) = C(N - m)."""
    n = model.N
    if n not in (1, 2):
        raise UnsupportedN(n)
    lam = model.arrival_rate if lambda_bo is None else lambda_bo
    t = _table(model, table)
    c = t.values
    b = [c[n - m] for m in range(n + 1)]
    e0 = _eta0(model)
    if n == 1:
        return e0 * lam * b[1] / (e0 * b[1] - lam * b[0])
    a2 = e0 * b[1] - lam * b[0]
    a1 = e0 * b[2] - lam * b[1]
    disc = a1 * a1 + 4.0 * a2 * b[2] * lam
    return -e0 / (2.0 * a2) * (a1 - math.sqrt(disc))


def lc_throughput_factor(model: SoqnModel, lambda_lc: float, table=None) -> float:
    """C_LC(N-1)/C_LC(N)."""
    log_c = lc_log_norm_constants(_table(model, table), _eta0(model), lambda_lc)
    return float(np.exp(log_c[model.N - 1] - log_c[model.N]))


def throughputs_lc(model: SoqnModel, lambda_lc: float, table=None) -> np.ndarray:
    eta = solve_traffic(model.routing).eta
    return eta * lc_throughput_factor(model, lambda_lc, table)


def idle_probabilities_lc(model: SoqnModel, lambda_lc: float, nodes=None) -> dict[int, float]:
    """Idle probabilities in the lost-customers network, by direct marginalisation."""
    if nodes is None:
        nodes = range(1, model.J + 1)
    return {model.index(k): node_idle_probability(model, model.index(k), lambda_lc) for k in nodes}
