"""Norton reduction to a single load-dependent node and the J=1 backordering formulas."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import Unstable
from .gnsolver import NormConstantTable, model_norm_constants, th0_profile
from .netmodel import SoqnModel, solve_traffic


@dataclass(frozen=True)
class ReducedModel:
    phi: np.ndarray  # phi[0] = 0, phi[m] = composite rate with m resources
    resources: int
    arrival_rate: float
    exact: bool = False

    @property
    def N(self) -> int:
        return self.resources


@dataclass(frozen=True)
class ExternalQueueReport:
    p_empty: float
    tail: float
    l_ex: float
    w_ex: float
    norm_const: float
    log_norm_const: float
    p_saturated: float  # P(pool empty, all N resources inside)
    exact: bool


def norton_reduce(model: SoqnModel, table: NormConstantTable | None = None) -> ReducedModel:
    if table is None:
        table = model_norm_constants(model)
    phi = th0_profile(table.truncated(model.N), float(solve_traffic(model.routing).eta[0]))
    return ReducedModel(phi=phi, resources=model.N, arrival_rate=model.arrival_rate, exact=model.J == 1)


def reduced_from_rates(rates, arrival_rate: float) -> ReducedModel:
    """Single-node model with nu_1(m) = rates[m-1]; the J=1 formulas are then exact."""
    phi = np.concatenate([[0.0], np.asarray(rates, dtype=float)])
    return ReducedModel(phi=phi, resources=len(phi) - 1, arrival_rate=float(arrival_rate), exact=True)


@dataclass(frozen=True)
class ReducedDistribution:
    """Closed-form steady state of the one-node backordering system.

    pi(n_ex, N - n_1, n_1) = C^-1 prod_{m<=n_1} (lambda/phi(m)) (lambda/phi(N))^n_ex
    """

    log_weights: np.ndarray  # log prod_{m<=n1} lambda/phi(m), n1 = 0..N
    log_tail: float  # log(lambda / phi(N))
    log_norm: float

    @property
    def N(self) -> int:
        return len(self.log_weights) - 1

    @property
    def norm_const(self) -> float:
        return math.exp(self.log_norm)

    @property
    def tail(self) -> float:
        return math.exp(self.log_tail)

    def pmf(self, n_ex: int, n0: int, n1: int) -> float:
        n = self.N
        if n0 + n1 != n or n0 < 0 or n1 < 0 or n_ex < 0:
            return 0.0
        if n_ex > 0 and n0 != 0:
            return 0.0
        return math.exp(self.log_weights[n1] + n_ex * self.log_tail - self.log_norm)

    def external_pmf(self, n_ex: int) -> float:
        if n_ex == 0:
            return math.exp(logsumexp(self.log_weights) - self.log_norm)
        return self.pmf(n_ex, 0, self.N)

    def saturated_prob(self) -> float:
        """P(Y_0 = 0, Y_1 = N) summed over every external queue length."""
        return math.exp(self.log_weights[-1] - self.log_norm - math.log1p(-self.tail))


def reduced_bo_distribution(reduced: ReducedModel) -> ReducedDistribution:
    n = reduced.N
    lam = reduced.arrival_rate
    if not lam < reduced.phi[n]:
        raise Unstable(lam, float(reduced.phi[n]))
    logw = np.zeros(n + 1)
    logw[1:] = np.cumsum(math.log(lam) - np.log(reduced.phi[1:]))
    log_tail = math.log(lam) - math.log(reduced.phi[n])
    parts = np.append(logw[:n], logw[n] - math.log1p(-math.exp(log_tail)))
    return ReducedDistribution(log_weights=logw, log_tail=log_tail, log_norm=float(logsumexp(parts)))


def approximate_external(reduced: ReducedModel) -> ExternalQueueReport:
    """External-queue metrics of the reduced backordering system.

    Exact when the source network has a single inner node, an approximation
    (without error bounds) otherwise.
    """
    dist = reduced_bo_distribution(reduced)
    lam = reduced.arrival_rate
    phi_n = reduced.phi[reduced.N]
    p_sat = dist.saturated_prob()
    l_ex = p_sat * lam / (phi_n - lam)
    return ExternalQueueReport(
        p_empty=dist.external_pmf(0),
        tail=dist.tail,
        l_ex=l_ex,
        w_ex=l_ex / lam,
        norm_const=dist.norm_const if dist.log_norm < 700 else math.inf,
        log_norm_const=dist.log_norm,
        p_saturated=p_sat,
        exact=reduced.exact,
    )
