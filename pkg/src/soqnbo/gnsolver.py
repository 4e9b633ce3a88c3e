"""Closed Gordon-Newell machinery: convolution, MVA, lost-customers product form.

All normalisation constants are carried as natural logarithms. With a few
hundred resources the constants leave the double range long before the
ratios we actually need do.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from .errors import StateSpaceTooLarge, UnsupportedDiscipline
from .netmodel import CONSTANT, INFINITE_SERVER, TABLE, RateFunction, SoqnModel, solve_traffic

STATE_CAP = 5_000_000


@dataclass(frozen=True)
class NormConstantTable:
    """log C(m) for m = 0..N of the stability network (inner nodes only)."""

    log_values: np.ndarray

    @property
    def N(self) -> int:
        return len(self.log_values) - 1

    @property
    def values(self) -> np.ndarray:
        with np.errstate(over="ignore", under="ignore"):
            return np.exp(self.log_values)

    def log_ratio(self, m: int) -> float:
        """log(C(m-1) / C(m))."""
        return float(self.log_values[m - 1] - self.log_values[m])

    def truncated(self, n: int) -> "NormConstantTable":
        return NormConstantTable(self.log_values[: n + 1])


@dataclass(frozen=True)
class MvaResult:
    W: np.ndarray
    L: np.ndarray
    TH: np.ndarray
    population: int


@dataclass(frozen=True)
class LcDistribution:
    states: np.ndarray
    probs: np.ndarray
    log_norm: float

    def prob(self, state) -> float:
        hit = np.flatnonzero(np.all(self.states == np.asarray(state), axis=1))
        return float(self.probs[hit[0]]) if hit.size else 0.0


def _log_node_factors(log_eta_j: float, rates: np.ndarray) -> np.ndarray:
    # log prod_{i<=n} eta_j / nu_j(i), n = 0..len(rates)
    out = np.zeros(len(rates) + 1)
    out[1:] = np.cumsum(log_eta_j - np.log(rates))
    return out


def _log_convolve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = len(a)
    k = np.arange(n)
    diff = k[:, None] - k[None, :]
    terms = b[None, :] + a[np.clip(diff, 0, None)]
    terms[diff < 0] = -np.inf
    return logsumexp(terms, axis=1)


def _as_rate_table(inner_rates, n: int) -> np.ndarray:
    if isinstance(inner_rates, np.ndarray):
        return np.asarray(inner_rates, dtype=float)[:, :n]
    return np.array([rf.rates(n) for rf in inner_rates]).reshape(len(inner_rates), n)


def norm_constants(inner_rates, eta, N: int) -> NormConstantTable:
    """Normalisation constants of the stability network by node-wise convolution.

    ``inner_rates`` is either a sequence of RateFunction for nodes 1..J or an
    array of shape (J, >=N) with nu_j(n) in column n-1. ``eta`` covers nodes
    0..J; only the inner entries are used.
    """
    eta = np.asarray(getattr(eta, "eta", eta), dtype=float)
    rates = _as_rate_table(inner_rates, N)
    acc = np.full(N + 1, -np.inf)
    acc[0] = 0.0
    for j in range(rates.shape[0]):
        acc = _log_convolve(acc, _log_node_factors(math.log(eta[j + 1]), rates[j]))
    return NormConstantTable(acc)


def model_norm_constants(model: SoqnModel, n_max: int | None = None) -> NormConstantTable:
    n_max = model.N if n_max is None else n_max
    return norm_constants(model.rate_table(n_max), solve_traffic(model.routing), n_max)


def th0_profile(table: NormConstantTable, eta0: float = 1.0) -> np.ndarray:
    """phi(m) = eta_0 C(m-1)/C(m) for m = 0..N with phi(0) = 0."""
    phi = np.zeros(table.N + 1)
    phi[1:] = eta0 * np.exp(table.log_values[:-1] - table.log_values[1:])
    return phi


def lc_log_norm_constants(table: NormConstantTable, eta0: float, lambda_lc: float) -> np.ndarray:
    """log C_LC(L), L = 0..N, via C_LC(L) = C(L) + (eta_0/lambda_LC) C_LC(L-1)."""
    log_x = math.log(eta0 / lambda_lc)
    out = np.empty_like(table.log_values)
    out[0] = table.log_values[0]
    for L in range(1, len(out)):
        out[L] = np.logaddexp(table.log_values[L], log_x + out[L - 1])
    return out


def lc_network_rates(model: SoqnModel, lambda_lc: float) -> list[RateFunction]:
    """Rate functions of the closed lost-customers network, node 0 first."""
    return [RateFunction.constant(lambda_lc)] + [nd.rate for nd in model.nodes]


def mva_closed(rates: Sequence[RateFunction], eta, N: int) -> MvaResult:
    """Exact MVA for a single-class closed product-form network.

    Constant-rate nodes use the classic queueing recursion, infinite-server
    nodes have W = 1/mu, tabulated rates use the marginal-probability
    recursion.
    """
    eta = np.asarray(getattr(eta, "eta", eta), dtype=float)
    k = len(rates)
    kinds = [rf.kind for rf in rates]
    for kind in kinds:
        if kind not in (CONSTANT, INFINITE_SERVER, TABLE):
            raise UnsupportedDiscipline(kind)
    L = np.zeros(k)
    W = np.zeros(k)
    TH = np.zeros(k)
    ld = [j for j in range(k) if kinds[j] == TABLE]
    ld_rates = {j: rates[j].rates(N) for j in ld}
    marg = {j: np.array([1.0]) for j in ld}  # p_j(i | n-1), i = 0..n-1

    for n in range(1, N + 1):
        for j, rf in enumerate(rates):
            if kinds[j] == CONSTANT:
                W[j] = (1.0 + L[j]) / rf.base_rate
            elif kinds[j] == INFINITE_SERVER:
                W[j] = 1.0 / rf.base_rate
            else:
                i = np.arange(1, n + 1)
                W[j] = float(np.sum(i / ld_rates[j][:n] * marg[j]))
        x = n / float(np.dot(eta, W))
        TH = eta * x
        L = TH * W
        for j in ld:
            p = np.empty(n + 1)
            p[1:] = TH[j] / ld_rates[j][:n] * marg[j]
            p[0] = max(0.0, 1.0 - p[1:].sum())
            marg[j] = p
    return MvaResult(W=W.copy(), L=L.copy(), TH=TH.copy(), population=N)


def compositions(n: int, k: int) -> np.ndarray:
    """All vectors of k non-negative ints summing to n, lexicographic order."""
    if k == 1:
        return np.array([[n]], dtype=np.int64)
    blocks = []
    for first in range(n + 1):
        rest = compositions(n - first, k - 1)
        blocks.append(np.hstack([np.full((len(rest), 1), first, dtype=np.int64), rest]))
    return np.vstack(blocks)


def count_compositions(n: int, k: int) -> int:
    return math.comb(n + k - 1, k - 1)


def lc_steady_state(model: SoqnModel, lambda_lc: float, cap: int = STATE_CAP) -> LcDistribution:
    """Product-form distribution of the lost-customers resource network.

    States are (n_0, n_1, ..., n_J) in lexicographic order.
    """
    size = count_compositions(model.N, model.J + 1)
    if size > cap:
        raise StateSpaceTooLarge(size, cap)
    eta = solve_traffic(model.routing).eta
    states = compositions(model.N, model.J + 1)
    logw = states[:, 0] * math.log(eta[0] / lambda_lc)
    rates = model.rate_table()
    for j in range(1, model.J + 1):
        f = _log_node_factors(math.log(eta[j]), rates[j - 1])
        logw = logw + f[states[:, j]]
    log_c = float(logsumexp(logw))
    return LcDistribution(states=states, probs=np.exp(logw - log_c), log_norm=log_c)


def node_idle_probability(model: SoqnModel, j: int, lambda_lc: float) -> float:
    """P(n_j = 0) in the lost-customers network, from constants with node j removed."""
    eta = solve_traffic(model.routing).eta
    n = model.N
    rates = model.rate_table()
    acc = np.full(n + 1, -np.inf)
    acc[0] = 0.0
    full = acc.copy()
    for i in range(0, model.J + 1):
        if i == 0:
            f = np.arange(n + 1) * math.log(eta[0] / lambda_lc)
        else:
            f = _log_node_factors(math.log(eta[i]), rates[i - 1])
        full = _log_convolve(full, f)
        if i != j:
            acc = _log_convolve(acc, f)
    return float(np.exp(acc[n] - full[n]))
