"""Random model generators and brute-force references shared by the tests."""
from __future__ import annotations

import itertools
import math

import numpy as np
from hypothesis import strategies as st

from soqnbo.gnsolver import model_norm_constants, th0_profile
from soqnbo.netmodel import FCFS, PS, Node, RateFunction, SoqnModel, solve_traffic, stability_routing, validate_model


def random_routing(rng: np.random.Generator, J: int, density: float = 0.7) -> np.ndarray:
    """Row-stochastic, r(0,0) = 0, irreducible thanks to the cycle 0 -> 1 -> ... -> J -> 0."""
    k = J + 1
    mask = rng.random((k, k)) < density
    for i in range(k):
        mask[i, (i + 1) % k] = True
    mask[0, 0] = False
    w = rng.random((k, k)) * mask
    return w / w.sum(axis=1, keepdims=True)


def random_rate(rng: np.random.Generator, n: int, kinds=("constant", "infinite-server", "table"), monotone=True):
    kind = kinds[rng.integers(len(kinds))]
    if kind == "constant":
        return RateFunction.constant(rng.uniform(0.5, 3.0)), FCFS
    if kind == "infinite-server":
        return RateFunction.infinite_server(rng.uniform(0.3, 2.0)), PS
    steps = rng.uniform(0.1, 1.5, size=n)
    vals = np.cumsum(steps) if monotone else steps * 2
    return RateFunction.from_table(vals), FCFS


def random_model(rng, J_max=3, N_max=6, load=(0.1, 0.9), kinds=("constant", "infinite-server", "table"),
                 monotone=True, J=None, N=None) -> SoqnModel:
    J = int(rng.integers(1, J_max + 1)) if J is None else J
    N = int(rng.integers(1, N_max + 1)) if N is None else N
    nodes = []
    for j in range(J):
        rate, disc = random_rate(rng, N, kinds, monotone)
        nodes.append(Node(f"n{j + 1}", rate, disc))
    model = validate_model(SoqnModel(tuple(nodes), random_routing(rng, J), N, 1.0))
    lam_max = float(th0_profile(model_norm_constants(model))[N])
    return validate_model(model.with_arrival_rate(rng.uniform(*load) * lam_max))


@st.composite
def models(draw, J_max=3, N_max=6, load=(0.1, 0.9), kinds=("constant", "infinite-server", "table")):
    seed = draw(st.integers(0, 2**32 - 1))
    return random_model(np.random.default_rng(seed), J_max, N_max, load, kinds)


def brute_norm_constant(model: SoqnModel, m: int) -> float:
    """C(m) of the stability network by explicit enumeration of all states."""
    eta = solve_traffic(model.routing).eta
    J = model.J
    total = 0.0
    for n in itertools.product(range(m + 1), repeat=J):
        if sum(n) != m:
            continue
        w = 1.0
        for j, nj in enumerate(n):
            for k in range(1, nj + 1):
                w *= eta[j + 1] / model.nodes[j].rate(k)
        total += w
    return total


def stability_visit_ratios(model: SoqnModel) -> np.ndarray:
    """Visit ratios of the inner chain with node 0 skipped, from its own stationary vector."""
    p = stability_routing(model.routing)
    w, v = np.linalg.eig(p.T)
    x = np.real(v[:, np.argmin(np.abs(w - 1.0))])
    return x / x.sum()


def brute_lc_pool_empty(model: SoqnModel, lambda_lc: float) -> float:
    """P(n_0 = 0) in the lost-customers network by enumeration of (n_0, ..., n_J)."""
    eta = solve_traffic(model.routing).eta
    num = den = 0.0
    for n in itertools.product(range(model.N + 1), repeat=model.J + 1):
        if sum(n) != model.N:
            continue
        w = (eta[0] / lambda_lc) ** n[0]
        for j in range(1, model.J + 1):
            for k in range(1, n[j] + 1):
                w *= eta[j] / model.nodes[j - 1].rate(k)
        den += w
        if n[0] == 0:
            num += w
    return num / den


def rel(a: float, b: float) -> float:
    return abs(a - b) / max(abs(b), 1e-300)


def isclose_rel(a, b, tol):
    return math.isclose(a, b, rel_tol=tol, abs_tol=0.0)


def mp_lambda_eff(model: SoqnModel, lam: float, dps: int = 60):
    """lambda_LC (1 - P(pool empty)) in mpmath arithmetic, by plain convolution."""
    import mpmath as mp

    with mp.workdps(dps):
        eta = [mp.mpf(float(e)) for e in solve_traffic(model.routing).eta]
        n = model.N
        acc = [mp.mpf(1)] + [mp.mpf(0)] * n
        for j, nd in enumerate(model.nodes, start=1):
            f = [mp.mpf(1)]
            for k in range(1, n + 1):
                f.append(f[-1] * eta[j] / mp.mpf(float(nd.rate(k))))
            acc = [mp.fsum(acc[i] * f[m - i] for i in range(m + 1)) for m in range(n + 1)]
        x = eta[0] / mp.mpf(lam)
        terms = [x**k * acc[n - k] for k in range(n + 1)]
        return mp.mpf(lam) * mp.fsum(terms[1:]) / mp.fsum(terms)
