"""Brute-force steady state of the backordering CTMC on a truncated external queue.

Used only to check the closed forms on desk-sized instances.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from .analysis import PerformanceReport
from .errors import NoConvergence, StateSpaceTooLarge
from .gnsolver import compositions, count_compositions
from .netmodel import SoqnModel

STATE_CAP = 2_000_000
DIRECT_SOLVE_LIMIT = 200_000
START_LEVEL = 16
TAIL_TOL = 1e-10


@dataclass(frozen=True)
class TruncatedGenerator:
    """Generator on {(n_ex, n_0, ..., n_J)} with n_ex <= M.

    Row-major states; level-0 phases come first, then each positive level
    in turn with the same phase order.
    """

    states: np.ndarray
    Q: sp.csr_matrix
    M: int
    model: SoqnModel

    @property
    def levels(self) -> np.ndarray:
        return self.states[:, 0]

    def block(self, from_level: int, to_level: int) -> np.ndarray:
        rows = np.flatnonzero(self.levels == from_level)
        cols = np.flatnonzero(self.levels == to_level)
        return self.Q[rows][:, cols].toarray()


def build_generator(model: SoqnModel, M: int, cap: int = STATE_CAP) -> TruncatedGenerator:
    if M < 1:
        raise ValueError("truncation level must be >= 1")
    n, J = model.N, model.J
    n0_phases = count_compositions(n, J + 1)
    plus_phases = count_compositions(n, J)
    size = n0_phases + M * plus_phases
    if size > cap:
        raise StateSpaceTooLarge(size, cap)

    level0 = compositions(n, J + 1)
    inner = compositions(n, J)
    plus = np.hstack([np.zeros((len(inner), 1), dtype=np.int64), inner])
    blocks = [np.hstack([np.zeros((len(level0), 1), dtype=np.int64), level0])]
    for lev in range(1, M + 1):
        blocks.append(np.hstack([np.full((len(plus), 1), lev, dtype=np.int64), plus]))
    states = np.vstack(blocks)
    index = {tuple(s): i for i, s in enumerate(states.tolist())}

    r = model.routing
    lam = model.arrival_rate
    nu = [nd.rate for nd in model.nodes]
    rows, cols, vals = [], [], []

    def add(i, target, rate):
        if rate > 0:
            rows.append(i)
            cols.append(index[target])
            vals.append(rate)

    for i, s in enumerate(states.tolist()):
        lev, n_vec = s[0], s[1:]
        if n_vec[0] == 0:
            if lev < M:
                add(i, (lev + 1, *n_vec), lam)
        else:
            for j in range(1, J + 1):
                t = list(n_vec)
                t[0] -= 1
                t[j] += 1
                add(i, (lev, *t), lam * r[0, j])
        for src in range(1, J + 1):
            if n_vec[src] == 0:
                continue
            rate = nu[src - 1](n_vec[src])
            for dst in range(1, J + 1):
                if dst != src:
                    t = list(n_vec)
                    t[src] -= 1
                    t[dst] += 1
                    add(i, (lev, *t), rate * r[src, dst])
            if lev == 0:
                t = list(n_vec)
                t[src] -= 1
                t[0] += 1
                add(i, (0, *t), rate * r[src, 0])
            else:
                for dst in range(1, J + 1):
                    t = list(n_vec)
                    t[src] -= 1
                    t[dst] += 1
                    add(i, (lev - 1, *t), rate * r[src, 0] * r[0, dst])

    size = len(states)
    Q = sp.csr_matrix((vals, (rows, cols)), shape=(size, size))
    Q = Q - sp.diags(np.asarray(Q.sum(axis=1)).ravel())
    return TruncatedGenerator(states=states, Q=Q.tocsr(), M=M, model=model)


def steady_state(gen: TruncatedGenerator, tol: float = 1e-12, max_iter: int = 1_000_000) -> np.ndarray:
    """Solve pi Q = 0, sum(pi) = 1."""
    size = gen.Q.shape[0]
    if size <= DIRECT_SOLVE_LIMIT:
        A = gen.Q.T.tolil()
        A[size - 1, :] = np.ones(size)
        b = np.zeros(size)
        b[-1] = 1.0
        pi = spsolve(A.tocsc(), b)
        pi = np.clip(pi, 0.0, None)
        return pi / pi.sum()
    # uniformised power iteration
    q = float(-gen.Q.diagonal().min()) * 1.05
    P = (sp.identity(size, format="csr") + gen.Q / q).T.tocsr()
    pi = np.full(size, 1.0 / size)
    for _ in range(max_iter):
        nxt = P @ pi
        if np.abs(nxt - pi).max() < tol * 1e-3:
            return nxt / nxt.sum()
        pi = nxt
    raise NoConvergence("power iteration did not converge")


def level_mass(gen: TruncatedGenerator, pi: np.ndarray, level: int) -> float:
    return float(pi[gen.levels == level].sum())


def solve_auto(model: SoqnModel, tail_tol: float = TAIL_TOL, start: int = START_LEVEL, max_level: int = 1 << 16):
    """Double the truncation level until the mass on the top level is below tail_tol."""
    M = start
    while True:
        gen = build_generator(model, M)
        pi = steady_state(gen)
        if level_mass(gen, pi, M) < tail_tol:
            return gen, pi
        M *= 2
        if M > max_level:
            raise NoConvergence(f"tail mass still above {tail_tol:g} at level {M // 2}")


def oracle_metrics(gen: TruncatedGenerator, pi: np.ndarray) -> PerformanceReport:
    model = gen.model
    J = model.J
    lam = model.arrival_rate
    n_vec = gen.states[:, 1:]
    th = np.zeros(J + 1)
    rates = model.rate_table()
    for j in range(1, J + 1):
        nj = n_vec[:, j]
        dep = np.where(nj > 0, rates[j - 1][np.clip(nj - 1, 0, None)], 0.0)
        th[j] = float(pi @ dep)
    th[0] = float(np.dot(th[1:], model.routing[1:, 0]))
    idle = {j: float(pi[n_vec[:, j] == 0].sum()) for j in range(1, J + 1)}
    l_ex = float(pi @ gen.levels)
    mean_q = np.array([float(pi @ n_vec[:, j]) for j in range(J + 1)])
    return PerformanceReport(
        throughputs=th,
        idle_probabilities=idle,
        l_ex=l_ex,
        w_ex=l_ex / lam,
        mean_queue=mean_q,
        p_ex_empty=level_mass(gen, pi, 0),
    )
