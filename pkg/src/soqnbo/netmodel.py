"""Semi-open network data model and traffic equations.

Node 0 is always the resource pool; inner nodes are numbered 1..J in the
order they appear in ``SoqnModel.nodes``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import (
    NonPositiveRate,
    NonStochasticRow,
    Reducible,
    SingularSystem,
    ZeroSelfLoopViolated,
)

ROW_TOL = 1e-12
STRUCTURAL_ZERO = 1e-15

CONSTANT = "constant"
INFINITE_SERVER = "infinite-server"
TABLE = "table"
RATE_KINDS = (CONSTANT, INFINITE_SERVER, TABLE)

FCFS = "fcfs-single-server"
PS = "processor-sharing"
DISCIPLINES = (FCFS, PS)


@dataclass(frozen=True)
class RateFunction:
    """Service intensity nu(n) of a node holding n >= 1 resources."""

    kind: str
    base_rate: float = 1.0
    table: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.kind not in RATE_KINDS:
            raise ValueError(f"unknown rate kind {self.kind!r}")
        if self.kind == TABLE:
            if not self.table:
                raise ValueError("table rate function needs a non-empty table")
            object.__setattr__(self, "table", tuple(float(v) for v in self.table))

    @classmethod
    def constant(cls, rate: float) -> "RateFunction":
        return cls(CONSTANT, float(rate))

    @classmethod
    def infinite_server(cls, rate: float) -> "RateFunction":
        return cls(INFINITE_SERVER, float(rate))

    @classmethod
    def from_table(cls, values: Sequence[float]) -> "RateFunction":
        return cls(TABLE, table=tuple(values))

    def __call__(self, n: int) -> float:
        if n <= 0:
            return 0.0
        if self.kind == CONSTANT:
            return self.base_rate
        if self.kind == INFINITE_SERVER:
            return self.base_rate * n
        return self.table[n - 1]

    def rates(self, n_max: int) -> np.ndarray:
        """Vector (nu(1), ..., nu(n_max))."""
        n = np.arange(1, n_max + 1, dtype=float)
        if self.kind == CONSTANT:
            return np.full(n_max, self.base_rate)
        if self.kind == INFINITE_SERVER:
            return self.base_rate * n
        if len(self.table) < n_max:
            raise ValueError(f"rate table has {len(self.table)} entries, need {n_max}")
        return np.asarray(self.table[:n_max], dtype=float)

    def is_nondecreasing(self, n_max: int) -> bool:
        if self.kind != TABLE:
            return True
        return bool(np.all(np.diff(self.rates(n_max)) >= 0))

    def to_dict(self) -> dict:
        if self.kind == TABLE:
            return {"kind": TABLE, "table": list(self.table)}
        return {"kind": self.kind, "base_rate": self.base_rate}

    @classmethod
    def from_dict(cls, d: dict) -> "RateFunction":
        kind = d["kind"]
        if kind == TABLE:
            return cls.from_table(d["table"])
        return cls(kind, float(d["base_rate"]))


@dataclass(frozen=True)
class Node:
    name: str
    rate: RateFunction
    discipline: str = FCFS

    def __post_init__(self):
        if self.discipline not in DISCIPLINES:
            raise ValueError(f"unknown discipline {self.discipline!r}")


@dataclass(frozen=True, eq=False)
class SoqnModel:
    """Inner nodes 1..J, routing over {0..J}, N resources, external Poisson rate."""

    nodes: tuple[Node, ...]
    routing: np.ndarray
    resources: int
    arrival_rate: float
    names: tuple[str, ...] = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        r = np.array(self.routing, dtype=float)
        r.setflags(write=False)
        object.__setattr__(self, "routing", r)
        object.__setattr__(self, "names", ("0",) + tuple(nd.name for nd in self.nodes))

    @property
    def J(self) -> int:
        return len(self.nodes)

    @property
    def N(self) -> int:
        return self.resources

    def index(self, name_or_index) -> int:
        if isinstance(name_or_index, (int, np.integer)):
            return int(name_or_index)
        return self.names.index(name_or_index)

    def rate_table(self, n_max: int | None = None) -> np.ndarray:
        """Array of shape (J, n_max) with entry [j-1, n-1] = nu_j(n)."""
        n_max = self.resources if n_max is None else n_max
        return np.array([nd.rate.rates(n_max) for nd in self.nodes]).reshape(self.J, n_max)

    def with_resources(self, n: int) -> "SoqnModel":
        return replace(self, resources=int(n))

    def with_arrival_rate(self, lam: float) -> "SoqnModel":
        return replace(self, arrival_rate=float(lam))

    def __eq__(self, other):
        if not isinstance(other, SoqnModel):
            return NotImplemented
        return (
            self.nodes == other.nodes
            and self.resources == other.resources
            and self.arrival_rate == other.arrival_rate
            and self.routing.shape == other.routing.shape
            and bool(np.array_equal(self.routing, other.routing))
        )

    __hash__ = None


@dataclass(frozen=True)
class TrafficSolution:
    eta: np.ndarray

    def __getitem__(self, j):
        return self.eta[j]

    def __len__(self):
        return len(self.eta)


def check_routing(routing) -> np.ndarray:
    r = np.asarray(routing, dtype=float)
    if r.ndim != 2 or r.shape[0] != r.shape[1] or r.shape[0] < 2:
        raise ValueError(f"routing must be a square matrix of size >= 2, got shape {r.shape}")
    if np.any(r < 0):
        i = int(np.argwhere(r < 0)[0][0])
        raise NonStochasticRow(i, float(r[i].sum()))
    for i, total in enumerate(r.sum(axis=1)):
        if abs(total - 1.0) > ROW_TOL:
            raise NonStochasticRow(i, float(total))
    if r[0, 0] != 0.0:
        raise ZeroSelfLoopViolated(float(r[0, 0]))
    _check_irreducible(r)
    return r


def _check_irreducible(r: np.ndarray):
    adj = csr_matrix(r > STRUCTURAL_ZERO)
    n_comp, labels = connected_components(adj, directed=True, connection="strong")
    if n_comp > 1:
        main = labels[0]
        raise Reducible(int(i) for i in np.flatnonzero(labels != main))


def validate_model(model: SoqnModel) -> SoqnModel:
    """Check every invariant and return a model with table rates cut to length N."""
    if model.J < 1:
        raise ValueError("model needs at least one inner node")
    if int(model.resources) != model.resources or model.resources < 1:
        raise ValueError(f"resources must be a positive integer, got {model.resources!r}")
    if not model.arrival_rate > 0:
        raise ValueError(f"arrival rate must be positive, got {model.arrival_rate!r}")
    if model.routing.shape != (model.J + 1, model.J + 1):
        raise ValueError(
            f"routing has shape {model.routing.shape}, expected {(model.J + 1, model.J + 1)}"
        )
    check_routing(model.routing)

    n = model.resources
    nodes = []
    for j, nd in enumerate(model.nodes, start=1):
        if nd.rate.kind == TABLE and len(nd.rate.table) < n:
            raise ValueError(
                f"node {j} ({nd.name}) has {len(nd.rate.table)} table rates, need {n}"
            )
        rates = nd.rate.rates(n)
        bad = np.flatnonzero(~(rates > 0))
        if bad.size:
            k = int(bad[0])
            raise NonPositiveRate(j, k + 1, float(rates[k]))
        if nd.rate.kind == TABLE:
            nd = replace(nd, rate=RateFunction.from_table(rates))
        nodes.append(nd)
    return replace(model, nodes=tuple(nodes))


def solve_traffic(routing) -> TrafficSolution:
    """Visit ratios eta = eta R normalised to eta_0 = 1."""
    r = np.asarray(routing, dtype=float)
    k = r.shape[0]
    a = r.T - np.eye(k)
    a[0, :] = 0.0
    a[0, 0] = 1.0
    b = np.zeros(k)
    b[0] = 1.0
    try:
        eta = np.linalg.solve(a, b)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(str(exc)) from exc
    if not np.all(np.isfinite(eta)) or np.any(eta <= 0):
        raise SingularSystem(f"traffic solution not strictly positive: {eta}")
    eta[0] = 1.0
    return TrafficSolution(eta)


def stability_routing(routing) -> np.ndarray:
    """Routing among inner nodes when a visit to node 0 is skipped.

    r'(i,j) = r(i,j) + r(i,0) r(0,j) for i, j in 1..J.
    """
    r = np.asarray(routing, dtype=float)
    return r[1:, 1:] + np.outer(r[1:, 0], r[0, 1:])


def routing_from_sparse(size: int, triples) -> np.ndarray:
    r = np.zeros((size, size))
    for i, j, p in triples:
        r[i, j] += p
    return r
