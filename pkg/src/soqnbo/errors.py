"""Exception hierarchy shared by all solvers."""


class SoqnError(Exception):
    """Base class for every error raised by this package."""


class ModelError(SoqnError, ValueError):
    """The model violates a structural invariant."""


class NonStochasticRow(ModelError):
    def __init__(self, row: int, total: float):
        self.row = row
        self.total = total
        super().__init__(f"routing row {row} sums to {total!r}, expected 1")


class Reducible(ModelError):
    def __init__(self, unreachable=()):
        self.unreachable = tuple(unreachable)
        msg = "routing matrix is reducible"
        if self.unreachable:
            msg += f" (nodes outside the main class: {list(self.unreachable)})"
        super().__init__(msg)


class NonPositiveRate(ModelError):
    def __init__(self, node: int, n: int, value: float):
        self.node = node
        self.n = n
        self.value = value
        super().__init__(f"service rate of node {node} at population {n} is {value!r}, must be > 0")


class ZeroSelfLoopViolated(ModelError):
    def __init__(self, value: float):
        self.value = value
        super().__init__(f"r(0,0) must be 0, got {value!r}")


class SingularSystem(SoqnError):
    """Traffic equations could not be solved (numerical failure)."""


class UnsupportedDiscipline(SoqnError, ValueError):
    pass


class StateSpaceTooLarge(SoqnError):
    def __init__(self, size: int, cap: int):
        self.size = size
        self.cap = cap
        super().__init__(f"state space of {size} states exceeds cap {cap}")


class Unstable(SoqnError):
    def __init__(self, arrival_rate: float, lambda_max: float):
        self.arrival_rate = arrival_rate
        self.lambda_max = lambda_max
        super().__init__(
            f"arrival rate {arrival_rate!r} is not below the stability limit {lambda_max!r}"
        )


class NotConstantRate(SoqnError, ValueError):
    def __init__(self, node: int):
        self.node = node
        super().__init__(f"node {node} does not have a constant service rate")


class NoConvergence(SoqnError):
    pass


class UnsupportedN(SoqnError, ValueError):
    def __init__(self, n: int):
        self.n = n
        super().__init__(f"closed form only available for N in {{1, 2}}, got N={n}")


class UnknownNode(SoqnError, KeyError):
    pass
