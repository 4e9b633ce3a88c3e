import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from soqnbo.errors import NonPositiveRate, NonStochasticRow, Reducible, ZeroSelfLoopViolated
from soqnbo.netmodel import (
    Node,
    RateFunction,
    SoqnModel,
    check_routing,
    routing_from_sparse,
    solve_traffic,
    stability_routing,
    validate_model,
)

from modelgen import random_routing


def _ring(J):
    r = np.zeros((J + 1, J + 1))
    for i in range(J + 1):
        r[i, (i + 1) % (J + 1)] = 1.0
    return r


def test_rate_function_kinds():
    assert RateFunction.constant(2.0)(5) == 2.0
    assert RateFunction.infinite_server(0.5)(4) == 2.0
    t = RateFunction.from_table([1, 3, 4])
    assert t(2) == 3.0
    assert t(0) == 0.0
    np.testing.assert_allclose(RateFunction.infinite_server(1.0).rates(3), [1, 2, 3])
    assert not RateFunction.from_table([2, 1]).is_nondecreasing(2)


def test_rate_function_round_trip():
    for rf in (RateFunction.constant(0.1), RateFunction.infinite_server(1 / 34.5), RateFunction.from_table([1, 2.5])):
        assert RateFunction.from_dict(rf.to_dict()) == rf


@given(st.integers(0, 2**32 - 1), st.integers(1, 6))
@settings(max_examples=60, deadline=None)
def test_traffic_solution_is_invariant_and_normalised(seed, J):
    r = random_routing(np.random.default_rng(seed), J)
    eta = solve_traffic(r).eta
    assert eta[0] == 1.0
    assert np.all(eta > 0)
    np.testing.assert_allclose(eta @ r, eta, rtol=1e-10, atol=1e-12)


def test_ring_visits_every_node_once():
    np.testing.assert_allclose(solve_traffic(_ring(4)).eta, np.ones(5))


@given(st.integers(0, 2**32 - 1), st.integers(1, 5))
@settings(max_examples=40, deadline=None)
def test_stability_routing_is_stochastic(seed, J):
    r = random_routing(np.random.default_rng(seed), J)
    rp = stability_routing(r)
    np.testing.assert_allclose(rp.sum(axis=1), 1.0, atol=1e-12)
    # the inner visit ratios of the original chain solve the skipped chain too
    eta = solve_traffic(r).eta[1:]
    np.testing.assert_allclose(eta @ rp, eta, rtol=1e-10)


def test_check_routing_errors():
    with pytest.raises(NonStochasticRow) as exc:
        check_routing([[0, 1], [0.5, 0.4]])
    assert exc.value.row == 1
    with pytest.raises(ZeroSelfLoopViolated):
        check_routing([[0.5, 0.5], [1, 0]])
    with pytest.raises(Reducible):
        check_routing([[0, 1, 0], [1, 0, 0], [0, 0, 1]])
    with pytest.raises(NonStochasticRow):
        check_routing([[0, 1.2], [1, -0.2]])


def test_validate_model_rejects_bad_inputs():
    node = Node("a", RateFunction.constant(1.0))
    r = [[0, 1], [1, 0]]
    with pytest.raises(ValueError):
        validate_model(SoqnModel((node,), r, 0, 1.0))
    with pytest.raises(ValueError):
        validate_model(SoqnModel((node,), r, 2, 0.0))
    with pytest.raises(NonPositiveRate):
        validate_model(SoqnModel((Node("a", RateFunction.from_table([1, 0])),), r, 2, 1.0))
    with pytest.raises(ValueError):
        validate_model(SoqnModel((Node("a", RateFunction.from_table([1])),), r, 2, 1.0))


def test_validate_truncates_tables_to_n():
    m = validate_model(SoqnModel((Node("a", RateFunction.from_table([1, 2, 3, 4])),), [[0, 1], [1, 0]], 2, 1.0))
    assert m.nodes[0].rate.table == (1.0, 2.0)


def test_model_equality_and_copies():
    a = SoqnModel((Node("a", RateFunction.constant(1.0)),), [[0, 1], [1, 0]], 2, 1.0)
    b = SoqnModel((Node("a", RateFunction.constant(1.0)),), np.array([[0, 1], [1, 0]]), 2, 1.0)
    assert a == b
    assert a.with_resources(3) != a
    assert a.with_arrival_rate(2.0).arrival_rate == 2.0
    with pytest.raises(ValueError):
        a.routing[0, 1] = 0.5
    assert a.index("a") == 1 and a.index(0) == 0


def test_sparse_routing():
    r = routing_from_sparse(3, [(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)])
    np.testing.assert_array_equal(r, [[0, 1, 0], [0, 0, 1], [1, 0, 0]])
