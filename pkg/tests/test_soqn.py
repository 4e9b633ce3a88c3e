import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from soqnbo import soqn
from soqnbo.errors import NotConstantRate, Unstable, UnsupportedN
from soqnbo.netmodel import Node, RateFunction, SoqnModel, solve_traffic, validate_model

from modelgen import brute_lc_pool_empty, brute_norm_constant, models, random_model


def toy(rate=2.0, lam=1.0, n=1):
    return validate_model(SoqnModel((Node("a", RateFunction.constant(rate)),), [[0, 1], [1, 0]], n, lam))


def test_toy_values():
    m = toy()
    assert soqn.lambda_bo_max(m) == pytest.approx(2.0)
    assert soqn.lambda_eff(m, 2.0) == pytest.approx(1.0)
    assert soqn.pi_lc_empty(m, 2.0) == pytest.approx(0.5)
    assert soqn.adjust_lambda_lc(m).lambda_lc == pytest.approx(2.0, rel=1e-9)
    assert soqn.closed_form_lambda_lc(m) == pytest.approx(2.0, rel=1e-12)
    np.testing.assert_allclose(soqn.throughputs_bo(m), [1.0, 1.0])
    assert soqn.idle_probabilities_bo(m) == {1: pytest.approx(0.5)}


@given(models(J_max=3, N_max=5))
@settings(max_examples=30, deadline=None)
def test_lambda_max_from_enumerated_constants(model):
    eta0 = solve_traffic(model.routing).eta[0]
    want = eta0 * brute_norm_constant(model, model.N - 1) / brute_norm_constant(model, model.N)
    assert math.isclose(soqn.lambda_bo_max(model), want, rel_tol=1e-10)


def test_stability_boundary_is_unstable():
    m = toy()
    assert soqn.is_stable(m).stable
    at = m.with_arrival_rate(soqn.lambda_bo_max(m))
    assert not soqn.is_stable(at).stable
    with pytest.raises(Unstable):
        soqn.throughputs_bo(at)
    with pytest.raises(Unstable):
        soqn.adjust_lambda_lc(at)


def test_idle_needs_constant_rate():
    model = validate_model(SoqnModel(
        (Node("a", RateFunction.infinite_server(1.0)), Node("b", RateFunction.constant(3.0))),
        [[0, 1, 0], [0, 0, 1], [1, 0, 0]], 3, 0.5))
    assert list(soqn.idle_probabilities_bo(model)) == [2]
    with pytest.raises(NotConstantRate):
        soqn.idle_probabilities_bo(model, nodes=["a"])


@given(models(J_max=3, N_max=4), st.floats(0.05, 20.0))
@settings(max_examples=40, deadline=None)
def test_lambda_eff_matches_enumeration(model, lam):
    want = lam * (1.0 - brute_lc_pool_empty(model, lam))
    assert math.isclose(soqn.lambda_eff(model, lam), want, rel_tol=1e-9)
    assert soqn.lambda_eff(model, lam) < lam


@given(models(J_max=4, N_max=12))
@settings(max_examples=60, deadline=None)
def test_adjustment_residual(model):
    res = soqn.adjust_lambda_lc(model)
    assert abs(soqn.lambda_eff(model, res.lambda_lc) - model.arrival_rate) <= 1e-10 * model.arrival_rate
    assert res.lambda_lc > model.arrival_rate
    assert not res.uniqueness_unverified


@given(models(J_max=3, N_max=2))
@settings(max_examples=40, deadline=None)
def test_closed_forms(model):
    adj = soqn.adjust_lambda_lc(model, tol=1e-13).lambda_lc
    assert math.isclose(soqn.closed_form_lambda_lc(model), adj, rel_tol=1e-9)


def test_closed_form_rejects_large_n():
    with pytest.raises(UnsupportedN):
        soqn.closed_form_lambda_lc(toy(n=3, lam=0.5))


@given(models(J_max=3, N_max=6))
@settings(max_examples=30, deadline=None)
def test_equal_throughput_after_adjustment(model):
    lam_lc = soqn.adjust_lambda_lc(model).lambda_lc
    np.testing.assert_allclose(soqn.throughputs_lc(model, lam_lc), soqn.throughputs_bo(model), rtol=1e-9)


def test_non_monotone_rates_are_flagged():
    m = validate_model(SoqnModel((Node("a", RateFunction.from_table([3.0, 0.5, 2.0])),), [[0, 1], [1, 0]], 3, 1.0))
    res = soqn.adjust_lambda_lc(m)
    assert res.uniqueness_unverified
    assert abs(soqn.lambda_eff(m, res.lambda_lc) - 1.0) <= 1e-10


def test_lc_idle_probabilities_at_adjusted_rate():
    m = random_model(np.random.default_rng(5), J=2, N=4, kinds=("constant",))
    lam_lc = soqn.adjust_lambda_lc(m, tol=1e-13).lambda_lc
    lc = soqn.idle_probabilities_lc(m, lam_lc)
    bo = soqn.idle_probabilities_bo(m)
    for j in bo:
        assert lc[j] == pytest.approx(bo[j], rel=1e-9)
