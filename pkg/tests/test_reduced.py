import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from soqnbo.errors import Unstable
from soqnbo.reduced import approximate_external, norton_reduce, reduced_bo_distribution, reduced_from_rates

from modelgen import models


def test_single_server_is_mm1_like():
    # one resource, constant rate 2, lambda 1: C_BO = 1 + (1/2)/(1 - 1/2) = 2
    red = reduced_from_rates([2.0], 1.0)
    dist = reduced_bo_distribution(red)
    assert dist.norm_const == pytest.approx(2.0)
    assert dist.external_pmf(0) == pytest.approx(0.75)
    rep = approximate_external(red)
    assert rep.l_ex == pytest.approx(0.5)
    assert rep.w_ex == pytest.approx(0.5)
    assert rep.exact


@given(st.lists(st.floats(0.2, 5.0), min_size=1, max_size=6), st.floats(0.05, 0.95))
@settings(max_examples=60, deadline=None)
def test_distribution_sums_to_one(rates, load):
    rates = np.sort(rates)
    red = reduced_from_rates(rates, load * rates[-1])
    dist = reduced_bo_distribution(red)
    n = dist.N
    total = sum(dist.pmf(0, n - k, k) for k in range(n + 1))
    total += dist.saturated_prob() - dist.pmf(0, 0, n)
    assert math.isclose(total, 1.0, rel_tol=1e-10)
    rep = approximate_external(red)
    # L_ex from the explicit geometric sum
    lex = sum(k * dist.external_pmf(k) for k in range(1, 4000))
    assert math.isclose(rep.l_ex, lex, rel_tol=1e-8, abs_tol=1e-14)
    assert rep.w_ex * red.arrival_rate == pytest.approx(rep.l_ex)


def test_pmf_outside_state_space_is_zero():
    dist = reduced_bo_distribution(reduced_from_rates([1.0, 2.0], 1.0))
    assert dist.pmf(1, 1, 1) == 0.0
    assert dist.pmf(0, 3, 0) == 0.0


def test_unstable_reduced_model():
    with pytest.raises(Unstable):
        reduced_bo_distribution(reduced_from_rates([1.0, 2.0], 2.0))


@given(models(J_max=3, N_max=6))
@settings(max_examples=30, deadline=None)
def test_norton_profile_limit_is_lambda_max(model):
    from soqnbo.soqn import lambda_bo_max

    red = norton_reduce(model)
    assert red.phi[0] == 0.0
    assert math.isclose(red.phi[model.N], lambda_bo_max(model), rel_tol=1e-12)
    assert red.exact == (model.J == 1)
