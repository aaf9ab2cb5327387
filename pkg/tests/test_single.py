import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sparesnet.errors import ValidationError
from sparesnet.lifetime import InstallationTime, LifetimeSpec, from_mean_cv
from sparesnet.single import (
    CostRates,
    SingleGoodConfig,
    cost_rate,
    general_rate_node,
    p0_closed_form,
    remaining_service_transforms_ample,
    remaining_service_transforms_capacitated,
    steady_state,
)

from oracles import embedded_chain, erlang_ctmc, machine_repairman

EXP1 = LifetimeSpec.exponential(1.0)
ERL3 = LifetimeSpec.erlang(3, 3.0)


def cfg(S, K=1, tau=math.inf, mu_r=1.0, life=EXP1):
    return SingleGoodConfig(S, K, tau, mu_r, life)


def test_remaining_service_first_step_exponential():
    table = remaining_service_transforms_ample(cfg(2, 2))
    assert table.G[1] == pytest.approx(0.5, abs=1e-14)
    assert table.R[1] == pytest.approx(1.0, abs=1e-14)


def test_remaining_service_exponential_is_memoryless():
    # every residual installation time of an exponential(1) part has mean 1
    table = remaining_service_transforms_ample(cfg(5, 5))
    assert table.R[1:] == pytest.approx(np.ones(4), abs=1e-12)


def test_path_preconditions():
    with pytest.raises(ValidationError):
        remaining_service_transforms_capacitated(cfg(2, 2))
    with pytest.raises(ValidationError):
        remaining_service_transforms_ample(cfg(3, 2))


def test_trivial_stock_levels():
    assert steady_state(cfg(0)).probs == pytest.approx([1.0])
    assert steady_state(cfg(1)).probs == pytest.approx([0.5, 0.5], abs=1e-14)
    assert steady_state(cfg(2, 2)).probs == pytest.approx([0.2, 0.4, 0.4], abs=1e-14)


def test_closed_form_p0():
    assert p0_closed_form(cfg(2, 2)) == pytest.approx(0.2, abs=1e-14)
    with pytest.raises(ValidationError):
        p0_closed_form(cfg(1))


@pytest.mark.parametrize("S,K", [(3, 3), (3, 1), (5, 2), (6, 6)])
@pytest.mark.parametrize("tau", [0.5, 1.0, math.inf])
def test_erlang_threshold_against_embedded_chain(S, K, tau):
    c = cfg(S, K, tau, 1.0, ERL3)
    ref = embedded_chain(c.arrival_rates()[:S], ERL3.dist, tau)
    assert steady_state(c).probs == pytest.approx(ref, abs=1e-9)


@pytest.mark.parametrize("S,K", [(1, 1), (3, 2), (5, 1), (7, 4)])
def test_erlang_without_threshold_against_ctmc(S, K):
    life = LifetimeSpec.erlang(2, 1.5)
    ref = erlang_ctmc(S, K, 0.7, 2, 1.5)
    assert steady_state(cfg(S, K, math.inf, 0.7, life)).probs == pytest.approx(ref, abs=1e-10)


@pytest.mark.parametrize("S", [2, 4, 8])
def test_machine_repairman(S):
    for K in (1, 2, 5):
        got = steady_state(cfg(S, K, math.inf, 0.6, LifetimeSpec.exponential(1.3))).probs
        assert got == pytest.approx(machine_repairman(S, K, 0.6, 1.3), abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(
    S=st.integers(2, 12),
    K=st.integers(1, 6),
    tau=st.floats(0.2, 4.0),
    mu_r=st.floats(0.2, 3.0),
    cv=st.floats(0.2, 1.2),
    family=st.sampled_from(["gamma", "weibull"]),
)
def test_closed_form_agrees_with_solver(S, K, tau, mu_r, cv, family):
    c = cfg(S, K, tau, mu_r, from_mean_cv(family, 1.5, cv))
    state = steady_state(c)
    assert abs(p0_closed_form(c) - state.p_down) < 1e-8
    assert state.probs.sum() == pytest.approx(1.0, abs=1e-12)
    assert state.probs.min() >= -1e-12


@settings(max_examples=30, deadline=None)
@given(S=st.integers(1, 15), K=st.integers(1, 8), tau=st.floats(0.2, 3.0), mu_r=st.floats(0.2, 3.0))
def test_flow_balance(S, K, tau, mu_r):
    # repairs leave the shop as fast as parts are installed
    c = cfg(S, K, tau, mu_r, ERL3)
    st_ = steady_state(c)
    lam = c.arrival_rates()
    assert np.dot(lam, st_.probs) == pytest.approx(st_.throughput, rel=1e-9)
    assert st_.throughput == pytest.approx(st_.mu * (1 - st_.p_down), rel=1e-12)


def test_verified_path_matches_divided_differences():
    c = cfg(9, 3, 0.8, 1.0, from_mean_cv("weibull", 1.0, 0.4))
    state = steady_state(c)
    node = general_rate_node(c.arrival_rates()[:9], c.installation)
    assert state.status == "ok"
    assert state.probs == pytest.approx(node.probs, abs=1e-10)


def test_large_stock_falls_back_visibly():
    c = cfg(60, 2, 0.3, 1.0, from_mean_cv("gamma", 2.0, 0.1))
    state = steady_state(c)
    assert state.status in ("ok", "degraded")
    assert state.probs.sum() == pytest.approx(1.0, abs=1e-10)
    assert np.all(state.probs >= -1e-12)


def test_cost_rate_two_state():
    costs = CostRates(C_u=0.0, C_d=20.0, C_a=0.25, C_w=0.5)
    c = cost_rate(cfg(1), costs)
    assert c.total == pytest.approx(10.75, abs=1e-12)
    assert (c.downtime, c.stock, c.capacity) == pytest.approx((10.0, 0.25, 0.5))


def test_cost_rate_zero_rates():
    assert cost_rate(cfg(4, 2, 1.0, 1.0, ERL3), CostRates()).total == 0.0


def test_holding_cost_is_not_in_objective():
    c = cfg(3, 1, 1.0, 1.0, ERL3)
    a = cost_rate(c, CostRates(C_u=1, C_d=2, C_a=0.3, C_w=0.4))
    b = cost_rate(c, CostRates(C_u=1, C_d=2, C_a=0.3, C_w=0.4, C_h=9.0))
    assert a == b


def test_unplanned_cost_counts_only_failures():
    c = cfg(3, 1, 0.5, 1.0, ERL3)
    state = steady_state(c)
    br = cost_rate(c, CostRates(C_u=7.0), state)
    assert br.unplanned == pytest.approx(7.0 * state.throughput * ERL3.cdf(0.5), rel=1e-12)


def test_config_validation():
    with pytest.raises(ValidationError):
        cfg(-1)
    with pytest.raises(ValidationError):
        cfg(2, 0)
    with pytest.raises(ValidationError):
        cfg(2, 1, 0.0)
    with pytest.raises(ValidationError):
        cfg(2, 1, 1.0, -1.0)
    with pytest.raises(ValidationError):
        CostRates(C_u=-1)


def test_general_rate_node_with_exponential_matches_birth_death():
    rates = [0.3, 1.7, 0.9, 2.2]
    node = general_rate_node(rates, InstallationTime(LifetimeSpec.exponential(1.1)))
    w = np.cumprod([1.0] + [r / 1.1 for r in rates])
    assert node.probs == pytest.approx(w / w.sum(), abs=1e-13)
    assert node.throughputs[1:] == pytest.approx(np.full(4, 1.1), rel=1e-10)


def test_general_rate_node_equal_rates_match_embedded_chain():
    rates = [2.0, 2.0, 2.0, 1.0, 1.0]
    node = general_rate_node(rates, InstallationTime(ERL3, 0.7))
    assert node.probs == pytest.approx(embedded_chain(rates, ERL3.dist, 0.7), abs=1e-10)


def test_general_rate_node_survives_internal_rescaling():
    # fast repair and a large stock push the unnormalised weights past 1e150
    c = cfg(28, 7, 1.0, 4.0, from_mean_cv("gamma", 1.0, 0.3))
    lam = c.arrival_rates()
    node = general_rate_node(lam[:28], c.installation, scale=lam[0])
    rec = steady_state(c, verify=False)
    assert node.probs[0] < 1e-100
    assert node.probs == pytest.approx(rec.probs, abs=1e-12)
    assert steady_state(c).status == "ok"


def test_p_down_monotone_at_large_stock():
    life = from_mean_cv("gamma", 1.0, 0.3)
    P = np.array([[steady_state(cfg(S, K, 1.0, 4.0, life)).p_down for K in range(5, 11)] for S in range(22, 31)])
    assert (np.diff(P, axis=0) <= 1e-15).all()
    assert (np.diff(P, axis=1) <= 1e-15).all()
