import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sparesnet.errors import UnsupportedSizeError, ValidationError
from sparesnet.experiments import benchmark_config
from sparesnet.lifetime import InstallationTime, LifetimeSpec
from sparesnet.multi import (
    GoodSpec,
    MultiGoodConfig,
    evaluate_multi,
    implied_arrival_rates,
    isolated_node_throughputs,
    marie_fixed_point,
    optimize_multi,
    repair_shop_multiclass,
    shop_throughputs,
    subnetwork_product_form,
)
from sparesnet.optimize import optimize_S
from sparesnet.reference_tables import FCFS_K1, FCFS_K5
from sparesnet.single import CostRates, SingleGoodConfig, steady_state

from oracles import birth_death, erlang_ctmc, fcfs_shop_joint

ERL3 = LifetimeSpec.erlang(3, 3.0)


def test_product_form_constant_rates_uniform():
    p, _ = subnetwork_product_form(np.ones(4), np.ones(4), 4)
    assert p == pytest.approx(np.full(5, 0.2), abs=1e-15)


def test_product_form_two_state():
    # weights 1/mu_node(1) for one part at the good and 1/mu_shop(1) for one part at the shop
    p, _ = subnetwork_product_form([2.0], [1.0], 1)
    assert p == pytest.approx([2 / 3, 1 / 3], abs=1e-15)
    lam_node, lam_shop = implied_arrival_rates(p, [2.0], [1.0])
    assert lam_node == pytest.approx([1.0])
    assert lam_shop == pytest.approx([2.0])


def test_product_form_random_rates_by_enumeration():
    rng = np.random.default_rng(3)
    mu_n, mu_s = rng.uniform(0.2, 3.0, 4), rng.uniform(0.2, 3.0, 4)
    w = np.array([np.prod(1 / mu_n[:n]) * np.prod(1 / mu_s[: 4 - n]) for n in range(5)])
    p, T = subnetwork_product_form(mu_n, mu_s, 4)
    assert p == pytest.approx(w / w.sum(), rel=1e-13)
    assert T == pytest.approx(1 / w.sum(), rel=1e-13)


def test_product_form_rejects_nonpositive_rate():
    with pytest.raises(ValidationError, match=r"mu_shop\(2\)"):
        subnetwork_product_form([1.0, 1.0], [1.0, 0.0], 2)


def test_implied_rates_uniform():
    lam_node, lam_shop = implied_arrival_rates(np.full(4, 0.25), np.ones(3), np.ones(3))
    assert lam_node == pytest.approx(np.ones(3))
    assert lam_shop == pytest.approx(np.ones(3))


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0.1, 5.0), min_size=6, max_size=6), st.integers(1, 3))
def test_implied_rates_balance_identity(rates, S):
    mu_n, mu_s = np.array(rates[:S]), np.array(rates[3 : 3 + S])
    p, _ = subnetwork_product_form(mu_n, mu_s, S)
    lam_node, lam_shop = implied_arrival_rates(p, mu_n, mu_s)
    assert lam_node * p[:-1] == pytest.approx(mu_n * p[1:], rel=1e-12)
    rev = p[::-1]
    assert lam_shop * rev[:-1] == pytest.approx(mu_s * rev[1:], rel=1e-12)


def test_zero_probability_rejected():
    with pytest.raises(ValidationError):
        implied_arrival_rates([0.5, 0.5, 0.0], [1, 1], [1, 1])


def test_exponential_node_throughput_is_memoryless():
    ups, _ = isolated_node_throughputs([0.4, 1.1, 2.0], InstallationTime(LifetimeSpec.exponential(1.7)))
    assert ups == pytest.approx(np.full(3, 1.7), rel=1e-11)


def test_single_part_node_throughput():
    inst = InstallationTime(ERL3, 0.5)
    ups, node = isolated_node_throughputs([0.8], inst)
    assert ups[0] == pytest.approx(0.8 * node.probs[0] / node.probs[1], rel=1e-13)


def test_erlang_node_throughput_against_ctmc():
    lam = [1.2, 0.7, 0.3]
    ups, _ = isolated_node_throughputs(lam, InstallationTime(ERL3))
    P = erlang_ctmc(3, 1, 1.0, 3, 3.0, rates=lam + [0.0])
    ref = np.array(lam) * P[:-1] / P[1:]
    assert ups == pytest.approx(ref, rel=1e-9)


def test_shop_single_class_is_birth_death():
    lam = [1.5, 1.0, 0.5, 0.2]
    _, marg, _ = repair_shop_multiclass([lam], 0.9, 2)
    ref = birth_death(lam, [0.9 * min(n, 2) for n in range(1, 5)])
    assert marg[0] == pytest.approx(ref, abs=1e-14)


def test_shop_ample_capacity_factorizes():
    lam = [[1.2, 0.5], [0.8, 0.6, 0.3]]
    joint, marg, _ = repair_shop_multiclass(lam, 1.3, 5)
    ind = [birth_death(l, [1.3 * n for n in range(1, len(l) + 1)]) for l in lam]
    assert joint == pytest.approx(np.outer(ind[0], ind[1]), abs=1e-14)


@pytest.mark.parametrize(
    "lam,K",
    [([[1.0, 1.0], [0.5, 0.5]], 1), ([[0.7, 0.2, 0.5], [1.3, 0.4]], 1), ([[0.7, 0.2, 0.5], [1.3, 0.4]], 2),
     ([[0.3, 0.9], [1.1], [0.4, 0.4]], 2)],
)
def test_shop_matches_queue_order_ctmc(lam, K):
    _, marg, _ = repair_shop_multiclass(lam, 1.1, K)
    for a, b in zip(marg, fcfs_shop_joint(lam, 1.1, K)):
        assert a == pytest.approx(b, abs=1e-12)


def test_shop_state_cap():
    with pytest.raises(UnsupportedSizeError):
        repair_shop_multiclass([np.ones(99)] * 3, 1.0, 1, max_states=10_000)


def test_shop_throughputs_definition():
    lam = np.array([1.0, 0.5])
    marg = np.array([0.5, 0.3, 0.2])
    assert shop_throughputs(lam, marg) == pytest.approx([1.0 * 0.5 / 0.3, 0.5 * 0.3 / 0.2])


def one_good(life, tau, S, K, mu_r=1.0):
    return MultiGoodConfig((GoodSpec(life, tau, S, 5.0, 10.0, 0.25),), K, mu_r, 0.5)


@pytest.mark.parametrize("S,K", [(1, 1), (4, 1), (4, 2), (6, 6)])
def test_one_exponential_good_is_exact(S, K):
    life = LifetimeSpec.exponential(0.8)
    res = evaluate_multi(one_good(life, math.inf, S, K, 0.6))
    ref = steady_state(SingleGoodConfig(S, K, math.inf, 0.6, life)).probs
    assert res.goods[0].probs == pytest.approx(ref, abs=1e-6)


@pytest.mark.parametrize("S,K", [(3, 1), (5, 2)])
def test_one_general_good_reproduces_single_solver(S, K):
    res = evaluate_multi(one_good(ERL3, 0.5, S, K))
    ref = steady_state(SingleGoodConfig(S, K, 0.5, 1.0, ERL3)).probs
    assert res.goods[0].probs == pytest.approx(ref, abs=1e-6)


def test_iterates_are_distributions():
    state = marie_fixed_point(benchmark_config(FCFS_K1[3], 1))
    for vecs in (state.sub_probs, state.shop_marginals, state.node_probs):
        for p in vecs:
            assert p.sum() == pytest.approx(1.0, abs=1e-12)
            assert p.min() >= 0.0


def _monotone(hist):
    return all(b <= a * (1 + 1e-9) + 1e-15 for a, b in zip(hist, hist[1:]))


@pytest.mark.parametrize("row", FCFS_K1[:4] + FCFS_K5[:4], ids=lambda r: str(r[:6]))
def test_residual_monitor_flags_rises(row):
    K = 1 if row in FCFS_K1 else 5
    state = marie_fixed_point(benchmark_config(row, K))
    assert (state.status == "ok") == _monotone(state.residual_history[-5:])


def test_benchmark_residual_tail_monotone():
    bad = []
    for table, K in ((FCFS_K1, 1), (FCFS_K5, 5)):
        for row in table:
            state = marie_fixed_point(benchmark_config(row, K))
            if not _monotone(state.residual_history[-5:]):
                bad.append((K, row[:6], state.residual_history[-5:]))
    assert not bad, f"{len(bad)} of 36 rows have a residual rise in the last five iterations: {bad[:3]}"


def test_zero_stock_good_is_always_down():
    cfg = benchmark_config(FCFS_K1[0], 1).with_stocks((3, 0))
    res = evaluate_multi(cfg)
    assert res.goods[1].p_down == 1.0
    assert res.goods[1].downtime == pytest.approx(cfg.goods[1].C_d)


def test_total_cost_decomposition():
    cfg = benchmark_config(FCFS_K1[5], 1)
    res = evaluate_multi(cfg)
    parts = sum(g.unplanned + g.downtime + g.stock for g in res.goods) + cfg.C_w * cfg.K
    assert res.total_cost == pytest.approx(parts, rel=1e-14)
    for g, spec in zip(res.goods, cfg.goods):
        assert g.unplanned == pytest.approx(
            spec.C_u * g.throughput * spec.p_fail(), rel=1e-14
        )


def test_fcfs_single_server_row1_published_measures():
    res = evaluate_multi(benchmark_config(FCFS_K1[0], 1))
    g1, g2 = res.goods
    assert g1.p_down == pytest.approx(0.63, abs=0.01)
    assert g2.p_down == pytest.approx(0.90, abs=0.01)
    assert g1.expected_inventory == pytest.approx(0.48, abs=0.01)
    assert g2.expected_inventory == pytest.approx(0.10, abs=0.01)


def test_fcfs_five_server_row1_published_measures():
    res = evaluate_multi(benchmark_config(FCFS_K5[0], 5))
    g1 = res.goods[0]
    assert res.total_cost == pytest.approx(14.33, rel=0.005)
    assert g1.p_down == pytest.approx(0.00, abs=0.01)
    assert g1.expected_inventory == pytest.approx(4.51, abs=0.01)


def test_optimize_fcfs_row1_published_stocks():
    best = optimize_multi(benchmark_config(FCFS_K1[0], 1))
    assert best.stocks == (4, 1)
    assert best.total_cost == pytest.approx(47.79, rel=0.005)
    assert best.status == "ok"


@pytest.mark.parametrize("row", [FCFS_K1[7], FCFS_K1[15]], ids=lambda r: str(r[:6]))
def test_optimize_multi_matches_grid(row):
    cfg = benchmark_config(row, 1)
    best = optimize_multi(cfg)
    grid = {s: evaluate_multi(cfg.with_stocks(s)).total_cost for s in itertools.product(range(1, 10), repeat=2)}
    s_star = min(grid, key=grid.get)
    assert best.total_cost == pytest.approx(grid[s_star], rel=1e-12)
    assert best.stocks == s_star


def test_one_good_optimization_reduces_to_optimize_S():
    costs = CostRates(C_u=5.0, C_d=10.0, C_a=0.25, C_w=0.5)
    cfg = one_good(ERL3, 0.5, 0, 1)
    best = optimize_multi(cfg, S_min=0)
    ref = optimize_S(1, 0.5, ERL3, 1.0, costs)
    assert best.stocks == (ref.S_star,)
    assert best.total_cost == pytest.approx(ref.total_cost, rel=1e-7)


def test_optimize_multi_bad_bounds():
    with pytest.raises(ValidationError):
        optimize_multi(benchmark_config(FCFS_K1[0], 1), S_min=5, S_cap=3)


def test_config_validation():
    with pytest.raises(ValidationError):
        MultiGoodConfig((), 1, 1.0)
    with pytest.raises(ValidationError):
        GoodSpec(ERL3, 0.5, -1)
    with pytest.raises(ValidationError):
        GoodSpec(ERL3, 0.5, 1, C_d=-2.0)
    with pytest.raises(ValidationError):
        MultiGoodConfig((GoodSpec(ERL3, 1.0, 1),), 1, 1.0, C_w=-1.0)
