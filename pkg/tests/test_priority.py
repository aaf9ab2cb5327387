import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sparesnet.errors import UnsupportedSizeError, ValidationError
from sparesnet.experiments import benchmark_config, table_c6
from sparesnet.multi import MultiGoodConfig, evaluate_multi
from sparesnet.priority import (
    PriorityClassSpec,
    birth_death,
    j_class_steady_state,
    level_matrices,
    priority_network_solve,
    priority_shop_solver,
    truncation_level,
    two_class_steady_state,
)
from sparesnet.reference_tables import PRIORITY_K1, PRIORITY_VALUE
from sparesnet.single import SingleGoodConfig, steady_state

from oracles import priority_joint

rates = st.lists(st.floats(0.01, 2.0), min_size=1, max_size=5)


def test_level_matrices_structure():
    lam1, lam2 = [0.4, 0.7], [0.3, 0.9]
    A, B = level_matrices(lam1, lam2, 1.2)
    for k, (Ak, Bk) in enumerate(zip(A, B)):
        up2 = lam2[k] if k < 2 else 0.0
        e1 = np.zeros((3, 3))
        e1[0, :] = 1.0
        assert Bk == pytest.approx(Ak - up2 * e1, abs=0)
        assert np.diag(Ak, -1) == pytest.approx([-0.4, -0.7])
        assert np.diag(Ak, 1) == pytest.approx([-1.2, -1.2])
    # total outflow of (i, k): arrivals of both classes plus service when busy
    assert A[0][0, 0] == pytest.approx(0.4 + 0.3)
    assert A[1][0, 0] == pytest.approx(0.4 + 0.9 + 1.2)
    assert A[2][2, 2] == pytest.approx(1.2)


def test_spec_example_against_joint_chain():
    got = two_class_steady_state([1.0, 1.0], [1.0, 1.0], 1.0)
    ref = priority_joint([[1.0, 1.0], [1.0, 1.0]], 1.0)
    for a, b in zip(got, ref):
        assert a == pytest.approx(b, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(r1=rates, r2=rates, mu=st.floats(0.3, 3.0))
def test_random_instances_against_joint_chain(r1, r2, mu):
    got = two_class_steady_state(r1, r2, mu)
    ref = priority_joint([r1, r2], mu)
    for a, b in zip(got, ref):
        assert np.abs(a - b).max() <= 1e-10
        assert a.min() >= 0.0
        assert a.sum() == pytest.approx(1.0, abs=1e-13)


def test_no_class2_arrivals():
    P1, P2 = two_class_steady_state([1.0, 1.0], [0.0, 0.0], 1.0)
    assert P2 == pytest.approx([1.0, 0.0, 0.0])
    assert P1 == pytest.approx(np.full(3, 1 / 3))


@settings(max_examples=20, deadline=None)
@given(r1=rates, r2=rates, r2b=rates, mu=st.floats(0.3, 3.0))
def test_high_class_blind_to_low_class(r1, r2, r2b, mu):
    a = two_class_steady_state(r1, r2, mu)[0]
    b = two_class_steady_state(r1, r2b, mu)[0]
    assert np.array_equal(a, b)
    assert a == pytest.approx(birth_death(r1, mu), abs=0)


def test_class_spec_validation():
    assert PriorityClassSpec(1, [0.5, 0.2]).S == 2
    with pytest.raises(ValidationError):
        PriorityClassSpec(1, [-0.5])
    with pytest.raises(ValidationError):
        two_class_steady_state([], [1.0], 1.0)
    with pytest.raises(ValidationError):
        two_class_steady_state([1.0], [1.0], 0.0)


def test_two_classes_through_aggregation_entry_point():
    r = [[0.3, 0.2], [0.4, 0.1, 0.3]]
    a = j_class_steady_state(r, 1.0)
    b = two_class_steady_state(*r, 1.0)
    for x, y in zip(a, b):
        assert np.array_equal(x, y)


def test_ranked_specs_reorder():
    hi, lo = PriorityClassSpec(1, [0.3, 0.2]), PriorityClassSpec(2, [0.4, 0.1])
    a = j_class_steady_state([lo, hi], 1.0)
    b = two_class_steady_state(hi, lo, 1.0)
    assert np.array_equal(a[1], b[0]) and np.array_equal(a[0], b[1])


def test_silent_third_class():
    P = j_class_steady_state([[1.0, 1.0], [0.5], [0.0, 0.0]], 1.0)
    assert P[2] == pytest.approx([1.0, 0.0, 0.0])


def test_three_classes_close_to_joint_chain():
    rng = np.random.default_rng(1)
    r = [rng.uniform(0.02, 0.15, 3) for _ in range(3)]
    got = j_class_steady_state(r, 1.0)
    ref = priority_joint(r, 1.0)
    # the top two classes are exact; the third sees a Poisson stand-in for the others
    assert np.abs(got[0] - ref[0]).max() <= 1e-10
    assert np.abs(got[1] - ref[1]).max() <= 1e-10
    assert np.abs(got[2] - ref[2]).max() <= 5e-3


def test_aggregation_rejects_saturated_load():
    with pytest.raises(UnsupportedSizeError):
        truncation_level(1.0, 1.0)
    assert truncation_level(0.5, 1.0) == 34


def test_priority_needs_single_repairman():
    cfg = benchmark_config(PRIORITY_K1[0], 1)
    with pytest.raises(UnsupportedSizeError):
        priority_network_solve(MultiGoodConfig(cfg.goods, 2, 1.0, 0.5))


def test_silent_low_class_reduces_to_single_good():
    # good 2 with no parts never reaches the shop
    cfg = benchmark_config(PRIORITY_K1[0], 1).with_stocks((3, 0))
    res = priority_network_solve(cfg)
    g = cfg.goods[0]
    ref = steady_state(SingleGoodConfig(3, 1, g.tau, 1.0, g.lifetime)).probs
    assert res.goods[0].probs == pytest.approx(ref, abs=1e-6)


def test_priority_helps_the_ranked_good():
    cfg = benchmark_config(PRIORITY_K1[0], 1)
    prio = priority_network_solve(cfg).goods[0].p_down
    fcfs = evaluate_multi(cfg).goods[0].p_down
    assert prio < fcfs


def test_shop_solver_single_class():
    solve = priority_shop_solver(1.0)
    assert solve([[0.5, 0.5]])[0] == pytest.approx(birth_death([0.5, 0.5], 1.0))


def test_priority_row1_published_values():
    res = priority_network_solve(benchmark_config(PRIORITY_K1[0], 1))
    assert res.goods[0].p_down == pytest.approx(0.54, abs=0.01)
    assert res.total_cost == pytest.approx(46.69, rel=0.005)


def test_value_of_priority_first_row_published_costs():
    row = table_c6(rows=[0]).as_dicts()[0]
    assert row["diff_pct"] < 0
    assert row["diff_pct"] == pytest.approx(PRIORITY_VALUE[0][6], abs=2.0)
    assert row["prio_TC"] == pytest.approx(9.55, rel=0.005)
    assert row["fcfs_TC"] == pytest.approx(9.92, rel=0.005)
