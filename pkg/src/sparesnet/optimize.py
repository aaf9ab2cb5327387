"""Policy search over stock level, repair capacity and age threshold."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import ConvergenceError, ValidationError
from .lifetime import InstallationTime, from_mean_cv, installation_rate
from .single import CostRates, SingleGoodConfig, steady_state

S_CAP = 200
K_CAP = 50
DEFAULT_TAU_GRID = (0.25, 0.5, 1.0, 1.25, 1.5, 1.75, 2.0, math.inf)
TIE_RTOL = 1e-12


@dataclass(frozen=True)
class TraceEntry:
    S: int
    K: int
    tau: float
    cost: float
    p0: float
    bound: float = math.nan


@dataclass
class PolicySearchResult:
    S_star: int
    K_star: int
    tau_star: float
    total_cost: float
    trace: list = field(default_factory=list)
    status: str = "ok"


@lru_cache(maxsize=200_000)
def _p0(lifetime, tau, mu_r, S, K):
    return steady_state(SingleGoodConfig(S, K, tau, mu_r, lifetime)).p_down


@lru_cache(maxsize=4096)
def _rates(lifetime, tau):
    inst = InstallationTime(lifetime, tau)
    p_fail = float(lifetime.cdf(tau)) if math.isfinite(tau) else 1.0
    return installation_rate(inst), p_fail


def clear_cache():
    _p0.cache_clear()
    _rates.cache_clear()


def down_probability(S, K, tau, lifetime, mu_r):
    """Cached ``P(0)`` for the policy ``(S, K, tau)``."""
    return _p0(lifetime, float(tau), float(mu_r), int(S), int(K))


def policy_cost(S, K, tau, lifetime, mu_r, costs):
    """Total cost rate and ``P(0)`` of one policy."""
    p0 = down_probability(S, K, tau, lifetime, mu_r)
    mu, pf = _rates(lifetime, float(tau))
    cost = costs.C_u * mu * (1.0 - p0) * pf + costs.C_d * p0 + costs.C_a * S + costs.C_w * K
    return cost, p0


def _better(a, b):
    if math.isinf(b):
        return a < b
    return a < b - TIE_RTOL * max(abs(b), 1.0)


def _check_common(tau, mu_r, costs):
    if not isinstance(costs, CostRates):
        raise ValidationError("costs must be a CostRates instance")
    if not (tau > 0):
        raise ValidationError(f"tau must be positive, got {tau}")
    if not (mu_r > 0 and math.isfinite(mu_r)):
        raise ValidationError(f"mu_r must be positive and finite, got {mu_r}")


def _operating_bound(p_lo, p_hi, mu, pf, costs):
    """Smallest value of ``C_d p + C_u mu F (1 - p)`` for ``p`` in ``[p_lo, p_hi]`` (linear, so an endpoint)."""
    f = lambda p: costs.C_d * p + costs.C_u * mu * pf * (1.0 - p)
    return min(f(p_lo), f(p_hi))


def optimize_S(K, tau, lifetime, mu_r, costs, S_cap=S_CAP):
    """Best stock level for fixed ``K`` and ``tau``.

    Ascends ``S`` from 0.  Since ``P(0)`` is nonincreasing in ``S`` and the
    throughput ``mu (1 - P(0))`` can never exceed ``K mu_r``, every larger
    stock level costs at least ``C_a S + C_w K`` plus the smallest operating
    cost for ``P(0)`` between ``max(0, 1 - K mu_r / mu)`` and the current
    ``P(0)``.  The search stops once that bound reaches the incumbent.
    """
    _check_common(tau, mu_r, costs)
    if not (isinstance(K, (int, np.integer)) and K >= 1):
        raise ValidationError(f"K must be a positive integer, got {K}")
    mu, pf = _rates(lifetime, float(tau))
    floor = max(0.0, 1.0 - K * mu_r / mu)
    best_S, best = None, math.inf
    trace = []
    for S in range(0, S_cap + 1):
        cost, p0 = policy_cost(S, K, tau, lifetime, mu_r, costs)
        bound = _operating_bound(floor, p0, mu, pf, costs) + costs.C_a * S + costs.C_w * K
        trace.append(TraceEntry(S, int(K), float(tau), cost, p0, bound))
        if _better(cost, best):
            best_S, best = S, cost
        if bound >= best:
            return PolicySearchResult(best_S, int(K), float(tau), best, trace)
    raise ConvergenceError(
        f"stock search reached S={S_cap} without the lower bound passing the incumbent "
        f"(bound {trace[-1].bound:.6g} < best {best:.6g}); C_a may be too small",
        residual=best - trace[-1].bound,
        iterations=S_cap,
    )


def _ample_operating_floor(tau, lifetime, mu_r, costs, budget, S_cap):
    """Lower bound on ``C_a S + operating cost`` over every ``S`` and every ``K``.

    For fixed ``S`` the smallest ``P(0)`` over all capacities is reached at
    ``K = S``.  Stock levels with ``C_a S >= budget`` cannot matter.
    """
    mu, pf = _rates(lifetime, float(tau))
    m = costs.C_d  # S = 0
    for S in range(1, S_cap + 1):
        if costs.C_a * S >= min(m, budget):
            # every skipped stock level costs at least C_a S >= min(m, budget)
            return min(m, budget)
        p_lo = down_probability(S, S, tau, lifetime, mu_r)
        m = min(m, costs.C_a * S + _operating_bound(p_lo, 1.0, mu, pf, costs))
    return min(m, costs.C_a * (S_cap + 1) + _operating_bound(0.0, 1.0, mu, pf, costs))


def optimize_S_K(tau, lifetime, mu_r, costs, S_cap=S_CAP, K_cap=K_CAP):
    """Best ``(S, K)`` for fixed ``tau``.

    Ascends ``K`` from 1, solving the stock problem at each capacity, and
    stops when ``C_w K`` plus a capacity-free floor on the remaining cost
    reaches the incumbent.
    """
    _check_common(tau, mu_r, costs)
    trace = []
    candidates = []
    floor = None
    for K in range(1, K_cap + 1):
        res = optimize_S(K, tau, lifetime, mu_r, costs, S_cap=S_cap)
        trace.extend(res.trace)
        candidates.append(res)
        best = min(c.total_cost for c in candidates)
        if floor is None:
            floor = _ample_operating_floor(tau, lifetime, mu_r, costs, best, S_cap)
        if costs.C_w * (K + 1) + floor >= best:
            break
    else:
        raise ConvergenceError(
            f"capacity search reached K={K_cap} without the lower bound passing the incumbent",
            residual=math.nan,
            iterations=K_cap,
        )
    chosen = candidates[0]
    for c in candidates[1:]:
        if _better(c.total_cost, chosen.total_cost) or (
            not _better(chosen.total_cost, c.total_cost) and (c.S_star, c.K_star) < (chosen.S_star, chosen.K_star)
        ):
            chosen = c
    return PolicySearchResult(chosen.S_star, chosen.K_star, float(tau), chosen.total_cost, trace)


def _pick(results):
    best = None
    for r in results:
        if best is None or _better(r.total_cost, best.total_cost) or (
            not _better(best.total_cost, r.total_cost)
            and (r.tau_star, r.S_star, r.K_star) < (best.tau_star, best.S_star, best.K_star)
        ):
            best = r
    return best


def optimize_policy(tau_grid, lifetime, mu_r, costs, K=None, S_cap=S_CAP, K_cap=K_CAP):
    """Best ``(S, K, tau)`` over a threshold grid; ties go to smaller ``tau``, then ``S``, then ``K``.

    With ``K`` given the capacity is held fixed and only ``(S, tau)`` is searched.
    """
    grid = sorted(float(t) for t in tau_grid)
    if not grid:
        raise ValidationError("tau_grid must not be empty")
    if any(not t > 0 for t in grid):
        raise ValidationError("tau_grid entries must be positive")
    results = []
    for tau in grid:
        if K is None:
            results.append(optimize_S_K(tau, lifetime, mu_r, costs, S_cap=S_cap, K_cap=K_cap))
        else:
            results.append(optimize_S(K, tau, lifetime, mu_r, costs, S_cap=S_cap))
    best = _pick(results)
    trace = [e for r in results for e in r.trace]
    return PolicySearchResult(best.S_star, best.K_star, best.tau_star, best.total_cost, trace)


def exhaustive_search(tau_grid, lifetime, mu_r, costs, S_range, K_range):
    """Brute-force minimum over the box, with the same tie-break as :func:`optimize_policy`."""
    best = None
    for tau in sorted(float(t) for t in tau_grid):
        for K in K_range:
            for S in S_range:
                cost, _ = policy_cost(S, K, tau, lifetime, mu_r, costs)
                cand = PolicySearchResult(S, K, tau, cost)
                best = _pick([best, cand]) if best is not None else cand
    return best


# -- lifetime misspecification -----------------------------------------------

TEST_BED = {
    "C_d": (5.0, 10.0, 20.0, 40.0),
    "C_u": (1.0, 5.0, 10.0, 20.0),
    "cv": (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9),
    "L": (1.0, 2.0, 3.0, 4.0),
    "K": (1, 2, 3, 4, 5),
}
ROBUSTNESS_MEAN = 2.0
ROBUSTNESS_C_A = 0.25
ROBUSTNESS_C_W = 0.75


@dataclass(frozen=True)
class RobustnessInstance:
    true_family: str
    assumed_family: str
    C_d: float
    C_u: float
    cv: float
    L: float
    K: int


@dataclass
class RobustnessRecord:
    instance: RobustnessInstance
    true_policy: tuple
    assumed_policy: tuple
    true_cost: float
    implemented_cost: float
    penalty_pct: float


def robustness_bed(true_family, assumed_family, cost_grid=None, cv_grid=None, L_grid=None, K_grid=None):
    """Full Cartesian bed (``L = 1/mu_r``)."""
    Cd = cost_grid[0] if cost_grid else TEST_BED["C_d"]
    Cu = cost_grid[1] if cost_grid else TEST_BED["C_u"]
    cvs = cv_grid or TEST_BED["cv"]
    Ls = L_grid or TEST_BED["L"]
    Ks = K_grid or TEST_BED["K"]
    return [
        RobustnessInstance(true_family, assumed_family, float(cd), float(cu), float(cv), float(L), int(K))
        for cd, cu, cv, L, K in itertools.product(Cd, Cu, cvs, Ls, Ks)
    ]


def stratified_subsample(instances, n, seed=0):
    """``n`` distinct instances in which every level of every axis appears equally often (up to rounding).

    Each axis column is an independently shuffled, balanced repetition of
    its levels; rows that collide are repaired by swapping entries between
    rows, which keeps every column balanced.
    """
    if n >= len(instances):
        return list(instances)
    rng = np.random.default_rng(seed)
    axes = ("C_d", "C_u", "cv", "L", "K")
    levels = {a: sorted({getattr(i, a) for i in instances}) for a in axes}
    lookup = {tuple(getattr(i, a) for a in axes): i for i in instances}
    cols = [rng.permutation(np.resize(np.arange(len(levels[a])), n)) for a in axes]
    rows = np.stack(cols, axis=1)
    for _ in range(100 * n):
        seen = {}
        dup = None
        for r in range(n):
            key = tuple(rows[r])
            if key in seen:
                dup = r
                break
            seen[key] = r
        if dup is None:
            break
        col = rng.integers(len(axes))
        other = rng.integers(n)
        rows[dup, col], rows[other, col] = rows[other, col], rows[dup, col]
    else:
        raise ValidationError(f"could not draw {n} distinct balanced instances")
    return [lookup[tuple(levels[a][rows[r, j]] for j, a in enumerate(axes))] for r in range(n)]


def _instance_lifetime(family, cv, mean=ROBUSTNESS_MEAN):
    return from_mean_cv(family, mean, cv)


def evaluate_instance(inst, tau_grid=DEFAULT_TAU_GRID, C_a=ROBUSTNESS_C_A, C_w=ROBUSTNESS_C_W, mean=ROBUSTNESS_MEAN):
    """Optimise under the assumed lifetime, price that policy under the true one."""
    costs = CostRates(C_u=inst.C_u, C_d=inst.C_d, C_a=C_a, C_w=C_w)
    mu_r = 1.0 / inst.L
    true_life = _instance_lifetime(inst.true_family, inst.cv, mean)
    assumed_life = _instance_lifetime(inst.assumed_family, inst.cv, mean)
    opt_true = optimize_policy(tau_grid, true_life, mu_r, costs, K=inst.K)
    opt_assumed = optimize_policy(tau_grid, assumed_life, mu_r, costs, K=inst.K)
    implemented, _ = policy_cost(opt_assumed.S_star, inst.K, opt_assumed.tau_star, true_life, mu_r, costs)
    pct = 100.0 * (implemented - opt_true.total_cost) / opt_true.total_cost
    return RobustnessRecord(
        inst,
        (opt_true.S_star, opt_true.tau_star),
        (opt_assumed.S_star, opt_assumed.tau_star),
        opt_true.total_cost,
        implemented,
        pct,
    )


def robustness_experiment(true_family, assumed_family, mean=ROBUSTNESS_MEAN, cv_grid=None, cost_grid=None,
                          mu_r_grid=None, K_grid=None, tau_grid=DEFAULT_TAU_GRID, max_instances=None, seed=0):
    """Percentage cost penalty of planning with the wrong lifetime family.

    Returns ``(records, summary)`` where ``summary`` maps
    ``(axis, value)`` to ``(average, maximum)`` and ``("all", None)`` to the
    overall pair.
    """
    L_grid = tuple(1.0 / m for m in mu_r_grid) if mu_r_grid else None
    bed = robustness_bed(true_family, assumed_family, cost_grid, cv_grid, L_grid, K_grid)
    if max_instances is not None:
        bed = stratified_subsample(bed, max_instances, seed=seed)
    records = [evaluate_instance(i, tau_grid=tau_grid, mean=mean) for i in bed]
    return records, summarize_penalties(records)


def summarize_penalties(records):
    summary = {}
    pct = np.array([r.penalty_pct for r in records])
    if len(pct):
        summary[("all", None)] = (float(pct.mean()), float(pct.max()))
    for axis in ("C_d", "C_u", "cv", "L", "K"):
        groups = {}
        for r in records:
            groups.setdefault(getattr(r.instance, axis), []).append(r.penalty_pct)
        for value in sorted(groups):
            v = np.array(groups[value])
            summary[(axis, value)] = (float(v.mean()), float(v.max()))
    return summary
