"""Preset experiments that regenerate the published benchmark tables and sweep grids.

Each preset returns a :class:`Table` (column names plus rows of plain
values); rendering lives in :mod:`sparesnet.cli`.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ValidationError
from .multi import GoodSpec, MultiGoodConfig, evaluate_multi, optimize_multi
from .optimize import optimize_S, robustness_experiment
from .priority import priority_shop_solver
from .reference_tables import (
    C_W,
    FCFS_K1,
    FCFS_K5,
    GOOD1_COSTS,
    GOOD1_LIFETIME,
    GOOD2_C_A,
    GOOD2_LIFETIME,
    MU_R,
    PRIORITY_K1,
    PRIORITY_VALUE,
)
from .sim import SimConfig, simulate
from .single import CostRates, SingleGoodConfig, cost_rate, steady_state

PRESETS = ("table-b3", "table-b4", "table-b5", "table-a2", "table-c6", "figure-sweeps")
DESK_INSTANCES = 320
PRIORITY_TAU_GRID = (1.0, 2.0, 3.0, 4.0, 5.0)
FIGURE_TAU_GRID = (0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0)
FIGURE_K_GRID = (1, 2, 3, 4, 5)
FIGURE_COSTS = ((10.0, 20.0), (10.0, 40.0), (20.0, 20.0), (20.0, 40.0))
FIGURE_LIFETIME = GOOD1_LIFETIME
FIGURE_C_A = 0.25
FIGURE_C_W = 0.75


@dataclass
class Table:
    name: str
    columns: list
    rows: list = field(default_factory=list)

    def column(self, name):
        i = self.columns.index(name)
        return [r[i] for r in self.rows]

    def as_dicts(self):
        return [dict(zip(self.columns, r)) for r in self.rows]


def _map(fn, items, jobs=1):
    """Ordered map, optionally over worker processes."""
    items = list(items)
    if jobs is None or jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


# -- two-good benchmark tables --------------------------------------------------

_B_TABLES = {
    "table-b3": (FCFS_K1, 1, "fcfs"),
    "table-b4": (FCFS_K5, 5, "fcfs"),
    "table-b5": (PRIORITY_K1, 1, "priority"),
}
_MEASURES = ("P1_0", "E_I1", "P2_0", "E_I2", "TC")


def benchmark_config(row, K):
    """Two-good network for one benchmark row ``(C2_u, C2_d, tau_1, tau_2, S_1, S_2, ...)``."""
    cu, cd, t1, t2, s1, s2 = row[:6]
    g1 = GoodSpec(GOOD1_LIFETIME, float(t1), int(s1), name="good1", **GOOD1_COSTS)
    g2 = GoodSpec(GOOD2_LIFETIME, float(t2), int(s2), float(cu), float(cd), GOOD2_C_A, name="good2")
    return MultiGoodConfig((g1, g2), K, MU_R, C_W)


def _solver(discipline):
    return priority_shop_solver(MU_R) if discipline == "priority" else None


def _b_row(args):
    row, K, discipline, sim_opts, optimize = args
    cfg = benchmark_config(row, K)
    shop = _solver(discipline)
    res = evaluate_multi(cfg, shop_solver=shop)
    g1, g2 = res.goods
    out = list(row[:6]) + [g1.p_down, g1.expected_inventory, g2.p_down, g2.expected_inventory, res.total_cost]
    if sim_opts is not None:
        sim = simulate(SimConfig(cfg, discipline=discipline, **sim_opts))
        s1, s2 = sim.goods
        out += [s1.p_down.mean, s1.expected_inventory.mean, s2.p_down.mean, s2.expected_inventory.mean,
                sim.tc.mean, sim.tc.half_width, 100.0 * (res.total_cost - sim.tc.mean) / sim.tc.mean]
    out += list(row[6]) + [row[7][4], 100.0 * (row[6][4] - row[7][4]) / row[7][4]]
    if optimize:
        best = optimize_multi(cfg, shop_solver=shop, priority=discipline == "priority")
        out += list(best.stocks) + [best.total_cost]
    return tuple(out)


def table_b(name, simulate_rows=True, replications=None, seed=1, horizon=None, optimize=True, jobs=1):
    """Benchmark rows: analytic measures at the published stocks, simulation, published values.

    ``diff_pct`` compares our analytic TC with our simulator, ``paper_diff_pct``
    the published model TC with the published simulation.
    """
    if name not in _B_TABLES:
        raise ValidationError(f"unknown benchmark table {name!r}")
    table, K, discipline = _B_TABLES[name]
    cols = ["C2_u", "C2_d", "tau_1", "tau_2", "S_1", "S_2", *_MEASURES]
    sim_opts = None
    if simulate_rows:
        sim_opts = {"seed": seed}
        if replications is not None:
            sim_opts["replications"] = replications
        if horizon is not None:
            sim_opts["horizon"] = horizon
        cols += [f"sim_{m}" for m in _MEASURES] + ["sim_TC_hw", "diff_pct"]
    cols += [f"paper_{m}" for m in _MEASURES] + ["paper_sim_TC", "paper_diff_pct"]
    if optimize:
        cols += ["opt_S_1", "opt_S_2", "opt_TC"]
    rows = _map(_b_row, [(r, K, discipline, sim_opts, optimize) for r in table], jobs)
    return Table(name, cols, rows)


# -- value of priority --------------------------------------------------------------

def _best_policy(costs, discipline, tau_grid):
    c1u, c1d, c2u, c2d = costs
    shop = _solver(discipline)
    best = None
    for t1, t2 in itertools.product(tau_grid, repeat=2):
        g1 = GoodSpec(GOOD1_LIFETIME, t1, 1, float(c1u), float(c1d), GOOD1_COSTS["C_a"], name="good1")
        g2 = GoodSpec(GOOD2_LIFETIME, t2, 1, float(c2u), float(c2d), GOOD2_C_A, name="good2")
        res = optimize_multi(MultiGoodConfig((g1, g2), 1, MU_R, C_W), shop_solver=shop,
                             priority=discipline == "priority")
        if best is None or res.total_cost < best[0] - 1e-12:
            best = (res.total_cost, t1, t2, res.stocks)
    return best


def _c6_row(args):
    row, tau_grid = args
    costs = row[:4]
    p = _best_policy(costs, "priority", tau_grid)
    f = _best_policy(costs, "fcfs", tau_grid)
    diff = 100.0 * (p[0] - f[0]) / f[0]
    return (*costs, p[1], p[2], *p[3], p[0], f[1], f[2], *f[3], f[0], diff, row[4][4], row[5][4], row[6])


def table_c6(tau_grid=PRIORITY_TAU_GRID, rows=None, jobs=1):
    """Optimal (tau, S) per good with and without priority for good 1, K = 1."""
    cols = ["C1_u", "C1_d", "C2_u", "C2_d",
            "prio_tau_1", "prio_tau_2", "prio_S_1", "prio_S_2", "prio_TC",
            "fcfs_tau_1", "fcfs_tau_2", "fcfs_S_1", "fcfs_S_2", "fcfs_TC",
            "diff_pct", "paper_prio_TC", "paper_fcfs_TC", "paper_diff_pct"]
    src = PRIORITY_VALUE if rows is None else [PRIORITY_VALUE[i] for i in rows]
    return Table("table-c6", cols, _map(_c6_row, [(r, tuple(tau_grid)) for r in src], jobs))


# -- robustness ------------------------------------------------------------------------

def table_a2(max_instances=DESK_INSTANCES, seed=0, families=(("gamma", "weibull"), ("weibull", "gamma"))):
    """Misspecification penalty (percent) by parameter value and K, average and maximum.

    ``max_instances=None`` runs the full Cartesian bed.
    """
    cols = ["true", "assumed", "axis", "value", "K", "n", "avg_pct", "max_pct"]
    rows = []
    for true, assumed in families:
        records, _ = robustness_experiment(true, assumed, max_instances=max_instances, seed=seed)
        rows += _penalty_rows(true, assumed, records)
    return Table("table-a2", cols, rows)


def _penalty_rows(true, assumed, records):
    rows = []

    def add(axis, value, K, group):
        pct = np.array([r.penalty_pct for r in group])
        rows.append((true, assumed, axis, value, K, len(pct), float(pct.mean()), float(pct.max())))

    Ks = sorted({r.instance.K for r in records})
    add("all", "all", "all", records)
    for K in Ks:
        add("all", "all", K, [r for r in records if r.instance.K == K])
    for axis in ("C_d", "C_u", "cv", "L"):
        for value in sorted({getattr(r.instance, axis) for r in records}):
            at = [r for r in records if getattr(r.instance, axis) == value]
            add(axis, value, "all", at)
            for K in Ks:
                group = [r for r in at if r.instance.K == K]
                if group:
                    add(axis, value, K, group)
    return rows


# -- sweeps ---------------------------------------------------------------------------------

def _sweep_point(args):
    cfg, costs, opt_S = args
    if opt_S:
        best = optimize_S(cfg.K, cfg.tau, cfg.lifetime, cfg.mu_r, costs)
        cfg = cfg.with_(S=best.S_star)
    state = steady_state(cfg)
    tc = cost_rate(cfg, costs, state).total
    return cfg.S, state.p_down, state.expected_inventory, state.throughput, tc, state.status


def sweep(cfg, costs, axes, optimize_S_flag=False, jobs=1):
    """Cartesian sweep over single-good parameters, one row per grid point.

    ``axes`` maps an axis name (``tau``, ``K``, ``S``, ``C_u``, ``C_d``,
    ``C_a``, ``C_w``, ``mu_r``) to a list of values; points are ordered with
    the last axis varying fastest.  With ``optimize_S_flag`` the stock is
    re-optimised at every point and reported as ``S``.
    """
    if not axes:
        raise ValidationError("sweep needs at least one axis")
    for name, values in axes.items():
        if not list(values):
            raise ValidationError(f"sweep axis {name!r} is empty")
    if optimize_S_flag and "S" in axes:
        raise ValidationError("cannot sweep S while optimising it")
    names = list(axes)
    points, jobs_in = [], []
    for combo in itertools.product(*(axes[n] for n in names)):
        point = dict(zip(names, combo))
        scen = {k: point[k] for k in ("tau", "K", "S", "mu_r") if k in point}
        cost = {k: point[k] for k in ("C_u", "C_d", "C_a", "C_w") if k in point}
        c = cfg.with_(**scen) if scen else cfg
        k = replace(costs, **cost) if cost else costs
        points.append(combo)
        jobs_in.append((c, k, optimize_S_flag))
    results = _map(_sweep_point, jobs_in, jobs)
    cols = names + ["S", "p_down", "expected_inventory", "throughput", "TC", "status"]
    if "S" in names:
        cols[cols.index("S", len(names))] = "S_used"
    return Table("sweep", cols, [tuple(p) + tuple(r) for p, r in zip(points, results)])


def figure_sweeps(jobs=1):
    """Optimal cost and stock over the tau x K grid for the four cost settings."""
    cols = ["C_u", "C_d", "tau", "K", "S_star", "p_down", "TC"]
    rows = []
    for cu, cd in FIGURE_COSTS:
        costs = CostRates(C_u=cu, C_d=cd, C_a=FIGURE_C_A, C_w=FIGURE_C_W)
        cfg = SingleGoodConfig(1, 1, 1.0, MU_R, FIGURE_LIFETIME)
        t = sweep(cfg, costs, {"tau": list(FIGURE_TAU_GRID), "K": list(FIGURE_K_GRID)}, optimize_S_flag=True, jobs=jobs)
        for tau, K, S, p0, _einv, _thr, tc, _status in t.rows:
            rows.append((cu, cd, tau, K, S, p0, tc))
    return Table("figure-sweeps", cols, rows)


def run_preset(name, seed=1, max_instances=DESK_INSTANCES, jobs=1, replications=None, simulate_rows=True):
    if name in _B_TABLES:
        return table_b(name, simulate_rows=simulate_rows, replications=replications, seed=seed, jobs=jobs)
    if name == "table-a2":
        return table_a2(max_instances=max_instances, seed=seed)
    if name == "table-c6":
        return table_c6(jobs=jobs)
    if name == "figure-sweeps":
        return figure_sweeps(jobs=jobs)
    raise ValidationError(f"unknown preset {name!r} (choose from {list(PRESETS)})")
