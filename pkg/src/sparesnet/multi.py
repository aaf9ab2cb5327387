"""Several capital goods sharing one repair shop.

Each good ``i`` circulates its own ``S_i`` parts between its stock point and
the common repair shop.  The network has no product form, so it is analysed
by a Marie-style decomposition: every good's sub-network is replaced by a
two-node network with state-dependent exponential servers whose rates are
the conditional throughputs of the corresponding nodes analysed in
isolation.  The isolated capital-good node is the M_n/GI/1 queue of
:mod:`sparesnet.single`; the isolated repair shop is a multiclass
``./M/K`` station with state-dependent arrivals.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import special

from .errors import ConvergenceError, UnsupportedSizeError, ValidationError
from .lifetime import InstallationTime, LifetimeSpec, _check_solvable, installation_rate
from .single import _positive_int, _positive_real, general_rate_node

log = logging.getLogger(__name__)

MAX_JOINT_STATES = 1_000_000


@dataclass(frozen=True)
class GoodSpec:
    """One capital good: its part lifetime, age threshold, stock and cost rates."""

    lifetime: LifetimeSpec
    tau: float
    S: int = 0
    C_u: float = 0.0
    C_d: float = 0.0
    C_a: float = 0.0
    name: str = ""

    def __post_init__(self):
        if not isinstance(self.lifetime, LifetimeSpec):
            raise ValidationError("good lifetime must be a LifetimeSpec")
        object.__setattr__(self, "tau", _positive_real("tau", self.tau, allow_inf=True))
        object.__setattr__(self, "S", _positive_int("S", self.S, 0))
        for name in ("C_u", "C_d", "C_a"):
            v = float(getattr(self, name))
            if not (v >= 0 and math.isfinite(v)):
                raise ValidationError(f"{name} must be a nonnegative finite number, got {v}")
            object.__setattr__(self, name, v)

    @property
    def installation(self):
        return InstallationTime(self.lifetime, self.tau)

    def p_fail(self):
        return float(self.lifetime.cdf(self.tau)) if math.isfinite(self.tau) else 1.0


@dataclass(frozen=True)
class MultiGoodConfig:
    goods: tuple
    K: int
    mu_r: float
    C_w: float = 0.0

    def __post_init__(self):
        goods = tuple(self.goods)
        if not goods:
            raise ValidationError("at least one good is required")
        object.__setattr__(self, "goods", goods)
        object.__setattr__(self, "K", _positive_int("K", self.K, 1))
        object.__setattr__(self, "mu_r", _positive_real("mu_r", self.mu_r))
        if not (float(self.C_w) >= 0 and math.isfinite(float(self.C_w))):
            raise ValidationError(f"C_w must be a nonnegative finite number, got {self.C_w}")
        object.__setattr__(self, "C_w", float(self.C_w))

    @property
    def J(self):
        return len(self.goods)

    @property
    def stocks(self):
        return tuple(g.S for g in self.goods)

    def with_stocks(self, stocks):
        goods = tuple(replace(g, S=int(s)) for g, s in zip(self.goods, stocks))
        return replace(self, goods=goods)


@dataclass
class DecompositionState:
    """Per-good rates and probabilities of the decomposition.

    Rate arrays are indexed by population: ``mu_node[i][n]`` for
    ``n = 1..S_i`` (entry 0 unused), ``lam_node[i][n]`` for ``n = 0..S_i-1``.
    """

    mu_node: list
    mu_shop: list
    lam_node: list = field(default_factory=list)
    lam_shop: list = field(default_factory=list)
    sub_probs: list = field(default_factory=list)
    sub_norm: list = field(default_factory=list)
    shop_marginals: list = field(default_factory=list)
    shop_norm: float = float("nan")
    node_probs: list = field(default_factory=list)
    iterations: int = 0
    residual: float = float("inf")
    residual_history: list = field(default_factory=list)
    status: str = "ok"


@dataclass
class GoodResult:
    p_down: float
    expected_inventory: float
    throughput: float
    probs: np.ndarray
    unplanned: float
    downtime: float
    stock: float
    total: float


@dataclass
class MultiResult:
    goods: list
    capacity_cost: float
    total_cost: float
    state: DecompositionState


# -- building blocks ---------------------------------------------------------------

def subnetwork_product_form(mu_node, mu_shop, S):
    """Stationary law of the two-node cyclic sub-network with ``S`` parts.

    ``mu_node[k-1]`` and ``mu_shop[k-1]`` are the service rates with ``k``
    parts present (``k = 1..S``).  Returns ``(probs, T)`` where
    ``probs[n]`` is the probability of ``n`` parts at the capital good and
    ``T`` the normalising constant.
    """
    mu_node = np.asarray(mu_node, dtype=float)
    mu_shop = np.asarray(mu_shop, dtype=float)
    if len(mu_node) != S or len(mu_shop) != S:
        raise ValidationError(f"expected {S} service rates per node, got {len(mu_node)} and {len(mu_shop)}")
    for label, arr in (("mu_node", mu_node), ("mu_shop", mu_shop)):
        bad = np.flatnonzero(~(arr > 0) | ~np.isfinite(arr))
        if bad.size:
            raise ValidationError(f"{label}({bad[0] + 1}) must be positive, got {arr[bad[0]]}")
    a = np.concatenate(([0.0], np.cumsum(-np.log(mu_node))))
    b = np.concatenate(([0.0], np.cumsum(-np.log(mu_shop))))
    logw = a + b[::-1]
    top = logw.max()
    w = np.exp(logw - top)
    total = w.sum()
    return w / total, 1.0 / (total * math.exp(top))


def implied_arrival_rates(probs, mu_node, mu_shop):
    """Arrival rates seen by each node of the sub-network.

    ``lam_node[n] = mu_node(n+1) P(n+1)/P(n)`` and
    ``lam_shop[n] = mu_shop(n+1) P(S-n-1)/P(S-n)``, both for ``n = 0..S-1``.
    """
    probs = np.asarray(probs, dtype=float)
    S = len(probs) - 1
    if np.any(~(probs > 0)):
        raise ValidationError(f"sub-network probability P({int(np.argmin(probs))}) is zero")
    mu_node = np.asarray(mu_node, dtype=float)
    mu_shop = np.asarray(mu_shop, dtype=float)
    lam_node = mu_node * probs[1:] / probs[:-1]
    rev = probs[::-1]
    lam_shop = mu_shop * rev[1:] / rev[:-1]
    return lam_node[:S], lam_shop[:S]


def isolated_node_throughputs(lam_node, inst, scale=None):
    """Conditional throughputs ``upsilon(n)``, ``n = 1..S``, of the isolated capital-good node."""
    node = general_rate_node(lam_node, inst, scale=scale)
    return node.throughputs[1:], node


def repair_shop_multiclass(lam_shop, mu_r, K, max_states=MAX_JOINT_STATES):
    """Joint and marginal occupancy of the multiclass ``./M/K`` repair shop.

    ``lam_shop[i][n]`` is class ``i``'s arrival rate with ``n`` of its parts
    in the shop.  Returns ``(joint, marginals, T0)``; classes with no parts
    contribute an axis of length 1.
    """
    sizes = [len(l) + 1 for l in lam_shop]
    total_states = int(np.prod(sizes, dtype=np.int64))
    if total_states > max_states:
        raise UnsupportedSizeError(
            f"repair-shop state space has {total_states} states, above the cap {max_states}"
        )
    J = len(sizes)
    logw = np.zeros(sizes)
    tot = np.zeros(sizes, dtype=np.int64)
    for i, lam in enumerate(lam_shop):
        lam = np.asarray(lam, dtype=float)
        if np.any(~(lam > 0)):
            raise ValidationError(f"class {i} repair-shop arrival rates must be positive")
        n = np.arange(sizes[i])
        a = np.concatenate(([0.0], np.cumsum(np.log(lam)))) - special.gammaln(n + 1)
        shape = [1] * J
        shape[i] = sizes[i]
        logw = logw + a.reshape(shape)
        tot = tot + n.reshape(shape)
    t = np.arange(tot.max() + 1)
    log_service = -t * math.log(mu_r)
    over = t > K
    log_service[over] += special.gammaln(t[over] + 1) - special.gammaln(K + 1) - (t[over] - K) * math.log(K)
    logw = logw + log_service[tot]
    top = logw.max()
    w = np.exp(logw - top)
    Z = w.sum()
    joint = w / Z
    marginals = []
    for i in range(J):
        axes = tuple(a for a in range(J) if a != i)
        marginals.append(joint.sum(axis=axes) if axes else joint.copy())
    return joint, marginals, 1.0 / (Z * math.exp(top))


def shop_throughputs(lam, marginal):
    """``upsilon_0(n) = lam(n-1) P_0(n-1) / P_0(n)`` for ``n = 1..S``."""
    lam = np.asarray(lam, dtype=float)
    return lam * marginal[:-1] / marginal[1:]


# -- fixed point ------------------------------------------------------------------

def _initial_state(cfg):
    mu_node, mu_shop = [], []
    for g in cfg.goods:
        S = g.S
        if S > 0:
            _check_solvable(g.installation)
        mu = installation_rate(g.installation) if S > 0 else float("nan")
        mu_node.append(np.full(S, mu))
        mu_shop.append(cfg.mu_r * np.arange(1, S + 1, dtype=float))
    return DecompositionState(mu_node=mu_node, mu_shop=mu_shop)


def _shop_step(cfg, lam_shop_active, active):
    _, marg, T0 = repair_shop_multiclass([lam_shop_active[i] for i in active], cfg.mu_r, cfg.K)
    return marg, T0


def marie_fixed_point(cfg, eps=1e-6, max_iter=500, shop_solver=None):
    """Iterate the decomposition until the repair-shop rates settle.

    ``shop_solver(lam_shop_list) -> marginals`` replaces the FCFS repair
    shop (used for priority disciplines).  Raises :class:`ConvergenceError`
    after ``max_iter`` sweeps.
    """
    if not eps > 0:
        raise ValidationError(f"eps must be positive, got {eps}")
    state = _initial_state(cfg)
    active = [i for i, g in enumerate(cfg.goods) if g.S > 0]
    J = cfg.J
    scale = cfg.K * cfg.mu_r
    damping = False
    rises = 0
    prev_res = math.inf
    for it in range(1, max_iter + 1):
        # sub-network product forms and implied arrival rates
        sub, norms, lam_node, lam_shop = [None] * J, [None] * J, [None] * J, [None] * J
        for i in range(J):
            S = cfg.goods[i].S
            if S == 0:
                sub[i], norms[i] = np.array([1.0]), 1.0
                lam_node[i], lam_shop[i] = np.zeros(0), np.zeros(0)
                continue
            sub[i], norms[i] = subnetwork_product_form(state.mu_node[i], state.mu_shop[i], S)
            lam_node[i], lam_shop[i] = implied_arrival_rates(sub[i], state.mu_node[i], state.mu_shop[i])
        # isolated nodes
        new_node, node_probs = [None] * J, [None] * J
        for i in range(J):
            g = cfg.goods[i]
            if g.S == 0:
                new_node[i], node_probs[i] = np.zeros(0), np.array([1.0])
                continue
            ups, sol = isolated_node_throughputs(lam_node[i], g.installation, scale=scale)
            new_node[i], node_probs[i] = ups, sol.probs
        # repair shop
        if active:
            if shop_solver is None:
                marg, T0 = _shop_step(cfg, lam_shop, active)
            else:
                marg, T0 = shop_solver([lam_shop[i] for i in active]), float("nan")
        else:
            marg, T0 = [], float("nan")
        shop_marg = [np.array([1.0]) for _ in range(J)]
        new_shop = [np.zeros(0) for _ in range(J)]
        for k, i in enumerate(active):
            shop_marg[i] = marg[k]
            new_shop[i] = shop_throughputs(lam_shop[i], marg[k])
        res = max((float(np.abs(new_shop[i] - state.mu_shop[i]).max()) for i in active), default=0.0)
        if res > prev_res:
            rises += 1
            if rises >= 2 and not damping:
                damping = True
                log.debug("decomposition residual rose twice; damping enabled at iteration %d", it)
        else:
            rises = 0
        prev_res = res
        if damping:
            new_shop = [0.5 * (a + b) for a, b in zip(new_shop, state.mu_shop)]
            new_node = [0.5 * (a + b) for a, b in zip(new_node, state.mu_node)]
        state.mu_node, state.mu_shop = new_node, new_shop
        state.lam_node, state.lam_shop = lam_node, lam_shop
        state.sub_probs, state.sub_norm = sub, norms
        state.shop_marginals, state.shop_norm = shop_marg, T0
        state.node_probs = node_probs
        state.iterations = it
        state.residual = res
        state.residual_history.append(res)
        if res <= eps:
            hist = state.residual_history[-5:]
            if any(b > a * (1 + 1e-9) + 1e-15 for a, b in zip(hist, hist[1:])):
                state.status = "non-monotone-residual"
                log.debug("decomposition residual rose within its last %d iterations", len(hist))
            return state
    raise ConvergenceError(
        f"decomposition did not converge in {max_iter} iterations", residual=state.residual, iterations=max_iter
    )


def _good_result(g, probs):
    probs = np.asarray(probs)
    p0 = float(probs[0])
    mu = installation_rate(g.installation)
    thr = mu * (1.0 - p0)
    unplanned = g.C_u * thr * g.p_fail()
    downtime = g.C_d * p0
    stock = g.C_a * g.S
    einv = float(np.dot(np.arange(len(probs)), probs))
    return GoodResult(p0, einv, thr, probs, unplanned, downtime, stock, unplanned + downtime + stock)


def evaluate_multi(cfg, eps=1e-6, max_iter=500, shop_solver=None):
    """Decomposition plus cost: per-good results and the total cost rate."""
    state = marie_fixed_point(cfg, eps=eps, max_iter=max_iter, shop_solver=shop_solver)
    goods = [_good_result(g, p) for g, p in zip(cfg.goods, state.node_probs)]
    cap = cfg.C_w * cfg.K
    return MultiResult(goods, cap, sum(r.total for r in goods) + cap, state)


@dataclass
class MultiSearchResult:
    stocks: tuple
    total_cost: float
    result: MultiResult
    trace: list
    status: str = "ok"


def _neighbourhood(J):
    """Moves of the local polish: all of ``{-1,0,1}^J`` for small ``J``, else single and pairwise steps."""
    if J <= 4:
        return [m for m in itertools.product((-1, 0, 1), repeat=J) if any(m)]
    moves = []
    for i in range(J):
        for d in (-1, 1):
            moves.append(tuple(d if k == i else 0 for k in range(J)))
    for i, j in itertools.combinations(range(J), 2):
        for di, dj in itertools.product((-1, 1), repeat=2):
            moves.append(tuple(di if k == i else dj if k == j else 0 for k in range(J)))
    return moves


def optimize_multi(
    cfg, eps=1e-6, max_iter=500, S_cap=60, shop_solver=None, evaluate=None, S_min=1, priority=False
):
    """Local search over the stocks ``S_i`` with the repair capacity fixed.

    Coordinate sweeps ascend ``S_i`` from ``S_min`` for one good at a time,
    the others held at their incumbents.  A good's ascent stops once the
    costs that cannot fall with ``S_i`` reach the incumbent: its stock cost,
    the other goods' costs, and the cheapest downtime/unplanned mix with
    ``P_i(0)`` between its current value and a throughput floor.  The floor
    is ``1 - c / mu_i`` where ``c`` is the repair capacity ``K mu_r``, less
    the throughput of higher-ranked goods when ``priority`` is set (those are
    unaffected by lower-ranked stocks under preemption).

    When the sweeps settle, a polish step tries joint moves of +-1 on
    several stocks, and the two phases alternate until neither improves.
    Every accepted move strictly lowers the cost, so the search terminates.

    ``S_min = 0`` admits abandoning a good (permanent downtime), which can be
    the cheapest choice when the shop is congested.
    """
    if evaluate is None:
        evaluate = lambda c: evaluate_multi(c, eps=eps, max_iter=max_iter, shop_solver=shop_solver)
    S_min = _positive_int("S_min", S_min, 0)
    if S_cap < S_min:
        raise ValidationError(f"S_cap ({S_cap}) must be at least S_min ({S_min})")
    cache = {}
    trace = []

    def cost(stocks):
        stocks = tuple(int(s) for s in stocks)
        if stocks not in cache:
            res = evaluate(cfg.with_stocks(stocks))
            cache[stocks] = res
            trace.append((stocks, res.total_cost))
        return cache[stocks]

    def floor(i, res):
        capacity = cfg.K * cfg.mu_r
        if priority:
            capacity -= sum(res.goods[j].throughput for j in range(i))
        return min(1.0, max(0.0, 1.0 - capacity / installation_rate(cfg.goods[i].installation)))

    def sweep(current, best):
        status = "ok"
        for i, g in enumerate(cfg.goods):
            unplanned_per_up = g.C_u * installation_rate(g.installation) * g.p_fail()
            incumbent_S, incumbent = current[i], best
            for S in range(S_min, S_cap + 1):
                res = cost(current[:i] + (S,) + current[i + 1 :])
                if res.total_cost < incumbent.total_cost - 1e-12:
                    incumbent_S, incumbent = S, res
                gi = res.goods[i]
                lo = floor(i, res)
                operating = min(g.C_d * p + unplanned_per_up * (1.0 - p) for p in (lo, gi.p_down))
                bound = res.total_cost - gi.downtime - gi.unplanned + operating
                if S > incumbent_S and bound >= incumbent.total_cost:
                    break
            else:
                status = "cap"
            current = current[:i] + (incumbent_S,) + current[i + 1 :]
            best = incumbent
        return current, best, status

    moves = _neighbourhood(len(cfg.goods))
    current = tuple(S_min for _ in cfg.goods)
    best = cost(current)
    status = "ok"
    while True:
        while True:
            before = best.total_cost
            current, best, st = sweep(current, best)
            if st != "ok":
                status = st
            if not best.total_cost < before - 1e-12:
                break
        polished = None
        for m in moves:
            cand = tuple(s + d for s, d in zip(current, m))
            if min(cand) < S_min or max(cand) > S_cap:
                continue
            res = cost(cand)
            if res.total_cost < (polished[1] if polished else best).total_cost - 1e-12:
                polished = (cand, res)
        if polished is None:
            break
        current, best = polished
    return MultiSearchResult(current, best.total_cost, best, trace, status)
