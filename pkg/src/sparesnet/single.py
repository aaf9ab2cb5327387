"""Steady state of one capital good served by a turn-around stock of ``S`` parts.

The node holding the capital good is an M_n/GI/1 queue: ``n`` counts the
parts at the good (the operating one included), parts arrive from the repair
shop at rate ``lambda_n = mu_r * min(S - n, K)``, and the service time is the
installation time ``Z = min(X, tau)``.

Two solution routes are provided.  :func:`steady_state` follows the
classical recursion on conditional residual-service transforms ``F_n*``:
direct evaluation when the arrival rates are distinct (``S <= K``) and a
Taylor-coefficient triangle at ``lambda = K mu_r`` when the first ``S - K``
rates coincide.  :func:`general_rate_node` handles arbitrary positive rate
vectors through divided differences of ``G*`` expanded in Poisson weights;
the multi-good decomposition relies on it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import signal

from .errors import IllConditionedError, NumericalError, UnsupportedSizeError, ValidationError
from .lifetime import (
    MAX_DERIVATIVE_ORDER,
    InstallationTime,
    LifetimeSpec,
    _check_solvable,
    installation_laplace,
    installation_rate,
    poisson_weights,
)

ILL_CONDITIONED = 1e-14
P0_AGREEMENT = 1e-8
DEGRADED_RESIDUAL = 1e-6


def _positive_int(name, v, minimum):
    if isinstance(v, bool) or int(v) != v or int(v) < minimum:
        raise ValidationError(f"{name} must be an integer >= {minimum}, got {v!r}")
    return int(v)


def _positive_real(name, v, allow_inf=False):
    try:
        v = float(v)
    except (TypeError, ValueError):
        raise ValidationError(f"{name} must be numeric, got {v!r}") from None
    if not v > 0 or math.isnan(v) or (math.isinf(v) and not allow_inf):
        raise ValidationError(f"{name} must be positive{' (or inf)' if allow_inf else ''}, got {v}")
    return v


@dataclass(frozen=True)
class SingleGoodConfig:
    S: int
    K: int
    tau: float
    mu_r: float
    lifetime: LifetimeSpec

    def __post_init__(self):
        object.__setattr__(self, "S", _positive_int("S", self.S, 0))
        object.__setattr__(self, "K", _positive_int("K", self.K, 1))
        object.__setattr__(self, "tau", _positive_real("tau", self.tau, allow_inf=True))
        object.__setattr__(self, "mu_r", _positive_real("mu_r", self.mu_r))
        if not isinstance(self.lifetime, LifetimeSpec):
            raise ValidationError(f"lifetime must be a LifetimeSpec, got {type(self.lifetime).__name__}")

    @property
    def installation(self):
        return InstallationTime(self.lifetime, self.tau)

    def arrival_rates(self):
        """``lambda_n`` for ``n = 0..S`` (the last entry is 0)."""
        n = np.arange(self.S + 1)
        return self.mu_r * np.minimum(self.S - n, self.K).astype(float)

    def with_(self, **changes):
        return replace(self, **changes)


@dataclass(frozen=True)
class CostRates:
    """Cost rates; ``C_h`` is accepted for completeness but does not enter the objective."""

    C_u: float = 0.0
    C_d: float = 0.0
    C_a: float = 0.0
    C_w: float = 0.0
    C_h: float = 0.0

    def __post_init__(self):
        for name in ("C_u", "C_d", "C_a", "C_w", "C_h"):
            v = getattr(self, name)
            try:
                v = float(v)
            except (TypeError, ValueError):
                raise ValidationError(f"{name} must be numeric, got {v!r}") from None
            if not (v >= 0 and math.isfinite(v)):
                raise ValidationError(f"{name} must be a nonnegative finite number, got {v}")
            object.__setattr__(self, name, v)


@dataclass
class SteadyState:
    probs: np.ndarray
    p_down: float
    expected_inventory: float
    throughput: float
    mu: float
    status: str = "ok"
    diagnostics: dict = field(default_factory=dict)


@dataclass
class TransformTable:
    """Values of the residual-service transforms needed by the steady-state formulas.

    ``F[n, j]`` holds ``F_n*(lambda_j)`` for ``j > n`` (NaN elsewhere),
    ``R[n]`` the expected remaining service time ``R(n)``, ``G[j]`` the
    installation transform at ``lambda_j``.  ``taylor[n]`` (capacitated path)
    stores scaled Taylor coefficients ``(-lambda)^k F_n^{(k)}(lambda) / k!``.
    """

    rates: np.ndarray
    G: np.ndarray
    F: np.ndarray
    R: np.ndarray
    mu: float
    taylor: list = field(default_factory=list)

    def step_value(self, n):
        """``F_n*(lambda_{n+1})``."""
        return self.F[n, n + 1]


@dataclass
class CostBreakdown:
    unplanned: float
    downtime: float
    stock: float
    capacity: float
    total: float


# -- transform recursions -----------------------------------------------------

def _guard(one_minus, n):
    if abs(one_minus) < ILL_CONDITIONED:
        raise IllConditionedError(
            f"1 - F*_{n}(lambda_{n + 1}) = {one_minus:.3g} is too close to zero", index=n
        )


def _remaining_service_table(cfg, c, max_order=MAX_DERIVATIVE_ORDER):
    """Shared body of the ample (``c = 0``) and capacitated (``c = S - K``) recursions.

    Rows ``n <= c`` see the common rate ``lambda = lambda_0``; their values at
    ``lambda`` itself come from the Taylor triangle, values at the distinct
    rates ``lambda_j`` (``j > c``) from the direct branch.
    """
    _check_solvable(cfg.installation)
    S = cfg.S
    if S < 1:
        raise ValidationError("transform recursion needs S >= 1")
    if c > max_order:
        raise UnsupportedSizeError(
            f"S - K = {c} exceeds the derivative-order cap {max_order}; raise max_order or K"
        )
    inst = cfg.installation
    mu = installation_rate(inst)
    lam = cfg.mu_r * np.minimum(S - np.arange(S + 1), S - c).astype(float)
    G = np.array([installation_laplace(inst, x) for x in lam])
    F = np.full((S, S + 1), np.nan)
    F[0, 1:] = G[1:]
    taylor = []
    if c > 0:
        # b_k^(n) = (-lambda)^k F_n^(k)(lambda) / k!; all terms nonnegative
        w = poisson_weights(inst, lam[0], c + 1)[: c + 1]
        b = w.copy()
        taylor.append(b)
        for n in range(1, c + 1):
            om = 1.0 - b[0]
            _guard(om, n - 1)
            b = (w[0] / om) * b[1:] + w[1 : len(b)]
            taylor.append(b)
        for n in range(min(c, S - 1)):
            F[n, n + 1] = taylor[n][0]
    for n in range(1, S):
        om = 1.0 - (taylor[n - 1][0] if n <= c else F[n - 1, n])
        _guard(om, n - 1)
        coef = G[n] / om
        for j in range(max(n, c) + 1, S):
            F[n, j] = lam[n] / (lam[j] - lam[n]) * (coef * (1.0 - F[n - 1, j]) - G[j])
    # expected remaining service time
    R = np.full(S, np.nan)
    if S >= 2:
        om = 1.0 - G[1]
        _guard(om, 0)
        R[1] = (1.0 / mu) / om - 1.0 / lam[1]
        for n in range(2, S):
            om = 1.0 - F[n - 1, n]
            _guard(om, n - 1)
            R[n] = G[n] * R[n - 1] / om - 1.0 / lam[n] + 1.0 / mu
    return TransformTable(rates=lam, G=G, F=F, R=R, mu=mu, taylor=taylor)


def remaining_service_transforms_ample(cfg):
    """Residual-service transforms when every repair can start at once (``S <= K``)."""
    if cfg.S > cfg.K:
        raise ValidationError(f"ample-capacity recursion requires S <= K, got S={cfg.S}, K={cfg.K}")
    return _remaining_service_table(cfg, 0)


def remaining_service_transforms_capacitated(cfg, max_order=MAX_DERIVATIVE_ORDER):
    """Residual-service transforms when the first ``S - K`` arrival rates equal ``K mu_r``."""
    if cfg.S <= cfg.K:
        raise ValidationError(f"capacitated recursion requires S > K, got S={cfg.S}, K={cfg.K}")
    return _remaining_service_table(cfg, cfg.S - cfg.K, max_order)


# -- steady state ---------------------------------------------------------------

def _relative_probs(table):
    """``P(n) / P(0)`` for ``n = 0..S-1``."""
    lam, G = table.rates, table.G
    S = len(lam) - 1
    rel = np.ones(S)
    prod = 1.0
    for n in range(1, S):
        prod *= (1.0 - table.step_value(n - 1)) / G[n]
        rel[n] = lam[0] / lam[n] * prod
    return rel


def _p0_from_relative(lam, rel, mu):
    return 1.0 / (1.0 + float(np.dot(lam[: len(rel)], rel)) / mu)


def _finish(probs, mu, status, diagnostics):
    probs = np.where((probs < 0) & (probs > -1e-12), 0.0, probs)
    if np.any(probs < -1e-9):
        raise NumericalError(f"negative steady-state probability {probs.min():.3g}")
    probs = np.clip(probs, 0.0, None)
    n = np.arange(len(probs))
    return SteadyState(
        probs=probs,
        p_down=float(probs[0]),
        expected_inventory=float(np.dot(n, probs)),
        throughput=float(mu * (1.0 - probs[0])),
        mu=mu,
        status=status,
        diagnostics=diagnostics,
    )


def _recursion_probs(cfg, path, max_order):
    S = cfg.S
    lam = cfg.arrival_rates()
    if path is None:
        path = "ample" if S <= cfg.K else "capacitated"
    if path == "ample":
        if S > cfg.K:
            raise ValidationError("ample path requested with S > K")
        table = _remaining_service_table(cfg, 0)
    elif path == "capacitated":
        table = _remaining_service_table(cfg, max(S - cfg.K, 0), max_order)
    else:
        raise ValidationError(f"unknown solution path {path!r}")
    mu = table.mu
    rel = _relative_probs(table)
    bracket = 1.0 + (1.0 + lam[S - 1] * table.R[S - 1]) * rel[S - 1] + rel[1 : S - 1].sum()
    p0 = 1.0 / bracket
    p0_closed = _p0_from_relative(lam, rel, mu)
    ok = bool(np.isfinite(p0)) and abs(p0 - p0_closed) <= P0_AGREEMENT * max(1.0, p0_closed)
    if not ok:
        p0 = p0_closed
    probs = np.empty(S + 1)
    probs[:S] = rel * p0
    probs[S] = 1.0 - probs[:S].sum()
    flow = abs(mu * (1.0 - probs[0]) - float(np.dot(lam, probs)))
    ok = ok and flow <= DEGRADED_RESIDUAL * max(mu, 1.0) and probs.min() >= -1e-12
    return probs, ok, {"p0_bracket": p0, "p0_closed": p0_closed, "flow_residual": flow}


def steady_state(cfg, path=None, max_order=MAX_DERIVATIVE_ORDER, verify=True):
    """Stationary distribution ``P(0..S)`` of the stock at the capital good.

    The transform recursion runs first (``path`` forces ``"ample"`` or
    ``"capacitated"``; forcing ``"capacitated"`` with ``S <= K`` runs the
    same code with an empty confluent block).  With ``verify`` the result
    is compared with :func:`general_rate_node`; the recursion subtracts
    nearly equal quantities when many distinct rates are close on the scale
    of ``1/tau``, and on disagreement above ``1e-9`` (or a failed internal
    check) the divided-difference solution is returned with status
    ``"degraded"``.  Without ``verify`` numerical failures propagate.
    """
    inst = cfg.installation
    _check_solvable(inst)
    S = cfg.S
    mu = installation_rate(inst)
    if S == 0:
        return _finish(np.array([1.0]), mu, "ok", {})
    lam = cfg.arrival_rates()
    if S == 1:
        p0 = mu / (mu + lam[0])
        return _finish(np.array([p0, 1.0 - p0]), mu, "ok", {})
    if not verify:
        probs, ok, diag = _recursion_probs(cfg, path, max_order)
        return _finish(probs, mu, "ok" if ok else "degraded", diag)
    try:
        # overflow here shows up as a failed check and hands over to the DD engine
        with np.errstate(over="ignore", invalid="ignore"):
            probs, ok, diag = _recursion_probs(cfg, path, max_order)
    except NumericalError as exc:
        probs, ok, diag = None, False, {"recursion_error": str(exc)}
    node = general_rate_node(lam[:S], inst, scale=lam[0])
    if probs is not None:
        diag["cross_check"] = float(np.abs(node.probs - probs).max())
        ok = ok and diag["cross_check"] <= 1e-9
    if ok:
        return _finish(probs, mu, "ok", diag)
    return _finish(node.probs, mu, "degraded", diag)


def p0_closed_form(cfg):
    """``P(0)`` from flow balance: ``1 / (1 + sum_{n<S} lambda_n P(n)/P(0) / mu)``."""
    if cfg.S < 2:
        raise ValidationError(f"closed-form P(0) needs S >= 2, got S={cfg.S}")
    table = _remaining_service_table(cfg, max(cfg.S - cfg.K, 0))
    rel = _relative_probs(table)
    return _p0_from_relative(table.rates, rel, table.mu)


def cost_rate(cfg, costs, state=None):
    """Long-run average cost of the (S, tau, K) policy."""
    if state is None:
        state = steady_state(cfg)
    p_fail = float(cfg.lifetime.cdf(cfg.tau)) if math.isfinite(cfg.tau) else 1.0
    unplanned = costs.C_u * state.throughput * p_fail
    downtime = costs.C_d * state.p_down
    stock = costs.C_a * cfg.S
    capacity = costs.C_w * cfg.K
    return CostBreakdown(unplanned, downtime, stock, capacity, unplanned + downtime + stock + capacity)


# -- arbitrary arrival-rate vectors ----------------------------------------------

@dataclass
class NodeSolution:
    """Isolated M_n/GI/1 node with given arrival rates ``lambda_0..lambda_{S-1}``."""

    probs: np.ndarray
    throughputs: np.ndarray  # upsilon(n) for n = 1..S (index 0 unused, set to nan)
    mu: float
    residual: float


def general_rate_node(rates, inst, scale=None):
    """Solve the node for arbitrary positive arrival rates.

    Writes ``G*(x) = sum_j w_j (1 - x/L)^j`` with ``L >= max(rates)`` and
    nonnegative Poisson weights ``w_j``; divided differences of ``G*`` then
    become positive sums of complete homogeneous polynomials, which stays
    accurate when rates coincide or nearly coincide.
    """
    _check_solvable(inst)
    lam = np.asarray(rates, dtype=float)
    S = len(lam)
    mu = installation_rate(inst)
    if S == 0:
        return NodeSolution(np.array([1.0]), np.array([np.nan]), mu, 0.0)
    if np.any(~(lam > 0)) or np.any(~np.isfinite(lam)):
        bad = int(np.argmax(~(lam > 0) | ~np.isfinite(lam)))
        raise ValidationError(f"arrival rate lambda_{bad} must be positive and finite, got {lam[bad]}")
    if S == 1:
        p = np.array([1.0, lam[0] / mu])
        p /= p.sum()
        return NodeSolution(p, np.array([np.nan, mu]), mu, 0.0)
    top = float(lam.max())
    big = top if scale is None else max(float(scale), top)
    w = poisson_weights(inst, big, S + 2)
    J = len(w)
    y = np.clip(1.0 - lam / big, 0.0, 1.0)
    powers = np.arange(J)
    Gl = np.polynomial.polynomial.polyval(y, w)
    # W[k, r] = w[k + r]: shifted weights pairing h_r with w_{r+k}
    W = np.zeros((S + 2, J))
    for k in range(S + 2):
        W[k, : J - k] = w[k:]

    d = np.zeros(S + 1)
    d[1] = lam[0]
    if Gl[1] < ILL_CONDITIONED:
        raise IllConditionedError("G*(lambda_1) underflows", index=1)
    d[2] = d[1] * (1.0 - Gl[1]) / Gl[1]
    H = np.empty((S, J))          # row m-1: h_r over {y_m .. y_current}
    H[0] = y[1] ** powers
    t = np.zeros(S)               # positive coefficients of the divided differences
    t[0] = (d[1] + d[2]) / big
    shrink = 1.0                  # product of the rescaling factors applied to (d, t)
    for n in range(2, S):
        rows = n - 1
        H[:rows] = signal.lfilter([1.0], [1.0, -y[n]], H[:rows], axis=1)
        ks = n - 1 - np.arange(rows)
        q = float(np.dot(t[:rows], np.einsum("ij,ij->i", W[ks], H[:rows])))
        if Gl[n] < ILL_CONDITIONED:
            raise IllConditionedError(f"G*(lambda_{n}) underflows", index=n)
        d[n + 1] = (d[n] - lam[n - 1] * q) / Gl[n]
        t[:rows] *= lam[n - 1] / big
        t[rows] = d[n + 1] / big
        H[rows] = y[n] ** powers
        if abs(d[n + 1]) > 1e150:
            # the recursion is linear in (d, t); rescale before it overflows
            f = 1.0 / abs(d[n + 1])
            d *= f
            t *= f
            shrink *= f
    rows = S - 1
    H2 = np.cumsum(np.cumsum(H[:rows], axis=1), axis=1)
    ks = S - np.arange(rows)
    total = float(np.dot(t[:rows], np.einsum("ij,ij->i", W[ks], H2)))
    rel = np.empty(S + 1)
    rel[0] = shrink
    rel[1:S] = d[2 : S + 1] / lam[1:S]
    rel[S] = lam[S - 1] / big * total
    floor = -1e-12 * rel.max()
    if np.any(rel < floor):
        raise IllConditionedError(f"negative unnormalised probability {rel.min():.3g}")
    rel = np.clip(rel, 0.0, None)
    dsum = d[1:].sum()
    residual = abs(dsum - mu * rel[1:].sum()) / max(dsum, 1e-300)
    p = rel / rel.sum()
    ups = np.full(S + 1, np.nan)
    with np.errstate(divide="ignore", invalid="ignore"):
        ups[1:] = d[1:] / rel[1:]
    # states whose weight is at rounding level carry no usable ratio; hold the last reliable value
    noisy = (rel <= 1e-12 * rel.max()) | ~np.isfinite(ups) | ~(ups > 0)
    last = mu
    for n in range(1, S + 1):
        if noisy[n]:
            ups[n] = last
        else:
            last = ups[n]
    return NodeSolution(p, ups, mu, residual)
