"""Single-repairman shop with preemptive priority between part classes.

Class 1 is served whenever one of its parts is present, so its occupancy is
a plain birth-death chain.  The lower class is obtained from a level-by-level
matrix recursion on the joint chain (class-1 count within a level, class-2
count as the level).  More than two classes are handled by collapsing all
higher classes into a single Poisson stream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import IllConditionedError, NumericalError, UnsupportedSizeError, ValidationError
from .multi import evaluate_multi

TRUNCATION_TAIL = 1e-10


@dataclass(frozen=True)
class PriorityClassSpec:
    """One class at the shop: ``rates[n]`` is its arrival rate with ``n`` parts present."""

    rank: int
    rates: tuple

    def __post_init__(self):
        rates = tuple(float(r) for r in self.rates)
        if any(not (r >= 0 and math.isfinite(r)) for r in rates):
            raise ValidationError(f"class {self.rank} arrival rates must be nonnegative and finite")
        object.__setattr__(self, "rates", rates)

    @property
    def S(self):
        return len(self.rates)


def _rates(x):
    return np.asarray(x.rates if isinstance(x, PriorityClassSpec) else x, dtype=float)


def birth_death(rates, mu_r):
    """Stationary law of a birth-death chain with birth rates ``rates`` and death rate ``mu_r``."""
    lam = np.asarray(rates, dtype=float)
    if not mu_r > 0:
        raise ValidationError(f"mu_r must be positive, got {mu_r}")
    with np.errstate(divide="ignore"):
        logs = np.concatenate(([0.0], np.cumsum(np.log(lam) - math.log(mu_r))))
    logs = np.where(np.isnan(logs), -np.inf, logs)
    w = np.exp(logs - logs.max())
    return w / w.sum()


def level_matrices(lam1, lam2, mu_r):
    """``A_k`` and ``B_k = A_k - lambda_2(k) e_1 e^T`` for ``k = 0..S_2``.

    ``A_k`` has ``-lambda_1(i-1)`` below the diagonal, ``-mu_r`` above it and
    the total outflow rate of state ``(i, k)`` on the diagonal.
    """
    lam1 = np.asarray(lam1, dtype=float)
    lam2 = np.asarray(lam2, dtype=float)
    S1, S2 = len(lam1), len(lam2)
    up1 = np.append(lam1, 0.0)
    up2 = np.append(lam2, 0.0)
    A, B = [], []
    for k in range(S2 + 1):
        served = np.full(S1 + 1, mu_r)
        if k == 0:
            served[0] = 0.0
        diag = up1 + up2[k] + served
        Ak = np.diag(diag) - np.diag(lam1, -1) - np.diag(np.full(S1, mu_r), 1)
        Bk = Ak.copy()
        Bk[0, :] -= up2[k]
        A.append(Ak)
        B.append(Bk)
    return A, B


def two_class_steady_state(class1, class2, mu_r):
    """Marginal occupancy laws ``(P_1, P_2)`` of the two classes.

    ``class1``/``class2`` are rate sequences (or :class:`PriorityClassSpec`)
    with ``rates[n]`` for ``n = 0..S-1``.
    """
    lam1, lam2 = _rates(class1), _rates(class2)
    if not mu_r > 0:
        raise ValidationError(f"mu_r must be positive, got {mu_r}")
    if len(lam1) < 1 or len(lam2) < 1:
        raise ValidationError("both classes need at least one part")
    P1 = birth_death(lam1, mu_r)
    _, B = level_matrices(lam1, lam2, mu_r)
    U, s, Vt = linalg.svd(B[0])
    tol = s[0] * len(s) * np.finfo(float).eps * 10
    null_dim = int(np.sum(s <= tol))
    if null_dim != 1:
        raise NumericalError(f"level-0 matrix has a null space of dimension {null_dim}, expected 1")
    c = Vt[-1]
    if c.sum() < 0:
        c = -c
    C = [c]
    for k in range(1, len(lam2) + 1):
        try:
            lu = linalg.lu_factor(B[k], check_finite=False)
        except (linalg.LinAlgError, ValueError) as exc:
            raise IllConditionedError(f"level matrix B_{k} is singular: {exc}", index=k) from None
        if np.any(np.abs(np.diag(lu[0])) < 1e-300):
            raise IllConditionedError(f"level matrix B_{k} is singular", index=k)
        C.append(lam2[k - 1] * linalg.lu_solve(lu, C[-1], check_finite=False))
    mass = np.array([ck.sum() for ck in C])
    mass = np.where((mass < 0) & (mass > -1e-13 * mass.max()), 0.0, mass)
    if np.any(mass < 0):
        raise NumericalError(f"negative level mass {mass.min():.3g}")
    P2 = mass / mass.sum()
    return P1, P2


def truncation_level(rate, mu_r, tail=TRUNCATION_TAIL):
    """Smallest ``N`` with ``rho^(N+1) < tail`` for ``rho = rate / mu_r``."""
    rho = rate / mu_r
    if rho >= 1.0:
        raise UnsupportedSizeError(
            f"aggregated higher-priority load {rho:.4g} >= 1; the truncated queue has no finite limit"
        )
    if rho <= 0.0:
        return 1
    return max(1, int(math.ceil(math.log(tail) / math.log(rho))))


def j_class_steady_state(classes, mu_r, n_trunc=None):
    """Marginals of every class, highest priority first.

    Class ``j > 2`` sees classes ``1..j-1`` as one Poisson stream of rate
    ``sum_i sum_n lambda_i(n) P_i(n)`` whose queue is truncated at
    ``n_trunc`` (default: geometric tail below ``1e-10``).
    """
    rates = [_rates(c) for c in classes]
    if len(rates) < 2:
        raise ValidationError("at least two classes are required")
    if isinstance(classes[0], PriorityClassSpec):
        order = np.argsort([c.rank for c in classes], kind="stable")
        rates = [rates[i] for i in order]
    else:
        order = np.arange(len(rates))
    P = list(two_class_steady_state(rates[0], rates[1], mu_r))
    for j in range(2, len(rates)):
        agg = sum(float(np.dot(rates[i], P[i][:-1])) for i in range(j))
        N = n_trunc if n_trunc is not None else truncation_level(agg, mu_r)
        rho = agg / mu_r
        if n_trunc is not None and rho > 0 and rho ** (N + 1) > 1e-6:
            raise UnsupportedSizeError(f"truncation at {N} leaves tail mass {rho ** (N + 1):.3g}; increase n_trunc")
        if len(rates[j]) == 0:
            P.append(np.array([1.0]))
            continue
        P.append(two_class_steady_state(np.full(N, agg), rates[j], mu_r)[1])
    out = [None] * len(P)
    for pos, idx in enumerate(order):
        out[idx] = P[pos]
    return out


def priority_shop_solver(mu_r):
    """Repair-shop step for the decomposition: classes in the order given, first is served first."""

    def solve(lam_shop):
        if len(lam_shop) == 1:
            return [birth_death(lam_shop[0], mu_r)]
        return j_class_steady_state(list(lam_shop), mu_r)

    return solve


def priority_network_solve(cfg, eps=1e-6, max_iter=500):
    """Decomposition of the multi-good network with a preemptive-priority repairman.

    Goods are ranked in the order they appear in ``cfg.goods``.
    """
    if cfg.K != 1:
        raise UnsupportedSizeError("preemptive priority is only supported with a single repairman (K = 1)")
    return evaluate_multi(cfg, eps=eps, max_iter=max_iter, shop_solver=priority_shop_solver(cfg.mu_r))
