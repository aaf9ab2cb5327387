"""Component lifetimes and the installation time ``Z = min(X, tau)``.

A part installed in the capital good stays there until it fails (age ``X``)
or reaches the age threshold ``tau``, whichever happens first.  Every queueing
computation downstream only needs ``Z`` through a handful of integrals:

* the truncated moments ``M_k(s) = int_0^tau x^k f(x) exp(-s x) dx``,
* the full transform ``E[exp(-s Z)]`` which adds the mass ``1 - F(tau)``
  sitting at ``tau``,
* normalised Taylor coefficients ``E[(cZ)^k / k! exp(-s Z)]``.

Gamma-type lifetimes (exponential, erlang, gamma) use the incomplete-gamma
closed form; weibull lifetimes go through adaptive Gauss-Kronrod quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy import integrate, optimize, special, stats

from .errors import QuadratureError, UnsupportedLifetimeError, ValidationError

FAMILIES = ("exponential", "gamma", "weibull", "erlang", "degenerate")

_PARAM_NAMES = {
    "exponential": ("rate",),
    "gamma": ("shape", "scale"),
    "weibull": ("shape", "scale"),
    "erlang": ("phases", "rate"),
    "degenerate": ("point",),
}

QUAD_EPSABS = 1e-12
MAX_DERIVATIVE_ORDER = 64
CV_MAX = 1.5


@dataclass(frozen=True)
class LifetimeSpec:
    """Parametric lifetime distribution.

    Use the named constructors (``LifetimeSpec.gamma(2, 1)``) or
    :func:`from_mean_cv`; ``params`` follows the order in ``_PARAM_NAMES``.
    """

    family: str
    params: tuple

    def __post_init__(self):
        if self.family not in _PARAM_NAMES:
            raise ValidationError(f"unknown lifetime family {self.family!r}; expected one of {FAMILIES}")
        names = _PARAM_NAMES[self.family]
        if len(self.params) != len(names):
            raise ValidationError(f"{self.family} lifetime takes parameters {names}, got {self.params!r}")
        vals = []
        for name, v in zip(names, self.params):
            try:
                v = float(v)
            except (TypeError, ValueError):
                raise ValidationError(f"lifetime parameter {name} must be numeric, got {v!r}") from None
            if not (v > 0 and math.isfinite(v)):
                raise ValidationError(f"lifetime parameter {name} must be a positive finite number, got {v}")
            vals.append(v)
        if self.family == "erlang":
            if vals[0] != int(vals[0]):
                raise ValidationError(f"erlang phases must be a positive integer, got {vals[0]}")
            vals[0] = int(vals[0])
        object.__setattr__(self, "params", tuple(vals))

    # -- constructors -----------------------------------------------------
    @classmethod
    def exponential(cls, rate):
        return cls("exponential", (rate,))

    @classmethod
    def gamma(cls, shape, scale):
        return cls("gamma", (shape, scale))

    @classmethod
    def weibull(cls, shape, scale):
        return cls("weibull", (shape, scale))

    @classmethod
    def erlang(cls, phases, rate):
        return cls("erlang", (phases, rate))

    @classmethod
    def degenerate(cls, point):
        return cls("degenerate", (point,))

    # -- views --------------------------------------------------------------
    def __getattr__(self, name):
        names = _PARAM_NAMES.get(object.__getattribute__(self, "family"), ())
        if name in names:
            return self.params[names.index(name)]
        raise AttributeError(name)

    @property
    def is_gamma_type(self):
        return self.family in ("exponential", "gamma", "erlang")

    def gamma_shape_scale(self):
        """(shape, scale) of the equivalent gamma law for gamma-type families."""
        if self.family == "exponential":
            return 1.0, 1.0 / self.params[0]
        if self.family == "erlang":
            return float(self.params[0]), 1.0 / self.params[1]
        if self.family == "gamma":
            return self.params
        raise ValueError(f"{self.family} is not a gamma-type family")

    @property
    def dist(self):
        """Frozen scipy distribution (``None`` for the degenerate family)."""
        return _frozen(self)

    def pdf(self, x):
        if self.family == "degenerate":
            raise UnsupportedLifetimeError("degenerate lifetime has no density")
        return self.dist.pdf(x)

    def cdf(self, x):
        if self.family == "degenerate":
            return np.where(np.asarray(x) >= self.params[0], 1.0, 0.0)
        return self.dist.cdf(x)

    def sf(self, x):
        if self.family == "degenerate":
            return np.where(np.asarray(x) >= self.params[0], 0.0, 1.0)
        return self.dist.sf(x)

    def mean(self):
        if self.family == "degenerate":
            return self.params[0]
        return float(self.dist.mean())

    def std(self):
        if self.family == "degenerate":
            return 0.0
        return float(self.dist.std())

    def cv(self):
        return self.std() / self.mean()

    def sample(self, rng, size=None):
        """Draw lifetimes with a :class:`numpy.random.Generator`."""
        f, p = self.family, self.params
        if f == "exponential":
            return rng.exponential(1.0 / p[0], size)
        if f == "gamma":
            return rng.gamma(p[0], p[1], size)
        if f == "erlang":
            return rng.gamma(float(p[0]), 1.0 / p[1], size)
        if f == "weibull":
            return p[1] * rng.weibull(p[0], size)
        return np.full(size, p[0]) if size is not None else p[0]

    def to_dict(self):
        d = {"family": self.family}
        d.update(zip(_PARAM_NAMES[self.family], self.params))
        return d

    @classmethod
    def from_dict(cls, d):
        """Parse ``{"family": ..., <params>}`` or ``{"family": ..., "mean": m, "cv": c}``."""
        if not isinstance(d, dict) or "family" not in d:
            raise ValidationError(f"lifetime must be a mapping with a 'family' key, got {d!r}")
        family = d["family"]
        if "mean" in d or "cv" in d:
            if family == "erlang" and "phases" in d:
                k = d["phases"]
                return cls.erlang(k, k / float(d["mean"]))
            return from_mean_cv(family, d.get("mean"), d.get("cv"))
        names = _PARAM_NAMES.get(family)
        if names is None:
            raise ValidationError(f"unknown lifetime family {family!r}")
        missing = [n for n in names if n not in d]
        if missing:
            raise ValidationError(f"lifetime.{missing[0]} is required for the {family} family")
        extra = set(d) - set(names) - {"family"}
        if extra:
            raise ValidationError(f"unexpected lifetime field(s) {sorted(extra)} for the {family} family")
        return cls(family, tuple(d[n] for n in names))

    def __str__(self):
        args = ", ".join(f"{n}={v:g}" for n, v in zip(_PARAM_NAMES[self.family], self.params))
        return f"{self.family}({args})"


@lru_cache(maxsize=None)
def _frozen(spec):
    f, p = spec.family, spec.params
    if f == "exponential":
        return stats.expon(scale=1.0 / p[0])
    if f == "gamma":
        return stats.gamma(p[0], scale=p[1])
    if f == "erlang":
        return stats.gamma(float(p[0]), scale=1.0 / p[1])
    if f == "weibull":
        return stats.weibull_min(p[0], scale=p[1])
    return None


def _weibull_cv(shape):
    g1 = special.gammaln(1.0 + 1.0 / shape)
    g2 = special.gammaln(1.0 + 2.0 / shape)
    return math.sqrt(math.expm1(g2 - 2.0 * g1))


def from_mean_cv(family, mean, cv):
    """Lifetime of the given family with prescribed mean and coefficient of variation.

    Gamma: ``shape = 1/cv^2``, ``scale = mean * cv^2``.  Weibull: the shape
    solves ``Gamma(1+2/k)/Gamma(1+1/k)^2 - 1 = cv^2`` (monotone in ``k``).
    """
    try:
        mean, cv = float(mean), float(cv)
    except (TypeError, ValueError):
        raise ValidationError(f"mean and cv must be numeric, got mean={mean!r}, cv={cv!r}") from None
    if not mean > 0:
        raise ValidationError(f"mean must be positive, got {mean}")
    if not 0 < cv <= CV_MAX:
        raise ValidationError(f"cv must lie in (0, {CV_MAX}], got {cv}")
    if family == "gamma":
        return LifetimeSpec.gamma(1.0 / cv**2, mean * cv**2)
    if family == "weibull":
        lo, hi = 0.1, 2000.0
        target = math.log(cv)
        fn = lambda logk: math.log(_weibull_cv(math.exp(logk))) - target
        flo, fhi = fn(math.log(lo)), fn(math.log(hi))
        if flo * fhi > 0:
            raise ValidationError(
                f"weibull shape for cv={cv} not bracketed in [{lo}, {hi}] (residuals {flo:.3g}, {fhi:.3g})"
            )
        try:
            root, info = optimize.brentq(fn, math.log(lo), math.log(hi), xtol=1e-14, rtol=1e-15,
                                         full_output=True)
        except RuntimeError as exc:
            raise QuadratureError(f"weibull shape root-finding failed for cv={cv}: {exc}") from None
        if not info.converged:
            raise QuadratureError(f"weibull shape root-finding did not converge for cv={cv} "
                                  f"(bracket [{lo}, {hi}], last iterate {math.exp(root):.6g})")
        shape = math.exp(root)
        scale = mean / math.exp(special.gammaln(1.0 + 1.0 / shape))
        return LifetimeSpec.weibull(shape, scale)
    if family == "exponential":
        if abs(cv - 1.0) > 1e-12:
            raise ValidationError("an exponential lifetime always has cv = 1")
        return LifetimeSpec.exponential(1.0 / mean)
    raise ValidationError(f"from_mean_cv supports gamma and weibull families, got {family!r}")


@dataclass(frozen=True)
class InstallationTime:
    """Time a part spends installed: ``min(X, tau)``, or ``min(X, Y)`` for a random threshold ``Y``.

    ``threshold`` (a lifetime-like law for ``Y``) is only used by the
    general construction; the solvers work with a deterministic ``tau``.
    """

    lifetime: LifetimeSpec
    tau: float = math.inf
    threshold: Optional[LifetimeSpec] = None

    def __post_init__(self):
        tau = float(self.tau)
        if math.isnan(tau) or tau <= 0:
            raise ValidationError(f"age threshold tau must be positive (or inf), got {self.tau}")
        object.__setattr__(self, "tau", tau)
        if self.threshold is not None and self.threshold.family == "degenerate":
            object.__setattr__(self, "tau", min(tau, self.threshold.params[0]))
            object.__setattr__(self, "threshold", None)

    @property
    def random_threshold(self):
        return self.threshold is not None

    def cdf(self, z):
        """``G(z) = F(z) + H(z) - F(z) H(z)``; with a fixed threshold ``H`` jumps to 1 at ``tau``."""
        z = np.asarray(z, dtype=float)
        F = self.lifetime.cdf(z)
        if self.threshold is None:
            H = np.where(z >= self.tau, 1.0, 0.0)
        else:
            H = self.threshold.cdf(z)
        return F + H - F * H

    def pdf(self, z):
        """Density of the continuous part, ``g = f + h - f H - F h`` (fixed threshold: ``f`` on ``[0, tau)``)."""
        z = np.asarray(z, dtype=float)
        f = self.lifetime.pdf(z)
        if self.threshold is None:
            return np.where(z < self.tau, f, 0.0)
        F = self.lifetime.cdf(z)
        h = self.threshold.pdf(z)
        H = self.threshold.cdf(z)
        return f + h - f * H - F * h

    def atom(self):
        """Probability mass at ``tau`` (preventive replacement probability)."""
        if self.threshold is not None or math.isinf(self.tau):
            return 0.0
        return float(self.lifetime.sf(self.tau))

    def p_corrective(self):
        """``P(X < tau)``: probability a replacement is triggered by a failure."""
        if self.threshold is not None:
            val, err = integrate.quad(lambda x: self.lifetime.pdf(x) * self.threshold.sf(x), 0, np.inf,
                                      epsabs=QUAD_EPSABS, limit=200)
            return val
        return float(self.lifetime.cdf(self.tau))


def _check_solvable(inst):
    if inst.lifetime.family == "degenerate":
        raise UnsupportedLifetimeError(
            "degenerate lifetimes have no density; they are only supported by the simulator"
        )


# -- moment machinery -------------------------------------------------------

def _gamma_moments(a, theta, tau, s, order, scale):
    """int_0^tau (scale x)^k / k! f(x) e^{-s x} dx for k = 0..order, gamma(a, theta) density."""
    k = np.arange(order + 1, dtype=float)
    beta = 1.0 / theta + s
    logc = (k * math.log(scale) - special.gammaln(k + 1) - special.gammaln(a) - a * math.log(theta)
            + special.gammaln(a + k) - (a + k) * math.log(beta))
    if math.isinf(tau):
        return np.exp(logc)
    return np.exp(logc) * special.gammainc(a + k, beta * tau)


@lru_cache(maxsize=8)
def _legendre_01(n):
    y, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (y + 1.0), 0.5 * w


def _weibull_fixed_rule(c, theta, xmax, s, order, scale, n, power=4):
    # x = xmax * y**power flattens the x**(c-1) behaviour at the origin
    y, wt = _legendre_01(n)
    x = xmax * y**power
    jac = xmax * power * y ** (power - 1)
    logf = math.log(c / theta) + (c - 1.0) * np.log(x / theta) - (x / theta) ** c
    k = np.arange(order + 1, dtype=float)[:, None]
    expo = k * np.log(scale * x)[None, :] - special.gammaln(k + 1) - s * x[None, :] + logf[None, :]
    return np.exp(expo) @ (wt * jac)


def _weibull_moments(c, theta, tau, s, order, scale):
    xmax = tau if math.isfinite(tau) else theta * (-math.log(1e-300)) ** (1.0 / c)
    coarse = _weibull_fixed_rule(c, theta, xmax, s, order, scale, 600)
    fine = _weibull_fixed_rule(c, theta, xmax, s, order, scale, 800)
    if np.all(np.isfinite(fine)) and float(np.abs(fine - coarse).max()) <= QUAD_EPSABS * 0.1:
        return fine
    return _weibull_adaptive(c, theta, tau, s, order, scale)


def _weibull_adaptive(c, theta, tau, s, order, scale):
    k = np.arange(order + 1, dtype=float)
    lg = special.gammaln(k + 1)
    # integrand is bounded by e^{-t}; beyond t = 60 nothing above 1e-26 remains
    tmax = 60.0 if math.isinf(tau) else min((tau / theta) ** c, 60.0)
    log_scale_theta = math.log(scale * theta)

    def integrand(t):
        if t <= 0.0:
            out = np.zeros(order + 1)
            out[0] = 1.0
            return out
        x_over = t ** (1.0 / c)
        expo = k * (log_scale_theta + math.log(x_over)) - lg - s * theta * x_over - t
        return np.exp(expo)

    res, err, info = integrate.quad_vec(integrand, 0.0, tmax, epsabs=QUAD_EPSABS * 1e-1, epsrel=1e-12,
                                        norm="max", limit=4000, full_output=True)
    if not info.success and err > QUAD_EPSABS:
        raise QuadratureError(f"weibull transform quadrature failed at s={s}", err)
    return res


def _random_threshold_moments(inst, s, order, scale):
    k = np.arange(order + 1, dtype=float)
    lg = special.gammaln(k + 1)
    logscale = math.log(scale)

    def integrand(x):
        g = float(inst.pdf(x))
        if x <= 0.0:
            out = np.zeros(order + 1)
            out[0] = g
            return out
        return g * np.exp(k * (logscale + math.log(x)) - lg - s * x)

    res, err, info = integrate.quad_vec(integrand, 0.0, math.inf, epsabs=QUAD_EPSABS * 1e-1,
                                        epsrel=1e-12, norm="max", limit=4000, full_output=True)
    if not info.success and err > QUAD_EPSABS:
        raise QuadratureError(f"random-threshold transform quadrature failed at s={s}", err)
    return res


@lru_cache(maxsize=4096)
def _moments_cached(inst, s, order, scale, atom, method):
    life = inst.lifetime
    if inst.threshold is not None:
        return _random_threshold_moments(inst, s, order, scale)
    tau = inst.tau
    if life.family == "degenerate":
        p = life.params[0]
        out = np.zeros(order + 1)
        k = np.arange(order + 1, dtype=float)
        if p < tau:
            out = np.exp(k * math.log(scale * p) - special.gammaln(k + 1) - s * p)
        elif atom:
            out = np.exp(k * math.log(scale * tau) - special.gammaln(k + 1) - s * tau)
        return out
    if life.is_gamma_type and method != "quad":
        a, theta = life.gamma_shape_scale()
        body = _gamma_moments(a, theta, tau, s, order, scale)
    elif life.family == "weibull" or method == "quad":
        if life.family == "weibull":
            body = _weibull_moments(life.params[0], life.params[1], tau, s, order, scale)
        else:
            body = _quad_moments(life, tau, s, order, scale)
    else:
        raise ValidationError(f"no transform available for {life}")
    if atom and not math.isinf(tau):
        k = np.arange(order + 1, dtype=float)
        logsf = float(life.dist.logsf(tau))
        body = body + np.exp(k * math.log(scale * tau) - special.gammaln(k + 1) - s * tau + logsf)
    return body


def _quad_moments(life, tau, s, order, scale):
    k = np.arange(order + 1, dtype=float)
    lg = special.gammaln(k + 1)
    logscale = math.log(scale)
    dist = life.dist

    def integrand(x):
        f = float(dist.pdf(x))
        if x <= 0.0:
            out = np.zeros(order + 1)
            out[0] = f
            return out
        return f * np.exp(k * (logscale + math.log(x)) - lg - s * x)

    res, err, info = integrate.quad_vec(integrand, 0.0, tau, epsabs=QUAD_EPSABS * 1e-1, epsrel=1e-12,
                                        norm="max", limit=4000, full_output=True)
    if not info.success and err > QUAD_EPSABS:
        raise QuadratureError(f"transform quadrature failed at s={s}", err)
    return res


def installation_moments(inst, s, order, scale=1.0, method="auto"):
    """Normalised Taylor coefficients of the installation-time transform.

    Returns ``E[(scale * Z)^k / k! * exp(-s Z)]`` for ``k = 0..order``, the
    mass at ``tau`` included.  With ``scale = 1`` entry ``k`` equals
    ``(-1)^k G^{(k)}(s) / k!``; with ``scale = s`` the entries are the
    Poisson-mixture weights ``P(N(sZ) = k)``.
    """
    if s < 0:
        raise ValidationError(f"transform argument must be nonnegative, got {s}")
    return _moments_cached(inst, float(s), int(order), float(scale), True, method).copy()


def installation_laplace(inst, s):
    """``E[exp(-s Z)]`` for ``Z = min(X, tau)`` (equals 1 at ``s = 0``)."""
    return float(_moments_cached(inst, float(s), 0, 1.0, True, "auto")[0])


def truncated_laplace(inst, s, k=0, max_order=MAX_DERIVATIVE_ORDER, method="auto"):
    """``M_k(s) = int_0^tau x^k f(x) exp(-s x) dx``.

    ``d^k/ds^k int_0^tau f(x) e^{-sx} dx = (-1)^k M_k(s)``.  The mass of
    ``Z`` at ``tau`` is *not* included here; see :func:`installation_laplace`.
    ``method`` is ``"auto"`` (closed form for gamma-type lifetimes),
    ``"quad"`` (adaptive quadrature for every family).
    """
    k = int(k)
    if k < 0 or k > max_order:
        raise ValidationError(f"derivative order must lie in [0, {max_order}], got {k}")
    if s < 0:
        raise ValidationError(f"transform argument must be nonnegative, got {s}")
    if inst.threshold is None and inst.lifetime.family != "degenerate" and method == "quad":
        life, tau = inst.lifetime, inst.tau
        dist = life.dist
        fn = lambda x: x**k * dist.pdf(x) * math.exp(-s * x)
        val, err = integrate.quad(fn, 0.0, tau, epsabs=QUAD_EPSABS, epsrel=1e-12, limit=500)
        if err > 10 * max(QUAD_EPSABS, 1e-12 * abs(val)):
            raise QuadratureError(f"M_{k}({s}) did not reach tolerance", err)
        return val
    m = _moments_cached(inst, float(s), k, 1.0, False, method)
    return float(m[k] * math.exp(special.gammaln(k + 1)))


def mean_installation_time(inst):
    """``1/mu = int_0^tau (1 - F(x)) dx``, the mean of ``min(X, tau)``."""
    if inst.tau <= 0:
        raise ValidationError("tau = 0 gives a zero installation time")
    val = float(_moments_cached(inst, 0.0, 1, 1.0, True, "auto")[1])
    if not val > 0:
        raise QuadratureError(f"mean installation time evaluated to {val}")
    return val


def installation_rate(inst):
    """``mu``: reciprocal of the mean installation time."""
    return 1.0 / mean_installation_time(inst)


def _upper_point(inst):
    if not math.isinf(inst.tau):
        return inst.tau
    if inst.lifetime.family == "degenerate":
        return inst.lifetime.params[0]
    return float(inst.lifetime.dist.isf(1e-17))


def poisson_weights(inst, rate, min_count=0):
    """``w_j = P(N = j)`` where ``N`` is Poisson with random mean ``rate * Z``.

    These are the coefficients of ``G(x) = sum_j w_j (1 - x/rate)^j`` for
    ``0 <= x <= rate``; every term is nonnegative.  The length is chosen so
    the neglected tail is below ``1e-15`` and is at least ``min_count + 1``.
    """
    if not rate > 0:
        raise ValidationError(f"weight rate must be positive, got {rate}")
    m = rate * _upper_point(inst)
    extra = 32 * int(math.ceil(int(min_count) / 32))  # bucketed so the transform cache is reused
    count = int(math.ceil(m + 12.0 * math.sqrt(m) + 40.0)) + extra
    w = installation_moments(inst, rate, count, scale=rate)
    tail = 1.0 - w.sum()
    if tail > 1e-12:
        raise QuadratureError(f"Poisson weights at rate {rate} leave tail mass {tail:.3g}", tail)
    return w
