"""Discrete-event simulation of the physical spare-parts system.

Each good keeps its parts either at the capital good (one operating, the
rest on the shelf) or at the shared repair shop.  The operating part is
removed at ``min(X, tau)``; the type of removal is decided when the part is
installed.  Repairs are exponential with rate ``mu_r`` on ``K`` identical
channels, served first-come-first-served or with preemptive priority by
good order (the first good has the highest priority).  A preempted repair
restarts with a fresh exponential duration, which has the same law as
resuming it.

Random numbers come from counter-based Philox streams: one stream per good
per replication, split into a lifetime substream and a repair substream.
The event loop runs in numba on pre-drawn buffers and hands control back
when a buffer runs low, so results do not depend on wall-clock or thread
scheduling.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy import stats

from .errors import NumericalError, ValidationError
from .lifetime import mean_installation_time
from .multi import GoodSpec, MultiGoodConfig, MultiResult
from .single import CostRates, SingleGoodConfig, SteadyState

DISCIPLINES = ("fcfs", "priority")
DEFAULT_HORIZON = 100_000.0
DEFAULT_REPLICATIONS = 20
DEFAULT_BATCHES = 20
_MAX_CHUNK = 1 << 20

# event codes used in the digest and the trace
EV_CORRECTIVE, EV_PREVENTIVE, EV_REPAIR_DONE = 0, 1, 2
_FNV_OFFSET = np.uint64(0xCBF29CE484222325)
_FNV_PRIME = np.uint64(0x100000001B3)


@dataclass(frozen=True)
class SimConfig:
    scenario: object
    discipline: str = "fcfs"
    horizon: float = DEFAULT_HORIZON
    warmup: float = None
    seed: int = 1
    replications: int = DEFAULT_REPLICATIONS
    costs: CostRates = None
    ci_method: str = "replications"
    batches: int = DEFAULT_BATCHES
    trace_limit: int = 0

    def __post_init__(self):
        if not isinstance(self.scenario, (SingleGoodConfig, MultiGoodConfig)):
            raise ValidationError("scenario must be a SingleGoodConfig or MultiGoodConfig")
        if self.discipline not in DISCIPLINES:
            raise ValidationError(f"discipline must be one of {DISCIPLINES}, got {self.discipline!r}")
        h = float(self.horizon)
        if not (h > 0 and math.isfinite(h)):
            raise ValidationError(f"horizon must be positive and finite, got {self.horizon}")
        w = 0.1 * h if self.warmup is None else float(self.warmup)
        if not (0 <= w < h):
            raise ValidationError(f"warmup must lie in [0, horizon), got {w}")
        object.__setattr__(self, "horizon", h)
        object.__setattr__(self, "warmup", w)
        seed = int(self.seed)
        if not 0 <= seed < 2**64:
            raise ValidationError(f"seed must be a 64-bit nonnegative integer, got {self.seed}")
        object.__setattr__(self, "seed", seed)
        if int(self.replications) < 1:
            raise ValidationError(f"replications must be at least 1, got {self.replications}")
        object.__setattr__(self, "replications", int(self.replications))
        if self.ci_method not in ("replications", "batch"):
            raise ValidationError(f"ci_method must be 'replications' or 'batch', got {self.ci_method!r}")
        if self.ci_method == "batch" and int(self.batches) < 2:
            raise ValidationError("batch means need at least 2 batches")
        if isinstance(self.scenario, SingleGoodConfig) and self.costs is not None and not isinstance(self.costs, CostRates):
            raise ValidationError("costs must be a CostRates instance")

    def network(self):
        """The scenario as a :class:`MultiGoodConfig` (a single good becomes ``J = 1``)."""
        scn = self.scenario
        if isinstance(scn, MultiGoodConfig):
            return scn
        c = self.costs or CostRates()
        good = GoodSpec(scn.lifetime, scn.tau, scn.S, c.C_u, c.C_d, c.C_a)
        return MultiGoodConfig((good,), scn.K, scn.mu_r, c.C_w)


@dataclass(frozen=True)
class Estimate:
    mean: float
    half_width: float

    def contains(self, value, slack=0.0):
        return abs(value - self.mean) <= self.half_width + slack


@dataclass
class GoodEstimate:
    p_down: Estimate
    expected_inventory: Estimate
    corrective_rate: Estimate
    preventive_rate: Estimate

    @property
    def removal_rate(self):
        return Estimate(self.corrective_rate.mean + self.preventive_rate.mean,
                        self.corrective_rate.half_width + self.preventive_rate.half_width)


@dataclass
class SimEstimate:
    goods: list
    tc: Estimate
    events_processed: int
    digest: str
    conservation_ok: bool
    little: dict
    replications: int
    samples: dict = field(default_factory=dict)
    trace: np.ndarray = None


# -- numba kernel ------------------------------------------------------------------

@njit(cache=True, nogil=True)
def _accumulate(t0, t1, n, S, warmup, horizon, nb, batch_len, down_int, inv_int, shop_int):
    a = max(t0, warmup)
    b = min(t1, horizon)
    if b <= a:
        return
    in_shop = 0
    for g in range(n.shape[0]):
        in_shop += S[g] - n[g]
    k0 = min(max(int((a - warmup) / batch_len), 0), nb - 1)
    for k in range(k0, nb):
        hi = b if k == nb - 1 else min(b, warmup + (k + 1) * batch_len)
        lo = a if k == k0 else max(a, warmup + k * batch_len)
        if hi > lo:
            dt = hi - lo
            for g in range(n.shape[0]):
                if n[g] == 0:
                    down_int[g, k] += dt
                inv_int[g, k] += n[g] * dt
            shop_int[k] += in_shop * dt
        if hi >= b:
            break


@njit(cache=True, nogil=True)
def _batch_of(t, warmup, horizon, nb, batch_len):
    if t < warmup or t >= horizon:
        return -1
    k = int((t - warmup) / batch_len)
    return k if k < nb else nb - 1


@njit(cache=True, nogil=True)
def _mix(h, v):
    return (h ^ np.uint64(v)) * _FNV_PRIME


@njit(cache=True, nogil=True)
def _install(g, t, tau, life_buf, life_ptr, rem_time, rem_kind):
    x = life_buf[g, life_ptr[g]]
    life_ptr[g] += 1
    if x < tau[g]:
        rem_time[g] = t + x
        rem_kind[g] = 0
    else:
        rem_time[g] = t + tau[g]
        rem_kind[g] = 1


@njit(cache=True, nogil=True)
def _start(k, g, t, arrived, mu_r, rep_buf, rep_ptr, srv_good, srv_end, srv_arr, serving):
    srv_good[k] = g
    srv_end[k] = t + rep_buf[g, rep_ptr[g]] / mu_r
    rep_ptr[g] += 1
    srv_arr[k] = arrived
    serving[g] += 1


@njit(cache=True, nogil=True)
def _run(state_f, n, S, tau, rem_time, rem_kind, srv_good, srv_end, srv_arr,
         q_good, q_arr, q_head, q_size, queued, serving,
         life_buf, life_ptr, rep_buf, rep_ptr, mu_r, priority,
         horizon, warmup, nb, batch_len,
         down_int, inv_int, corr, prev, shop_int, shop_arr, soj_sum, soj_cnt,
         counters, digest, trace):
    """Advance the simulation; returns 0 at the horizon, 1 when a random buffer needs refilling.

    ``state_f[0]`` is the clock.  ``counters`` = [events, conservation violations, trace rows].
    """
    J = n.shape[0]
    K = srv_good.shape[0]
    cap = q_good.shape[1]
    t = state_f[0]
    while True:
        for g in range(J):
            if life_ptr[g] > life_buf.shape[1] - 2 or rep_ptr[g] > rep_buf.shape[1] - 3:
                state_f[0] = t
                return 1
        tn = np.inf
        kind = -1
        who = -1
        for g in range(J):
            if rem_time[g] < tn:
                tn = rem_time[g]
                kind = 0
                who = g
        for k in range(K):
            if srv_good[k] >= 0 and srv_end[k] < tn:
                tn = srv_end[k]
                kind = 1
                who = k
        if kind < 0 or tn >= horizon:
            _accumulate(t, horizon, n, S, warmup, horizon, nb, batch_len, down_int, inv_int, shop_int)
            state_f[0] = horizon
            return 0
        _accumulate(t, tn, n, S, warmup, horizon, nb, batch_len, down_int, inv_int, shop_int)
        t = tn
        counters[0] += 1
        bk = _batch_of(t, warmup, horizon, nb, batch_len)
        if kind == 0:
            g = who
            code = rem_kind[g]
            if bk >= 0:
                if code == 0:
                    corr[g, bk] += 1
                else:
                    prev[g, bk] += 1
                shop_arr[bk] += 1
            n[g] -= 1
            if n[g] > 0:
                _install(g, t, tau, life_buf, life_ptr, rem_time, rem_kind)
            else:
                rem_time[g] = np.inf
            # the removed part joins the repair shop
            free = -1
            for k in range(K):
                if srv_good[k] < 0:
                    free = k
                    break
            if free >= 0:
                _start(free, g, t, t, mu_r, rep_buf, rep_ptr, srv_good, srv_end, srv_arr, serving)
            else:
                victim = -1
                if priority:
                    worst = g
                    for k in range(K):
                        if srv_good[k] > worst:
                            worst = srv_good[k]
                            victim = k
                if victim >= 0:
                    h = srv_good[victim]
                    q_head[h] = (q_head[h] - 1) % cap
                    q_good[h, q_head[h]] = h
                    q_arr[h, q_head[h]] = srv_arr[victim]
                    q_size[h] += 1
                    queued[h] += 1
                    serving[h] -= 1
                    _start(victim, g, t, t, mu_r, rep_buf, rep_ptr, srv_good, srv_end, srv_arr, serving)
                else:
                    c = g if priority else 0
                    pos = (q_head[c] + q_size[c]) % cap
                    q_good[c, pos] = g
                    q_arr[c, pos] = t
                    q_size[c] += 1
                    queued[g] += 1
        else:
            k = who
            g = srv_good[k]
            code = 2
            if bk >= 0 and srv_arr[k] >= warmup:
                soj_sum[bk] += t - srv_arr[k]
                soj_cnt[bk] += 1
            srv_good[k] = -1
            serving[g] -= 1
            n[g] += 1
            if n[g] == 1:
                _install(g, t, tau, life_buf, life_ptr, rem_time, rem_kind)
            for c in range(q_size.shape[0]):
                if q_size[c] > 0:
                    h = q_good[c, q_head[c]]
                    arrived = q_arr[c, q_head[c]]
                    q_head[c] = (q_head[c] + 1) % cap
                    q_size[c] -= 1
                    queued[h] -= 1
                    _start(k, h, t, arrived, mu_r, rep_buf, rep_ptr, srv_good, srv_end, srv_arr, serving)
                    break
        # digest over (time, event type, good, stock level)
        digest[0] = _mix(digest[0], np.int64(t * 1048576.0))
        digest[0] = _mix(digest[0], np.int64(code * 65536 + g * 256 + n[g]))
        if counters[2] < trace.shape[0]:
            r = counters[2]
            trace[r, 0] = t
            trace[r, 1] = code
            trace[r, 2] = g
            trace[r, 3] = n[g]
            counters[2] += 1
        # conservation: every part is at the good, queued or in repair
        total_q = 0
        for c in range(q_size.shape[0]):
            total_q += q_size[c]
        qsum = 0
        for h in range(J):
            qsum += queued[h]
            if n[h] < 0 or n[h] + queued[h] + serving[h] != S[h]:
                counters[1] += 1
        if qsum != total_q:
            counters[1] += 1


# -- replication driver -----------------------------------------------------------

def _streams(seed, replications, J):
    root = np.random.SeedSequence(seed)
    out = []
    for rep in root.spawn(replications):
        goods = []
        for g in rep.spawn(J):
            life_ss, rep_ss = g.spawn(2)
            goods.append((np.random.Generator(np.random.Philox(life_ss)), np.random.Generator(np.random.Philox(rep_ss))))
        out.append(goods)
    return out


def _chunk(net, horizon):
    per_good = [horizon / mean_installation_time(g.installation) if g.S > 0 else 0.0 for g in net.goods]
    return int(min(_MAX_CHUNK, max(1024, 1.05 * max(per_good, default=0.0) + 1024)))


def _refill(buf, ptr, draws, width):
    J = buf.shape[0]
    new = np.empty((J, width))
    for g in range(J):
        left = buf[g, ptr[g]:]
        new[g, : len(left)] = left
        new[g, len(left):] = draws(g, width - len(left))
        ptr[g] = 0
    return new


def _replicate(net, priority, horizon, warmup, nb, streams, trace_limit, width):
    J, K = net.J, net.K
    S = np.array([g.S for g in net.goods], dtype=np.int64)
    tau = np.array([g.tau for g in net.goods], dtype=float)
    life_draw = lambda g, m: np.asarray(net.goods[g].lifetime.sample(streams[g][0], m), dtype=float)
    rep_draw = lambda g, m: streams[g][1].standard_exponential(m)
    zero_ptr = np.zeros(J, dtype=np.int64)
    life_buf = _refill(np.empty((J, 0)), zero_ptr.copy(), life_draw, width)
    rep_buf = _refill(np.empty((J, 0)), zero_ptr.copy(), rep_draw, width)
    life_ptr, rep_ptr = zero_ptr.copy(), zero_ptr.copy()

    n = S.copy()
    rem_time = np.full(J, np.inf)
    rem_kind = np.zeros(J, dtype=np.int64)
    for g in range(J):
        if n[g] > 0:
            x = life_buf[g, life_ptr[g]]
            life_ptr[g] += 1
            rem_time[g], rem_kind[g] = (x, 0) if x < tau[g] else (tau[g], 1)
    srv_good = np.full(K, -1, dtype=np.int64)
    srv_end = np.full(K, np.inf)
    srv_arr = np.zeros(K)
    rings = J if priority else 1
    cap = max(1, int(S.sum()))
    q_good = np.zeros((rings, cap), dtype=np.int64)
    q_arr = np.zeros((rings, cap))
    q_head = np.zeros(rings, dtype=np.int64)
    q_size = np.zeros(rings, dtype=np.int64)
    queued = np.zeros(J, dtype=np.int64)
    serving = np.zeros(J, dtype=np.int64)
    batch_len = (horizon - warmup) / nb
    down_int = np.zeros((J, nb))
    inv_int = np.zeros((J, nb))
    corr = np.zeros((J, nb))
    prev = np.zeros((J, nb))
    shop_int = np.zeros(nb)
    shop_arr = np.zeros(nb)
    soj_sum = np.zeros(nb)
    soj_cnt = np.zeros(nb)
    counters = np.zeros(3, dtype=np.int64)
    digest = np.array([_FNV_OFFSET], dtype=np.uint64)
    trace = np.zeros((int(trace_limit), 4))
    state_f = np.zeros(1)
    while True:
        code = _run(state_f, n, S, tau, rem_time, rem_kind, srv_good, srv_end, srv_arr,
                    q_good, q_arr, q_head, q_size, queued, serving,
                    life_buf, life_ptr, rep_buf, rep_ptr, float(net.mu_r), bool(priority),
                    horizon, warmup, nb, batch_len,
                    down_int, inv_int, corr, prev, shop_int, shop_arr, soj_sum, soj_cnt,
                    counters, digest, trace)
        if code == 0:
            break
        life_buf = _refill(life_buf, life_ptr, life_draw, width)
        rep_buf = _refill(rep_buf, rep_ptr, rep_draw, width)
    return {
        "down": down_int / batch_len,
        "inv": inv_int / batch_len,
        "corr": corr / batch_len,
        "prev": prev / batch_len,
        "shop_L": shop_int / batch_len,
        "shop_lambda": shop_arr / batch_len,
        "soj_sum": soj_sum,
        "soj_cnt": soj_cnt,
        "events": int(counters[0]),
        "violations": int(counters[1]),
        "digest": int(digest[0]),
        "trace": trace[: counters[2]],
    }


def _estimate(samples):
    x = np.asarray(samples, dtype=float)
    m = float(x.mean())
    if len(x) < 2:
        return Estimate(m, math.inf)
    hw = float(stats.t.ppf(0.975, len(x) - 1) * x.std(ddof=1) / math.sqrt(len(x)))
    return Estimate(m, hw)


def _cost_samples(net, down, corr):
    tc = np.full(down.shape[1], net.C_w * net.K)
    for i, g in enumerate(net.goods):
        tc += g.C_u * corr[i] + g.C_d * down[i] + g.C_a * g.S
    return tc


def simulate(cfg, jobs=1):
    """Run the replications of ``cfg`` and return point estimates with 95% half-widths."""
    if not isinstance(cfg, SimConfig):
        raise ValidationError("simulate expects a SimConfig")
    net = cfg.network()
    priority = cfg.discipline == "priority"
    J = net.J
    if sum(g.S for g in net.goods) == 0:
        exact = Estimate(1.0, 0.0)
        zero = Estimate(0.0, 0.0)
        goods = [GoodEstimate(exact, zero, zero, zero) for _ in net.goods]
        tc = sum(g.C_d for g in net.goods) + net.C_w * net.K
        return SimEstimate(goods, Estimate(tc, 0.0), 0, f"{int(_FNV_OFFSET):016x}", True,
                           {"L": zero, "lambda": zero, "W": Estimate(math.nan, math.nan)}, cfg.replications)
    nb = cfg.batches if cfg.ci_method == "batch" else 1
    streams = _streams(cfg.seed, cfg.replications, J)
    width = _chunk(net, cfg.horizon)
    run = lambda r: _replicate(net, priority, cfg.horizon, cfg.warmup, nb, streams[r], cfg.trace_limit, width)
    if jobs > 1 and cfg.replications > 1:
        with ThreadPoolExecutor(max_workers=int(jobs)) as ex:
            reps = list(ex.map(run, range(cfg.replications)))
    else:
        reps = [run(r) for r in range(cfg.replications)]
    events = sum(r["events"] for r in reps)
    if events == 0:
        raise NumericalError("simulation produced no events: every event rate is zero")

    def pooled(key):
        # samples are replications (one batch each) or all batches of all replications
        arr = np.stack([r[key] for r in reps])
        if arr.ndim == 3:
            return arr.transpose(1, 0, 2).reshape(J, -1)
        return arr.reshape(-1)

    down, inv, corr, prev = (pooled(k) for k in ("down", "inv", "corr", "prev"))
    goods = [
        GoodEstimate(_estimate(down[i]), _estimate(inv[i]), _estimate(corr[i]), _estimate(prev[i]))
        for i in range(J)
    ]
    tc = _cost_samples(net, down, corr)
    L = pooled("shop_L")
    lam = pooled("shop_lambda")
    ss, sc = pooled("soj_sum"), pooled("soj_cnt")
    W = np.divide(ss, sc, out=np.full_like(ss, np.nan), where=sc > 0)
    little = {"L": _estimate(L), "lambda": _estimate(lam), "W": _estimate(W), "lambda_W": _estimate(lam * W)}
    h = _FNV_OFFSET
    for r in reps:
        h = np.uint64((int(h) ^ r["digest"]) * int(_FNV_PRIME) % 2**64)
    trace = None
    if cfg.trace_limit:
        trace = np.concatenate([np.column_stack([np.full(len(r["trace"]), i), r["trace"]]) for i, r in enumerate(reps)])
    samples = {"p_down": down, "expected_inventory": inv, "corrective_rate": corr, "preventive_rate": prev, "tc": tc}
    return SimEstimate(goods, _estimate(tc), events, f"{int(h):016x}", all(r["violations"] == 0 for r in reps),
                       little, cfg.replications, samples, trace)


def write_trace(sim, path):
    """Write the recorded events as CSV: replication, time, event, good, stock level."""
    if sim.trace is None:
        raise ValidationError("simulation was run without a trace (set trace_limit)")
    names = {EV_CORRECTIVE: "corrective", EV_PREVENTIVE: "preventive", EV_REPAIR_DONE: "repair_done"}
    with open(path, "w") as fh:
        fh.write("replication,time,event,good,stock\n")
        for rep, t, code, g, lvl in sim.trace:
            fh.write(f"{int(rep)},{t:.10g},{names.get(int(code), int(code))},{int(g)},{int(lvl)}\n")


# -- analytic comparison -----------------------------------------------------------

@dataclass
class GoodComparison:
    p_down: tuple
    expected_inventory: tuple
    p_down_diff: float
    inventory_diff: float
    flagged: bool


@dataclass
class Comparison:
    goods: list
    tc_analytic: float
    tc_sim: float
    tc_pct_diff: float
    flagged: bool


def compare(analytic, sim, total_cost=None, tolerance=0.0):
    """Differences between an analytic result and a simulation of the same scenario.

    ``analytic`` is a :class:`SteadyState` (pass ``total_cost`` for the
    cost comparison) or a decomposition :class:`MultiResult`.  A quantity
    is flagged when it lies outside the simulation's 95% interval by more
    than ``tolerance``.
    """
    if isinstance(analytic, SteadyState):
        rows = [(analytic.p_down, analytic.expected_inventory, len(analytic.probs) - 1)]
        tc = total_cost
    elif isinstance(analytic, MultiResult):
        rows = [(g.p_down, g.expected_inventory, len(g.probs) - 1) for g in analytic.goods]
        tc = analytic.total_cost if total_cost is None else total_cost
    else:
        raise ValidationError(f"cannot compare a {type(analytic).__name__} with a simulation")
    if len(rows) != len(sim.goods):
        raise ValidationError(f"scenario mismatch: {len(rows)} analytic goods vs {len(sim.goods)} simulated")
    out = []
    for (p0, einv, _), est in zip(rows, sim.goods):
        flag = not (est.p_down.contains(p0, tolerance) and est.expected_inventory.contains(einv, tolerance))
        out.append(GoodComparison((p0, est.p_down.mean), (einv, est.expected_inventory.mean),
                                  p0 - est.p_down.mean, einv - est.expected_inventory.mean, flag))
    if tc is None:
        pct = math.nan
        tc_flag = False
    else:
        pct = 100.0 * (tc - sim.tc.mean) / sim.tc.mean if sim.tc.mean else 0.0
        tc_flag = not sim.tc.contains(tc, tolerance * abs(sim.tc.mean))
    return Comparison(out, math.nan if tc is None else tc, sim.tc.mean, pct, tc_flag or any(g.flagged for g in out))
