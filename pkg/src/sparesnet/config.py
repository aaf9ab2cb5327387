"""Structured run configurations (YAML or JSON) and their validation."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .errors import ValidationError
from .lifetime import LifetimeSpec
from .multi import GoodSpec, MultiGoodConfig
from .optimize import DEFAULT_TAU_GRID
from .single import CostRates, SingleGoodConfig

COMMANDS = (
    "solve-single",
    "optimize-single",
    "solve-multi",
    "optimize-multi",
    "solve-priority",
    "simulate",
    "experiment",
    "sweep",
)
FORMATS = ("csv", "table")
SWEEP_AXES = ("tau", "K", "S", "C_u", "C_d", "C_a", "C_w", "mu_r")
_SINGLE_KEYS = {"S", "K", "tau", "mu_r", "lifetime", "costs"}
_MULTI_KEYS = {"goods", "K", "mu_r", "C_w"}
_GOOD_KEYS = {"name", "lifetime", "tau", "S", "C_u", "C_d", "C_a"}
_COST_KEYS = {"C_u", "C_d", "C_a", "C_w", "C_h"}


def _where(path, exc):
    return ValidationError(f"{path}: {exc}")


def _float(value, path, allow_inf=False):
    if isinstance(value, str) and value.strip().lower() in ("inf", "+inf", "infinity", ".inf"):
        value = math.inf
    if value is None and allow_inf:
        return math.inf
    if isinstance(value, bool):
        raise ValidationError(f"{path}: expected a number, got {value!r}")
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise ValidationError(f"{path}: expected a number, got {value!r}") from None
    if math.isnan(v) or (math.isinf(v) and not allow_inf):
        raise ValidationError(f"{path}: must be finite, got {value!r}")
    return v


def _int(value, path):
    if isinstance(value, bool) or not (isinstance(value, int) or (isinstance(value, float) and value.is_integer())):
        raise ValidationError(f"{path}: expected an integer, got {value!r}")
    return int(value)


def _num_out(v):
    """JSON-safe number (infinity as the string ``"inf"``)."""
    return "inf" if isinstance(v, float) and math.isinf(v) else v


def _check_keys(d, allowed, path):
    if not isinstance(d, dict):
        raise ValidationError(f"{path}: expected a mapping, got {type(d).__name__}")
    extra = sorted(set(d) - allowed)
    if extra:
        raise ValidationError(f"{path}: unknown field(s) {extra}")


def parse_lifetime(d, path="lifetime"):
    if not isinstance(d, dict):
        raise ValidationError(f"{path}: expected a mapping, got {d!r}")
    clean = {k: v if k == "family" else _float(v, f"{path}.{k}") for k, v in d.items()}
    if "phases" in clean:
        clean["phases"] = _int(d["phases"], f"{path}.phases")
    try:
        return LifetimeSpec.from_dict(clean)
    except ValidationError as exc:
        raise _where(path, exc) from None


def parse_costs(d, path="costs"):
    d = d or {}
    _check_keys(d, _COST_KEYS, path)
    try:
        return CostRates(**{k: _float(v, f"{path}.{k}") for k, v in d.items()})
    except ValidationError as exc:
        raise _where(path, exc) from None


def parse_single(d, path="scenario", need_policy=True):
    _check_keys(d, _SINGLE_KEYS, path)
    for key in ("lifetime", "mu_r") + (("S", "K") if need_policy else ()):
        if key not in d:
            raise ValidationError(f"{path}.{key}: required")
    life = parse_lifetime(d["lifetime"], f"{path}.lifetime")
    mu_r = _float(d["mu_r"], f"{path}.mu_r")
    if not mu_r > 0:
        raise ValidationError(f"{path}.mu_r: must be positive, got {mu_r}")
    S = _int(d.get("S", 0), f"{path}.S")
    K = _int(d.get("K", 1), f"{path}.K")
    tau = _float(d.get("tau", math.inf), f"{path}.tau", allow_inf=True)
    try:
        cfg = SingleGoodConfig(S, K, tau, mu_r, life)
    except ValidationError as exc:
        raise _where(path, exc) from None
    return cfg, parse_costs(d.get("costs"), f"{path}.costs")


def parse_multi(d, path="scenario"):
    _check_keys(d, _MULTI_KEYS, path)
    goods_in = d.get("goods")
    if not isinstance(goods_in, list) or not goods_in:
        raise ValidationError(f"{path}.goods: expected a nonempty list")
    goods = []
    for i, g in enumerate(goods_in):
        gp = f"{path}.goods[{i}]"
        _check_keys(g, _GOOD_KEYS, gp)
        if "lifetime" not in g:
            raise ValidationError(f"{gp}.lifetime: required")
        try:
            goods.append(GoodSpec(
                parse_lifetime(g["lifetime"], f"{gp}.lifetime"),
                _float(g.get("tau", math.inf), f"{gp}.tau", allow_inf=True),
                _int(g.get("S", 0), f"{gp}.S"),
                *(_float(g.get(k, 0.0), f"{gp}.{k}") for k in ("C_u", "C_d", "C_a")),
                name=str(g.get("name", f"good{i + 1}")),
            ))
        except ValidationError as exc:
            msg = str(exc)
            raise (exc if msg.startswith(gp) else _where(gp, exc)) from None
    mu_r = _float(d.get("mu_r"), f"{path}.mu_r")
    if not mu_r > 0:
        raise ValidationError(f"{path}.mu_r: must be positive, got {mu_r}")
    try:
        return MultiGoodConfig(tuple(goods), _int(d.get("K", 1), f"{path}.K"), mu_r,
                               _float(d.get("C_w", 0.0), f"{path}.C_w"))
    except ValidationError as exc:
        raise _where(path, exc) from None


def single_to_dict(cfg, costs):
    return {
        "S": cfg.S,
        "K": cfg.K,
        "tau": _num_out(cfg.tau),
        "mu_r": cfg.mu_r,
        "lifetime": cfg.lifetime.to_dict(),
        "costs": {k: getattr(costs, k) for k in ("C_u", "C_d", "C_a", "C_w", "C_h")},
    }


def multi_to_dict(cfg):
    return {
        "K": cfg.K,
        "mu_r": cfg.mu_r,
        "C_w": cfg.C_w,
        "goods": [
            {"name": g.name, "lifetime": g.lifetime.to_dict(), "tau": _num_out(g.tau), "S": g.S,
             "C_u": g.C_u, "C_d": g.C_d, "C_a": g.C_a}
            for g in cfg.goods
        ],
    }


@dataclass
class RunConfig:
    command: str
    scenario: object = None
    costs: CostRates = None
    output: str = None
    format: str = "csv"
    seed: int = 1
    tolerances: dict = field(default_factory=lambda: {"eps": 1e-6, "max_iter": 500})
    optimize: dict = field(default_factory=dict)
    simulation: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)
    experiment: dict = field(default_factory=dict)

    def to_dict(self):
        d = {"command": self.command, "format": self.format, "seed": self.seed,
             "tolerances": dict(self.tolerances)}
        if self.output is not None:
            d["output"] = self.output
        if isinstance(self.scenario, SingleGoodConfig):
            d["scenario"] = single_to_dict(self.scenario, self.costs or CostRates())
        elif isinstance(self.scenario, MultiGoodConfig):
            d["scenario"] = multi_to_dict(self.scenario)
        for name in ("optimize", "simulation", "sweep", "experiment"):
            section = getattr(self, name)
            if section:
                d[name] = json.loads(json.dumps(section, default=_num_out), parse_constant=str)
        return d

    def digest(self):
        """Hash of everything that affects the results (the output path does not)."""
        d = self.to_dict()
        d.pop("output", None)
        return config_digest(d)


def config_digest(d):
    canon = json.dumps(d, sort_keys=True, separators=(",", ":"), default=_num_out)
    return hashlib.sha256(canon.encode()).hexdigest()


_SECTION_KEYS = {
    "optimize": {"tau_grid", "K", "S_cap", "K_cap", "S_min", "discipline"},
    "simulation": {"horizon", "warmup", "replications", "discipline", "ci_method", "batches", "trace", "trace_limit"},
    "sweep": {"axes", "optimize_S"},
    "experiment": {"preset", "max_instances", "replications", "simulate"},
}


def _tau_list(values, path):
    if not isinstance(values, list) or not values:
        raise ValidationError(f"{path}: expected a nonempty list")
    out = [_float(v, f"{path}[{i}]", allow_inf=True) for i, v in enumerate(values)]
    for i, v in enumerate(out):
        if not v > 0:
            raise ValidationError(f"{path}[{i}]: must be positive, got {v}")
    return out


def _normalize_section(name, d):
    d = dict(d or {})
    _check_keys(d, _SECTION_KEYS[name], name)
    if name == "optimize":
        if "tau_grid" in d:
            d["tau_grid"] = _tau_list(d["tau_grid"], "optimize.tau_grid")
        for k in ("K", "S_cap", "K_cap"):
            if k in d:
                d[k] = _int(d[k], f"optimize.{k}")
                if d[k] < 1:
                    raise ValidationError(f"optimize.{k}: must be at least 1, got {d[k]}")
        if "S_min" in d:
            d["S_min"] = _int(d["S_min"], "optimize.S_min")
            if d["S_min"] < 0:
                raise ValidationError(f"optimize.S_min: must be nonnegative, got {d['S_min']}")
        if "discipline" in d and d["discipline"] not in ("fcfs", "priority"):
            raise ValidationError(f"optimize.discipline: must be 'fcfs' or 'priority', got {d['discipline']!r}")
    elif name == "simulation":
        for k in ("horizon", "warmup"):
            if k in d:
                d[k] = _float(d[k], f"simulation.{k}")
        for k in ("replications", "batches", "trace_limit"):
            if k in d:
                d[k] = _int(d[k], f"simulation.{k}")
        if "discipline" in d and d["discipline"] not in ("fcfs", "priority"):
            raise ValidationError(f"simulation.discipline: must be 'fcfs' or 'priority', got {d['discipline']!r}")
        if "ci_method" in d and d["ci_method"] not in ("replications", "batch"):
            raise ValidationError(f"simulation.ci_method: must be 'replications' or 'batch', got {d['ci_method']!r}")
    elif name == "sweep":
        axes = d.get("axes")
        if not isinstance(axes, dict) or not axes:
            raise ValidationError("sweep.axes: expected a nonempty mapping of axis -> list of values")
        clean = {}
        for axis, values in axes.items():
            if axis not in SWEEP_AXES:
                raise ValidationError(f"sweep.axes.{axis}: unknown axis (choose from {list(SWEEP_AXES)})")
            if not isinstance(values, list) or not values:
                raise ValidationError(f"sweep.axes.{axis}: empty axis")
            if axis in ("K", "S"):
                clean[axis] = [_int(v, f"sweep.axes.{axis}[{i}]") for i, v in enumerate(values)]
            elif axis == "tau":
                clean[axis] = _tau_list(values, "sweep.axes.tau")
            else:
                clean[axis] = [_float(v, f"sweep.axes.{axis}[{i}]") for i, v in enumerate(values)]
        d["axes"] = clean
        d["optimize_S"] = bool(d.get("optimize_S", False))
    elif name == "experiment":
        if "max_instances" in d and d["max_instances"] is not None:
            d["max_instances"] = _int(d["max_instances"], "experiment.max_instances")
        if "replications" in d:
            d["replications"] = _int(d["replications"], "experiment.replications")
        if "simulate" in d:
            d["simulate"] = bool(d["simulate"])
    return d


def from_dict(d):
    """Validate a raw config mapping into a :class:`RunConfig`."""
    if not isinstance(d, dict):
        raise ValidationError("config: top level must be a mapping")
    allowed = {"command", "scenario", "output", "format", "seed", "tolerances"} | set(_SECTION_KEYS)
    _check_keys(d, allowed, "config")
    command = d.get("command")
    if command not in COMMANDS:
        raise ValidationError(f"command: unknown command {command!r} (choose from {list(COMMANDS)})")
    fmt = d.get("format", "csv")
    if fmt not in FORMATS:
        raise ValidationError(f"format: must be one of {list(FORMATS)}, got {fmt!r}")
    seed = _int(d.get("seed", 1), "seed")
    if not 0 <= seed < 2**64:
        raise ValidationError(f"seed: must be a nonnegative 64-bit integer, got {seed}")
    tol = dict(d.get("tolerances") or {})
    _check_keys(tol, {"eps", "max_iter"}, "tolerances")
    tol = {"eps": _float(tol.get("eps", 1e-6), "tolerances.eps"),
           "max_iter": _int(tol.get("max_iter", 500), "tolerances.max_iter")}
    if not tol["eps"] > 0:
        raise ValidationError(f"tolerances.eps: must be positive, got {tol['eps']}")
    sections = {name: _normalize_section(name, d.get(name)) if name in d else {} for name in _SECTION_KEYS}
    if command == "sweep" and not sections["sweep"]:
        raise ValidationError("sweep: section required for the sweep command")

    scenario = costs = None
    raw = d.get("scenario")
    if command != "experiment":
        if raw is None:
            raise ValidationError("scenario: required")
        if not isinstance(raw, dict):
            raise ValidationError("scenario: expected a mapping")
        is_multi = "goods" in raw
        if command in ("solve-multi", "optimize-multi", "solve-priority") and not is_multi:
            raise ValidationError(f"scenario.goods: required for {command}")
        if command in ("solve-single", "optimize-single", "sweep") and is_multi:
            raise ValidationError(f"scenario: {command} takes a single-good scenario (no 'goods' list)")
        if is_multi:
            scenario = parse_multi(raw)
        else:
            scenario, costs = parse_single(raw, need_policy=command not in ("optimize-single", "sweep"))
    return RunConfig(command, scenario, costs, d.get("output"), fmt, seed, tol, **sections)


def load(path):
    """Read and validate a YAML or JSON config file."""
    return from_dict(load_raw(path))


def load_raw(path):
    """Parse a YAML or JSON file (JSON is a subset of YAML) without validating it."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ValidationError(f"config {path} is not valid YAML/JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ValidationError(f"config {path}: top level must be a mapping")
    return data


def dumps(cfg):
    """Serialise a :class:`RunConfig` as YAML."""
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False)


def default_tau_grid(cfg):
    return cfg.optimize.get("tau_grid", list(DEFAULT_TAU_GRID))
