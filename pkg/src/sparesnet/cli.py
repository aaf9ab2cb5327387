"""Command-line runner: ``sparesnet COMMAND [--config PATH] [options]``.

Exit status is 0 on success, 1 for invalid input (bad config, unknown
command, unreadable or unwritable files) and 2 when a computation fails
numerically.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import sys

import numpy as np

from . import __version__
from . import config as config_mod
from .errors import NumericalError, UnsupportedSizeError, ValidationError
from .experiments import DESK_INSTANCES, PRESETS, Table, run_preset, sweep
from .multi import evaluate_multi, optimize_multi
from .optimize import optimize_policy
from .priority import priority_network_solve, priority_shop_solver
from .sim import SimConfig, simulate, write_trace
from .single import SingleGoodConfig, cost_rate, steady_state

log = logging.getLogger(__name__)

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on bad usage; usage errors are input errors here."""

    def error(self, message):
        self.print_usage(sys.stderr)
        if message.startswith("argument COMMAND: invalid choice"):
            message = "unknown command" + message[len("argument COMMAND: invalid choice"):]
        raise ValidationError(message)


def build_parser():
    p = _Parser(prog="sparesnet", description="Repairable spare parts with age replacement and a finite repair shop.")
    p.add_argument("command", choices=config_mod.COMMANDS, metavar="COMMAND",
                   help="one of: " + ", ".join(config_mod.COMMANDS))
    p.add_argument("--config", metavar="PATH", help="YAML or JSON run configuration")
    p.add_argument("--out", metavar="PATH", help="output file (default: stdout)")
    p.add_argument("--seed", type=int, help="random seed (simulation, subsampling)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for independent rows")
    p.add_argument("--format", choices=config_mod.FORMATS, help="csv (default) or an aligned text table")
    p.add_argument("--preset", choices=PRESETS, help="experiment preset")
    p.add_argument("--max-instances", type=int, help=f"robustness subsample size (default {DESK_INSTANCES}; 0 = full bed)")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return p


# -- formatting -------------------------------------------------------------------------------

def fmt_value(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.10g}"
    return str(v)


def render(table, fmt, header):
    out = io.StringIO()
    for line in header:
        out.write(f"# {line}\n")
    cells = [[fmt_value(v) for v in row] for row in table.rows]
    if fmt == "csv":
        w = csv.writer(out, lineterminator="\n")
        w.writerow(table.columns)
        w.writerows(cells)
    else:
        widths = [max([len(c)] + [len(r[i]) for r in cells]) for i, c in enumerate(table.columns)]
        out.write("  ".join(c.rjust(w) for c, w in zip(table.columns, widths)).rstrip() + "\n")
        for r in cells:
            out.write("  ".join(c.rjust(w) for c, w in zip(r, widths)).rstrip() + "\n")
    return out.getvalue()


def provenance(rc):
    return [f"sparesnet {__version__}", f"command: {rc.command}", f"config-digest: {rc.digest()}", f"seed: {rc.seed}"]


# -- commands ------------------------------------------------------------------------------------

def _single_row(cfg, costs):
    state = steady_state(cfg)
    c = cost_rate(cfg, costs, state)
    return Table(
        "solve-single",
        ["S", "K", "tau", "mu_r", "p_down", "expected_inventory", "throughput",
         "unplanned", "downtime", "stock", "capacity", "TC", "status"],
        [(cfg.S, cfg.K, cfg.tau, cfg.mu_r, state.p_down, state.expected_inventory, state.throughput,
          c.unplanned, c.downtime, c.stock, c.capacity, c.total, state.status)],
    )


def _multi_rows(name, cfg, res, status=None):
    cols = ["good", "name", "S", "tau", "p_down", "expected_inventory", "throughput",
            "unplanned", "downtime", "stock", "good_cost", "total_cost", "iterations", "status"]
    if status is None or status == "ok":
        status = res.state.status
    rows = [
        (i + 1, g.name, g.S, g.tau, r.p_down, r.expected_inventory, r.throughput,
         r.unplanned, r.downtime, r.stock, r.total, res.total_cost, res.state.iterations, status)
        for i, (g, r) in enumerate(zip(cfg.goods, res.goods))
    ]
    return Table(name, cols, rows)


def _optimize_single(rc):
    cfg, costs = rc.scenario, rc.costs
    grid = config_mod.default_tau_grid(rc)
    opts = {k: rc.optimize[k] for k in ("S_cap", "K_cap") if k in rc.optimize}
    res = optimize_policy(grid, cfg.lifetime, cfg.mu_r, costs, K=rc.optimize.get("K"), **opts)
    cfg_star = SingleGoodConfig(res.S_star, res.K_star, res.tau_star, cfg.mu_r, cfg.lifetime)
    state = steady_state(cfg_star)
    return Table("optimize-single", ["tau_star", "S_star", "K_star", "p_down", "TC", "status"],
                 [(res.tau_star, res.S_star, res.K_star, state.p_down, res.total_cost, res.status)])


def _simulate(rc, jobs):
    s = rc.simulation
    kw = {k: s[k] for k in ("horizon", "warmup", "replications", "discipline", "ci_method", "batches", "trace_limit")
          if k in s}
    if s.get("trace") and not kw.get("trace_limit"):
        kw["trace_limit"] = 100_000
    sc = SimConfig(rc.scenario, seed=rc.seed, costs=rc.costs, **kw)
    est = simulate(sc, jobs=jobs)
    if s.get("trace"):
        try:
            write_trace(est, s["trace"])
        except OSError as exc:
            raise ValidationError(f"simulation.trace: cannot write {s['trace']}: {exc.strerror}") from None
    cols = ["good", "p_down", "p_down_hw", "expected_inventory", "expected_inventory_hw",
            "corrective_rate", "corrective_rate_hw", "preventive_rate", "preventive_rate_hw",
            "TC", "TC_hw", "events", "replications", "conservation_ok", "digest"]
    rows = []
    for i, g in enumerate(est.goods):
        rows.append((i + 1, g.p_down.mean, g.p_down.half_width, g.expected_inventory.mean,
                     g.expected_inventory.half_width, g.corrective_rate.mean, g.corrective_rate.half_width,
                     g.preventive_rate.mean, g.preventive_rate.half_width, est.tc.mean, est.tc.half_width,
                     est.events_processed, est.replications, est.conservation_ok, est.digest))
    return Table("simulate", cols, rows)


def execute(rc, jobs=1, preset=None, max_instances=None):
    """Run a validated :class:`RunConfig` and return its result table."""
    tol = rc.tolerances
    cmd = rc.command
    if cmd == "solve-single":
        return _single_row(rc.scenario, rc.costs)
    if cmd == "optimize-single":
        return _optimize_single(rc)
    if cmd == "solve-multi":
        res = evaluate_multi(rc.scenario, eps=tol["eps"], max_iter=tol["max_iter"])
        return _multi_rows(cmd, rc.scenario, res)
    if cmd == "solve-priority":
        res = priority_network_solve(rc.scenario, eps=tol["eps"], max_iter=tol["max_iter"])
        return _multi_rows(cmd, rc.scenario, res)
    if cmd == "optimize-multi":
        cfg = rc.scenario
        prio = rc.optimize.get("discipline", "fcfs") == "priority"
        if prio and cfg.K != 1:
            raise UnsupportedSizeError("preemptive priority is only supported with a single repairman (K = 1)")
        best = optimize_multi(cfg, eps=tol["eps"], max_iter=tol["max_iter"], S_cap=rc.optimize.get("S_cap", 60),
                              S_min=rc.optimize.get("S_min", 1),
                              shop_solver=priority_shop_solver(cfg.mu_r) if prio else None, priority=prio)
        return _multi_rows(cmd, cfg.with_stocks(best.stocks), best.result, best.status)
    if cmd == "simulate":
        return _simulate(rc, jobs)
    if cmd == "sweep":
        return sweep(rc.scenario, rc.costs, rc.sweep["axes"], rc.sweep.get("optimize_S", False), jobs=jobs)
    if cmd == "experiment":
        name = preset or rc.experiment.get("preset")
        if name is None:
            raise ValidationError("experiment: --preset (or experiment.preset) is required")
        if name not in PRESETS:
            raise ValidationError(f"experiment.preset: unknown preset {name!r} (choose from {list(PRESETS)})")
        cap = max_instances if max_instances is not None else rc.experiment.get("max_instances", DESK_INSTANCES)
        return run_preset(name, seed=rc.seed, max_instances=cap or None, jobs=jobs,
                          replications=rc.experiment.get("replications"),
                          simulate_rows=rc.experiment.get("simulate", True))
    raise ValidationError(f"unknown command {cmd!r}")


def _run_config(args):
    if args.config:
        raw = config_mod.load_raw(args.config)
    elif args.command == "experiment":
        raw = {"command": "experiment"}
    else:
        raise ValidationError(f"{args.command}: --config is required")
    raw = dict(raw)
    if raw.get("command", args.command) != args.command:
        raise ValidationError(f"command: config says {raw['command']!r} but {args.command!r} was requested")
    raw["command"] = args.command
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.format is not None:
        raw["format"] = args.format
    if args.out is not None:
        raw["output"] = args.out
    if args.command == "experiment":
        exp = dict(raw.get("experiment") or {})
        if args.preset is not None:
            exp["preset"] = args.preset
        if args.max_instances is not None:
            exp["max_instances"] = args.max_instances
        raw["experiment"] = exp
    return config_mod.from_dict(raw)


def main(argv=None):
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        args = build_parser().parse_args(argv)
        if args.jobs < 1:
            raise ValidationError(f"--jobs: must be at least 1, got {args.jobs}")
        if args.max_instances is not None and args.max_instances < 0:
            raise ValidationError(f"--max-instances: must be nonnegative, got {args.max_instances}")
        rc = _run_config(args)
        with np.errstate(over="ignore", under="ignore"):
            table = execute(rc, jobs=args.jobs)
        text = render(table, rc.format, provenance(rc))
        if rc.output:
            try:
                with open(rc.output, "w", newline="") as fh:
                    fh.write(text)
            except OSError as exc:
                raise ValidationError(f"cannot write {rc.output}: {exc.strerror}") from None
        else:
            sys.stdout.write(text)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
