"""Command-line entry point: ``remsim <command> --config PATH [options]``.

Exit status is 0 on success, 1 for invalid input (configuration, files,
arguments) and 2 when a run fails. Diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .actor import simulate_actor
from .core import ActorModel, ConfigError, DyadicModel, HistoryError, RemsimError, replicate_seed
from .dyadic import simulate_dyadic, simulate_replicates
from .estimate import mle
from .gof import gof_run
from .io import Scenario, atomic_write, events_csv, load_config
from .scenario import heterophily_outcome, run_sweep

log = logging.getLogger("remsim")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _out_dir(args, sc: Scenario) -> Path:
    if args.out:
        return Path(args.out)
    return sc.path(sc.cfg.output)


def _seed(args, sc: Scenario) -> int:
    seed = sc.cfg.seed if args.seed is None else args.seed
    if not 0 <= seed < 2**64:
        raise ConfigError("--seed must be an unsigned 64-bit integer")
    return seed


def _reps(args, sc: Scenario) -> int:
    reps = sc.cfg.reps if args.reps is None else args.reps
    if reps < 1:
        raise ConfigError("--reps must be at least 1")
    return reps


def _simulate(args, sc: Scenario, family: str) -> None:
    want = DyadicModel if family == "dyadic" else ActorModel
    if not isinstance(sc.model, want):
        raise ConfigError(f"config declares the {sc.cfg.model.family} family; use the matching command")
    engine = simulate_dyadic if family == "dyadic" else simulate_actor
    seed, reps = _seed(args, sc), _reps(args, sc)
    cfg = sc.sim_config(seed)
    hists = simulate_replicates(sc.model, cfg, reps, n_jobs=args.jobs, engine=engine)
    out = _out_dir(args, sc)
    rows = []
    for r, h in enumerate(hists):
        name = "events.csv" if reps == 1 else f"events_{r:04d}.csv"
        atomic_write(out / name, events_csv(h, sc.actors))
        rows.append({"file": name, "replicate": r, "seed": replicate_seed(seed, r),
                     "events": len(h), "initial_events": h.n_init, "end_time": h.end_time})
        log.info("replicate %d: %d events, end time %.6g", r, len(h), h.end_time)
    atomic_write(out / "simulate.json", _dump({"seed": seed, "reps": reps, "replicates": rows}))


def cmd_simulate(args, sc):
    _simulate(args, sc, "dyadic")


def cmd_simulate_actor(args, sc):
    _simulate(args, sc, "actor")


def _require_dyadic(sc: Scenario, what: str) -> DyadicModel:
    if not isinstance(sc.model, DyadicModel):
        raise ConfigError(f"{what} needs a dyadic model")
    for p in sc.model.params:
        if not p.is_constant:
            raise ConfigError(f"{what}: only constant coefficients can be estimated")
    return sc.model


def _fit(sc: Scenario, observed):
    model = _require_dyadic(sc, "estimate")
    ec = sc.cfg.estimate
    return mle(model.effects, observed, sc.riskset, sc.covariates, max_iter=ec.max_iter, grad_tol=ec.grad_tol)


def cmd_estimate(args, sc):
    observed = sc.observed(sc.cfg.estimate.observed)
    fit = _fit(sc, observed)
    text = _dump(fit.to_dict())
    atomic_write(_out_dir(args, sc) / "fit.json", text)
    sys.stdout.write(text)
    if not fit.converged:
        log.warning("estimation did not converge: %s", fit.message)


def cmd_gof(args, sc):
    gc = sc.cfg.gof
    if gc is None:
        raise ConfigError("config has no 'gof' section")
    specs = sc.gof_specs()
    observed = sc.observed(gc.observed)
    L = args.reps if args.reps is not None else gc.replicates
    if L < 1:
        raise ConfigError("--reps must be at least 1")
    beta = None
    if gc.beta == "estimate":
        fit = _fit(sc, observed)
        if not fit.converged:
            raise RemsimError(f"estimation for gof did not converge: {fit.message}")
        beta = fit
    report = gof_run(sc.model, observed, specs, L, _seed(args, sc), sc.riskset, sc.covariates, beta)
    out = _out_dir(args, sc)
    for name in report.indices:
        atomic_write(out / f"gof_{name}.csv", report.index_csv(name))
    atomic_write(out / "gof_report.json", report.to_json())
    log.info("gof: %d indices, %.1f%% of bins inside [2.5, 97.5]",
             len(report.indices), 100 * report.inside_fraction())


def cmd_intervene(args, sc):
    ic = sc.cfg.intervention
    if ic is None:
        raise ConfigError("config has no 'intervention' section")
    model = _require_dyadic(sc, "intervene")
    grid = sc.sweep_grid()
    seed = _seed(args, sc)
    reps = _reps(args, sc)
    cfg = sc.sim_config(seed)
    outcome = heterophily_outcome(ic.outcome_variable, sc.covariates)
    res = run_sweep(model, cfg, grid, reps, ic.bin_width, outcome, seed, ic.effect_index, ic.start,
                    ic.tolerance, ic.smooth, n_jobs=args.jobs, baseline_reps=ic.baseline_reps)
    out = _out_dir(args, sc)
    atomic_write(out / "sweep.csv", res.to_csv())
    atomic_write(out / "summary.json", res.summary_json())


COMMANDS = {
    "simulate": (cmd_simulate, "simulate dyadic event histories"),
    "simulate-actor": (cmd_simulate_actor, "simulate actor-oriented event histories"),
    "estimate": (cmd_estimate, "maximum-likelihood fit of a dyadic model"),
    "gof": (cmd_gof, "simulation-based goodness of fit"),
    "intervene": (cmd_intervene, "intervention sweep"),
}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="remsim", description="Relational event simulation and assessment.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, (_, help_) in COMMANDS.items():
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", required=True, help="YAML scenario file")
        sp.add_argument("--seed", type=int, help="base seed (overrides config)")
        sp.add_argument("--reps", type=int, help="replicates (overrides config)")
        sp.add_argument("--out", help="output directory (overrides config)")
        sp.add_argument("--jobs", type=int, default=1, help="worker processes for replicates")
        sp.add_argument("--quiet", action="store_true", help="only report errors")
    return p


def main(argv=None) -> int:
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("remsim: %(message)s"))
    log.handlers[:] = [handler]
    log.propagate = False
    try:
        args = build_parser().parse_args(argv)
    except _UsageError as e:
        sys.stderr.write(f"remsim: error: {e}\n")
        return 1
    log.setLevel(logging.ERROR if args.quiet else logging.INFO)
    if args.jobs < 1:
        log.error("--jobs must be at least 1")
        return 1
    try:
        sc = load_config(args.config)
        COMMANDS[args.command][0](args, sc)
    except (ConfigError, HistoryError) as e:
        log.error("invalid input: %s", e)
        return 1
    except RemsimError as e:
        log.error("run failed: %s", e)
        return 2
    except OSError as e:
        log.error("run failed: %s", e)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
