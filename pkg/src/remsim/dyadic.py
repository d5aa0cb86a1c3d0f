"""Event-sequence simulation under the dyadic relational event model.

Each dyad in the active risk set has log-rate ``beta(t) . x_ij``; the next
dyad is drawn with probability proportional to its rate and the waiting
time is exponential with the summed rate. Parameters and the risk set are
read at the time of the previous event, so rates are constant between
events.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import (
    Covariates, DyadicModel, EventHistory, RiskSet, SimConfig, SimulationError,
    make_rng, replicate_seed,
)
from .stats import StatsState, design_matrix


def coefficients(params, t: float, senders: np.ndarray) -> np.ndarray:
    """Coefficient vector (P,) or, when any term is group-split, a (rows, P) matrix."""
    if all(p.group_split is None for p in params):
        return np.array([p.default_at(t) for p in params])
    B = np.empty((len(senders), len(params)))
    for k, p in enumerate(params):
        if p.group_split is None:
            B[:, k] = p.default_at(t)
        else:
            hit = np.isin(senders, list(p.group_split.targets))
            B[:, k] = np.where(hit, p.target_at(t), p.default_at(t))
    return B


def linear_predictor(effects, params, X: np.ndarray, senders: np.ndarray, t: float) -> np.ndarray:
    b = coefficients(params, t, senders)
    with np.errstate(over="ignore", invalid="ignore"):
        eta = X @ b if b.ndim == 1 else np.einsum("ij,ij->i", X, b)
    if not np.all(np.isfinite(eta)):
        with np.errstate(over="ignore", invalid="ignore"):
            contrib = np.abs(X * b)
        k = int(np.argmax(np.nanmax(np.where(np.isfinite(contrib), contrib, np.inf), axis=0)))
        raise SimulationError(f"log-rate is not finite at t={t}; check effect {k} ({effects[k].name})")
    return eta


@dataclass(frozen=True)
class DyadRates:
    """Rates over the active risk set at one time point."""

    n_actors: int
    senders: np.ndarray
    receivers: np.ndarray
    log_rates: np.ndarray
    log_total: float

    @property
    def total(self) -> float:
        return math.exp(self.log_total)

    @property
    def rates(self) -> np.ndarray:
        return np.exp(self.log_rates)

    @property
    def probabilities(self) -> np.ndarray:
        return kernels.softmax(self.log_rates)[0]

    def matrix(self) -> np.ndarray:
        """N x N rate matrix; dyads outside the risk set are exactly 0."""
        out = np.zeros((self.n_actors, self.n_actors))
        out[self.senders, self.receivers] = self.rates
        return out

    def dyads(self) -> list[tuple[int, int]]:
        return list(zip(self.senders.tolist(), self.receivers.tolist()))


def dyad_rates(model: DyadicModel, state: StatsState, cov: Covariates | None,
               riskset: RiskSet, t: float) -> DyadRates:
    piece = riskset.piece(t)
    X = design_matrix(model.effects, state, cov, piece.senders, piece.receivers, t)
    eta = linear_predictor(model.effects, model.params, X, piece.senders, t)
    _, log_total = kernels.softmax(eta)
    return DyadRates(riskset.n_actors, piece.senders, piece.receivers, eta, log_total)


def next_event_distribution(model: DyadicModel, history: EventHistory, riskset: RiskSet,
                            cov: Covariates | None = None, t: float | None = None):
    """``(total_rate, probabilities, dyads)`` for the event following ``history``.

    ``t`` defaults to the time of the last event (0 for an empty history).
    """
    state = StatsState.for_model(model, history.n_actors, history)
    t = history.end_time if t is None else t
    r = dyad_rates(model, state, cov, riskset, t)
    return r.total, r.probabilities, r.dyads()


def _check_rate(log_total: float, t: float) -> None:
    if not math.isfinite(log_total):
        raise SimulationError(f"total rate is not finite at t={t}")


def simulate_dyadic(model: DyadicModel, config: SimConfig, rng: np.random.Generator | None = None,
                    order: str = "dyad-first") -> EventHistory:
    """Simulate one history.

    ``order`` selects whether the dyad's uniform or the waiting time's
    exponential is drawn first; the two give the same joint law.
    """
    if order not in ("dyad-first", "time-first"):
        raise ValueError(f"unknown sampling order {order!r}")
    n = config.n_actors
    rng = make_rng(config.seed) if rng is None else rng
    riskset, cov = config.riskset, config.covariates
    e0 = config.initial_history or EventHistory.empty(n)
    state = StatsState.for_model(model, n, e0)
    times, senders, receivers = list(e0.times), list(e0.senders), list(e0.receivers)
    n_init = len(e0)
    t = e0.end_time
    tau, max_m = config.stop_time, config.stop_events
    generated = 0

    if not times and max_m > 0:
        # Random initializer: uniform dyad, waiting time from the model's own rate.
        r = dyad_rates(model, state, cov, riskset, 0.0)
        _check_rate(r.log_total, 0.0)
        k = min(int(rng.random() * len(r.senders)), len(r.senders) - 1)
        t_new = rng.standard_exponential() / r.total
        if t_new <= tau:
            t = t_new
            generated = n_init = 1
            times.append(t)
            senders.append(int(r.senders[k]))
            receivers.append(int(r.receivers[k]))
            state.update((t, senders[-1], receivers[-1]))
        else:
            max_m = 0

    while generated < max_m:
        r = dyad_rates(model, state, cov, riskset, t)
        _check_rate(r.log_total, t)
        if order == "dyad-first":
            k, _ = kernels.sample_logits(r.log_rates, rng.random())
            gap = rng.standard_exponential()
        else:
            gap = rng.standard_exponential()
            k, _ = kernels.sample_logits(r.log_rates, rng.random())
        t_new = t + gap * math.exp(-r.log_total)
        if t_new > tau:
            break
        if not t_new > t:
            raise SimulationError(f"waiting time underflow at t={t}; total rate too large")
        a, b = int(r.senders[k]), int(r.receivers[k])
        state.update((t_new, a, b))
        times.append(t_new)
        senders.append(a)
        receivers.append(b)
        t = t_new
        generated += 1
    return EventHistory(times, senders, receivers, n, n_init)


def _run_one(args):
    engine, model, config, r = args
    cfg = _with_seed(config, replicate_seed(config.seed, r))
    return engine(model, cfg)


def _with_seed(config: SimConfig, seed: int) -> SimConfig:
    return SimConfig(config.n_actors, config.riskset, config.covariates, config.max_events,
                     config.max_time, seed, config.initial_history)


def simulate_replicates(model, config: SimConfig, reps: int, n_jobs: int = 1,
                        engine=None) -> list[EventHistory]:
    """Replicate ``r`` runs with seed ``config.seed ^ r``; output order is by ``r``."""
    if engine is None:
        engine = simulate_dyadic
    jobs = [(engine, model, config, r) for r in range(reps)]
    if n_jobs == 1 or reps <= 1:
        return [_run_one(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(_run_one, jobs))
