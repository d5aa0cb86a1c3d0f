"""Event-sequence simulation under the actor-oriented model.

Each eligible sender has an activity rate ``exp(gamma(t) . x_i)``; the
waiting time is exponential with their sum, the sender is drawn in
proportion to its rate, and the receiver from a softmax over the sender's
eligible receivers. Eligibility follows the risk set: senders are actors
with at least one outgoing dyad, receivers are ``{j : (i, j) in R}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import (
    ActorModel, ConfigError, Covariates, EventHistory, RiskSet, SimConfig, SimulationError,
    make_rng,
)
from .dyadic import linear_predictor
from .stats import StatsState, design_matrix, sender_matrix


@dataclass(frozen=True)
class SenderRates:
    n_actors: int
    senders: np.ndarray
    log_rates: np.ndarray
    log_total: float

    @property
    def total(self) -> float:
        return math.exp(self.log_total)

    @property
    def probabilities(self) -> np.ndarray:
        return kernels.softmax(self.log_rates)[0]

    def full_probabilities(self) -> np.ndarray:
        """Length-N vector, exactly 0 for actors outside the sender risk set."""
        p = np.zeros(self.n_actors)
        p[self.senders] = self.probabilities
        return p


def sender_rates(model: ActorModel, state: StatsState, cov: Covariates | None,
                 riskset: RiskSet, t: float) -> SenderRates:
    senders = riskset.piece(t).sender_set
    X = sender_matrix(model.rate_effects, state, cov, senders, t)
    eta = linear_predictor(model.rate_effects, model.rate_params, X, senders, t)
    _, log_total = kernels.softmax(eta)
    return SenderRates(riskset.n_actors, senders, eta, log_total)


def _choice_eta(model, sender, state, cov, riskset, t):
    receivers = riskset.piece(t).receivers_of[sender]
    if not len(receivers):
        raise SimulationError(f"actor {sender} has no eligible receivers at t={t}")
    senders = np.full(len(receivers), sender)
    X = design_matrix(model.choice_effects, state, cov, senders, receivers, t)
    return receivers, linear_predictor(model.choice_effects, model.choice_params, X, senders, t)


def receiver_distribution(model: ActorModel, sender: int, state: StatsState,
                          cov: Covariates | None, riskset: RiskSet, t: float):
    """``(receivers, probabilities)`` for ``sender``'s next event."""
    if not 0 <= sender < riskset.n_actors:
        raise ConfigError(f"sender {sender} outside actor range")
    receivers, eta = _choice_eta(model, sender, state, cov, riskset, t)
    return receivers, kernels.softmax(eta)[0]


def simulate_actor(model: ActorModel, config: SimConfig,
                   rng: np.random.Generator | None = None) -> EventHistory:
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
        sr = sender_rates(model, state, cov, riskset, 0.0)
        if not math.isfinite(sr.log_total):
            raise SimulationError("total sender rate is not finite at t=0")
        piece = riskset.piece(0.0)
        k = min(int(rng.random() * len(piece.index)), len(piece.index) - 1)
        t_new = rng.standard_exponential() / sr.total
        if t_new <= tau:
            t = t_new
            generated = n_init = 1
            times.append(t)
            senders.append(int(piece.senders[k]))
            receivers.append(int(piece.receivers[k]))
            state.update((t, senders[-1], receivers[-1]))
        else:
            max_m = 0

    while generated < max_m:
        sr = sender_rates(model, state, cov, riskset, t)
        if not math.isfinite(sr.log_total):
            raise SimulationError(f"total sender rate is not finite at t={t}")
        t_new = t + rng.standard_exponential() * math.exp(-sr.log_total)
        u_sender, u_receiver = rng.random(), rng.random()
        if t_new > tau:
            break
        if not t_new > t:
            raise SimulationError(f"waiting time underflow at t={t}; total rate too large")
        k, _ = kernels.sample_logits(sr.log_rates, u_sender)
        a = int(sr.senders[k])
        recv, eta = _choice_eta(model, a, state, cov, riskset, t)
        kr, _ = kernels.sample_logits(eta, u_receiver)
        b = int(recv[kr])
        state.update((t_new, a, b))
        times.append(t_new)
        senders.append(a)
        receivers.append(b)
        t = t_new
        generated += 1
    return EventHistory(times, senders, receivers, n, n_init)
