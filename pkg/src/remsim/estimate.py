"""Maximum-likelihood estimation of constant-coefficient dyadic models.

The log-likelihood of a history under piecewise-constant rates is

    sum_m  beta . x(e_m; t_{m-1})  -  (t_m - t_{m-1}) * sum_{(i,j) in R} exp(beta . x_ij)

with statistics evaluated exactly as during simulation. The statistics
trajectory is computed once; every evaluation after that is a few dense
matrix products.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels
from .core import Covariates, EffectSpec, EventHistory, HistoryError, RiskSet, SimulationError
from .stats import StatsState, design_matrix


@dataclass(frozen=True)
class Trajectory:
    """Stacked risk-set statistics for every event of a history.

    Rows of ``X`` for event ``m`` are its risk set at ``t_{m-1}``;
    ``observed[m]`` is the row of the dyad that occurred and
    ``log_gap[row]`` the log waiting time of the row's event.
    """

    X: np.ndarray
    observed: np.ndarray
    log_gap: np.ndarray
    exposure: float  # sum_m |R_m| * gap_m
    n_events: int


def trajectory(effects: Sequence[EffectSpec], history: EventHistory, riskset: RiskSet,
               cov: Covariates | None = None) -> Trajectory:
    if not len(history):
        raise HistoryError("cannot evaluate a likelihood on an empty history")
    n = history.n_actors
    state = StatsState(n, effects)
    blocks, observed, gaps, sizes = [], [], [], []
    offset, t_prev, exposure = 0, 0.0, 0.0
    for m, e in enumerate(history):
        piece = riskset.piece(t_prev)
        k = int(np.searchsorted(piece.index, e.sender * n + e.receiver))
        if k >= len(piece.index) or piece.index[k] != e.sender * n + e.receiver:
            raise HistoryError(f"event {m}: dyad ({e.sender}, {e.receiver}) not in the risk set at t={t_prev}")
        blocks.append(design_matrix(effects, state, cov, piece.senders, piece.receivers, t_prev))
        observed.append(offset + k)
        gap = e.time - t_prev
        gaps.append(gap)
        sizes.append(len(piece.index))
        exposure += gap * len(piece.index)
        offset += len(piece.index)
        state.update(e)
        t_prev = e.time
    log_gap = np.repeat(np.log(np.array(gaps)), sizes)
    return Trajectory(np.ascontiguousarray(np.vstack(blocks)), np.array(observed), log_gap,
                      exposure, len(history))


def _evaluate(traj: Trajectory, beta: np.ndarray, order: int = 2):
    eta = traj.X @ beta
    w = np.exp(eta + traj.log_gap)
    if not np.all(np.isfinite(w)):
        raise SimulationError("likelihood overflow: rates are not finite at this beta")
    ll = float(eta[traj.observed].sum() - w.sum())
    if order == 0:
        return ll, None, None
    xo = traj.X[traj.observed].sum(axis=0)
    if order == 1:
        return ll, xo - traj.X.T @ w, None
    gw, H = kernels.weighted_gram(traj.X, w)
    return ll, xo - gw, -H


def loglik(effects: Sequence[EffectSpec], beta, history: EventHistory, riskset: RiskSet,
           cov: Covariates | None = None) -> float:
    traj = trajectory(effects, history, riskset, cov)
    return _evaluate(traj, np.asarray(beta, dtype=float), order=0)[0]


def score(effects, beta, history, riskset, cov=None):
    """``(loglik, gradient, hessian)`` at ``beta``."""
    traj = trajectory(effects, history, riskset, cov)
    return _evaluate(traj, np.asarray(beta, dtype=float))


@dataclass(frozen=True)
class FitResult:
    names: tuple[str, ...]
    beta_hat: np.ndarray
    std_errors: np.ndarray
    loglik: float
    iterations: int
    converged: bool
    message: str = ""
    trace: tuple[float, ...] = field(default=(), repr=False)

    def to_dict(self) -> dict:
        def clean(x):
            return [float(v) if math.isfinite(v) else None for v in x]

        return {
            "names": list(self.names),
            "beta_hat": clean(self.beta_hat),
            "std_errors": clean(self.std_errors),
            "loglik": self.loglik,
            "iterations": self.iterations,
            "converged": self.converged,
            "message": self.message,
        }

    def wald_interval(self, level_z: float = 1.959963984540054):
        return self.beta_hat - level_z * self.std_errors, self.beta_hat + level_z * self.std_errors


def initial_beta(effects: Sequence[EffectSpec], traj: Trajectory) -> np.ndarray:
    beta = np.zeros(len(effects))
    for k, e in enumerate(effects):
        if e.kind == "baseline":
            beta[k] = math.log(traj.n_events / traj.exposure)
    return beta


def mle(effects: Sequence[EffectSpec], history: EventHistory, riskset: RiskSet,
        cov: Covariates | None = None, max_iter: int = 100, grad_tol: float = 1e-6,
        initial=None, traj: Trajectory | None = None) -> FitResult:
    """Newton-Raphson with step halving."""
    effects = tuple(effects)
    names = tuple(e.name for e in effects)
    traj = trajectory(effects, history, riskset, cov) if traj is None else traj
    beta = initial_beta(effects, traj) if initial is None else np.array(initial, dtype=float)
    p = len(beta)
    ll, g, H = _evaluate(traj, beta)
    trace = [ll]
    nan = np.full(p, np.nan)
    for it in range(max_iter + 1):
        info = -H
        eig = np.linalg.eigvalsh(info)
        if eig[0] <= 1e-10 * max(eig[-1], 1e-300):
            return FitResult(names, beta, nan, ll, it, False,
                             f"singular Hessian (eigenvalue ratio {eig[0] / max(eig[-1], 1e-300):.3g}); "
                             "check for collinear or constant effects", tuple(trace))
        if np.max(np.abs(g)) < grad_tol:
            se = np.sqrt(np.diag(np.linalg.inv(info)))
            return FitResult(names, beta, se, ll, it, True, "", tuple(trace))
        if it == max_iter:
            break
        step = np.linalg.solve(info, g)
        for _ in range(60):
            cand = beta + step
            try:
                ll_new, g_new, H_new = _evaluate(traj, cand)
            except SimulationError:
                ll_new = -math.inf
            if ll_new >= ll:
                break
            step = step / 2
        else:
            return FitResult(names, beta, nan, ll, it, False, "line search failed", tuple(trace))
        beta, ll, g, H = cand, ll_new, g_new, H_new
        trace.append(ll)
    return FitResult(names, beta, nan, ll, max_iter, False,
                     f"no convergence in {max_iter} iterations", tuple(trace))
