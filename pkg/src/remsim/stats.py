"""Endogenous and exogenous statistics, maintained incrementally.

:class:`StatsState` keeps, per memory spec, the decayed event-weight matrix
``w_ij(t)`` together with its row/column sums, the two-path matrices needed
by triadic kinds and the recency ranks. Exponential decay is homogeneous,
so weights are stored on a reference scale and multiplied by
``2 ** (-(t - t_ref) / half_life)`` at read time; window memory expires
events as the clock passes ``t_event + length``. Either way a read at time
``t`` is exact, not an approximation from eager per-event decay.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .core import (
    DISTINCT_KINDS, INTERACTION, PSHIFT_KINDS, RECENCY_KINDS, SENDER_KINDS, WEIGHT_KINDS,
    ActorModel, ConfigError, Covariates, DyadicModel, EffectSpec, Event, EventHistory,
    HistoryError, MemorySpec, RiskSet, Scaling,
)

# Rebase exponential weights once fresh events would weigh more than 2**REBASE.
REBASE = 64.0


def decay_weight(memory: MemorySpec, t_now: float, t_event: float) -> float:
    gap = t_now - t_event
    if gap < 0:
        raise ConfigError(f"event at {t_event} lies after read time {t_now}")
    if memory.kind == "full":
        return 1.0
    if memory.kind == "exponential":
        return 2.0 ** (-gap / memory.value)
    return 1.0 if gap < memory.value else 0.0


@dataclass(frozen=True)
class DistinctSpec:
    variable: str
    d_star: float | tuple[float, ...]

    def d_star_array(self, n: int) -> np.ndarray:
        ds = np.atleast_1d(np.asarray(self.d_star, dtype=float))
        if np.any((ds < 0) | (ds > 1)):
            raise ConfigError("d_star must lie in [0, 1]")
        return np.full(n, ds[0]) if ds.size == 1 else ds


class _Tracker:
    """Weight bookkeeping for one memory spec."""

    def __init__(self, n: int, memory: MemorySpec, twopaths=frozenset(), recency=False):
        self.n = n
        self.memory = memory
        self.W = np.zeros((n, n))
        self.out = np.zeros(n)
        self.inn = np.zeros(n)
        self.total = 0.0
        self.twopaths = frozenset(twopaths)
        self.otp = np.zeros((n, n)) if "otp" in twopaths else None
        self.osp = np.zeros((n, n)) if "osp" in twopaths else None
        self.isp = np.zeros((n, n)) if "isp" in twopaths else None
        self.recency = recency
        if recency:
            self.send_rank = np.zeros((n, n), dtype=np.int64)
            self.recv_rank = np.zeros((n, n), dtype=np.int64)
            self.last_time = np.full((n, n), -np.inf)
        self.t_ref = 0.0
        self.expired = 0  # window memory: events [0, expired) are out of the window

    def covers(self, twopaths, recency) -> bool:
        return set(twopaths) <= self.twopaths and (self.recency or not recency)

    def scale(self, t: float) -> float:
        if self.memory.kind == "exponential":
            return 2.0 ** (-(t - self.t_ref) / self.memory.value)
        return 1.0

    def _change(self, a: int, b: int, delta: float) -> None:
        old = self.W[a, b]
        new = old + delta
        if self.otp is not None or self.osp is not None or self.isp is not None:
            kernels.twopath_update(self.W, self.otp, self.osp, self.isp, a, b, old, new)
        self.W[a, b] = new
        self.out[a] += delta
        self.inn[b] += delta
        self.total += delta

    def _rebase(self, t: float) -> None:
        f = self.scale(t)
        for arr in (self.W, self.out, self.inn, self.otp, self.osp, self.isp):
            if arr is not None:
                arr *= f
        self.total *= f
        self.t_ref = t

    def _promote(self, a: int, b: int, t: float) -> None:
        for rank, i, j in ((self.send_rank, a, b), (self.recv_rank, b, a)):
            row = rank[i]
            r = row[j]
            if r == 0:
                row[row > 0] += 1
            else:
                row[(row > 0) & (row < r)] += 1
            row[j] = 1
        self.last_time[a, b] = t

    def _demote(self, a: int, b: int) -> None:
        for rank, i, j in ((self.send_rank, a, b), (self.recv_rank, b, a)):
            row = rank[i]
            r = row[j]
            row[row > r] -= 1
            row[j] = 0
        self.last_time[a, b] = -np.inf

    def on_event(self, a: int, b: int, t: float) -> None:
        if self.memory.kind == "exponential":
            if (t - self.t_ref) / self.memory.value > REBASE:
                self._rebase(t)
            self._change(a, b, 2.0 ** ((t - self.t_ref) / self.memory.value))
        else:
            self._change(a, b, 1.0)
        if self.recency:
            self._promote(a, b, t)

    def advance(self, t: float, times: list, senders: list, receivers: list) -> None:
        if self.memory.kind != "window":
            return
        L = self.memory.value
        k = self.expired
        while k < len(times) and t - times[k] >= L:
            a, b = senders[k], receivers[k]
            self._change(a, b, -1.0)
            if self.recency and self.last_time[a, b] == times[k]:
                self._demote(a, b)
            k += 1
        self.expired = k


def required_features(effects: Sequence[EffectSpec]) -> dict:
    """Map memory spec -> (set of two-path kinds, needs recency)."""
    need: dict[MemorySpec, tuple[set, bool]] = {}
    for e in effects:
        if e.kind in WEIGHT_KINDS or e.kind in DISTINCT_KINDS or e.kind in RECENCY_KINDS:
            tp, rec = need.setdefault(e.memory, (set(), False))
            if e.kind in ("otp", "itp"):
                tp.add("otp")
            elif e.kind in ("osp", "isp"):
                tp.add(e.kind)
            need[e.memory] = (tp, rec or e.kind in RECENCY_KINDS)
    return need


class StatsState:
    """Incremental statistics state for one (growing) event history.

    Trackers for the memory specs used by ``effects`` are kept up to date on
    every :meth:`update`; a statistic needing a tracker that does not exist
    yet triggers a replay of the event log.
    """

    def __init__(self, n_actors: int, effects: Sequence[EffectSpec] = (),
                 history: EventHistory | None = None):
        self.n = int(n_actors)
        self.trackers: dict[MemorySpec, _Tracker] = {}
        self.last_event: tuple[int, int] | None = None
        self.clock = 0.0
        self.times: list[float] = []
        self.senders: list[int] = []
        self.receivers: list[int] = []
        for mem, (tp, rec) in required_features(effects).items():
            self.trackers[mem] = _Tracker(self.n, mem, tp, rec)
        if history is not None:
            if history.n_actors != self.n:
                raise HistoryError("history actor count differs from state")
            for e in history:
                self.update(e)

    @classmethod
    def for_model(cls, model: DyadicModel | ActorModel, n_actors: int,
                  history: EventHistory | None = None) -> "StatsState":
        if isinstance(model, ActorModel):
            effects = model.rate_effects + model.choice_effects
        else:
            effects = model.effects
        return cls(n_actors, effects, history)

    def __len__(self) -> int:
        return len(self.times)

    def tracker(self, memory: MemorySpec, twopaths=(), recency=False) -> _Tracker:
        tr = self.trackers.get(memory)
        if tr is not None and tr.covers(twopaths, recency):
            return tr
        if tr is not None:
            twopaths = set(twopaths) | tr.twopaths
            recency = recency or tr.recency
        tr = _Tracker(self.n, memory, twopaths, recency)
        # Later events never expire before an earlier event's time, so the
        # full log can be passed while replaying.
        for t, a, b in zip(self.times, self.senders, self.receivers):
            tr.advance(t, self.times, self.senders, self.receivers)
            tr.on_event(a, b, t)
        tr.advance(self.clock, self.times, self.senders, self.receivers)
        self.trackers[memory] = tr
        return tr

    def advance(self, t: float) -> None:
        if t < self.clock:
            raise HistoryError(f"cannot move clock back from {self.clock} to {t}")
        for tr in self.trackers.values():
            tr.advance(t, self.times, self.senders, self.receivers)
        self.clock = float(t)

    def update(self, e: Event | tuple) -> "StatsState":
        t, a, b = float(e[0]), int(e[1]), int(e[2])
        if self.times and t <= self.times[-1]:
            raise HistoryError(f"event time {t} does not exceed previous event time {self.times[-1]}")
        if t < self.clock:
            raise HistoryError(f"event time {t} precedes state clock {self.clock}")
        if a == b or not (0 <= a < self.n and 0 <= b < self.n):
            raise HistoryError(f"invalid dyad ({a}, {b})")
        self.advance(t)
        for tr in self.trackers.values():
            tr.on_event(a, b, t)
        self.times.append(t)
        self.senders.append(a)
        self.receivers.append(b)
        self.last_event = (a, b)
        return self

    def weights(self, memory: MemorySpec, t: float | None = None) -> np.ndarray:
        """Decayed weight matrix ``w_ij(t)`` (a copy)."""
        t = self.clock if t is None else t
        self.advance(t)
        tr = self.tracker(memory)
        return tr.W * tr.scale(t)

    def distinctiveness(self, memory: MemorySpec, z: np.ndarray, d_star: np.ndarray,
                        t: float | None = None) -> np.ndarray:
        """Per-actor proportion of event weight exchanged with other-attribute actors.

        Actors without any (non-expired) events get ``d_star``.
        """
        t = self.clock if t is None else t
        self.advance(t)
        tr = self.tracker(memory)
        return _distinct(tr, z, d_star)


def _distinct(tr: _Tracker, z, d_star):
    diff = z[:, None] != z[None, :]
    both = tr.W + tr.W.T
    num = (both * diff).sum(axis=1)
    den = both.sum(axis=1)
    d = np.array(d_star, dtype=float, copy=True)
    pos = den > 0
    d[pos] = num[pos] / den[pos]
    return d


# ---------------------------------------------------------------------------
# Column evaluation
# ---------------------------------------------------------------------------


class _Read:
    """Per-read caches shared by the columns of one design matrix."""

    __slots__ = ("state", "cov", "t", "_distinct")

    def __init__(self, state: StatsState, cov: Covariates | None, t: float):
        state.advance(t)
        self.state = state
        self.cov = cov if cov is not None else Covariates()
        self.t = t
        self._distinct = {}

    def actor_values(self, spec: EffectSpec, idx: np.ndarray) -> np.ndarray:
        v = self.cov.actor_values(spec.variable, self.t)
        sub = v[idx]
        if not np.all(np.isfinite(sub)):
            bad = int(idx[np.flatnonzero(~np.isfinite(sub))[0]])
            raise ConfigError(f"actor covariate {spec.variable!r} missing for actor {bad} at t={self.t}")
        return sub

    def distinct(self, spec: EffectSpec) -> np.ndarray:
        key = (spec.memory, spec.variable, spec.d_star)
        d = self._distinct.get(key)
        if d is None:
            n = self.state.n
            z = self.cov.actor_values(spec.variable, self.t)
            d = _distinct(self.state.tracker(spec.memory), z, spec.d_star_array(n))
            self._distinct[key] = d
        return d


def _raw(spec: EffectSpec, rd: _Read, s: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Raw (pre-scaling) values of one statistic for dyads ``(s[k], r[k])``."""
    kind = spec.kind
    n = rd.state.n
    if kind == "baseline":
        return np.ones(len(s))
    if kind == "send":
        return rd.actor_values(spec, s).astype(float)
    if kind == "receive":
        return rd.actor_values(spec, r).astype(float)
    if kind == "same":
        return (rd.actor_values(spec, s) == rd.actor_values(spec, r)).astype(float)
    if kind == "difference":
        return np.abs(rd.actor_values(spec, s) - rd.actor_values(spec, r))
    if kind == "dyad":
        vals = rd.cov.dyad_matrix(spec.variable).ravel()[s * n + r]
        if not np.all(np.isfinite(vals)):
            k = int(np.flatnonzero(~np.isfinite(vals))[0])
            raise ConfigError(f"dyad covariate {spec.variable!r} missing for dyad ({int(s[k])}, {int(r[k])})")
        return vals.astype(float)
    if kind in PSHIFT_KINDS:
        return _pshift(kind, rd.state.last_event, s, r)
    if kind in RECENCY_KINDS:
        tr = rd.state.tracker(spec.memory, recency=True)
        rank = (tr.send_rank if kind == "rrankSend" else tr.recv_rank).ravel()[s * n + r]
        out = np.zeros(len(s))
        nz = rank > 0
        out[nz] = 1.0 / rank[nz]
        return out
    if kind == "distinct_dissatisfaction":
        d = rd.distinct(spec)
        return np.abs(d - spec.d_star_array(n))[s]
    if kind == "distinct_choice":
        d = rd.distinct(spec)[s]
        ds = spec.d_star_array(n)[s]
        z = rd.cov.actor_values(spec.variable, rd.t)
        same = z[s] == z[r]
        return np.where(d > ds, same, np.where(d < ds, ~same, False)).astype(float)

    twopaths = ()
    if kind in ("otp", "itp"):
        twopaths = ("otp",)
    elif kind in ("osp", "isp"):
        twopaths = (kind,)
    tr = rd.state.tracker(spec.memory, twopaths=twopaths)
    c = tr.scale(rd.t)
    prop = spec.scaling is Scaling.PROP
    if kind == "inertia":
        v = tr.W.ravel()[s * n + r]
        return _ratio(v, tr.out[s]) if prop else v * c
    if kind == "reciprocity":
        v = tr.W.ravel()[r * n + s]
        return _ratio(v, tr.inn[s]) if prop else v * c
    if kind in ("indegreeSender", "indegreeReceiver", "outdegreeSender", "outdegreeReceiver"):
        vec = tr.inn if kind.startswith("in") else tr.out
        v = vec[s] if kind.endswith("Sender") else vec[r]
        return _ratio(v, np.full(len(v), tr.total)) if prop else v * c
    if kind == "otp":
        return tr.otp.ravel()[s * n + r] * c
    if kind == "itp":
        return tr.otp.ravel()[r * n + s] * c
    if kind == "osp":
        return tr.osp.ravel()[s * n + r] * c
    if kind == "isp":
        return tr.isp.ravel()[s * n + r] * c
    raise ConfigError(f"statistic {kind!r} cannot be evaluated here")


def _ratio(num, den):
    out = np.zeros(len(num))
    pos = den > 0
    out[pos] = num[pos] / den[pos]
    return out


def _pshift(kind, last, s, r):
    if last is None:
        return np.zeros(len(s))
    a, b = last
    sa, sb, ra, rb = s == a, s == b, r == a, r == b
    s_out = ~(sa | sb)
    r_out = ~(ra | rb)
    if kind == "psABBA":
        m = sb & ra
    elif kind == "psABBY":
        m = sb & r_out
    elif kind == "psABAY":
        m = sa & r_out
    elif kind == "psABXA":
        m = ra & s_out
    elif kind == "psABXB":
        m = rb & s_out
    else:
        m = s_out & r_out
    return m.astype(float)


def design_matrix(effects: Sequence[EffectSpec], state: StatsState, cov: Covariates | None,
                  senders: np.ndarray, receivers: np.ndarray, t: float) -> np.ndarray:
    """Scaled statistics for the given rows; std scaling is over these rows."""
    rd = _Read(state, cov, t)
    X = np.empty((len(senders), len(effects)), order="F")
    std_cols = []
    for k, e in enumerate(effects):
        if e.kind == INTERACTION:
            continue
        X[:, k] = _raw(e, rd, senders, receivers)
        if e.scaling is Scaling.STD:
            std_cols.append(k)
    if std_cols:
        kernels.standardize_columns(X, std_cols)
    for k, e in enumerate(effects):
        if e.kind == INTERACTION:
            a, b = e.interact_with
            np.multiply(X[:, a], X[:, b], out=X[:, k])
    if not np.all(np.isfinite(X)):
        k = int(np.flatnonzero(~np.all(np.isfinite(X), axis=0))[0])
        raise ConfigError(f"statistic {effects[k].name!r} (effect {k}) is not finite at t={t}")
    return X


def compute_stat(spec: EffectSpec, dyad: tuple[int, int], state: StatsState,
                 cov: Covariates | None, t: float) -> float:
    """Raw value of one statistic for one dyad at time ``t``.

    Prop scaling is part of the statistic's definition and is applied;
    std scaling and interactions need the full risk set and are not.
    """
    if spec.kind == INTERACTION:
        raise ConfigError("interactions are only defined within a model (see compute_matrix)")
    s = np.array([dyad[0]])
    r = np.array([dyad[1]])
    return float(_raw(spec, _Read(state, cov, t), s, r)[0])


def compute_matrix(model: DyadicModel, riskset: RiskSet, state: StatsState,
                   cov: Covariates | None, t: float) -> np.ndarray:
    """|R| x P statistics over the active risk set, rows in flat-index order."""
    piece = riskset.piece(t)
    return design_matrix(model.effects, state, cov, piece.senders, piece.receivers, t)


def sender_matrix(effects: Sequence[EffectSpec], state: StatsState, cov: Covariates | None,
                  senders: np.ndarray, t: float) -> np.ndarray:
    for e in effects:
        if e.kind not in SENDER_KINDS:
            raise ConfigError(f"{e.kind} is not a sender-level statistic")
    return design_matrix(effects, state, cov, senders, senders, t)


def compute_sender_vector(model: ActorModel, actor: int, state: StatsState,
                          cov: Covariates | None, t: float,
                          riskset: RiskSet | None = None) -> np.ndarray:
    """Rate statistics for one actor; std scaling is over the sender risk set."""
    if riskset is None:
        senders = np.arange(state.n)
    else:
        senders = riskset.piece(t).sender_set
    pos = np.flatnonzero(senders == actor)
    if not len(pos):
        raise ConfigError(f"actor {actor} is not in the sender risk set at t={t}")
    return sender_matrix(model.rate_effects, state, cov, senders, t)[pos[0]]
