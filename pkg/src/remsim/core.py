"""Domain types shared by the simulation, estimation and assessment modules.

Actors are integer indices ``0..N-1``; external labels are mapped through
:class:`ActorIndex`. Dyads are addressed internally by the flat index
``sender * N + receiver`` so that statistic matrices can be gathered with a
single fancy-index.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator, Mapping, NamedTuple, Sequence

import numpy as np


class RemsimError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(RemsimError, ValueError):
    """Invalid model, schedule, covariate or configuration input."""


class HistoryError(RemsimError, ValueError):
    """An event history violates ordering or dyad validity."""


class SimulationError(RemsimError, RuntimeError):
    """A run could not continue (degenerate risk set, non-finite rates)."""


# ---------------------------------------------------------------------------
# Actors, events, histories
# ---------------------------------------------------------------------------


class ActorIndex:
    """Bijective map between external string labels and indices ``0..N-1``."""

    def __init__(self, labels: Sequence[str]):
        labels = [str(lab) for lab in labels]
        if len(labels) < 2:
            raise ConfigError(f"need at least 2 actors, got {len(labels)}")
        if len(set(labels)) != len(labels):
            raise ConfigError("actor labels must be unique")
        self._labels = tuple(labels)
        self._index = {lab: i for i, lab in enumerate(labels)}

    @classmethod
    def range(cls, n: int) -> "ActorIndex":
        return cls([str(i) for i in range(n)])

    def __len__(self) -> int:
        return len(self._labels)

    def __contains__(self, label: object) -> bool:
        return label in self._index

    def __eq__(self, other: object) -> bool:
        return isinstance(other, ActorIndex) and other._labels == self._labels

    def __hash__(self) -> int:
        return hash(self._labels)

    @property
    def labels(self) -> tuple[str, ...]:
        return self._labels

    def index(self, label: str) -> int:
        try:
            return self._index[str(label)]
        except KeyError:
            raise ConfigError(f"unknown actor label {label!r}") from None

    def label(self, i: int) -> str:
        return self._labels[i]


class Event(NamedTuple):
    time: float
    sender: int
    receiver: int

    @property
    def dyad(self) -> tuple[int, int]:
        return (self.sender, self.receiver)


class EventHistory:
    """Strictly time-ordered sequence of directed events among ``n_actors``.

    ``n_init`` counts the leading events that were supplied as an initial
    history or drawn as the random initializer; they are part of the
    sequence but were not generated by the model's own draw.
    """

    __slots__ = ("times", "senders", "receivers", "n_actors", "n_init")

    def __init__(self, times, senders, receivers, n_actors: int, n_init: int = 0):
        times = np.array(times, dtype=float).reshape(-1)
        senders = np.array(senders, dtype=np.int64).reshape(-1)
        receivers = np.array(receivers, dtype=np.int64).reshape(-1)
        if not (len(times) == len(senders) == len(receivers)):
            raise HistoryError("times, senders and receivers differ in length")
        if n_actors < 2:
            raise HistoryError(f"need at least 2 actors, got {n_actors}")
        validate_events(times, senders, receivers, n_actors)
        if not 0 <= n_init <= len(times):
            raise HistoryError(f"n_init={n_init} outside [0, {len(times)}]")
        for arr in (times, senders, receivers):
            arr.flags.writeable = False
        self.times = times
        self.senders = senders
        self.receivers = receivers
        self.n_actors = int(n_actors)
        self.n_init = int(n_init)

    @classmethod
    def empty(cls, n_actors: int) -> "EventHistory":
        return cls([], [], [], n_actors)

    @classmethod
    def from_events(cls, events: Iterable, n_actors: int, n_init: int = 0) -> "EventHistory":
        rows = [tuple(e) for e in events]
        if not rows:
            return cls.empty(n_actors)
        t, s, r = zip(*rows)
        return cls(t, s, r, n_actors, n_init)

    def __len__(self) -> int:
        return len(self.times)

    def __iter__(self) -> Iterator[Event]:
        for t, s, r in zip(self.times.tolist(), self.senders.tolist(), self.receivers.tolist()):
            yield Event(t, s, r)

    def __getitem__(self, k: int) -> Event:
        return Event(float(self.times[k]), int(self.senders[k]), int(self.receivers[k]))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EventHistory):
            return NotImplemented
        return (
            self.n_actors == other.n_actors
            and np.array_equal(self.times, other.times)
            and np.array_equal(self.senders, other.senders)
            and np.array_equal(self.receivers, other.receivers)
        )

    def __repr__(self) -> str:
        return f"EventHistory(M={len(self)}, N={self.n_actors}, n_init={self.n_init})"

    @property
    def end_time(self) -> float:
        return float(self.times[-1]) if len(self) else 0.0

    def prefix(self, m: int) -> "EventHistory":
        return EventHistory(self.times[:m], self.senders[:m], self.receivers[:m],
                            self.n_actors, min(self.n_init, m))

    def before(self, t: float) -> "EventHistory":
        """Events with time strictly less than ``t``."""
        return self.prefix(int(np.searchsorted(self.times, t, side="left")))

    def counts(self) -> np.ndarray:
        """N x N matrix of raw event counts."""
        a = np.zeros((self.n_actors, self.n_actors))
        np.add.at(a, (self.senders, self.receivers), 1.0)
        return a


def validate_events(times, senders, receivers, n_actors: int) -> None:
    if len(times) == 0:
        return
    if not np.all(np.isfinite(times)):
        k = int(np.flatnonzero(~np.isfinite(times))[0])
        raise HistoryError(f"event {k}: time is not finite")
    if times[0] < 0:
        raise HistoryError("event 0: negative time")
    bad = np.flatnonzero(np.diff(times) <= 0)
    if len(bad):
        k = int(bad[0]) + 1
        raise HistoryError(
            f"event {k}: time {times[k]!r} does not strictly exceed previous {times[k - 1]!r}")
    for name, arr in (("sender", senders), ("receiver", receivers)):
        out = np.flatnonzero((arr < 0) | (arr >= n_actors))
        if len(out):
            raise HistoryError(f"event {int(out[0])}: {name} outside [0, {n_actors})")
    loops = np.flatnonzero(senders == receivers)
    if len(loops):
        raise HistoryError(f"event {int(loops[0])}: self-loop on actor {int(senders[loops[0]])}")


# ---------------------------------------------------------------------------
# Risk sets
# ---------------------------------------------------------------------------


class _RiskPiece:
    """One constant stretch of the risk set with cached index arrays."""

    __slots__ = ("dyads", "index", "senders", "receivers", "sender_set", "receivers_of")

    def __init__(self, dyads: frozenset, n: int):
        self.dyads = dyads
        idx = np.array(sorted(s * n + r for s, r in dyads), dtype=np.int64)
        self.index = idx
        self.senders = idx // n
        self.receivers = idx % n
        self.sender_set = np.unique(self.senders)
        # idx is sorted, so each sender's receivers form a contiguous run.
        bounds = np.searchsorted(self.senders, np.arange(n + 1))
        self.receivers_of = [self.receivers[bounds[i]:bounds[i + 1]] for i in range(n)]


class RiskSet:
    """Dyads eligible for the next event, piecewise constant in time.

    ``schedule`` is a sequence of ``(from_time, dyads)``; the set active at
    ``t`` is the piece with the largest ``from_time <= t``, or ``base`` when
    ``t`` precedes every breakpoint.
    """

    def __init__(self, n_actors: int, base: Iterable | None = None,
                 schedule: Sequence[tuple[float, Iterable]] = ()):
        if n_actors < 2:
            raise ConfigError(f"need at least 2 actors, got {n_actors}")
        self.n_actors = int(n_actors)
        if base is None:
            base = [(i, j) for i in range(n_actors) for j in range(n_actors) if i != j]
        self.base = self._check(base)
        times, sets = [], []
        for from_time, dyads in schedule:
            from_time = float(from_time)
            if times and from_time <= times[-1]:
                raise ConfigError("risk-set schedule times must be strictly increasing")
            times.append(from_time)
            sets.append(self._check(dyads))
        self.schedule = tuple(zip(times, sets))
        self._times = times
        self._pieces = [_RiskPiece(d, self.n_actors) for d in [self.base, *sets]]

    def _check(self, dyads: Iterable) -> frozenset:
        out = set()
        for d in dyads:
            s, r = int(d[0]), int(d[1])
            if s == r:
                raise ConfigError(f"risk set contains self-loop ({s}, {r})")
            if not (0 <= s < self.n_actors and 0 <= r < self.n_actors):
                raise ConfigError(f"risk-set dyad ({s}, {r}) outside actor range")
            out.add((s, r))
        return frozenset(out)

    @classmethod
    def full(cls, n_actors: int) -> "RiskSet":
        return cls(n_actors)

    @classmethod
    def excluding(cls, n_actors: int, excluded: Iterable) -> "RiskSet":
        ex = {(int(a), int(b)) for a, b in excluded}
        base = [(i, j) for i in range(n_actors) for j in range(n_actors)
                if i != j and (i, j) not in ex]
        return cls(n_actors, base)

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return tuple(self._times)

    @property
    def is_constant(self) -> bool:
        return not self._times

    def piece(self, t: float) -> _RiskPiece:
        k = bisect.bisect_right(self._times, t)
        p = self._pieces[k]
        if not p.dyads:
            raise SimulationError(f"risk set active at t={t} is empty")
        return p

    def active(self, t: float) -> frozenset:
        return self.piece(t).dyads

    def active_index(self, t: float) -> np.ndarray:
        return self.piece(t).index

    def all_dyads(self) -> frozenset:
        out = set(self.base)
        for _, d in self.schedule:
            out |= d
        return frozenset(out)


def active_riskset(riskset: RiskSet, t: float) -> frozenset:
    if t < 0:
        raise ConfigError(f"t must be nonnegative, got {t}")
    return riskset.active(t)


# ---------------------------------------------------------------------------
# Covariates
# ---------------------------------------------------------------------------


class ActorCovariates:
    """Piecewise-constant actor attributes.

    ``series[var][actor]`` is a list of ``(from_time, value)`` with strictly
    increasing times; the first piece must start at or before time 0.
    Categorical variables carry their labels in ``levels[var]`` and store
    the level code as value.
    """

    def __init__(self, n_actors: int, series: Mapping[str, Mapping[int, Sequence[tuple[float, float]]]],
                 levels: Mapping[str, Sequence[str]] | None = None):
        self.n_actors = int(n_actors)
        self.levels = {k: tuple(v) for k, v in (levels or {}).items()}
        self._breaks: dict[str, list[float]] = {}
        self._table: dict[str, np.ndarray] = {}
        self.series = {}
        for var, per_actor in series.items():
            clean = {}
            for a in range(self.n_actors):
                if a not in per_actor or not per_actor[a]:
                    raise ConfigError(f"covariate {var!r}: no value for actor {a}")
                pts = [(float(t), float(v)) for t, v in per_actor[a]]
                ts = [t for t, _ in pts]
                if any(t2 <= t1 for t1, t2 in zip(ts, ts[1:])):
                    raise ConfigError(f"covariate {var!r}, actor {a}: times not strictly increasing")
                if ts[0] > 0:
                    raise ConfigError(f"covariate {var!r}, actor {a}: no value at or before t=0")
                clean[a] = pts
            extra = set(per_actor) - set(range(self.n_actors))
            if extra:
                raise ConfigError(f"covariate {var!r}: actor {min(extra)} not in actor set")
            self.series[var] = clean
            breaks = sorted({t for pts in clean.values() for t, _ in pts if t > 0})
            rows = []
            for b in [0.0, *breaks]:
                rows.append([_step_value(clean[a], b) for a in range(self.n_actors)])
            self._breaks[var] = breaks
            self._table[var] = np.array(rows, dtype=float)
            self._table[var].flags.writeable = False

    @classmethod
    def constant(cls, values: Mapping[str, Sequence[float]], levels=None) -> "ActorCovariates":
        n = {len(v) for v in values.values()}
        if len(n) != 1:
            raise ConfigError("constant covariates must share one length")
        n_actors = n.pop()
        series = {var: {a: [(0.0, float(v[a]))] for a in range(n_actors)} for var, v in values.items()}
        return cls(n_actors, series, levels)

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(self._table)

    def __contains__(self, var: str) -> bool:
        return var in self._table

    def values_at(self, var: str, t: float) -> np.ndarray:
        try:
            table = self._table[var]
        except KeyError:
            raise ConfigError(f"unknown actor covariate {var!r}") from None
        return table[bisect.bisect_right(self._breaks[var], t)]

    def value(self, var: str, actor: int, t: float) -> float:
        return float(self.values_at(var, t)[actor])

    def breakpoints(self, var: str) -> tuple[float, ...]:
        return tuple(self._breaks[var])

    def distinct_values(self, var: str) -> np.ndarray:
        """Sorted values taken by ``var`` over all actors and times."""
        if var not in self._table:
            raise ConfigError(f"unknown actor covariate {var!r}")
        return np.unique(self._table[var])


def _step_value(pts, t):
    k = bisect.bisect_right([p[0] for p in pts], t) - 1
    return pts[k][1]


class DyadCovariates:
    """Constant dyadic attributes stored as N x N matrices (NaN = undefined)."""

    def __init__(self, n_actors: int, matrices: Mapping[str, np.ndarray]):
        self.n_actors = int(n_actors)
        self._m = {}
        for var, m in matrices.items():
            m = np.array(m, dtype=float)
            if m.shape != (n_actors, n_actors):
                raise ConfigError(f"dyad covariate {var!r} has shape {m.shape}, expected {(n_actors, n_actors)}")
            m.flags.writeable = False
            self._m[var] = m

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(self._m)

    def __contains__(self, var: str) -> bool:
        return var in self._m

    def matrix(self, var: str) -> np.ndarray:
        try:
            return self._m[var]
        except KeyError:
            raise ConfigError(f"unknown dyad covariate {var!r}") from None

    def check_defined(self, var: str, riskset: RiskSet) -> None:
        m = self.matrix(var)
        for s, r in sorted(riskset.all_dyads()):
            if not np.isfinite(m[s, r]):
                raise ConfigError(f"dyad covariate {var!r} undefined for dyad ({s}, {r}) in the risk set")


@dataclass(frozen=True)
class Covariates:
    actor: ActorCovariates | None = None
    dyad: DyadCovariates | None = None

    def actor_values(self, var: str, t: float) -> np.ndarray:
        if self.actor is None:
            raise ConfigError(f"actor covariate {var!r} requested but no actor covariates given")
        return self.actor.values_at(var, t)

    def dyad_matrix(self, var: str) -> np.ndarray:
        if self.dyad is None:
            raise ConfigError(f"dyad covariate {var!r} requested but no dyad covariates given")
        return self.dyad.matrix(var)


# ---------------------------------------------------------------------------
# Model terms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MemorySpec:
    """How past events are weighted: ``full``, ``exponential`` or ``window``."""

    kind: str = "full"
    value: float | None = None  # half-life or window length

    def __post_init__(self):
        if self.kind == "full":
            if self.value is not None:
                raise ConfigError("full memory takes no parameter")
        elif self.kind in ("exponential", "window"):
            if self.value is None or not math.isfinite(self.value) or self.value <= 0:
                raise ConfigError(f"{self.kind} memory needs a positive finite parameter, got {self.value}")
        else:
            raise ConfigError(f"unknown memory kind {self.kind!r}")

    @classmethod
    def full(cls) -> "MemorySpec":
        return cls("full")

    @classmethod
    def exponential(cls, half_life: float) -> "MemorySpec":
        return cls("exponential", float(half_life))

    @classmethod
    def window(cls, length: float) -> "MemorySpec":
        return cls("window", float(length))

    def __str__(self) -> str:
        return self.kind if self.value is None else f"{self.kind}({self.value:g})"


FULL_MEMORY = MemorySpec.full()


class Scaling(str, Enum):
    NONE = "none"
    STD = "std"
    PROP = "prop"


EXOGENOUS_ACTOR = frozenset({"send", "receive", "same", "difference"})
EXOGENOUS_DYAD = frozenset({"dyad"})
WEIGHT_KINDS = frozenset({
    "inertia", "reciprocity",
    "indegreeSender", "indegreeReceiver", "outdegreeSender", "outdegreeReceiver",
    "otp", "itp", "osp", "isp",
})
RECENCY_KINDS = frozenset({"rrankSend", "rrankReceive"})
PSHIFT_KINDS = ("psABBA", "psABBY", "psABAY", "psABXA", "psABXB", "psABXY")
DISTINCT_KINDS = frozenset({"distinct_dissatisfaction", "distinct_choice"})
INTERACTION = "interact"

KINDS = frozenset({"baseline", INTERACTION, *EXOGENOUS_ACTOR, *EXOGENOUS_DYAD, *WEIGHT_KINDS,
                   *RECENCY_KINDS, *PSHIFT_KINDS, *DISTINCT_KINDS})
VARIABLE_KINDS = EXOGENOUS_ACTOR | EXOGENOUS_DYAD | DISTINCT_KINDS
MEMORY_KINDS = WEIGHT_KINDS | RECENCY_KINDS | DISTINCT_KINDS
PROP_KINDS = frozenset({"inertia", "reciprocity", "indegreeSender", "indegreeReceiver",
                        "outdegreeSender", "outdegreeReceiver"})
SENDER_KINDS = frozenset({"baseline", "send", "outdegreeSender", "indegreeSender",
                          "distinct_dissatisfaction", INTERACTION})
SENDER_ONLY_KINDS = frozenset({"distinct_dissatisfaction"})


@dataclass(frozen=True)
class EffectSpec:
    """One model term.

    ``d_star`` is only used by the distinctiveness kinds and may be a scalar
    shared by every actor or a per-actor tuple.
    """

    kind: str
    variable: str | None = None
    memory: MemorySpec = FULL_MEMORY
    scaling: Scaling = Scaling.NONE
    interact_with: tuple[int, int] | None = None
    d_star: float | tuple[float, ...] | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown statistic kind {self.kind!r}")
        object.__setattr__(self, "scaling", Scaling(self.scaling))
        if (self.variable is not None) != (self.kind in VARIABLE_KINDS):
            need = "requires" if self.kind in VARIABLE_KINDS else "takes no"
            raise ConfigError(f"{self.kind} {need} a covariate variable")
        if self.kind not in MEMORY_KINDS and self.memory != FULL_MEMORY:
            raise ConfigError(f"{self.kind} does not use memory decay")
        if self.scaling is Scaling.PROP and self.kind not in PROP_KINDS:
            raise ConfigError(f"prop scaling is undefined for {self.kind}")
        if self.kind == INTERACTION:
            if self.interact_with is None or len(self.interact_with) != 2:
                raise ConfigError("interact needs interact_with=(a, b)")
            object.__setattr__(self, "interact_with", (int(self.interact_with[0]), int(self.interact_with[1])))
            if self.scaling is not Scaling.NONE:
                raise ConfigError("interaction columns are products of scaled columns; scaling must be none")
        elif self.interact_with is not None:
            raise ConfigError(f"interact_with is only valid for kind {INTERACTION!r}")
        if self.kind in DISTINCT_KINDS:
            if self.d_star is None:
                raise ConfigError(f"{self.kind} needs d_star")
            ds = np.atleast_1d(np.asarray(self.d_star, dtype=float))
            if np.any((ds < 0) | (ds > 1)) or not np.all(np.isfinite(ds)):
                raise ConfigError("d_star must lie in [0, 1]")
            if ds.size > 1:
                object.__setattr__(self, "d_star", tuple(float(x) for x in ds))
            else:
                object.__setattr__(self, "d_star", float(ds[0]))
        elif self.d_star is not None:
            raise ConfigError("d_star is only valid for distinctiveness kinds")

    @property
    def name(self) -> str:
        if self.kind == INTERACTION:
            return f"interact_{self.interact_with[0]}_{self.interact_with[1]}"
        parts = [self.kind]
        if self.variable:
            parts.append(self.variable)
        if self.memory != FULL_MEMORY:
            parts.append(str(self.memory))
        if self.scaling is not Scaling.NONE:
            parts.append(self.scaling.value)
        return "_".join(parts)

    def d_star_array(self, n: int) -> np.ndarray:
        ds = np.atleast_1d(np.asarray(self.d_star, dtype=float))
        if ds.size == 1:
            return np.full(n, ds[0])
        if ds.size != n:
            raise ConfigError(f"d_star has {ds.size} entries for {n} actors")
        return ds


def _check_pieces(pieces, what: str) -> tuple[tuple[float, float], ...]:
    out = tuple((float(t), float(v)) for t, v in pieces)
    if not out:
        raise ConfigError(f"{what}: needs at least one piece")
    if out[0][0] > 0:
        raise ConfigError(f"{what}: first piece must cover time 0")
    if any(b[0] <= a[0] for a, b in zip(out, out[1:])):
        raise ConfigError(f"{what}: from_times must be strictly increasing")
    if not all(math.isfinite(v) for _, v in out):
        raise ConfigError(f"{what}: values must be finite")
    return out


@dataclass(frozen=True)
class GroupSplit:
    targets: frozenset
    pieces: tuple[tuple[float, float], ...]


class ParamSchedule:
    """Piecewise-constant coefficient, optionally split by sender group.

    Breakpoints are inclusive: the value changes *at* ``from_time``.
    """

    __slots__ = ("pieces", "group_split", "_times", "_vals", "_gtimes", "_gvals")

    def __init__(self, pieces, group_split: tuple[Iterable[int], Sequence] | GroupSplit | None = None):
        self.pieces = _check_pieces(pieces, "param schedule")
        self._times = [t for t, _ in self.pieces]
        self._vals = [v for _, v in self.pieces]
        if group_split is not None:
            if not isinstance(group_split, GroupSplit):
                targets, gp = group_split
                group_split = GroupSplit(frozenset(int(a) for a in targets),
                                         _check_pieces(gp, "group-split schedule"))
            if not group_split.targets:
                raise ConfigError("group split needs at least one target actor")
            self._gtimes = [t for t, _ in group_split.pieces]
            self._gvals = [v for _, v in group_split.pieces]
        self.group_split = group_split

    @classmethod
    def constant(cls, value: float) -> "ParamSchedule":
        return cls([(0.0, value)])

    @property
    def is_constant(self) -> bool:
        return len(self.pieces) == 1 and self.group_split is None

    def default_at(self, t: float) -> float:
        return self._vals[max(bisect.bisect_right(self._times, t) - 1, 0)]

    def target_at(self, t: float) -> float:
        return self._gvals[max(bisect.bisect_right(self._gtimes, t) - 1, 0)]

    def value_at(self, t: float, sender: int | None = None) -> float:
        if self.group_split is not None and sender is not None and sender in self.group_split.targets:
            return self.target_at(t)
        return self.default_at(t)

    def breakpoints(self) -> tuple[float, ...]:
        pts = set(self._times[1:])
        if self.group_split is not None:
            pts |= set(self._gtimes[1:])
        return tuple(sorted(pts))

    def __eq__(self, other: object) -> bool:
        return (isinstance(other, ParamSchedule) and self.pieces == other.pieces
                and self.group_split == other.group_split)

    def __repr__(self) -> str:
        if self.is_constant:
            return f"ParamSchedule.constant({self.pieces[0][1]!r})"
        return f"ParamSchedule({list(self.pieces)!r}, group_split={self.group_split!r})"


def param_at(schedule: ParamSchedule, t: float, sender: int | None = None) -> float:
    if t < 0:
        raise ConfigError(f"t must be nonnegative, got {t}")
    return schedule.value_at(t, sender)


def as_schedule(p) -> ParamSchedule:
    if isinstance(p, ParamSchedule):
        return p
    return ParamSchedule.constant(float(p))


def _check_effects(effects: Sequence[EffectSpec], what: str) -> None:
    for k, e in enumerate(effects):
        if e.kind == INTERACTION:
            a, b = e.interact_with
            if not (0 <= a < k and 0 <= b < k):
                raise ConfigError(f"{what} effect {k}: interact_with {e.interact_with} must reference earlier effects")


@dataclass(frozen=True)
class DyadicModel:
    effects: tuple[EffectSpec, ...]
    params: tuple[ParamSchedule, ...]

    def __init__(self, effects: Sequence[EffectSpec], params: Sequence):
        effects = tuple(effects)
        params = tuple(as_schedule(p) for p in params)
        if len(effects) != len(params):
            raise ConfigError(f"{len(effects)} effects but {len(params)} parameters")
        if not effects:
            raise ConfigError("model needs at least one effect")
        _check_effects(effects, "dyadic")
        object.__setattr__(self, "effects", effects)
        object.__setattr__(self, "params", params)

    @classmethod
    def from_terms(cls, terms: Sequence[tuple[EffectSpec, object]]) -> "DyadicModel":
        return cls([e for e, _ in terms], [p for _, p in terms])

    @property
    def names(self) -> list[str]:
        return [e.name for e in self.effects]

    def with_params(self, params: Sequence) -> "DyadicModel":
        return DyadicModel(self.effects, params)

    def breakpoints(self) -> tuple[float, ...]:
        return tuple(sorted({b for p in self.params for b in p.breakpoints()}))


@dataclass(frozen=True)
class ActorModel:
    rate_effects: tuple[EffectSpec, ...]
    rate_params: tuple[ParamSchedule, ...]
    choice_effects: tuple[EffectSpec, ...]
    choice_params: tuple[ParamSchedule, ...]

    def __init__(self, rate_effects, rate_params, choice_effects, choice_params):
        rate_effects, choice_effects = tuple(rate_effects), tuple(choice_effects)
        rate_params = tuple(as_schedule(p) for p in rate_params)
        choice_params = tuple(as_schedule(p) for p in choice_params)
        if len(rate_effects) != len(rate_params) or len(choice_effects) != len(choice_params):
            raise ConfigError("effects and parameters differ in length")
        if not rate_effects or not choice_effects:
            raise ConfigError("actor model needs at least one rate and one choice effect")
        for e in rate_effects:
            if e.kind not in SENDER_KINDS:
                raise ConfigError(f"{e.kind} is not a sender-level statistic")
        for e in choice_effects:
            if e.kind in SENDER_ONLY_KINDS:
                raise ConfigError(f"{e.kind} is sender-only and cannot drive receiver choice")
        _check_effects(rate_effects, "rate")
        _check_effects(choice_effects, "choice")
        object.__setattr__(self, "rate_effects", rate_effects)
        object.__setattr__(self, "rate_params", rate_params)
        object.__setattr__(self, "choice_effects", choice_effects)
        object.__setattr__(self, "choice_params", choice_params)


@dataclass
class SimConfig:
    n_actors: int
    riskset: RiskSet | None = None
    covariates: Covariates = field(default_factory=Covariates)
    max_events: int | None = None
    max_time: float | None = None
    seed: int = 0
    initial_history: EventHistory | None = None

    def __post_init__(self):
        if self.n_actors < 2:
            raise ConfigError(f"need at least 2 actors, got {self.n_actors}")
        if self.max_events is None and self.max_time is None:
            raise ConfigError("set max_events, max_time or both")
        if self.max_events is not None and self.max_events < 0:
            raise ConfigError("max_events must be nonnegative")
        if self.max_time is not None and not self.max_time >= 0:
            raise ConfigError("max_time must be nonnegative")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.riskset is None:
            self.riskset = RiskSet.full(self.n_actors)
        elif self.riskset.n_actors != self.n_actors:
            raise ConfigError("risk set actor count differs from n_actors")
        e0 = self.initial_history
        if e0 is not None:
            if e0.n_actors != self.n_actors:
                raise ConfigError("initial history actor count differs from n_actors")
            if self.max_time is not None and len(e0) and e0.end_time > self.max_time:
                raise ConfigError("initial history extends past max_time")

    @property
    def stop_time(self) -> float:
        return math.inf if self.max_time is None else float(self.max_time)

    @property
    def stop_events(self) -> float:
        return math.inf if self.max_events is None else int(self.max_events)


def replicate_seed(base_seed: int, r: int) -> int:
    """Seed for replicate ``r``: ``base_seed XOR r``."""
    return (int(base_seed) ^ int(r)) & (2**64 - 1)


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed)))
