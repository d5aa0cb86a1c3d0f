"""Simulation-based goodness of fit.

A battery of fit indices is computed on the observed history and on ``L``
histories simulated from the fitted model (matched to the observed event
count). For every bin of every index the observed value's percentile rank
within the simulated values is reported; ties count half.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .actor import simulate_actor
from .core import (
    ActorModel, ConfigError, Covariates, DyadicModel, EventHistory, RemsimError, RiskSet,
    SimConfig, SimulationError, FULL_MEMORY, replicate_seed,
)
from .dyadic import simulate_dyadic
from .stats import DistinctSpec, StatsState

INDEX_KINDS = (
    "outdegree_dist", "indegree_dist", "event_density_by_actor_category",
    "event_density_by_dyad_bin", "pshift_census", "temporal_hop_length_dist",
    "interevent_time_dist", "reciprocation_time_dist", "modularity", "avg_distinctiveness",
)
PSHIFT_LABELS = ("AB-BA", "AB-BY", "AB-AY", "AB-XA", "AB-XB", "other")
_CONTINUOUS = ("interevent_time_dist", "reciprocation_time_dist")
_DEGREE = ("outdegree_dist", "indegree_dist")


@dataclass(frozen=True)
class FitIndexSpec:
    """One fit index.

    ``dyad_filter`` is ``(dyad variable, value)``; ``partition`` is either an
    actor covariate name or an explicit per-actor community list. ``edges``
    fixes histogram bins; without it, :func:`gof_run` derives ``bins`` bins
    from the pooled observed and simulated values.
    """

    kind: str
    variable: str | None = None
    edges: tuple[float, ...] | None = None
    bins: int = 10
    dyad_filter: tuple[str, float] | None = None
    partition: str | tuple[int, ...] | None = None
    distinct: DistinctSpec | None = None
    name: str | None = None

    def __post_init__(self):
        if self.kind not in INDEX_KINDS:
            raise ConfigError(f"unknown fit index {self.kind!r}")
        if self.kind in ("event_density_by_actor_category", "event_density_by_dyad_bin") and not self.variable:
            raise ConfigError(f"{self.kind} needs a variable")
        if self.kind == "event_density_by_dyad_bin" and (self.edges is None or len(self.edges) < 2):
            raise ConfigError("event_density_by_dyad_bin needs at least two bin edges")
        if self.kind == "modularity" and self.partition is None:
            raise ConfigError("modularity needs a partition")
        if self.kind == "avg_distinctiveness" and self.distinct is None:
            raise ConfigError("avg_distinctiveness needs a DistinctSpec")
        if self.edges is not None:
            e = tuple(float(x) for x in self.edges)
            if any(b <= a for a, b in zip(e, e[1:])):
                raise ConfigError("bin edges must be strictly increasing")
            object.__setattr__(self, "edges", e)
        if self.bins < 1:
            raise ConfigError("bins must be positive")

    @property
    def label(self) -> str:
        if self.name:
            return self.name
        parts = [self.kind]
        if self.variable:
            parts.append(self.variable)
        if self.dyad_filter:
            parts.append(f"{self.dyad_filter[0]}={self.dyad_filter[1]:g}")
        if isinstance(self.partition, str):
            parts.append(self.partition)
        return "_".join(parts)


# ---------------------------------------------------------------------------
# Index definitions
# ---------------------------------------------------------------------------


def degree_counts(history: EventHistory, out: bool = True) -> np.ndarray:
    side = history.senders if out else history.receivers
    return np.bincount(side, minlength=history.n_actors).astype(float)


def pshift_census(history: EventHistory) -> np.ndarray:
    """Counts of AB-BA, AB-BY, AB-AY, AB-XA, AB-XB and other over consecutive pairs."""
    out = np.zeros(len(PSHIFT_LABELS))
    if len(history) < 2:
        return out
    a, b = history.senders[:-1], history.receivers[:-1]
    i, j = history.senders[1:], history.receivers[1:]
    i_out = (i != a) & (i != b)
    j_out = (j != a) & (j != b)
    cats = [
        (i == b) & (j == a),
        (i == b) & j_out,
        (i == a) & j_out,
        (j == a) & i_out,
        (j == b) & i_out,
    ]
    for k, c in enumerate(cats):
        out[k] = c.sum()
    out[-1] = len(i) - out[:-1].sum()
    return out


def temporal_hops(history: EventHistory) -> np.ndarray:
    """N x N minimal hop counts of time-respecting paths; 0 on the diagonal
    and for unreachable pairs.

    Layer ``k`` holds, per source, the earliest arrival time at each actor
    using at most ``k`` hops; an event extends a path when it starts after
    the path's arrival at its sender.
    """
    n = history.n_actors
    hops = np.zeros((n, n), dtype=np.int64)
    if not len(history):
        return hops
    order = np.argsort(history.receivers, kind="stable")
    recv_sorted = history.receivers[order]
    starts = np.flatnonzero(np.r_[True, np.diff(recv_sorted) != 0])
    targets = recv_sorted[starts]
    times = history.times[order]
    senders = history.senders[order]
    arrive = np.full((n, n), np.inf)
    np.fill_diagonal(arrive, -np.inf)
    for k in range(1, n):
        cand = np.where(arrive[:, senders] < times[None, :], times[None, :], np.inf)
        best = np.minimum.reduceat(cand, starts, axis=1)
        new = arrive.copy()
        new[:, targets] = np.minimum(new[:, targets], best)
        if np.array_equal(new, arrive):
            break
        # a layer can lower arrival times without reaching anyone new, and
        # the earlier arrivals may open paths in the next layer
        hops[np.isinf(arrive) & np.isfinite(new)] = k
        arrive = new
    return hops


def hop_histogram(history: EventHistory) -> np.ndarray:
    """Counts of pairs at hop length 1..N-1, then the unreachable count."""
    n = history.n_actors
    h = temporal_hops(history)
    off = ~np.eye(n, dtype=bool)
    vals = h[off]
    out = np.bincount(vals, minlength=n).astype(float)
    # bincount slot 0 holds unreachable pairs; move it to the end
    return np.r_[out[1:n], out[0]]


def _dyad_mask(spec: FitIndexSpec, cov: Covariates | None, n: int) -> np.ndarray | None:
    if spec.dyad_filter is None:
        return None
    var, value = spec.dyad_filter
    m = (cov or Covariates()).dyad_matrix(var)
    return m == value


def interevent_times(history: EventHistory, mask=None) -> np.ndarray:
    """Gaps between consecutive events on the same dyad."""
    n = history.n_actors
    flat = history.senders * n + history.receivers
    order = np.lexsort((history.times, flat))
    f, t = flat[order], history.times[order]
    same = f[1:] == f[:-1]
    gaps = (t[1:] - t[:-1])[same]
    if mask is not None:
        keep = mask.ravel()[f[1:][same]]
        gaps = gaps[keep]
    return np.sort(gaps)


def reciprocation_times(history: EventHistory, mask=None) -> np.ndarray:
    """For each i->j event, the wait until the next j->i event (if any)."""
    n = history.n_actors
    out = []
    by_dyad: dict[int, np.ndarray] = {}
    flat = history.senders * n + history.receivers
    for d in np.unique(flat):
        by_dyad[int(d)] = history.times[flat == d]
    for t, i, j in zip(history.times, history.senders, history.receivers):
        if mask is not None and not mask[i, j]:
            continue
        back = by_dyad.get(int(j) * n + int(i))
        if back is None:
            continue
        k = np.searchsorted(back, t, side="right")
        if k < len(back):
            out.append(back[k] - t)
    return np.sort(np.array(out, dtype=float))


def modularity(history: EventHistory, communities: np.ndarray) -> float:
    """Newman modularity of the symmetrized event-count graph.

    ``Q = sum_c [ e_c / m - (d_c / 2m)^2 ]`` with ``m`` the number of events,
    ``e_c`` the events inside community ``c`` and ``d_c`` the summed in- and
    out-degree of its members.
    """
    m = len(history)
    if m == 0:
        return 0.0
    communities = np.asarray(communities)
    cs, cr = communities[history.senders], communities[history.receivers]
    deg = np.bincount(history.senders, minlength=history.n_actors) + \
        np.bincount(history.receivers, minlength=history.n_actors)
    q = 0.0
    for c in np.unique(communities):
        inside = np.count_nonzero((cs == c) & (cr == c))
        d_c = deg[communities == c].sum()
        q += inside / m - (d_c / (2.0 * m)) ** 2
    return float(q)


def _partition(spec: FitIndexSpec, history: EventHistory, cov: Covariates | None) -> np.ndarray:
    if isinstance(spec.partition, str):
        return (cov or Covariates()).actor_values(spec.partition, history.end_time)
    part = np.asarray(spec.partition)
    if part.shape != (history.n_actors,):
        raise ConfigError(f"partition has {part.size} entries for {history.n_actors} actors")
    return part


def avg_distinctiveness(history: EventHistory, dspec: DistinctSpec, cov: Covariates | None) -> float:
    """Mean final distinctiveness over actors involved in at least one event."""
    n = history.n_actors
    z = (cov or Covariates()).actor_values(dspec.variable, history.end_time)
    state = StatsState(n, history=history)
    d = state.distinctiveness(FULL_MEMORY, z, dspec.d_star_array(n))
    active = (degree_counts(history, True) + degree_counts(history, False)) > 0
    return float(d[active].mean()) if active.any() else math.nan


def category_density(history: EventHistory, var: str, cov: Covariates | None) -> np.ndarray:
    """Event counts by (sender level, receiver level), row-major, levels sorted."""
    c = cov or Covariates()
    actor = c.actor
    if actor is None:
        raise ConfigError(f"actor covariate {var!r} requested but no actor covariates given")
    levels = actor.distinct_values(var)
    L = len(levels)
    out = np.zeros(L * L)
    for t, i, j in zip(history.times, history.senders, history.receivers):
        v = actor.values_at(var, t)
        a = np.searchsorted(levels, v[i])
        b = np.searchsorted(levels, v[j])
        out[a * L + b] += 1
    return out


def dyad_bin_density(history: EventHistory, var: str, edges, cov: Covariates | None) -> np.ndarray:
    m = (cov or Covariates()).dyad_matrix(var)
    vals = m[history.senders, history.receivers]
    counts, _ = np.histogram(vals, bins=np.asarray(edges))
    return counts.astype(float)


def compute_index(spec: FitIndexSpec, history: EventHistory, cov: Covariates | None = None) -> np.ndarray:
    """Raw value of one fit index.

    Degree kinds return per-actor counts (or their histogram over
    ``spec.edges``); time distributions return the sorted values (or their
    histogram). Scalar indices come back as length-1 arrays.
    """
    kind = spec.kind
    if kind in _DEGREE:
        v = degree_counts(history, kind == "outdegree_dist")
    elif kind == "pshift_census":
        return pshift_census(history)
    elif kind == "temporal_hop_length_dist":
        return hop_histogram(history)
    elif kind == "interevent_time_dist":
        v = interevent_times(history, _dyad_mask(spec, cov, history.n_actors))
    elif kind == "reciprocation_time_dist":
        v = reciprocation_times(history, _dyad_mask(spec, cov, history.n_actors))
    elif kind == "modularity":
        return np.array([modularity(history, _partition(spec, history, cov))])
    elif kind == "avg_distinctiveness":
        return np.array([avg_distinctiveness(history, spec.distinct, cov)])
    elif kind == "event_density_by_actor_category":
        return category_density(history, spec.variable, cov)
    else:
        return dyad_bin_density(history, spec.variable, spec.edges, cov)
    if spec.edges is not None:
        return np.histogram(v, bins=np.asarray(spec.edges))[0].astype(float)
    return v


def percentile_rank(observed: np.ndarray, simulated: np.ndarray) -> np.ndarray:
    """Midpoint percentile of ``observed[b]`` among ``simulated[:, b]`` (NaNs skipped)."""
    sim = np.asarray(simulated, dtype=float)
    obs = np.asarray(observed, dtype=float)
    valid = np.isfinite(sim)
    less = ((sim < obs[None, :]) & valid).sum(axis=0)
    equal = ((sim == obs[None, :]) & valid).sum(axis=0)
    count = valid.sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        pct = 100.0 * (less + 0.5 * equal) / count
    pct[~np.isfinite(obs) | (count == 0)] = np.nan
    return pct


# ---------------------------------------------------------------------------
# Running the battery
# ---------------------------------------------------------------------------


@dataclass
class IndexResult:
    spec: FitIndexSpec
    bins: list[str]
    observed: np.ndarray
    simulated: np.ndarray  # L x B
    percentiles: np.ndarray

    def to_dict(self) -> dict:
        def clean(a):
            return [None if not math.isfinite(x) else float(x) for x in np.ravel(a)]

        return {
            "kind": self.spec.kind,
            "bins": self.bins,
            "observed": clean(self.observed),
            "simulated": [clean(row) for row in self.simulated],
            "percentiles": clean(self.percentiles),
        }


@dataclass
class GofReport:
    n_replicates: int
    seed: int
    indices: dict[str, IndexResult]

    def to_dict(self) -> dict:
        return {
            "n_replicates": self.n_replicates,
            "seed": self.seed,
            "indices": {k: v.to_dict() for k, v in self.indices.items()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def index_csv(self, name: str) -> str:
        """``replicate,<bin>...`` rows: ``observed`` first, then replicates 0..L-1."""
        res = self.indices[name]
        lines = [",".join(["replicate", *res.bins])]

        def fmt(row):
            return ",".join("" if not math.isfinite(x) else f"{x:.12g}" for x in row)

        lines.append("observed," + fmt(res.observed))
        for r, row in enumerate(res.simulated):
            lines.append(f"{r}," + fmt(row))
        return "\n".join(lines) + "\n"

    def inside_fraction(self, lo: float = 2.5, hi: float = 97.5) -> float:
        pct = np.concatenate([r.percentiles for r in self.indices.values()])
        pct = pct[np.isfinite(pct)]
        return float(np.mean((pct >= lo) & (pct <= hi))) if len(pct) else math.nan


def _bin_labels(edges) -> list[str]:
    return [f"[{a:.6g},{b:.6g})" for a, b in zip(edges[:-1], edges[1:])]


def _pooled_edges(values: list[np.ndarray], bins: int, quantile: bool):
    pooled = np.concatenate([v for v in values if len(v)]) if any(len(v) for v in values) else np.array([])
    if not len(pooled):
        return None
    if quantile:
        edges = np.unique(np.quantile(pooled, np.linspace(0, 1, bins + 1)))
    else:
        edges = np.unique(np.linspace(pooled.min(), pooled.max(), bins + 1))
    if len(edges) < 2:
        edges = np.array([pooled.min(), pooled.min() + 1.0])
    return edges


def _assemble(spec: FitIndexSpec, obs_raw: np.ndarray, sim_raw: list[np.ndarray]) -> IndexResult:
    kind = spec.kind
    if kind in _DEGREE + _CONTINUOUS and spec.edges is None:
        edges = _pooled_edges([obs_raw, *sim_raw], spec.bins, quantile=kind in _CONTINUOUS)
        if edges is None:
            # No values anywhere (e.g. a filter matching no dyad): empty index.
            return IndexResult(spec, [], np.zeros(0), np.zeros((len(sim_raw), 0)), np.zeros(0))

        def binned(v):
            h = np.histogram(v, bins=edges)[0].astype(float)
            if kind in _CONTINUOUS:
                return h / len(v) if len(v) else np.full(len(h), np.nan)
            return h

        obs = binned(obs_raw)
        sim = np.array([binned(v) for v in sim_raw])
        labels = _bin_labels(edges)
    else:
        obs = np.asarray(obs_raw, dtype=float)
        sim = np.array(sim_raw, dtype=float).reshape(len(sim_raw), -1)
        if kind == "pshift_census":
            labels = list(PSHIFT_LABELS)
        elif kind == "temporal_hop_length_dist":
            labels = [str(k) for k in range(1, len(obs))] + ["unreachable"]
        elif kind in ("modularity", "avg_distinctiveness"):
            labels = ["value"]
        elif spec.edges is not None:
            labels = _bin_labels(spec.edges)
        else:
            labels = [str(k) for k in range(len(obs))]
    return IndexResult(spec, labels, obs, sim, percentile_rank(obs, sim))


def _unique_names(specs: Sequence[FitIndexSpec]) -> list[str]:
    names, seen = [], {}
    for s in specs:
        base = s.label
        k = seen.get(base, 0)
        seen[base] = k + 1
        names.append(base if k == 0 else f"{base}_{k}")
    return names


def gof_run(model: DyadicModel | ActorModel, observed: EventHistory, specs: Sequence[FitIndexSpec],
            L: int, seed: int, riskset: RiskSet | None = None, cov: Covariates | None = None,
            beta=None) -> GofReport:
    """Compare ``observed`` against ``L`` simulated histories.

    ``beta`` (a FitResult or a coefficient vector) replaces the dyadic
    model's coefficients. Replicate ``r`` uses seed ``seed ^ r`` and stops
    after as many events as were observed.
    """
    if L < 1:
        raise ConfigError("L must be at least 1")
    if not len(observed):
        raise ConfigError("observed history is empty")
    if not specs:
        raise ConfigError("no fit indices given")
    if beta is not None:
        if not isinstance(model, DyadicModel):
            raise ConfigError("beta override applies to dyadic models only")
        coef = getattr(beta, "beta_hat", beta)
        model = model.with_params([float(b) for b in coef])
    cov = cov if cov is not None else Covariates()
    engine = simulate_actor if isinstance(model, ActorModel) else simulate_dyadic
    names = _unique_names(specs)
    obs_raw = [compute_index(s, observed, cov) for s in specs]
    sim_raw = [[] for _ in specs]
    for r in range(L):
        cfg = SimConfig(observed.n_actors, riskset, cov, max_events=len(observed),
                        seed=replicate_seed(seed, r))
        try:
            h = engine(model, cfg)
            for k, s in enumerate(specs):
                sim_raw[k].append(compute_index(s, h, cov))
        except RemsimError as exc:
            raise SimulationError(f"replicate {r}: {exc}") from exc
    indices = {name: _assemble(s, o, sr) for name, s, o, sr in zip(names, specs, obs_raw, sim_raw)}
    return GofReport(L, int(seed), indices)
