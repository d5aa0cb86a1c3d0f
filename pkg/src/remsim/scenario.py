"""Intervention experiments on dyadic models.

An intervention temporarily replaces one coefficient, optionally only for
events sent by a selected target group. :func:`run_sweep` simulates a grid
of durations, strengths and targeting strategies with paired seeds and
summarizes each cell by the per-bin median of an outcome proportion, its
peak and how long it stays away from the no-intervention baseline.
"""

from __future__ import annotations

import json
import math
import warnings
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .core import (
    ConfigError, Covariates, DyadicModel, EventHistory, ParamSchedule, SimConfig, make_rng,
)
from .dyadic import simulate_replicates

STRATEGIES = (
    "random", "highest_centrality", "lowest_centrality",
    "highest_intergroup_outdegree", "lowest_intergroup_outdegree", "attribute",
)
BEYOND = "beyond horizon"


def betweenness(adj: np.ndarray) -> np.ndarray:
    """Unnormalized shortest-path betweenness of a directed unweighted graph (Brandes)."""
    adj = np.asarray(adj) != 0
    n = adj.shape[0]
    nbrs = [np.flatnonzero(adj[v]).tolist() for v in range(n)]
    cb = np.zeros(n)
    for s in range(n):
        stack = []
        pred = [[] for _ in range(n)]
        sigma = np.zeros(n)
        sigma[s] = 1.0
        dist = np.full(n, -1)
        dist[s] = 0
        q = deque([s])
        while q:
            v = q.popleft()
            stack.append(v)
            for w in nbrs[v]:
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    q.append(w)
                if dist[w] == dist[v] + 1:
                    sigma[w] += sigma[v]
                    pred[w].append(v)
        delta = np.zeros(n)
        while stack:
            w = stack.pop()
            for v in pred[w]:
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w])
            if w != s:
                cb[w] += delta[w]
    return cb


def intergroup_outdegree(history: EventHistory, group: np.ndarray) -> np.ndarray:
    cross = group[history.senders] != group[history.receivers]
    return np.bincount(history.senders[cross], minlength=history.n_actors).astype(float)


def target_count(fraction: float, n: int) -> int:
    return max(1, math.ceil(fraction * n - 1e-9))


@dataclass(frozen=True)
class TargetSpec:
    """How intervention targets are chosen.

    ``variable`` names the grouping attribute for the inter-group
    strategies and the selecting attribute for ``attribute`` (which takes
    every actor whose value equals ``value`` and ignores ``fraction``).
    """

    strategy: str
    fraction: float = 0.2
    variable: str | None = None
    value: float | None = None

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"unknown targeting strategy {self.strategy!r}")
        if self.strategy != "attribute" and not 0 < self.fraction <= 1:
            raise ConfigError(f"target fraction must lie in (0, 1], got {self.fraction}")
        if "intergroup" in self.strategy and not self.variable:
            raise ConfigError(f"{self.strategy} needs a grouping variable")
        if self.strategy == "attribute" and (self.variable is None or self.value is None):
            raise ConfigError("attribute targeting needs variable and value")

    @property
    def label(self) -> str:
        if self.strategy == "attribute":
            return f"attribute_{self.variable}={self.value:g}"
        return f"{self.strategy}_{self.fraction:g}"


def _top(scores: np.ndarray, k: int, highest: bool) -> frozenset:
    # Round away float noise so exact ties fall back to the index order.
    s = np.round(np.asarray(scores, dtype=float), 9)
    order = np.lexsort((np.arange(len(s)), -s if highest else s))
    return frozenset(int(i) for i in order[:k])


def select_targets(spec: TargetSpec, n_actors: int, pre_history: EventHistory | None = None,
                   cov: Covariates | None = None, rng: np.random.Generator | None = None,
                   t: float = 0.0) -> frozenset:
    strategy = spec.strategy
    cov = cov or Covariates()
    if strategy == "attribute":
        v = cov.actor_values(spec.variable, t)
        chosen = frozenset(int(i) for i in np.flatnonzero(v == spec.value))
        if not chosen:
            raise ConfigError(f"no actor has {spec.variable} = {spec.value}")
        return chosen
    k = target_count(spec.fraction, n_actors)
    if strategy == "random":
        rng = rng if rng is not None else make_rng(0)
        return frozenset(int(i) for i in rng.choice(n_actors, size=k, replace=False))
    if pre_history is None or not len(pre_history):
        raise ConfigError(f"{strategy} targeting needs a nonempty pre-intervention history")
    if "centrality" in strategy:
        adj = pre_history.counts() > 0
        scores = betweenness(adj)
    else:
        group = cov.actor_values(spec.variable, t)
        scores = intergroup_outdegree(pre_history, group)
    return _top(scores, k, strategy.startswith("highest"))


@dataclass(frozen=True)
class InterventionSpec:
    effect_index: int
    pre_value: float
    intervention_value: float
    post_value: float
    start: float
    end: float
    targets: TargetSpec | frozenset | None = None

    def __post_init__(self):
        if not 0 <= self.start < self.end:
            raise ConfigError(f"intervention needs 0 <= start < end, got [{self.start}, {self.end})")
        if isinstance(self.targets, (set, frozenset, list, tuple)):
            object.__setattr__(self, "targets", frozenset(int(a) for a in self.targets))
            if not self.targets:
                raise ConfigError("intervention target set is empty")


def _pieces(pre, mid, post, start, end):
    out = [(0.0, pre)] if start > 0 else []
    return out + [(start, mid), (end, post)]


def apply_intervention(model: DyadicModel, spec: InterventionSpec,
                       targets: frozenset | None = None) -> DyadicModel:
    """Model with ``spec`` applied to coefficient ``spec.effect_index``.

    With targets (from ``spec.targets`` if it is a set, else ``targets``),
    only events sent by targets see the intervention value; other senders
    keep ``pre_value`` until ``end``.
    """
    k = spec.effect_index
    if not 0 <= k < len(model.params):
        raise ConfigError(f"effect index {k} outside the model's {len(model.params)} terms")
    if not model.params[k].is_constant:
        raise ConfigError(f"effect {k} already has a time-varying schedule; compose it explicitly")
    if isinstance(spec.targets, frozenset):
        targets = spec.targets
    elif spec.targets is not None and targets is None:
        raise ConfigError("targeting strategy given; select targets first and pass them in")
    full = _pieces(spec.pre_value, spec.intervention_value, spec.post_value, spec.start, spec.end)
    if targets is None:
        sched = ParamSchedule(full)
    else:
        if not targets:
            raise ConfigError("intervention target set is empty")
        sched = ParamSchedule([(0.0, spec.pre_value), (spec.end, spec.post_value)],
                              group_split=(targets, full))
    params = list(model.params)
    params[k] = sched
    return model.with_params(params)


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------


def heterophily_outcome(variable: str, cov: Covariates) -> Callable[[EventHistory], np.ndarray]:
    """Events whose sender and receiver differ on ``variable``."""

    def outcome(h: EventHistory) -> np.ndarray:
        out = np.empty(len(h), dtype=bool)
        for k, (t, i, j) in enumerate(h):
            v = cov.actor_values(variable, t)
            out[k] = v[i] != v[j]
        return out

    return outcome


def binned_proportion(history: EventHistory, qualifies: np.ndarray, edges: np.ndarray) -> np.ndarray:
    """Proportion of qualifying events per bin; NaN where a bin has no events."""
    total = np.histogram(history.times, bins=edges)[0]
    hit = np.histogram(history.times[np.asarray(qualifies, dtype=bool)], bins=edges)[0]
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(total > 0, hit / np.maximum(total, 1), np.nan)


def _nanmedian(a, axis=0):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return np.nanmedian(a, axis=axis)


def _centered_mean(x: np.ndarray, width: int) -> np.ndarray:
    if width <= 1:
        return x
    half = width // 2
    out = np.full(len(x), np.nan)
    for b in range(len(x)):
        seg = x[max(0, b - half):b + width - half]
        seg = seg[np.isfinite(seg)]
        if len(seg):
            out[b] = seg.mean()
    return out


def persistence(median: np.ndarray, base_median: np.ndarray, base_mad: np.ndarray,
                edges: np.ndarray, end: float, tolerance: float = 1.0, smooth: int = 1):
    """Time from ``end`` until the series re-enters the baseline band for good.

    The band is ``|median - base_median| <= tolerance * base_mad`` per bin,
    where the difference is first averaged over a centered window of
    ``smooth`` bins. Returns the start of the first post-intervention bin
    from which every later observed bin is inside the band, minus ``end``;
    ``BEYOND`` if the last observed bin is outside.
    """
    starts = edges[:-1]
    diff = _centered_mean(median - base_median, int(smooth))
    ok = np.abs(diff) <= tolerance * base_mad
    valid = np.isfinite(diff) & np.isfinite(base_mad)
    post = np.flatnonzero(starts >= end)
    if not len(post):
        return BEYOND
    first = None
    for b in post[::-1]:
        if not valid[b]:
            continue
        if not ok[b]:
            break
        first = b
    return BEYOND if first is None else float(starts[first] - end)


@dataclass(frozen=True)
class SweepGrid:
    durations: tuple[float, ...]
    strengths: tuple[float, ...]
    strategies: tuple[TargetSpec | None, ...] = (None,)

    def __post_init__(self):
        for name in ("durations", "strengths", "strategies"):
            vals = tuple(getattr(self, name))
            if not vals:
                raise ConfigError(f"sweep grid has no {name}")
            object.__setattr__(self, name, vals)
        if any(d <= 0 for d in self.durations):
            raise ConfigError("durations must be positive")


@dataclass
class CellResult:
    duration: float | None
    strength: float | None
    strategy: str
    targets: tuple[int, ...] | None
    series: np.ndarray  # reps x bins
    median: np.ndarray
    peak: float
    persistence: float | str

    def summary(self) -> dict:
        return {
            "duration": self.duration,
            "strength": self.strength,
            "strategy": self.strategy,
            "targets": list(self.targets) if self.targets is not None else None,
            "peak": self.peak if math.isfinite(self.peak) else None,
            "persistence_days": self.persistence,
        }


@dataclass
class SweepResult:
    edges: np.ndarray
    start: float
    baseline: CellResult
    cells: list[CellResult] = field(default_factory=list)
    seed: int = 0
    reps: int = 0
    baseline_reps: int = 0

    def cell(self, duration, strength, strategy="all") -> CellResult:
        for c in self.cells:
            if c.duration == duration and c.strength == strength and c.strategy == strategy:
                return c
        raise KeyError((duration, strength, strategy))

    def to_csv(self) -> str:
        lines = ["duration,strength,strategy,bin_start,bin_end,median,baseline_median,n_valid"]

        def num(x):
            return "" if x is None or not math.isfinite(x) else f"{x:.12g}"

        for c in [self.baseline, *self.cells]:
            valid = np.isfinite(c.series).sum(axis=0)
            for b in range(len(self.edges) - 1):
                lines.append(",".join([
                    num(c.duration), num(c.strength), c.strategy,
                    num(self.edges[b]), num(self.edges[b + 1]),
                    num(c.median[b]), num(self.baseline.median[b]), str(int(valid[b])),
                ]))
        return "\n".join(lines) + "\n"

    def summary(self) -> dict:
        return {
            "seed": self.seed,
            "reps": self.reps,
            "baseline_reps": self.baseline_reps,
            "start": self.start,
            "bin_width": float(self.edges[1] - self.edges[0]),
            "horizon": float(self.edges[-1]),
            "baseline": self.baseline.summary(),
            "cells": [c.summary() for c in self.cells],
        }

    def summary_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True) + "\n"


def run_sweep(base_model: DyadicModel, config: SimConfig, grid: SweepGrid, reps: int,
              bin_width: float, outcome: Callable[[EventHistory], np.ndarray], seed: int,
              effect_index: int, start: float, tolerance: float = 1.0,
              smooth: int = 1, n_jobs: int = 1, baseline_reps: int | None = None) -> SweepResult:
    """Simulate every grid cell plus a no-intervention baseline.

    Intervention value is the cell's strength, pre and post values are the
    base model's coefficient. Replicate ``r`` of every cell uses seed
    ``seed ^ r``, so cells are compared on paired random streams. The time
    axis is cut into bins of ``bin_width`` from 0 to ``config.max_time``;
    ``tolerance`` and ``smooth`` configure :func:`persistence`.

    ``baseline_reps`` (default ``reps``) sets how many no-intervention
    histories form the reference median and MAD. Every cell is compared
    against the same reference, so its noise shifts all persistence values
    together; a larger reference sample damps that. Baseline replicates
    ``0..reps-1`` share seeds with the cells.
    """
    if reps < 1:
        raise ConfigError("reps must be at least 1")
    baseline_reps = reps if baseline_reps is None else int(baseline_reps)
    if baseline_reps < 1:
        raise ConfigError("baseline_reps must be at least 1")
    if not bin_width > 0:
        raise ConfigError("bin_width must be positive")
    if config.max_time is None or not math.isfinite(config.max_time):
        raise ConfigError("sweeps need a finite max_time horizon")
    base_value = base_model.params[effect_index]
    if not base_value.is_constant:
        raise ConfigError(f"effect {effect_index} already has a time-varying schedule")
    base_value = base_value.default_at(0.0)
    # Whole bins only: a short trailing bin would carry few events and add noise.
    edges = np.arange(int(math.floor(config.max_time / bin_width + 1e-9)) + 1) * float(bin_width)
    if len(edges) < 2:
        raise ConfigError("horizon shorter than one bin")
    cfg = SimConfig(config.n_actors, config.riskset, config.covariates, config.max_events,
                    config.max_time, seed, config.initial_history)
    pre = config.initial_history

    def run_cell(model, count=reps):
        hs = simulate_replicates(model, cfg, count, n_jobs=n_jobs)
        series = np.array([binned_proportion(h, outcome(h), edges) for h in hs])
        return series, _nanmedian(series, axis=0)

    b_series, b_med = run_cell(base_model, baseline_reps)
    b_mad = _nanmedian(np.abs(b_series - b_med[None, :]), axis=0)
    b_peak = float(np.nanmax(b_med)) if np.isfinite(b_med).any() else math.nan
    baseline = CellResult(None, None, "baseline", None, b_series, b_med, b_peak, BEYOND)
    result = SweepResult(edges, float(start), baseline, seed=int(seed), reps=int(reps),
                         baseline_reps=baseline_reps)

    target_cache: dict = {}
    for strategy in grid.strategies:
        if strategy is None:
            targets, label = None, "all"
        else:
            if strategy not in target_cache:
                target_cache[strategy] = select_targets(
                    strategy, config.n_actors, pre, config.covariates, make_rng(seed), t=start)
            targets, label = target_cache[strategy], strategy.label
        for duration in grid.durations:
            end = start + duration
            for strength in grid.strengths:
                spec = InterventionSpec(effect_index, base_value, strength, base_value, start, end)
                model = apply_intervention(base_model, spec, targets)
                series, med = run_cell(model)
                window = edges[:-1] >= start
                peak = float(np.nanmax(med[window])) if np.isfinite(med[window]).any() else math.nan
                pers = persistence(med, b_med, b_mad, edges, end, tolerance, smooth)
                result.cells.append(CellResult(
                    float(duration), float(strength), label,
                    tuple(sorted(targets)) if targets is not None else None,
                    series, med, peak, pers))
    return result
