"""CSV readers and writers, atomic output, and the YAML run configuration.

File formats
------------
events          ``time,sender,receiver``; labels as in the actor list.
actor covariates ``id,time,<var>...``; several rows per id form a step
                function. An empty cell keeps the previous value. A column
                holding any non-numeric entry is categorical; its levels are
                sorted and coded 0, 1, ...
dyad covariates ``sender,receiver,<var>...``; missing dyads are undefined.
"""

from __future__ import annotations

import csv
import math
import os
import tempfile
from pathlib import Path
from typing import Any, Literal, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .core import (
    ActorCovariates, ActorIndex, ActorModel, ConfigError, Covariates, DyadCovariates, DyadicModel,
    EffectSpec, EventHistory, HistoryError, MemorySpec, ParamSchedule, RiskSet, SimConfig,
)
from .gof import FitIndexSpec
from .scenario import SweepGrid, TargetSpec
from .stats import DistinctSpec

TIME_FORMAT = ".12g"


def format_time(t: float) -> str:
    return format(float(t), TIME_FORMAT)


def atomic_write(path: str | Path, text: str) -> None:
    """Write via a temp file in the same directory and rename into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _rows(path: str | Path, header: list[str] | None = None):
    """Yield (line number, row) after checking the header; line 1 is the header."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"{path}: file not found")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            head = next(reader)
        except StopIteration:
            raise ConfigError(f"{path}: empty file (missing header)") from None
        head = [h.strip() for h in head]
        if header is not None and head[:len(header)] != header:
            raise ConfigError(f"{path}: header must start with {','.join(header)}, got {','.join(head)}")
        yield 1, head
        for row in reader:
            if not row or all(not c.strip() for c in row):
                continue
            yield reader.line_num, [c.strip() for c in row]


def _float(path, line, text, what):
    try:
        v = float(text)
    except ValueError:
        raise ConfigError(f"{path}:{line}: {what} {text!r} is not a number") from None
    if not math.isfinite(v):
        raise ConfigError(f"{path}:{line}: {what} must be finite")
    return v


def read_events(path: str | Path, actors: ActorIndex) -> EventHistory:
    times, senders, receivers = [], [], []
    rows = _rows(path, ["time", "sender", "receiver"])
    next(rows)
    prev = None
    for line, row in rows:
        if len(row) < 3:
            raise ConfigError(f"{path}:{line}: expected 3 fields, got {len(row)}")
        t = _float(path, line, row[0], "time")
        if t < 0:
            raise ConfigError(f"{path}:{line}: negative time")
        if prev is not None and t <= prev:
            what = "duplicate timestamp" if t == prev else "rows not sorted by time"
            raise ConfigError(f"{path}:{line}: {what} ({row[0]})")
        try:
            s, r = actors.index(row[1]), actors.index(row[2])
        except ConfigError as e:
            raise ConfigError(f"{path}:{line}: {e}") from None
        if s == r:
            raise ConfigError(f"{path}:{line}: self-loop on {row[1]!r}")
        prev = t
        times.append(t)
        senders.append(s)
        receivers.append(r)
    return EventHistory(times, senders, receivers, len(actors))


def events_csv(history: EventHistory, actors: ActorIndex) -> str:
    lines = ["time,sender,receiver"]
    for e in history:
        lines.append(f"{format_time(e.time)},{actors.label(e.sender)},{actors.label(e.receiver)}")
    return "\n".join(lines) + "\n"


def write_events(path: str | Path, history: EventHistory, actors: ActorIndex) -> None:
    atomic_write(path, events_csv(history, actors))


def read_actor_covariates(path: str | Path, actors: ActorIndex) -> ActorCovariates:
    rows = _rows(path, ["id", "time"])
    _, head = next(rows)
    variables = head[2:]
    if not variables:
        raise ConfigError(f"{path}: no covariate columns")
    raw: list[tuple[int, int, float, list[str]]] = []
    for line, row in rows:
        if len(row) != len(head):
            raise ConfigError(f"{path}:{line}: expected {len(head)} fields, got {len(row)}")
        if row[0] not in actors:
            raise ConfigError(f"{path}:{line}: id {row[0]!r} is not in the actor set")
        raw.append((line, actors.index(row[0]), _float(path, line, row[1], "time"), row[2:]))
    levels = {}
    for k, var in enumerate(variables):
        vals = [r[3][k] for r in raw if r[3][k] != ""]
        try:
            for v in vals:
                float(v)
        except ValueError:
            levels[var] = sorted(set(vals))
    series: dict[str, dict[int, list]] = {v: {} for v in variables}
    for line, a, t, cells in sorted(raw, key=lambda r: (r[1], r[2], r[0])):
        for k, var in enumerate(variables):
            c = cells[k]
            if c == "":
                continue
            val = float(levels[var].index(c)) if var in levels else _float(path, line, c, var)
            pts = series[var].setdefault(a, [])
            if pts and pts[-1][0] == t:
                raise ConfigError(f"{path}:{line}: duplicate time {t:g} for id {actors.label(a)!r}, {var}")
            pts.append((t, val))
    for var in variables:
        for a in range(len(actors)):
            pts = series[var].get(a)
            if not pts or pts[0][0] > 0:
                raise ConfigError(f"{path}: {var} has no value at or before t=0 for id {actors.label(a)!r}")
    return ActorCovariates(len(actors), series, levels)


def actor_covariates_csv(cov: ActorCovariates, actors: ActorIndex) -> str:
    variables = list(cov.variables)
    times = sorted({t for var in variables for pts in cov.series[var].values() for t, _ in pts})
    lines = [",".join(["id", "time", *variables])]
    for a in range(len(actors)):
        for t in times:
            cells = []
            for var in variables:
                hit = [v for tt, v in cov.series[var][a] if tt == t]
                if not hit:
                    cells.append("")
                elif var in cov.levels:
                    cells.append(cov.levels[var][int(hit[0])])
                else:
                    cells.append(format(hit[0], ".12g"))
            if any(cells):
                lines.append(",".join([actors.label(a), format_time(t), *cells]))
    return "\n".join(lines) + "\n"


def read_dyad_covariates(path: str | Path, actors: ActorIndex) -> DyadCovariates:
    rows = _rows(path, ["sender", "receiver"])
    _, head = next(rows)
    variables = head[2:]
    n = len(actors)
    mats = {v: np.full((n, n), np.nan) for v in variables}
    for line, row in rows:
        if len(row) != len(head):
            raise ConfigError(f"{path}:{line}: expected {len(head)} fields, got {len(row)}")
        try:
            s, r = actors.index(row[0]), actors.index(row[1])
        except ConfigError as e:
            raise ConfigError(f"{path}:{line}: {e}") from None
        for k, var in enumerate(variables):
            if row[2 + k] != "":
                mats[var][s, r] = _float(path, line, row[2 + k], var)
    return DyadCovariates(n, mats)


def dyad_covariates_csv(cov: DyadCovariates, actors: ActorIndex) -> str:
    variables = list(cov.variables)
    lines = [",".join(["sender", "receiver", *variables])]
    n = len(actors)
    for s in range(n):
        for r in range(n):
            vals = [cov.matrix(v)[s, r] for v in variables]
            if all(math.isnan(v) for v in vals):
                continue
            cells = ["" if math.isnan(v) else format(v, ".12g") for v in vals]
            lines.append(",".join([actors.label(s), actors.label(r), *cells]))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Configuration schema
# ---------------------------------------------------------------------------


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class MemoryConfig(_Strict):
    kind: Literal["full", "exponential", "window"] = "full"
    value: float | None = None


Pieces = list[tuple[float, float]]


class GroupSplitConfig(_Strict):
    targets: list[str]
    pieces: Pieces


class EffectConfig(_Strict):
    kind: str
    variable: str | None = None
    scaling: Literal["none", "std", "prop"] = "none"
    memory: MemoryConfig = Field(default_factory=MemoryConfig)
    interact_with: tuple[int, int] | None = None
    d_star: float | list[float] | None = None
    param: Union[float, Pieces] = 0.0
    group_split: GroupSplitConfig | None = None

    def effect(self) -> EffectSpec:
        ds = tuple(self.d_star) if isinstance(self.d_star, list) else self.d_star
        return EffectSpec(self.kind, self.variable, MemorySpec(self.memory.kind, self.memory.value),
                          self.scaling, self.interact_with, ds)

    def schedule(self, actors: ActorIndex) -> ParamSchedule:
        pieces = [(0.0, self.param)] if isinstance(self.param, (int, float)) else self.param
        split = None
        if self.group_split is not None:
            split = ([actors.index(a) for a in self.group_split.targets], self.group_split.pieces)
        return ParamSchedule(pieces, split)


class ModelConfig(_Strict):
    family: Literal["dyadic", "actor"] = "dyadic"
    effects: list[EffectConfig] = Field(default_factory=list)
    rate_effects: list[EffectConfig] = Field(default_factory=list)
    choice_effects: list[EffectConfig] = Field(default_factory=list)

    @model_validator(mode="after")
    def _family_terms(self):
        if self.family == "dyadic":
            if not self.effects or self.rate_effects or self.choice_effects:
                raise ValueError("dyadic models take 'effects' only")
        elif self.effects or not self.rate_effects or not self.choice_effects:
            raise ValueError("actor models take 'rate_effects' and 'choice_effects'")
        return self


class ActorsConfig(_Strict):
    labels: list[str] | None = None
    count: int | None = None

    @model_validator(mode="after")
    def _one(self):
        if (self.labels is None) == (self.count is None):
            raise ValueError("give exactly one of actors.labels or actors.count")
        return self

    def index(self) -> ActorIndex:
        return ActorIndex(self.labels) if self.labels is not None else ActorIndex.range(self.count)


class RiskPieceConfig(_Strict):
    from_time: float
    exclude: list[tuple[str, str]] = Field(default_factory=list)
    include: list[tuple[str, str]] | None = None


class RiskSetConfig(_Strict):
    exclude: list[tuple[str, str]] = Field(default_factory=list)
    include: list[tuple[str, str]] | None = None
    schedule: list[RiskPieceConfig] = Field(default_factory=list)


class StopConfig(_Strict):
    max_events: int | None = None
    max_time: float | None = None


class CovariatesConfig(_Strict):
    actor: str | None = None
    dyad: str | None = None


class IndexConfig(_Strict):
    kind: str
    variable: str | None = None
    edges: list[float] | None = None
    bins: int = 10
    dyad_filter: tuple[str, float] | None = None
    partition: str | None = None
    d_star: float | None = None
    name: str | None = None

    def spec(self) -> FitIndexSpec:
        distinct = None
        if self.kind == "avg_distinctiveness":
            if self.variable is None or self.d_star is None:
                raise ConfigError("avg_distinctiveness needs variable and d_star")
            distinct = DistinctSpec(self.variable, self.d_star)
        variable = None if self.kind == "avg_distinctiveness" else self.variable
        return FitIndexSpec(self.kind, variable, tuple(self.edges) if self.edges else None, self.bins,
                            self.dyad_filter, self.partition, distinct, self.name)


class GofConfig(_Strict):
    observed: str | None = None
    replicates: int = 100
    beta: Literal["estimate", "model"] = "estimate"
    indices: list[IndexConfig]


class StrategyConfig(_Strict):
    strategy: str
    fraction: float = 0.2
    variable: str | None = None
    value: Union[float, str, None] = None


class InterventionConfig(_Strict):
    effect_index: int
    start: float
    durations: list[float]
    strengths: list[float]
    strategies: list[Union[Literal["all"], StrategyConfig]] = Field(default_factory=lambda: ["all"])
    bin_width: float
    outcome_variable: str
    tolerance: float = 1.0
    smooth: int = 1
    baseline_reps: int | None = None


class EstimateConfig(_Strict):
    observed: str | None = None
    max_iter: int = 100
    grad_tol: float = 1e-6


class ScenarioConfig(_Strict):
    actors: ActorsConfig
    covariates: CovariatesConfig = Field(default_factory=CovariatesConfig)
    riskset: RiskSetConfig = Field(default_factory=RiskSetConfig)
    model: ModelConfig
    stop: StopConfig = Field(default_factory=StopConfig)
    seed: int = 0
    reps: int = 1
    initial_history: str | None = None
    observed: str | None = None
    estimate: EstimateConfig = Field(default_factory=EstimateConfig)
    gof: GofConfig | None = None
    intervention: InterventionConfig | None = None
    output: str = "."

    @field_validator("seed")
    @classmethod
    def _seed(cls, v):
        if not 0 <= v < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        return v

    @field_validator("reps")
    @classmethod
    def _reps(cls, v):
        if v < 1:
            raise ValueError("reps must be at least 1")
        return v


class Scenario:
    """A validated configuration with every referenced file loaded."""

    def __init__(self, cfg: ScenarioConfig, base_dir: Path):
        self.cfg = cfg
        self.base_dir = base_dir
        self.actors = cfg.actors.index()
        n = len(self.actors)
        actor_cov = read_actor_covariates(self.path(cfg.covariates.actor), self.actors) \
            if cfg.covariates.actor else None
        dyad_cov = read_dyad_covariates(self.path(cfg.covariates.dyad), self.actors) \
            if cfg.covariates.dyad else None
        self.covariates = Covariates(actor_cov, dyad_cov)
        self.riskset = self._riskset(cfg.riskset)
        self.model = self._model(cfg.model)
        self.initial_history = read_events(self.path(cfg.initial_history), self.actors) \
            if cfg.initial_history else None
        for e in self._all_effects():
            if e.kind == "dyad" and dyad_cov is not None:
                dyad_cov.check_defined(e.variable, self.riskset)
        self.n_actors = n

    def path(self, p: str) -> Path:
        q = Path(p)
        return q if q.is_absolute() else self.base_dir / q

    def _pairs(self, pairs):
        return [(self.actors.index(a), self.actors.index(b)) for a, b in pairs]

    def _riskset(self, rc: RiskSetConfig) -> RiskSet:
        n = len(self.actors)
        full = {(i, j) for i in range(n) for j in range(n) if i != j}

        def build(include, exclude):
            base = set(self._pairs(include)) if include is not None else set(full)
            return base - set(self._pairs(exclude))

        schedule = [(p.from_time, build(p.include, p.exclude)) for p in rc.schedule]
        return RiskSet(n, build(rc.include, rc.exclude), schedule)

    def _model(self, mc: ModelConfig):
        if mc.family == "dyadic":
            return DyadicModel([e.effect() for e in mc.effects], [e.schedule(self.actors) for e in mc.effects])
        return ActorModel([e.effect() for e in mc.rate_effects], [e.schedule(self.actors) for e in mc.rate_effects],
                          [e.effect() for e in mc.choice_effects],
                          [e.schedule(self.actors) for e in mc.choice_effects])

    def _all_effects(self):
        m = self.model
        return m.effects if isinstance(m, DyadicModel) else m.rate_effects + m.choice_effects

    def sim_config(self, seed: int | None = None) -> SimConfig:
        st = self.cfg.stop
        return SimConfig(len(self.actors), self.riskset, self.covariates, st.max_events, st.max_time,
                         self.cfg.seed if seed is None else seed, self.initial_history)

    def observed(self, override: str | None = None) -> EventHistory:
        p = override or self.cfg.observed
        if not p:
            raise ConfigError("no observed history configured ('observed:')")
        return read_events(self.path(p), self.actors)

    def gof_specs(self) -> list[FitIndexSpec]:
        if self.cfg.gof is None:
            raise ConfigError("config has no 'gof' section")
        return [ic.spec() for ic in self.cfg.gof.indices]

    def sweep_grid(self) -> SweepGrid:
        ic = self.cfg.intervention
        if ic is None:
            raise ConfigError("config has no 'intervention' section")
        strategies = []
        for s in ic.strategies:
            if s == "all":
                strategies.append(None)
                continue
            value = s.value
            if isinstance(value, str):
                levels = self.covariates.actor.levels.get(s.variable, ()) if self.covariates.actor else ()
                if value not in levels:
                    raise ConfigError(f"unknown level {value!r} for {s.variable}")
                value = float(levels.index(value))
            strategies.append(TargetSpec(s.strategy, s.fraction, s.variable, value))
        return SweepGrid(tuple(ic.durations), tuple(ic.strengths), tuple(strategies))


def _format_validation(err: ValidationError) -> str:
    parts = []
    for e in err.errors():
        loc = ".".join(str(x) for x in e["loc"])
        parts.append(f"{loc}: {e['msg']}" if loc else e["msg"])
    return "; ".join(parts)


def load_config(path: str | Path) -> Scenario:
    """Parse, validate and load a YAML configuration (paths relative to it)."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"{path}: config file not found")
    try:
        data: Any = yaml.safe_load(path.read_text())
    except yaml.YAMLError as e:
        raise ConfigError(f"{path}: invalid YAML: {e}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    try:
        cfg = ScenarioConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"{path}: {_format_validation(e)}") from None
    try:
        return Scenario(cfg, path.parent)
    except HistoryError as e:
        raise ConfigError(str(e)) from None
