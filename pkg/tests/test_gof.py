import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from remsim.core import (
    ActorCovariates, Covariates, DyadCovariates, DyadicModel, EffectSpec, EventHistory,
    RiskSet, SimConfig, SimulationError,
)
from remsim.dyadic import simulate_dyadic
from remsim.gof import (
    PSHIFT_LABELS, FitIndexSpec, avg_distinctiveness, category_density, compute_index,
    degree_counts, gof_run, hop_histogram, interevent_times, modularity, percentile_rank,
    pshift_census, reciprocation_times, temporal_hops,
)
from remsim.stats import DistinctSpec

BASE = EffectSpec("baseline")


def random_hist(seed, n=5, m=40):
    rng = np.random.default_rng(seed)
    return EventHistory.from_events(oracles.random_history(rng, n, m), n)


def test_single_community_modularity_zero():
    h = random_hist(0)
    assert modularity(h, np.zeros(5)) == pytest.approx(0.0, abs=1e-15)


def test_two_hop_path_and_order():
    h = EventHistory([1.0, 2.0], [0, 1], [1, 2], 3)
    assert temporal_hops(h)[0, 2] == 2
    swapped = EventHistory([1.0, 2.0], [1, 0], [2, 1], 3)
    assert temporal_hops(swapped)[0, 2] == 0  # unreachable
    hist = hop_histogram(swapped)
    assert hist[-1] == 4  # 0->2, 1->0, 2->0, 2->1


def test_reciprocation_census_example():
    h = EventHistory([1.0, 2.0], [0, 1], [1, 0], 2)
    c = pshift_census(h)
    assert c[PSHIFT_LABELS.index("AB-BA")] == 1 and c.sum() == 1
    assert list(reciprocation_times(h)) == [1.0]


def test_census_totals():
    h = random_hist(3, m=200)
    c = pshift_census(h)
    assert c.sum() == len(h) - 1
    repeats = np.sum((h.senders[1:] == h.senders[:-1]) & (h.receivers[1:] == h.receivers[:-1]))
    assert c[:-1].sum() <= len(h) - 1 - repeats


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(3, 7), st.integers(1, 60))
def test_hops_match_oracle(seed, n, m):
    h = random_hist(seed, n, m)
    got = temporal_hops(h)
    want = oracles.temporal_hops(list(h), n)
    counts = h.counts()
    for s in range(n):
        for v in range(n):
            if s == v:
                continue
            assert got[s, v] == want.get((s, v), 0)
            if got[s, v]:
                assert 1 <= got[s, v] <= len(h)
                assert (got[s, v] == 1) == (counts[s, v] > 0)


@given(st.integers(0, 10**6), st.lists(st.integers(0, 3), min_size=6, max_size=6))
def test_modularity_range_and_relabel(seed, labels):
    h = random_hist(seed, n=6, m=50)
    part = np.array(labels)
    q = modularity(h, part)
    assert -0.5 <= q <= 1.0
    perm = np.array([3, 0, 2, 1])
    assert modularity(h, perm[part]) == pytest.approx(q, abs=1e-14)


def test_degree_histograms_sum_to_events():
    h = random_hist(5, n=6, m=77)
    assert degree_counts(h, True).sum() == 77 and degree_counts(h, False).sum() == 77
    spec = FitIndexSpec("outdegree_dist", edges=(0, 5, 10, 20, 100))
    assert compute_index(spec, h).sum() == 6


def test_interevent_and_filter():
    h = EventHistory([1.0, 2.0, 4.0, 7.0], [0, 1, 0, 1], [1, 0, 1, 0], 3)
    assert list(interevent_times(h)) == [3.0, 5.0]
    mask = np.zeros((3, 3), dtype=bool)
    mask[0, 1] = True
    assert list(interevent_times(h, mask)) == [3.0]
    assert list(reciprocation_times(h, mask)) == [1.0, 3.0]
    # a filter matching nothing gives an empty vector
    empty = FitIndexSpec("interevent_time_dist", dyad_filter=("rival", 1.0))
    cov = Covariates(dyad=DyadCovariates(3, {"rival": np.zeros((3, 3))}))
    assert len(compute_index(empty, h, cov)) == 0


def test_category_density_and_distinctiveness():
    z = [0.0, 0.0, 1.0]
    cov = Covariates(ActorCovariates.constant({"z": z}))
    h = EventHistory([1.0, 2.0, 3.0], [0, 0, 2], [1, 2, 0], 3)
    assert list(category_density(h, "z", cov)) == [1, 1, 1, 0]
    # d_0 = 2/3, d_1 = 0, d_2 = 1
    assert avg_distinctiveness(h, DistinctSpec("z", 0.5), cov) == pytest.approx((2 / 3 + 0 + 1) / 3)


def test_percentile_midpoint():
    sim = np.array([[1.0], [2.0], [2.0], [3.0]])
    assert percentile_rank(np.array([2.0]), sim)[0] == 50.0
    assert percentile_rank(np.array([0.0]), sim)[0] == 0.0
    assert percentile_rank(np.array([5.0]), sim)[0] == 100.0
    p = percentile_rank(np.array([1.0, 2.0]), np.array([[np.nan, 1.0], [0.0, 3.0]]))
    assert p[0] == 100.0 and p[1] == 50.0


def test_index_spec_validation():
    for bad in (dict(kind="nope"), dict(kind="modularity"), dict(kind="event_density_by_dyad_bin", variable="d"),
                dict(kind="avg_distinctiveness"), dict(kind="outdegree_dist", edges=(2, 1))):
        with pytest.raises(ValueError):
            FitIndexSpec(**bad)


def near_deterministic():
    rs = RiskSet(2, base=[(0, 1), (1, 0)])
    d = np.zeros((2, 2))
    d[0, 1] = 1.0
    cov = Covariates(dyad=DyadCovariates(2, {"d": d}))
    model = DyadicModel([BASE, EffectSpec("dyad", variable="d")], [0.0, 30.0])
    return model, rs, cov


def test_l1_near_deterministic_in_range():
    model, rs, cov = near_deterministic()
    obs = simulate_dyadic(model, SimConfig(2, riskset=rs, covariates=cov, max_events=30, seed=9))
    specs = [FitIndexSpec("outdegree_dist", edges=(0, 2, 31))]
    rep = gof_run(model, obs, specs, 1, seed=3, riskset=rs, cov=cov)
    for res in rep.indices.values():
        assert np.all(res.percentiles[np.isfinite(res.percentiles)] == 50.0)


def test_gof_run_reproducible_and_serializable():
    model = DyadicModel([BASE, EffectSpec("inertia", scaling="std")], [-1.0, 0.3])
    obs = simulate_dyadic(model, SimConfig(5, max_events=150, seed=2))
    specs = [FitIndexSpec("outdegree_dist"), FitIndexSpec("pshift_census"),
             FitIndexSpec("temporal_hop_length_dist"), FitIndexSpec("interevent_time_dist"),
             FitIndexSpec("modularity", partition=(0, 0, 1, 1, 1))]
    a = gof_run(model, obs, specs, 8, seed=77)
    b = gof_run(model, obs, specs, 8, seed=77)
    assert a.to_json() == b.to_json()
    doc = json.loads(a.to_json())
    assert doc["n_replicates"] == 8
    for name, res in a.indices.items():
        assert res.simulated.shape == (8, len(res.bins))
        pct = res.percentiles[np.isfinite(res.percentiles)]
        assert np.all((pct >= 0) & (pct <= 100))
        assert a.index_csv(name).count("\n") == 10


def test_replicate_errors_carry_id():
    model = DyadicModel([BASE], [0.0])
    obs = EventHistory([1.0, 2.0, 3.0], [0, 1, 2], [1, 2, 0], 3)
    rs = RiskSet(3, schedule=[(1e-6, [])])
    with pytest.raises(SimulationError, match="replicate 0"):
        gof_run(model, obs, [FitIndexSpec("pshift_census")], 2, seed=1, riskset=rs)
