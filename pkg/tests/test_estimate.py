import json
import math

import numpy as np
import pytest

import oracles
from remsim.core import (
    ActorCovariates, Covariates, DyadicModel, EffectSpec, EventHistory, HistoryError,
    MemorySpec, RiskSet, SimConfig,
)
from remsim.dyadic import simulate_dyadic, simulate_replicates
from remsim.estimate import loglik, mle, score, trajectory

BASE = EffectSpec("baseline")


def test_loglik_closed_form():
    h = EventHistory([0.5, 1.0], [0, 1], [1, 2], 3)
    assert loglik([BASE], [0.0], h, RiskSet.full(3)) == pytest.approx(-6.0, abs=1e-14)


def test_baseline_mle_closed_form():
    h = simulate_dyadic(DyadicModel([BASE], [-1.3]), SimConfig(4, max_events=700, seed=12))
    fit = mle([BASE], h, RiskSet.full(4))
    closed = math.log(len(h) / (12 * h.end_time))
    assert fit.converged
    assert fit.beta_hat[0] == pytest.approx(closed, abs=1e-8)
    assert fit.loglik == pytest.approx(loglik([BASE], [closed], h, RiskSet.full(4)), abs=1e-8)


def fixture(seed, n=4, m=60):
    rng = np.random.default_rng(seed)
    events = oracles.random_history(rng, n, m)
    h = EventHistory.from_events(events, n)
    cov = Covariates(ActorCovariates.constant({"age": rng.normal(size=n)}))
    eff = [BASE, EffectSpec("inertia", scaling="std"), EffectSpec("reciprocity", memory=MemorySpec.exponential(2.0)),
           EffectSpec("send", variable="age"), EffectSpec("psABBA")]
    beta = rng.normal(scale=0.3, size=len(eff))
    beta[0] = -1.0
    return eff, beta, h, cov


@pytest.mark.parametrize("seed", range(5))
def test_gradient_and_hessian_match_finite_differences(seed):
    eff, beta, h, cov = fixture(seed)
    rs = RiskSet.full(4)
    _, g, H = score(eff, beta, h, rs, cov)
    step = 1e-5
    fd = np.empty_like(beta)
    fdH = np.empty((len(beta), len(beta)))
    for k in range(len(beta)):
        e = np.zeros_like(beta)
        e[k] = step
        fd[k] = (loglik(eff, beta + e, h, rs, cov) - loglik(eff, beta - e, h, rs, cov)) / (2 * step)
        fdH[:, k] = (score(eff, beta + e, h, rs, cov)[1] - score(eff, beta - e, h, rs, cov)[1]) / (2 * step)
    assert np.max(np.abs(fd - g)) / max(np.max(np.abs(g)), 1.0) < 1e-6
    assert np.allclose(H, fdH, rtol=1e-5, atol=1e-5)


def test_newton_converges_and_never_decreases():
    eff, _, h, cov = fixture(3, n=5, m=300)
    fit = mle(eff, h, RiskSet.full(5), cov)
    assert fit.converged
    assert np.all(np.diff(fit.trace) >= 0)
    _, g, _ = score(eff, fit.beta_hat, h, RiskSet.full(5), cov)
    assert np.max(np.abs(g)) < 1e-6
    assert np.all(np.isfinite(fit.std_errors)) and math.isfinite(fit.loglik)
    json.dumps(fit.to_dict())


def test_collinear_design_reports_singular():
    h = simulate_dyadic(DyadicModel([BASE], [0.0]), SimConfig(3, max_events=50, seed=1))
    fit = mle([BASE, EffectSpec("inertia"), EffectSpec("inertia")], h, RiskSet.full(3))
    assert not fit.converged and "singular" in fit.message
    assert np.all(np.isnan(fit.std_errors))


def test_iteration_cap():
    eff, _, h, cov = fixture(4, n=5, m=300)
    fit = mle(eff, h, RiskSet.full(5), cov, max_iter=1, initial=np.full(len(eff), 0.5))
    assert not fit.converged and fit.iterations == 1


def test_history_outside_riskset_rejected():
    h = EventHistory([1.0], [0], [1], 3)
    with pytest.raises(HistoryError, match="not in the risk set"):
        trajectory([BASE], h, RiskSet.excluding(3, [(0, 1)]))
    with pytest.raises(HistoryError):
        loglik([BASE], [0.0], EventHistory.empty(3), RiskSet.full(3))


def test_time_varying_riskset_exposure():
    rs = RiskSet(3, schedule=[(1.0, [(0, 1), (1, 0)])])
    h = EventHistory([0.5, 1.5, 2.0], [2, 0, 1], [0, 1, 0], 3)
    # exposure: 6 * 0.5 + 6 * 1.0 (risk set read at t=0.5) + 2 * 0.5
    assert trajectory([BASE], h, rs).exposure == pytest.approx(10.0)
    fit = mle([BASE], h, rs)
    assert fit.beta_hat[0] == pytest.approx(math.log(3 / 10.0), abs=1e-8)


@pytest.mark.slow
def test_error_shrinks_with_more_events():
    eff = [BASE, EffectSpec("inertia", scaling="std"), EffectSpec("reciprocity", scaling="std")]
    truth = np.array([-3.0, 0.3, -0.2])
    rs = RiskSet.full(8)
    med = []
    for m in (500, 2000, 8000):
        hs = simulate_replicates(DyadicModel(eff, truth), SimConfig(8, max_events=m, seed=4000), 20)
        err = [np.linalg.norm(mle(eff, h, rs).beta_hat - truth) for h in hs]
        med.append(np.median(err))
    assert med[0] > med[1] > med[2]
