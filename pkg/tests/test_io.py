import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from remsim.core import ActorIndex, ConfigError, EventHistory
from remsim.io import (
    actor_covariates_csv, atomic_write, dyad_covariates_csv, events_csv, load_config,
    read_actor_covariates, read_dyad_covariates, read_events, write_events,
)

ABC = ActorIndex(["a", "b", "c"])


def write(path, text):
    path.write_text(text)
    return path


def test_three_rows_round_trip_bytes(tmp_path):
    text = "time,sender,receiver\n0.5,a,b\n1.25,b,c\n3,c,a\n"
    p = write(tmp_path / "e.csv", text)
    h = read_events(p, ABC)
    out = tmp_path / "o.csv"
    write_events(out, h, ABC)
    assert out.read_text() == text
    assert list(h.senders) == [0, 1, 2]


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 6), st.integers(0, 40))
def test_emitted_events_reparse(tmp_path_factory, seed, n, m):
    rng = np.random.default_rng(seed)
    h = EventHistory.from_events(oracles.random_history(rng, n, m, t_scale=1e3), n)
    actors = ActorIndex([f"x{i}" for i in range(n)])
    p = tmp_path_factory.mktemp("ev") / "e.csv"
    write_events(p, h, actors)
    back = read_events(p, actors)
    assert np.array_equal(back.senders, h.senders) and np.array_equal(back.receivers, h.receivers)
    assert np.allclose(back.times, h.times, rtol=1e-11, atol=0)
    assert events_csv(back, actors) == p.read_text()


def test_tied_timestamps_name_line_six(tmp_path):
    rows = ["time,sender,receiver", "1,a,b", "2,b,a", "3,a,c", "4,c,a", "4,b,c"]
    p = write(tmp_path / "e.csv", "\n".join(rows) + "\n")
    with pytest.raises(ConfigError, match=r":6: duplicate timestamp"):
        read_events(p, ABC)


@pytest.mark.parametrize("body,msg", [
    ("2,a,b\n1,b,a\n", ":3: rows not sorted"),
    ("1,a,z\n", ":2:.*z"),
    ("1,a,a\n", ":2: self-loop"),
    ("x,a,b\n", ":2: time 'x' is not a number"),
    ("-1,a,b\n", ":2: negative time"),
    ("1,a\n", ":2: expected 3 fields"),
])
def test_event_errors_carry_line(tmp_path, body, msg):
    p = write(tmp_path / "e.csv", "time,sender,receiver\n" + body)
    with pytest.raises(ConfigError, match=msg):
        read_events(p, ABC)


def test_header_only_is_empty_history(tmp_path):
    h = read_events(write(tmp_path / "e.csv", "time,sender,receiver\n"), ABC)
    assert len(h) == 0 and h.n_actors == 3
    with pytest.raises(ConfigError, match="header"):
        read_events(write(tmp_path / "f.csv", "t,s,r\n"), ABC)
    with pytest.raises(ConfigError, match="not found"):
        read_events(tmp_path / "missing.csv", ABC)


def test_constant_covariates(tmp_path):
    p = write(tmp_path / "c.csv", "id,time,age,team\na,0,30,red\nb,0,41,blue\nc,0,25,red\n")
    cov = read_actor_covariates(p, ABC)
    assert list(cov.values_at("age", 100.0)) == [30, 41, 25]
    assert cov.levels["team"] == ("blue", "red")
    assert list(cov.values_at("team", 0.0)) == [1, 0, 1]


def test_step_covariate_switches(tmp_path):
    p = write(tmp_path / "c.csv", "id,time,senior\na,0,0\nb,0,0\nc,0,0\nc,50,1\n")
    cov = read_actor_covariates(p, ABC)
    assert cov.value("senior", 2, 49.999) == 0 and cov.value("senior", 2, 50.0) == 1
    assert cov.value("senior", 0, 80.0) == 0
    again = read_actor_covariates(write(tmp_path / "d.csv", actor_covariates_csv(cov, ABC)), ABC)
    assert actor_covariates_csv(again, ABC) == actor_covariates_csv(cov, ABC)


@pytest.mark.parametrize("text,msg", [
    ("id,time,x\na,0,1\nb,0,1\nz,0,1\n", "'z' is not in the actor set"),
    ("id,time,x\na,0,1\nb,0,1\nc,5,1\n", "no value at or before t=0 for id 'c'"),
    ("id,time,x\na,0,1\nb,0,1\nc,0,1\nc,0,2\n", "duplicate time"),
    ("id,time\na,0\n", "no covariate columns"),
])
def test_covariate_errors(tmp_path, text, msg):
    with pytest.raises(ConfigError, match=msg):
        read_actor_covariates(write(tmp_path / "c.csv", text), ABC)


def test_dyad_covariates_round_trip(tmp_path):
    p = write(tmp_path / "d.csv", "sender,receiver,dist\na,b,1.5\nb,a,2\nc,a,\n")
    cov = read_dyad_covariates(p, ABC)
    m = cov.matrix("dist")
    assert m[0, 1] == 1.5 and m[1, 0] == 2.0 and np.isnan(m[2, 0])
    q = write(tmp_path / "e.csv", dyad_covariates_csv(cov, ABC))
    assert np.array_equal(read_dyad_covariates(q, ABC).matrix("dist"), m, equal_nan=True)


def test_atomic_write_leaves_no_partial(tmp_path, monkeypatch):
    target = tmp_path / "out" / "x.txt"
    atomic_write(target, "old\n")

    def boom(*a):
        raise OSError("disk full")

    monkeypatch.setattr("os.replace", boom)
    with pytest.raises(OSError):
        atomic_write(target, "new\n")
    assert target.read_text() == "old\n"
    assert [p.name for p in target.parent.iterdir()] == ["x.txt"]


BASE_CFG = """
actors:
  labels: [a, b, c]
model:
  effects:
    - kind: baseline
      param: -1.0
stop:
  max_events: 20
"""


def test_config_loads_and_builds(tmp_path):
    sc = load_config(write(tmp_path / "c.yaml", BASE_CFG))
    assert sc.n_actors == 3 and sc.sim_config().max_events == 20
    assert sc.model.params[0].default_at(0.0) == -1.0


@pytest.mark.parametrize("extra,msg", [
    ("bogus: 1\n", "bogus"),
    ("seed: -3\n", "seed"),
    ("reps: 0\n", "reps"),
    ("covariates:\n  actor: nowhere.csv\n", "not found"),
    ("riskset:\n  exclude: [[a, q]]\n", "q"),
])
def test_config_validation_errors(tmp_path, extra, msg):
    with pytest.raises(ConfigError, match=msg):
        load_config(write(tmp_path / "c.yaml", BASE_CFG + extra))


def test_config_shape_errors(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "none.yaml")
    with pytest.raises(ConfigError, match="mapping"):
        load_config(write(tmp_path / "l.yaml", "- 1\n- 2\n"))
    with pytest.raises(ConfigError, match="invalid YAML"):
        load_config(write(tmp_path / "y.yaml", "a: [1, 2\n"))
    bad = BASE_CFG.replace("  effects:", "  family: actor\n  effects:")
    with pytest.raises(ConfigError, match="rate_effects"):
        load_config(write(tmp_path / "f.yaml", bad))


def test_riskset_schedule_from_config(tmp_path):
    text = BASE_CFG + "riskset:\n  exclude: [[a, b]]\n  schedule:\n    - from_time: 5\n      include: [[c, a]]\n"
    sc = load_config(write(tmp_path / "c.yaml", text))
    assert (0, 1) not in sc.riskset.active(0.0) and len(sc.riskset.active(0.0)) == 5
    assert sc.riskset.active(5.0) == {(2, 0)}
