import json

import numpy as np
import pytest

from clustercons.experiments import (
    ConfigError,
    ExperimentConfig,
    build_switching_schedule,
    make_realizations,
    run_experiment,
    simulate,
    zero_crossings,
)
from clustercons.graph import Clustering
from clustercons.measures import cluster_hajnal_diameter, eta_c_state


def schedule_for(seed, T=50.0, model="ring_lattice"):
    cfg = ExperimentConfig(model=model, seed=seed, T=T)
    rng = np.random.default_rng(seed)
    reals, _ = make_realizations(cfg, rng)
    return build_switching_schedule(reals, rng, 0.0, T)


# --- config -------------------------------------------------------------------

def test_config_defaults_are_valid():
    cfg = ExperimentConfig()
    assert (cfg.N, cfg.r, cfg.K, cfg.T, cfg.h) == (16, 2, 2, 50.0, 1e-3)
    assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg


@pytest.mark.parametrize("field,value", [
    ("model", "lattice"), ("T", -1.0), ("h", 0.0), ("K", 3), ("r", 8),
    ("seed", -1), ("seed", 2**64), ("alpha_max", -1.0), ("input_kind", "square"),
    ("window_policy", "lazy"), ("N", 2.5),
])
def test_config_rejects(field, value):
    with pytest.raises(ConfigError) as err:
        ExperimentConfig.from_dict({field: value})
    assert err.value.field == field


def test_config_bipartite_constraints():
    with pytest.raises(ConfigError, match="'K'"):
        ExperimentConfig(model="bipartite_random", K=3)
    with pytest.raises(ConfigError, match="'s'"):
        ExperimentConfig(model="bipartite_random", m=4, s=4)


def test_config_unknown_field(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"model": "ring_lattice", "horizon": 5}))
    with pytest.raises(ConfigError) as err:
        ExperimentConfig.from_json(path)
    assert err.value.field == "horizon"


# --- switching schedules ------------------------------------------------------

def test_schedule_deterministic():
    a, b = schedule_for(4), schedule_for(4)
    assert np.array_equal(a.times, b.times)
    assert all(np.array_equal(x.weights, y.weights) for x, y in zip(a.segments, b.segments))


def test_segment_count_statistics():
    # dwell times U(0,1): renewal count has mean ~ 2T and variance ~ T/12 / (1/2)^3
    T = 50.0
    counts = np.array([len(schedule_for(s, T).segments) for s in range(100)])
    sigma = np.sqrt(T * (1 / 12) / 0.125)
    assert np.all(np.abs(counts - 2 * T) <= 3 * sigma + 1)
    assert abs(counts.mean() - 2 * T) <= 3 * sigma / 10


def test_profiles_vanish_at_segment_ends():
    S = schedule_for(2, 10.0)
    for k in range(len(S.segments) - 1):
        a, b = S.times[k], S.times[k + 1]
        assert abs(S.weight(k, a)) < 1e-15
        assert abs(S.weight(k, b)) < 1e-12


def test_both_realizations_used():
    S = schedule_for(0)
    kinds = {seg.weights.tobytes() for seg in S.segments}
    assert len(kinds) == 2


# --- simulation ---------------------------------------------------------------

@pytest.fixture(scope="module")
def short_sim():
    return simulate(ExperimentConfig(seed=5, T=12.0))


def test_metric_columns_use_measures(short_sim):
    c, X = short_sim.clustering, short_sim.trajectory.states
    for k in (0, 500, len(X) - 1):
        assert short_sim.delta_c[k] == cluster_hajnal_diameter(X[k], c)
        assert short_sim.eta_c[k] == eta_c_state(X[k], c)


def test_velocity_is_right_hand_side(short_sim):
    X, t, V = short_sim.trajectory.states, short_sim.times, short_sim.velocity
    k = 3000
    fd = (X[k + 1] - X[k - 1]) / (t[k + 1] - t[k - 1])
    assert np.abs(fd - V[k]).max() < 1e-3


def test_phi_matches_trajectory(short_sim):
    from clustercons.dynamics import integrate_state
    # homogeneous part of x(T) is Phi(T,0) x0
    zero = integrate_state(short_sim.schedule, None, short_sim.x0, record="last")
    assert np.abs(short_sim.phi @ short_sim.x0 - zero.final).max() < 1e-10


def test_ablation_leaves_delta_c_unchanged():
    a = simulate(ExperimentConfig(seed=9, T=10.0, alpha_max=0.0), with_transition=False)
    b = simulate(ExperimentConfig(seed=9, T=10.0, alpha_max=10.0), with_transition=False)
    assert np.array_equal(a.x0, b.x0)
    assert np.abs(a.delta_c - b.delta_c).max() < 1e-9
    assert a.eta_c[-1] < 1e-6 < b.eta_c.max()


def test_zero_crossings_count():
    c = Clustering([0, 1])
    t = np.linspace(0, 10, 1001)
    states = np.column_stack([np.sin(t), np.zeros_like(t)])
    assert zero_crossings(states, c) == {"0-1": 3}


# --- full runs ----------------------------------------------------------------

def test_run_writes_manifest_and_is_reproducible(tmp_path):
    cfg = ExperimentConfig(seed=3, T=6.0, out_dir=str(tmp_path / "a"))
    rep = run_experiment(cfg)
    files = [k for k, v in rep.manifest.items() if v]
    assert len(files) >= 4
    out = tmp_path / "a" / "seed_3"
    assert {"trajectory.csv", "measures.csv", "report.json"} <= {p.name for p in out.iterdir()}
    rep2 = run_experiment(cfg.replace(out_dir=str(tmp_path / "b")))
    assert rep2.manifest == rep.manifest
    a = (out / "report.json").read_text()
    b = (tmp_path / "b" / "seed_3" / "report.json").read_text()
    assert a.replace(str(tmp_path / "a"), "") == b.replace(str(tmp_path / "b"), "")
    header = (out / "measures.csv").read_text().splitlines()[0]
    assert header == "t,delta_c,eta_c,eta_c_plus_v"


def test_run_report_contents():
    rep = run_experiment(ExperimentConfig(seed=1, T=50.0), write=False)
    names = [c.assumption for c in rep.conditions]
    assert names[:4] == ["A1", "A2", "A3", "A4"]
    assert not rep.failed
    assert rep.final_delta_c < 1e-3 and rep.eta_c_tail_max >= 0.05
    assert rep.rho < 1 and rep.lower_left <= 1e-8
    json.loads(rep.to_json())
