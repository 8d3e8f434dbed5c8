import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from clustercons.dynamics import (
    InputSignal,
    IntegrationError,
    forced_response_matrix,
    forced_response_series,
    input_running_integral,
    integrate_linear,
    integrate_state,
    quotient_forced_response,
    quotient_state,
    quotient_transition,
    time_grid,
    transition_matrix,
)
from clustercons.graph import Clustering, CouplingSchedule, Profile, Segment, integrate_weights
from clustercons.props import random_schedule

PAIR = np.array([[0, 1.0], [1.0, 0]])


def pair_phi(t):
    a, b = 0.5 * (1 + np.exp(-2 * t)), 0.5 * (1 - np.exp(-2 * t))
    return np.array([[a, b], [b, a]])


def static_sine_schedule(W, dts):
    times = np.concatenate([[0.0], np.cumsum(dts)])
    segs = [Segment(W, Profile("sine_bump", duration=d)) for d in dts]
    return CouplingSchedule(times, segs)


# --- grids --------------------------------------------------------------------

def test_time_grid_inserts_breaks():
    g = time_grid(0.0, 1.0, 0.3, breaks=[0.5])
    assert g[0] == 0.0 and g[-1] == 1.0 and 0.5 in g
    assert np.all(np.diff(g) > 0) and np.diff(g).max() <= 0.3 + 1e-15


def test_time_grid_keeps_near_coincident_break():
    g = time_grid(0.0, 1.0, 0.1, breaks=[1.0 - 1e-13])
    assert g[-1] == 1.0 and (1.0 - 1e-13) in g


# --- state integration --------------------------------------------------------

def test_zero_coupling_no_input_is_constant():
    S = CouplingSchedule.constant(np.zeros((3, 3)), 0.0, 2.0)
    x0 = np.array([0.3, -1.0, 2.0])
    tr = integrate_state(S, None, x0, h=0.01)
    assert np.all(tr.states == x0)


def test_zero_coupling_sine_input():
    c = Clustering([0, 0, 1])
    S = CouplingSchedule.constant(np.zeros((3, 3)), 0.0, 5.0)
    x0 = np.array([0.3, -1.0, 2.0])
    tr = integrate_state(S, InputSignal.factored(c, [1.0, 1.0], "sin"), x0)
    expect = x0[None] + (1 - np.cos(tr.times))[:, None]
    assert np.abs(tr.states - expect).max() < 1e-8


def test_pair_closed_form():
    S = CouplingSchedule.constant(PAIR, 0.0, 3.0)
    tr = integrate_state(S, None, np.array([1.0, 0.0]))
    e = np.exp(-2 * tr.times)
    assert np.abs(tr.states - np.column_stack([0.5 + 0.5 * e, 0.5 - 0.5 * e])).max() < 1e-6


def test_record_modes_agree():
    S = CouplingSchedule.constant(PAIR, 0.0, 1.0)
    x0 = np.array([1.0, 0.0])
    full = integrate_state(S, None, x0, record="all")
    last = integrate_state(S, None, x0, record="last")
    strided = integrate_state(S, None, x0, record=100)
    assert np.array_equal(full.final, last.final)
    assert np.array_equal(strided.final, full.final)
    assert strided.times.size < full.times.size


def test_non_finite_state_raises():
    S = CouplingSchedule.constant(PAIR, 0.0, 1.0)
    with pytest.raises(IntegrationError):
        integrate_state(S, None, np.array([np.nan, 0.0]))


def test_trajectory_csv(tmp_path):
    S = CouplingSchedule.constant(PAIR, 0.0, 0.01)
    tr = integrate_state(S, None, np.array([1.0, 0.0]))
    tr.to_csv(tmp_path / "t.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "t,x_0,x_1"
    assert float(lines[-1].split(",")[1]) == tr.final[0]


# --- transition matrices -----------------------------------------------------

def test_transition_identity_at_start():
    S = CouplingSchedule.constant(PAIR, 0.0, 1.0)
    tm = transition_matrix(S)
    assert np.array_equal(tm.samples[0], np.eye(2))


@pytest.mark.parametrize("T", [0.1, 1.0, 4.0])
def test_transition_pair_closed_form(T):
    S = CouplingSchedule.constant(PAIR, 0.0, T)
    assert np.abs(transition_matrix(S, record="last").final - pair_phi(T)).max() < 1e-10


def test_transition_matches_expm_per_segment():
    rng = np.random.default_rng(2)
    W1, W2 = rng.uniform(0, 2, (4, 4)), rng.uniform(0, 2, (4, 4))
    S = CouplingSchedule([0.0, 0.7, 1.5], [Segment(W1), Segment(W2)])
    expect = expm(0.8 * S.segments[1].generator) @ expm(0.7 * S.segments[0].generator)
    assert np.abs(transition_matrix(S, record="last").final - expect).max() < 1e-10


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 6), st.integers(0, 2**32 - 1))
def test_transition_is_stochastic(n, seed):
    S = random_schedule(np.random.default_rng(seed), n, 1.5)
    tm = transition_matrix(S, record=25)
    assert np.abs(tm.samples.sum(axis=2) - 1).max() <= 1e-6
    assert tm.samples.min() >= -1e-9


@settings(max_examples=15, deadline=None)
@given(st.integers(2, 5), st.integers(0, 2**32 - 1))
def test_transition_semigroup(n, seed):
    S = random_schedule(np.random.default_rng(seed), n, 2.0)
    whole = transition_matrix(S, record="last").final
    a = transition_matrix(S, 0.0, 0.9, record="last").final
    b = transition_matrix(S, 0.9, 2.0, record="last").final
    assert np.abs(b @ a - whole).max() < 1e-8


def test_static_B_closed_form():
    B = np.array([[0, 2.0], [2.0, 0]])
    dts = np.random.default_rng(4).uniform(0, 1, 12)
    S = static_sine_schedule(B, dts)
    psi = quotient_transition(S, record="last").final
    integ = integrate_weights(S, 0.0, S.horizon)[0, 1] / 2.0
    Bgen = np.array([[-2.0, 2], [2, -2]])
    assert np.abs(psi - expm(integ * Bgen)).max() < 1e-6


def test_quotient_single_cluster_and_zero_B():
    S1 = CouplingSchedule.constant(np.zeros((1, 1)), 0.0, 2.0)
    assert np.array_equal(quotient_transition(S1, record="last").final, [[1.0]])
    S0 = CouplingSchedule.constant(np.zeros((3, 3)), 0.0, 2.0)
    assert np.array_equal(quotient_transition(S0, record="last").final, np.eye(3))


# --- forced responses ----------------------------------------------------------

def test_forced_response_zero_input():
    S = CouplingSchedule.constant(PAIR, 0.0, 2.0)
    c = Clustering([0, 1])
    z = quotient_forced_response(S, InputSignal.zero(c))
    assert np.array_equal(z, np.zeros(2))


def test_forced_response_zero_B_sine():
    c = Clustering([0, 1])
    S = CouplingSchedule.constant(np.zeros((2, 2)), 0.0, 6.0)
    alpha = np.array([2.0, 5.0])
    tr = quotient_state(S, InputSignal.factored(c, alpha, "sin"), np.zeros(2))
    expect = (1 - np.cos(tr.times))[:, None] * alpha[None]
    assert np.abs(tr.states - expect).max() < 1e-8


def test_forced_response_constant_input_pair():
    # z' = Bz + [1, 0]: mean grows as t/2, difference decays to 1/4
    c = Clustering([0, 1])
    S = CouplingSchedule.constant(PAIR, 0.0, 3.0)
    inp = InputSignal.per_cluster(c, [lambda t: 1.0, lambda t: 0.0])
    tr = quotient_state(S, inp, np.zeros(2))
    t = tr.times
    mean, diff = t / 2, (1 - np.exp(-2 * t)) / 2
    expect = np.column_stack([mean + diff / 2, mean - diff / 2])
    assert np.abs(tr.states - expect).max() < 1e-6


def test_W_zero_input_and_zero_B():
    S = CouplingSchedule.constant(PAIR, 0.0, 2.0)
    assert np.array_equal(forced_response_matrix(S, "zero"), np.zeros((2, 2)))
    S0 = CouplingSchedule.constant(np.zeros((2, 2)), 0.0, 2.0)
    assert np.abs(forced_response_matrix(S0, "sin") - (1 - np.cos(2.0)) * np.eye(2)).max() < 1e-10


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_W_alpha_matches_forced_response(seed):
    rng = np.random.default_rng(seed)
    c = Clustering([0, 1, 2])
    S = random_schedule(rng, 3, 2.0)
    alpha = rng.uniform(0, 10, 3)
    W = forced_response_matrix(S, "sin")
    z = quotient_forced_response(S, InputSignal.factored(c, alpha, "sin"))
    assert np.abs(W @ alpha - z).max() < 1e-8


def test_forced_series_sampling():
    S = CouplingSchedule.constant(PAIR, 0.0, 1.0)
    ser = forced_response_series(S, "sin", record=10)
    assert ser.samples.shape[1:] == (2, 2) and ser.times[-1] == 1.0


# --- running integrals ---------------------------------------------------------

def test_running_integral_sine():
    c = Clustering([0])
    ri = input_running_integral(InputSignal.factored(c, [1.0], "sin"), 0.0, 20.0)
    assert ri.sup_integral[0] == pytest.approx(2.0, abs=1e-6)
    assert not ri.unbounded_growth[0]


def test_running_integral_zero_and_one():
    c = Clustering([0, 1])
    z = input_running_integral(InputSignal.zero(c), 0.0, 5.0)
    assert np.all(z.sup_integral == 0)
    one = input_running_integral(InputSignal.factored(c, [1.0, 1.0], "one"), 0.0, 5.0)
    assert np.allclose(one.integrals[-1], 5.0) and one.unbounded_growth.all()


def test_integrate_linear_rejects_bad_grid():
    S = CouplingSchedule.constant(PAIR, 0.0, 1.0)
    with pytest.raises(ValueError):
        integrate_linear(S, np.eye(2), np.array([0.0, 0.5, 0.4]))
