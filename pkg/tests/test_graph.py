import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clustercons.graph import (
    Clustering,
    CouplingSchedule,
    DeltaEdgeGraph,
    Profile,
    Segment,
    adjacency_matrix,
    delta_edges,
    has_cluster_spanning_tree,
    integrate_weights,
    is_cluster_scrambling,
    laplacian_at,
    laplacian_from_adjacency,
    make_bipartite_random,
    make_ring_lattice,
    reachability,
    spanning_tree_bottleneck,
)
from clustercons.measures import cluster_ergodicity
from clustercons.props import random_stochastic


def sine_schedule(times, weights):
    times = np.asarray(times, float)
    segs = [Segment(w, Profile("sine_bump", duration=b - a))
            for w, a, b in zip(weights, times[:-1], times[1:])]
    return CouplingSchedule(times, segs)


# --- clustering --------------------------------------------------------------

def test_clustering_members_and_indicator():
    c = Clustering([1, 0, 1, 2])
    assert c.K == 3
    assert c.indicator().sum(axis=0).tolist() == [1, 2, 1]
    assert Clustering.from_members(c.members) == c


def test_clustering_rejects_gaps():
    with pytest.raises(ValueError):
        Clustering([0, 2])


# --- graph models ------------------------------------------------------------

def test_ring_lattice_small():
    adj, c = make_ring_lattice(6, 1, 2)
    assert adj[0] == {1, 5}
    assert [list(m) for m in c.members] == [[0, 2, 4], [1, 3, 5]]


def test_ring_lattice_single_cluster_cycle():
    adj, c = make_ring_lattice(4, 1, 1)
    assert c.K == 1
    assert all(len(adj[i]) == 2 for i in range(4))
    assert adj[0] == {1, 3}


def test_ring_lattice_residue_counts():
    adj, c = make_ring_lattice(8, 2, 2)
    assert adj[0] == {1, 2, 6, 7}
    for i in range(8):
        counts = np.bincount([j % 2 for j in adj[i]], minlength=2)
        assert counts.tolist() == [2, 2]


@pytest.mark.parametrize("N,r,K", [(5, 1, 2), (4, 2, 1), (0, 1, 1)])
def test_ring_lattice_rejects(N, r, K):
    with pytest.raises(ValueError):
        make_ring_lattice(N, r, K)


def test_bipartite_forced_small():
    adj, c = make_bipartite_random(4, 2, 1, np.random.default_rng(3))
    assert adj[0] >= {1} and adj[1] >= {0} and adj[2] >= {3} and adj[3] >= {2}
    for i in range(4):
        assert len(adj[i]) == 2


@pytest.mark.parametrize("seed", range(5))
def test_bipartite_neighbor_counts(seed):
    adj, c = make_bipartite_random(10, 3, 1, np.random.default_rng(seed))
    for i in range(10):
        own = sum(c.assignment[j] == c.assignment[i] for j in adj[i])
        assert own == 1 and len(adj[i]) == 3
        assert i not in adj[i]


def test_bipartite_deterministic():
    a1, _ = make_bipartite_random(16, 4, 2, np.random.default_rng(11))
    a2, _ = make_bipartite_random(16, 4, 2, np.random.default_rng(11))
    assert a1 == a2


@pytest.mark.parametrize("N,m,s", [(5, 2, 1), (8, 2, 2), (8, 3, 0), (4, 4, 1)])
def test_bipartite_rejects(N, m, s):
    with pytest.raises(ValueError):
        make_bipartite_random(N, m, s, np.random.default_rng(0))


# --- laplacian ---------------------------------------------------------------

def test_laplacian_empty_and_pair():
    assert np.array_equal(laplacian_from_adjacency({0: set(), 1: set()}), np.zeros((2, 2)))
    L = laplacian_from_adjacency({0: {1}, 1: {0}})
    assert np.array_equal(L, [[-1, 1], [1, -1]])


def test_laplacian_at_sine_midpoint():
    adj, _ = make_ring_lattice(6, 1, 2)
    S = sine_schedule([0.0, 0.4, 1.0], [adjacency_matrix(adj)] * 2)
    L = laplacian_at(S, 0.4 + 0.3)
    A = adjacency_matrix(adj)
    assert np.allclose(L[A > 0], 1.0)
    assert np.allclose(L.sum(axis=1), 0.0)


def test_laplacian_at_horizon_and_outside():
    S = CouplingSchedule.constant(np.ones((2, 2)), 0.0, 1.0)
    assert np.allclose(laplacian_at(S, 1.0), [[-1, 1], [1, -1]])
    with pytest.raises(ValueError):
        laplacian_at(S, 1.5)


def test_segment_rejects_negative_weights():
    with pytest.raises(ValueError):
        Segment(np.array([[0, -1], [1, 0]]))


def test_schedule_round_trip():
    S = sine_schedule([0.0, 0.3, 1.1], [np.array([[0, 1], [0, 0]]), np.array([[0, 0], [2, 0]])])
    c = Clustering([0, 0])
    d = S.to_dict(c)
    assert d["clusters"] == [[0, 1]]
    S2 = CouplingSchedule.from_dict(d)
    for t in (0.1, 0.5, 1.0):
        assert np.array_equal(laplacian_at(S, t), laplacian_at(S2, t))


# --- integrated weights ------------------------------------------------------

def test_integrate_constant():
    S = CouplingSchedule.constant(np.array([[0, 1.0], [0, 0]]), 0.0, 2.0)
    assert np.allclose(integrate_weights(S, 0.0, 2.0), [[0, 2], [0, 0]])


@pytest.mark.parametrize("dt", [0.1, 0.37, 0.99])
def test_integrate_sine_bump_closed_form(dt):
    S = sine_schedule([0.0, dt], [np.array([[0, 1.0], [1.0, 0]])])
    W = integrate_weights(S, 0.0, dt)
    assert W[0, 1] == pytest.approx(2 * dt / np.pi, abs=1e-8)


def test_integrate_zero_length():
    S = CouplingSchedule.constant(np.ones((3, 3)), 0.0, 1.0)
    assert not integrate_weights(S, 0.5, 0.5).any()


def test_integrate_splits_at_switches():
    rng = np.random.default_rng(0)
    dts = rng.uniform(0, 1, 6)
    times = np.concatenate([[0], np.cumsum(dts)])
    A = np.array([[0, 1.0], [1.0, 0]])
    S = sine_schedule(times, [A] * 6)
    W = integrate_weights(S, 0.0, times[-1])
    # short segments carry Simpson error ~ h^4 / dt^3
    assert W[0, 1] == pytest.approx(2 * dts.sum() / np.pi, abs=1e-6)
    part = integrate_weights(S, 0.0, times[2]) + integrate_weights(S, times[2], times[-1])
    assert np.allclose(part, W, atol=1e-12)


# --- delta edges and trees ---------------------------------------------------

def test_delta_edges_thresholds():
    W = np.array([[0, 0.5, 0], [0, 0, 0.5], [0.5, 0, 0]])
    assert delta_edges(W, 0.0).edges == {(1, 0), (2, 1), (0, 2)}
    assert delta_edges(np.full((3, 3), 0.9), 1.0).edges == set()


def test_sine_schedule_single_interval_has_no_unit_edges():
    rng = np.random.default_rng(5)
    dts = rng.uniform(0, 1, 3)
    times = np.concatenate([[0], np.cumsum(dts)])
    adj, c = make_ring_lattice(8, 2, 2)
    S = sine_schedule(times, [adjacency_matrix(adj)] * 3)
    for k in range(3):
        assert delta_edges(integrate_weights(S, times[k], times[k + 1]), 1.0).edges == set()
    three = delta_edges(integrate_weights(S, 0.0, times[-1]), 1.0)
    assert bool(three.edges) == (2 * dts.sum() / np.pi > 1)


def test_spanning_tree_trivial_cases():
    c = Clustering([0, 0, 1, 1])
    full = DeltaEdgeGraph(~np.eye(4, dtype=bool), 0.0)
    assert has_cluster_spanning_tree(full, c)[0]
    empty = DeltaEdgeGraph(np.zeros((4, 4), dtype=bool), 0.0)
    assert has_cluster_spanning_tree(empty, c) == (False, None)


def test_spanning_tree_hand_example():
    c = Clustering.from_members([[0, 1], [2, 3]])
    g = DeltaEdgeGraph.from_edges(4, [(2, 0), (2, 1), (0, 3)])
    assert has_cluster_spanning_tree(g, c) == (True, [2, 2])


def brute_reach(mask):
    n = mask.shape[0]
    out = np.zeros((n, n), dtype=bool)
    for v in range(n):
        seen, stack = {v}, [v]
        while stack:
            u = stack.pop()
            for w in np.flatnonzero(mask[:, u]):
                if w not in seen:
                    seen.add(int(w))
                    stack.append(int(w))
        out[v, list(seen)] = True
    return out


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_reachability_matches_search(n, seed):
    mask = np.random.default_rng(seed).random((n, n)) < 0.25
    np.fill_diagonal(mask, False)
    assert np.array_equal(reachability(mask), brute_reach(mask))


def test_bottleneck():
    c = Clustering([0, 0, 0])
    W = np.array([[0, 0.2, 0], [0.7, 0, 0], [0, 0.4, 0]])
    # edges 1->0 (0.2), 0->1 (0.7), 1->2 (0.4); root 0 needs 0.7 and 0.4
    assert spanning_tree_bottleneck(W, c) == pytest.approx(0.4)
    assert spanning_tree_bottleneck(W, Clustering([0, 1, 2])) == np.inf
    assert spanning_tree_bottleneck(np.zeros((3, 3)), c) == 0.0


# --- scrambling --------------------------------------------------------------

def test_scrambling_basic():
    c = Clustering([0, 0, 1, 1])
    assert is_cluster_scrambling(np.ones((4, 4)), c)
    assert not is_cluster_scrambling(np.eye(4), c)
    assert is_cluster_scrambling(np.eye(3), Clustering([0, 1, 2]))


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 7), st.integers(0, 2**32 - 1))
def test_scrambling_iff_positive_ergodicity(n, seed):
    rng = np.random.default_rng(seed)
    A = random_stochastic(rng, n, density=0.35)
    c = Clustering(np.arange(n) % 2 if n > 2 else [0, 0])
    assert is_cluster_scrambling(A, c) == (cluster_ergodicity(A, c) > 0)
