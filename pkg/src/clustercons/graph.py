"""Clusterings, graph models and piecewise time-varying coupling schedules.

A coupling schedule is a sequence of segments ``[t_{k-1}, t_k)``. Each
segment carries a fixed matrix of nonnegative off-diagonal base weights and a
scalar weight profile, so that on the segment

    L_ij(t) = base_ij * w_k(t)     (i != j)
    L_ii(t) = -sum_{j != i} L_ij(t)

which is Metzler with zero row sums by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

Adjacency = dict[int, frozenset[int]]


class Clustering:
    """A disjoint partition of ``{0, ..., n-1}`` into ``K`` nonempty clusters.

    Parameters
    ----------
    assignment : sequence of int
        ``assignment[i]`` is the cluster label of vertex ``i``. Labels must be
        exactly ``0, ..., K-1``.
    """

    def __init__(self, assignment: Sequence[int]):
        labels = np.asarray(assignment)
        if labels.ndim != 1 or labels.size == 0:
            raise ValueError("assignment must be a nonempty 1-d sequence")
        if not np.issubdtype(labels.dtype, np.integer):
            if not np.all(np.equal(np.mod(labels, 1), 0)):
                raise ValueError("cluster labels must be integers")
            labels = labels.astype(int)
        K = int(labels.max()) + 1
        if labels.min() < 0 or len(np.unique(labels)) != K:
            raise ValueError(
                "cluster labels must be 0..K-1 with every cluster nonempty, "
                f"got {sorted(set(labels.tolist()))}"
            )
        self._assignment = labels.astype(np.intp)
        self._assignment.setflags(write=False)
        self.n = int(labels.size)
        self.K = K
        self.members = tuple(
            tuple(int(i) for i in np.flatnonzero(labels == p)) for p in range(K)
        )

    @classmethod
    def from_members(cls, members: Iterable[Iterable[int]]) -> "Clustering":
        members = [list(m) for m in members]
        flat = [i for m in members for i in m]
        n = len(flat)
        if sorted(flat) != list(range(n)):
            raise ValueError("members must cover 0..n-1 exactly once")
        labels = np.empty(n, dtype=int)
        for p, m in enumerate(members):
            if not m:
                raise ValueError(f"cluster {p} is empty")
            labels[m] = p
        return cls(labels)

    @classmethod
    def single(cls, n: int) -> "Clustering":
        return cls(np.zeros(n, dtype=int))

    @property
    def assignment(self) -> np.ndarray:
        return self._assignment

    def indicator(self) -> np.ndarray:
        """``n x K`` 0/1 matrix whose columns span the consensus subspace."""
        out = np.zeros((self.n, self.K))
        out[np.arange(self.n), self._assignment] = 1.0
        return out

    def to_dict(self) -> dict:
        return {"assignment": self._assignment.tolist()}

    def __eq__(self, other) -> bool:
        return isinstance(other, Clustering) and np.array_equal(
            self._assignment, other._assignment
        )

    def __hash__(self) -> int:
        return hash(self.members)

    def __repr__(self) -> str:
        return f"Clustering(n={self.n}, K={self.K}, members={list(self.members)})"


# ---------------------------------------------------------------------------
# weight profiles and schedules
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Profile:
    """Scalar weight profile ``w(t)`` on one segment.

    ``kind`` is one of

    * ``"constant"`` with ``value`` (default 1)
    * ``"sine_bump"`` with ``duration``: ``sin(pi * (t - start) / duration)``
      where ``start`` is the segment start
    * ``"custom"`` with a vectorised callable ``fn(t)`` of absolute time; not
      serialisable
    """

    kind: str = "constant"
    value: float = 1.0
    duration: float | None = None
    fn: Callable[[np.ndarray], np.ndarray] | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind == "sine_bump":
            if self.duration is None or not self.duration > 0:
                raise ValueError("sine_bump profile needs a positive duration")
        elif self.kind == "custom":
            if self.fn is None:
                raise ValueError("custom profile needs fn")
        elif self.kind != "constant":
            raise ValueError(f"unknown profile kind {self.kind!r}")

    def __call__(self, t, start: float):
        t = np.asarray(t, dtype=float)
        if self.kind == "constant":
            return np.full_like(t, self.value)
        if self.kind == "sine_bump":
            return np.sin(np.pi * (t - start) / self.duration)
        return np.asarray(self.fn(t), dtype=float) * np.ones_like(t)

    def to_dict(self) -> dict:
        if self.kind == "constant":
            return {"kind": "constant", "value": self.value}
        if self.kind == "sine_bump":
            return {"kind": "sine_bump", "duration": self.duration}
        raise TypeError("custom profiles cannot be serialised")

    @classmethod
    def from_dict(cls, d: Mapping) -> "Profile":
        kind = d["kind"]
        if kind == "constant":
            return cls("constant", value=float(d.get("value", 1.0)))
        if kind == "sine_bump":
            return cls("sine_bump", duration=float(d["duration"]))
        raise ValueError(f"unknown profile kind {kind!r}")


def generator_from_weights(weights: np.ndarray) -> np.ndarray:
    """Metzler zero-row-sum matrix with the given off-diagonal weights."""
    W = np.array(weights, dtype=float)
    np.fill_diagonal(W, 0.0)
    W[np.diag_indices_from(W)] = -W.sum(axis=1)
    return W


@dataclass(frozen=True, eq=False)
class Segment:
    weights: np.ndarray
    profile: Profile = Profile()

    def __post_init__(self):
        W = np.array(self.weights, dtype=float)
        if W.ndim != 2 or W.shape[0] != W.shape[1]:
            raise ValueError("segment weights must be square")
        np.fill_diagonal(W, 0.0)
        if np.any(W < 0) or not np.all(np.isfinite(W)):
            raise ValueError("segment weights must be finite and nonnegative")
        W.setflags(write=False)
        G = generator_from_weights(W)
        G.setflags(write=False)
        object.__setattr__(self, "weights", W)
        object.__setattr__(self, "generator", G)


class CouplingSchedule:
    """Piecewise-defined time-varying Laplacian ``L(t)``.

    Parameters
    ----------
    times : sequence of float
        Strictly increasing ``[t_0, t_1, ..., t_S]``; segment ``k`` covers
        ``[times[k], times[k+1])`` and ``times[-1]`` is the horizon ``T``.
    segments : sequence of Segment
        ``len(times) - 1`` segments of equal size.
    """

    def __init__(self, times: Sequence[float], segments: Sequence[Segment]):
        times = np.asarray(times, dtype=float)
        if times.ndim != 1 or times.size < 2:
            raise ValueError("need at least one segment")
        if np.any(np.diff(times) <= 0):
            raise ValueError("switching instants must be strictly increasing")
        if len(segments) != times.size - 1:
            raise ValueError("one segment per switching interval required")
        sizes = {s.weights.shape[0] for s in segments}
        if len(sizes) != 1:
            raise ValueError("all segments must have the same vertex count")
        times.setflags(write=False)
        self.times = times
        self.segments = tuple(segments)
        self.n = sizes.pop()

    @property
    def t0(self) -> float:
        return float(self.times[0])

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    @property
    def switching_instants(self) -> np.ndarray:
        return self.times[:-1]

    def segment_index(self, t) -> np.ndarray | int:
        """Index of the segment containing ``t`` (right-continuous; ``T`` maps
        to the last segment)."""
        idx = np.searchsorted(self.times, t, side="right") - 1
        return np.clip(idx, 0, len(self.segments) - 1)

    def weight(self, k: int, t):
        return self.segments[k].profile(t, self.times[k])

    @classmethod
    def constant(cls, generator_or_weights: np.ndarray, t0: float, T: float) -> "CouplingSchedule":
        """Single-segment schedule with constant profile."""
        return cls([t0, T], [Segment(generator_or_weights)])

    @classmethod
    def from_adjacency(
        cls,
        adjacencies: Sequence[Adjacency],
        choices: Sequence[int],
        times: Sequence[float],
        profiles: Sequence[Profile],
    ) -> "CouplingSchedule":
        mats = [adjacency_matrix(a) for a in adjacencies]
        segs = [Segment(mats[c], p) for c, p in zip(choices, profiles)]
        return cls(times, segs)

    def to_dict(self, clustering: Clustering | None = None) -> dict:
        segs = []
        for seg in self.segments:
            rows, cols = np.nonzero(seg.weights)
            entries = [[int(i), int(j), float(seg.weights[i, j])] for i, j in zip(rows, cols)]
            segs.append({"entries": entries, "profile": seg.profile.to_dict()})
        d = {
            "vertices": self.n,
            "switching_times": [float(t) for t in self.times[:-1]],
            "horizon": self.horizon,
            "segments": segs,
        }
        if clustering is not None:
            d["clusters"] = [list(m) for m in clustering.members]
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "CouplingSchedule":
        n = int(d["vertices"])
        times = list(d["switching_times"]) + [d["horizon"]]
        segs = []
        for s in d["segments"]:
            W = np.zeros((n, n))
            for i, j, w in s["entries"]:
                W[int(i), int(j)] = float(w)
            segs.append(Segment(W, Profile.from_dict(s["profile"])))
        return cls(times, segs)

    def __repr__(self) -> str:
        return (
            f"CouplingSchedule(n={self.n}, segments={len(self.segments)}, "
            f"t0={self.t0}, T={self.horizon})"
        )


def adjacency_matrix(adjacency: Adjacency, n: int | None = None) -> np.ndarray:
    """0/1 matrix with ``A[i, j] = 1`` iff ``j`` is a neighbor of ``i``
    (so ``j -> i`` carries weight into ``i``)."""
    if n is None:
        n = len(adjacency)
    A = np.zeros((n, n))
    for i, nbrs in adjacency.items():
        for j in nbrs:
            if i == j:
                raise ValueError(f"self-link at vertex {i}")
            A[i, j] = 1.0
    return A


def laplacian_from_adjacency(adjacency: Adjacency, weight: float = 1.0) -> np.ndarray:
    return generator_from_weights(weight * adjacency_matrix(adjacency))


# ---------------------------------------------------------------------------
# graph models
# ---------------------------------------------------------------------------


def make_ring_lattice(N: int, r: int, K: int) -> tuple[Adjacency, Clustering]:
    """Ring lattice where node ``i`` is linked to ``(i + j) mod N`` for
    ``j = +-1, ..., +-r``; cluster of ``i`` is ``i mod K``."""
    if N < 1 or r < 1 or K < 1:
        raise ValueError("N, r, K must be positive")
    if N % K:
        raise ValueError(f"K={K} does not divide N={N}")
    if 2 * r >= N:
        raise ValueError(f"need 2r < N, got r={r}, N={N}")
    adj = {
        i: frozenset((i + s * j) % N for j in range(1, r + 1) for s in (1, -1))
        for i in range(N)
    }
    return adj, Clustering(np.arange(N) % K)


def make_bipartite_random(
    N: int, m: int, s: int, rng: np.random.Generator
) -> tuple[Adjacency, Clustering]:
    """Two groups of ``N/2`` nodes (``0..N/2-1`` and ``N/2..N-1``).

    Every node draws ``s`` neighbors uniformly without replacement from its
    own group and ``m - s`` from the other group. The neighbor lists are kept
    as drawn (``j`` in ``adj[i]`` means ``j -> i``), so every node has exactly
    ``s`` in-group and ``m - s`` cross-group neighbors.
    """
    if N < 2 or N % 2:
        raise ValueError(f"N must be a positive even integer, got {N}")
    if not (0 < s < m):
        raise ValueError(f"need 0 < s < m, got s={s}, m={m}")
    half = N // 2
    if s > half - 1 or m - s > half:
        raise ValueError(f"infeasible (N={N}, m={m}, s={s}): need s <= N/2-1 and m-s <= N/2")
    groups = [np.arange(half), np.arange(half, N)]
    adj = {}
    for i in range(N):
        g = 0 if i < half else 1
        own = groups[g][groups[g] != i]
        inside = rng.choice(own, size=s, replace=False)
        across = rng.choice(groups[1 - g], size=m - s, replace=False)
        adj[i] = frozenset(int(j) for j in np.concatenate([inside, across]))
    labels = np.repeat([0, 1], half)
    return adj, Clustering(labels)


# ---------------------------------------------------------------------------
# evaluation and quadrature
# ---------------------------------------------------------------------------


def laplacian_at(schedule: CouplingSchedule, t: float) -> np.ndarray:
    """``L(t)``. ``t`` may equal the horizon, which uses the last segment's
    left limit."""
    if not (schedule.t0 <= t <= schedule.horizon):
        raise ValueError(f"t={t} outside horizon [{schedule.t0}, {schedule.horizon}]")
    k = int(schedule.segment_index(t))
    return float(schedule.weight(k, t)) * schedule.segments[k].generator


def _simpson(f, a: float, b: float, h: float) -> float:
    m = max(2, int(np.ceil((b - a) / h)))
    m += m % 2
    x = np.linspace(a, b, m + 1)
    y = f(x)
    dx = (b - a) / m
    return dx / 3.0 * (y[0] + y[-1] + 4.0 * y[1:-1:2].sum() + 2.0 * y[2:-1:2].sum())


def integrate_weights(
    schedule: CouplingSchedule, t1: float, t2: float, h: float = 1e-3
) -> np.ndarray:
    """Off-diagonal matrix of ``int_{t1}^{t2} L_ij(t) dt`` (diagonal is zero).

    Composite Simpson on a sub-grid of step at most ``h`` inside every
    segment, splitting exactly at switching instants.
    """
    if t2 < t1:
        raise ValueError(f"reversed interval [{t1}, {t2}]")
    if t1 < schedule.t0 or t2 > schedule.horizon:
        raise ValueError(f"[{t1}, {t2}] outside horizon [{schedule.t0}, {schedule.horizon}]")
    out = np.zeros((schedule.n, schedule.n))
    if t2 == t1:
        return out
    k1 = int(schedule.segment_index(t1))
    for k in range(k1, len(schedule.segments)):
        a = max(t1, schedule.times[k])
        b = min(t2, schedule.times[k + 1])
        if a >= t2:
            break
        if b <= a:
            continue
        start = schedule.times[k]
        seg = schedule.segments[k]
        out += _simpson(lambda x: seg.profile(x, start), a, b, h) * seg.weights
    return out


# ---------------------------------------------------------------------------
# delta-edges, cluster spanning trees, scrambling
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DeltaEdgeGraph:
    """Directed graph of delta-edges. ``mask[i, j]`` means edge ``j -> i``."""

    mask: np.ndarray
    delta: float
    interval: tuple[float, float] | None = None

    @property
    def n(self) -> int:
        return self.mask.shape[0]

    @property
    def edges(self) -> set[tuple[int, int]]:
        """Edges as ``(source, target)`` pairs."""
        rows, cols = np.nonzero(self.mask)
        return {(int(j), int(i)) for i, j in zip(rows, cols)}

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]], delta: float = 0.0):
        mask = np.zeros((n, n), dtype=bool)
        for src, dst in edges:
            mask[dst, src] = True
        return cls(mask, delta)


def delta_edges(W: np.ndarray, delta: float, interval=None) -> DeltaEdgeGraph:
    W = np.asarray(W, dtype=float)
    mask = W > delta
    np.fill_diagonal(mask, False)
    return DeltaEdgeGraph(mask, float(delta), interval)


def reachability(mask: np.ndarray) -> np.ndarray:
    """``R[v, u]`` is True iff ``u`` is reachable from ``v`` (``v`` reaches
    itself). ``mask[i, j]`` denotes an edge ``j -> i``."""
    n = mask.shape[0]
    R = mask.T.astype(bool) | np.eye(n, dtype=bool)
    while True:
        R2 = R | ((R.astype(np.int64) @ R.astype(np.int64)) > 0)
        if np.array_equal(R2, R):
            return R
        R = R2


def has_cluster_spanning_tree(
    g: DeltaEdgeGraph, c: Clustering
) -> tuple[bool, list[int] | None]:
    """Does every cluster have a root (anywhere in the graph) reaching all of
    its members along delta-edges? Returns the first witness root per cluster
    in vertex order."""
    if g.n != c.n:
        raise ValueError(f"graph has {g.n} vertices, clustering {c.n}")
    R = reachability(g.mask)
    roots = []
    for members in c.members:
        ok = np.flatnonzero(R[:, list(members)].all(axis=1))
        if ok.size == 0:
            return False, None
        roots.append(int(ok[0]))
    return True, roots


def spanning_tree_bottleneck(W: np.ndarray, c: Clustering) -> float:
    """Largest ``v`` such that the edges with ``W_ij >= v`` contain a cluster
    spanning tree; a tree then exists for every ``delta < v``.

    Returns 0 when no tree exists even with all positive entries and ``inf``
    when every cluster is a singleton.
    """
    W = np.asarray(W, dtype=float)
    if all(len(m) == 1 for m in c.members):
        return float("inf")
    off = W[~np.eye(W.shape[0], dtype=bool)]
    cand = np.unique(off[off > 0])
    if cand.size == 0:
        return 0.0

    def ok(v):
        mask = W >= v
        np.fill_diagonal(mask, False)
        return has_cluster_spanning_tree(DeltaEdgeGraph(mask, v), c)[0]

    if not ok(cand[0]):
        return 0.0
    lo, hi = 0, cand.size - 1
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if ok(cand[mid]):
            lo = mid
        else:
            hi = mid - 1
    return float(cand[lo])


def is_cluster_scrambling(A, c: Clustering) -> bool:
    """Every pair ``i, j`` in a common cluster has some ``k`` with
    ``A_ik > 0`` and ``A_jk > 0``. ``A`` may be a DeltaEdgeGraph, whose mask
    is used as the matrix."""
    if isinstance(A, DeltaEdgeGraph):
        A = A.mask
    S = (np.asarray(A) > 0).astype(np.int64)
    if S.shape != (c.n, c.n):
        raise ValueError(f"matrix shape {S.shape} does not match n={c.n}")
    common = (S @ S.T) > 0
    for members in c.members:
        idx = np.asarray(members)
        if not common[np.ix_(idx, idx)].all():
            return False
    return True
