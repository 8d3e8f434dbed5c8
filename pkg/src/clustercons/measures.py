"""Scalar measures on matrices and state vectors.

Singleton clusters have no intra-cluster pairs: they contribute 1 to the
inner minimum of the cluster ergodicity coefficient and 0 to the inner
maximum of the cluster Hajnal diameter.
"""

from __future__ import annotations

import numpy as np

from .graph import Clustering

STOCHASTIC_TOL = 1e-9
INTEGRATED_STOCHASTIC_TOL = 1e-6


def is_stochastic(A, tol: float = STOCHASTIC_TOL) -> bool:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        return False
    return bool(np.all(A >= -tol) and np.all(np.abs(A.sum(axis=1) - 1.0) <= tol))


def is_metzler_zero_row_sum(L, tol: float = STOCHASTIC_TOL) -> bool:
    L = np.asarray(L, dtype=float)
    if L.ndim != 2 or L.shape[0] != L.shape[1]:
        return False
    off = L[~np.eye(L.shape[0], dtype=bool)]
    return bool(np.all(off >= -tol) and np.all(np.abs(L.sum(axis=1)) <= tol))


def cluster_ergodicity(A, c: Clustering, tol: float = STOCHASTIC_TOL) -> float:
    """``min_p min_{i,j in C_p} sum_k min(A_ik, A_jk)`` for a stochastic ``A``."""
    A = np.asarray(A, dtype=float)
    if A.shape != (c.n, c.n):
        raise ValueError(f"expected {c.n}x{c.n} matrix, got {A.shape}")
    if not is_stochastic(A, tol):
        raise ValueError(f"matrix is not stochastic (tol={tol}); row sums {A.sum(axis=1)}")
    mu = 1.0
    for members in c.members:
        if len(members) < 2:
            continue
        rows = A[list(members)]
        overlap = np.minimum(rows[:, None, :], rows[None, :, :]).sum(axis=-1)
        iu = np.triu_indices(len(members), k=1)
        mu = min(mu, float(overlap[iu].min()))
    return mu


def cluster_hajnal_diameter(M, c: Clustering) -> float:
    """Largest infinity-norm distance between two rows of ``M`` in a common
    cluster. A 1-d ``M`` is treated as an ``n x 1`` column."""
    M = np.asarray(M, dtype=float)
    if M.ndim == 1:
        M = M[:, None]
    if M.shape[0] != c.n:
        raise ValueError(f"expected {c.n} rows, got {M.shape[0]}")
    out = 0.0
    for members in c.members:
        if len(members) < 2:
            continue
        rows = M[list(members)]
        out = max(out, float(np.max(rows.max(axis=0) - rows.min(axis=0))))
    return out


def cluster_hajnal_series(states, c: Clustering) -> np.ndarray:
    """Cluster Hajnal diameter of each row of ``states`` (shape ``(m, n)``).

    Uses the same reductions as :func:`cluster_hajnal_diameter` so values
    agree exactly.
    """
    X = np.asarray(states, dtype=float)
    out = np.zeros(X.shape[0])
    for members in c.members:
        if len(members) < 2:
            continue
        block = X[:, list(members)]
        out = np.maximum(out, block.max(axis=1) - block.min(axis=1))
    return out


def eta(z) -> float:
    """Minimum pairwise absolute gap ``min_{i != j} |z_i - z_j|``."""
    z = np.asarray(z, dtype=float).ravel()
    if z.size < 2:
        raise ValueError("eta needs at least two components")
    return float(np.min(np.diff(np.sort(z))))


def eta_series(Z) -> np.ndarray:
    """:func:`eta` applied to each row of ``Z`` (shape ``(m, K)``)."""
    Z = np.asarray(Z, dtype=float)
    if Z.shape[1] < 2:
        raise ValueError("eta needs at least two components")
    return np.min(np.diff(np.sort(Z, axis=1), axis=1), axis=1)


def cluster_means(states, c: Clustering) -> np.ndarray:
    """Per-cluster mean of each row of ``states``; shape ``(m, K)``."""
    X = np.atleast_2d(np.asarray(states, dtype=float))
    out = np.empty((X.shape[0], c.K))
    for p, members in enumerate(c.members):
        # column-by-column so a single row and a full series round identically
        acc = X[:, members[0]].copy()
        for j in members[1:]:
            acc += X[:, j]
        out[:, p] = acc / len(members)
    return out


def eta_c_series(states, c: Clustering) -> np.ndarray:
    # cluster means stand in for the cluster representative
    return eta_series(cluster_means(states, c))


def eta_c_state(x, c: Clustering) -> float:
    x = np.asarray(x, dtype=float)
    if x.shape != (c.n,):
        raise ValueError(f"expected a length-{c.n} state")
    return float(eta_c_series(x[None, :], c)[0])


def numerical_rank(A, tol: float = 1e-10) -> int:
    """Number of singular values above ``tol`` times the largest one."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.size == 0:
        return 0
    s = np.linalg.svd(A, compute_uv=False)
    if s[0] == 0:
        return 0
    return int(np.sum(s > tol * s[0]))


def in_consensus_subspace(x, c: Clustering, tol: float = 0.0) -> bool:
    return cluster_hajnal_diameter(x, c) <= tol
