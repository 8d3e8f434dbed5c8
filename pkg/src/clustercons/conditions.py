"""Checkers for the standing assumptions and the separation conditions.

Verdicts are strings: ``"pass"``, ``"fail"``, ``"indeterminate"`` and, for
conditions that only make sense on an infinite horizon, ``"pass-on-horizon"``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .dynamics import (
    DEFAULT_STEP,
    InputSignal,
    input_running_integral,
    integrate_state,
    schedule_grid,
    transition_matrix,
)
from .graph import (
    Clustering,
    CouplingSchedule,
    Segment,
    delta_edges,
    has_cluster_spanning_tree,
    integrate_weights,
    spanning_tree_bottleneck,
)
from .measures import cluster_hajnal_series, eta_series, numerical_rank

PASSING = ("pass", "pass-on-horizon")
_CHUNK = 2048


@dataclass
class ConditionReport:
    assumption: str
    verdict: str
    evidence: dict = field(default_factory=dict)
    parameters: dict = field(default_factory=dict)
    series: dict = field(default_factory=dict, repr=False)

    @property
    def passed(self) -> bool:
        return self.verdict in PASSING

    def to_dict(self) -> dict:
        return {
            "assumption": self.assumption,
            "verdict": self.verdict,
            "evidence": _jsonable(self.evidence),
            "parameters": _jsonable(self.parameters),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if np.isfinite(v) else str(v)
    return obj


def _grid_spec(grid) -> dict:
    grid = np.asarray(grid)
    return {"t_start": float(grid[0]), "t_end": float(grid[-1]), "nodes": int(grid.size)}


def _sampled_laplacians(L, grid):
    """Yield ``(times, stack of L(t))`` chunks for a schedule or a callable."""
    grid = np.asarray(grid, dtype=float)
    if isinstance(L, CouplingSchedule):
        seg = L.segment_index(grid)
        for k in np.unique(seg):
            ts = grid[seg == k]
            for c0 in range(0, ts.size, _CHUNK):
                chunk = ts[c0 : c0 + _CHUNK]
                w = L.weight(int(k), chunk)
                yield chunk, w[:, None, None] * L.segments[int(k)].generator[None]
    else:
        for c0 in range(0, grid.size, _CHUNK):
            chunk = grid[c0 : c0 + _CHUNK]
            yield chunk, np.stack([np.asarray(L(t), dtype=float) for t in chunk])


def _default_grid(schedule, grid, h):
    if grid is not None:
        return np.asarray(grid, dtype=float)
    return schedule_grid(schedule, schedule.t0, schedule.horizon, h)


# ---------------------------------------------------------------------------
# A1: Metzler, zero row sums
# ---------------------------------------------------------------------------


def check_A1(L, grid=None, tol: float = 1e-9, h: float = DEFAULT_STEP) -> ConditionReport:
    """``L`` is a :class:`CouplingSchedule` or a callable ``t -> matrix``; a
    callable needs an explicit ``grid``."""
    if grid is None and not isinstance(L, CouplingSchedule):
        raise ValueError("a sampling grid is required for callable L")
    grid = _default_grid(L, grid, h)
    worst_sum, min_off = 0.0, np.inf
    offending = None
    for ts, Ls in _sampled_laplacians(L, grid):
        n = Ls.shape[1]
        rs = np.abs(Ls.sum(axis=2))
        off = np.where(np.eye(n, dtype=bool)[None], np.inf, Ls)
        worst_sum = max(worst_sum, float(rs.max()))
        min_off = min(min_off, float(off.min()))
        if offending is None:
            bad = (rs > tol) | (off.min(axis=2) < -tol)
            if bad.any():
                ti, row = np.argwhere(bad)[0]
                offending = {"t": float(ts[ti]), "row": int(row),
                             "row_sum": float(Ls[ti, row].sum()),
                             "min_off_diagonal": float(off[ti, row].min())}
    verdict = "pass" if offending is None else "fail"
    return ConditionReport(
        "A1", verdict,
        {"max_abs_row_sum": worst_sum, "min_off_diagonal": min_off, "first_violation": offending},
        {"tol": tol, "grid": _grid_spec(grid)},
    )


# ---------------------------------------------------------------------------
# A2: inter-cluster common influence
# ---------------------------------------------------------------------------


class CommonInfluenceError(ValueError):
    """Raised when the row partial sums disagree inside a cluster."""

    def __init__(self, deviation: float, worst: dict):
        self.deviation = deviation
        self.worst = worst
        super().__init__(
            "inter-cluster common influence violated: deviation {dev:.3g} at t={t:.6g}, "
            "p={p}, q={q}, rows i={i}, i'={i2}".format(dev=deviation, **worst)
        )


@dataclass
class CommonInfluenceSchedule:
    """``K x K`` time-varying matrix ``B(t)`` sharing the segments of the
    underlying coupling schedule."""

    schedule: CouplingSchedule
    clustering: Clustering
    max_deviation: float

    def at(self, t: float) -> np.ndarray:
        k = int(self.schedule.segment_index(t))
        return float(self.schedule.weight(k, t)) * self.schedule.segments[k].generator


def extract_common_influence(
    schedule: CouplingSchedule, c: Clustering, grid=None, tol: float = 1e-9, h: float = DEFAULT_STEP
) -> CommonInfluenceSchedule:
    """Check the partial sums ``sum_{j in C_q} L_ij(t)`` agree over ``i in C_p``
    at every grid time, and return ``B(t)``.

    Raises :class:`CommonInfluenceError` naming the worst ``(t, p, q, i, i')``.
    """
    if c.n != schedule.n:
        raise ValueError(f"clustering has {c.n} vertices, schedule {schedule.n}")
    grid = _default_grid(schedule, grid, h)
    ind = c.indicator()
    worst_dev, worst = 0.0, None
    structural = []
    for seg in schedule.segments:
        R = seg.generator @ ind
        structural.append(np.stack([R[list(m)].mean(axis=0) for m in c.members]))
    mismatch = 0.0
    seg_of = schedule.segment_index(grid)
    for k in np.unique(seg_of):
        k = int(k)
        ts_all = grid[seg_of == k]
        G = schedule.segments[k].generator
        for c0 in range(0, ts_all.size, _CHUNK):
            ts = ts_all[c0 : c0 + _CHUNK]
            w = schedule.weight(k, ts)
            R = (w[:, None, None] * G[None]) @ ind
            for p, members in enumerate(c.members):
                Rp = R[:, list(members), :]
                spread = Rp.max(axis=1) - Rp.min(axis=1)
                ti, q = np.unravel_index(np.argmax(spread), spread.shape)
                if worst is None or spread[ti, q] > worst_dev:
                    worst_dev = float(spread[ti, q])
                    worst = {"t": float(ts[ti]), "p": p, "q": int(q),
                             "i": members[int(np.argmax(Rp[ti, :, q]))],
                             "i2": members[int(np.argmin(Rp[ti, :, q]))]}
            Bs = np.stack([R[:, list(m), :].mean(axis=1) for m in c.members], axis=1)
            mismatch = max(mismatch, float(np.abs(Bs - w[:, None, None] * structural[k][None]).max()))
    if worst_dev > tol:
        raise CommonInfluenceError(worst_dev, worst)
    segs = [Segment(np.where(np.eye(c.K, dtype=bool), 0.0, Bk), s.profile)
            for Bk, s in zip(structural, schedule.segments)]
    B = CouplingSchedule(schedule.times, segs)
    return CommonInfluenceSchedule(B, c, max(worst_dev, mismatch))


def check_A2(schedule: CouplingSchedule, c: Clustering, grid=None, tol: float = 1e-9,
             h: float = DEFAULT_STEP) -> tuple[ConditionReport, CommonInfluenceSchedule | None]:
    grid = _default_grid(schedule, grid, h)
    params = {"tol": tol, "grid": _grid_spec(grid)}
    try:
        B = extract_common_influence(schedule, c, grid, tol)
    except CommonInfluenceError as err:
        return ConditionReport("A2", "fail", {"max_deviation": err.deviation, "worst": err.worst},
                               params), None
    first = B.schedule.segments[0].generator
    return ConditionReport("A2", "pass", {"max_deviation": B.max_deviation,
                                          "B_first_segment": first}, params), B


# ---------------------------------------------------------------------------
# A3: inputs
# ---------------------------------------------------------------------------


def check_A3(input: InputSignal, t0: float, T: float, h: float = DEFAULT_STEP,
             threshold: float = 1e-3, tail_fraction: float = 0.2) -> ConditionReport:
    """Intra-cluster identity holds by construction of :class:`InputSignal`;
    checks finiteness, bounded running integral and that each input does not
    vanish on the tail window."""
    ri = input_running_integral(input, t0, T, h, tail_fraction, threshold)
    finite = bool(np.all(np.isfinite(ri.values)) and np.all(np.isfinite(ri.integrals)))
    bounded = not bool(ri.unbounded_growth.any())
    nonvanishing = bool(np.all(ri.tail_sup > threshold))
    verdict = "pass" if finite and bounded and nonvanishing else "fail"
    return ConditionReport(
        "A3", verdict,
        {"intra_cluster_identical": True, "finite": finite, "bounded_integral": bounded,
         "nonvanishing": nonvanishing, "sup_input": ri.sup_input,
         "sup_integral": ri.sup_integral, "tail_sup": ri.tail_sup,
         "unbounded_growth": ri.unbounded_growth},
        {"t0": t0, "T": T, "h": h, "threshold": threshold, "tail_fraction": tail_fraction},
    )


# ---------------------------------------------------------------------------
# A4: delta-cluster-spanning trees on windows
# ---------------------------------------------------------------------------


def _subwindow(cum, a, b, c, delta, M1):
    W = cum[b] - cum[a]
    off = W[~np.eye(W.shape[0], dtype=bool)]
    tree = has_cluster_spanning_tree(delta_edges(W, delta), c)[0]
    below = bool(off.size == 0 or off.max() < M1)
    return W, tree, below


def check_A4(
    schedule: CouplingSchedule,
    c: Clustering,
    delta: float,
    M1: float,
    policy: str = "greedy",
    subwindow_intervals: int = 3,
    h: float = DEFAULT_STEP,
    min_windows: int = 1,
) -> ConditionReport:
    """Search the horizon for windows made of ``n - 1`` consecutive
    sub-windows, each carrying a delta-cluster-spanning tree with every
    integrated weight below ``M1``.

    Sub-windows are unions of whole switching intervals. ``policy="fixed"``
    uses ``subwindow_intervals`` intervals per sub-window and tiles the
    horizon; ``policy="greedy"`` grows each sub-window until a tree appears
    (or ``M1`` is exceeded). Failing windows are skipped, since the windows
    need not be contiguous. The achieved ``delta_k`` of a passing window is
    the smallest spanning-tree bottleneck over its sub-windows.
    """
    if policy not in ("greedy", "fixed"):
        raise ValueError(f"unknown window policy {policy!r}")
    n = schedule.n
    S = len(schedule.segments)
    per = [integrate_weights(schedule, schedule.times[k], schedule.times[k + 1], h) for k in range(S)]
    cum = np.concatenate([np.zeros((1, n, n)), np.cumsum(per, axis=0)])
    parts = max(n - 1, 1)
    windows = []
    cursor = 0
    while cursor < S:
        subs, ok, a = [], True, cursor
        for _ in range(parts):
            if a >= S:
                ok = None
                break
            if policy == "fixed":
                b = a + subwindow_intervals
                if b > S:
                    ok = None
                    break
                W, tree, below = _subwindow(cum, a, b, c, delta, M1)
            else:
                b = a + 1
                while True:
                    W, tree, below = _subwindow(cum, a, b, c, delta, M1)
                    if (tree and below) or not below or b == S:
                        break
                    b += 1
                if below and not tree:
                    ok = None
                    break
            good = tree and below
            subs.append({"start": float(schedule.times[a]), "end": float(schedule.times[b]),
                         "tree": tree, "below_M1": below,
                         "bottleneck": spanning_tree_bottleneck(W, c) if good else 0.0})
            a = b
            if not good:
                ok = False
                break
        if ok is None:
            windows.append({"start": float(schedule.times[cursor]), "complete": False,
                            "passed": False, "subwindows": subs})
            break
        dk = min(s["bottleneck"] for s in subs) if ok else 0.0
        windows.append({"start": float(schedule.times[cursor]), "end": float(schedule.times[a]),
                        "complete": True, "passed": bool(ok), "delta_k": dk, "subwindows": subs})
        cursor = a if a > cursor else cursor + 1
    complete = [w for w in windows if w["complete"]]
    passing = [w for w in complete if w["passed"]]
    dks = np.array([min(w["delta_k"], 1e300) for w in passing])
    partial = np.cumsum(dks ** (n - 1)) if dks.size else np.array([])
    verdict = "pass-on-horizon" if len(passing) >= min_windows else "fail"
    return ConditionReport(
        "A4", verdict,
        {"windows_checked": len(complete), "windows_passed": len(passing),
         "delta_k": dks, "partial_sums": partial, "windows": windows},
        {"delta": delta, "M1": M1, "policy": policy, "subwindow_intervals": subwindow_intervals,
         "h": h, "min_windows": min_windows},
    )


def lemma2_bound(delta: float, n: int, M1: float) -> float:
    """``min(1, delta) * exp(-(n - 1) * M1)``."""
    if delta < 0 or n < 2 or M1 < 0:
        raise ValueError("need delta >= 0, n >= 2, M1 > 0")
    return min(1.0, delta) * float(np.exp(-(n - 1) * M1))


# ---------------------------------------------------------------------------
# separation conditions
# ---------------------------------------------------------------------------


def _tail(times, tail_fraction):
    times = np.asarray(times, dtype=float)
    start = times[-1] - tail_fraction * (times[-1] - times[0])
    return times >= start, float(start)


def separation_condition(times, Z2, delta_prime: float = 0.05,
                         tail_fraction: float = 0.5) -> ConditionReport:
    """Estimate ``limsup eta(Z2(t))`` by the maximum over the tail window."""
    Z2 = np.asarray(Z2, dtype=float)
    etas = eta_series(Z2)
    mask, start = _tail(times, tail_fraction)
    est = float(etas[mask].max())
    return ConditionReport(
        "separation", "pass" if est >= delta_prime else "fail",
        {"limsup_estimate": est, "tail_start": start},
        {"delta_prime": delta_prime, "tail_fraction": tail_fraction},
        series={"times": np.asarray(times), "eta": etas},
    )


def corollary1_rank_condition(times, W, tol: float = 1e-8,
                              tail_fraction: float = 0.5) -> ConditionReport:
    """Pass iff the numerical rank of ``W(t)`` reaches ``K`` on the tail."""
    W = np.asarray(W, dtype=float)
    K = W.shape[-1]
    mask, start = _tail(times, tail_fraction)
    ranks = np.array([numerical_rank(M, tol) for M in W[mask]])
    best = int(ranks.max()) if ranks.size else 0
    return ConditionReport(
        "rank", "pass" if best == K else "fail",
        {"max_tail_rank": best, "K": K, "tail_start": start},
        {"tol": tol, "tail_fraction": tail_fraction},
    )


# ---------------------------------------------------------------------------
# invariance and projection radius
# ---------------------------------------------------------------------------


def check_invariance(schedule: CouplingSchedule, input: InputSignal | None, c: Clustering, x0,
                     T: float | None = None, h: float = DEFAULT_STEP) -> float:
    """Integrate from ``x0`` in the consensus subspace and return the largest
    cluster Hajnal diameter along the run."""
    x0 = np.asarray(x0, dtype=float)
    if cluster_hajnal_series(x0[None], c)[0] > 1e-12:
        raise ValueError("x0 is not in the cluster consensus subspace")
    traj = integrate_state(schedule, input, x0, schedule.t0, T, h)
    return float(cluster_hajnal_series(traj.states, c).max())


class ProjectionError(ValueError):
    pass


def consensus_basis(c: Clustering) -> np.ndarray:
    """Cluster indicator columns followed by ``e_i - e_first(p)`` for every
    non-first member ``i`` of each cluster."""
    cols = [c.indicator()]
    for members in c.members:
        for i in members[1:]:
            v = np.zeros(c.n)
            v[i], v[members[0]] = 1.0, -1.0
            cols.append(v[:, None])
    return np.hstack(cols)


@dataclass
class ProjectionRadius:
    rho: float
    lower_left: float
    times: np.ndarray
    block_norms: np.ndarray


def project_transition(phi: np.ndarray, c: Clustering) -> tuple[np.ndarray, float]:
    """``(Phi^_22, ||Phi^_21||_inf)`` for ``Phi^ = P^{-1} Phi P``."""
    P = consensus_basis(c)
    hat = np.linalg.solve(P, phi @ P)
    K = c.K
    ll = hat[K:, :K]
    return hat[K:, K:], float(np.abs(ll).sum(axis=1).max()) if ll.size else 0.0


def projection_radius_from_phi(phi: np.ndarray, c: Clustering, span: float,
                               tol: float = 1e-8) -> tuple[float, float]:
    block, ll = project_transition(phi, c)
    if ll > tol:
        raise ProjectionError(f"lower-left block norm {ll:.3g} exceeds {tol:g}; A2 violated")
    if block.size == 0:
        return 0.0, ll
    norm = float(np.abs(block).sum(axis=1).max())
    return norm ** (1.0 / span), ll


def projection_radius_estimate(schedule: CouplingSchedule, c: Clustering, t0: float | None = None,
                               T: float | None = None, h: float = DEFAULT_STEP,
                               samples: int = 200, tol: float = 1e-8) -> ProjectionRadius:
    """``rho = ||Phi^_22(T, t0)||_inf ** (1 / (T - t0))`` together with the
    block norm decay series."""
    t0 = schedule.t0 if t0 is None else t0
    T = schedule.horizon if T is None else T
    steps = max(1, int(round((T - t0) / h)))
    tm = transition_matrix(schedule, t0, T, h, record=max(1, steps // samples))
    norms, worst_ll = [], 0.0
    for phi in tm.samples:
        block, ll = project_transition(phi, c)
        worst_ll = max(worst_ll, ll)
        norms.append(float(np.abs(block).sum(axis=1).max()) if block.size else 0.0)
    if worst_ll > tol:
        raise ProjectionError(f"lower-left block norm {worst_ll:.3g} exceeds {tol:g}; A2 violated")
    rho = 0.0 if c.K == c.n else norms[-1] ** (1.0 / (T - t0))
    return ProjectionRadius(rho, worst_ll, tm.times, np.array(norms))
