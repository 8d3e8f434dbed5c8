"""Fixed-step RK4 integration of ``x' = L(t) x + I(t)`` and related systems.

All integrations run on a grid of step ``h`` starting at ``t0`` with every
switching instant of the schedule inserted as an extra node, so no step ever
straddles a discontinuity of ``L``. Within a step the segment's own profile is
used at both ends (left limit at the segment end).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .graph import Clustering, CouplingSchedule

DEFAULT_STEP = 1e-3
ROW_SUM_TOL = 1e-6


class IntegrationError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# inputs
# ---------------------------------------------------------------------------

SCALAR_INPUTS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "sin": np.sin,
    "cos": np.cos,
    "zero": np.zeros_like,
    "one": np.ones_like,
    "exp_decay": lambda t: np.exp(-t),
}


class InputSignal:
    """Intra-cluster identical inputs ``I_i(t) = I~_{p(i)}(t)``.

    ``fn`` maps a 1-d array of times to an ``(m, K)`` array of per-cluster
    values. Build instances with :meth:`factored`, :meth:`per_cluster` or
    :meth:`zero`.
    """

    def __init__(self, clustering: Clustering, fn, alpha=None, u=None, name: str | None = None):
        self.clustering = clustering
        self._fn = fn
        self.alpha = None if alpha is None else np.asarray(alpha, dtype=float)
        self.u = u
        self.name = name

    @classmethod
    def factored(cls, clustering: Clustering, alpha, u) -> "InputSignal":
        """``I~_p(t) = alpha_p * u(t)``; ``u`` may be a name from
        :data:`SCALAR_INPUTS`."""
        name = u if isinstance(u, str) else getattr(u, "__name__", None)
        if isinstance(u, str):
            u = SCALAR_INPUTS[u]
        alpha = np.asarray(alpha, dtype=float)
        if alpha.shape != (clustering.K,):
            raise ValueError(f"alpha must have length K={clustering.K}")

        def fn(t):
            return np.asarray(u(t), dtype=float)[:, None] * alpha[None, :]

        return cls(clustering, fn, alpha=alpha, u=u, name=name)

    @classmethod
    def per_cluster(cls, clustering: Clustering, fns: Sequence[Callable]) -> "InputSignal":
        if len(fns) != clustering.K:
            raise ValueError(f"need {clustering.K} cluster functions")

        def fn(t):
            return np.stack([np.asarray(f(t), dtype=float) * np.ones_like(t) for f in fns], axis=1)

        return cls(clustering, fn)

    @classmethod
    def zero(cls, clustering: Clustering) -> "InputSignal":
        return cls.factored(clustering, np.zeros(clustering.K), "zero")

    def cluster_values(self, t):
        scalar = np.ndim(t) == 0
        vals = self._fn(np.atleast_1d(np.asarray(t, dtype=float)))
        return vals[0] if scalar else vals

    def vertex_values(self, t):
        return self.cluster_values(t)[..., self.clustering.assignment]


# ---------------------------------------------------------------------------
# sampled results
# ---------------------------------------------------------------------------


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    h: float

    @property
    def t0(self) -> float:
        return float(self.times[0])

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def to_csv(self, path, prefix: str = "x") -> None:
        write_csv(path, ["t"] + [f"{prefix}_{i}" for i in range(self.states.shape[1])],
                  np.column_stack([self.times, self.states]))


@dataclass
class TransitionMatrix:
    """Samples of ``Phi(t, t0)`` (or ``Psi`` for a quotient system)."""

    times: np.ndarray
    samples: np.ndarray

    @property
    def final(self) -> np.ndarray:
        return self.samples[-1]


def write_csv(path, header: Sequence[str], rows: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) for v in row])


# ---------------------------------------------------------------------------
# grid and core stepper
# ---------------------------------------------------------------------------


def time_grid(t0: float, T: float, h: float, breaks: Sequence[float] = ()) -> np.ndarray:
    """Uniform grid ``t0 + k h`` ending exactly at ``T`` with ``breaks``
    inserted; nodes closer than ``1e-9 h`` to a break are merged into it."""
    if not h > 0:
        raise ValueError("step h must be positive")
    if T < t0:
        raise ValueError(f"T={T} < t0={t0}")
    eps = 1e-9 * h
    count = int(np.floor((T - t0) / h + 1e-9))
    pts = t0 + h * np.arange(count + 1)
    if T - pts[-1] > eps:
        pts = np.append(pts, T)
    else:
        pts[-1] = T
    breaks = np.asarray([b for b in breaks if t0 < b < T], dtype=float)
    if breaks.size == 0:
        return pts
    merged = np.union1d(pts, breaks)
    fixed = np.concatenate([[t0, T], breaks])
    close = np.flatnonzero(np.diff(merged) < eps)
    is_fixed = np.isin(merged, fixed)
    drop = []
    for i in close:
        if is_fixed[i] and is_fixed[i + 1]:
            continue
        drop.append(i + 1 if is_fixed[i] else i)
    return np.delete(merged, drop)


def schedule_grid(schedule: CouplingSchedule, t0: float, T: float, h: float) -> np.ndarray:
    if t0 < schedule.t0 or T > schedule.horizon:
        raise ValueError(
            f"[{t0}, {T}] not covered by schedule [{schedule.t0}, {schedule.horizon}]"
        )
    return time_grid(t0, T, h, schedule.times[1:-1])


_CHUNK = 4096


def _rk4_step_maps(G, hs, wl, wm, wr, forcing, tl, tm, tr, ndim):
    """Classical RK4 for ``y' = w(t) G y + F(t)`` regrouped as
    ``y_{s+1} = y_s + D_s y_s + g_s``.

    With ``a, b, c = h w`` at the left, middle and right nodes the stages
    collapse to polynomials in ``G``:
    ``D = [(a+4b+c) G + (ab+b^2+bc) G^2 + (ab^2+b^2 c)/2 G^3 + ab^2 c/4 G^4] / 6``.
    Keeping the increment separate from ``y`` rounds at the scale of ``h``.
    """
    a, b, c = hs * wl, hs * wm, hs * wr
    G2 = G @ G
    G3 = G2 @ G
    G4 = G3 @ G
    coef = np.stack([a + 4 * b + c, a * b + b * b + b * c, 0.5 * b * b * (a + c),
                     0.25 * a * b * b * c], axis=1) / 6.0
    D = np.einsum("sk,kij->sij", coef, np.stack([G, G2, G3, G4]))
    if forcing is None:
        return D, None
    shape = (-1,) + (1,) * ndim
    f1 = hs.reshape(shape) * np.asarray(forcing(tl), dtype=float)
    fm = hs.reshape(shape) * np.asarray(forcing(tm), dtype=float)
    fr = hs.reshape(shape) * np.asarray(forcing(tr), dtype=float)
    bb, cc = b.reshape(shape), c.reshape(shape)
    P3 = 0.25 * bb * bb * cc * f1
    P2 = 0.5 * bb * bb * f1 + 0.5 * bb * cc * fm + _apply(G, P3, ndim)
    P1 = bb * f1 + (bb + cc) * fm + _apply(G, P2, ndim)
    g = (f1 + 4.0 * fm + fr + _apply(G, P1, ndim)) / 6.0
    return D, g


def _apply(G, P, ndim):
    """``G @ P[s]`` for every step ``s``."""
    if ndim == 1:
        return P @ G.T
    return np.matmul(G[None], P)


def integrate_linear(
    schedule: CouplingSchedule,
    y0,
    grid: np.ndarray,
    forcing: Callable[[np.ndarray], np.ndarray] | None = None,
    record="all",
    observe: Callable[[np.ndarray], np.ndarray] | None = None,
):
    """RK4 for ``y' = L(t) y + F(t)`` over ``grid``; ``y`` is a vector or a
    matrix with ``n`` rows.

    ``forcing`` maps an array of ``m`` times to an array of shape
    ``(m,) + y.shape``. ``record`` is ``"all"``, ``"last"`` or an integer
    stride (the last node is always kept); ``observe(y)`` is stored instead
    of ``y`` when given. Returns ``(times, samples, final_state)``.
    """
    y = np.array(y0, dtype=float)
    if observe is None:
        observe = _identity
    if y.shape[0] != schedule.n:
        raise ValueError(f"state has {y.shape[0]} rows, schedule has {schedule.n} vertices")
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 1 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be a strictly increasing 1-d array")
    N = len(grid)
    keep = np.zeros(N, dtype=bool)
    if record == "all":
        keep[:] = True
    elif record == "last":
        keep[-1] = True
    else:
        keep[:: int(record)] = True
        keep[-1] = True
    out = np.empty((int(keep.sum()),) + np.shape(observe(y)))
    j = 0
    if keep[0]:
        out[0] = observe(y)
        j = 1
    t_start, t_end = grid[0], grid[-1]
    k_first = int(schedule.segment_index(t_start))
    for k in range(k_first, len(schedule.segments)):
        a = max(schedule.times[k], t_start)
        b = min(schedule.times[k + 1], t_end)
        if a >= t_end:
            break
        i0 = int(np.searchsorted(grid, a, side="left"))
        i1 = int(np.searchsorted(grid, b, side="left"))
        if i1 <= i0:
            continue
        seg = schedule.segments[k]
        G = seg.generator
        start = schedule.times[k]
        for c0 in range(i0, i1, _CHUNK):
            c1 = min(c0 + _CHUNK, i1)
            tl = grid[c0:c1]
            tr = grid[c0 + 1 : c1 + 1]
            hs = tr - tl
            tm = tl + 0.5 * hs
            D, g = _rk4_step_maps(G, hs, seg.profile(tl, start), seg.profile(tm, start),
                                  seg.profile(tr, start), forcing, tl, tm, tr, y.ndim)
            for s in range(c1 - c0):
                y = y + D[s] @ y
                if g is not None:
                    y += g[s]
                if keep[c0 + s + 1]:
                    out[j] = observe(y)
                    j += 1
        if not np.all(np.isfinite(y)):
            raise IntegrationError(
                f"non-finite state on segment {k} at t={grid[i1]:.6g} "
                f"(max |y| before overflow unknown; reduce h or check weights)"
            )
    return grid[keep], out, y


def _identity(y):
    return y


def _window(schedule: CouplingSchedule, t0, T):
    t0 = schedule.t0 if t0 is None else float(t0)
    T = schedule.horizon if T is None else float(T)
    return t0, T


def _as_schedule(B) -> CouplingSchedule:
    return getattr(B, "schedule", B)


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------


def integrate_state(
    schedule: CouplingSchedule,
    input: InputSignal | None,
    x0,
    t0: float | None = None,
    T: float | None = None,
    h: float = DEFAULT_STEP,
    record="all",
) -> Trajectory:
    """Solve ``x' = L(t) x + I(t)`` from ``x(t0) = x0``."""
    t0, T = _window(schedule, t0, T)
    grid = schedule_grid(schedule, t0, T, h)
    forcing = None if input is None else input.vertex_values
    if input is not None and input.clustering.n != schedule.n:
        raise ValueError("input clustering does not match schedule size")
    times, states, _ = integrate_linear(schedule, x0, grid, forcing, record)
    return Trajectory(times, states, h)


def check_row_sums(samples: np.ndarray, h: float) -> None:
    tol = ROW_SUM_TOL * max(1.0, h / DEFAULT_STEP)
    drift = np.max(np.abs(samples.sum(axis=-1) - 1.0))
    if drift > tol:
        raise IntegrationError(f"transition matrix row sums drifted by {drift:.3g} > {tol:.3g}")


def transition_matrix(
    schedule: CouplingSchedule,
    t0: float | None = None,
    t1: float | None = None,
    h: float = DEFAULT_STEP,
    record="all",
) -> TransitionMatrix:
    """``Phi(t, t0)`` from ``Phi' = L(t) Phi``, ``Phi(t0, t0) = I``.

    Row sums are monitored (never renormalised); drift beyond ``1e-6``
    (scaled with ``h / 1e-3``) raises :class:`IntegrationError`.
    """
    t0, t1 = _window(schedule, t0, t1)
    grid = schedule_grid(schedule, t0, t1, h)
    times, samples, _ = integrate_linear(schedule, np.eye(schedule.n), grid, None, record)
    check_row_sums(samples, h)
    return TransitionMatrix(times, samples)


def quotient_transition(B_schedule, t0=None, t1=None, h=DEFAULT_STEP, record="all") -> TransitionMatrix:
    """``Psi(t, t0)`` for ``z' = B(t) z``."""
    return transition_matrix(_as_schedule(B_schedule), t0, t1, h, record)


def _cluster_forcing(Itilde):
    if isinstance(Itilde, InputSignal):
        return Itilde.cluster_values
    return lambda t: np.asarray(Itilde(t), dtype=float)


def quotient_state(B_schedule, Itilde, z0, t0=None, T=None, h=DEFAULT_STEP, record="all") -> Trajectory:
    """Solve the quotient system ``z' = B(t) z + I~(t)``."""
    sched = _as_schedule(B_schedule)
    t0, T = _window(sched, t0, T)
    grid = schedule_grid(sched, t0, T, h)
    forcing = None if Itilde is None else _cluster_forcing(Itilde)
    times, states, _ = integrate_linear(sched, z0, grid, forcing, record)
    return Trajectory(times, states, h)


def quotient_forced_series(B_schedule, Itilde, t0=None, t=None, h=DEFAULT_STEP, record="all") -> Trajectory:
    """``Z2(s) = int_{t0}^{s} Psi(s, r) I~(r) dr`` sampled on the grid, via the
    forward ODE ``z' = B z + I~``, ``z(t0) = 0``."""
    K = _as_schedule(B_schedule).n
    return quotient_state(B_schedule, Itilde, np.zeros(K), t0, t, h, record)


def quotient_forced_response(B_schedule, Itilde, t0=None, t=None, h=DEFAULT_STEP) -> np.ndarray:
    return quotient_forced_series(B_schedule, Itilde, t0, t, h, record="last").final


def forced_response_series(B_schedule, u, t0=None, t=None, h=DEFAULT_STEP, record="all") -> TransitionMatrix:
    """``W(s) = int_{t0}^{s} Psi(s, r) u(r) dr`` via ``W' = B W + u I``,
    ``W(t0) = 0``."""
    sched = _as_schedule(B_schedule)
    if isinstance(u, str):
        u = SCALAR_INPUTS[u]
    t0, t = _window(sched, t0, t)
    K = sched.n
    eye = np.eye(K)
    grid = schedule_grid(sched, t0, t, h)

    def forcing(ts):
        return np.asarray(u(ts), dtype=float)[:, None, None] * eye[None]

    times, samples, _ = integrate_linear(sched, np.zeros((K, K)), grid, forcing, record)
    return TransitionMatrix(times, samples)


def forced_response_matrix(B_schedule, u, t0=None, t=None, h=DEFAULT_STEP) -> np.ndarray:
    return forced_response_series(B_schedule, u, t0, t, h, record="last").final


@dataclass
class RunningIntegral:
    times: np.ndarray
    values: np.ndarray
    integrals: np.ndarray
    sup_input: np.ndarray
    sup_integral: np.ndarray
    tail_sup: np.ndarray
    unbounded_growth: np.ndarray


def input_running_integral(
    input: InputSignal, t0: float, T: float, h: float = DEFAULT_STEP, tail_fraction: float = 0.2,
    threshold: float = 1e-3,
) -> RunningIntegral:
    """Trapezoidal running integral of each cluster input on a uniform grid.

    A cluster is flagged for unbounded growth when its input never changes
    sign and stays above ``threshold`` in magnitude on the tail window; the
    integral then grows at least linearly.
    """
    times = time_grid(t0, T, h)
    vals = input.cluster_values(times)
    integ = cumulative_trapezoid(vals, times, axis=0, initial=0.0)
    tail = times >= T - tail_fraction * (T - t0)
    tail_sup = np.max(np.abs(vals[tail]), axis=0)
    signs = np.sign(vals)
    one_signed = np.array(
        [np.all(col[col != 0] > 0) or np.all(col[col != 0] < 0) for col in signs.T]
    )
    tail_floor = np.min(np.abs(vals[tail]), axis=0)
    growth = one_signed & (tail_floor > threshold)
    return RunningIntegral(
        times, vals, integ, np.max(np.abs(vals), axis=0), np.max(np.abs(integ), axis=0),
        tail_sup, growth,
    )
