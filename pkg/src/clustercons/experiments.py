"""Seeded experiments on the two switching graph models.

A run draws two graph realizations, a random switching schedule with
``U(0, 1)`` dwell times and sine-bump weights, per-cluster input gains
``alpha_p ~ U(0, alpha_max)`` and an initial state in ``[-1, 1]^n``, in that
order from one ``numpy`` generator. Runs with the same seed and different
``alpha_max`` therefore share schedule and initial state.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .conditions import (
    ConditionReport,
    ProjectionError,
    _jsonable,
    check_A1,
    check_A2,
    check_A3,
    check_A4,
    corollary1_rank_condition,
    projection_radius_from_phi,
    separation_condition,
)
from .dynamics import (
    SCALAR_INPUTS,
    InputSignal,
    Trajectory,
    check_row_sums,
    forced_response_series,
    integrate_linear,
    schedule_grid,
    write_csv,
)
from .graph import (
    Adjacency,
    Clustering,
    CouplingSchedule,
    Profile,
    Segment,
    adjacency_matrix,
    make_bipartite_random,
    make_ring_lattice,
)
from .measures import cluster_hajnal_series, cluster_means, eta_c_series
from .svg import line_chart

MODELS = ("ring_lattice", "bipartite_random")


class ConfigError(ValueError):
    def __init__(self, field_name: str, message: str):
        self.field = field_name
        super().__init__(f"config field {field_name!r}: {message}")


@dataclass
class ExperimentConfig:
    model: str = "ring_lattice"
    N: int = 16
    r: int = 2
    m: int = 4
    s: int = 2
    K: int = 2
    T: float = 50.0
    h: float = 1e-3
    seed: int = 0
    delta: float = 1.0
    M1: float = 10.0
    delta_prime: float = 0.05
    alpha_max: float = 10.0
    input_kind: str = "sin"
    window_policy: str = "greedy"
    out_dir: str = "runs"

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.model not in MODELS:
            raise ConfigError("model", f"must be one of {MODELS}, got {self.model!r}")
        for name in ("N", "r", "m", "s", "K", "seed"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)):
                raise ConfigError(name, f"must be an integer, got {v!r}")
        for name in ("T", "h", "delta", "M1", "delta_prime", "alpha_max"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not np.isfinite(v):
                raise ConfigError(name, f"must be a finite number, got {v!r}")
        if self.T <= 0:
            raise ConfigError("T", "must be positive")
        if self.h <= 0 or self.h > self.T:
            raise ConfigError("h", "must be positive and at most T")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed", "must fit in 64 bits")
        if self.alpha_max < 0:
            raise ConfigError("alpha_max", "must be nonnegative")
        if self.delta < 0:
            raise ConfigError("delta", "must be nonnegative")
        if self.M1 <= 0:
            raise ConfigError("M1", "must be positive")
        if self.input_kind not in SCALAR_INPUTS:
            raise ConfigError("input_kind", f"must be one of {sorted(SCALAR_INPUTS)}")
        if self.window_policy not in ("greedy", "fixed"):
            raise ConfigError("window_policy", "must be 'greedy' or 'fixed'")
        if self.model == "ring_lattice":
            if self.N < 1 or self.K < 1 or self.N % self.K:
                raise ConfigError("K", f"must be positive and divide N={self.N}")
            if self.r < 1 or 2 * self.r >= self.N:
                raise ConfigError("r", f"need 1 <= r and 2r < N={self.N}")
        else:
            if self.N < 2 or self.N % 2:
                raise ConfigError("N", "must be a positive even integer for bipartite_random")
            if self.K != 2:
                raise ConfigError("K", "bipartite_random has exactly two clusters")
            if not (0 < self.s < self.m):
                raise ConfigError("s", "need 0 < s < m")
            if self.s > self.N // 2 - 1:
                raise ConfigError("s", "need s <= N/2 - 1")
            if self.m - self.s > self.N // 2:
                raise ConfigError("m", "need m - s <= N/2")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigError("<root>", "config must be a JSON object")
        known = {f.name for f in dataclasses.fields(cls)}
        for key in d:
            if key not in known:
                raise ConfigError(key, "unknown field")
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            try:
                d = json.load(fh)
            except json.JSONDecodeError as err:
                raise ConfigError("<root>", f"invalid JSON: {err}") from None
        return cls.from_dict(d)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def replace(self, **kw) -> "ExperimentConfig":
        return dataclasses.replace(self, **kw)


# ---------------------------------------------------------------------------
# model construction
# ---------------------------------------------------------------------------


def permute_within_clusters(adj: Adjacency, c: Clustering, rng: np.random.Generator) -> Adjacency:
    """Relabel vertices by a random permutation mapping each cluster onto
    itself; neighbor counts per cluster are preserved."""
    perm = np.arange(c.n)
    for members in c.members:
        members = np.asarray(members)
        perm[members] = rng.permutation(members)
    return {int(perm[i]): frozenset(int(perm[j]) for j in nbrs) for i, nbrs in adj.items()}


def make_realizations(config: ExperimentConfig, rng: np.random.Generator):
    if config.model == "ring_lattice":
        adj, c = make_ring_lattice(config.N, config.r, config.K)
        return [adj, permute_within_clusters(adj, c, rng)], c
    a1, c = make_bipartite_random(config.N, config.m, config.s, rng)
    a2, _ = make_bipartite_random(config.N, config.m, config.s, rng)
    return [a1, a2], c


def build_switching_schedule(
    realizations: Sequence[Adjacency], rng: np.random.Generator, t0: float, T: float
) -> CouplingSchedule:
    """Dwell times ``U(0, 1)`` until ``T`` is covered; each segment picks a
    realization uniformly and carries ``sin(pi (t - t_{k-1}) / dt_k)``. The
    last segment is cut at ``T``."""
    if len(realizations) < 1:
        raise ValueError("need at least one realization")
    mats = [adjacency_matrix(a) for a in realizations]
    if len({m.shape for m in mats}) != 1:
        raise ValueError("realizations must have the same size")
    times, segs = [t0], []
    t = t0
    while t < T:
        dt = 0.0
        while dt == 0.0:
            dt = rng.uniform(0.0, 1.0)
        choice = int(rng.integers(len(mats)))
        segs.append(Segment(mats[choice], Profile("sine_bump", duration=dt)))
        t = t + dt
        times.append(min(t, T))
    return CouplingSchedule(times, segs)


# ---------------------------------------------------------------------------
# simulation
# ---------------------------------------------------------------------------


@dataclass
class Simulation:
    config: ExperimentConfig
    clustering: Clustering
    realizations: list
    schedule: CouplingSchedule
    input: InputSignal
    x0: np.ndarray
    trajectory: Trajectory
    phi: np.ndarray | None
    velocity: np.ndarray
    delta_c: np.ndarray
    eta_c: np.ndarray
    eta_c_v: np.ndarray

    @property
    def times(self) -> np.ndarray:
        return self.trajectory.times

    @property
    def alpha(self) -> np.ndarray:
        return self.input.alpha

    @property
    def eta_c_plus_v(self) -> np.ndarray:
        return self.eta_c + self.eta_c_v

    def tail_mask(self, fraction: float = 0.5) -> np.ndarray:
        t = self.times
        return t >= t[-1] - fraction * (t[-1] - t[0])


def velocity(schedule: CouplingSchedule, input: InputSignal | None, times, states) -> np.ndarray:
    """``L(t) x(t) + I(t)`` at every sample (right-continuous in ``t``)."""
    times = np.asarray(times)
    V = np.empty_like(states)
    seg = schedule.segment_index(times)
    for k in np.unique(seg):
        sel = seg == k
        w = schedule.weight(int(k), times[sel])
        V[sel] = w[:, None] * (states[sel] @ schedule.segments[int(k)].generator.T)
    if input is not None:
        V += input.vertex_values(times)
    return V


def simulate(config: ExperimentConfig, with_transition: bool = True) -> Simulation:
    """Build the model from the seed and integrate ``x`` (and ``Phi(T, 0)``
    when ``with_transition``)."""
    rng = np.random.default_rng(config.seed)
    realizations, c = make_realizations(config, rng)
    schedule = build_switching_schedule(realizations, rng, 0.0, config.T)
    alpha = rng.uniform(0.0, config.alpha_max, c.K)
    x0 = rng.uniform(-1.0, 1.0, c.n)
    inp = InputSignal.factored(c, alpha, config.input_kind)
    grid = schedule_grid(schedule, 0.0, config.T, config.h)
    n = c.n
    times, X, _ = integrate_linear(schedule, x0, grid, inp.vertex_values, "all")
    phi = None
    if with_transition:
        phi = integrate_linear(schedule, np.eye(n), grid, None, "last")[2]
        check_row_sums(phi[None], config.h)
    traj = Trajectory(times, X, config.h)
    V = velocity(schedule, inp, times, X)
    return Simulation(
        config, c, realizations, schedule, inp, x0, traj, phi, V,
        cluster_hajnal_series(X, c), eta_c_series(X, c), eta_c_series(V, c),
    )


def zero_crossings(states, c: Clustering) -> dict[str, int]:
    """Sign changes of each pairwise difference of cluster means."""
    M = cluster_means(states, c)
    out = {}
    for p in range(c.K):
        for q in range(p + 1, c.K):
            s = np.sign(M[:, p] - M[:, q])
            s = s[s != 0]
            out[f"{p}-{q}"] = int(np.count_nonzero(s[1:] != s[:-1]))
    return out


# ---------------------------------------------------------------------------
# full run with reports and files
# ---------------------------------------------------------------------------


@dataclass
class RunReport:
    config: dict
    alpha: list
    final_delta_c: float
    eta_c_tail_max: float
    zero_crossings: dict
    conditions: list
    rho: float | None
    lower_left: float | None
    manifest: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    @property
    def failed(self) -> list[str]:
        return [c.assumption for c in self.conditions if not c.passed]

    def to_dict(self) -> dict:
        return _jsonable({
            "config": self.config,
            "alpha": self.alpha,
            "final_delta_c": self.final_delta_c,
            "eta_c_tail_max": self.eta_c_tail_max,
            "zero_crossings": self.zero_crossings,
            "conditions": [c.to_dict() for c in self.conditions],
            "rho": self.rho,
            "lower_left": self.lower_left,
            "manifest": self.manifest,
            "notes": self.notes,
        })

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_measures_csv(path, sim: Simulation) -> None:
    write_csv(path, ["t", "delta_c", "eta_c", "eta_c_plus_v"],
              np.column_stack([sim.times, sim.delta_c, sim.eta_c, sim.eta_c_plus_v]))


def plot_measures(out_dir, times, delta_c, eta_c, eta_c_plus_v) -> list[str]:
    out_dir = Path(out_dir)
    line_chart(out_dir / "delta_c.svg", times, {"Delta_C(x(t))": delta_c},
               "cluster Hajnal diameter (log10)", log=True, colors={"Delta_C(x(t))": "#d62728"})
    line_chart(out_dir / "eta_c.svg", times, {"eta_c(x(t))": eta_c}, "cluster separation",
               colors={"eta_c(x(t))": "#1f77b4"})
    line_chart(out_dir / "eta_c_plus_v.svg", times, {"eta_c(x)+eta_c(v)": eta_c_plus_v},
               "eta_c(x(t)) + eta_c(v(t))", colors={"eta_c(x)+eta_c(v)": "#2ca02c"})
    return ["delta_c.svg", "eta_c.svg", "eta_c_plus_v.svg"]


def plot_states(path, times, states, c: Clustering) -> None:
    colors = {f"x_{i}": ["#d62728", "#1f77b4", "#2ca02c", "#9467bd"][c.assignment[i] % 4]
              for i in range(c.n)}
    line_chart(path, times, {f"x_{i}": states[:, i] for i in range(c.n)}, "states by cluster",
               colors=colors, max_points=1000)


def run_experiment(config: ExperimentConfig, write: bool = True) -> RunReport:
    """Simulate, evaluate every checker and (optionally) write
    ``trajectory.csv``, ``measures.csv``, ``schedule.json``, SVG plots and
    ``report.json`` into ``out_dir/seed_<seed>``."""
    sim = simulate(config, with_transition=True)
    c, sched, grid = sim.clustering, sim.schedule, sim.times
    reports: list[ConditionReport] = [check_A1(sched, grid)]
    a2, B = check_A2(sched, c, grid)
    reports.append(a2)
    reports.append(check_A3(sim.input, 0.0, config.T, config.h))
    reports.append(check_A4(sched, c, config.delta, config.M1, config.window_policy, h=config.h))
    notes = ["eta_c uses cluster means as the cluster representative"]
    rho = ll = None
    if B is not None:
        stride = max(1, int(round(0.01 / config.h)))
        Wser = forced_response_series(B, sim.input.u, 0.0, config.T, config.h, record=stride)
        Z2 = Wser.samples @ sim.alpha
        reports.append(separation_condition(Wser.times, Z2, config.delta_prime))
        reports.append(corollary1_rank_condition(Wser.times, Wser.samples))
        try:
            rho, ll = projection_radius_from_phi(sim.phi, c, config.T)
            reports.append(ConditionReport("projection_radius", "pass" if rho < 1 else "fail",
                                           {"rho": rho, "lower_left": ll}))
        except ProjectionError as err:
            reports.append(ConditionReport("projection_radius", "fail", {"error": str(err)}))
    else:
        notes.append("A2 failed: quotient system, separation and projection radius not evaluated")
    report = RunReport(
        config=config.to_dict(),
        alpha=sim.alpha.tolist(),
        final_delta_c=float(sim.delta_c[-1]),
        eta_c_tail_max=float(sim.eta_c[sim.tail_mask()].max()),
        zero_crossings=zero_crossings(sim.trajectory.states, c),
        conditions=reports,
        rho=rho,
        lower_left=ll,
        notes=notes,
    )
    if write:
        out = Path(config.out_dir) / f"seed_{config.seed}"
        os.makedirs(out, exist_ok=True)
        files = ["trajectory.csv", "measures.csv", "schedule.json", "states.svg"]
        sim.trajectory.to_csv(out / "trajectory.csv")
        write_measures_csv(out / "measures.csv", sim)
        with open(out / "schedule.json", "w") as fh:
            json.dump(sched.to_dict(c), fh, sort_keys=True)
            fh.write("\n")
        plot_states(out / "states.svg", sim.times, sim.trajectory.states, c)
        files += plot_measures(out, sim.times, sim.delta_c, sim.eta_c, sim.eta_c_plus_v)
        report.manifest = {name: _sha256(out / name) for name in files}
        report.manifest["report.json"] = None
        with open(out / "report.json", "w") as fh:
            fh.write(report.to_json())
    return report
