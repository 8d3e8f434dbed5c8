"""Random instance generators and the seeded property suites behind
``clustercons props``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .conditions import check_invariance, extract_common_influence
from .dynamics import (
    InputSignal,
    integrate_state,
    quotient_state,
    transition_matrix,
)
from .graph import Clustering, CouplingSchedule, Profile, Segment, integrate_weights
from .measures import cluster_ergodicity, cluster_hajnal_diameter, cluster_means


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------


def random_clustering(rng: np.random.Generator, n: int) -> Clustering:
    K = int(rng.integers(1, n + 1))
    labels = np.concatenate([np.arange(K), rng.integers(0, K, n - K)])
    return Clustering(rng.permutation(labels))


def random_stochastic(rng: np.random.Generator, n: int, density: float = 0.6) -> np.ndarray:
    A = rng.random((n, n)) * (rng.random((n, n)) < density)
    for i in range(n):
        if A[i].sum() == 0:
            A[i, rng.integers(n)] = 1.0
    return A / A.sum(axis=1, keepdims=True)


def random_lumpable_stochastic(rng: np.random.Generator, c: Clustering, density: float = 0.6):
    """Stochastic ``A`` whose cluster-block row sums ``sum_{k in C_q} A_ik``
    are the same for every ``i`` in ``C_p``."""
    beta = random_stochastic(rng, c.K, density)
    A = np.zeros((c.n, c.n))
    for p, rows in enumerate(c.members):
        for q, cols in enumerate(c.members):
            if beta[p, q] == 0:
                continue
            for i in rows:
                w = rng.random(len(cols)) * (rng.random(len(cols)) < density)
                if w.sum() == 0:
                    w[rng.integers(len(cols))] = 1.0
                A[i, list(cols)] = beta[p, q] * w / w.sum()
    return A


def _random_profile(rng, length):
    if rng.random() < 0.5:
        return Profile("constant", value=float(rng.uniform(0.2, 1.5)))
    return Profile("sine_bump", duration=float(length))


def random_schedule(rng: np.random.Generator, n: int, T: float, max_segments: int = 4,
                    density: float = 0.5, t0: float = 0.0) -> CouplingSchedule:
    """Random edge sets with weights in ``[0.2, 1.5]`` on 1..max_segments
    segments, each with a constant or sine-bump profile."""
    S = int(rng.integers(1, max_segments + 1))
    cuts = np.sort(rng.uniform(t0, T, S - 1))
    times = np.concatenate([[t0], cuts, [T]])
    segs = []
    for k in range(S):
        mask = rng.random((n, n)) < density
        W = rng.uniform(0.2, 1.5, (n, n)) * mask
        segs.append(Segment(W, _random_profile(rng, times[k + 1] - times[k])))
    return CouplingSchedule(times, segs)


def random_lumpable_schedule(rng: np.random.Generator, c: Clustering, T: float,
                             max_segments: int = 4, density: float = 0.5,
                             t0: float = 0.0) -> CouplingSchedule:
    """Random schedule with inter-cluster common influence w.r.t. ``c``.

    Intra-cluster weights are free; for each vertex ``i`` in ``C_p`` and each
    ``q != p`` the weights into ``i`` from ``C_q`` sum to a common ``b_pq``.
    """
    S = int(rng.integers(1, max_segments + 1))
    times = np.concatenate([[t0], np.sort(rng.uniform(t0, T, S - 1)), [T]])
    segs = []
    for k in range(S):
        W = np.zeros((c.n, c.n))
        for p, rows in enumerate(c.members):
            for i in rows:
                others = [j for j in rows if j != i]
                if others:
                    W[i, others] = rng.uniform(0.2, 1.5, len(others)) * (
                        rng.random(len(others)) < density)
        for p, rows in enumerate(c.members):
            for q, cols in enumerate(c.members):
                if p == q or rng.random() > density:
                    continue
                b = rng.uniform(0.2, 2.0)
                for i in rows:
                    w = rng.random(len(cols)) * (rng.random(len(cols)) < 0.7)
                    if w.sum() == 0:
                        w[rng.integers(len(cols))] = 1.0
                    W[i, list(cols)] = b * w / w.sum()
        segs.append(Segment(W, _random_profile(rng, times[k + 1] - times[k])))
    return CouplingSchedule(times, segs)


def consensus_state(rng: np.random.Generator, c: Clustering) -> np.ndarray:
    return rng.uniform(-1, 1, c.K)[c.assignment]


# ---------------------------------------------------------------------------
# suites
# ---------------------------------------------------------------------------


@dataclass
class SuiteResult:
    name: str
    cases: int
    violations: int
    worst: float

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"{status} {self.name}: {self.cases} cases, {self.violations} violations, "
                f"worst margin {self.worst:.3e}")


def hajnal_suite(rng, cases: int) -> SuiteResult:
    """``Delta_C(AB) <= (1 - mu_C(A)) Delta_C(B)`` for stochastic ``A`` with
    inter-cluster common influence (the class the dynamics produces)."""
    bad, worst = 0, -np.inf
    for _ in range(cases):
        n = int(rng.integers(2, 9))
        c = random_clustering(rng, n)
        A = random_lumpable_stochastic(rng, c)
        B = rng.normal(size=(n, int(rng.integers(1, n + 1))))
        gap = cluster_hajnal_diameter(A @ B, c) - (1 - cluster_ergodicity(A, c)) * cluster_hajnal_diameter(B, c)
        worst = max(worst, gap)
        bad += gap > 1e-12
    return SuiteResult("hajnal_inequality", cases, bad, worst)


def phi_stochastic_suite(rng, cases: int, h: float = 1e-3) -> SuiteResult:
    bad, worst = 0, -np.inf
    for _ in range(cases):
        n = int(rng.integers(2, 7))
        S = random_schedule(rng, n, float(rng.uniform(0.5, 2.0)))
        tm = transition_matrix(S, h=h, record=50)
        dev = max(np.abs(tm.samples.sum(axis=2) - 1).max() - 1e-6, -tm.samples.min() - 1e-9)
        worst = max(worst, dev)
        bad += dev > 0
    return SuiteResult("phi_stochastic", cases, bad, worst)


def lemma2_diagonal_suite(rng, cases: int, h: float = 1e-3) -> SuiteResult:
    """``Phi_ii(t1, t0) >= exp(-(n-1) M1)`` whenever every integrated weight
    is below ``M1``."""
    bad, worst = 0, -np.inf
    for _ in range(cases):
        n = int(rng.integers(2, 7))
        S = random_schedule(rng, n, float(rng.uniform(0.5, 2.0)))
        Wint = integrate_weights(S, S.t0, S.horizon, h)
        M1 = 1.01 * Wint.max() + 1e-12
        phi = transition_matrix(S, h=h, record="last").final
        gap = np.exp(-(n - 1) * M1) - 1e-9 - np.diag(phi).min()
        worst = max(worst, gap)
        bad += gap > 0
    return SuiteResult("lemma2_diagonal", cases, bad, worst)


def invariance_suite(rng, cases: int, h: float = 1e-3) -> SuiteResult:
    bad, worst = 0, -np.inf
    for _ in range(cases):
        n = int(rng.integers(2, 7))
        c = random_clustering(rng, n)
        S = random_lumpable_schedule(rng, c, float(rng.uniform(0.5, 2.0)))
        inp = InputSignal.factored(c, rng.uniform(0, 10, c.K), "sin")
        d = check_invariance(S, inp, c, consensus_state(rng, c), h=h)
        worst = max(worst, d - 1e-6)
        bad += d > 1e-6
    return SuiteResult("invariance", cases, bad, worst)


def quotient_suite(rng, cases: int, h: float = 1e-3) -> SuiteResult:
    bad, worst = 0, -np.inf
    for _ in range(cases):
        n = int(rng.integers(2, 7))
        c = random_clustering(rng, n)
        S = random_lumpable_schedule(rng, c, float(rng.uniform(0.5, 2.0)))
        inp = InputSignal.factored(c, rng.uniform(0, 10, c.K), "sin")
        x0 = consensus_state(rng, c)
        B = extract_common_influence(S, c, h=h)
        full = integrate_state(S, inp, x0, h=h)
        z0 = cluster_means(x0[None], c)[0]
        quo = quotient_state(B, inp, z0, h=h)
        err = np.abs(cluster_means(full.states, c) - quo.states).max()
        worst = max(worst, err - 1e-5)
        bad += err > 1e-5
    return SuiteResult("quotient_equivalence", cases, bad, worst)


def run_suites(cases: int = 1000, seed: int = 0) -> list[SuiteResult]:
    """Algebraic suites use ``cases`` instances; integration-backed suites use
    ``ceil(cases / 50)`` short schedules each."""
    ode_cases = max(1, -(-cases // 50))
    rngs = [np.random.default_rng([seed, k]) for k in range(5)]
    return [
        hajnal_suite(rngs[0], cases),
        phi_stochastic_suite(rngs[1], ode_cases),
        lemma2_diagonal_suite(rngs[2], ode_cases),
        invariance_suite(rngs[3], ode_cases),
        quotient_suite(rngs[4], ode_cases),
    ]
