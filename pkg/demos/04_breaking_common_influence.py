"""
What goes wrong without common influence
========================================

Delete a single edge from the ring lattice. The agents in a cluster no
longer receive the same total pull from the other cluster, the quotient
system is undefined, and a state that starts in agreement drifts apart.
"""

import numpy as np

from clustercons import CouplingSchedule, Profile, Segment, check_A2, check_invariance
from clustercons.graph import adjacency_matrix, make_ring_lattice

adj, c = make_ring_lattice(8, 2, 2)
A = adjacency_matrix(adj)
rng = np.random.default_rng(0)
times = np.concatenate([[0.0], np.cumsum(rng.uniform(0, 1, 20))])


def schedule(W):
    return CouplingSchedule(times, [Segment(W, Profile("sine_bump", duration=b - a))
                                    for a, b in zip(times[:-1], times[1:])])


broken = A.copy()
broken[0, 1] = 0.0  # vertex 0 stops listening to vertex 1

x0 = np.arange(8) % 2.0  # cluster values 0 and 1
for label, W in (("intact", A), ("edge 1->0 removed", broken)):
    S = schedule(W)
    report, _ = check_A2(S, c)
    print(f"{label:>18}: A2 {report.verdict}, max Delta_C along run {check_invariance(S, None, c, x0):.2e}")
    if not report.passed:
        print("                    worst:", report.evidence["worst"])
