"""
Two agents, one cluster
=======================

Smallest possible network: two agents pulling on each other with unit
weight. Everything has a closed form, so this is a good first look at the
API.
"""

import numpy as np

from clustercons import Clustering, CouplingSchedule, integrate_state, transition_matrix
from clustercons.conditions import projection_radius_estimate

L = np.array([[0, 1.0], [1.0, 0]])  # weights; the Laplacian is built from them
S = CouplingSchedule.constant(L, 0.0, 3.0)

# states meet at the average, gap decays like exp(-2t)
tr = integrate_state(S, None, np.array([1.0, 0.0]))
print("x(3) =", tr.final, " gap:", tr.final[0] - tr.final[1], " exp(-6):", np.exp(-6))

# the transition matrix is stochastic at every sample
phi = transition_matrix(S, record=500)
print("row sums of Phi:", phi.samples.sum(axis=2).min(), phi.samples.sum(axis=2).max())

# decay rate transverse to the consensus line
pr = projection_radius_estimate(S, Clustering([0, 0]))
print("rho =", pr.rho, " e^-2 =", np.exp(-2))
