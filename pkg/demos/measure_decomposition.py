"""Recover the sphere measure of a functional from its values on cone probes.

Run with ``python demos/measure_decomposition.py``.
"""

import numpy as np

from asplund import specs as S
from asplund.grid import GridSpec
from asplund.logconcave import LogConcaveFn
from asplund.measures import moment_measure, surface_measure
from asplund.riesz_lab import FunctionalOracle, decompose_functional, monotone_continuity_check, ray_limit_oracle

square = LogConcaveFn(spec=S.IndicatorPolytope(S.box_polygon((0, 0), (1, 1))))
mu = moment_measure(LogConcaveFn(spec=S.Quadratic(1), grid=GridSpec.box(7.0, 65, 2)))
nu = surface_measure(square)

F = FunctionalOracle.represented(mu, nu)
rep = decompose_functional(F)
print("directions with recovered weight > 1e-3:")
for u, w in zip(rep.directions, rep.weights):
    if w > 1e-3:
        print(f"  ({u[0]:+.3f}, {u[1]:+.3f})  {w:.5f}")
print(f"NNLS residual {rep.residual:.2e}")

# the first variation at the unit square has the edge-length measure as its nu
g = LogConcaveFn(spec=S.IndicatorPolytope(S.box_polygon((0, 0), (1, 1))),
                 grid=GridSpec([-0.25, -0.25], [1.25, 1.25], 25))
axes = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
bodies = [S.box_polygon((-1, -1), (1, 1)), S.box_polygon((-1, -1), (2, 1)),
          S.box_polygon((-2, -1), (1, 1)), S.box_polygon((-1, -1), (1, 3))]
rep = decompose_functional(FunctionalOracle.first_variation(g), bodies=bodies, directions=axes)
print("\nfirst variation at the unit square, weights on +e1, -e1, +e2, -e2:", np.round(rep.weights, 4))

chk = monotone_continuity_check(F, S.RhoA(2.0))
print("\nalong the Pasch-Hausdorff chain:", np.round(chk.values, 4), "limit", round(chk.limit_value, 4))
chk = monotone_continuity_check(ray_limit_oracle((1.0, 0.0)), S.Quadratic(1))
print("ray-limit oracle: limit gap", chk.limit_gap)
