"""First variations of the integral, the measures that represent them, and a divergent case.

Run with ``python demos/first_variation_tour.py``.
"""

import numpy as np

from asplund import specs as S
from asplund.grid import GridSpec
from asplund.logconcave import LogConcaveFn, asplund_sum, integral
from asplund.variation import variation_report, verify_representation


def box(lo, hi, grid=None):
    return LogConcaveFn(spec=S.IndicatorPolytope(S.box_polygon(lo, hi)), grid=grid)


gauss_g = LogConcaveFn(spec=S.Quadratic(1), grid=GridSpec.box(9.0, 129, 2))
gauss_f = LogConcaveFn(spec=S.Quadratic(1), dim=2)
unit_g = box((0, 0), (1, 1), GridSpec([-0.5, -0.5], [1.5, 1.5], 65))

print("Asplund sum of two unit squares has area", integral(asplund_sum(unit_g, box((0, 0), (1, 1), GridSpec([0, 0], [1, 1], 17)))))

rep = variation_report(gauss_g, gauss_f)
print(f"\ndelta(Gaussian, Gaussian) = {rep.delta_numeric:.6f}   (2 pi = {2 * np.pi:.6f})")
print(rep.table())

r = verify_representation(gauss_g, box((-1, -1), (1, 1)))
print(f"\nGaussian g, square f: delta {r.delta_numeric:.4f}, mu-term {r.mu_term:.4f}, nu-term {r.nu_term}")

r = verify_representation(unit_g, box((0, 0), (1, 1)))
print(f"square g, square f:   delta {r.delta_numeric:.6f}, mu-term {r.mu_term}, nu-term {r.nu_term:.6f}")

rep = variation_report(unit_g, gauss_f)
print(f"\nsquare g, Gaussian f: status {rep.status}, quotients grow like",
      ", ".join(f"{q:.3g}" for q in rep.quotients))
