"""
Green tensors of linear elasticity
==================================

The Kelvin matrix, its time-harmonic counterpart and the low-frequency series.
"""

import numpy as np

from elastores import ElasticMedium
from elastores.kernels import gamma_const, kelvin, kupradze, kupradze_series, traction_kernel

medium = ElasticMedium(lam=1.0, mu=1.0)
x = np.array([1.0, 0.0, 0.0])

print("Kelvin matrix at e1\n", kelvin(x, medium))

# the closed form and the series agree, and truncating the series at order J
# leaves a remainder of order k^(J+1)
for order in range(4):
    errs = [np.abs(kupradze(x, k, medium, "closed") - kupradze_series(x, k, medium, order)).max()
            for k in (0.1, 0.05, 0.025, 0.0125)]
    slope = np.polyfit(np.log([0.1, 0.05, 0.025, 0.0125]), np.log(errs), 1)[0]
    print(f"order {order}: remainder slope {slope:.3f}")

# the first correction is a constant multiple of the identity
print("gamma =", gamma_const(medium))

nu = np.array([0.0, 0.6, 0.8])
print("traction kernel at k = 0.3\n", traction_kernel(x, np.zeros(3), nu, 0.3, medium).round(6))
