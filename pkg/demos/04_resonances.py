"""
Subwavelength resonances
========================

Resonance matrices of an ellipsoid, the two-term asymptotic frequencies and
the roots of the leading-order quadratic eigenproblem.
"""

import numpy as np

from elastores import ElasticMedium, DtNMap, ellipsoid, rigid_basis, volume_moments
from elastores import resonance as rs

medium = ElasticMedium(lam=1.0, mu=1.0, rho=1.0, delta=1e-3, tau=1.0)
mesh = ellipsoid((1.0, 0.8, 0.6), level=2)
inputs = rs.ResonanceInputs.from_dtn(DtNMap.assemble(mesh, 0.0, medium), rigid_basis(volume_moments(mesh)))
print("eigenvalues of Q", np.linalg.eigvalsh(inputs.Q_sym).round(4))
print("rank of R", np.linalg.matrix_rank(inputs.R, tol=1e-12 * np.abs(inputs.R).max()))

spectral = rs.spectral_decompose(inputs.Q_sym, inputs.R)
spectrum = rs.asymptotic_resonances(spectral, inputs.R, medium)
roots = rs.qep_resonances(inputs.Q_sym, inputs.R, medium)
for i in range(6):
    flag = "undamped" if spectrum.damping_vanishes[i] else ""
    print(f"mode {i + 1}: {spectrum.omega_plus[i]:.6e} {flag}")
print("QEP roots with positive real part\n", roots[roots.real > 0])

# the gap between the two routes shrinks like delta^(3/2); undamped modes
# agree to rounding, so their order is reported as nan
report = rs.compare_spectra(inputs, [1e-2, 1e-3, 1e-4, 1e-5])
print("fitted remainder orders", np.round(report.orders[:6], 3))
