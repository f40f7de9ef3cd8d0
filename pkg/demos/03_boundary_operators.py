"""
Boundary operators and the DtN map
==================================

Galerkin single-layer and Neumann-Poincare matrices on an icosphere, the
Dirichlet-to-Neumann map built from them, and its first-order correction.
"""

import numpy as np

from elastores import ElasticMedium, icosphere, rigid_basis, volume_moments
from elastores import boundary_ops as bo

medium = ElasticMedium(lam=1.0, mu=1.0)
mesh = icosphere(2)
static = bo.DtNMap.assemble(mesh, 0.0, medium)

# the static single layer is symmetric and negative definite
eig = np.linalg.eigvalsh(static.S.matrix.real)
print("symmetry defect", static.S.symmetry_defect(), "largest eigenvalue", eig[-1])

# rigid traces are nearly annihilated by (-1/2 I + K*) S^{-1}
basis = rigid_basis(volume_moments(mesh))
xi = basis(mesh.centroids)
for i in range(6):
    print(f"rigid residual {i + 1}: {bo.np_identity_residual(static.S, static.K, xi[:, i]):.4f}")
rng = np.random.default_rng(0)
print("random trace:", bo.np_identity_residual(static.S, static.K, rng.normal(size=(mesh.n_panels, 3))))

# M^k = M + k M1 + O(k^2)
m0, m1 = static.matrix(), static.first_order_matrix()
ks = (1e-2, 5e-3)
rem = [bo.weighted_operator_norm(mesh, bo.DtNMap.assemble(mesh, k, medium).matrix() - m0 - k * m1) for k in ks]
print("remainder", rem, "order", np.log(rem[0] / rem[1]) / np.log(2))
