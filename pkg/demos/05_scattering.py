"""
Resonant scattering of a plane wave
===================================

Modal amplitudes of the field inside a soft ball, their growth as the
contrast shrinks, and the far field of the scattered wave.
"""

import numpy as np

from elastores import ElasticMedium, DtNMap, icosphere, rigid_basis, volume_moments
from elastores import resonance as rs
from elastores import scattering as sc

medium = ElasticMedium(lam=1.0, mu=1.0, delta=1e-2)
mesh = icosphere(2)
basis = rigid_basis(volume_moments(mesh))
inputs = rs.ResonanceInputs.from_dtn(DtNMap.assemble(mesh, 0.0, medium), basis)
wave = sc.IncidentWave("compressional", [0.0, 0.0, 1.0])

# the peak amplitude grows like delta^(-1/2)
sweep = sc.peak_scaling(inputs, wave.amplitude, [1e-2, 1e-3, 1e-4, 1e-5])
print("peaks", sweep.peaks.round(3), "slope", round(sweep.slope, 4))

# far field at the first resonance
omega = sweep.peak_omegas[0]
amps = sc.amplitudes(omega, inputs, wave.amplitude)
S = DtNMap.assemble(mesh, medium.wavenumber(omega), medium).S
phi = sc.boundary_density(amps, basis, wave, S)
dirs = sc.fibonacci_directions(100)
ff = sc.far_field(phi, mesh, dirs, medium, omega)
print("transversality", ff.transversality_defect(), "longitudinality", ff.longitudinality_defect())

r = 1e3 * mesh.diameter
near = sc.exterior_field(phi, mesh, r * dirs, medium, omega)
print("exterior vs far field", np.linalg.norm(near - ff.reconstruct(r)) / np.linalg.norm(near))
print("interior field at the centre", sc.interior_field(amps, basis, np.zeros(3), mesh))
