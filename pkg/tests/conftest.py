"""Shared meshes and cached operator assemblies.

Dense assembly dominates the run time, so every (mesh, k) pair is assembled
at most once per session.
"""

import numpy as np
import pytest

from elastores import boundary_ops as bo
from elastores import resonance as rs
from elastores.geometry import ellipsoid, icosphere, rigid_basis, unit_cube, volume_moments
from elastores.kernels import ElasticMedium

SHIFT = np.array([1.7, -0.3, 2.2])

_MESHES = {
    "cube": lambda: unit_cube(),
    "sphere80": lambda: icosphere(1),
    "sphere320": lambda: icosphere(2),
    "sphere1280": lambda: icosphere(3),
    "ellipsoid": lambda: ellipsoid((1.0, 0.8, 0.6), 2),
    "ellipsoid_shifted": lambda: ellipsoid((1.0, 0.8, 0.6), 2).translated(SHIFT),
}


class Workbench:
    """Lazily built meshes, bases and DtN maps keyed by name and wavenumber."""

    def __init__(self, medium):
        self.medium = medium
        self._mesh, self._basis, self._dtn, self._inputs = {}, {}, {}, {}

    def mesh(self, name):
        if name not in self._mesh:
            self._mesh[name] = _MESHES[name]()
        return self._mesh[name]

    def basis(self, name):
        if name not in self._basis:
            self._basis[name] = rigid_basis(volume_moments(self.mesh(name)))
        return self._basis[name]

    def dtn(self, name, k=0.0):
        key = (name, complex(k))
        if key not in self._dtn:
            self._dtn[key] = bo.DtNMap.assemble(self.mesh(name), k, self.medium)
        return self._dtn[key]

    def inputs(self, name):
        if name not in self._inputs:
            self._inputs[name] = rs.ResonanceInputs.from_dtn(self.dtn(name), self.basis(name))
        return self._inputs[name]

    def damped_resonance(self, name, delta):
        """Inputs at contrast ``delta`` and Re(omega+) of the lowest damped mode."""
        inp = self.inputs(name)
        inp = inp.with_medium(inp.medium.with_contrast(delta=delta))
        spectrum = rs.asymptotic_resonances(rs.spectral_decompose(inp.Q_sym, inp.R), inp.R, inp.medium)
        j = int(np.flatnonzero(~spectrum.damping_vanishes)[0])
        return inp, float(spectrum.omega_plus[j].real)


@pytest.fixture(scope="session")
def medium():
    return ElasticMedium(lam=1.0, mu=1.0, rho=1.0, delta=1e-4, tau=1.0)


@pytest.fixture(scope="session")
def bench(medium):
    return Workbench(medium)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


_ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = []


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line for an acceptance criterion.

    Usage: ``acceptance(number, passed, detail)``; the line is printed at
    once and repeated in the terminal summary.
    """

    def record(number, passed, detail):
        line = f"{'PASS' if passed else 'FAIL'} criterion {number:>2}: {detail}"
        print(line)
        request.config.stash[_ACCEPTANCE].append((number, line))
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
