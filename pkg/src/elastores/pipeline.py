"""Command orchestration: each command reads a :class:`RunConfig` and writes CSV files."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from . import boundary_ops as bo
from . import resonance as rs
from . import scattering as sc
from .geometry import RigidBasis, SurfaceMesh, load_mesh, refine, rigid_basis, volume_moments
from .io import RunConfig, write_csv
from .kernels import ElasticMedium, kupradze, kupradze_series
from .oracles import moment_discrepancy

logger = logging.getLogger(__name__)

__all__ = ["Session", "CheckResult", "run_checks", "COMMANDS"]


@dataclass
class Session:
    """Lazily computed, cached quantities shared by the commands."""

    config: RunConfig
    mesh: SurfaceMesh | None = None
    seed: int = 12345
    out: Path | None = None
    _dtn_cache: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.mesh is None:
            self.mesh = load_mesh(self.config.mesh)
        self.out = Path(self.out or self.config.output)

    @property
    def medium(self) -> ElasticMedium:
        return self.config.medium

    @cached_property
    def moments(self):
        return volume_moments(self.mesh)

    @cached_property
    def basis(self) -> RigidBasis:
        return rigid_basis(self.moments)

    def dtn(self, k: complex = 0.0) -> bo.DtNMap:
        k = complex(k)
        if k not in self._dtn_cache:
            t0 = time.perf_counter()
            self._dtn_cache[k] = bo.DtNMap.assemble(self.mesh, k, self.medium, self.config.quadrature)
            logger.info("assembled operators at k=%s on %d panels in %.1fs", k, self.mesh.n_panels,
                        time.perf_counter() - t0)
        return self._dtn_cache[k]

    @cached_property
    def inputs(self) -> rs.ResonanceInputs:
        return rs.ResonanceInputs.from_dtn(self.dtn(0.0), self.basis)

    @cached_property
    def spectral(self) -> rs.SpectralData:
        return rs.spectral_decompose(self.inputs.Q_sym, self.inputs.R)

    @cached_property
    def incident(self) -> sc.IncidentWave:
        return sc.IncidentWave(self.config.incident_kind, self.config.direction, self.config.polarization)

    def _path(self, name: str) -> Path:
        return self.out / name

    # ------------------------------------------------------------------ basis
    def basis_cmd(self) -> list[Path]:
        m, b = self.moments, self.basis
        gram = b.gram(m)
        rows = [("volume", "", "", m.volume)]
        rows += [("centroid", i, "", m.centroid[i]) for i in range(3)]
        rows += [("central_second", i, j, m.central[i, j]) for i in range(3) for j in range(3)]
        p1 = write_csv(self._path("moments.csv"), ["quantity", "i", "j", "value"], rows)
        cols = ["mode"] + [f"a_{c}" for c in "xyz"] + [f"b_{r}{c}" for r in "xyz" for c in "xyz"]
        p2 = write_csv(self._path("basis.csv"), cols,
                       [[i + 1, *b.constant[i], *b.linear[i].ravel()] for i in range(6)])
        report = [
            ("n_panels", self.mesh.n_panels),
            ("surface_area", self.mesh.surface_area),
            ("gram_defect", float(np.abs(gram - np.eye(6)).max())),
            ("moment_oracle_discrepancy", moment_discrepancy(self.mesh, m)),
            ("d4", b.d[0]), ("d5", b.d[1]), ("d6", b.d[2]),
            ("L1", b.shear[0]), ("L2", b.shear[1]), ("L3", b.shear[2]),
        ]
        p3 = write_csv(self._path("basis_report.csv"), ["key", "value"], report)
        return [p1, p2, p3]

    # -------------------------------------------------------------- operators
    def operators_cmd(self) -> list[Path]:
        d = self.dtn(0.0)
        eig = np.linalg.eigvalsh(d.S.matrix.real)
        res = rs.rigid_trace_residuals(d, self.basis)
        rows = [
            ("n_panels", self.mesh.n_panels),
            ("single_layer_symmetry_defect", d.S.symmetry_defect()),
            ("single_layer_max_eigenvalue", eig[-1]),
            ("single_layer_negative_definite", bool(eig[-1] < 0)),
            ("calderon_defect", bo.calderon_defect(d.S, d.K)),
        ]
        rows += [(f"rigid_residual_{i + 1}", r) for i, r in enumerate(res)]
        paths = [write_csv(self._path("operators.csv"), ["key", "value"], rows)]
        if self.config.dump_operators:
            for op, name in ((d.S, "single_layer.elop"), (d.K, "neumann_poincare.elop")):
                bo.write_operator(op, self._path(name))
                paths.append(self._path(name))
        return paths

    # ------------------------------------------------------------- resonances
    def resonances_cmd(self, method: str = "both") -> list[Path]:
        if method not in ("asymptotic", "qep", "both"):
            raise ValueError(f"unknown method {method!r}")
        inputs, spectrum = self.inputs, self.spectral
        med = self.medium
        asym = rs.asymptotic_resonances(spectrum, inputs.R, med, inputs.gamma)
        cols = ["mode", "lambda_i", "vRv", "damping_flag", "re_omega_plus", "im_omega_plus",
                "re_omega_minus", "im_omega_minus", "source", "delta", "epsilon", "tau"]
        rows = []
        common = (med.delta, med.epsilon, med.tau)

        def row(i, wp, wm, source):
            return [i + 1, spectrum.eigenvalues[i], spectrum.vRv[i], bool(asym.damping_vanishes[i]),
                    wp.real, wp.imag, wm.real, wm.imag, source, *common]

        if method in ("asymptotic", "both"):
            rows += [row(i, asym.omega_plus[i], asym.omega_minus[i], "asymptotic") for i in range(6)]
        paths = []
        if method in ("qep", "both"):
            roots = rs.qep_resonances(inputs.Q_sym, inputs.R, med, gamma=inputs.gamma)
            perm, ambiguous = rs.match_roots(asym.asymptotic_roots, roots, strict=False)
            if ambiguous.any():
                logger.warning("%d asymptotic/QEP pairings are ambiguous (near-degenerate modes)",
                               int(ambiguous.sum()))
            matched = roots[perm]
            rows += [row(i, matched[i], matched[6 + i], "qep") for i in range(6)]
            err = np.abs(matched - asym.asymptotic_roots) / np.abs(matched)
            mrows = [[i % 6 + 1, "plus" if i < 6 else "minus", asym.asymptotic_roots[i].real,
                      asym.asymptotic_roots[i].imag, matched[i].real, matched[i].imag, err[i],
                      bool(ambiguous[i])]
                     for i in range(12)]
            paths.append(write_csv(self._path("match.csv"),
                                   ["mode", "branch", "re_asymptotic", "im_asymptotic", "re_qep", "im_qep",
                                    "relative_error", "ambiguous"], mrows))
        paths.insert(0, write_csv(self._path("resonances.csv"), cols, rows))
        return paths

    # ------------------------------------------------------------------- scan
    def _grid(self, inputs: rs.ResonanceInputs) -> np.ndarray:
        s = self.config.scan
        scale = sc.resonance_window(inputs) if s.relative else 1.0
        return np.linspace(s.omega_min * scale, s.omega_max * scale, s.count)

    def scan_cmd(self) -> list[Path]:
        p = self.incident.amplitude
        rows, summary, curves = [], [], []
        for delta in self.config.deltas:
            local = self.inputs.with_medium(self.medium.with_contrast(delta=delta))
            curve = sc.enhancement_curve(self._grid(local), local, p)
            curves.append(curve)
            rows += [[w, v, int(a) + 1, delta] for w, v, a in zip(curve.omega, curve.max_abs_s, curve.argmax_mode)]
            summary.append([delta, curve.peak_omega, curve.peak_value, curve.peak_mode + 1,
                            bool(curve.damping_vanishes)])
        paths = [write_csv(self._path("enhancement.csv"), ["omega", "max_abs_s", "argmax_mode", "delta"], rows)]
        slope = float("nan")
        peaks = np.array([c.peak_value for c in curves])
        if len(curves) >= 2 and np.all(np.isfinite(peaks)):
            slope = float(np.polyfit(np.log(self.config.deltas), np.log(peaks), 1)[0])
        summary = [r + [slope] for r in summary]
        paths.append(write_csv(self._path("enhancement_peaks.csv"),
                               ["delta", "peak_omega", "peak_max_abs_s", "peak_mode", "damping_vanishes",
                                "fitted_slope"], summary))
        script = self._path("enhancement.gp")
        script.write_text(
            "set logscale y\nset datafile separator ','\nset key autotitle columnhead\n"
            "set xlabel 'omega'\nset ylabel 'max |s_i|'\n"
            "plot 'enhancement.csv' using 1:2:4 with lines lc variable\n",
            encoding="utf-8",
        )
        paths.append(script)
        return paths

    # ------------------------------------------------------------------ field
    def field_omega(self) -> float:
        if self.config.field.omega is not None:
            return self.config.field.omega
        curve = sc.enhancement_curve(self._grid(self.inputs), self.inputs, self.incident.amplitude)
        if curve.damping_vanishes:
            raise ValueError("most strongly excited mode is undamped; set field.omega explicitly")
        return curve.peak_omega

    def field_cmd(self) -> list[Path]:
        med = self.medium
        omega = self.field_omega()
        amps = sc.amplitudes(omega, self.inputs, self.incident.amplitude, self.spectral)
        S = self.dtn(med.wavenumber(omega)).S
        phi = sc.boundary_density(amps, self.basis, self.incident, S)
        dirs = sc.fibonacci_directions(self.config.n_directions)
        ff = sc.far_field(phi, self.mesh, dirs, med, omega)
        cols = ["dir_x", "dir_y", "dir_z"]
        for name in ("u_s_inf", "u_p_inf"):
            cols += [f"{part}_{name}_{c}" for c in "xyz" for part in ("re", "im")]
        cols += ["omega", "delta"]
        rows = []
        for m in range(len(dirs)):
            r = list(dirs[m])
            for u in (ff.u_s[m], ff.u_p[m]):
                for c in range(3):
                    r += [u[c].real, u[c].imag]
            rows.append(r + [omega, med.delta])
        paths = [write_csv(self._path("farfield.csv"), cols, rows)]
        if self.config.field.exterior_radius is not None:
            radius = self.config.field.exterior_radius * self.mesh.diameter
            pts = self.moments.centroid + radius * dirs
            ex = sc.exterior_field(phi, self.mesh, pts, med, omega)
            rec = ff.reconstruct(radius)
            ecols = ["x", "y", "z"] + [f"{p}_u_{c}" for c in "xyz" for p in ("re", "im")] + ["far_field_rel_diff"]
            erows = []
            for m in range(len(dirs)):
                diff = np.linalg.norm(ex[m] - rec[m]) / max(np.linalg.norm(ex[m]), 1e-300)
                erows.append(list(pts[m]) + [v for c in range(3) for v in (ex[m, c].real, ex[m, c].imag)] + [diff])
            paths.append(write_csv(self._path("exterior.csv"), ecols, erows))
        return paths

    # ----------------------------------------------------------------- verify
    def verify_cmd(self) -> tuple[list[Path], list["CheckResult"]]:
        checks = run_checks(self)
        rows = [[c.name, c.value, c.threshold, c.relation, bool(c.passed)] for c in checks]
        path = write_csv(self._path("verify.csv"), ["check", "value", "threshold", "relation", "passed"], rows)
        return [path], checks


@dataclass(frozen=True)
class CheckResult:
    name: str
    value: float
    threshold: float
    relation: str  # "<=" or ">="

    @property
    def passed(self) -> bool:
        if self.relation == "<=":
            return bool(self.value <= self.threshold)
        if self.relation == ">=":
            return bool(self.value >= self.threshold)
        raise ValueError(self.relation)


def _order_fit(xs, ys) -> float:
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


def run_checks(session: Session) -> list[CheckResult]:
    """Property checks on the configured mesh and medium."""
    out: list[CheckResult] = []
    mesh, med, basis = session.mesh, session.medium, session.basis
    rng = np.random.default_rng(session.seed)

    out.append(CheckResult("gram_defect", float(np.abs(basis.gram(session.moments) - np.eye(6)).max()), 1e-10, "<="))
    out.append(CheckResult("moment_oracle_discrepancy", moment_discrepancy(mesh, session.moments), 1e-12, "<="))

    x = rng.normal(size=3)
    x *= 0.7 / np.linalg.norm(x)
    ks = np.array([1e-1, 5e-2, 2.5e-2, 1.25e-2])
    for order in range(4):
        errs = [np.abs(kupradze(x, k, med, "closed") - kupradze_series(x, k, med, order)).max() for k in ks]
        out.append(CheckResult(f"kernel_series_order_J{order}", _order_fit(ks, errs), order + 0.9, ">="))

    d = session.dtn(0.0)
    out.append(CheckResult("single_layer_symmetry_defect", d.S.symmetry_defect(), 1e-10, "<="))
    out.append(CheckResult("single_layer_max_eigenvalue", float(np.linalg.eigvalsh(d.S.matrix.real)[-1]), 0.0, "<="))

    res = rs.rigid_trace_residuals(d, basis)
    noise = bo.np_identity_residual(d.S, d.K, rng.normal(size=(mesh.n_panels, 3)))
    out.append(CheckResult("random_trace_residual", noise, 0.1, ">="))
    # the refinement rate is only meaningful on smooth bodies: at edges and
    # corners of a polyhedron the densities are singular and convergence stalls
    if mesh.projection is not None and mesh.n_panels <= 500:
        fine = Session(session.config, refine(mesh), session.seed, session.out)
        res_f = rs.rigid_trace_residuals(fine.dtn(0.0), fine.basis)
        out.append(CheckResult("rigid_residual_refinement_ratio", float(np.max(res_f / res)), 1 / 1.5, "<="))

    inputs = session.inputs
    out.append(CheckResult("Q_min_eigenvalue", float(np.linalg.eigvalsh(inputs.Q_sym)[0]), 0.0, ">="))
    out.append(CheckResult("Q_symmetry_defect", inputs.q_asymmetry, 1e-2, "<="))
    r_eig = np.linalg.eigvalsh(inputs.R)
    r_norm = max(r_eig[-1], 1e-300)
    out.append(CheckResult("R_min_eigenvalue_relative", float(-r_eig[0] / r_norm), 1e-12, "<="))
    out.append(CheckResult("R_rank", float(np.sum(r_eig > 1e-12 * r_norm)), 3, "<="))

    roots = rs.qep_resonances(inputs.Q_sym, inputs.R, med, gamma=inputs.gamma)
    mirrored = -np.conj(roots)
    perm = rs.match_roots(roots, mirrored)
    scale = np.abs(roots).max()
    out.append(CheckResult("qep_root_count", float(len(roots)), 12, ">="))
    out.append(CheckResult("qep_mirror_symmetry", float(np.abs(roots - mirrored[perm]).max() / scale), 1e-10, "<="))
    out.append(CheckResult("qep_max_imaginary_part", float(roots.imag.max()), 1e-12, "<="))

    report = rs.compare_spectra(inputs, [1e-2, 1e-3, 1e-4, 1e-5], strict=False)
    if report.ambiguous.any():
        logger.warning("ambiguous asymptotic/QEP pairings at %d sweep point(s): near-degenerate modes",
                       int(report.ambiguous.any(axis=1).sum()))
    out.append(CheckResult("asymptotic_remainder_order", report.min_order, 1.35, ">="))
    out.append(CheckResult("asymptotic_error_monotone", float(report.monotone.all()), 1.0, ">="))

    sweep = sc.peak_scaling(inputs, session.incident.amplitude, [1e-2, 1e-3, 1e-4, 1e-5])
    out.append(CheckResult("enhancement_slope_deviation", abs(sweep.slope + 0.5), 0.05, "<="))

    phi = rng.normal(size=(mesh.n_panels, 3)) + 1j * rng.normal(size=(mesh.n_panels, 3))
    ff = sc.far_field(phi, mesh, sc.fibonacci_directions(session.config.n_directions), med, 0.1)
    out.append(CheckResult("farfield_transversality", ff.transversality_defect(), 1e-12, "<="))
    out.append(CheckResult("farfield_longitudinality", ff.longitudinality_defect(), 1e-12, "<="))

    shift = np.array([1.7, -0.3, 2.2])
    moved = Session(session.config, mesh.translated(shift), session.seed, session.out)
    dq = np.abs(moved.inputs.Q - inputs.Q).max() / np.abs(inputs.Q).max()
    dc = np.abs(moved.inputs.C - inputs.C).max() / np.abs(inputs.C).max()
    out.append(CheckResult("translation_invariance", float(max(dq, dc)), 1e-8, "<="))
    return out


COMMANDS = ("basis", "operators", "resonances", "scan", "field", "verify")
