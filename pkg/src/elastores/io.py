"""Run configuration and CSV serialization.

Configuration files are YAML documents with a fixed schema; unknown keys
are rejected.  Example::

    mesh: meshes/icosphere320.off      # relative to the config file
    medium: {lambda: 1.0, mu: 1.0, rho: 1.0}
    contrast: {delta: 1.0e-4, tau: 1.0}
    incident: {kind: compressional, direction: [0, 0, 1]}
    quadrature: {regular_order: 7, singular_subdiv: 1, near_depth: 3}
    scan: {omega_min: 0.2, omega_max: 3.0, count: 200, relative: true}
    sweep: {delta: [1.0e-2, 1.0e-3, 1.0e-4]}
    directions: {count: 100}
    output: out

With ``scan.relative`` true (the default) the bounds are multiples of the
resonance scale ``sqrt(lam_max delta / (rho tau^2))``.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .boundary_ops import QuadratureConfig
from .kernels import ElasticMedium

__all__ = [
    "ConfigError",
    "ScanConfig",
    "FieldConfig",
    "RunConfig",
    "parse_config",
    "config_from_dict",
    "format_number",
    "write_csv",
    "read_csv",
]


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ScanConfig:
    omega_min: float = 0.2
    omega_max: float = 3.0
    count: int = 200
    relative: bool = True


@dataclass(frozen=True)
class FieldConfig:
    omega: float | None = None
    exterior_radius: float | None = None  # in units of diam(D)


@dataclass(frozen=True)
class RunConfig:
    mesh: Path
    medium: ElasticMedium
    incident_kind: str
    direction: np.ndarray
    polarization: np.ndarray | None
    quadrature: QuadratureConfig = field(default_factory=QuadratureConfig)
    scan: ScanConfig = field(default_factory=ScanConfig)
    sweep: tuple[float, ...] = ()
    n_directions: int = 100
    output: Path = Path("out")
    field: FieldConfig = field(default_factory=FieldConfig)
    dump_operators: bool = False

    @property
    def delta(self) -> float:
        return self.medium.delta

    @property
    def tau(self) -> float:
        return self.medium.tau

    @property
    def epsilon(self) -> float:
        return self.medium.epsilon

    @property
    def deltas(self) -> tuple[float, ...]:
        return self.sweep or (self.delta,)


_SCHEMA = {
    "mesh": None,
    "medium": {"lambda", "mu", "rho"},
    "contrast": {"delta", "tau"},
    "incident": {"kind", "direction", "polarization"},
    "quadrature": {"regular_order", "singular_subdiv", "near_depth"},
    "scan": {"omega_min", "omega_max", "count", "relative"},
    "sweep": {"delta"},
    "directions": {"count"},
    "output": None,
    "field": {"omega", "exterior_radius"},
    "operators": {"dump"},
}
_REQUIRED = ("mesh", "medium", "contrast", "incident")


def _number(value, key: str, kind=float):
    # YAML 1.1 reads "1e-4" as a string; accept any numeric literal
    if isinstance(value, bool):
        raise ConfigError(f"{key}: expected a number, got {value!r}")
    try:
        num = kind(float(value)) if kind is int else float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: expected a number, got {value!r}") from None
    if kind is int and num != float(value):
        raise ConfigError(f"{key}: expected an integer, got {value!r}")
    if not np.isfinite(num):
        raise ConfigError(f"{key}: must be finite")
    return num


def _section(doc: dict, name: str, required: tuple[str, ...] = ()) -> dict:
    sec = doc.get(name, {}) or {}
    if not isinstance(sec, dict):
        raise ConfigError(f"{name}: expected a mapping")
    unknown = set(sec) - _SCHEMA[name]
    if unknown:
        raise ConfigError(f"{name}: unknown key(s) {sorted(unknown)}")
    missing = [k for k in required if k not in sec]
    if missing:
        raise ConfigError(f"{name}: missing key(s) {missing}")
    return sec


def _vector(value, key: str) -> np.ndarray:
    try:
        vec = np.array([_number(v, key) for v in value], dtype=float)
    except TypeError:
        raise ConfigError(f"{key}: expected a list of 3 numbers") from None
    if vec.shape != (3,) or np.linalg.norm(vec) == 0:
        raise ConfigError(f"{key}: expected a nonzero 3-vector")
    return vec / np.linalg.norm(vec)


def config_from_dict(doc: dict, base: Path = Path(".")) -> RunConfig:
    """Validate a parsed configuration tree; relative paths resolve against ``base``."""
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a mapping at the top level")
    unknown = set(doc) - set(_SCHEMA)
    if unknown:
        raise ConfigError(f"unknown top-level key(s) {sorted(unknown)}")
    missing = [k for k in _REQUIRED if k not in doc]
    if missing:
        raise ConfigError(f"missing key(s) {missing}")

    mesh = Path(str(doc["mesh"]))
    mesh = mesh if mesh.is_absolute() else base / mesh
    if not os.access(mesh, os.R_OK) or not mesh.is_file():
        raise ConfigError(f"mesh: cannot read {mesh}")

    med = _section(doc, "medium", ("lambda", "mu"))
    con = _section(doc, "contrast", ("delta", "tau"))
    try:
        medium = ElasticMedium(
            lam=_number(med["lambda"], "medium.lambda"),
            mu=_number(med["mu"], "medium.mu"),
            rho=_number(med.get("rho", 1.0), "medium.rho"),
            delta=_number(con["delta"], "contrast.delta"),
            tau=_number(con["tau"], "contrast.tau"),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None

    inc = _section(doc, "incident", ("kind", "direction"))
    kind = inc["kind"]
    if kind not in ("compressional", "shear"):
        raise ConfigError(f"incident.kind: expected 'compressional' or 'shear', got {kind!r}")
    direction = _vector(inc["direction"], "incident.direction")
    polarization = None
    if kind == "shear":
        if "polarization" not in inc:
            raise ConfigError("incident.polarization: required for shear incidence")
        polarization = _vector(inc["polarization"], "incident.polarization")
        if abs(polarization @ direction) > 1e-8:
            raise ConfigError("incident.polarization: must be orthogonal to the direction")

    q = _section(doc, "quadrature")
    try:
        quad = QuadratureConfig(
            regular_order=_number(q.get("regular_order", 7), "quadrature.regular_order", int),
            singular_subdiv=_number(q.get("singular_subdiv", 1), "quadrature.singular_subdiv", int),
            near_depth=_number(q.get("near_depth", 3), "quadrature.near_depth", int),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"quadrature: {exc}") from None

    s = _section(doc, "scan")
    scan = ScanConfig(
        omega_min=_number(s.get("omega_min", 0.2), "scan.omega_min"),
        omega_max=_number(s.get("omega_max", 3.0), "scan.omega_max"),
        count=_number(s.get("count", 200), "scan.count", int),
        relative=bool(s.get("relative", True)),
    )
    if not 0 <= scan.omega_min < scan.omega_max:
        raise ConfigError("scan: need 0 <= omega_min < omega_max")
    if scan.count < 2:
        raise ConfigError("scan.count: must be >= 2")

    sw = _section(doc, "sweep")
    sweep = tuple(_number(d, "sweep.delta") for d in (sw.get("delta") or []))
    if any(d <= 0 for d in sweep):
        raise ConfigError("sweep.delta: contrasts must be positive")

    dirs = _section(doc, "directions")
    n_dir = _number(dirs.get("count", 100), "directions.count", int)
    if n_dir < 1:
        raise ConfigError("directions.count: must be >= 1")

    f = _section(doc, "field")
    fld = FieldConfig(
        omega=None if f.get("omega") is None else _number(f["omega"], "field.omega"),
        exterior_radius=None if f.get("exterior_radius") is None
        else _number(f["exterior_radius"], "field.exterior_radius"),
    )
    if fld.exterior_radius is not None and fld.exterior_radius <= 1:
        raise ConfigError("field.exterior_radius: must exceed 1 (units of diam(D))")

    ops = _section(doc, "operators")
    out = Path(str(doc.get("output", "out")))
    out = out if out.is_absolute() else base / out
    return RunConfig(mesh, medium, kind, direction, polarization, quad, scan, sweep, n_dir, out, fld,
                     bool(ops.get("dump", False)))


def parse_config(path) -> RunConfig:
    """Read and validate a YAML run configuration."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from None
    return config_from_dict(doc, path.parent)


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------


def format_number(x) -> str:
    """12 significant digits, '.' decimal separator, independent of locale."""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.12g}"
    return str(x)


def write_csv(path, columns: list[str], rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            if len(row) != len(columns):
                raise ValueError(f"row has {len(row)} fields, expected {len(columns)}")
            w.writerow([format_number(v) for v in row])
    return path


def _parse_field(text: str):
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def read_csv(path) -> dict[str, list]:
    """Columns of a CSV written by :func:`write_csv`, numbers parsed back."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    header, body = rows[0], rows[1:]
    return {name: [_parse_field(r[i]) for r in body] for i, name in enumerate(header)}
