"""Scenario and sweep files (TOML).

A scenario file::

    [geometry]
    kind = "uca"              # uca | rpa | csv
    n_sensors = 40
    radius_over_lambda = 2.0

    [estimation]
    P = 61                    # omit for the -160 dB sizing rule
    gamma_db = -160.0

    [solver]
    gap_tol = 1e-8

    [[sources]]
    theta_deg = -10.3
    magnitude = 5.0
    phase_deg = 0.0

A sweep file has top-level ``seed``, ``trials``, ``threshold_deg`` and
``amplitudes``, a ``[geometry]`` table (uca or rpa, without the radius), a
``[grid]`` table of lists and optional ``[estimation]``/``[solver]`` tables.
"""

import sys
from pathlib import Path

import numpy as np

from . import manifold, rooting, sdp
from .geometry import GeometryError, load_geometry_csv, make_rpa, make_uca
from .pipeline import Scenario
from .simulate import ExperimentConfig, GeometrySpec

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib


class ConfigError(ValueError):
    """Invalid scenario or sweep file."""

    def __init__(self, message, path=None):
        self.path = None if path is None else str(path)
        super().__init__(f"{path}: {message}" if path else message)


_GEOM_KEYS = {
    "uca": {"kind", "n_sensors", "radius_over_lambda", "wavelength"},
    "rpa": {"kind", "n_sensors", "min_spacing_over_lambda", "max_radius_over_lambda", "seed", "wavelength"},
    "csv": {"kind", "path", "reference", "wavelength"},
}
_EST_KEYS = {"P", "gamma_db", "unit_tol", "cluster_deg"}
_SOLVER_KEYS = {"gap_tol", "max_iter", "psd_slack"}
_SOURCE_KEYS = {"theta_deg", "magnitude", "phase_deg"}


def _check_keys(table, allowed, where, path):
    if not isinstance(table, dict):
        raise ConfigError(f"[{where}] must be a table", path)
    extra = set(table) - allowed
    if extra:
        raise ConfigError(f"unknown key(s) in [{where}]: {', '.join(sorted(extra))}", path)


def _read_toml(path):
    path = Path(path)
    try:
        with path.open("rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError("file not found", path) from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"TOML syntax error: {exc}", path) from None


def geometry_from_table(t, base_dir=Path("."), path=None):
    kind = t.get("kind")
    if kind not in _GEOM_KEYS:
        raise ConfigError(f"geometry kind must be one of uca, rpa, csv; got {kind!r}", path)
    _check_keys(t, _GEOM_KEYS[kind], "geometry", path)
    wl = float(t.get("wavelength", 1.0))
    try:
        if kind == "uca":
            return make_uca(int(t["n_sensors"]), float(t["radius_over_lambda"]), wl)
        if kind == "rpa":
            return make_rpa(
                int(t["n_sensors"]), float(t["min_spacing_over_lambda"]), float(t["max_radius_over_lambda"]),
                int(t.get("seed", 0)), wl,
            )
        csv_path = Path(t["path"])
        if not csv_path.is_absolute():
            csv_path = base_dir / csv_path
        return load_geometry(csv_path, wl, t.get("reference", "centroid"))
    except KeyError as exc:
        raise ConfigError(f"[geometry] is missing {exc.args[0]!r}", path) from None
    except GeometryError as exc:
        raise ConfigError(str(exc), path) from None


def load_geometry(path, wavelength=1.0, reference="centroid"):
    """CSV geometry with file errors turned into :class:`ConfigError`."""
    try:
        return load_geometry_csv(path, wavelength, reference)
    except FileNotFoundError:
        raise ConfigError("geometry file not found", path) from None
    except GeometryError as exc:
        raise ConfigError(str(exc), path) from None


def _solver(t, path):
    _check_keys(t, _SOLVER_KEYS, "solver", path)
    try:
        return sdp.SolverOptions(**{k: (int(v) if k == "max_iter" else float(v)) for k, v in t.items()})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[solver]: {exc}", path) from None


def _estimation(t, path):
    _check_keys(t, _EST_KEYS, "estimation", path)
    out = {
        "P": t.get("P"),
        "gamma_db": float(t.get("gamma_db", manifold.RULE_GAMMA_DB)),
        "unit_tol": float(t.get("unit_tol", rooting.UNIT_TOL)),
        "cluster_deg": float(t.get("cluster_deg", rooting.CLUSTER_DEG)),
    }
    P = out["P"]
    if P is not None and (not isinstance(P, int) or P < 3 or P % 2 == 0):
        raise ConfigError(f"[estimation] P must be an odd integer >= 3, got {P!r}", path)
    if not -200 <= out["gamma_db"] <= -40:
        raise ConfigError("[estimation] gamma_db must lie in [-200, -40]", path)
    return out


def parse_scenario(data, base_dir=Path("."), path=None, geometry=None):
    """Build a :class:`Scenario` from a parsed TOML mapping.

    ``geometry`` (an ArrayGeometry) replaces the file's ``[geometry]`` table.
    """
    _check_keys(data, {"geometry", "estimation", "solver", "sources", "description"}, "top level", path)
    if geometry is None:
        if "geometry" not in data:
            raise ConfigError("missing [geometry] table", path)
        geometry = geometry_from_table(data["geometry"], base_dir, path)
    est = _estimation(data.get("estimation", {}), path)
    sources = []
    for i, s in enumerate(data.get("sources", [])):
        _check_keys(s, _SOURCE_KEYS, f"sources #{i + 1}", path)
        if "theta_deg" not in s:
            raise ConfigError(f"source #{i + 1} has no theta_deg", path)
        th = float(s["theta_deg"])
        if not -180 < th <= 180:
            raise ConfigError(f"source #{i + 1}: theta_deg must lie in (-180, 180]", path)
        amp = float(s.get("magnitude", 1.0)) * np.exp(1j * np.deg2rad(float(s.get("phase_deg", 0.0))))
        sources.append((np.deg2rad(th), amp))
    if not sources:
        raise ConfigError("scenario needs at least one [[sources]] entry", path)
    return Scenario(
        geometry, sources, est["P"], est["gamma_db"], _solver(data.get("solver", {}), path),
        est["unit_tol"], est["cluster_deg"],
    )


def load_scenario(path, geometry=None):
    path = Path(path)
    return parse_scenario(_read_toml(path), path.parent, path, geometry)


def parse_sweep(data, path=None):
    """Build an :class:`ExperimentConfig` from a parsed TOML mapping."""
    top = {"seed", "trials", "threshold_deg", "amplitudes", "geometry", "grid", "estimation", "solver", "description"}
    _check_keys(data, top, "top level", path)
    g = data.get("geometry", {"kind": "uca"})
    _check_keys(g, {"kind", "n_sensors", "min_spacing_over_lambda", "seed"}, "geometry", path)
    grid = data.get("grid")
    if grid is None:
        raise ConfigError("missing [grid] table", path)
    _check_keys(grid, {"radius_over_lambda", "P", "L", "delta_min_deg"}, "grid", path)
    est = _estimation(data.get("estimation", {}), path)

    def lst(key, default):
        v = grid.get(key, default)
        return v if isinstance(v, list) else [v]

    P = [None if p == "auto" else p for p in lst("P", ["auto"])]
    try:
        return ExperimentConfig(
            geometry=GeometrySpec(
                g.get("kind", "uca"), int(g.get("n_sensors", 40)),
                float(g.get("min_spacing_over_lambda", 0.25)), int(g.get("seed", 0)),
            ),
            radii=tuple(float(r) for r in lst("radius_over_lambda", [1.59])),
            P=tuple(P),
            L=tuple(lst("L", [10])),
            delta_min_deg=tuple(float(d) for d in lst("delta_min_deg", [10.0])),
            trials=data.get("trials", 50),
            threshold_deg=float(data.get("threshold_deg", 0.001)),
            seed=int(data.get("seed", 0)),
            gamma_db=est["gamma_db"],
            amplitudes=data.get("amplitudes", "equal"),
            solver=_solver(data.get("solver", {}), path),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc), path) from None


def load_sweep(path):
    return parse_sweep(_read_toml(path), Path(path))


def bundled(name):
    """Path of a bundled file such as ``fig2.scenario`` or ``fig5b.sweep``."""
    p = Path(__file__).parent / "data" / name
    if not p.exists():
        avail = sorted(x.name for x in p.parent.iterdir())
        raise ConfigError(f"no bundled file {name!r}; available: {', '.join(avail)}")
    return p
