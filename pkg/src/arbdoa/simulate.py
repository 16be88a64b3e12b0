"""Conventional beamformer baseline and Monte-Carlo success studies."""

import csv
import itertools
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import manifold, rooting, sdp
from .geometry import make_rpa, make_uca, steering
from .numkit import ConditioningError
from .pipeline import EstimationError, estimate

SWEEP_COLUMNS = (
    "radius_over_lambda", "P", "L", "delta_min_deg", "trials",
    "success_prob", "solver_fail_frac", "mean_iterations",
)
TIMING_COLUMNS = ("radius_over_lambda", "P", "L", "delta_min_deg", "mean_runtime_s")


class SceneError(ValueError):
    """Requested source separation cannot be met."""


def angle_grid(n):
    """Uniform azimuth grid ``-pi + 2 pi l / n``, ``l = 0..n-1``."""
    if n < 2:
        raise ValueError("grid needs at least two points")
    return -np.pi + 2 * np.pi * np.arange(n) / n


def cbf_spectrum(y, geom, grid=3600):
    """Delay-and-sum output ``|a(theta)^H y| / M`` on :func:`angle_grid` points.

    A lone source of amplitude ``s`` peaks at ``|s|``, so the curve can be
    drawn on the same scale as estimated amplitudes.
    """
    A = steering(geom, angle_grid(grid))
    return np.abs(A.conj().T @ np.asarray(y, dtype=complex)) / geom.n_sensors


def local_maxima(values, lo=None, hi=None, theta=None, rel_height=0.5):
    """Indices of circular local maxima above ``rel_height * max(values)``.

    With ``theta`` (radians) given, only peaks inside ``[lo, hi]`` count.
    """
    v = np.asarray(values, dtype=float)
    prev, nxt = np.roll(v, 1), np.roll(v, -1)
    pk = np.nonzero((v > prev) & (v >= nxt) & (v >= rel_height * v.max()))[0]
    if theta is not None:
        t = np.asarray(theta)[pk]
        pk = pk[(t >= lo) & (t <= hi)]
    return pk


def wrap_deg(a):
    """Map degrees to (-180, 180]."""
    a = np.mod(np.asarray(a, dtype=float) + 180.0, 360.0) - 180.0
    return np.where(a <= -180.0, a + 360.0, a)


def wraparound_deg(a, b):
    """Angular distance on the circle in degrees; -175 and 177 are 8 apart."""
    return np.abs(wrap_deg(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)))


def random_scene(L, delta_min_deg, seed=None, amplitudes="equal"):
    """``L`` sources uniform on the circle with wraparound separation >= ``delta_min_deg``.

    The circular gaps are ``delta + (360 - L delta) * Dirichlet(1, ..., 1)``
    after a uniform rotation, which is exactly the uniform law conditioned on
    the separation (what rejection sampling would produce, without the waiting).

    Parameters
    ----------
    seed : int, SeedSequence or Generator
    amplitudes : {"equal", "random-phase"}
        ``equal`` gives every source amplitude 1; ``random-phase`` gives unit
        magnitude and independent uniform phases.

    Returns
    -------
    list of (theta_rad, complex amplitude), sorted by angle.
    """
    L = int(L)
    if L < 1:
        raise SceneError("need at least one source")
    if delta_min_deg < 0 or (L > 1 and L * delta_min_deg >= 360):
        raise SceneError(f"{L} sources cannot be {delta_min_deg} degrees apart on a 360 degree circle")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    start = rng.uniform(0, 360)
    if L == 1:
        ang = np.array([start])
    else:
        gaps = delta_min_deg + (360.0 - L * delta_min_deg) * rng.dirichlet(np.ones(L))
        ang = start + np.concatenate([[0.0], np.cumsum(gaps[:-1])])
    ang = np.sort(np.deg2rad(wrap_deg(ang)))
    if amplitudes == "equal":
        amps = np.ones(L, complex)
    elif amplitudes == "random-phase":
        amps = np.exp(2j * np.pi * rng.random(L))
    else:
        raise ValueError(f"unknown amplitude rule {amplitudes!r}")
    return list(zip(ang.tolist(), amps.tolist()))


def all_matched(true_rad, est_rad, threshold_deg):
    """True when the counts agree and every true DOA has an estimate within the threshold."""
    t = np.rad2deg(np.asarray(true_rad, dtype=float))
    e = np.rad2deg(np.asarray(est_rad, dtype=float))
    if t.size != e.size:
        return False
    if t.size == 0:
        return True
    d = wraparound_deg(t[:, None], e[None, :])
    return bool(np.all(d.min(axis=1) <= threshold_deg) and np.all(d.min(axis=0) <= threshold_deg))


@dataclass(frozen=True)
class GeometrySpec:
    """How to build the array for a given radius.

    kind "uca" puts ``n_sensors`` on a circle of the swept radius; kind "rpa"
    draws a random planar array whose farthest sensor sits at that radius.
    """

    kind: str = "uca"
    n_sensors: int = 40
    min_spacing_over_lambda: float = 0.25
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("uca", "rpa"):
            raise ValueError(f"unknown geometry kind {self.kind!r}")
        if self.n_sensors < 2:
            raise ValueError("need at least two sensors")

    def build(self, radius):
        if self.kind == "uca":
            return make_uca(self.n_sensors, radius)
        return make_rpa(self.n_sensors, self.min_spacing_over_lambda, radius, self.seed)


@dataclass(frozen=True)
class ExperimentConfig:
    """A grid of cells, each run for ``trials`` random scenes.

    ``P`` entries may be ``None`` to use ``min_p`` for the cell's radius.
    """

    geometry: GeometrySpec = field(default_factory=GeometrySpec)
    radii: tuple = (1.59,)
    P: tuple = (53,)
    L: tuple = (10,)
    delta_min_deg: tuple = (10.0,)
    trials: int = 50
    threshold_deg: float = 0.001
    seed: int = 0
    gamma_db: float = manifold.RULE_GAMMA_DB
    amplitudes: str = "equal"
    solver: sdp.SolverOptions = field(default_factory=sdp.SolverOptions)

    def __post_init__(self):
        for name in ("radii", "P", "L", "delta_min_deg"):
            vals = tuple(getattr(self, name))
            if not vals:
                raise ValueError(f"{name} must not be empty")
            object.__setattr__(self, name, vals)
        if int(self.trials) != self.trials or self.trials < 1:
            raise ValueError("trials must be a positive integer")
        if not self.threshold_deg > 0:
            raise ValueError("threshold_deg must be positive")
        for r in self.radii:
            if not r > 0:
                raise ValueError("radii must be positive")
        for L, d in itertools.product(self.L, self.delta_min_deg):
            if int(L) != L or L < 1:
                raise ValueError("L values must be positive integers")
            if L > 1 and L * d >= 360:
                raise ValueError(f"L={L} with delta_min={d} deg does not fit on the circle")
        for p in self.P:
            if p is not None and (int(p) != p or p < 3 or p % 2 == 0):
                raise ValueError(f"P values must be odd integers >= 3 (or auto), got {p}")

    def cells(self):
        """Cell parameter tuples ``(radius, P, L, delta)`` in row order; P resolved."""
        out = []
        for r, p, L, d in itertools.product(self.radii, self.P, self.L, self.delta_min_deg):
            if p is None:
                p = manifold.min_p(r, self.gamma_db)
            out.append((float(r), int(p), int(L), float(d)))
        return out


def cell_key(row):
    """Hashable identity of a cell, as produced by :func:`format_row` values."""
    return (repr(float(row[0])), str(int(row[1])), str(int(row[2])), repr(float(row[3])))


def trial_seed(seed, L, delta_min_deg, trial):
    # keyed by scene parameters only, so cells that differ in P or radius share scenes
    return np.random.SeedSequence([int(seed), int(L), int(round(delta_min_deg * 1000)), int(trial)])


def run_cell(cfg, cell):
    """Run all trials of one cell; returns the in-memory result row (a dict)."""
    radius, P, L, delta = cell
    geom = cfg.geometry.build(radius)
    ok = fails = iters = 0
    t0 = time.perf_counter()
    for trial in range(cfg.trials):
        rng = np.random.default_rng(trial_seed(cfg.seed, L, delta, trial))
        src = random_scene(L, delta, rng, cfg.amplitudes)
        th = np.array([t for t, _ in src])
        y = steering(geom, th) @ np.array([s for _, s in src])
        try:
            res = estimate(y, geom, P, cfg.solver, cfg.gamma_db)
        except EstimationError as exc:
            fails += 1
            iters += exc.solution.iterations
            continue
        except (rooting.RootingError, rooting.DegeneratePolynomialError, ConditioningError):
            continue
        iters += res.solution.iterations
        ok += all_matched(th, res.doa.angles, cfg.threshold_deg)
    return {
        "radius_over_lambda": radius,
        "P": P,
        "L": L,
        "delta_min_deg": delta,
        "trials": cfg.trials,
        "success_prob": ok / cfg.trials,
        "solver_fail_frac": fails / cfg.trials,
        "mean_iterations": iters / cfg.trials,
        "mean_runtime_s": (time.perf_counter() - t0) / cfg.trials,
    }


def _quiet_run_cell(args):
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", manifold.ManifoldSizeWarning)
        return run_cell(*args)


def success_sweep(cfg, jobs=1, skip=()):
    """Yield one result row per cell, in cell order.

    Parameters
    ----------
    jobs : int
        Worker processes. Results do not depend on it.
    skip : collection of cell keys
        Cells already done (see :func:`cell_key`), e.g. when resuming.
    """
    skip = set(skip)
    todo = [c for c in cfg.cells() if cell_key(c) not in skip]
    args = [(cfg, c) for c in todo]
    if jobs <= 1 or len(todo) <= 1:
        for a in args:
            yield _quiet_run_cell(a)
        return
    with ProcessPoolExecutor(max_workers=min(jobs, len(todo))) as ex:
        yield from ex.map(_quiet_run_cell, args)


def format_row(row, columns=SWEEP_COLUMNS):
    """Stringify a result row; floats use ``repr`` so re-parsing is exact."""
    out = []
    for c in columns:
        v = row[c]
        out.append(str(v) if isinstance(v, (int, np.integer)) and not isinstance(v, bool) else repr(float(v)))
    return out


def parse_row(values, columns=SWEEP_COLUMNS):
    """Inverse of :func:`format_row`."""
    if len(values) != len(columns):
        raise ValueError(f"expected {len(columns)} fields, got {len(values)}")
    row = {}
    for c, v in zip(columns, values):
        row[c] = int(v) if c in ("P", "L", "trials") else float(v)
        if isinstance(row[c], float) and not math.isfinite(row[c]):
            raise ValueError(f"non-finite value in column {c}")
    return row


def write_sweep_csv(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for r in rows:
            w.writerow(format_row(r))


def read_sweep_csv(path):
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd, None)
        if tuple(header or ()) != SWEEP_COLUMNS:
            raise ValueError(f"{path}: unexpected header {header}")
        return [parse_row(r) for r in rd if r]


def with_trials(cfg, trials):
    return replace(cfg, trials=trials)
