"""End-to-end single-snapshot DOA estimation.

basis -> dual SDP -> dual polynomial -> unit-circle roots -> amplitudes.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from . import manifold, numkit, rooting, sdp
from .geometry import steering


class EstimationError(RuntimeError):
    """The solver did not reach an optimal point."""

    def __init__(self, solution):
        self.solution = solution
        msg = f"SDP solver stopped with status {solution.status.value}"
        if solution.message:
            msg += f": {solution.message}"
        super().__init__(msg)


@dataclass
class Scenario:
    """A noise-free test scene.

    Parameters
    ----------
    geometry : ArrayGeometry
    sources : list of (theta, s)
        Angles in radians and complex amplitudes.
    P : int or None
        Number of Fourier coefficients; ``None`` picks ``min_p`` of the array.
    """

    geometry: object
    sources: list
    P: int = None
    gamma_db: float = manifold.RULE_GAMMA_DB
    solver: sdp.SolverOptions = field(default_factory=sdp.SolverOptions)
    unit_tol: float = rooting.UNIT_TOL
    cluster_deg: float = rooting.CLUSTER_DEG

    def __post_init__(self):
        self.sources = [(float(t), complex(s)) for t, s in self.sources]
        for t, _ in self.sources:
            if not -np.pi < t <= np.pi:
                raise ValueError(f"source angle {t} rad is outside (-pi, pi]")

    @property
    def angles(self):
        return np.array([t for t, _ in self.sources])

    @property
    def amplitudes(self):
        return np.array([s for _, s in self.sources])

    def resolved_p(self):
        return self.P if self.P is not None else manifold.min_p(self.geometry.max_radius, self.gamma_db)


def synthesize(scn):
    """Noise-free snapshot ``y = sum_l s_l a(theta_l)``."""
    if not scn.sources:
        return np.zeros(scn.geometry.n_sensors, complex)
    return steering(scn.geometry, scn.angles) @ scn.amplitudes


def recover_amplitudes(y, geom, angles):
    """Least-squares amplitudes for known angles.

    Returns
    -------
    amplitudes : ndarray
    residual : float
        ``||A s - y||``.
    """
    angles = np.asarray(angles, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=complex)
    if angles.size == 0:
        return np.zeros(0, complex), float(np.linalg.norm(y))
    if angles.size > geom.n_sensors:
        raise numkit.ShapeError(f"{angles.size} angles exceed {geom.n_sensors} sensors")
    A = steering(geom, angles)
    s = numkit.lstsq(A, y)
    return s, float(np.linalg.norm(A @ s - y))


@dataclass
class EstimateResult:
    """Estimate plus everything needed to reproduce the figures."""

    doa: rooting.DoaEstimate
    solution: sdp.SdpSolution
    basis: manifold.ManifoldBasis
    residual: float
    timing: dict

    @property
    def no_sources(self):
        return len(self.doa) == 0

    @property
    def h(self):
        return self.basis.dual_coefficients(self.solution.c_star)

    def to_dict(self, include_timing=True):
        amps = self.doa.amplitudes if self.doa.amplitudes is not None else np.zeros(0, complex)
        d = {
            "result": "NoSources" if self.no_sources else "Ok",
            "angles_deg": [float(a) for a in self.doa.angles_deg],
            "amplitude_magnitude": [float(v) for v in np.abs(amps)],
            "amplitude_phase_deg": [float(v) for v in np.rad2deg(np.angle(amps))],
            "root_distances": [float(v) for v in self.doa.root_distances],
            "cluster_sizes": list(self.doa.diagnostics.get("cluster_sizes", [])),
            "objective": self.solution.objective,
            "duality_gap": self.solution.duality_gap,
            "solver_status": self.solution.status.value,
            "iterations": self.solution.iterations,
            "P": self.basis.P,
            "ls_residual": self.residual,
        }
        if include_timing:
            d["timing"] = dict(self.timing)
        return d


def estimate(y, geom, P=None, opts=None, gamma_db=manifold.RULE_GAMMA_DB,
             unit_tol=rooting.UNIT_TOL, cluster_deg=rooting.CLUSTER_DEG):
    """Estimate DOAs and amplitudes from a single noise-free snapshot.

    Raises
    ------
    EstimationError
        If the SDP solver does not report ``Optimal``.
    rooting.RootingError, rooting.DegeneratePolynomialError, numkit.ConditioningError
        Passed through from the later stages.

    Notes
    -----
    An empty angle list (``result.no_sources``) is a valid outcome.
    """
    y = np.asarray(y, dtype=complex).reshape(-1)
    if y.size != geom.n_sensors:
        raise numkit.ShapeError(f"snapshot has {y.size} entries, geometry has {geom.n_sensors} sensors")
    if P is None:
        P = manifold.min_p(geom.max_radius, gamma_db)
    timing = {}
    t = time.perf_counter()
    basis = manifold.build_basis(geom, P, gamma_db)
    prob = sdp.assemble(basis, y)
    timing["assemble_s"] = time.perf_counter() - t

    sol = sdp.solve(prob, opts)
    timing["solve_s"] = sol.runtime_s
    if not sol.ok:
        raise EstimationError(sol)

    t = time.perf_counter()
    h = basis.dual_coefficients(sol.c_star)
    q = rooting.nonneg_poly(h)
    doa = rooting.extract_doas(rooting.roots(q), unit_tol, cluster_deg)
    timing["rooting_s"] = time.perf_counter() - t

    amps, res = recover_amplitudes(y, geom, doa.angles)
    doa.amplitudes = amps
    doa.diagnostics.update(duality_gap=sol.duality_gap, objective=sol.objective, ls_residual=res)
    timing["total_s"] = sum(timing.values())
    return EstimateResult(doa, sol, basis, res, timing)


def run_scenario(scn):
    y = synthesize(scn)
    return estimate(y, scn.geometry, scn.resolved_p(), scn.solver, scn.gamma_db, scn.unit_tol, scn.cluster_deg)
