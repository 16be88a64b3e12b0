"""Fourier-series representation of the array manifold.

Each conjugated sensor response ``a*_m(theta)`` is 2*pi-periodic and
band-limited, so a short Fourier series ``sum_k alpha_m[k] exp(j k theta)``
represents it to any desired accuracy. Stacking the coefficient vectors of
all sensors column-wise gives ``G^H``; the dual function of the DOA problem
is then the trigonometric polynomial with coefficients ``h = G^H c``.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import numkit
from .geometry import steering

RULE_GAMMA_DB = -160.0
RULE_SLOPE = 15.9
RULE_INTERCEPT = 27.03
SCAN_OVERSAMPLING = 4


class ManifoldSizeWarning(UserWarning):
    """Basis has fewer coefficients than the sizing rule asks for."""


def _odd_ceil(x):
    n = int(math.ceil(x - 1e-12))
    return n if n % 2 else n + 1


def _check_p(P):
    if int(P) != P or P < 3:
        raise ValueError(f"P must be an integer >= 3, got {P}")
    if P % 2 == 0:
        raise ValueError(f"P must be odd so that k spans -N..N, got {P}")
    return int(P)


@dataclass(frozen=True, eq=False)
class ManifoldBasis:
    """Per-sensor Fourier coefficients of the conjugate manifold.

    Attributes
    ----------
    G_H : (P, M) ndarray
        Column m holds ``alpha_m[k]`` for ``k = -N..N`` (top to bottom).
    gamma_db : float
        Truncation threshold the size was chosen for.
    """

    G_H: np.ndarray
    gamma_db: float = RULE_GAMMA_DB

    def __post_init__(self):
        G = np.array(self.G_H, dtype=complex)
        if G.ndim != 2:
            raise ValueError("G_H must be two-dimensional")
        _check_p(G.shape[0])
        G.flags.writeable = False
        object.__setattr__(self, "G_H", G)

    @property
    def P(self):
        return self.G_H.shape[0]

    @property
    def N(self):
        return (self.P - 1) // 2

    @property
    def n_sensors(self):
        return self.G_H.shape[1]

    @property
    def k(self):
        return np.arange(-self.N, self.N + 1)

    def conj_manifold(self, theta):
        """Series approximation of ``a*_m(theta)``; shape ``(M, K)``."""
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        E = np.exp(1j * np.outer(self.k, theta))
        return self.G_H.T @ E

    def dual_coefficients(self, c):
        """Coefficients ``h = G^H c`` of the dual polynomial."""
        return self.G_H @ np.asarray(c, dtype=complex)

    def reconstruction_error(self, geom, grid=2048):
        """Max over a uniform theta grid of ``|series - a*_m|`` for every sensor."""
        theta = 2 * np.pi * np.arange(grid) / grid - np.pi
        exact = np.conj(steering(geom, theta))
        return np.max(np.abs(self.conj_manifold(theta) - exact), axis=1)


def _coefficients(radii, polar_angles, P):
    """Columns of ``alpha_hat[k]``, k = -N..N, from a P-point DFT of the samples."""
    N = (P - 1) // 2
    theta = 2 * np.pi * np.arange(P) / P
    samples = np.exp(2j * np.pi * radii[None, :] * np.cos(theta[:, None] - polar_angles[None, :]))
    X = numkit.dft(samples, axis=0) / P
    # circular indexing: negative k wrap to the top of the DFT output
    out = X[np.arange(-N, N + 1) % P, :]
    out[:, radii == 0] = 0.0
    out[N, radii == 0] = 1.0
    return out


def fourier_coeffs(geom, m, P):
    """Fourier coefficients ``alpha_hat_m[k]``, ``k = -N..N``, of sensor ``m``'s conjugate response.

    Computed as ``(1/P) * DFT`` of ``a*_m`` sampled at ``2*pi*l/P``, so each
    coefficient carries the aliased tail ``sum_q alpha_m[k + qP]``.
    """
    P = _check_p(P)
    r = geom.radii[m : m + 1]
    phi = geom.polar_angles[m : m + 1]
    return _coefficients(r, phi, P)[:, 0]


def build_basis(geom, P, gamma_db=RULE_GAMMA_DB):
    """Assemble ``G^H`` (P x M) for every sensor of ``geom``.

    Warns with :class:`ManifoldSizeWarning` when ``P`` is below
    ``min_p(geom.max_radius, gamma_db)``.
    """
    P = _check_p(P)
    need = min_p(geom.max_radius, gamma_db)
    if P < need:
        warnings.warn(
            f"P={P} is below the {gamma_db:g} dB sizing rule (P >= {need}) for radius "
            f"{geom.max_radius:.3f} wavelengths",
            ManifoldSizeWarning,
            stacklevel=2,
        )
    return ManifoldBasis(_coefficients(geom.radii, geom.polar_angles, P), float(gamma_db))


def coefficient_magnitudes(radius, n_max=None):
    """``|alpha[k]|`` for ``k = 0..n_max`` of a sensor at ``radius`` wavelengths.

    Uses a DFT ``SCAN_OVERSAMPLING`` times longer than ``2*n_max + 1`` so the
    deep tail is not polluted by circular aliasing.
    """
    if n_max is None:
        n_max = int(math.ceil(4 * math.pi * radius + 40))
    Q = SCAN_OVERSAMPLING * (2 * n_max + 1)
    theta = 2 * np.pi * np.arange(Q) / Q
    X = numkit.dft(np.exp(2j * np.pi * radius * np.cos(theta))) / Q
    return np.abs(X[: n_max + 1])


def scanned_min_p(radius, gamma_db):
    """Smallest odd P (>= 3) whose discarded coefficients all sit below ``gamma_db``.

    The threshold applies to ``|alpha[k]|^2`` relative to the largest
    coefficient of the same sensor.
    """
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    if radius == 0:
        return 3
    mag = coefficient_magnitudes(radius)
    power_db = 20 * np.log10(np.maximum(mag, 1e-300) / mag.max())
    N = int(np.nonzero(power_db >= gamma_db)[0].max())
    return max(2 * N + 1, 3)


def linear_rule(radius):
    """The -160 dB straight-line fit ``P = 15.9 r + 27.03``, rounded up to odd."""
    return _odd_ceil(RULE_SLOPE * radius + RULE_INTERCEPT)


def min_p(max_radius_over_lambda, gamma_db=RULE_GAMMA_DB):
    """Minimum odd number of Fourier coefficients for a given array extent.

    At -160 dB the linear rule is used as a floor on the scanned value, which
    keeps the published choice (e.g. 53 at r = 1.59 wavelengths) while never
    going below what the scan shows is needed. Other thresholds use the scan.
    """
    r = float(max_radius_over_lambda)
    if r < 0:
        raise ValueError("radius must be nonnegative")
    if not -200 <= gamma_db <= -40:
        raise ValueError(f"gamma_db must lie in [-200, -40], got {gamma_db}")
    P = scanned_min_p(r, gamma_db)
    if r > 0 and math.isclose(gamma_db, RULE_GAMMA_DB):
        P = max(P, linear_rule(r))
    return P


def bandwidth_profile(radii, gamma_db_list):
    """Scanned minimum P for every (radius, gamma) pair.

    Returns
    -------
    list of (radius, gamma_db, min_p) tuples, grouped by gamma then radius.
    """
    rows = []
    for g in gamma_db_list:
        for r in radii:
            if r < 0:
                raise ValueError("radii must be nonnegative")
            rows.append((float(r), float(g), scanned_min_p(float(r), float(g))))
    return rows


def fit_line(rows):
    """Least-squares ``(slope, intercept)`` of min P against radius."""
    r = np.array([row[0] for row in rows], dtype=float)
    p = np.array([row[2] for row in rows], dtype=float)
    if r.size < 2:
        raise ValueError("need at least two rows to fit a line")
    slope, intercept = np.polyfit(r, p, 1)
    return float(slope), float(intercept)
