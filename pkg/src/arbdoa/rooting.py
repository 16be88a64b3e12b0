"""From dual polynomial to DOAs.

The dual polynomial ``b(z) = sum_k h_k z^k`` has modulus at most one on the
unit circle and touches one exactly at the source directions. Those points
are the unit-circle roots of ``p(z) = 1 - |b(z)|^2``, a Laurent polynomial
whose coefficients are ``delta_k - r_k`` with ``r`` the autocorrelation of
``h``. Multiplying by ``z^(P-1)`` gives an ordinary polynomial ``q`` of
degree ``2(P-1)``.
"""

from dataclasses import dataclass, field

import numpy as np

DEGENERATE_TOL = 1e-10
UNIT_TOL = 0.02
CLUSTER_DEG = 0.05
MAX_SWEEPS = 500
RESIDUAL_RTOL = 1e-8
_EPS = np.finfo(float).eps


class RootingError(RuntimeError):
    """Aberth iteration did not converge."""

    def __init__(self, worst_residual, sweeps):
        self.worst_residual = float(worst_residual)
        self.sweeps = int(sweeps)
        super().__init__(f"root finder did not converge in {sweeps} sweeps (worst relative residual {worst_residual:.2e})")


class DegeneratePolynomialError(ValueError):
    """Polynomial vanishes identically, e.g. |b| = 1 on the whole circle."""


@dataclass
class DoaEstimate:
    """Estimated directions, with per-angle root diagnostics.

    Attributes
    ----------
    angles : ndarray
        Radians in (-pi, pi], ascending.
    root_distances : ndarray
        ``min ||z| - 1|`` over the roots merged into each angle.
    amplitudes : ndarray or None
        Complex amplitudes, filled in by the pipeline.
    """

    angles: np.ndarray
    root_distances: np.ndarray
    amplitudes: np.ndarray = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def angles_deg(self):
        return np.rad2deg(self.angles)

    def __len__(self):
        return len(self.angles)


def _as_dual(h):
    h = np.asarray(h, dtype=complex).reshape(-1)
    if h.size % 2 == 0:
        raise ValueError(f"dual polynomial must have odd length, got {h.size}")
    return h


def autocorrelation(h):
    """``r_k = sum_j h_j conj(h_{j-k})`` for ``k = -(P-1)..P-1``.

    Only ``k >= 0`` is computed; the negative lags are written as the
    conjugate mirror, so ``r[-k] == conj(r[k])`` holds bit for bit.
    """
    h = _as_dual(h)
    P = h.size
    full = np.convolve(h, np.conj(h[::-1]))  # lag k at index k + P - 1
    r = np.empty(2 * P - 1, complex)
    r[P - 1 :] = full[P - 1 :]
    r[P - 1] = r[P - 1].real
    r[: P - 1] = np.conj(full[P:][::-1])
    return r


def nonneg_poly(h):
    """Ascending coefficients of ``q(z) = z^(P-1) (1 - sum_k r_k z^k)``.

    On the unit circle ``q(e^{jt}) = e^{j(P-1)t} p(e^{jt})``, so the two share
    their unit-circle roots.
    """
    r = autocorrelation(h)
    q = -r
    q[(r.size - 1) // 2] += 1.0
    return q


def eval_nonneg(h, theta):
    """Real values of ``p(e^{j theta}) = 1 - |b(e^{j theta})|^2``."""
    h = _as_dual(h)
    N = (h.size - 1) // 2
    theta = np.asarray(theta, dtype=float)
    b = np.exp(1j * np.multiply.outer(theta, np.arange(-N, N + 1))) @ h
    return 1.0 - np.abs(b) ** 2


def _horner(c, z):
    """Value and derivative of ascending-coefficient polynomial ``c`` at ``z``."""
    p = np.full_like(z, c[-1])
    dp = np.zeros_like(z)
    for a in c[-2::-1]:
        dp = dp * z + p
        p = p * z + a
    return p, dp


def _newton_ratio(c, z):
    """``q(z) / q'(z)`` for every z, evaluated on the reversed polynomial outside the disk."""
    n = c.size - 1
    out = np.empty_like(z)
    inside = np.abs(z) <= 1
    if inside.any():
        p, dp = _horner(c, z[inside])
        out[inside] = p / dp
    if (~inside).any():
        zo = z[~inside]
        w = 1 / zo
        p, dp = _horner(c[::-1], w)
        out[~inside] = zo * p / (n * p - w * dp)
    return out


def _relative_residual(c, z):
    a = np.abs(c)
    absz = np.abs(z)
    num = np.empty(z.shape)
    den = np.empty(z.shape)
    inside = absz <= 1
    if inside.any():
        num[inside] = np.abs(_horner(c, z[inside])[0])
        den[inside] = _horner(a.astype(complex), absz[inside].astype(complex))[0].real
    if (~inside).any():
        w = 1 / z[~inside]
        # scale by |z|^-n on both sides to stay in range
        num[~inside] = np.abs(_horner(c[::-1], w)[0])
        den[~inside] = _horner(a[::-1].astype(complex), np.abs(w).astype(complex))[0].real
    return num / np.where(den > 0, den, 1.0)


def _initial_guess(c):
    """Points on circles given by the upper convex hull of (j, log|c_j|) (Newton polygon)."""
    n = c.size - 1
    with np.errstate(divide="ignore"):
        lg = np.log(np.abs(c))
    pts = [j for j in range(n + 1) if np.isfinite(lg[j])]
    hull = []
    for j in pts:
        while len(hull) >= 2:
            j1, j2 = hull[-2], hull[-1]
            if (lg[j2] - lg[j1]) * (j - j1) <= (lg[j] - lg[j1]) * (j2 - j1):
                hull.pop()
            else:
                break
        hull.append(j)
    z = []
    for a, b in zip(hull[:-1], hull[1:]):
        k = b - a
        rad = np.exp((lg[a] - lg[b]) / k)
        offset = 2 * np.pi * a / n + 0.4
        z.extend(rad * np.exp(1j * (2 * np.pi * np.arange(k) / k + offset)))
    return np.asarray(z, complex)


def roots(q, max_sweeps=MAX_SWEEPS, rtol=RESIDUAL_RTOL):
    """All roots of ``sum_j q[j] z^j`` by Aberth–Ehrlich simultaneous iteration.

    Parameters
    ----------
    q : array_like
        Ascending coefficients. Leading coefficients below ``1e-14 * max|q|``
        are trimmed; trailing (low order) zeros yield exact roots at 0.

    Returns
    -------
    ndarray of complex
        Roots, each with ``|q(z)| <= rtol * sum_j |q_j| |z|^j``.
    """
    c = np.asarray(q, dtype=complex).reshape(-1)
    scale = np.max(np.abs(c), initial=0.0)
    if scale <= DEGENERATE_TOL:
        raise DegeneratePolynomialError("polynomial is identically zero within tolerance")
    c = c / scale
    small = np.abs(c) < 1e-14
    hi = c.size - 1 - int(np.argmin(small[::-1]))
    lo = int(np.argmin(small))
    zeros_at_origin = np.zeros(lo, complex)
    c = c[lo : hi + 1]
    n = c.size - 1
    if n == 0:
        return zeros_at_origin
    if n == 1:
        return np.concatenate([zeros_at_origin, [-c[0] / c[1]]])

    z = _initial_guess(c)
    active = np.ones(n, bool)
    for sweep in range(1, max_sweeps + 1):
        idx = np.nonzero(active)[0]
        za = z[idx]
        ratio = _newton_ratio(c, za)
        diff = za[:, None] - z[None, :]
        diff[np.arange(idx.size), idx] = 1.0
        s = np.sum(1 / diff, axis=1) - 1.0
        w = ratio / (1 - ratio * s)
        w[~np.isfinite(w)] = 0.0
        z[idx] = za - w
        done = np.abs(w) <= 4 * _EPS * np.maximum(np.abs(z[idx]), 1e-300)
        done |= _relative_residual(c, z[idx]) <= 4 * _EPS * n
        active[idx[done]] = False
        if not active.any():
            break
    res = _relative_residual(c, z)
    worst = float(res.max())
    if worst > rtol:
        raise RootingError(worst, sweep)
    return np.concatenate([zeros_at_origin, z])


def _wrap(a):
    """Map angles to (-pi, pi]."""
    a = np.mod(a + np.pi, 2 * np.pi) - np.pi
    return np.where(a <= -np.pi, a + 2 * np.pi, a)


def extract_doas(q_roots, tol=UNIT_TOL, cluster_deg=CLUSTER_DEG):
    """Angles of roots within ``tol`` of the unit circle, merged within ``cluster_deg`` degrees."""
    z = np.asarray(q_roots, dtype=complex).reshape(-1)
    dist = np.abs(np.abs(z) - 1)
    keep = dist <= tol
    ang = np.angle(z[keep])
    d = dist[keep]
    if ang.size == 0:
        return DoaEstimate(np.zeros(0), np.zeros(0), diagnostics={"cluster_sizes": []})
    order = np.argsort(ang)
    ang, d = ang[order], d[order]
    width = np.deg2rad(cluster_deg)
    breaks = np.nonzero(np.diff(ang) > width)[0] + 1
    groups = np.split(np.arange(ang.size), breaks)
    if len(groups) > 1 and ang[0] + 2 * np.pi - ang[-1] <= width:
        groups[0] = np.concatenate([groups[-1], groups[0]])
        groups.pop()
    angles = np.array([np.angle(np.mean(np.exp(1j * ang[g]))) for g in groups])
    angles = _wrap(angles)
    dmin = np.array([d[g].min() for g in groups])
    sizes = np.array([g.size for g in groups])
    order = np.argsort(angles)
    return DoaEstimate(angles[order], dmin[order], diagnostics={"cluster_sizes": sizes[order].tolist()})


def doas_from_dual(h, tol=UNIT_TOL, cluster_deg=CLUSTER_DEG):
    """Convenience chain: nonneg_poly, roots, extract_doas."""
    return extract_doas(roots(nonneg_poly(h)), tol, cluster_deg)
