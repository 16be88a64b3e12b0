"""Planar array geometries and their far-field steering vectors."""

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

CSV_HEADER = ("x_over_lambda", "y_over_lambda")


class GeometryError(ValueError):
    """Invalid or unrealisable array geometry."""


def _frozen(a):
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class ArrayGeometry:
    """Sensor positions of a planar array.

    Parameters
    ----------
    positions : (M, 2) array_like
        Sensor coordinates in meters.
    wavelength : float
        Carrier wavelength in meters.
    reference : (2,) array_like
        Phase reference point in meters. Steering phases are measured from
        here, so it also sets how many Fourier coefficients the manifold needs.
    """

    positions: np.ndarray
    wavelength: float = 1.0
    reference: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        if pos.ndim != 2 or pos.shape[1] != 2:
            raise GeometryError(f"positions must have shape (M, 2), got {pos.shape}")
        if pos.shape[0] < 2:
            raise GeometryError("an array needs at least two sensors")
        if not np.all(np.isfinite(pos)):
            raise GeometryError("sensor positions must be finite")
        if not (np.isfinite(self.wavelength) and self.wavelength > 0):
            raise GeometryError("wavelength must be positive")
        ref = np.asarray(self.reference, dtype=float).reshape(-1)
        if ref.shape != (2,) or not np.all(np.isfinite(ref)):
            raise GeometryError("reference must be a finite 2-vector")
        object.__setattr__(self, "positions", _frozen(pos))
        object.__setattr__(self, "reference", _frozen(ref))
        object.__setattr__(self, "wavelength", float(self.wavelength))

    @property
    def n_sensors(self):
        return self.positions.shape[0]

    @property
    def relative_positions(self):
        """Sensor positions relative to the reference, in wavelengths."""
        return (self.positions - self.reference) / self.wavelength

    @property
    def radii(self):
        """Normalized distances ``|p_m| / lambda`` from the reference."""
        return np.hypot(*self.relative_positions.T)

    @property
    def polar_angles(self):
        """Polar angle of each sensor seen from the reference (radians)."""
        rel = self.relative_positions
        return np.arctan2(rel[:, 1], rel[:, 0])

    @property
    def max_radius(self):
        return float(self.radii.max())

    def with_reference(self, reference):
        return ArrayGeometry(self.positions, self.wavelength, reference)

    def centered(self):
        """Same sensors, reference moved to the centroid."""
        return self.with_reference(self.positions.mean(axis=0))

    def rotated(self, phi):
        """Rotate every sensor (and the reference) by ``phi`` radians about the origin."""
        c, s = np.cos(phi), np.sin(phi)
        rot = np.array([[c, -s], [s, c]])
        return ArrayGeometry(self.positions @ rot.T, self.wavelength, rot @ self.reference)

    def __eq__(self, other):
        if not isinstance(other, ArrayGeometry):
            return NotImplemented
        return (
            self.wavelength == other.wavelength
            and np.array_equal(self.positions, other.positions)
            and np.array_equal(self.reference, other.reference)
        )

    __hash__ = None


def steering(geom, theta):
    """Steering vector(s) ``a_m(theta) = exp(-j 2 pi |p_m|/lambda cos(theta - angle(p_m)))``.

    Parameters
    ----------
    geom : ArrayGeometry
    theta : float or array_like
        Azimuth(s) in radians.

    Returns
    -------
    ndarray
        Shape ``(M,)`` for scalar ``theta``, otherwise ``(M, K)``.
    """
    theta = np.asarray(theta, dtype=float)
    radii = geom.radii[:, None]
    phase = 2 * np.pi * radii * np.cos(theta.reshape(1, -1) - geom.polar_angles[:, None])
    a = np.exp(-1j * phase)
    return a[:, 0] if theta.ndim == 0 else a


def make_uca(n_sensors, radius_over_lambda, wavelength=1.0):
    """Uniform circular array centred on the reference; sensor m sits at angle 2*pi*m/M."""
    if n_sensors < 2:
        raise GeometryError("a UCA needs at least two sensors")
    if not radius_over_lambda > 0:
        raise GeometryError("UCA radius must be positive")
    phi = 2 * np.pi * np.arange(n_sensors) / n_sensors
    r = radius_over_lambda * wavelength
    return ArrayGeometry(np.column_stack([r * np.cos(phi), r * np.sin(phi)]), wavelength)


def make_rpa(
    n_sensors,
    min_spacing_over_lambda,
    max_radius_over_lambda,
    seed,
    wavelength=1.0,
    max_attempts=10**6,
    touch_boundary=True,
):
    """Random planar array drawn uniformly in a disk, with a minimum sensor spacing.

    Points are proposed uniformly in the disk of radius ``max_radius`` and
    kept if they clear every accepted sensor by ``min_spacing``. With
    ``touch_boundary`` the result is scaled up so its farthest sensor lies
    exactly on the disk edge; scaling by a factor >= 1 can only widen the
    spacings.
    """
    if n_sensors < 2:
        raise GeometryError("an array needs at least two sensors")
    R = float(max_radius_over_lambda)
    d = float(min_spacing_over_lambda)
    if R <= 0 or d < 0:
        raise GeometryError("need max radius > 0 and min spacing >= 0")
    # necessary packing condition: M disks of radius d/2 inside radius R + d/2
    if n_sensors * (d / 2) ** 2 > (R + d / 2) ** 2:
        raise GeometryError(f"cannot pack {n_sensors} sensors {d} wavelengths apart within radius {R}")

    rng = np.random.default_rng(seed)
    pts = np.empty((n_sensors, 2))
    count = 0
    for _ in range(max_attempts):
        rho = R * np.sqrt(rng.random())
        phi = 2 * np.pi * rng.random()
        p = np.array([rho * np.cos(phi), rho * np.sin(phi)])
        if count and np.min(np.hypot(*(pts[:count] - p).T)) < d:
            continue
        pts[count] = p
        count += 1
        if count == n_sensors:
            break
    else:
        raise GeometryError(
            f"placed only {count} of {n_sensors} sensors after {max_attempts} attempts"
        )
    if touch_boundary:
        far = np.hypot(*pts.T).max()
        if far > 0:
            pts *= R / far
    return ArrayGeometry(pts * wavelength, wavelength)


def load_geometry_csv(path, wavelength=1.0, reference="centroid"):
    """Read sensor positions (in wavelengths) from a two-column CSV.

    ``reference`` is ``"centroid"``, ``"origin"`` or an explicit (x, y) pair in
    wavelengths.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(h.strip() for h in next(reader, ()))
        if header != CSV_HEADER:
            raise GeometryError(f"{path}: expected header {','.join(CSV_HEADER)}, got {','.join(header)}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                rows.append([float(row[0]), float(row[1])])
            except (ValueError, IndexError):
                raise GeometryError(f"{path}:{lineno}: malformed row {row!r}") from None
    pos = np.asarray(rows, dtype=float).reshape(-1, 2)
    if isinstance(reference, str):
        if reference == "centroid":
            ref = pos.mean(axis=0) if len(pos) else np.zeros(2)
        elif reference == "origin":
            ref = np.zeros(2)
        else:
            raise GeometryError(f"unknown reference {reference!r}")
    else:
        ref = np.asarray(reference, dtype=float)
    return ArrayGeometry(pos * wavelength, wavelength, ref * wavelength)


def save_geometry_csv(geom, path):
    """Write absolute sensor positions, normalized by the wavelength."""
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for x, y in geom.positions / geom.wavelength:
            w.writerow([repr(float(x)), repr(float(y))])
