"""Fourier-domain dual SDP for gridless DOA estimation, and its solver.

The problem solved is

    maximize   Re{c^H y}
    subject to [[H, G^H c], [c^H G, 1]] >= 0,
               sum_i H[i, i] = 1,  sum_i H[i, i+j] = 0  (j = 1..P-1),

whose optimal value equals the atomic norm sum_l |s_l| of the noise-free
snapshot. The Hermitian block ``Z`` of size P+1 is handled through its real
symmetric embedding ``[[Re Z, -Im Z], [Im Z, Re Z]]``.

Since ``G^H c`` only enters through its range, ``c`` is eliminated: with the
thin SVD ``G^H = U S V^H`` the coupling becomes "the last column of ``Z``
lies in range(U)", and the objective is linear in that column. ``c`` is
recovered afterwards as ``V S^-1 U^H h``.

The solver is an infeasible-start primal-dual path-following method (HKM
direction, Mehrotra predictor-corrector) written against dense numpy/scipy
kernels. Problem sizes here are a few hundred at most.
"""

import enum
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from . import numkit

RANK_RTOL = 1e-12
RANGE_RTOL = 1e-6
STEP_FRACTION = 0.98
SIGMA_MIN = 0.3
FEAS_TOL = 1e-10


class Status(str, enum.Enum):
    OPTIMAL = "Optimal"
    MAX_ITER = "MaxIter"
    NUMERICAL_TROUBLE = "NumericalTrouble"


@dataclass(frozen=True)
class SolverOptions:
    """Interior-point settings.

    gap_tol is relative: ``<X, S> / max(1, |objective|)``.
    """

    gap_tol: float = 1e-8
    max_iter: int = 200
    psd_slack: float = 1e-8
    feas_tol: float = FEAS_TOL
    sigma_min: float = SIGMA_MIN

    def __post_init__(self):
        if not self.gap_tol > 0:
            raise ValueError("gap_tol must be positive")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ValueError("max_iter must be a positive integer")
        if not self.psd_slack >= 0:
            raise ValueError("psd_slack must be nonnegative")
        if not self.feas_tol > 0:
            raise ValueError("feas_tol must be positive")
        if not 0 <= self.sigma_min < 1:
            raise ValueError("sigma_min must lie in [0, 1)")


@dataclass
class SdpSolution:
    c_star: np.ndarray
    H_star: np.ndarray
    objective: float
    duality_gap: float
    iterations: int
    status: Status
    message: str = ""
    Z: np.ndarray = field(default=None, repr=False)
    runtime_s: float = 0.0

    @property
    def h(self):
        """Dual-polynomial coefficients ``G^H c*`` (last column of the optimal block)."""
        return self.Z[:-1, -1].copy()

    @property
    def ok(self):
        return self.status is Status.OPTIMAL


def _embed(E):
    """Real symmetric matrix ``A`` with ``<A, R(Z)> = Re tr(E^H Z)`` for Hermitian ``Z``."""
    R = np.block([[E.real, -E.imag], [E.imag, E.real]])
    return (R + R.T) / 4


def _project(X, nc):
    """Nearest matrix of the form R(Z) with Z Hermitian (X assumed symmetric)."""
    X = (X + X.T) / 2
    a = (X[:nc, :nc] + X[nc:, nc:]) / 2
    b = (X[nc:, :nc] - X[:nc, nc:]) / 2
    return np.block([[a, -b], [b, a]])


def _sym(A):
    return (A + A.T) / 2


class SdpProblem:
    """Assembled dual SDP for a basis and a snapshot.

    Attributes
    ----------
    n_trace_constraints : int
        P (one per diagonal offset j = 0..P-1).
    real_dim : int
        Size of the real symmetric embedding, 2(P+1).
    """

    def __init__(self, basis, y):
        y = np.asarray(y, dtype=complex).reshape(-1)
        if y.shape[0] != basis.n_sensors:
            raise numkit.ShapeError(f"snapshot has {y.shape[0]} entries, basis has {basis.n_sensors} sensors")
        self.basis = basis
        self.y = y
        P = basis.P
        self.P = P
        self.nc = P + 1
        self.real_dim = 2 * self.nc
        self.n_trace_constraints = P

        U, sv, Vh = np.linalg.svd(basis.G_H, full_matrices=True)
        rank = int(np.sum(sv > RANK_RTOL * sv[0])) if sv.size and sv[0] > 0 else 0
        self.rank = rank
        self._U = U[:, :rank]
        self._sv = sv[:rank]
        self._V = Vh[:rank].conj().T
        Uperp = U[:, rank:]

        coef = self._V.conj().T @ y
        ynorm = np.linalg.norm(y)
        self.out_of_range = 0.0 if ynorm == 0 else float(np.linalg.norm(y - self._V @ coef) / ynorm)
        g = self._U @ (coef / self._sv)

        nc = self.nc
        mats, rhs = [], []

        def add(E, val):
            mats.append(sp.csr_matrix(_embed(E)))
            rhs.append(val)

        E = np.zeros((nc, nc), complex)
        E[P, P] = 1
        add(E, 1.0)
        for j in range(P):
            E = np.zeros((nc, nc), complex)
            i = np.arange(P - j)
            E[i, i + j] = 1
            add(E, 1.0 if j == 0 else 0.0)
            if j:
                add(1j * E, 0.0)
        for u in Uperp.T:
            E = np.zeros((nc, nc), complex)
            E[:P, P] = u
            add(E, 0.0)
            add(1j * E, 0.0)

        E = np.zeros((nc, nc), complex)
        E[:P, P] = g
        self.C = _embed(E)
        self.b = np.asarray(rhs)
        self.n_constraints = len(rhs)
        # one row per constraint (for A(X)), and stacked blocks (for A_i X products)
        self._Aflat = sp.vstack([A.reshape(1, -1) for A in mats]).tocsr()
        self._Astack = sp.vstack(mats).tocsr()

    def A(self, X):
        return self._Aflat @ X.ravel()

    def A_adj(self, lam):
        n = self.real_dim
        return (self._Aflat.T @ lam).reshape(n, n)

    def recover_c(self, h):
        return self._V @ ((self._U.conj().T @ h) / self._sv)

    def complex_block(self, X):
        nc = self.nc
        Z = X[:nc, :nc] + 1j * X[nc:, :nc]
        return (Z + Z.conj().T) / 2


def assemble(basis, y):
    return SdpProblem(basis, y)


def _max_step(X, dX):
    """Largest t with X + t dX PSD (inf if dX is PSD)."""
    L = np.linalg.cholesky(X)
    Li = sla.solve_triangular(L, np.eye(X.shape[0]), lower=True)
    w = np.linalg.eigvalsh(_sym(Li @ dX @ Li.T))[0]
    return np.inf if w >= 0 else -1.0 / w


def _finish(prob, X, it, gap, status, message, t0):
    Z = prob.complex_block(X)
    P = prob.P
    h = Z[:P, P]
    c = prob.recover_c(h)
    obj = float(np.real(np.vdot(c, prob.y)))
    return SdpSolution(
        c_star=c,
        H_star=Z[:P, :P].copy(),
        objective=obj,
        duality_gap=float(gap),
        iterations=it,
        status=status,
        message=message,
        Z=Z,
        runtime_s=time.perf_counter() - t0,
    )


def _zero_solution(prob, t0, status=Status.OPTIMAL, message=""):
    P = prob.P
    Z = np.zeros((P + 1, P + 1), complex)
    Z[P, P] = 1
    Z[np.arange(P), np.arange(P)] = 1.0 / P
    return SdpSolution(
        np.zeros(prob.basis.n_sensors, complex), Z[:P, :P].copy(), 0.0, 0.0, 0, status, message, Z,
        time.perf_counter() - t0,
    )


def solve(prob, opts=None, callback=None):
    """Run the interior-point method on an assembled problem.

    Returns an :class:`SdpSolution` whose status is ``Optimal`` when the
    relative gap and both infeasibilities are below tolerance. ``callback``,
    if given, is called once per iteration with a dict of progress figures.
    """
    opts = opts or SolverOptions()
    t0 = time.perf_counter()
    if not np.any(prob.y):
        return _zero_solution(prob, t0)
    if prob.out_of_range > RANGE_RTOL:
        return _zero_solution(
            prob, t0, Status.NUMERICAL_TROUBLE,
            f"snapshot has a relative component {prob.out_of_range:.2e} outside the span of the basis "
            f"(rank {prob.rank} < {prob.basis.n_sensors} sensors); the dual problem is unbounded",
        )

    n, m, nc = prob.real_dim, prob.n_constraints, prob.nc
    b, C = prob.b, prob.C
    bnorm, cnorm = 1 + np.linalg.norm(b), 1 + np.linalg.norm(C)
    # primal-feasible start: H = I/P, h = 0; S = I is dual infeasible
    d0 = np.full(nc, 1.0 / prob.P)
    d0[-1] = 1.0
    X = np.diag(np.tile(d0, 2))
    S = np.eye(n)
    lam = np.zeros(m)
    gap = np.inf

    for it in range(opts.max_iter + 1):
        rp = b - prob.A(X)
        Rd = prob.A_adj(lam) - C - S
        xs = float(np.sum(X * S))
        mu = xs / n
        pobj = float(np.sum(C * X))
        gap = xs / max(1.0, abs(pobj))
        pinf = np.linalg.norm(rp) / bnorm
        dinf = np.linalg.norm(Rd) / cnorm
        if callback is not None:
            callback(dict(iteration=it, pobj=pobj, dobj=float(b @ lam), gap=gap, pinf=pinf, dinf=dinf, mu=mu))
        if gap <= opts.gap_tol and pinf <= opts.feas_tol and dinf <= opts.feas_tol:
            return _finish(prob, X, it, gap, Status.OPTIMAL, "", t0)
        if it == opts.max_iter:
            break

        try:
            Si = _sym(np.linalg.inv(S))
            Um = (prob._Astack @ X).reshape(m, -1)
            Vm = (prob._Astack @ Si).reshape(m, n, n).transpose(0, 2, 1).reshape(m, -1)
            cf = sla.cho_factor(_sym(Um @ Vm.T))
        except np.linalg.LinAlgError as exc:
            return _finish(prob, X, it, gap, Status.NUMERICAL_TROUBLE, f"Schur complement factorization failed: {exc}", t0)
        XRS = _sym(X @ Rd @ Si)

        def direction(Rc):
            base = Rc - XRS
            dlam = sla.cho_solve(cf, prob.A(base) - rp)
            dS = Rd + prob.A_adj(dlam)
            dX = base - _sym(X @ prob.A_adj(dlam) @ Si)
            return dX, dS, dlam

        try:
            dXa, dSa, _ = direction(-X)
            ap = min(1.0, _max_step(X, dXa))
            ad = min(1.0, _max_step(S, dSa))
            mu_aff = float(np.sum((X + ap * dXa) * (S + ad * dSa))) / n
            sigma = max(opts.sigma_min, (mu_aff / mu) ** 3)
            dX, dS, dlam = direction(sigma * mu * Si - X - _sym(dXa @ dSa @ Si))
            ap = min(1.0, STEP_FRACTION * _max_step(X, dX))
            ad = min(1.0, STEP_FRACTION * _max_step(S, dS))
        except np.linalg.LinAlgError as exc:
            return _finish(prob, X, it, gap, Status.NUMERICAL_TROUBLE, f"lost positive definiteness: {exc}", t0)

        # backtrack if the structural projection pushes an iterate out of the cone
        for _ in range(30):
            Xn = _project(X + ap * dX, nc)
            Sn = _project(S + ad * dS, nc)
            try:
                np.linalg.cholesky(Xn)
                np.linalg.cholesky(Sn)
                break
            except np.linalg.LinAlgError:
                ap *= 0.5
                ad *= 0.5
        else:
            return _finish(prob, X, it, gap, Status.NUMERICAL_TROUBLE, "step-size backtracking exhausted", t0)
        X, S, lam = Xn, Sn, lam + ad * dlam

    return _finish(prob, X, opts.max_iter, gap, Status.MAX_ITER, f"no convergence in {opts.max_iter} iterations", t0)


def dual_poly_on_grid(h, grid=8192):
    """Evaluate ``sum_k h_k exp(j k theta)`` at ``theta = 2*pi*l/grid``."""
    h = np.asarray(h, dtype=complex)
    P = h.size
    N = (P - 1) // 2
    if grid < P:
        raise ValueError(f"grid ({grid}) must be at least P ({P})")
    buf = np.zeros(grid, complex)
    buf[np.arange(-N, N + 1) % grid] = h
    return numkit.idft(buf) * grid


@dataclass(frozen=True)
class CertificateReport:
    max_magnitude: float
    argmax_rad: float
    grid: int
    tolerance: float

    @property
    def ok(self):
        return self.max_magnitude <= 1 + self.tolerance


def check_certificate(sol, basis, grid=8192, tolerance=1e-6):
    """Check ``|b(theta)| <= 1`` on a uniform grid for the dual polynomial of ``sol``."""
    h = basis.dual_coefficients(sol.c_star)
    mag = np.abs(dual_poly_on_grid(h, grid))
    i = int(np.argmax(mag))
    ang = 2 * np.pi * i / grid
    ang = ang - 2 * np.pi if ang > np.pi else ang
    return CertificateReport(float(mag[i]), float(ang), int(grid), float(tolerance))
