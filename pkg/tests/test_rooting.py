import functools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from arbdoa import geometry as g
from arbdoa import manifold as mf
from arbdoa import rooting as ro
from arbdoa import sdp
from oracles import brute_autocorrelation, dual_poly_direct, poly_eval

cplx = st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False)
odd_len = st.integers(0, 10).map(lambda n: 2 * n + 1)


def test_autocorrelation_examples():
    assert np.array_equal(ro.autocorrelation([1.0]), [1.0])
    assert np.array_equal(ro.autocorrelation([0, 1, 0]), [0, 0, 1, 0, 0])
    rng = np.random.default_rng(7)
    h = rng.normal(size=7) + 1j * rng.normal(size=7)
    assert np.allclose(ro.autocorrelation(h), brute_autocorrelation(h), atol=1e-14, rtol=0)


def test_autocorrelation_rejects_even_length():
    with pytest.raises(ValueError):
        ro.autocorrelation([1, 2])


@given(odd_len.flatmap(lambda n: arrays(complex, n, elements=cplx)))
def test_autocorrelation_hermitian_exact(h):
    r = ro.autocorrelation(h)
    assert np.array_equal(r[::-1], np.conj(r))
    assert np.allclose(r, brute_autocorrelation(h), atol=1e-9 * (1 + np.abs(h).max() ** 2))


@given(odd_len.flatmap(lambda n: arrays(complex, n, elements=cplx)), st.floats(-np.pi, np.pi))
def test_nonneg_poly_on_circle(h, theta):
    # q(e^{jt}) = e^{j(P-1)t} p(e^{jt}) with p = 1 - |b|^2
    q = ro.nonneg_poly(h)
    z = np.exp(1j * theta)
    p = 1 - abs(dual_poly_direct(h, theta)[0]) ** 2
    scale = 1 + np.sum(np.abs(h)) ** 2
    assert abs(poly_eval(q, z) - z ** (h.size - 1) * p) <= 1e-9 * scale
    assert abs(ro.eval_nonneg(h, theta) - p) <= 1e-9 * scale


def test_zero_h_has_no_doas():
    q = ro.nonneg_poly(np.zeros(5))
    assert np.array_equal(q, np.eye(9)[4])
    est = ro.extract_doas(ro.roots(q))
    assert len(est) == 0


def test_unimodular_dual_is_degenerate():
    with pytest.raises(ro.DegeneratePolynomialError):
        ro.roots(ro.nonneg_poly([0, 0, 1]))


def test_simple_roots():
    z = ro.roots([-1, 0, 1])
    assert np.allclose(np.sort_complex(z), [-1, 1])


def test_double_root_recovered():
    w = np.exp(1j * np.pi / 3)
    q = np.poly([w, w, 0.5])[::-1]
    z = ro.roots(q)
    near = z[np.abs(z - w) < 0.1]
    assert near.size == 2
    assert np.all(np.abs(near - w) < 1e-5)


@pytest.mark.parametrize("seed", range(5))
def test_random_degree_20_residual(seed):
    rng = np.random.default_rng(seed)
    q = rng.normal(size=21) + 1j * rng.normal(size=21)
    z = ro.roots(q)
    assert z.size == 20
    assert np.all(np.abs(poly_eval(q, z)) <= 1e-8 * np.linalg.norm(q) * np.maximum(1, np.abs(z)) ** 20)
    ref = np.roots(q[::-1])
    assert all(np.min(np.abs(ref - v)) < 1e-8 for v in z)


def test_roots_at_origin_and_infinity():
    z = ro.roots([0, 0, 2, 1, 0])  # z^2 (z + 2), zero leading term trimmed
    assert np.allclose(np.sort_complex(z), [-2, 0, 0])


def test_zero_polynomial():
    with pytest.raises(ro.DegeneratePolynomialError):
        ro.roots(np.zeros(4))


def test_rooting_error_reports_residual():
    rng = np.random.default_rng(1)
    with pytest.raises(ro.RootingError) as ei:
        ro.roots(rng.normal(size=40), max_sweeps=1)
    assert ei.value.worst_residual > 1e-8


def test_extract_filters_and_clusters():
    assert len(ro.extract_doas(0.5 * np.exp(1j * np.linspace(0, 6, 10)))) == 0
    t = np.deg2rad(40.0)
    split = [1.001 * np.exp(1j * (t + 1e-5)), 0.999 * np.exp(1j * (t - 1e-5)), 1.5]
    est = ro.extract_doas(split)
    assert len(est) == 1
    assert est.angles_deg[0] == pytest.approx(40.0, abs=1e-6)
    assert est.diagnostics["cluster_sizes"] == [2]
    assert est.root_distances[0] == pytest.approx(0.001)


def test_extract_clusters_across_pi():
    e = np.deg2rad(0.01)
    est = ro.extract_doas([np.exp(1j * (np.pi - e)), np.exp(1j * (-np.pi + e))])
    assert len(est) == 1
    assert abs(abs(est.angles_deg[0]) - 180) < 1e-9
    assert -np.pi < est.angles[0] <= np.pi


def test_extract_output_sorted():
    z = np.exp(1j * np.deg2rad([100, -50, 3]))
    assert np.allclose(ro.extract_doas(z).angles_deg, [-50, 3, 100])


@functools.lru_cache(maxsize=None)
def solved_dual():
    geom = g.make_uca(16, 0.8)
    basis = mf.build_basis(geom, mf.min_p(0.8))
    y = g.steering(geom, np.deg2rad([-70.0, 15.0, 100.0])) @ np.array([1.0, 2.0, 1.5])
    sol = sdp.solve(sdp.assemble(basis, y))
    assert sol.ok
    return sol.h, basis, sol


@given(st.floats(-np.pi, np.pi))
def test_extract_invariant_to_global_phase(phi):
    h = solved_dual()[0]
    a = ro.doas_from_dual(h)
    b = ro.doas_from_dual(np.exp(1j * phi) * h)
    assert len(a) == 3
    assert np.allclose(a.angles, b.angles, atol=1e-9)


def test_nonneg_on_circle_at_optimum():
    h, basis, sol = solved_dual()
    theta = 2 * np.pi * np.arange(8192) / 8192
    assert ro.eval_nonneg(h, theta).min() >= -1e-6


def test_root_set_conjugate_reciprocal():
    h = solved_dual()[0]
    z = ro.roots(ro.nonneg_poly(h))
    z = z[(np.abs(z) > 0.2) & (np.abs(z) < 5)]
    mirror = 1 / np.conj(z)
    assert all(np.min(np.abs(z - m)) <= 1e-6 * max(1, abs(m)) for m in mirror)
