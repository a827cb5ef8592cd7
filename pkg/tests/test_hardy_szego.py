import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from grauert_lab import hardy_szego as hs
from grauert_lab import spectral_windows as sw
from grauert_lab import torus_geometry as tg


def test_mode_counts():
    mt = hs.enumerate_modes(2, 0, 0.5)
    assert len(mt) == 1 and mt.lam[0] == 0.0
    assert len(hs.enumerate_modes(2, 2, 0.5)) == 13


def test_mode_limit_guard():
    with pytest.raises(hs.ModeLimitError):
        hs.enumerate_modes(2, 50, 0.5, max_modes=100)


def test_gram_norm_examples():
    assert math.exp(hs.gram_norm([0, 0], 0.5)) == pytest.approx(math.pi, rel=1e-14)
    assert math.exp(hs.gram_norm([1, 0], 0.5)) == pytest.approx(math.pi * special.i0(2 * math.pi), rel=1e-13)
    assert hs.toeplitz_eigenvalue([0, 0], 0.5) == 0.0
    expect = 2 * math.pi * special.i1(2 * math.pi) / special.i0(2 * math.pi)
    assert hs.toeplitz_eigenvalue([1, 0], 0.5) == pytest.approx(expect, rel=1e-14)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.integers(-6, 6), min_size=2, max_size=3), st.sampled_from([0.25, 0.5, 1.0]))
def test_closed_forms_match_quadrature(k, tau):
    d = len(k)
    assert hs.gram_norm(k, tau, d) == pytest.approx(hs.gram_norm_quadrature(k, tau, d), abs=1e-10)
    lam = hs.toeplitz_eigenvalue(k, tau, d)
    assert lam == pytest.approx(hs.toeplitz_eigenvalue_quadrature(k, tau, d), rel=1e-10, abs=1e-12)


def test_eigenvalue_below_laplace_and_ratio_to_one():
    mt = hs.enumerate_modes(2, 40, 0.5)
    nz = mt.norms > 0
    assert np.all(mt.lam[nz] < mt.mu[nz])
    ks = np.arange(1, 200)
    ratio = [hs.toeplitz_eigenvalue([k, 0], 0.5) / (2 * math.pi * k) for k in ks]
    assert np.all(np.diff(ratio) > 0)
    assert ratio[-1] > 0.999


def test_bruteforce_matrix_diagonal():
    ks, M = hs.toeplitz_matrix_bruteforce(2, 0.5, 2)
    assert np.max(np.abs(M - M.conj().T)) < 1e-10
    assert np.max(np.abs(M - np.diag(np.diag(M)))) < 1e-10
    lam = np.array([hs.toeplitz_eigenvalue(k, 0.5, 2) for k in ks])
    assert np.diag(M).real == pytest.approx(lam, abs=1e-8)
    with pytest.raises(ValueError):
        hs.toeplitz_matrix_bruteforce(20, 0.5, 2)


@pytest.fixture(scope="module")
def setup():
    tau = 0.5
    w = sw.make_window("bump", 0.25)
    R = sw.hat_band_radius(w, 1e-13)
    mt = hs.enumerate_modes(2, hs.required_cutoff(500, R, tau, 2), tau)
    x = tg.boundary_point([0.1, 0.2], [0.3, 1.0], tau)
    y = tg.boundary_point([0.12, 0.19], [0.35, 1.0], tau)
    return w, mt, x, y


def test_hermitian_symmetry(setup):
    w, mt, x, y = setup
    a = hs.szego_smoothed_kernel(x, y, 400.0, w, mt)
    b = hs.szego_smoothed_kernel(y, x, 400.0, w, mt)
    assert abs(a - b.conjugate()) <= 1e-13 * abs(hs.szego_smoothed_kernel(x, x, 400.0, w, mt))


def test_thread_count_does_not_change_bits(setup):
    w, mt, x, y = setup
    a = hs.szego_smoothed_kernel(x, y, 450.0, w, mt, threads=1)
    b = hs.szego_smoothed_kernel(x, y, 450.0, w, mt, threads=4)
    assert a == b


def test_matches_direct_sum(setup):
    w, mt, x, y = setup
    lam = 300.0
    hat = np.asarray(sw.window_hat(w, lam - mt.lam))
    ph = 2j * math.pi * (mt.ks @ (x.u - y.u)) - 2 * math.pi * (mt.ks @ (x.v + y.v)) - mt.log_gram
    direct = np.sum(hat * np.exp(ph))
    kv = hs.szego_smoothed_kernel(x, y, lam, w, mt, detail=True)
    assert kv.value == pytest.approx(direct, rel=1e-12)
    assert kv.tail_bound <= 1e-10 * abs(kv.value)


def test_cutoff_error(setup):
    w, mt, x, _ = setup
    with pytest.raises(hs.CutoffError):
        hs.szego_smoothed_kernel(x, x, 5000.0, w, mt)


def test_off_boundary_rejected(setup):
    w, mt, x, _ = setup
    z = tg.TorusPoint(x.u, 1.1 * x.v)
    with pytest.raises(ValueError, match="X\\^tau"):
        hs.szego_smoothed_kernel(x, z, 100.0, w, mt)


def test_weyl_counter_szego_basics(setup):
    _, mt, x, _ = setup
    assert hs.weyl_counter_szego(x, -1.0, mt) == 0.0
    assert hs.weyl_counter_szego(x, 1e-9, mt) == pytest.approx(1 / math.pi, rel=1e-14)
    curve = hs.weyl_curve_szego(x, np.linspace(0, 400, 60), mt)
    assert np.all(np.diff(curve) >= 0)
