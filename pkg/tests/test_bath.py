import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from ringheom.bath import (BathSpec, PadeDecomposition, drude_sdf, kernel,
                           matsubara_kernel, matsubara_kernel_richardson, pade_decompose)


def quadrature_kernel(spec, t):
    """Real and imaginary kernel parts by direct frequency integration."""
    def real_part(w):
        if w < 1e-10:
            return spec.eta / np.pi * spec.gamma ** 2 * 2.0 / (spec.beta * spec.gamma ** 2)
        return drude_sdf(spec, w) / np.tanh(spec.beta * w / 2.0)

    re = quad(real_part, 0.0, np.inf, weight="cos", wvar=t, limlst=200)[0]
    im = quad(lambda w: drude_sdf(spec, w), 0.0, np.inf, weight="sin", wvar=t, limlst=200)[0]
    return re + 1j * im


def test_bath_spec_rejects_non_positive():
    with pytest.raises(ValueError):
        BathSpec(0.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        BathSpec(1.0, 1.0, -2.0)


def test_pade_beta_2p5_k4_values():
    pd = pade_decompose(2.5, 4)
    xi = pd.nu * 2.5
    np.testing.assert_allclose(xi, [6.2832, 12.580, 20.563, 57.788], rtol=2e-4)
    np.testing.assert_allclose(pd.etabar, [1.0, 1.0153, 1.9056, 18.079], rtol=2e-4)


def test_pade_reproduces_coth_taylor_series():
    # (coth(x/2) - 2/x) = sum_j 4 etabar_j x/(x^2 + xi_j^2) must match 2K terms of x/6 - x^3/360 + ...
    K = 3
    pd = pade_decompose(1.0, K)
    x = np.array([0.05, 0.1, 0.2])
    approx = 2 / x + np.sum(4 * pd.etabar * x[:, None] / (x[:, None] ** 2 + pd.nu ** 2), axis=1)
    exact = 1 / np.tanh(x / 2)
    assert np.max(np.abs(approx - exact) / exact) < 1e-12


def test_pade_beats_matsubara_truncation():
    x = np.linspace(0.1, 20, 50)
    exact = 1 / np.tanh(x / 2)
    pd = pade_decompose(1.0, 4)
    pade = 2 / x + np.sum(4 * pd.etabar * x[:, None] / (x[:, None] ** 2 + pd.nu ** 2), axis=1)
    nu = 2 * np.pi * np.arange(1, 5)
    mats = 2 / x + np.sum(4 * x[:, None] / (x[:, None] ** 2 + nu ** 2), axis=1)
    assert np.max(np.abs(pade - exact)) < np.max(np.abs(mats - exact))


def test_pade_k0_is_empty():
    pd = pade_decompose(2.0, 0)
    assert pd.K == 0
    spec = BathSpec(1.0, 1.0, 2.0)
    assert pd.c0(spec) == pytest.approx(spec.eta * spec.gamma / spec.beta)


@pytest.mark.parametrize("K", [-1, 1.5])
def test_pade_rejects_bad_K(K):
    with pytest.raises(ValueError):
        pade_decompose(1.0, K)


def test_resonant_pole_is_rejected():
    pd = PadeDecomposition([1.0], [1.0])
    with pytest.raises(ValueError):
        pd.c0(BathSpec(1.0, 1.0, 1.0))


@pytest.mark.parametrize("t", [0.5, 1.0, 3.0])
def test_kernel_matches_frequency_quadrature(cold_bath, t):
    ref = quadrature_kernel(cold_bath, t)
    pade = kernel(cold_bath, pade_decompose(cold_bath.beta, 6), t).value
    mats = matsubara_kernel_richardson(cold_bath, 2000, t).value
    assert abs(pade.imag - ref.imag) < 1e-8
    assert abs(pade.real - ref.real) < 1e-5 * abs(ref.real) + 1e-7
    assert abs(mats.real - ref.real) < 1e-5 * abs(ref.real) + 1e-7


def test_kernel_imaginary_part_is_decomposition_independent(cold_bath):
    t = np.linspace(0, 5, 11)
    a = kernel(cold_bath, pade_decompose(2.5, 1), t).value.imag
    b = kernel(cold_bath, pade_decompose(2.5, 5), t).value.imag
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-15)
    np.testing.assert_allclose(a, cold_bath.eta * cold_bath.gamma ** 2 / 2 * np.exp(-t))


def test_kernel_is_even_in_time(cold_bath, pade4):
    t = np.linspace(0.1, 3, 7)
    np.testing.assert_array_equal(kernel(cold_bath, pade4, t).value,
                                  kernel(cold_bath, pade4, -t).value)


def test_matsubara_rejects_bad_M(cold_bath):
    with pytest.raises(ValueError):
        matsubara_kernel(cold_bath, 0, 1.0)


@settings(max_examples=25, deadline=None)
@given(beta=st.floats(0.1, 10.0), K=st.integers(1, 6))
def test_pade_poles_positive_and_sorted(beta, K):
    pd = pade_decompose(beta, K)
    assert np.all(pd.nu > 0)
    assert np.all(np.diff(pd.nu) > 0)
    assert np.all(pd.etabar > 0)
    # the lowest pole approaches the first Matsubara frequency
    if K >= 3:
        assert pd.nu[0] * beta == pytest.approx(2 * np.pi, rel=1e-2)


@settings(max_examples=20, deadline=None)
@given(eta=st.floats(1e-3, 5.0), beta=st.floats(0.2, 5.0))
def test_kernel_scales_linearly_with_eta(eta, beta):
    pd = pade_decompose(beta, 3)
    t = np.linspace(0, 2, 5)
    a = kernel(BathSpec(eta, 1.3, beta), pd, t).value
    b = kernel(BathSpec(1.0, 1.3, beta), pd, t).value
    np.testing.assert_allclose(a, eta * b, rtol=1e-12)
