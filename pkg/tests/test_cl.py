import numpy as np
import pytest

from ringheom.bath import BathSpec, pade_decompose
from ringheom.cl import (CLField, CLGenerator, CLStack, cl_heom_equilibrium, cl_heom_rhs,
                         cl_markovian_equilibrium, cl_markovian_operator, cl_markovian_rhs,
                         cl_terminator, cl_trace, make_cl_grid)
from ringheom.grid import RingParams
from ringheom.hierarchy import HierarchySpace
from ringheom.observables import gaussian_reference, momentum_distribution

RING = RingParams()
HOT = BathSpec(0.01, 1.0, 0.2)


def rel_l2(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


def test_grid_validation():
    with pytest.raises(ValueError):
        make_cl_grid(order=3)
    g = make_cl_grid(8, 0.5, 4)
    np.testing.assert_allclose(g.p, (np.arange(8) - 3.5) * 0.5)
    assert cl_trace(g.physical_guess()) == pytest.approx(1.0)


def test_operator_matches_rhs(rng):
    g = make_cl_grid(24, 0.5, 8)
    ring = RING.with_flux(0.3)
    a = rng.standard_normal(g.shape)
    L = cl_markovian_operator(g, ring, HOT)
    np.testing.assert_allclose((L @ a.ravel()).reshape(g.shape),
                               cl_markovian_rhs(CLField(a, g), ring, HOT).values, atol=1e-12)


@pytest.mark.parametrize("order", [2, 4])
def test_markovian_rhs_conserves_trace(rng, order):
    g = make_cl_grid(40, 0.25, 8, order)
    a = rng.standard_normal(g.shape)
    a[:4] = a[-4:] = 0
    d = cl_markovian_rhs(CLField(a, g), RING.with_flux(0.2), HOT).values
    assert abs(np.sum(d)) < 1e-11 * np.abs(d).sum()


@pytest.mark.parametrize("flux", [0.0, 0.4, 1.0])
def test_markovian_equilibrium_is_gaussian(flux):
    g = make_cl_grid()
    ring = RING.with_flux(flux)
    W = cl_markovian_equilibrium(g, ring, HOT)
    d = momentum_distribution(W)
    assert rel_l2(d.value, gaussian_reference(g.p, ring, HOT.beta)) < 1e-4
    assert d.mean == pytest.approx(ring.gauge_momentum, abs=1e-9)
    assert d.variance == pytest.approx(RING.inertia / HOT.beta, rel=1e-6)


def test_fourth_order_stencil_beats_second_order():
    errs = []
    for order in (2, 4):
        g = make_cl_grid(order=order)
        W = cl_markovian_equilibrium(g, RING, HOT)
        errs.append(rel_l2(momentum_distribution(W).value, gaussian_reference(g.p, RING, 0.2)))
    assert errs[1] < errs[0] / 10


def test_single_mode_terminator_reduces_to_markovian(rng):
    g = make_cl_grid(32, 0.25, 8)
    gen = CLGenerator(g, RING, HOT, pade_decompose(0.2, 0), depth=0)
    a = rng.standard_normal(g.shape)
    np.testing.assert_allclose(gen(0.0, a[None])[0],
                               cl_markovian_rhs(CLField(a, g), RING, HOT).values, atol=1e-12)


def test_generator_operator_matches_call(rng):
    g = make_cl_grid(16, 0.5, 6)
    bath = BathSpec(0.5, 1.0, 1.0)
    gen = CLGenerator(g, RING.with_flux(0.2), bath, pade_decompose(1.0, 1), depth=2)
    y = rng.standard_normal(gen.shape)
    A = gen.operator()
    np.testing.assert_allclose((A @ y.ravel()).reshape(y.shape), gen(0.0, y), atol=1e-11)


def test_harmonic_operator_matches_fourier_mode(rng):
    g = make_cl_grid(16, 0.5, 8)
    gen = CLGenerator(g, RING.with_flux(0.2), BathSpec(0.5, 1.0, 1.0),
                      pade_decompose(1.0, 1), depth=2)
    m = 2
    cols = rng.standard_normal((len(gen.space), g.n_p))
    y = cols[:, :, None] * np.exp(1j * m * g.theta)[None, None, :]
    full = gen(0.0, y)
    red = (gen.operator(harmonic=m) @ cols.ravel()).reshape(cols.shape)
    np.testing.assert_allclose(full[:, :, 0], red, atol=1e-11)


def test_zero_closure_has_no_terminator(rng):
    g = make_cl_grid(16, 0.5, 4)
    gen = CLGenerator(g, RING, HOT, pade_decompose(0.2, 1), depth=1, closure="zero")
    y = rng.standard_normal(gen.shape)
    assert not np.any(gen.terminator(y))
    with pytest.raises(ValueError):
        CLGenerator(g, RING, HOT, pade_decompose(0.2, 1), depth=1, closure="open")


def test_stack_wrappers(rng):
    g = make_cl_grid(16, 0.5, 4)
    pd = pade_decompose(0.2, 1)
    space = HierarchySpace(2, 2)
    st_ = CLStack(rng.standard_normal((len(space),) + g.shape), g, space)
    gen = CLGenerator(g, RING, HOT, pd, depth=2)
    np.testing.assert_allclose(cl_heom_rhs(st_, RING, HOT, pd).values, gen(0.0, st_.values))
    term = cl_terminator(st_, RING, HOT, pd)
    assert not np.any(term[space.level < 2])
    with pytest.raises(ValueError):
        cl_heom_rhs(st_, RING, HOT, pade_decompose(0.2, 2))


def test_flux_covariance(rng):
    g = make_cl_grid(48, 0.25, 8)
    gen = CLGenerator(g, RING, BathSpec(0.5, 1.0, 1.0), pade_decompose(1.0, 1), depth=2)
    y = rng.standard_normal(gen.shape)
    s = 4  # one flux quantum moves the centre by hbar = 4 dp
    shifted = np.zeros_like(y)
    shifted[:, s:] = y[:, :-s]
    lhs = gen(0.0, shifted, flux_bar=1.3)
    rhs = np.zeros_like(y)
    rhs[:, s:] = gen(0.0, y, flux_bar=0.3)[:, :-s]
    assert np.max(np.abs(lhs - rhs)[:, s + 3:-3]) < 1e-12


@pytest.mark.parametrize("closure", ["terminator", "zero"])
def test_heom_equilibrium_high_temperature(closure):
    g = make_cl_grid()
    S = cl_heom_equilibrium(g, RING.with_flux(0.25), HOT, pade_decompose(0.2, 1), 2, closure)
    d = momentum_distribution(S)
    assert d.total == pytest.approx(1.0, abs=1e-10)
    assert d.mean == pytest.approx(0.25, abs=1e-6)
    assert d.variance == pytest.approx(2.5, rel=1e-3)
