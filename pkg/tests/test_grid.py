import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from ringheom.grid import (RingParams, WignerField, delta_p, dtheta_deriv, make_grid,
                           read_field_csv, shift_rows, trace, write_field_csv)


def test_ring_constants(ring):
    assert ring.inertia == 0.5
    assert ring.omega0 == 1.0
    assert ring.flux_quantum == pytest.approx(-2 * np.pi)
    assert ring.with_flux(0.3).gauge_momentum == pytest.approx(0.3)


@pytest.mark.parametrize("kw", [{"mass": 0}, {"radius": -1}, {"charge": 0},
                                {"flux_bar": np.inf}])
def test_ring_validation(kw):
    with pytest.raises(ValueError):
        RingParams(**kw)


def test_grid_layout():
    g = make_grid(8, 3)
    assert g.shape == (7, 8)
    np.testing.assert_array_equal(g.n, np.arange(-3, 4))
    np.testing.assert_allclose(g.p, g.n / 2)
    assert g.row(-3) == 0 and g.row(3) == 6
    with pytest.raises(IndexError):
        g.row(4)


@pytest.mark.parametrize("args", [(3, 4), (8, 0), (8.5, 3)])
def test_make_grid_rejects(args):
    with pytest.raises(ValueError):
        make_grid(*args)


def test_field_shape_checked(small_grid):
    with pytest.raises(ValueError):
        WignerField(np.zeros((3, 3)), small_grid)


def test_physical_guess_normalized(small_grid):
    W = small_grid.physical_guess()
    assert trace(W) == pytest.approx(1.0, abs=1e-14)
    assert np.all(W.values[small_grid.n % 2 == 1] == 0)


def test_delta_p_of_linear_rows(small_grid):
    g = small_grid
    W = WignerField(np.repeat(g.p[:, None], g.n_theta, axis=1), g)
    d = delta_p(W).values
    # (p_{n+1} - p_{n-1})/hbar = 1 away from the walls
    np.testing.assert_allclose(d[1:-1], 1.0)


def test_dtheta_exact_on_low_harmonic():
    g = make_grid(64, 2)
    W = WignerField(np.tile(np.sin(g.theta), (5, 1)), g)
    d = dtheta_deriv(W).values
    np.testing.assert_allclose(d, np.tile(np.cos(g.theta), (5, 1)) * np.sin(g.dtheta) / g.dtheta,
                               atol=1e-14)


@settings(max_examples=30, deadline=None)
@given(s=st.integers(-5, 5))
def test_shift_rows_inverse_on_interior(s):
    g = make_grid(4, 6)
    a = np.arange(np.prod(g.shape), dtype=float).reshape(g.shape)
    back = shift_rows(shift_rows(WignerField(a, g), s), -s).values
    keep = slice(abs(s), g.shape[0] - abs(s))
    np.testing.assert_array_equal(back[keep], a[keep])


@settings(max_examples=10, deadline=None)
@given(arrays(np.float64, (7, 4), elements=st.floats(-1e300, 1e300, allow_subnormal=True)))
def test_field_csv_round_trip_bit_exact(tmp_path_factory, values):
    g = make_grid(4, 3)
    path = tmp_path_factory.mktemp("f") / "w.csv"
    write_field_csv(path, WignerField(values, g), {"note": "x"})
    back = read_field_csv(path)
    assert back.grid == g
    np.testing.assert_array_equal(back.values, values)
