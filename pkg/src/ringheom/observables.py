"""Momentum distributions, linear spectra and persistent currents."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import find_peaks

from .cl import CLField, CLGrid, CLStack, _dp1
from .grid import RingGrid, RingParams, WignerField, _delta_p, _shift_rows
from .integrate import NonEquilibratedError, rkf45_propagate
from .risb import ADOStack
from .units import HBAR

__all__ = [
    "NormalizationError",
    "MomentumDistribution",
    "SpectrumResult",
    "CurrentSweep",
    "momentum_distribution",
    "gaussian_reference",
    "kick",
    "cos_moment",
    "linear_response",
    "spectrum",
    "spectral_peaks",
    "persistent_current",
    "eigenenergy",
    "byers_yang_current",
    "boltzmann_current",
    "transition_energy",
]


class NormalizationError(ValueError):
    pass


@dataclass
class MomentumDistribution:
    """Discrete (``n`` set) or continuous (``n`` is None) momentum distribution.

    ``value`` holds probabilities per discrete momentum, or a density in p.
    """

    p: np.ndarray
    value: np.ndarray
    n: np.ndarray | None = None
    min_value: float = 0.0

    @property
    def is_discrete(self) -> bool:
        return self.n is not None

    @property
    def total(self) -> float:
        if self.is_discrete:
            return float(self.value.sum())
        return float(self.value.sum() * (self.p[1] - self.p[0]))

    def _weights(self):
        if self.is_discrete:
            return self.value
        return self.value * (self.p[1] - self.p[0])

    @property
    def mean(self) -> float:
        w = self._weights()
        return float(np.sum(w * self.p) / np.sum(w))

    @property
    def variance(self) -> float:
        w = self._weights()
        m = self.mean
        return float(np.sum(w * (self.p - m) ** 2) / np.sum(w))


def _primary(W):
    if isinstance(W, (ADOStack, CLStack)):
        return W.primary
    return W


def momentum_distribution(W, tol: float = 1e-4) -> MomentumDistribution:
    """``(1/2) int dtheta W(p_n, theta)`` per discrete row, or the angular
    marginal ``int dtheta W(p, theta)`` of a CL field.

    Raises
    ------
    NormalizationError
        If the trace differs from one by more than ``tol``.
    """
    W = _primary(W)
    if not isinstance(W, (WignerField, CLField)):
        raise TypeError(f"unsupported field type {type(W).__name__}")
    g = W.grid
    if isinstance(W, WignerField):
        value = g.dp * g.dtheta * W.values.sum(axis=1)
        dist = MomentumDistribution(g.p.copy(), value, n=g.n.copy())
    elif isinstance(W, CLField):
        value = g.dtheta * W.values.sum(axis=1)
        dist = MomentumDistribution(g.p.copy(), value)
    if abs(dist.total - 1.0) > tol:
        raise NormalizationError(f"field trace {dist.total:.8g} is not 1")
    dist.min_value = float(dist.value.min())
    return dist


def gaussian_reference(p, ring: RingParams, beta: float) -> np.ndarray:
    """Classical equilibrium ``exp[-beta (p - qr0A)^2/(2 I)]`` normalized on ``p``."""
    if not beta > 0:
        raise ValueError("beta must be positive")
    p = np.asarray(p, dtype=float)
    g = np.exp(-beta * (p - ring.gauge_momentum) ** 2 / (2.0 * ring.inertia))
    dp = p[1] - p[0] if p.size > 1 else 1.0
    return g / (g.sum() * dp)


def kick(values, grid) -> np.ndarray:
    """Dipole commutator ``(i/hbar)[cos theta, .]`` in the Wigner picture.

    On the discrete ring grid this is ``sin(theta) dW/dp_n`` with the
    half-spacing difference; on a CL grid the same half-hbar shift is used
    when it falls on grid points and a central derivative otherwise.
    Works on single fields and on whole stacks (last two axes).
    """
    s = np.sin(grid.theta)
    if isinstance(grid, RingGrid):
        return s * _delta_p(values)
    if isinstance(grid, CLGrid):
        m = HBAR / (2.0 * grid.dp)
        if abs(m - round(m)) < 1e-12 and round(m) >= 1:
            m = int(round(m))
            return s * (_shift_rows(values, -m) - _shift_rows(values, m)) / HBAR
        return s * _dp1(values, grid)
    raise TypeError(f"unsupported grid type {type(grid).__name__}")


def cos_moment(values, grid) -> float:
    """``dp sum_n int dtheta cos(theta) W`` of one field."""
    return float(grid.dp * grid.dtheta * np.sum(np.cos(grid.theta) * values))


@dataclass
class SpectrumResult:
    omega: np.ndarray
    sigma: np.ndarray
    damping: float
    t_max: float
    t: np.ndarray = field(default_factory=lambda: np.zeros(0))
    r1: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def bin_width(self) -> float:
        """Resolution ``2 pi/t_max`` of the record."""
        return 2.0 * np.pi / self.t_max


def linear_response(W_eq, generator, t_max: float, dt_sample: float, *,
                    tol: float = 1e-8, stationarity_tol: float = 1e-6,
                    verbose: bool = False):
    """Kick the equilibrium state and record the cos(theta) moment.

    Parameters
    ----------
    W_eq : WignerField, ADOStack, CLField or CLStack
        Stationary state of ``generator``.  For stacks every member is kicked.
    generator : callable
        ``generator(t, values)`` on arrays shaped like ``W_eq.values``.
    t_max, dt_sample : float
        Record length and sampling interval.

    Returns
    -------
    t, r1 : ndarray
        Sample times and the response (up to a positive constant).
    """
    grid = W_eq.grid
    y0 = np.asarray(W_eq.values, dtype=float)
    scale = np.max(np.abs(y0))
    res = np.max(np.abs(generator(0.0, y0))) / scale
    if res > stationarity_tol:
        raise NonEquilibratedError(0.0, res, stationarity_tol)
    n = int(round(t_max / dt_sample))
    t = np.arange(n + 1) * dt_sample
    yk = kick(y0, grid)
    if yk.ndim == 3:
        observe = lambda a: cos_moment(a[0], grid)
    else:
        observe = lambda a: cos_moment(a, grid)
    tr = rkf45_propagate(yk, generator, (0.0, t[-1]), tol, t_eval=t,
                         observe=observe, verbose=verbose)
    return tr.t, np.array(tr.y)


def spectrum(r1, dt: float, damping: float | None = None, pad: int = 8,
             t=None) -> SpectrumResult:
    """``sigma(omega) = Im int_0^T dt e^{i omega t} R(t) e^{-damping t}``.

    The integral is the trapezoid rule evaluated by FFT on a zero-padded
    record; ``damping`` defaults to ``2 pi/T``.
    """
    r1 = np.asarray(r1, dtype=float)
    if r1.ndim != 1 or len(r1) < 2:
        raise ValueError("need a 1-d record with at least two samples")
    t_max = dt * (len(r1) - 1)
    if damping is None:
        damping = 2.0 * np.pi / t_max
    if damping < 0:
        raise ValueError("damping must be non-negative")
    tt = np.arange(len(r1)) * dt
    x = r1 * np.exp(-damping * tt)
    x[0] *= 0.5
    x[-1] *= 0.5
    n_fft = int(pad) * len(r1)
    F = n_fft * np.fft.ifft(x, n_fft) * dt  # sum_k x_k e^{+i w_j t_k} dt
    half = n_fft // 2
    omega = 2.0 * np.pi * np.arange(half) / (n_fft * dt)
    return SpectrumResult(omega, F[:half].imag, float(damping), float(t_max),
                          tt if t is None else np.asarray(t), r1)


def spectral_peaks(result: SpectrumResult, rel_height: float = 0.05,
                   omega_max: float | None = None) -> np.ndarray:
    """Positions of local maxima above ``rel_height`` of the largest one."""
    sig = result.sigma
    mask = np.ones_like(sig, dtype=bool) if omega_max is None else result.omega <= omega_max
    top = np.max(np.abs(sig[mask]))
    if top == 0:
        return np.zeros(0)
    idx, _ = find_peaks(sig, height=rel_height * top)
    idx = idx[mask[idx]]
    return result.omega[idx]


@dataclass
class CurrentSweep:
    flux: np.ndarray
    current: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.flux = np.asarray(self.flux, dtype=float)
        self.current = np.asarray(self.current, dtype=float)
        if np.any(np.diff(self.flux) <= 0):
            raise ValueError("flux values must be strictly increasing")
        if not np.all(np.isfinite(self.current)):
            raise ValueError("non-finite current")

    def at(self, flux_bar: float) -> float:
        i = int(np.argmin(np.abs(self.flux - flux_bar)))
        if abs(self.flux[i] - flux_bar) > 1e-9:
            raise KeyError(flux_bar)
        return float(self.current[i])


def persistent_current(W_eq, ring: RingParams, *, delta: float | None = None,
                       eps: float = 1e-9) -> float:
    """``int dp dtheta (2 omega0/Phi0)(p - hbar Phi_bar) W(p, theta)`` on either grid.

    ``delta`` is the last relaxation change of the state, when known; a value
    at or above ``eps`` marks the state as not equilibrated.
    """
    if delta is not None and not delta < eps:
        raise NonEquilibratedError(np.nan, delta, eps)
    W = _primary(W_eq)
    g = W.grid
    row = g.dp * g.dtheta * W.values.sum(axis=1)
    pref = 2.0 * ring.omega0 / ring.flux_quantum
    return float(pref * np.sum((g.p - ring.gauge_momentum) * row))


def eigenenergy(n: int, ring: RingParams) -> float:
    """``hbar omega0 (n - Phi_bar)^2``."""
    return HBAR * ring.omega0 * (n - ring.flux_bar) ** 2


def byers_yang_current(n: int, ring: RingParams) -> float:
    """``-dE_n/dPhi = (2 hbar omega0/Phi0)(n - Phi_bar)``."""
    return 2.0 * HBAR * ring.omega0 / ring.flux_quantum * (n - ring.flux_bar)


def boltzmann_current(ring: RingParams, beta: float, n_range: int = 20) -> float:
    """Thermal average of the eigenstate currents over ``|n| <= n_range``."""
    n = np.arange(-n_range, n_range + 1)
    e = np.array([eigenenergy(k, ring) for k in n])
    w = np.exp(-beta * (e - e.min()))
    i_n = np.array([byers_yang_current(k, ring) for k in n])
    return float(np.sum(w * i_n) / np.sum(w))


def transition_energy(n: int, sign: int, ring: RingParams) -> float:
    """``E_{+-(|n|+1)} - E_{+-|n|} = hbar omega0 (2|n| + 1 -+ 2 Phi_bar)``."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    return HBAR * ring.omega0 * (2 * abs(n) + 1 - sign * 2.0 * ring.flux_bar)
