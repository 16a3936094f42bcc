"""Discrete phase-space grid for a particle on a ring.

Momentum is discrete, ``p_n = n hbar/2`` for ``|n| <= n_max``, and the angle is
sampled on ``n_theta`` periodic points.  Physical states of the ring occupy only
the even rows; odd rows are carried by the auxiliary fields and by the
momentum-derivative operators.

Every array-level helper here works on the last two axes ``(..., momentum,
angle)`` so that it applies equally to one field and to a whole stack of
hierarchy members.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .units import HBAR

__all__ = [
    "RingParams",
    "RingGrid",
    "WignerField",
    "make_grid",
    "trace",
    "delta_p",
    "dtheta_deriv",
    "shift_rows",
    "write_field_csv",
    "read_field_csv",
]


@dataclass(frozen=True)
class RingParams:
    """Charged particle of mass ``mass`` on a ring of radius ``radius``.

    ``flux_bar`` is the threaded flux in units of the flux quantum
    ``Phi0 = 2 pi hbar/q``.  The gauge momentum ``q r0 A`` enters every formula
    through :attr:`gauge_momentum`, so a change of sign convention only touches
    that property.
    """

    mass: float = 0.5
    radius: float = 1.0
    charge: float = -1.0
    flux_bar: float = 0.0

    def __post_init__(self):
        if not self.mass > 0:
            raise ValueError("mass must be positive")
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        if self.charge == 0:
            raise ValueError("charge must be non-zero")
        if not np.isfinite(self.flux_bar):
            raise ValueError("flux_bar must be finite")

    @property
    def inertia(self) -> float:
        return self.mass * self.radius ** 2

    @property
    def omega0(self) -> float:
        return HBAR / (2.0 * self.inertia)

    @property
    def flux_quantum(self) -> float:
        return 2.0 * np.pi * HBAR / self.charge

    @property
    def gauge_momentum(self) -> float:
        # q r0 A with A = Phi/(2 pi r0) and Phi = flux_bar * 2 pi hbar/q
        return HBAR * self.flux_bar

    def with_flux(self, flux_bar: float) -> "RingParams":
        return replace(self, flux_bar=float(flux_bar))


@dataclass(frozen=True)
class RingGrid:
    """Momentum-index by angle grid; see :func:`make_grid`."""

    n_theta: int
    n_max: int

    @property
    def dtheta(self) -> float:
        return 2.0 * np.pi / self.n_theta

    @property
    def dp(self) -> float:
        return HBAR / 2.0

    @property
    def n(self) -> np.ndarray:
        return np.arange(-self.n_max, self.n_max + 1)

    @property
    def p(self) -> np.ndarray:
        return self.n * self.dp

    @property
    def theta(self) -> np.ndarray:
        return np.arange(self.n_theta) * self.dtheta

    @property
    def shape(self) -> tuple[int, int]:
        return (2 * self.n_max + 1, self.n_theta)

    def row(self, n: int) -> int:
        """Array row of momentum index ``n``."""
        if abs(n) > self.n_max:
            raise IndexError(f"momentum index {n} outside |n| <= {self.n_max}")
        return n + self.n_max

    def trace_weights(self) -> np.ndarray:
        """Quadrature weights of :func:`trace` on the flattened field."""
        return np.full(self.shape[0] * self.shape[1], self.dp * self.dtheta)

    def physical_guess(self) -> "WignerField":
        """Normalized angle-independent field on the even momentum rows."""
        values = np.zeros(self.shape)
        values[(self.n % 2 == 0)] = 1.0
        values /= self.dp * self.dtheta * values.sum()
        return WignerField(values, self)

    def zeros(self) -> "WignerField":
        return WignerField(np.zeros(self.shape), self)

    def to_dict(self) -> dict:
        return {"n_theta": self.n_theta, "n_max": self.n_max}


def make_grid(n_theta: int, n_max: int) -> RingGrid:
    """Build a ring grid with ``2 n_max + 1`` momenta and ``n_theta`` angles."""
    if int(n_theta) != n_theta or n_theta < 4:
        raise ValueError(f"n_theta must be an integer >= 4, got {n_theta!r}")
    if int(n_max) != n_max or n_max < 1:
        raise ValueError(f"n_max must be an integer >= 1, got {n_max!r}")
    return RingGrid(int(n_theta), int(n_max))


@dataclass
class WignerField:
    """One real Wigner distribution sampled on a :class:`RingGrid`."""

    values: np.ndarray
    grid: RingGrid = field(repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise ValueError(f"field shape {self.values.shape} does not match "
                             f"grid shape {self.grid.shape}")

    def copy(self) -> "WignerField":
        return WignerField(self.values.copy(), self.grid)


def _values(W):
    return W.values if isinstance(W, WignerField) else np.asarray(W)


def trace(W: WignerField) -> float:
    """``dp * sum_n sum_i dtheta W(p_n, theta_i)``."""
    grid = W.grid
    return float(grid.dp * grid.dtheta * np.sum(W.values))


def _delta_p(a: np.ndarray) -> np.ndarray:
    # (f(n+1) - f(n-1))/hbar along axis -2, zero outside the grid
    out = np.zeros_like(a)
    out[..., :-1, :] += a[..., 1:, :]
    out[..., 1:, :] -= a[..., :-1, :]
    return out / HBAR


def _neighbor_sum(a: np.ndarray) -> np.ndarray:
    # f(n+1) + f(n-1) along axis -2, zero outside the grid
    out = np.zeros_like(a)
    out[..., :-1, :] += a[..., 1:, :]
    out[..., 1:, :] += a[..., :-1, :]
    return out


def _dtheta(a: np.ndarray, dtheta: float) -> np.ndarray:
    return (np.roll(a, -1, axis=-1) - np.roll(a, 1, axis=-1)) / (2.0 * dtheta)


def _shift_rows(a: np.ndarray, s: int) -> np.ndarray:
    # out[n] = a[n - s], zero-filled
    out = np.zeros_like(a)
    n = a.shape[-2]
    if s >= 0:
        if s < n:
            out[..., s:, :] = a[..., : n - s, :]
    else:
        if -s < n:
            out[..., : n + s, :] = a[..., -s:, :]
    return out


def delta_p(W: WignerField) -> WignerField:
    """Centred momentum-index difference ``(W(p_{n+1}) - W(p_{n-1}))/hbar``.

    Rows beyond ``|n| = n_max`` count as zero.
    """
    return WignerField(_delta_p(W.values), W.grid)


def dtheta_deriv(W: WignerField) -> WignerField:
    """Periodic second-order central difference in the angle."""
    return WignerField(_dtheta(W.values, W.grid.dtheta), W.grid)


def shift_rows(W: WignerField, s: int) -> WignerField:
    """Move every row from ``n`` to ``n + s``, zero-filled at the edges."""
    return WignerField(_shift_rows(W.values, int(s)), W.grid)


def write_field_csv(path, W: WignerField, metadata: dict | None = None) -> Path:
    """Write ``n,theta_index,value`` rows and a JSON sidecar with the grid.

    Floats are written with ``repr`` so that reading back is bit-exact.
    """
    path = Path(path)
    grid = W.grid
    lines = ["n,theta_index,value"]
    for r, n in enumerate(grid.n):
        row = W.values[r]
        lines.extend(f"{n},{i},{float(v)!r}" for i, v in enumerate(row))
    path.write_text("\n".join(lines) + "\n")
    side = {"grid": grid.to_dict()}
    if metadata:
        side["metadata"] = metadata
    path.with_suffix(".json").write_text(json.dumps(side, indent=2, sort_keys=True))
    return path


def read_field_csv(path) -> WignerField:
    """Inverse of :func:`write_field_csv`."""
    path = Path(path)
    side = json.loads(path.with_suffix(".json").read_text())
    grid = make_grid(**side["grid"])
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    values = np.zeros(grid.shape)
    rows = data[:, 0].astype(int) + grid.n_max
    cols = data[:, 1].astype(int)
    values[rows, cols] = data[:, 2]
    return WignerField(values, grid)
