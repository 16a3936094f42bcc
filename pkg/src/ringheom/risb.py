"""Hierarchy generator for the ring coupled to two isotropic Drude baths.

The two baths couple to ``r0 cos(theta)`` and ``r0 sin(theta)``, so the total
interaction is rotationally invariant.  Auxiliary fields are indexed by a
:class:`~ringheom.hierarchy.HierarchySpace` with slots ``(alpha, k)``, alpha in
{x, y} and k = 0 (cut-off mode ``gamma``) ... K (Pade modes).

All operators act on real arrays of shape ``(..., 2 n_max + 1, n_theta)``;
members above the truncation level are dropped (zero closure).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .bath import BathSpec, PadeDecomposition
from .grid import (RingGrid, RingParams, WignerField, _delta_p, _dtheta,
                   _neighbor_sum, _shift_rows)
from .hierarchy import HierarchySpace, enumerate_hierarchy
from .units import HBAR

__all__ = [
    "MarkovianLimitError",
    "PotentialSpec",
    "ADOStack",
    "RISBGenerator",
    "liouvillian_apply",
    "liouvillian_operator",
    "heom_rhs",
    "markovian_rhs",
    "markovian_operator",
    "effective_beta",
    "flux_shift",
    "angular_functions",
    "markovian_equilibrium",
    "MarkovianGenerator",
]


class MarkovianLimitError(ValueError):
    """The Markovian ring equation is invalid at this temperature."""


@dataclass(frozen=True)
class PotentialSpec:
    """Fourier coefficients of an angular potential ``U(theta)``.

    ``U = sum_k u_k^c cos(k theta) + u_k^s sin(k theta)``, k = 1 .. k_max.
    """

    cos_coeffs: tuple = ()
    sin_coeffs: tuple = ()

    def __post_init__(self):
        c = tuple(float(x) for x in self.cos_coeffs)
        s = tuple(float(x) for x in self.sin_coeffs)
        if not all(np.isfinite(c + s)):
            raise ValueError("potential coefficients must be finite")
        object.__setattr__(self, "cos_coeffs", c)
        object.__setattr__(self, "sin_coeffs", s)

    @property
    def k_max(self) -> int:
        return max(len(self.cos_coeffs), len(self.sin_coeffs))

    def terms(self):
        """Yield ``(k, u_c, u_s)`` for every non-zero harmonic."""
        for k in range(1, self.k_max + 1):
            uc = self.cos_coeffs[k - 1] if k <= len(self.cos_coeffs) else 0.0
            us = self.sin_coeffs[k - 1] if k <= len(self.sin_coeffs) else 0.0
            if uc or us:
                yield k, uc, us


NO_POTENTIAL = PotentialSpec()


@dataclass
class ADOStack:
    """All auxiliary Wigner fields of a hierarchy; member 0 is physical."""

    values: np.ndarray
    grid: RingGrid = field(repr=False)
    space: HierarchySpace = field(repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        expected = (len(self.space),) + self.grid.shape
        if self.values.shape != expected:
            raise ValueError(f"stack shape {self.values.shape} does not match "
                             f"hierarchy/grid shape {expected}")

    @property
    def primary(self) -> WignerField:
        return WignerField(self.values[0], self.grid)

    @classmethod
    def from_primary(cls, W: WignerField, space: HierarchySpace) -> "ADOStack":
        values = np.zeros((len(space),) + W.grid.shape)
        values[0] = W.values
        return cls(values, W.grid, space)

    def copy(self) -> "ADOStack":
        return ADOStack(self.values.copy(), self.grid, self.space)


def angular_functions(theta):
    """``(f_x, g_x, f_y, g_y) = (-sin, cos, cos, sin)`` evaluated at theta."""
    s, c = np.sin(theta), np.cos(theta)
    return -s, c, c, s


def _check_potential(grid: RingGrid, pot: PotentialSpec):
    if pot.k_max > grid.n_max:
        raise ValueError(f"potential harmonic {pot.k_max} exceeds n_max={grid.n_max}")


def _liouvillian(a, grid: RingGrid, ring: RingParams, pot: PotentialSpec,
                 gauge_momentum: float):
    # returns -L_qm a
    v = (grid.p - gauge_momentum) / ring.inertia
    out = -v[:, None] * _dtheta(a, grid.dtheta)
    for k, uc, us in pot.terms():
        ang = uc * np.sin(k * grid.theta) - us * np.cos(k * grid.theta)
        out -= ang / HBAR * (_shift_rows(a, -k) - _shift_rows(a, k))
    return out


def liouvillian_apply(W: WignerField, ring: RingParams,
                      pot: PotentialSpec = NO_POTENTIAL) -> WignerField:
    """Apply ``-L_qm``: free rotation in the gauge field plus the potential."""
    _check_potential(W.grid, pot)
    return WignerField(_liouvillian(W.values, W.grid, ring, pot,
                                    ring.gauge_momentum), W.grid)


def _liouvillian_matrix(grid: RingGrid, ring: RingParams, pot: PotentialSpec,
                        gauge_momentum: float) -> sp.csr_matrix:
    nt, npn = grid.n_theta, grid.shape[0]
    e = np.ones(nt)
    dth = sp.diags([e[:-1], -e[:-1]], [1, -1], shape=(nt, nt), format="lil")
    dth[0, nt - 1] = -1.0
    dth[nt - 1, 0] = 1.0
    dth = dth.tocsr() / (2.0 * grid.dtheta)
    v = (grid.p - gauge_momentum) / ring.inertia
    L = -sp.kron(sp.diags(v), dth)
    for k, uc, us in pot.terms():
        ang = sp.diags(uc * np.sin(k * grid.theta) - us * np.cos(k * grid.theta))
        shift = sp.diags([np.ones(npn - k), -np.ones(npn - k)], [k, -k],
                         shape=(npn, npn))
        L = L - sp.kron(shift, ang) / HBAR
    return L.tocsr()


def liouvillian_operator(grid: RingGrid, ring: RingParams,
                         pot: PotentialSpec = NO_POTENTIAL) -> sp.csr_matrix:
    """Sparse matrix of :func:`liouvillian_apply` on the flattened field."""
    _check_potential(grid, pot)
    return _liouvillian_matrix(grid, ring, pot, ring.gauge_momentum)


def _grid_delta_p_matrix(grid: RingGrid) -> sp.csr_matrix:
    npn = grid.shape[0]
    e = np.ones(npn - 1)
    d = sp.diags([e, -e], [1, -1], shape=(npn, npn)) / HBAR
    return sp.kron(d, sp.identity(grid.n_theta)).tocsr()


def _grid_neighbor_sum_matrix(grid: RingGrid) -> sp.csr_matrix:
    npn = grid.shape[0]
    e = np.ones(npn - 1)
    s = sp.diags([e, e], [1, -1], shape=(npn, npn))
    return sp.kron(s, sp.identity(grid.n_theta)).tocsr()


class RISBGenerator:
    """Right-hand side of the ring hierarchy on a fixed grid and hierarchy.

    The coupling between members is collected in small sparse matrices acting
    on the member axis, one per angular function, so a right-hand side costs a
    handful of sparse-dense products.

    Parameters
    ----------
    grid, ring : RingGrid, RingParams
    bath : BathSpec
    pade : PadeDecomposition
    space : HierarchySpace, optional
        Must have ``2 (K + 1)`` slots.  Built from ``depth`` when omitted.
    depth : int, optional
        Truncation level when ``space`` is not given.
    pot : PotentialSpec, optional
    """

    def __init__(self, grid: RingGrid, ring: RingParams, bath: BathSpec,
                 pade: PadeDecomposition, space: HierarchySpace | None = None,
                 depth: int | None = None, pot: PotentialSpec = NO_POTENTIAL):
        if space is None:
            if depth is None:
                raise ValueError("give either a hierarchy space or a depth")
            space = enumerate_hierarchy(pade.K, depth)
        K1 = pade.K + 1
        if space.n_slots != 2 * K1:
            raise ValueError(f"hierarchy has {space.n_slots} slots, the bath "
                             f"needs {2 * K1}")
        _check_potential(grid, pot)
        self.grid, self.ring, self.bath, self.pade = grid, ring, bath, pade
        self.space, self.pot = space, pot

        r0 = ring.radius
        nu = pade.frequencies(bath)
        self.decay = (space.indices.reshape(-1, 2, K1) * nu).sum(axis=(1, 2))
        low_w = np.concatenate(([pade.c0(bath) * r0], pade.pole_weights(bath) * r0))
        imag_w = -bath.eta * bath.gamma ** 2 * r0 / 2.0

        f_x, g_x, f_y, g_y = angular_functions(grid.theta)
        self._f = (f_x, f_y)
        self._g = (g_x, g_y)
        self._M = []
        self._G = []
        for alpha in range(2):
            M = sp.csr_matrix((len(space), len(space)))
            for k in range(K1):
                slot = alpha * K1 + k
                M = M + r0 * space.raise_matrix(slot)
                M = M + low_w[k] * space.lower_matrix(slot)
            self._M.append(M.tocsr())
            self._G.append((imag_w * space.lower_matrix(alpha * K1)).tocsr())

    @property
    def shape(self):
        return (len(self.space),) + self.grid.shape

    def _gauge(self, flux_bar):
        if flux_bar is None:
            return self.ring.gauge_momentum
        return self.ring.with_flux(flux_bar).gauge_momentum

    def __call__(self, t, y, flux_bar=None):
        """Time derivative of the stack values ``y`` (shape :attr:`shape`)."""
        y = np.asarray(y)
        if y.shape != self.shape:
            raise ValueError(f"stack shape {y.shape} does not match {self.shape}")
        n = len(self.space)
        out = _liouvillian(y, self.grid, self.ring, self.pot, self._gauge(flux_bar))
        out -= self.decay[:, None, None] * y
        dp = _delta_p(y).reshape(n, -1)
        sm = _neighbor_sum(y).reshape(n, -1)
        for alpha in range(2):
            out += self._f[alpha] * (self._M[alpha] @ dp).reshape(y.shape)
            out += self._g[alpha] * (self._G[alpha] @ sm).reshape(y.shape)
        return out

    def operator(self, flux_bar=None) -> sp.csr_matrix:
        """The generator as a sparse matrix on the flattened stack."""
        grid = self.grid
        ng = grid.shape[0] * grid.shape[1]
        Lq = _liouvillian_matrix(grid, self.ring, self.pot, self._gauge(flux_bar))
        Dp = _grid_delta_p_matrix(grid)
        S = _grid_neighbor_sum_matrix(grid)
        tile = lambda a: np.tile(a, grid.shape[0])
        A = sp.kron(sp.identity(len(self.space)), Lq)
        A = A - sp.kron(sp.diags(self.decay), sp.identity(ng))
        for alpha in range(2):
            A = A + sp.kron(self._M[alpha], sp.diags(tile(self._f[alpha])) @ Dp)
            A = A + sp.kron(self._G[alpha], sp.diags(tile(self._g[alpha])) @ S)
        return A.tocsr()


def heom_rhs(stack: ADOStack, ring: RingParams, bath: BathSpec,
             pade: PadeDecomposition, pot: PotentialSpec = NO_POTENTIAL) -> ADOStack:
    """Time derivative of every member of ``stack``.

    Convenience wrapper; build a :class:`RISBGenerator` once when the right-hand
    side is evaluated repeatedly.
    """
    gen = RISBGenerator(stack.grid, ring, bath, pade, space=stack.space, pot=pot)
    return ADOStack(gen(0.0, stack.values), stack.grid, stack.space)


def effective_beta(beta: float, ring: RingParams) -> float:
    """``beta' = beta/(1 - beta hbar^2/(2 I))``; raises when not positive."""
    x = beta * HBAR ** 2 / (2.0 * ring.inertia)
    if x >= 1.0:
        raise MarkovianLimitError(
            f"Markovian limit invalid at this temperature: beta hbar^2/(2 I) = "
            f"{x:.6g} >= 1 gives a non-positive effective inverse temperature")
    return beta / (1.0 - x)


def _markov_coefficients(ring: RingParams, bath: BathSpec):
    bp = effective_beta(bath.beta, ring)
    diff = bath.eta * ring.radius ** 2 / (bp * HBAR ** 2)
    drift = bath.eta / (2.0 * ring.mass * HBAR)
    return diff, drift


def _markov_values(a, grid, ring, bath, pot, gauge_momentum):
    diff, drift = _markov_coefficients(ring, bath)
    out = _liouvillian(a, grid, ring, pot, gauge_momentum)
    up, dn = _shift_rows(a, -2), _shift_rows(a, 2)  # W(n+2), W(n-2)
    out += diff * (up - 2.0 * a + dn)
    pa = (grid.p - gauge_momentum)[:, None]
    out += drift * (_shift_rows(pa * a, -2) - _shift_rows(pa * a, 2))
    return out


def markovian_rhs(W: WignerField, ring: RingParams, bath: BathSpec,
                  pot: PotentialSpec = NO_POTENTIAL) -> WignerField:
    """Markovian limit of the ring hierarchy with effective temperature."""
    _check_potential(W.grid, pot)
    return WignerField(_markov_values(W.values, W.grid, ring, bath, pot,
                                      ring.gauge_momentum), W.grid)


def markovian_operator(grid: RingGrid, ring: RingParams, bath: BathSpec,
                       pot: PotentialSpec = NO_POTENTIAL) -> sp.csr_matrix:
    """Sparse matrix of :func:`markovian_rhs` on the flattened field."""
    _check_potential(grid, pot)
    diff, drift = _markov_coefficients(ring, bath)
    a = ring.gauge_momentum
    npn = grid.shape[0]
    e = np.ones(npn - 2)
    pa = grid.p - a
    # row n receives W(n+2) and W(n-2)
    M = sp.diags([diff * e + drift * pa[2:], -2.0 * diff * np.ones(npn),
                  diff * e - drift * pa[:-2]], [2, 0, -2], shape=(npn, npn))
    L = _liouvillian_matrix(grid, ring, pot, a)
    return (L + sp.kron(M, sp.identity(grid.n_theta))).tocsr()


class MarkovianGenerator:
    """Sparse-matrix form of :func:`markovian_rhs` for repeated evaluation."""

    def __init__(self, grid: RingGrid, ring: RingParams, bath: BathSpec,
                 pot: PotentialSpec = NO_POTENTIAL):
        self.grid = grid
        self.matrix = markovian_operator(grid, ring, bath, pot)

    def __call__(self, t, y):
        return (self.matrix @ np.asarray(y).ravel()).reshape(self.grid.shape)


def flux_shift(stack, k: int):
    """Shift every field by ``2k`` momentum rows (zero-filled).

    Accepts an :class:`ADOStack`, a :class:`WignerField` or a raw array.
    """
    s = 2 * int(k)
    if isinstance(stack, ADOStack):
        return ADOStack(_shift_rows(stack.values, s), stack.grid, stack.space)
    if isinstance(stack, WignerField):
        return WignerField(_shift_rows(stack.values, s), stack.grid)
    return _shift_rows(np.asarray(stack), s)


def markovian_equilibrium(grid: RingGrid, ring: RingParams, bath: BathSpec,
                          pot: PotentialSpec = NO_POTENTIAL, method="inverse",
                          tol=1e-9) -> WignerField:
    """Normalized stationary field of :func:`markovian_rhs`.

    Away from integer flux the stationary rows carry alternating tails of
    order 1e-9 that reach the momentum wall; the resulting leak limits the
    attainable residual to about 1e-10, hence the default ``tol``.
    """
    from .integrate import implicit_steady_state

    L = markovian_operator(grid, ring, bath, pot)
    ss = implicit_steady_state(L, grid, guess=grid.physical_guess().values,
                               method=method, tol=tol)
    return WignerField(ss.x.reshape(grid.shape), grid)
