"""Rotation-reduced form of the ring hierarchy for potential-free rings.

Without an angular potential the generator commutes with rotations, so a
rotation-invariant stack is fixed by one angular harmonic per member.  Working
with the circular combinations ``u = z_x + i z_y`` and ``v = z_x - i z_y`` of
the two baths' hierarchy variables, member ``(a, b)`` (``a`` counts u-modes,
``b`` counts v-modes) carries the single harmonic ``exp(i m theta)`` with
``m = |b| - |a|``.  The angle grid then only enters through the eigenvalue
``i sin(m dtheta)/dtheta`` of the central difference, and the problem shrinks
from ``n_theta`` columns to one complex column per member.

The reduction is exact on the same discretization; the equilibrium primary
field is angle-independent and equals the real part of member ``(0, 0)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .bath import BathSpec, PadeDecomposition
from .grid import RingGrid, RingParams, WignerField, make_grid
from .hierarchy import HierarchySpace
from .integrate import (SteadyStateError, implicit_steady_state,
                        relax_to_steady_state)
from .units import HBAR

__all__ = ["SymmetricHierarchy", "SymmetricState", "expand_to_stack",
           "symmetric_linear_response"]


@dataclass
class SymmetricState:
    """Reduced stack ``w[member, row]`` with its hierarchy."""

    w: np.ndarray
    hierarchy: "SymmetricHierarchy"
    residual: float = np.nan
    delta: float | None = None

    def primary_field(self) -> WignerField:
        g = self.hierarchy.grid
        row = self.w[0].real
        return WignerField(np.repeat(row[:, None], g.n_theta, axis=1), g)


def _shift_sum(a):
    out = np.zeros_like(a)
    out[..., :-1] += a[..., 1:]
    out[..., 1:] += a[..., :-1]
    return out


def _delta(a):
    out = np.zeros_like(a)
    out[..., :-1] += a[..., 1:]
    out[..., 1:] -= a[..., :-1]
    return out / HBAR


class SymmetricHierarchy:
    """Reduced generator; slots ``0..K`` are u-modes, ``K+1..2K+1`` v-modes.

    Parameters
    ----------
    grid : RingGrid
        Only ``n_max`` and ``n_theta`` are used; ``depth < n_theta/2`` keeps
        every harmonic below the Nyquist limit of the angle grid.
    ring, bath, pade : RingParams, BathSpec, PadeDecomposition
    depth : int
        Hierarchy truncation level (zero closure).
    offset : int
        Extra harmonic carried by every member.  0 describes rotation-invariant
        states; the dipole kick moves them into the sectors +1 and -1.
    """

    def __init__(self, grid: RingGrid, ring: RingParams, bath: BathSpec,
                 pade: PadeDecomposition, depth: int, offset: int = 0):
        if 2 * (depth + abs(offset)) >= grid.n_theta:
            raise ValueError("depth + |offset| must stay below n_theta/2")
        self.grid, self.ring, self.bath, self.pade = grid, ring, bath, pade
        self.offset = int(offset)
        K1 = pade.K + 1
        self.K1 = K1
        self.space = space = HierarchySpace(2 * K1, depth)
        idx = space.indices
        a, b = idx[:, :K1], idx[:, K1:]
        self.m = b.sum(axis=1) - a.sum(axis=1) + self.offset
        nu = pade.frequencies(bath)
        self.decay = (a + b) @ nu
        r0 = ring.radius
        kappa = np.concatenate(([pade.c0(bath) * r0], pade.pole_weights(bath) * r0))
        imag = -bath.eta * bath.gamma ** 2 * r0 / 2.0

        C1 = sp.csr_matrix((len(space), len(space)), dtype=complex)
        for k in range(K1):
            C1 = C1 + 1j * r0 * space.raise_matrix(k)
            C1 = C1 - 1j * r0 * space.raise_matrix(K1 + k)
            C1 = C1 - 0.5j * kappa[k] * space.lower_matrix(k)
            C1 = C1 + 0.5j * kappa[k] * space.lower_matrix(K1 + k)
        self.C1 = C1.tocsr()
        self.C2 = (0.5 * imag * (space.lower_matrix(0) + space.lower_matrix(K1))
                   ).astype(complex).tocsr()

        n = grid.n
        self.physical = ((n[None, :] + self.m[:, None]) % 2) == 0
        self._freq = np.sin(self.m * grid.dtheta) / grid.dtheta

    @property
    def shape(self):
        return (len(self.space), 2 * self.grid.n_max + 1)

    def _diag(self, flux_bar=None):
        ring = self.ring if flux_bar is None else self.ring.with_flux(flux_bar)
        v = (self.grid.p - ring.gauge_momentum) / ring.inertia
        return self.decay[:, None] + 1j * self._freq[:, None] * v[None, :]

    def __call__(self, t, w, flux_bar=None):
        return (-self._diag(flux_bar) * w + self.C1 @ _delta(w)
                + self.C2 @ _shift_sum(w))

    def operator(self, flux_bar=None) -> sp.csr_matrix:
        npn = self.shape[1]
        e = np.ones(npn - 1)
        Dp = sp.diags([e, -e], [1, -1], shape=(npn, npn)) / HBAR
        S = sp.diags([e, e], [1, -1], shape=(npn, npn))
        A = (sp.kron(self.C1, Dp) + sp.kron(self.C2, S)
             - sp.diags(self._diag(flux_bar).ravel()))
        return A.tocsr()

    def trace_weights(self) -> np.ndarray:
        w = np.zeros(self.shape)
        w[0] = self.grid.dp * 2.0 * np.pi
        return w

    def initial_state(self) -> np.ndarray:
        """Classical Gaussian on the even rows, empty members (normalized)."""
        w = np.zeros(self.shape, dtype=complex)
        g, ring = self.grid, self.ring
        prof = np.exp(-self.bath.beta * (g.p - ring.gauge_momentum) ** 2 / (2.0 * ring.inertia))
        w[0] = np.where(g.n % 2 == 0, prof, 0.0)
        w /= np.sum(self.trace_weights() * w.real)
        return w

    def steady_state(self, tol: float = 1e-10, method: str = "krylov",
                     exact_levels: int = 2) -> SymmetricState:
        """Stationary state in the physical parity sector.

        ``method="krylov"`` runs GMRES preconditioned by an exact
        factorization of the members up to ``exact_levels`` followed by one
        forward sweep over the higher levels (each level only couples to its
        neighbours, and its own block is diagonal).  ``"inverse"`` and
        ``"bordered"`` factorize the whole operator, which is only practical
        for shallow hierarchies.
        """
        keep = np.nonzero(self.physical.ravel())[0]
        A = self.operator()[keep][:, keep]
        guess = self.initial_state().ravel()[keep]
        blocks = None
        if method == "krylov":
            lev = np.repeat(self.space.level, self.shape[1])[keep]
            blocks = [np.nonzero(lev <= exact_levels)[0]]
            blocks += [np.nonzero(lev == L)[0]
                       for L in range(exact_levels + 1, self.space.depth + 1)]
        ss = implicit_steady_state(A, self.trace_weights().ravel()[keep],
                                   guess=guess, tol=tol, method=method,
                                   blocks=blocks)
        w = np.zeros(self.shape, dtype=complex).ravel()
        w[keep] = ss.x
        return SymmetricState(w.reshape(self.shape), self, ss.residual)

    def relax(self, w0=None, horizon=500.0, check_interval=1.0, eps=1e-9,
              tol=1e-8, verbose=False) -> SymmetricState:
        """Equilibrate by propagation until the primary settles."""
        w0 = self.initial_state() if w0 is None else np.asarray(w0, dtype=complex)
        res = relax_to_steady_state(w0, self, horizon, check_interval, eps,
                                    tol=tol, verbose=verbose)
        w = res.y
        w = w / np.sum(self.trace_weights() * w.real)
        return SymmetricState(w, self, delta=res.deltas[-1])


def _mode_table(total: int):
    # T[(a, x)] maps u^a v^(s-a)/(a! b!) onto z_x^x z_y^(s-x)/(x! y!)
    from math import comb, factorial

    s = total
    T = np.zeros((s + 1, s + 1), dtype=complex)
    for a in range(s + 1):
        b = s - a
        for i in range(a + 1):
            for j in range(b + 1):
                x = i + j
                T[a, x] += comb(a, i) * comb(b, j) * (1j) ** (a - i) * (-1j) ** (b - j)
        for x in range(s + 1):
            T[a, x] *= factorial(x) * factorial(s - x) / (factorial(a) * factorial(b))
    return T


def expand_to_stack(state: SymmetricState):
    """Full-grid stack in the x/y hierarchy basis of :class:`RISBGenerator`.

    Intended for validation on small hierarchies: the cost grows with the
    number of members times the number of u/v splittings of each.
    """
    from .risb import ADOStack

    h = state.hierarchy
    K1, space, g = h.K1, h.space, h.grid
    theta = g.theta
    tables = {}
    out = np.zeros((len(space),) + g.shape, dtype=complex)
    for j, idx in enumerate(space.indices):
        x, y = idx[:K1], idx[K1:]
        tot = x + y
        combos = [np.arange(t + 1) for t in tot]
        grids = np.meshgrid(*combos, indexing="ij")
        for a in zip(*(gr.ravel() for gr in grids)):
            a = np.array(a)
            coef = 1.0 + 0j
            for k in range(K1):
                T = tables.setdefault(int(tot[k]), _mode_table(int(tot[k])))
                coef *= T[a[k], x[k]]
            if coef == 0:
                continue
            pos = space.position(np.concatenate((a, tot - a)))
            m = h.m[pos]
            out[j] += coef * state.w[pos][:, None] * np.exp(1j * m * theta)[None, :]
    imag = np.max(np.abs(out.imag))
    if imag > 1e-8 * max(np.max(np.abs(out.real)), 1e-300):
        raise ValueError(f"expanded stack is not real (max imag {imag:.3g})")
    return ADOStack(out.real, g, space)


def symmetric_linear_response(state: SymmetricState, t_max: float,
                              dt_sample: float, tol: float = 1e-8):
    """Dipole response of a rotation-invariant hierarchy state.

    The kick ``sin(theta) dW/dp_n`` sends harmonic ``m`` to ``m +- 1``; the two
    sectors are propagated separately and the cos(theta) moment of the primary
    member is recorded.  Equivalent to :func:`~ringheom.observables.linear_response`
    on the full grid.
    """
    from .integrate import rkf45_propagate

    h = state.hierarchy
    if h.offset != 0:
        raise ValueError("equilibrium state must be rotation invariant")
    args = (h.grid, h.ring, h.bath, h.pade, h.space.depth)
    up = SymmetricHierarchy(*args, offset=1)
    dn = SymmetricHierarchy(*args, offset=-1)
    kicked = _delta(state.w) / 2j
    y0 = np.stack([kicked, -kicked])

    def rhs(t, y):
        return np.stack([up(t, y[0]), dn(t, y[1])])

    g = h.grid
    # dtheta sum_i cos(theta_i) exp(+-i theta_i) = pi on any grid with n_theta >= 3
    observe = lambda y: float(g.dp * np.pi * np.sum(y[0, 0] + y[1, 0]).real)
    n = int(round(t_max / dt_sample))
    t = np.arange(n + 1) * dt_sample
    tr = rkf45_propagate(y0, rhs, (0.0, t[-1]), tol, t_eval=t, observe=observe)
    return tr.t, np.array(tr.y)
