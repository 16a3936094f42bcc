"""Caldeira-Leggett reference model on a continuous momentum grid.

The ring angle is periodic and the momentum is an ordinary continuous
variable sampled on ``n_p`` points symmetric about zero.  Momentum derivatives
use central differences of selectable order with zero padding at the edges;
angle derivatives use the periodic second-order central difference.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .bath import BathSpec, PadeDecomposition
from .grid import RingParams, _dtheta, _shift_rows
from .hierarchy import HierarchySpace
from .units import HBAR

__all__ = [
    "CLGrid",
    "CLField",
    "CLStack",
    "CLGenerator",
    "CLMarkovianGenerator",
    "make_cl_grid",
    "cl_markovian_rhs",
    "cl_markovian_operator",
    "cl_markovian_equilibrium",
    "cl_heom_rhs",
    "cl_heom_equilibrium",
    "cl_terminator",
    "cl_trace",
]

# central-difference stencils (offsets 1..m) for the first and second derivative
_D1 = {2: [1 / 2], 4: [2 / 3, -1 / 12]}
_D2 = {2: (-2.0, [1.0]), 4: (-5 / 2, [4 / 3, -1 / 12])}


@dataclass(frozen=True)
class CLGrid:
    """Momentum by angle grid for the CL model.

    ``order`` selects the accuracy of the momentum differences (2 or 4).
    """

    n_p: int = 128
    dp: float = 0.25
    n_theta: int = 64
    order: int = 4

    def __post_init__(self):
        if int(self.n_p) != self.n_p or self.n_p < 8:
            raise ValueError("n_p must be an integer >= 8")
        if not self.dp > 0:
            raise ValueError("dp must be positive")
        if int(self.n_theta) != self.n_theta or self.n_theta < 4:
            raise ValueError("n_theta must be an integer >= 4")
        if self.order not in _D1:
            raise ValueError(f"order must be one of {sorted(_D1)}")

    @property
    def p(self) -> np.ndarray:
        return (np.arange(self.n_p) - (self.n_p - 1) / 2.0) * self.dp

    @property
    def dtheta(self) -> float:
        return 2.0 * np.pi / self.n_theta

    @property
    def theta(self) -> np.ndarray:
        return np.arange(self.n_theta) * self.dtheta

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_p, self.n_theta)

    def trace_weights(self) -> np.ndarray:
        return np.full(self.n_p * self.n_theta, self.dp * self.dtheta)

    def physical_guess(self) -> "CLField":
        values = np.full(self.shape, 1.0 / (self.n_p * self.dp * 2.0 * np.pi))
        return CLField(values, self)

    def to_dict(self) -> dict:
        return {"n_p": self.n_p, "dp": self.dp, "n_theta": self.n_theta,
                "order": self.order}


def make_cl_grid(n_p: int = 128, dp: float = 0.25, n_theta: int = 64,
                 order: int = 4) -> CLGrid:
    return CLGrid(int(n_p), float(dp), int(n_theta), int(order))


@dataclass
class CLField:
    values: np.ndarray
    grid: CLGrid = field(repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise ValueError(f"field shape {self.values.shape} does not match "
                             f"grid shape {self.grid.shape}")


@dataclass
class CLStack:
    """Hierarchy of CL fields; slot k counts the k-th bath mode."""

    values: np.ndarray
    grid: CLGrid = field(repr=False)
    space: HierarchySpace = field(repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        expected = (len(self.space),) + self.grid.shape
        if self.values.shape != expected:
            raise ValueError(f"stack shape {self.values.shape} does not match {expected}")

    @property
    def primary(self) -> CLField:
        return CLField(self.values[0], self.grid)

    @classmethod
    def from_primary(cls, W: CLField, space: HierarchySpace) -> "CLStack":
        values = np.zeros((len(space),) + W.grid.shape)
        values[0] = W.values
        return cls(values, W.grid, space)


def cl_trace(W: CLField) -> float:
    return float(W.grid.dp * W.grid.dtheta * np.sum(W.values))


def _dp1(a, grid: CLGrid):
    out = np.zeros_like(a)
    for m, c in enumerate(_D1[grid.order], start=1):
        out += c * (_shift_rows(a, -m) - _shift_rows(a, m))
    return out / grid.dp


def _dp2(a, grid: CLGrid):
    c0, cs = _D2[grid.order]
    out = c0 * a
    for m, c in enumerate(cs, start=1):
        out = out + c * (_shift_rows(a, -m) + _shift_rows(a, m))
    return out / grid.dp ** 2


def _dp1_matrix(grid: CLGrid):
    n = grid.n_p
    diags, offs = [], []
    for m, c in enumerate(_D1[grid.order], start=1):
        diags += [c * np.ones(n - m), -c * np.ones(n - m)]
        offs += [m, -m]
    return sp.diags(diags, offs, shape=(n, n)) / grid.dp


def _dp2_matrix(grid: CLGrid):
    n = grid.n_p
    c0, cs = _D2[grid.order]
    diags, offs = [c0 * np.ones(n)], [0]
    for m, c in enumerate(cs, start=1):
        diags += [c * np.ones(n - m), c * np.ones(n - m)]
        offs += [m, -m]
    return sp.diags(diags, offs, shape=(n, n)) / grid.dp ** 2


def _dtheta_matrix(grid: CLGrid):
    nt = grid.n_theta
    e = np.ones(nt)
    d = sp.diags([e[:-1], -e[:-1]], [1, -1], shape=(nt, nt), format="lil")
    d[0, nt - 1] = -1.0
    d[nt - 1, 0] = 1.0
    return d.tocsr() / (2.0 * grid.dtheta)


def _drift(a, grid: CLGrid, ring: RingParams, gauge):
    v = (grid.p - gauge) / ring.inertia
    return -v[:, None] * _dtheta(a, grid.dtheta)


def cl_markovian_rhs(W: CLField, ring: RingParams, bath: BathSpec) -> CLField:
    """``-(p - qr0A)/I dW/dtheta + (eta/m) d/dp[(p - qr0A) + (I/beta) d/dp] W``.

    Only ``eta``, ``beta`` and the ring constants enter; no ``hbar``.
    """
    grid = W.grid
    a = ring.gauge_momentum
    pa = (grid.p - a)[:, None]
    fp = _dp1(pa * W.values, grid) + ring.inertia / bath.beta * _dp2(W.values, grid)
    out = _drift(W.values, grid, ring, a) + bath.eta / ring.mass * fp
    return CLField(out, grid)


def cl_markovian_operator(grid: CLGrid, ring: RingParams, bath: BathSpec):
    a = ring.gauge_momentum
    v = (grid.p - a) / ring.inertia
    Ip = sp.identity(grid.n_p)
    It = sp.identity(grid.n_theta)
    fp = (_dp1_matrix(grid) @ sp.diags(grid.p - a)
          + ring.inertia / bath.beta * _dp2_matrix(grid))
    A = -sp.kron(sp.diags(v), _dtheta_matrix(grid)) + bath.eta / ring.mass * sp.kron(fp, It)
    return A.tocsr()


class CLMarkovianGenerator:
    """Sparse-matrix form of :func:`cl_markovian_rhs` for repeated evaluation."""

    def __init__(self, grid: CLGrid, ring: RingParams, bath: BathSpec):
        self.grid = grid
        self.matrix = cl_markovian_operator(grid, ring, bath)

    def __call__(self, t, y):
        return (self.matrix @ np.asarray(y).ravel()).reshape(self.grid.shape)


def cl_markovian_equilibrium(grid: CLGrid, ring: RingParams, bath: BathSpec,
                             method="inverse", tol=1e-10) -> CLField:
    from .integrate import implicit_steady_state

    L = cl_markovian_operator(grid, ring, bath)
    ss = implicit_steady_state(L, grid, guess=grid.physical_guess().values,
                               method=method, tol=tol)
    return CLField(ss.x.reshape(grid.shape), grid)


class CLGenerator:
    """Right-hand side of the CL hierarchy for one Drude bath.

    The lowering term carries ``n_k nu_k Theta_k``; with
    ``Theta_0 = (eta r0/I)[(p - qr0A) + (c0/(eta gamma)) I d/dp]`` and
    ``Theta_k = w_k/nu_k d/dp`` (``w_k`` the Pade pole weights) the Markovian
    limit of a single ``gamma`` mode gives back :func:`cl_markovian_rhs`.

    Parameters
    ----------
    closure : {"terminator", "zero"}
        ``"terminator"`` adds, for members on the truncation level, the
        adiabatic value of every dropped member
        ``W_{n+e_k} ~ (n_k + 1) nu_k Theta_k W_n / (sum_j n_j nu_j + nu_k)``.
        ``"zero"`` drops them.
    """

    def __init__(self, grid: CLGrid, ring: RingParams, bath: BathSpec,
                 pade: PadeDecomposition, depth: int, closure: str = "terminator"):
        if closure not in ("terminator", "zero"):
            raise ValueError("closure must be 'terminator' or 'zero'")
        self.grid, self.ring, self.bath, self.pade = grid, ring, bath, pade
        self.closure = closure
        K1 = pade.K + 1
        self.space = space = HierarchySpace(K1, depth)
        nu = pade.frequencies(bath)
        r0 = ring.radius
        c0 = pade.c0(bath)
        w = pade.pole_weights(bath)
        self.decay = space.indices @ nu
        self._R = sum(space.raise_matrix(k) for k in range(K1)).tocsr() * r0
        low0 = space.lower_matrix(0)
        # p-multiplication part of nu_0 Theta_0 and the d/dp part of all modes
        self._Lp = (bath.gamma * bath.eta * r0 / ring.inertia * low0).tocsr()
        Ld = r0 * c0 * low0
        for k in range(1, K1):
            Ld = Ld + w[k - 1] * space.lower_matrix(k)
        self._Ld = Ld.tocsr()

        # adiabatic closure coefficients for members on the last level
        self._t1 = np.zeros(len(space))
        self._t2 = np.zeros(len(space))
        if closure == "terminator":
            edge = space.level == space.depth
            n = space.indices
            tau = (n + 1) * nu / (self.decay[:, None] + nu)
            self._t1[edge] = tau[edge, 0] * bath.eta * r0 / ring.inertia
            coef = np.concatenate(([r0 * c0 / bath.gamma], w / pade.nu if pade.K else []))
            self._t2[edge] = (tau[edge] * coef).sum(axis=1)

    @property
    def shape(self):
        return (len(self.space),) + self.grid.shape

    def _gauge(self, flux_bar):
        if flux_bar is None:
            return self.ring.gauge_momentum
        return self.ring.with_flux(flux_bar).gauge_momentum

    def __call__(self, t, y, flux_bar=None):
        y = np.asarray(y)
        if y.shape != self.shape:
            raise ValueError(f"stack shape {y.shape} does not match {self.shape}")
        g = self.grid
        a = self._gauge(flux_bar)
        n = len(self.space)
        pa = (g.p - a)[:, None]
        flat = y.reshape(n, -1)
        out = _drift(y, g, self.ring, a) - self.decay[:, None, None] * y
        out += _dp1((self._R @ flat).reshape(y.shape), g)
        out += pa * (self._Lp @ flat).reshape(y.shape)
        out += _dp1((self._Ld @ flat).reshape(y.shape), g)
        if self.closure == "terminator":
            out += self._closure(y, pa)
        return out

    def _closure(self, y, pa):
        g = self.grid
        t1 = self._t1[:, None, None]
        t2 = self._t2[:, None, None]
        r0 = self.ring.radius
        return r0 * (_dp1(t1 * pa * y, g) + t2 * _dp2(y, g))

    def terminator(self, y, flux_bar=None):
        """Closure contribution alone (zero for ``closure="zero"``)."""
        if self.closure != "terminator":
            return np.zeros_like(y)
        pa = (self.grid.p - self._gauge(flux_bar))[:, None]
        return self._closure(np.asarray(y), pa)

    def operator(self, flux_bar=None, harmonic=None):
        """Sparse generator on the flattened stack.

        With ``harmonic=m`` the angle axis is replaced by the single Fourier
        mode ``exp(i m theta)``, which the generator leaves invariant.
        """
        g = self.grid
        a = self._gauge(flux_bar)
        v = (g.p - a) / self.ring.inertia
        if harmonic is None:
            It = sp.identity(g.n_theta)
            drift = -sp.kron(sp.diags(v), _dtheta_matrix(g))
            ng = g.n_p * g.n_theta
        else:
            It = sp.identity(1)
            lam = 1j * np.sin(harmonic * g.dtheta) / g.dtheta
            drift = sp.diags(-v * lam) if harmonic else sp.csr_matrix((g.n_p, g.n_p))
            ng = g.n_p
        D1 = sp.kron(_dp1_matrix(g), It)
        D2 = sp.kron(_dp2_matrix(g), It)
        P = sp.kron(sp.diags(g.p - a), It)
        I_ado = sp.identity(len(self.space))
        A = sp.kron(I_ado, drift) - sp.kron(sp.diags(self.decay), sp.identity(ng))
        A = A + sp.kron(self._R, D1) + sp.kron(self._Lp, P) + sp.kron(self._Ld, D1)
        if self.closure == "terminator":
            r0 = self.ring.radius
            A = A + r0 * (sp.kron(sp.diags(self._t1), D1 @ P)
                          + sp.kron(sp.diags(self._t2), D2))
        return A.tocsr()


def cl_heom_equilibrium(grid: CLGrid, ring: RingParams, bath: BathSpec,
                        pade: PadeDecomposition, depth: int,
                        closure: str = "terminator", tol: float = 1e-10) -> CLStack:
    """Angle-independent stationary stack of the CL hierarchy.

    The couplings do not depend on the angle, so the stationary stack lives
    in the zero harmonic and is found from a one-dimensional problem per
    member.
    """
    from .integrate import implicit_steady_state

    gen = CLGenerator(grid, ring, bath, pade, depth, closure)
    A = gen.operator(harmonic=0)
    n = len(gen.space)
    w = np.zeros((n, grid.n_p))
    w[0] = grid.dp * 2.0 * np.pi
    guess = np.zeros((n, grid.n_p))
    guess[0] = 1.0
    lev = np.repeat(gen.space.level, grid.n_p)
    blocks = [np.nonzero(lev <= min(2, depth))[0]]
    blocks += [np.nonzero(lev == L)[0] for L in range(3, depth + 1)]
    ss = implicit_steady_state(A, w.ravel(), guess=guess.ravel(), tol=tol,
                               method="krylov", blocks=blocks)
    cols = ss.x.reshape(n, grid.n_p)
    values = np.repeat(cols[:, :, None], grid.n_theta, axis=2)
    return CLStack(values, grid, gen.space)


def cl_heom_rhs(stack: CLStack, ring: RingParams, bath: BathSpec,
                pade: PadeDecomposition, closure: str = "terminator") -> CLStack:
    """Time derivative of a CL hierarchy stack."""
    gen = CLGenerator(stack.grid, ring, bath, pade, stack.space.depth, closure)
    if gen.space.n_slots != stack.space.n_slots:
        raise ValueError("stack hierarchy does not match the bath's K")
    return CLStack(gen(0.0, stack.values), stack.grid, stack.space)


def cl_terminator(stack: CLStack, ring: RingParams, bath: BathSpec,
                  pade: PadeDecomposition) -> np.ndarray:
    """Closure contribution on the truncation level of ``stack``."""
    gen = CLGenerator(stack.grid, ring, bath, pade, stack.space.depth, "terminator")
    return gen.terminator(stack.values)
