"""Drude bath: spectral density, Pade decomposition and the exponential kernel.

The bath enters the hierarchy only through the exponential expansion of its
two-time correlation function ``L(t) = i L1(t) + L2(t)``.  For the Drude
(Ohmic with Lorentzian cut-off) spectral density the imaginary part is a
single exponential, while the real part needs the expansion of
``coth(beta*hbar*omega/2)`` into simple poles.  ``pade_decompose`` gives those
poles; ``matsubara_kernel`` is the slowly converging reference used to check
them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigvalsh

from .units import HBAR

__all__ = [
    "BathSpec",
    "PadeDecomposition",
    "KernelSample",
    "drude_sdf",
    "pade_decompose",
    "kernel",
    "matsubara_kernel",
    "matsubara_kernel_richardson",
]


@dataclass(frozen=True)
class BathSpec:
    """Isotropic Drude bath.

    Parameters
    ----------
    eta : float
        System-bath coupling strength.
    gamma : float
        Lorentzian cut-off, the inverse correlation time of the noise.
    beta : float
        Inverse temperature.
    """

    eta: float
    gamma: float
    beta: float

    def __post_init__(self):
        for name in ("eta", "gamma", "beta"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise ValueError(f"{name} must be positive, got {value!r}")


@dataclass(frozen=True)
class PadeDecomposition:
    """Pade poles ``nu`` and weights ``etabar`` of the Bose function.

    With ``x = beta*hbar*omega`` the expansion reads

        coth(x/2) ~ 2/x + sum_j 4 etabar_j x / (x**2 + (beta*hbar*nu_j)**2)

    so the Matsubara series is the special case ``nu_j = 2 pi j/(beta hbar)``
    with unit weights.
    """

    nu: np.ndarray = field(default_factory=lambda: np.zeros(0))
    etabar: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        object.__setattr__(self, "nu", np.asarray(self.nu, dtype=float))
        object.__setattr__(self, "etabar", np.asarray(self.etabar, dtype=float))
        if self.nu.shape != self.etabar.shape or self.nu.ndim != 1:
            raise ValueError("nu and etabar must be 1-d arrays of equal length")

    @property
    def K(self) -> int:
        return len(self.nu)

    def _check_resonance(self, spec: BathSpec):
        if np.any(np.isclose(self.nu, spec.gamma, rtol=1e-12, atol=0.0)):
            raise ValueError("a Pade frequency coincides with gamma; the "
                             "exponential expansion is degenerate")

    def c0(self, spec: BathSpec) -> float:
        """Coefficient of the real ``exp(-gamma t)`` term (temperature part)."""
        self._check_resonance(spec)
        g2 = spec.gamma ** 2
        corr = np.sum(2.0 * self.etabar * g2 / (g2 - self.nu ** 2))
        return spec.eta * spec.gamma / spec.beta * (1.0 + corr)

    def pole_weights(self, spec: BathSpec) -> np.ndarray:
        """Coefficients of the real ``exp(-nu_j t)`` terms."""
        self._check_resonance(spec)
        g2 = spec.gamma ** 2
        return (-2.0 * spec.eta * g2 / spec.beta
                * self.etabar * self.nu / (g2 - self.nu ** 2))

    def frequencies(self, spec: BathSpec) -> np.ndarray:
        """All decay rates of the hierarchy, ``[gamma, nu_1, ..., nu_K]``."""
        return np.concatenate(([spec.gamma], self.nu))


@dataclass(frozen=True)
class KernelSample:
    t: np.ndarray | float
    value: np.ndarray | complex


def drude_sdf(spec: BathSpec, omega):
    """``J(omega) = (hbar eta/pi) gamma^2 omega / (gamma^2 + omega^2)``."""
    omega = np.asarray(omega, dtype=float)
    g2 = spec.gamma ** 2
    return HBAR * spec.eta / np.pi * g2 * omega / (g2 + omega ** 2)


def _tridiagonal_inverse_roots(size: int, offset: int) -> np.ndarray:
    # eigenvalues of the symmetric matrix with off-diagonal 1/sqrt(b_m b_{m+1}),
    # b_m = 2m + 1 + 2*offset; returned as the positive values 2/lambda
    m = np.arange(1, size)
    b = 2 * (m + offset) + 1
    off = 1.0 / np.sqrt(b * (b + 2))
    lam = eigvalsh(np.diag(off, 1) + np.diag(off, -1))
    lam = np.sort(lam)[::-1][: size // 2]
    return np.sort(2.0 / lam)


def pade_decompose(beta: float, K: int) -> PadeDecomposition:
    """Pade spectrum decomposition of ``coth(beta*hbar*omega/2)`` with K poles.

    The K poles are the positive roots ``xi_j = 2/lambda_j`` of a 2K x 2K
    tridiagonal matrix; the weights follow from the roots ``zeta_k`` of the
    (2K-1) x (2K-1) minor.  The result matches the first 2K Taylor
    coefficients of ``(coth(x/2) - 2/x)/x`` in powers of ``x**2``.

    Parameters
    ----------
    beta : float
        Inverse temperature; the returned frequencies are ``xi_j/(beta hbar)``.
    K : int
        Number of poles.  ``K = 0`` gives the empty (classical) decomposition.
    """
    if int(K) != K or K < 0:
        raise ValueError(f"K must be a non-negative integer, got {K!r}")
    if beta <= 0:
        raise ValueError("beta must be positive")
    K = int(K)
    if K == 0:
        return PadeDecomposition(np.zeros(0), np.zeros(0))

    xi = _tridiagonal_inverse_roots(2 * K, 0)
    zeta = _tridiagonal_inverse_roots(2 * K - 1, 1) if K > 1 else np.zeros(0)
    # the odd-sized minor has a zero eigenvalue; only K-1 roots are finite
    zeta = zeta[: K - 1]

    prefactor = K * (2 * K + 3) / 2.0
    weights = np.empty(K)
    for j in range(K):
        others = np.delete(xi, j)
        weights[j] = (prefactor * np.prod(zeta ** 2 - xi[j] ** 2)
                      / np.prod(others ** 2 - xi[j] ** 2))
    return PadeDecomposition(xi / (beta * HBAR), weights)


def kernel(spec: BathSpec, pade: PadeDecomposition, t) -> KernelSample:
    """Exponential-sum kernel ``L(t) = i L1(t) + L2(t)`` for the Drude bath.

    The imaginary part is ``hbar eta gamma^2/2 exp(-gamma|t|)`` for any
    decomposition; the real part is ``c0 exp(-gamma|t|)`` plus one decaying
    exponential per Pade pole.
    """
    t = np.asarray(t, dtype=float)
    at = np.abs(t)
    decay = np.exp(-spec.gamma * at)
    real = pade.c0(spec) * decay
    if pade.K:
        w = pade.pole_weights(spec)
        real = real + np.tensordot(w, np.exp(-np.multiply.outer(pade.nu, at)), axes=1)
    imag = HBAR * spec.eta * spec.gamma ** 2 / 2.0 * decay
    return KernelSample(t, real + 1j * imag)


def matsubara_kernel(spec: BathSpec, M: int, t) -> KernelSample:
    """Kernel from the first M Matsubara terms of ``coth``.

    Each Matsubara pole ``nu_j = 2 pi j/(beta hbar)`` contributes
    ``(2 eta gamma^2/beta) (nu_j e^{-nu_j t} - gamma e^{-gamma t})/(nu_j^2 - gamma^2)``
    to ``C(t)``; the ``2/(beta omega)`` part of coth gives ``eta gamma/beta e^{-gamma t}``.
    The imaginary part is ``-(hbar/2) dPsi/dt`` with ``Psi(t) = eta gamma e^{-gamma t}``.
    Only meant as a reference: the truncation error decays like ``1/M``.
    """
    if int(M) != M or M < 1:
        raise ValueError("M must be a positive integer")
    t = np.asarray(t, dtype=float)
    at = np.abs(t)
    g, eta, beta = spec.gamma, spec.eta, spec.beta
    nu = 2.0 * np.pi * np.arange(1, int(M) + 1) / (beta * HBAR)
    if np.any(np.isclose(nu, g, rtol=1e-12, atol=0.0)):
        raise ValueError("gamma coincides with a Matsubara frequency")
    eg = np.exp(-g * at)
    real = eta * g / beta * eg
    amp = 2.0 * eta * g ** 2 / beta / (nu ** 2 - g ** 2)
    # chunk over poles to bound memory for long time grids
    flat = np.atleast_1d(at).ravel()
    acc = np.zeros_like(flat)
    for start in range(0, len(nu), 256):
        sl = slice(start, start + 256)
        en = np.exp(-np.multiply.outer(nu[sl], flat))
        acc += np.tensordot(amp[sl] * nu[sl], en, axes=1)
        acc -= amp[sl].sum() * g * np.exp(-g * flat)
    real = real + acc.reshape(np.shape(at))
    psi_dot = -eta * g ** 2 * eg
    imag = -HBAR / 2.0 * psi_dot
    return KernelSample(t, real + 1j * imag)


def matsubara_kernel_richardson(spec: BathSpec, M: int, t) -> KernelSample:
    """Richardson-extrapolated Matsubara kernel, ``2 L_{2M} - L_M``.

    The truncation error of the Matsubara series is ``O(1/M)`` for t > 0, so
    one extrapolation step removes the leading term.
    """
    a = matsubara_kernel(spec, M, t).value
    b = matsubara_kernel(spec, 2 * M, t).value
    return KernelSample(np.asarray(t, dtype=float), 2.0 * b - a)
