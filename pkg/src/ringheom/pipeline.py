"""Experiment drivers shared by the command line and the tests."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bath import kernel, matsubara_kernel, pade_decompose
from .cl import (CLGenerator, CLMarkovianGenerator, CLStack, cl_heom_equilibrium,
                 cl_markovian_equilibrium, make_cl_grid)
from .config import ConfigError, RunConfig
from .grid import make_grid
from .integrate import relax_to_steady_state
from .observables import (gaussian_reference, linear_response, momentum_distribution,
                          persistent_current, spectral_peaks, spectrum)
from .risb import MarkovianGenerator, markovian_equilibrium
from .symmetric import SymmetricHierarchy, symmetric_linear_response

__all__ = ["Equilibrium", "equilibrium", "spectrum_run", "current_run",
           "kernel_table", "convergence_table", "convergence_point", "convergence_jobs"]


@dataclass
class Equilibrium:
    state: object
    distribution: object
    reference: np.ndarray | None = None
    delta: float | None = None


def _risb_grid(cfg: RunConfig):
    return make_grid(cfg.n_theta, cfg.n_max)


def _cl_grid(cfg: RunConfig):
    return make_cl_grid(cfg.cl_n_p, cfg.cl_dp, cfg.n_theta, cfg.cl_order)


def equilibrium(cfg: RunConfig, flux_bar: float, N_trunc=None, K=None) -> Equilibrium:
    """Stationary state and momentum distribution at one flux value."""
    ring, bath = cfg.ring(flux_bar), cfg.bath()
    N = cfg.N_trunc if N_trunc is None else N_trunc
    K = cfg.pade_K if K is None else K
    tol = {} if cfg.steady_tol is None else {"tol": cfg.steady_tol}
    # integration noise must stay well below the stopping threshold
    relax_tol = min(cfg.tol, 0.1 * cfg.relax_eps)
    if cfg.model == "risb":
        grid = _risb_grid(cfg)
        if cfg.regime == "markovian":
            W = markovian_equilibrium(grid, ring, bath, **tol)
            return Equilibrium(W, momentum_distribution(W))
        h = SymmetricHierarchy(grid, ring, bath, pade_decompose(bath.beta, K), N)
        if cfg.solver == "relax":
            st = h.relax(horizon=cfg.relax_horizon, eps=cfg.relax_eps, tol=relax_tol)
        else:
            st = h.steady_state(**tol)
        return Equilibrium(st, momentum_distribution(st.primary_field()), delta=st.delta)
    grid = _cl_grid(cfg)
    if cfg.regime == "markovian":
        W = cl_markovian_equilibrium(grid, ring, bath, **tol)
        ref = gaussian_reference(grid.p, ring, bath.beta)
        return Equilibrium(W, momentum_distribution(W), ref)
    pade = pade_decompose(bath.beta, K)
    if cfg.solver == "relax":
        gen = CLGenerator(grid, ring, bath, pade, N, cfg.closure)
        y0 = np.zeros(gen.shape)
        y0[0] = gaussian_reference(grid.p, ring, bath.beta)[:, None] / (2.0 * np.pi)
        res = relax_to_steady_state(y0, gen, cfg.relax_horizon, 1.0, cfg.relax_eps,
                                    tol=relax_tol)
        S = CLStack(res.y, grid, gen.space)
        return Equilibrium(S, momentum_distribution(S), delta=res.deltas[-1])
    S = cl_heom_equilibrium(grid, ring, bath, pade, N, cfg.closure, **tol)
    return Equilibrium(S, momentum_distribution(S))


def spectrum_run(cfg: RunConfig, flux_bar: float, t_max=None, dt=None, damping=None,
                 N_trunc=None, K=None):
    """Equilibrium, dipole kick, propagation and Fourier transform."""
    t_max = cfg.t_max if t_max is None else t_max
    dt = cfg.dt if dt is None else dt
    damping = cfg.damping if damping is None else damping
    eq = equilibrium(cfg, flux_bar, N_trunc, K)
    ring, bath = cfg.ring(flux_bar), cfg.bath()
    if cfg.model == "risb" and cfg.regime == "markovian":
        gen = MarkovianGenerator(eq.state.grid, ring, bath)
        t, r1 = linear_response(eq.state, gen, t_max, dt, tol=cfg.tol)
    elif cfg.model == "risb":
        t, r1 = symmetric_linear_response(eq.state, t_max, dt, tol=cfg.tol)
    elif cfg.regime == "markovian":
        gen = CLMarkovianGenerator(eq.state.grid, ring, bath)
        t, r1 = linear_response(eq.state, gen, t_max, dt, tol=cfg.tol)
    else:
        S = eq.state
        N = cfg.N_trunc if N_trunc is None else N_trunc
        K = cfg.pade_K if K is None else K
        gen = CLGenerator(S.grid, ring, bath, pade_decompose(bath.beta, K), N, cfg.closure)
        t, r1 = linear_response(S, gen, t_max, dt, tol=cfg.tol)
    return spectrum(r1, dt, damping, t=t)


def current_run(cfg: RunConfig, flux_bar: float, N_trunc=None, K=None,
                allow_markovian: bool = False) -> float:
    """Equilibrium persistent current at one flux value."""
    if cfg.regime == "markovian" and not allow_markovian:
        raise ConfigError("the persistent current needs the hierarchy (regime=heom); "
                          "pass the override flag to use the Markovian equation")
    eq = equilibrium(cfg, flux_bar, N_trunc, K)
    ring = cfg.ring(flux_bar)
    state = eq.state
    if hasattr(state, "primary_field"):
        state = state.primary_field()
    eps = cfg.relax_eps if eq.delta is not None else 1e-9
    return persistent_current(state, ring, delta=eq.delta, eps=eps)


def kernel_table(cfg: RunConfig, K_list, M: int = 1000, n_t: int = 501, t_max=None):
    """Rows ``(K, t, re_pade, im_pade, re_matsubara, abs_err)`` on ``[0, 5/gamma]``."""
    bath = cfg.bath()
    t_max = 5.0 / bath.gamma if t_max is None else t_max
    t = np.linspace(0.0, t_max, n_t)
    ref = matsubara_kernel(bath, M, t).value
    rows = []
    for K in K_list:
        val = kernel(bath, pade_decompose(bath.beta, K), t).value
        err = np.abs(val - ref)
        rows.extend(zip([K] * n_t, t, val.real, val.imag, ref.real, err))
    return rows


def convergence_point(cfg: RunConfig, K: int, N: int, flux_bar: float,
                      observable: str = "current") -> float:
    """One entry of :func:`convergence_table`."""
    if observable == "current":
        return current_run(cfg, flux_bar, N_trunc=N, K=K)
    if observable == "peak":
        sr = spectrum_run(cfg, flux_bar, N_trunc=N, K=K)
        return float(sr.omega[int(np.argmax(sr.sigma))])
    raise ConfigError(f"unknown observable {observable!r}")


def convergence_jobs(cfg: RunConfig, N_list, K_list):
    if cfg.regime != "heom":
        raise ConfigError("convergence scans need regime=heom")
    return [(K, N, fb) for K in K_list for N in N_list for fb in cfg.flux]


def convergence_table(cfg: RunConfig, N_list, K_list, observable: str = "current"):
    """Rows ``(K, N_trunc, phi_bar, value)`` for every pair and flux value."""
    return [(K, N, fb, convergence_point(cfg, K, N, fb, observable))
            for K, N, fb in convergence_jobs(cfg, N_list, K_list)]
