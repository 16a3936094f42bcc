"""Adaptive Runge-Kutta-Fehlberg propagation and steady-state solvers.

The integrators are generic: a state is any real or complex numpy array and a
right-hand side is a callable ``rhs(t, y) -> dy/dt`` of the same shape.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

__all__ = [
    "IntegrationError",
    "StepSizeUnderflowError",
    "NonEquilibratedError",
    "SteadyStateError",
    "Trajectory",
    "SteadyState",
    "RelaxationResult",
    "error_norm",
    "rkf45_propagate",
    "implicit_steady_state",
    "relax_to_steady_state",
]

log = logging.getLogger(__name__)


class IntegrationError(RuntimeError):
    pass


class StepSizeUnderflowError(IntegrationError):
    """Step size fell below ``h_min``; carries the failing time and error."""

    def __init__(self, t, h, err):
        super().__init__(f"step size underflow at t={t:.6g}: h={h:.3g}, "
                         f"scaled error={err:.3g}")
        self.t, self.h, self.err = t, h, err


class NonEquilibratedError(IntegrationError):
    """Propagation horizon exhausted before the primary field settled."""

    def __init__(self, t, last_delta, eps):
        super().__init__(f"not equilibrated at t={t:.6g}: last delta "
                         f"{last_delta:.3g} >= eps {eps:.3g}")
        self.t, self.last_delta, self.eps = t, last_delta, eps


class SteadyStateError(RuntimeError):
    def __init__(self, message, residual=np.nan):
        super().__init__(f"{message} (residual {residual:.3g})")
        self.residual = residual


# Fehlberg 4(5) tableau
_C = np.array([0.0, 1 / 4, 3 / 8, 12 / 13, 1.0, 1 / 2])
_A = [
    [],
    [1 / 4],
    [3 / 32, 9 / 32],
    [1932 / 2197, -7200 / 2197, 7296 / 2197],
    [439 / 216, -8.0, 3680 / 513, -845 / 4104],
    [-8 / 27, 2.0, -3544 / 2565, 1859 / 4104, -11 / 40],
]
_B5 = np.array([16 / 135, 0.0, 6656 / 12825, 28561 / 56430, -9 / 50, 2 / 55])
_B4 = np.array([25 / 216, 0.0, 1408 / 2565, 2197 / 4104, -1 / 5, 0.0])
_E = _B5 - _B4


def error_norm(err, y_old, y_new, atol, rtol) -> float:
    """Max over fields of the RMS of ``err/(atol + rtol max|y|)``.

    For arrays with more than two axes each slice along the first axis is one
    field; otherwise the whole array is one field.
    """
    scale = atol + rtol * np.maximum(np.abs(y_old), np.abs(y_new))
    r = np.abs(err) / scale
    if r.ndim > 2:
        r = r.reshape(r.shape[0], -1)
        return float(np.sqrt(np.max(np.mean(r * r, axis=1))))
    return float(np.sqrt(np.mean(r * r))) if r.size else 0.0


@dataclass
class Trajectory:
    """Result of :func:`rkf45_propagate`."""

    t: np.ndarray
    y: list
    t_final: float
    y_final: np.ndarray
    n_steps: int = 0
    n_rejected: int = 0
    n_rhs: int = 0
    h_last: float = np.nan


def _initial_step(rhs, t0, y0, f0, direction, order, atol, rtol, span):
    # standard starting-step heuristic (Hairer, Norsett & Wanner II.4)
    scale = atol + rtol * np.abs(y0)
    d0 = np.sqrt(np.mean((np.abs(y0) / scale) ** 2))
    d1 = np.sqrt(np.mean((np.abs(f0) / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, span)
    y1 = y0 + direction * h0 * f0
    f1 = rhs(t0 + direction * h0, y1)
    d2 = np.sqrt(np.mean((np.abs(f1 - f0) / scale) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / (order + 1))
    return min(100 * h0, h1, span)


def rkf45_propagate(y0, rhs, t_span, tol=1e-6, *, atol=None, rtol=None,
                    t_eval=None, observe=None, h0=None, h_max=None,
                    max_steps=10_000_000, callback=None,
                    verbose=False) -> Trajectory:
    """Integrate ``dy/dt = rhs(t, y)`` with the Fehlberg 4(5) pair.

    A step is accepted when the scaled error estimate (:func:`error_norm`) is
    at most one; the fifth-order solution is propagated.  Samples at
    ``t_eval`` are produced by cubic Hermite interpolation of accepted steps.

    Parameters
    ----------
    y0 : ndarray
    rhs : callable
    t_span : (t0, t1)
    tol : float
        Default for both ``atol`` and ``rtol``.
    t_eval : array_like, optional
        Sorted sample times inside ``t_span``.
    observe : callable, optional
        Applied to every sample before it is stored, e.g. to keep only a
        scalar moment of a large state.
    callback : callable, optional
        ``callback(t, y)`` after every accepted step.
    verbose : bool
        Emit ``key=value`` diagnostic lines through :mod:`logging`.

    Raises
    ------
    StepSizeUnderflowError
        If the step needed falls below ``1e-12 |t1 - t0|``.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    atol = tol if atol is None else atol
    rtol = tol if rtol is None else rtol
    t0, t1 = float(t_span[0]), float(t_span[1])
    y = np.array(y0, copy=True)
    dtype = np.result_type(y.dtype, float)
    y = y.astype(dtype)
    span = abs(t1 - t0)
    direction = 1.0 if t1 >= t0 else -1.0
    h_min = 1e-12 * span
    h_max = span if h_max is None else min(h_max, span)

    samples = [] if t_eval is None else np.asarray(t_eval, dtype=float)
    out_t, out_y = [], []
    keep = (lambda a: a.copy()) if observe is None else observe
    k_eval = 0
    n_eval = len(samples)
    while k_eval < n_eval and direction * (samples[k_eval] - t0) <= 0:
        out_t.append(samples[k_eval])
        out_y.append(keep(y))
        k_eval += 1

    traj = Trajectory(np.zeros(0), [], t0, y)
    if span == 0.0:
        traj.t, traj.y = np.array(out_t), out_y
        return traj

    t = t0
    f = rhs(t, y)
    traj.n_rhs += 1
    if not np.any(f):
        # stationary state: a single step reaches the end exactly
        for k in range(k_eval, n_eval):
            out_t.append(samples[k])
            out_y.append(keep(y))
        traj.t, traj.y, traj.t_final, traj.y_final = np.array(out_t), out_y, t1, y
        traj.n_steps, traj.h_last = 1, span
        return traj

    if h0 is None:
        h = _initial_step(rhs, t, y, f, direction, 4, atol, rtol, span)
        traj.n_rhs += 1
    else:
        h = min(abs(h0), span)
    h = min(max(h, h_min), h_max)

    k = [None] * 6
    while direction * (t1 - t) > 0:
        if traj.n_steps >= max_steps:
            raise IntegrationError(f"maximum number of steps {max_steps} reached at t={t}")
        last = abs(t1 - t) <= h * (1 + 1e-12)
        if last:
            h = abs(t1 - t)
        hs = direction * h
        k[0] = f
        for s in range(1, 6):
            acc = y.copy()
            for j, a in enumerate(_A[s]):
                if a:
                    acc += (hs * a) * k[j]
            k[s] = rhs(t + _C[s] * hs, acc)
        traj.n_rhs += 5
        y_new = y.copy()
        err = np.zeros_like(y)
        for s in range(6):
            if _B5[s]:
                y_new += (hs * _B5[s]) * k[s]
            if _E[s]:
                err += (hs * _E[s]) * k[s]
        en = error_norm(err, y, y_new, atol, rtol)
        if not np.isfinite(en):
            en = np.inf

        if en <= 1.0:
            t_new = t1 if last else t + hs
            f_new = rhs(t_new, y_new)
            traj.n_rhs += 1
            while k_eval < n_eval and direction * (samples[k_eval] - t_new) <= 0:
                out_t.append(samples[k_eval])
                out_y.append(keep(_hermite(t, t_new, y, y_new, f, f_new,
                                           samples[k_eval])))
                k_eval += 1
            t, y, f = t_new, y_new, f_new
            traj.n_steps += 1
            if verbose:
                log.info("event=step t=%.10g h=%.6g err=%.3e", t, h, en)
            if callback is not None:
                callback(t, y)
            fac = 5.0 if en == 0 else min(5.0, 0.9 * en ** -0.2)
            traj.h_last = h
            h = min(h * max(fac, 1.0), h_max)
        else:
            traj.n_rejected += 1
            if verbose:
                log.info("event=reject t=%.10g h=%.6g err=%.3e", t, h, en)
            h *= max(0.1, 0.9 * en ** -0.25) if np.isfinite(en) else 0.1
            if h < h_min:
                raise StepSizeUnderflowError(t, h, en)

    traj.t = np.array(out_t)
    traj.y = out_y
    traj.t_final = t
    traj.y_final = y
    return traj


def _hermite(ta, tb, ya, yb, fa, fb, t):
    h = tb - ta
    s = (t - ta) / h
    h00 = (1 + 2 * s) * (1 - s) ** 2
    h10 = s * (1 - s) ** 2
    h01 = s * s * (3 - 2 * s)
    h11 = s * s * (s - 1)
    return h00 * ya + h10 * h * fa + h01 * yb + h11 * h * fb


@dataclass
class SteadyState:
    """Normalized null vector of a generator."""

    x: np.ndarray
    residual: float
    iterations: int
    method: str


def _trace_weights(grid, n):
    if grid is None:
        return None
    if hasattr(grid, "trace_weights"):
        return np.asarray(grid.trace_weights())
    return np.asarray(grid)


def implicit_steady_state(operator, grid=None, *, guess=None, method="inverse",
                          tol=1e-10, maxiter=200, shift=None,
                          blocks=None) -> SteadyState:
    """Solve ``L x = 0`` with ``w . x = 1``.

    Parameters
    ----------
    operator : sparse matrix
        Linear, time-independent generator.
    grid : object with ``trace_weights()`` or an array ``w``
        Defines the normalization ``w . x = 1``.  Without it ``sum(x) = 1``.
    guess : ndarray, optional
        Start vector; should overlap the wanted null vector.  Operators with
        additional (unphysical) null or near-null modes need a guess outside
        those sectors.
    method : {"inverse", "bordered", "krylov"}
        ``"inverse"`` runs shift-invert inverse iteration with one sparse LU
        factorization of ``L - sigma I``; it tolerates spurious null modes that
        the guess does not excite.  ``"bordered"`` replaces the row where
        ``|w * guess|`` is largest by the normalization and solves directly;
        it needs a one-dimensional null space.  ``"krylov"`` solves
        the same bordered system by preconditioned GMRES.
    blocks : list of index arrays, optional
        Krylov preconditioner layout.  The first block (which must contain
        the bordered row) is factorized exactly; the remaining blocks are
        swept once in order, each solved with its diagonal after subtracting
        the coupling to blocks already visited.  Without blocks the
        preconditioner is the diagonal, with the bordered row kept exact.
    tol : float
        Required ``||L x|| / ||x||``.

    Raises
    ------
    SteadyStateError
        When the factorization fails or the residual stays above ``tol``.
    """
    L = sp.csc_matrix(operator)
    n = L.shape[0]
    if L.shape != (n, n):
        raise ValueError("operator must be square")
    w = _trace_weights(grid, n)
    if w is None:
        w = np.ones(n)
    w = np.broadcast_to(w, (n,)).astype(float)
    dtype = np.result_type(L.dtype, float)

    def residual(x):
        return float(np.linalg.norm(L @ x) / max(np.linalg.norm(x), 1e-300))

    if method == "bordered":
        # replace the equation where the guess (or the weight) is largest
        score = np.abs(w) if guess is None else np.abs(w * np.ravel(guess))
        row = int(np.argmax(score))
        A = sp.lil_matrix(L, dtype=dtype)
        A[row, :] = w
        b = np.zeros(n, dtype=dtype)
        b[row] = 1.0
        try:
            x = spla.splu(A.tocsc()).solve(b)
        except RuntimeError as exc:
            raise SteadyStateError(f"bordered system is singular: {exc}") from exc
        if not np.all(np.isfinite(x)):
            raise SteadyStateError("bordered system is singular")
        r = residual(x)
        if r > tol:
            raise SteadyStateError("bordered solve did not reach tolerance", r)
        return SteadyState(x, r, 1, method)

    if method == "krylov":
        return _krylov_steady_state(L, w, dtype, tol, maxiter, blocks, residual)
    if method != "inverse":
        raise ValueError(f"unknown method {method!r}")
    scale = spla.norm(L, 1)
    sigma = 1e-8 * scale if shift is None else shift
    # small positive shift: decaying modes are pushed away from sigma, and the
    # factorization stays conditioned well enough that roundoff does not seed
    # null modes outside the sector of the guess
    try:
        lu = spla.splu((L - sigma * sp.identity(n, dtype=dtype, format="csc")).tocsc())
    except RuntimeError as exc:
        raise SteadyStateError(f"factorization failed: {exc}") from exc
    x = np.ones(n, dtype=dtype) if guess is None else np.asarray(guess, dtype=dtype).ravel().copy()
    r = np.inf
    for it in range(1, maxiter + 1):
        x = lu.solve(x)
        norm = w @ x
        if not np.isfinite(norm) or norm == 0:
            raise SteadyStateError("inverse iteration lost the normalization")
        x = x / norm
        r = residual(x)
        if r < tol:
            return SteadyState(x, r, it, method)
    raise SteadyStateError("inverse iteration did not converge", r)


def _krylov_steady_state(L, w, dtype, tol, maxiter, blocks, residual):
    n = L.shape[0]
    row = int(np.argmax(np.abs(w)))
    mask = np.zeros(n, dtype=bool)
    mask[row] = True
    B = sp.csr_matrix(L, dtype=dtype)
    # replace one row by the normalization functional
    B = sp.csr_matrix(sp.diags((~mask).astype(float)) @ B) + sp.csr_matrix(
        (w[w != 0], (np.full(np.count_nonzero(w), row), np.nonzero(w)[0])),
        shape=(n, n))
    diag = B.diagonal().astype(dtype)
    if blocks is None:
        blocks = [np.array([row])]
    first = np.asarray(blocks[0])
    if row not in set(first.tolist()):
        raise ValueError("the first preconditioner block must hold the bordered row")
    covered = np.zeros(n, dtype=bool)
    for b in blocks:
        covered[b] = True
    rest = np.nonzero(~covered)[0]
    try:
        lu = spla.splu(sp.csc_matrix(B[first][:, first]))
    except RuntimeError as exc:
        raise SteadyStateError(f"preconditioner block is singular: {exc}") from exc
    sweeps = [(np.asarray(b), B[np.asarray(b)]) for b in blocks[1:]]
    swept = np.concatenate([rest] + [b for b, _ in sweeps])
    if np.any(diag[swept] == 0):
        raise SteadyStateError("zero diagonal outside the exact block")

    def apply(x):
        y = np.zeros(n, dtype=np.result_type(dtype, x.dtype))
        y[first] = lu.solve(np.asarray(x[first], dtype=y.dtype))
        for idx, rows in sweeps:
            y[idx] = (x[idx] - rows @ y) / diag[idx]
        y[rest] = x[rest] / diag[rest]
        return y

    M = spla.LinearOperator((n, n), apply, dtype=dtype)
    b = np.zeros(n, dtype=dtype)
    b[row] = 1.0
    count = [0]

    def cb(_):
        count[0] += 1

    x, info = spla.gmres(B, b, M=M, rtol=min(tol, 1e-12), atol=0.0,
                         restart=200, maxiter=maxiter, callback=cb,
                         callback_type="pr_norm")
    x = x / (w @ x)
    r = residual(x)
    if r > tol:
        raise SteadyStateError(f"GMRES stopped with info={info}", r)
    return SteadyState(x, r, count[0], "krylov")


@dataclass
class RelaxationResult:
    y: np.ndarray
    t: float
    deltas: list = field(default_factory=list)


def relax_to_steady_state(y0, rhs, horizon, check_interval, eps, *, tol=1e-8,
                          primary=None, atol=None, rtol=None, verbose=False,
                          h0=None) -> RelaxationResult:
    """Propagate until the primary field stops changing.

    The state is propagated in chunks of ``check_interval``; after each chunk
    the sup-norm change of ``primary(y)`` (default ``y[0]``) is compared with
    ``eps``.

    Raises
    ------
    NonEquilibratedError
        When ``horizon`` is reached first; carries the last delta.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    if not check_interval > 0:
        raise ValueError("check_interval must be positive")
    primary = (lambda a: a[0]) if primary is None else primary
    y = np.array(y0, copy=True)
    t = 0.0
    deltas = []
    h = h0
    while t < horizon - 1e-12 * horizon:
        dt = min(check_interval, horizon - t)
        tr = rkf45_propagate(y, rhs, (t, t + dt), tol, atol=atol, rtol=rtol, h0=h)
        h = tr.h_last if np.isfinite(tr.h_last) else None
        delta = float(np.max(np.abs(primary(tr.y_final) - primary(y))))
        y, t = tr.y_final, t + dt
        deltas.append(delta)
        if verbose:
            log.info("event=relax t=%.6g delta=%.3e steps=%d", t, delta, tr.n_steps)
        if delta < eps:
            return RelaxationResult(y, t, deltas)
    raise NonEquilibratedError(t, deltas[-1] if deltas else np.inf, eps)
