"""Left-preconditioned GMRES (no restart) with the block lower-triangular
preconditioner ``P = [[A3, 0], [A2, S]]``."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .exceptions import DiagnosticUnavailableError


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-6
    maxit: int = 100
    ritz: bool = False


@dataclass
class GmresReport:
    iterations: int
    converged: bool
    residual_history: np.ndarray
    x: np.ndarray
    time_factorize: float = 0.0
    time_iterate: float = 0.0
    ritz: np.ndarray | None = None
    hessenberg: np.ndarray | None = field(default=None, repr=False)


class BlockPreconditioner:
    """Applies ``P^-1``: ``A3 e1 = r1`` then ``S e2 = r2 - A2 e1``."""

    def __init__(self, a3_solver, A2, schur_solver):
        self.a3 = a3_solver
        self.A2 = A2
        self.s = schur_solver
        self.n = A2.shape[0]

    def __call__(self, r: np.ndarray) -> np.ndarray:
        n = self.n
        e1 = self.a3.solve(r[:n])
        e2 = self.s.solve(r[n:] - self.A2 @ e1)
        return np.concatenate([e1, e2])

    apply = __call__


def apply_preconditioner(P: BlockPreconditioner, r: np.ndarray) -> np.ndarray:
    return P(r)


def gmres(
    A: Callable[[np.ndarray], np.ndarray],
    b: np.ndarray,
    M: Callable[[np.ndarray], np.ndarray] | None = None,
    cfg: SolverConfig = SolverConfig(),
) -> GmresReport:
    """Solve ``M A x = M b`` from ``x0 = 0``.

    ``A`` and ``M`` are callables (anything with ``__call__`` or ``matvec``).
    The iteration count is the number of Arnoldi steps taken before the
    preconditioned relative residual first drops to ``cfg.tol``.
    """
    matvec = getattr(A, "matvec", A)
    prec = (lambda v: v) if M is None else M
    t0 = time.perf_counter()

    b = np.asarray(b, dtype=float)
    r0 = prec(b)
    beta = np.linalg.norm(r0)
    n, m = b.size, cfg.maxit
    if beta == 0.0:
        return GmresReport(0, True, np.array([0.0]), np.zeros(n), time_iterate=time.perf_counter() - t0)

    V = np.zeros((m + 1, n))
    H = np.zeros((m + 1, m))
    R = np.zeros((m + 1, m))
    cs, sn = np.zeros(m), np.zeros(m)
    g = np.zeros(m + 1)
    g[0] = beta
    V[0] = r0 / beta
    history = [1.0]
    converged = False
    k = 0

    for k in range(m):
        w = prec(matvec(V[k]))
        Vk = V[: k + 1]
        h = Vk @ w
        w = w - h @ Vk
        h2 = Vk @ w  # second Gram-Schmidt pass
        w = w - h2 @ Vk
        h += h2
        hnext = np.linalg.norm(w)
        H[: k + 1, k] = h
        H[k + 1, k] = hnext

        col = H[: k + 2, k].copy()
        for i in range(k):
            col[i], col[i + 1] = cs[i] * col[i] + sn[i] * col[i + 1], -sn[i] * col[i] + cs[i] * col[i + 1]
        denom = np.hypot(col[k], col[k + 1])
        cs[k], sn[k] = (1.0, 0.0) if denom == 0 else (col[k] / denom, col[k + 1] / denom)
        col[k], col[k + 1] = denom, 0.0
        R[: k + 2, k] = col
        g[k + 1] = -sn[k] * g[k]
        g[k] = cs[k] * g[k]

        res = abs(g[k + 1]) / beta
        history.append(res)
        breakdown = hnext <= 1e-14 * np.linalg.norm(h)
        if res <= cfg.tol or breakdown:
            converged = True
            break
        V[k + 1] = w / hnext

    its = k + 1
    y = _back_substitute(R[:its, :its], g[:its])
    x = y @ V[:its]
    report = GmresReport(
        iterations=its,
        converged=converged,
        residual_history=np.asarray(history),
        x=x,
        time_iterate=time.perf_counter() - t0,
        hessenberg=H[: its + 1, :its].copy(),
    )
    if cfg.ritz:
        try:
            report.ritz = ritz_values(report.hessenberg)
        except DiagnosticUnavailableError:
            report.ritz = None
    return report


def _back_substitute(R: np.ndarray, g: np.ndarray) -> np.ndarray:
    y = np.zeros_like(g)
    for i in range(len(g) - 1, -1, -1):
        y[i] = (g[i] - R[i, i + 1 :] @ y[i + 1 :]) / R[i, i] if R[i, i] != 0 else 0.0
    return y


def ritz_values(H: np.ndarray) -> np.ndarray:
    """Eigenvalues of the leading square block of an Arnoldi Hessenberg matrix."""
    H = np.asarray(H, dtype=float)
    m = min(H.shape)
    if m == 0:
        return np.zeros(0, dtype=complex)
    try:
        vals = np.linalg.eigvals(H[:m, :m])
    except np.linalg.LinAlgError as exc:
        raise DiagnosticUnavailableError(str(exc)) from exc
    return vals[np.lexsort((vals.imag, vals.real))]
