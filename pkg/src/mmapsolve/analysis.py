"""Conditioning and accuracy diagnostics.

``cond_estimate`` gives the 2-norm condition number from the extreme singular
values (power and inverse power iteration on ``S^T S``). ``conjecture_check``
fits log-log slopes of cond(S1) and compares them with the slopes implied by
``cond(S1) ~ 1 / ((eps + beta^2 h^2) h^2)``. ``error_norms`` measures the
discrete solution against the manufactured one.
"""

from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

import numpy as np

from .assembly import BlockSystem, assemble_nonap
from .exceptions import DiagnosticUnavailableError, SingularFactorizationError
from .field import FieldParams, phi_exact
from .grid import Case, GridSpec, make_grid
from . import sparse as sps

MAX_ITER = 10_000


@dataclass(frozen=True)
class CondEstimate:
    sigma_max: float
    sigma_min: float
    cond2: float
    iterations_used: int
    approximate: bool = False


def _power(apply, n: int, tol: float, maxit: int, seed: int) -> tuple[float, int, bool]:
    """Largest eigenvalue of a symmetric positive operator."""
    v = np.random.default_rng(seed).standard_normal(n)
    v /= np.linalg.norm(v)
    lam = 0.0
    for k in range(1, maxit + 1):
        w = apply(v)
        new = float(v @ w)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0, k, True
        v = w / nw
        if k > 1 and abs(new - lam) <= tol * abs(new):
            return new, k, True
        lam = new
    return lam, maxit, False


def cond_estimate(S, tol: float = 1e-4, maxit: int = MAX_ITER, seed: int = 0) -> CondEstimate:
    """2-norm condition number of ``S``.

    ``S`` is a SchurOperator, or anything with ``.matrix`` and ``.solve``;
    a bare sparse matrix is factored here. The start vector is seeded so the
    estimate is reproducible.
    """
    if hasattr(S, "matrix"):
        A, solver = S.matrix, S
    else:
        A = sps.canonical(S)
        try:
            solver = sps.factorize(A, "lu")
        except SingularFactorizationError as exc:
            raise DiagnosticUnavailableError(f"cannot factor matrix: {exc}") from exc
    A = sps.canonical(A)
    AT = A.T.tocsr()
    n = A.shape[0]

    lam_max, it1, ok1 = _power(lambda v: AT @ (A @ v), n, tol, maxit, seed)
    # (S^T S)^-1 v = S^-1 S^-T v
    lam_inv, it2, ok2 = _power(lambda v: solver.solve(solver.solve(v, transpose=True)), n, tol, maxit, seed + 1)
    if lam_inv <= 0.0 or not np.isfinite(lam_inv):
        raise DiagnosticUnavailableError("inverse iteration produced no usable estimate")
    smax = float(np.sqrt(lam_max))
    smin = float(1.0 / np.sqrt(lam_inv))
    return CondEstimate(smax, smin, smax / smin, it1 + it2, approximate=not (ok1 and ok2))


def predicted_cond(N: int, eps: float, beta: float) -> float:
    """The conjectured scaling, without its unknown constant."""
    h = 1.0 / (N - 1)
    return 1.0 / ((eps + beta**2 * h**2) * h**2)


def fit_slope(x: Sequence[float], y: Sequence[float]) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2 or np.unique(x).size < 2:
        raise ValueError("a slope needs at least two distinct abscissae")
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


@dataclass(frozen=True)
class SlopeRow:
    case: str
    beta: float
    eps: float
    N: int
    cond2: float
    predicted_exponent: float
    fitted_slope: float
    sweep: str = ""


SLOPE_COLUMNS = ("case", "beta", "eps", "N", "cond2", "predicted_exponent", "fitted_slope")


def s1_condition(case, N: int, eps: float, beta: float, tol: float = 1e-4) -> CondEstimate:
    grid = make_grid(case, N)
    return cond_estimate(assemble_nonap(grid, FieldParams(eps, beta)), tol=tol)


def conjecture_check(
    case,
    beta_list: Iterable[float],
    eps_list: Iterable[float],
    N_list: Iterable[int],
    tol: float = 1e-4,
) -> list[SlopeRow]:
    """Fit cond(S1) slopes along each axis of the (beta, eps, N) grid.

    Three sweeps are run wherever the axis has at least two points:
    against N at fixed (beta, eps), against 1/eps at fixed (beta, N) and
    against 1/beta^2 at fixed (eps, N). Each row repeats the fitted slope of
    its sweep next to the slope of the conjectured formula over the same
    points.
    """
    case = Case(case)
    betas, epss, Ns = list(beta_list), list(eps_list), list(N_list)
    if not (betas and epss and Ns):
        raise ValueError("beta, eps and N lists must be nonempty")
    if len(Ns) < 2 and len(epss) < 2 and len(betas) < 2:
        raise ValueError("need at least two points along some axis to fit a slope")

    cache: dict[tuple, float] = {}

    def cond(N, eps, beta):
        key = (N, eps, beta)
        if key not in cache:
            cache[key] = s1_condition(case, N, eps, beta, tol).cond2
        return cache[key]

    rows: list[SlopeRow] = []

    def sweep(name, points, abscissa):
        c = [cond(*pt) for pt in points]
        pred = [predicted_cond(*pt) for pt in points]
        xs = [abscissa(*pt) for pt in points]
        fitted, expected = fit_slope(xs, c), fit_slope(xs, pred)
        for (N, eps, beta), val in zip(points, c):
            rows.append(SlopeRow(case.value, beta, eps, N, val, expected, fitted, name))

    if len(Ns) >= 2:
        for beta in betas:
            for eps in epss:
                sweep("N", [(N, eps, beta) for N in Ns], lambda N, e, b: N)
    if len(epss) >= 2:
        for beta in betas:
            for N in Ns:
                sweep("eps", [(N, eps, beta) for eps in epss], lambda N, e, b: 1.0 / e)
    positive = [b for b in betas if b > 0]
    if len(positive) >= 2:
        for eps in epss:
            for N in Ns:
                sweep("beta", [(N, eps, b) for b in positive], lambda N, e, b: 1.0 / b**2)
    return rows


def slope_table_csv(rows: Sequence[SlopeRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SLOPE_COLUMNS + ("sweep",))
    for r in rows:
        d = asdict(r)
        w.writerow([d[c] for c in SLOPE_COLUMNS] + [r.sweep])
    return buf.getvalue()


@dataclass(frozen=True)
class ErrorNorms:
    l_inf: float
    l2_grid: float


def physical_mask(grid: GridSpec) -> np.ndarray:
    """Unknowns whose node lies in the closed unit square.

    The aligned layout's first and last z rows sit half a cell outside and
    are left out.
    """
    X, Z = np.meshgrid(grid.x, grid.z, indexing="ij")
    tol = 1e-12
    inside = (X >= -tol) & (X <= 1 + tol) & (Z >= -tol) & (Z <= 1 + tol)
    return inside.ravel()


def error_norms(solution: np.ndarray, grid: GridSpec, p: FieldParams) -> ErrorNorms:
    """Error of the phi block (or of a bare phi vector) against phi_exact."""
    solution = np.asarray(solution, dtype=float)
    n = grid.size
    if solution.size == 2 * n:
        phi = solution[n:]
    elif solution.size == n:
        phi = solution
    else:
        raise ValueError(f"solution has length {solution.size}, expected {n} or {2 * n}")
    X, Z = np.meshgrid(grid.x, grid.z, indexing="ij")
    exact = phi_exact(X.ravel(), Z.ravel(), p)
    mask = physical_mask(grid)
    err = np.abs(phi - exact)[mask]
    return ErrorNorms(float(err.max()), float(np.sqrt(grid.h**2 * np.sum(err**2))))


def observed_orders(errors: Sequence[float], hs: Sequence[float]) -> list[float]:
    """``log(e_k / e_{k+1}) / log(h_k / h_{k+1})`` for consecutive levels."""
    e = np.asarray(errors, dtype=float)
    h = np.asarray(hs, dtype=float)
    if e.size != h.size or e.size < 2:
        raise ValueError("need matching error and mesh-size lists of length >= 2")
    return list(np.log(e[:-1] / e[1:]) / np.log(h[:-1] / h[1:]))


def solve_direct(sys: BlockSystem) -> np.ndarray:
    """Reference solution of the full block system by sparse direct solve."""
    import scipy.sparse.linalg as spla

    return spla.spsolve(sys.full_matrix().tocsc(), sys.rhs)
