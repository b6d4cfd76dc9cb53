"""Single-cell runs and (N, eps) sweeps shared by the CLI and the test suite."""

from __future__ import annotations

import csv
import io
import time
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .analysis import error_norms
from .assembly import BlockSystem, assemble, with_inflow_blocks
from .exceptions import MMAPError
from .field import FieldParams
from .grid import Case, make_grid
from .krylov import BlockPreconditioner, GmresReport, SolverConfig, gmres
from .schur import DENSE_LIMIT, SchurOperator, SchurVariant, build_schur, factorize_a3

DEFAULT_EPS = (1.0, 1e-1, 1e-2, 1e-6, 1e-10, 1e-20)
DEFAULT_N = (32, 64, 128)
LARGE_N = (256,)
MAX_N_WITHOUT_LARGE = 128


@dataclass(frozen=True)
class ExperimentSpec:
    case: Case = Case.ALIGNED
    schur: SchurVariant = SchurVariant.S5
    N_list: tuple[int, ...] = DEFAULT_N
    eps_list: tuple[float, ...] = DEFAULT_EPS
    beta: float = 0.0
    m: int = 4
    inflow: bool = True
    tol: float = 1e-6
    maxit: int = 100

    def __post_init__(self):
        object.__setattr__(self, "case", Case(self.case))
        object.__setattr__(self, "schur", SchurVariant(self.schur))
        object.__setattr__(self, "N_list", tuple(int(n) for n in self.N_list))
        object.__setattr__(self, "eps_list", tuple(float(e) for e in self.eps_list))

    def problems(self) -> list[str]:
        """Reasons this spec cannot run; empty when it is valid."""
        out = []
        if self.schur is SchurVariant.S6 and self.case is not Case.ALIGNED:
            out.append("s6 is only defined for --case aligned")
        if self.schur is SchurVariant.EXACT:
            for N in self.N_list:
                n = N * (N + 1) if self.case is Case.ALIGNED else N * N
                if n > DENSE_LIMIT:
                    out.append(f"exact Schur complement needs n <= {DENSE_LIMIT}; N={N} gives n={n}")
        if not self.N_list or not self.eps_list:
            out.append("N and eps lists must be nonempty")
        if any(N < 4 for N in self.N_list):
            out.append("N must be at least 4")
        if any(e <= 0 for e in self.eps_list):
            out.append("eps must be positive")
        return out


@dataclass
class CellResult:
    case: str
    schur: str
    N: int
    eps: float
    beta: float
    inflow: bool
    iterations: int | None
    converged: bool
    time_factorize: float
    time_iterate: float
    true_residual: float
    error_linf: float
    error: str = ""
    report: GmresReport | None = field(default=None, repr=False)
    system: BlockSystem | None = field(default=None, repr=False)
    schur_op: SchurOperator | None = field(default=None, repr=False)

    @property
    def cell(self) -> str:
        """Table rendering: the count, or ``x`` when GMRES did not converge."""
        return str(self.iterations) if self.converged else "x"


CSV_COLUMNS = (
    "case", "schur", "N", "eps", "beta", "inflow", "iterations", "converged",
    "time_factorize", "time_iterate", "true_residual", "error_linf", "error",
)


def run_cell(spec: ExperimentSpec, N: int, eps: float, ritz: bool = False, keep: bool = False) -> CellResult:
    """Assemble, precondition and solve one (N, eps) cell.

    Factorization failures are caught and reported in the result rather
    than raised. The no-inflow system is preconditioned with blocks built
    from the inflow assembly.
    """
    grid = make_grid(spec.case, N)
    p = FieldParams(eps, spec.beta, spec.m)
    system = assemble(grid, p, inflow=spec.inflow)
    pre_sys = system if spec.inflow else with_inflow_blocks(system)
    base = CellResult(spec.case.value, spec.schur.value, N, eps, spec.beta, spec.inflow,
                      None, False, 0.0, 0.0, float("nan"), float("nan"))

    t0 = time.perf_counter_ns()
    try:
        a3 = factorize_a3(pre_sys)
        S = build_schur(spec.schur, pre_sys, a3)
    except (MMAPError, ArithmeticError, ValueError) as exc:
        base.time_factorize = (time.perf_counter_ns() - t0) / 1e9
        base.error = f"{type(exc).__name__}: {exc}"
        if keep:
            base.system = system
        return base
    t_fact = (time.perf_counter_ns() - t0) / 1e9

    M = BlockPreconditioner(a3, pre_sys.A2, S)
    rep = gmres(system, system.rhs, M, SolverConfig(spec.tol, spec.maxit, ritz))
    rep.time_factorize = t_fact
    rhs = system.rhs
    true_res = float(np.linalg.norm(rhs - system.matvec(rep.x)) / np.linalg.norm(rhs))
    err = error_norms(rep.x, grid, p).l_inf
    res = replace(
        base,
        iterations=rep.iterations,
        converged=rep.converged,
        time_factorize=t_fact,
        time_iterate=rep.time_iterate,
        true_residual=true_res,
        error_linf=err,
        report=rep,
    )
    if keep:
        res.system, res.schur_op = system, S
    return res


def run_table(spec: ExperimentSpec) -> list[CellResult]:
    """All cells of ``spec``, N outer and eps inner."""
    return [run_cell(spec, N, eps) for N in spec.N_list for eps in spec.eps_list]


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if v is None:
        return "x"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def table_csv(rows: list[CellResult]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        d = asdict(r)
        d["iterations"] = r.cell
        w.writerow([_fmt(d[c]) if c != "iterations" else d[c] for c in CSV_COLUMNS])
    return buf.getvalue()


def cell_dict(r: CellResult) -> dict:
    d = {c: getattr(r, c) for c in CSV_COLUMNS}
    d["iterations"] = r.iterations if r.converged else "x"
    for k in ("true_residual", "error_linf"):
        if not np.isfinite(d[k]):
            d[k] = None
    return d


def iteration_grid(rows: list[CellResult], spec: ExperimentSpec) -> dict[int, list[str]]:
    """``{N: [cell per eps]}`` in ``spec.eps_list`` order."""
    out: dict[int, list[str]] = {N: [] for N in spec.N_list}
    for r in rows:
        out[r.N].append(r.cell)
    return out
