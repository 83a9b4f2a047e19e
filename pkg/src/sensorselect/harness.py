"""Experiment harness: sweeps, traces, rho studies, and the data-driven run.

All harness randomness derives from the root seed through named substreams
keyed by (method, p, trial), so sweep cells may run on a worker pool without
changing any result, and rows are always emitted in (method, p, trial)
lexicographic order. Timing columns measure the solver loop only and are
the sole nondeterministic CSV content.
"""

import dataclasses
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from threadpoolctl import threadpool_limits

from .baselines import greedy_select, random_select
from .exceptions import DampedSolveError, LineSearchError, RankDeficiencyError
from .objective import d_optimality
from .problems import center_snapshots, gen_gaussian_problem, pod_basis, read_matrix
from .rng import substream, substream_seed
from .solvers import SolverConfig, solve

__all__ = [
    "SweepSpec",
    "ResultRow",
    "SWEEP_COLUMNS",
    "TRACE_COLUMNS",
    "RHO_COLUMNS",
    "run_sweep",
    "run_trace",
    "run_rho_sweep",
    "run_datadriven",
    "write_rows_csv",
    "format_float",
]

CONVEX_METHODS = ("full", "rsn", "crsn")
ALL_METHODS = ("full", "rsn", "crsn", "greedy", "random")

SWEEP_COLUMNS = [
    "method", "n", "r", "p", "s", "rho", "kappa", "seed",
    "f", "f_org", "steps", "converged", "wall_ms", "step_ms_mean",
    "f_org_minus_greedy",
]
TRACE_COLUMNS = ["step", "f", "decrement", "elapsed_ms"]
RHO_COLUMNS = ["rho", "method", "mean_f", "mean_f_org", "mean_steps", "mean_wall_ms", "trials"]

# columns whose values vary run to run; everything else is byte-deterministic
TIMING_COLUMNS = {"wall_ms", "step_ms_mean", "mean_wall_ms", "elapsed_ms"}


@dataclass(frozen=True)
class SweepSpec:
    """One benchmark sweep: every (method, p, trial) cell on one problem family."""

    n: int
    r: int
    p_values: Sequence[int]
    s: Optional[int] = None
    rho: float = 0.5
    methods: Sequence[str] = CONVEX_METHODS + ("greedy",)
    trials: int = 1
    seed: int = 0
    kappa: float = 1e-4
    epsilon: float = 1e-6
    max_steps: int = 10_000
    armijo_c: float = 0.01
    backtrack_beta: float = 0.5
    feasibility_margin: float = 0.99
    consecutive_required: Optional[int] = None
    problem_path: Optional[str] = None  # fixture basis file; replaces Gaussian generation

    def validate(self):
        if not self.p_values:
            raise ValueError("p_values must be nonempty")
        if self.trials < 1:
            raise ValueError(f"trials must be at least 1, got {self.trials}")
        unknown = sorted(set(self.methods) - set(ALL_METHODS))
        if unknown:
            raise ValueError(f"unknown methods {unknown}; choose from {ALL_METHODS}")
        if not self.methods:
            raise ValueError("methods must be nonempty")
        self.solver_config(seed=0).validate()
        return self

    def solver_config(self, seed):
        return SolverConfig(
            kappa=self.kappa,
            epsilon=self.epsilon,
            s=self.s,
            rho=self.rho,
            armijo_c=self.armijo_c,
            backtrack_beta=self.backtrack_beta,
            feasibility_margin=self.feasibility_margin,
            max_steps=self.max_steps,
            consecutive_required=self.consecutive_required,
            seed=seed,
        )


@dataclass
class ResultRow:
    """One CSV row of a sweep-shaped table."""

    method: str
    n: int
    r: int
    p: int
    s: int
    rho: float
    kappa: float
    seed: int
    f: float
    f_org: float
    steps: int
    converged: str  # "true", "false", or an error slug
    wall_ms: float
    step_ms_mean: float
    f_org_minus_greedy: float = float("nan")

    def values(self):
        return [getattr(self, c) for c in SWEEP_COLUMNS]


def format_float(value):
    """Floats at 17 significant digits; exact decimal round trip."""
    return format(float(value), ".17g")


def _format_cell(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format_float(value)
    return str(value)


def write_rows_csv(path, columns, rows):
    """Write rows (sequences matching ``columns``) with LF endings."""
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(_format_cell(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def _solver_error_slug(exc):
    if isinstance(exc, LineSearchError):
        return "error-line-search"
    if isinstance(exc, DampedSolveError):
        return "error-damped-solve"
    if isinstance(exc, RankDeficiencyError):
        return "error-rank-deficiency"
    return "error-solver"


def _load_problem(spec, trial):
    if spec.problem_path is not None:
        return read_matrix(spec.problem_path)
    return gen_gaussian_problem(spec.n, spec.r, substream_seed(spec.seed, "problem", trial))


def run_cell(basis, method, p, trial, spec):
    """One (method, p, trial) cell; solver failures land in the row, not as raises."""
    n, r = basis.shape
    cell_seed = substream_seed(spec.seed, method, p, trial)
    s_eff = int(spec.s) if spec.s is not None else max(1, n // 10)
    row = ResultRow(
        method=method, n=n, r=r, p=p, s=s_eff, rho=spec.rho, kappa=spec.kappa,
        seed=cell_seed, f=float("nan"), f_org=float("nan"), steps=0,
        converged="false", wall_ms=0.0, step_ms_mean=0.0,
    )
    if method in CONVEX_METHODS:
        try:
            report = solve(basis, p, spec.solver_config(seed=cell_seed), mode=method)
        except (LineSearchError, DampedSolveError, RankDeficiencyError) as exc:
            row.f = float("-inf")
            row.f_org = float("-inf")
            row.converged = _solver_error_slug(exc)
            return row
        row.f = report.f_value
        row.f_org = report.f_org
        row.steps = report.steps
        row.converged = "true" if report.converged else "false"
        row.wall_ms = report.total_seconds * 1e3
        row.step_ms_mean = row.wall_ms / max(1, report.steps)
        return row
    if method == "greedy":
        started = time.perf_counter()
        selection = greedy_select(basis, p)
        elapsed = time.perf_counter() - started
        row.steps = p
    else:
        started = time.perf_counter()
        selection = random_select(n, p, substream(cell_seed, "random-select"))
        elapsed = time.perf_counter() - started
        row.steps = 0
    row.f_org = d_optimality(basis, selection)
    row.f = row.f_org  # baselines have no relaxed objective; report the selection value
    row.converged = "true"
    row.wall_ms = elapsed * 1e3
    row.step_ms_mean = row.wall_ms / max(1, row.steps)
    return row


def run_sweep(spec, threads=1):
    """All sweep cells in (method, p, trial) lexicographic order.

    The ``f_org_minus_greedy`` column is filled per (p, trial) when the
    greedy baseline is part of the sweep and is NaN otherwise.
    """
    spec.validate()
    methods = sorted(set(spec.methods))
    p_values = sorted(set(int(p) for p in spec.p_values))
    problems = {t: _load_problem(spec, t) for t in range(spec.trials)}
    cells = [(m, p, t) for m in methods for p in p_values for t in range(spec.trials)]

    if threads > 1:
        # pre-pin BLAS so the per-solve pinning contexts nest as no-ops
        # instead of racing on the ambient thread-count restore
        with threadpool_limits(limits=1), ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(lambda c: run_cell(problems[c[2]], *c, spec), cells))
    else:
        rows = [run_cell(problems[t], m, p, t, spec) for (m, p, t) in cells]

    if "greedy" in methods:
        greedy_f = {
            (row.p, trial): row.f_org
            for row, (_, _, trial) in zip(rows, cells)
            if row.method == "greedy"
        }
        for row, (_, p, trial) in zip(rows, cells):
            row.f_org_minus_greedy = row.f_org - greedy_f[(p, trial)]
    return rows


def run_trace(method, p, spec):
    """Single-instance solve returning (report, trace rows for the CSV)."""
    spec.validate()
    if method not in CONVEX_METHODS:
        raise ValueError(f"trace requires a convex method, got {method!r}")
    basis = _load_problem(spec, 0)
    cell_seed = substream_seed(spec.seed, method, p, 0)
    report = solve(basis, p, spec.solver_config(seed=cell_seed), mode=method)
    rows = [(t.step, t.f, t.decrement, t.seconds * 1e3) for t in report.trace]
    return report, rows


def run_rho_sweep(rho_values, p, spec, trials):
    """Mean converged objective and wall time per rho; rho = 0 runs and labels as rsn."""
    spec.validate()
    out = []
    for rho in rho_values:
        rho = float(rho)
        method = "rsn" if rho == 0.0 else "crsn"
        f_sum = forg_sum = step_sum = wall_sum = 0.0
        for trial in range(trials):
            basis = _load_problem(spec, trial)
            cell_seed = substream_seed(spec.seed, method, p, trial)
            config = dataclasses.replace(spec.solver_config(seed=cell_seed), rho=rho)
            report = solve(basis, p, config, mode=method)
            f_sum += report.f_value
            forg_sum += report.f_org
            step_sum += report.steps
            wall_sum += report.total_seconds * 1e3
        out.append(
            (rho, method, f_sum / trials, forg_sum / trials, step_sum / trials,
             wall_sum / trials, trials)
        )
    return out


def run_datadriven(snapshot_path, r, p, method, spec, center=False):
    """Snapshot file -> POD basis -> one selection row (sweep schema)."""
    snapshots = read_matrix(snapshot_path)
    r = int(r)
    if r > min(snapshots.shape):
        raise ValueError(
            f"{snapshot_path}: rank {r} exceeds min(snapshot dims) = {min(snapshots.shape)}"
        )
    if center:
        snapshots = center_snapshots(snapshots)
    basis = pod_basis(snapshots, r)
    row = run_cell(basis, method, p, 0, spec)
    if method == "greedy":
        row.f_org_minus_greedy = 0.0
    return row
