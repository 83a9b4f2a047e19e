"""Constrained Newton solvers for the relaxed selection objective.

Three modes share one iteration: ``full`` takes Newton steps over all n
weights; ``rsn`` restricts each step to a fresh uniform random subset of s
weights (randomized subspace Newton, after Gower et al., 2019); ``crsn``
biases the subset by always including the current largest-weight candidates
and filling the rest at random.

Each step solves the equality-constrained Newton system on the sketch (the
weights must keep a fixed sum), backtracks to an Armijo step that preserves
0 < w_i < 1, and applies the update to the sketched coordinates only.
Convergence requires the Newton decrement to stay below the tolerance for
K consecutive steps, which guards against lucky small decrements on easy
sketches: K = 1 for the full solver and K = ceil(n / s) for rsn. For crsn
the elite prefix revisits the same indices every step and contributes no
exploration, so K is equalized to the coverage rate of the random suffix,
K = ceil((n - e) / (s - e)) with e elite indices; this reduces to the rsn
rule at rho = 0 and to K = 1 at s = n.
"""

import math
import time
import warnings
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from scipy.linalg import blas as _blas
from scipy.linalg import cho_factor, cho_solve, lapack as _lapack, solve_triangular
from threadpoolctl import threadpool_limits

from .exceptions import DampedSolveError, LineSearchError
from .objective import _barrier, _leverage, d_optimality, fisher, relaxed_objective
from .rng import substream
from .validation import as_candidate_basis, as_weight_vector

__all__ = [
    "SolverConfig",
    "SolverReport",
    "TraceRow",
    "sketch_uniform",
    "sketch_elite",
    "constrained_newton_step",
    "decrement",
    "backtracking_line_search",
    "round_top_p",
    "solve",
]

_MODES = ("full", "rsn", "crsn")


@dataclass(frozen=True)
class SolverConfig:
    """Tuning knobs shared by all solver modes.

    ``s`` is the sketch size (None means n // 10, ignored by the full
    solver), ``rho`` the elite fraction of the sketch used by crsn, and
    ``consecutive_required`` the convergence streak length K (None derives
    it from the mode as described in the module docstring).
    """

    kappa: float = 1e-4
    epsilon: float = 1e-6
    s: Optional[int] = None
    rho: float = 0.5
    armijo_c: float = 0.01
    backtrack_beta: float = 0.5
    feasibility_margin: float = 0.99
    max_steps: int = 10_000
    consecutive_required: Optional[int] = None
    seed: int = 0

    def validate(self):
        if self.kappa < 0:
            raise ValueError(f"kappa must be nonnegative, got {self.kappa}")
        if self.epsilon <= 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.s is not None and int(self.s) < 1:
            raise ValueError(f"sketch size must be at least 1, got {self.s}")
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError(f"rho must lie in [0, 1], got {self.rho}")
        if not 0.0 < self.armijo_c < 0.5:
            raise ValueError(f"armijo_c must lie in (0, 0.5), got {self.armijo_c}")
        if not 0.0 < self.backtrack_beta < 1.0:
            raise ValueError(f"backtrack_beta must lie in (0, 1), got {self.backtrack_beta}")
        if not 0.0 < self.feasibility_margin < 1.0:
            raise ValueError(f"feasibility_margin must lie in (0, 1), got {self.feasibility_margin}")
        if self.max_steps < 1:
            raise ValueError(f"max_steps must be at least 1, got {self.max_steps}")
        if self.consecutive_required is not None and int(self.consecutive_required) < 1:
            raise ValueError("consecutive_required must be at least 1 when given")
        return self


class TraceRow(NamedTuple):
    step: int
    f: float
    decrement: float
    seconds: float  # cumulative solver-loop wall time


@dataclass
class SolverReport:
    """Outcome of one solve: final weights, rounded selection, and trace."""

    weights: np.ndarray
    selection: np.ndarray
    f_value: float
    f_org: float
    steps: int
    converged: bool
    mode: str
    trace: list
    total_seconds: float


def sketch_uniform(n, s, rng):
    """s distinct indices: the first s entries of a seeded random permutation.

    ``s > n`` is clamped to n with a warning (the sketch then degenerates to
    the full index set).
    """
    n, s = int(n), int(s)
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    if s < 1:
        raise ValueError(f"sketch size must be at least 1, got {s}")
    if s > n:
        warnings.warn(f"sketch size {s} exceeds n = {n}; clamped to n", RuntimeWarning, stacklevel=2)
        s = n
    return rng.permutation(n)[:s]


def sketch_elite(weights, s, rho, rng):
    """Elite-biased sketch: top-weight indices first, then a uniform draw.

    Takes the round(rho * s) indices of the largest weights (half-up
    rounding, ties to the lower index) and fills the remainder uniformly
    without replacement from the complement, so the two parts never overlap.
    """
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 1 or w.size < 1:
        raise ValueError("weights must be a nonempty 1-D array")
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"rho must lie in [0, 1], got {rho}")
    n = w.size
    s = int(s)
    if s < 1:
        raise ValueError(f"sketch size must be at least 1, got {s}")
    if s > n:
        warnings.warn(f"sketch size {s} exceeds n = {n}; clamped to n", RuntimeWarning, stacklevel=2)
        s = n
    n_elite = min(int(math.floor(rho * s + 0.5)), s)
    if n_elite > 0:
        elite = np.argsort(-w, kind="stable")[:n_elite]
        pool = np.setdiff1d(np.arange(n), elite)
    else:
        elite = np.empty(0, dtype=np.intp)
        pool = np.arange(n)
    n_random = s - n_elite
    if n_random > 0:
        chosen = pool[rng.permutation(pool.size)[:n_random]]
    else:
        chosen = pool[:0]
    return np.concatenate([elite.astype(np.intp), chosen.astype(np.intp)])


def round_top_p(weights, p):
    """Indices of the p largest weights, ties to the lower index, ascending."""
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 1:
        raise ValueError("weights must be 1-D")
    p = int(p)
    if not 0 <= p <= w.size:
        raise ValueError(f"p must lie in [0, {w.size}], got {p}")
    top = np.argsort(-w, kind="stable")[:p]
    return np.sort(top)


def _default_streak(mode, n, s, rho):
    """Consecutive sub-tolerance steps required before declaring convergence."""
    if mode == "full":
        return 1
    if mode == "crsn":
        n_elite = min(int(math.floor(rho * s + 0.5)), s)
        explore = s - n_elite
        if explore > 0:
            # only the random suffix explores; match its coverage rate
            return math.ceil((n - n_elite) / explore)
    return math.ceil(n / s)


def constrained_newton_step(grad, hess):
    """Newton direction on the sketch, projected to sum to zero.

    ``grad`` is the minimization-form gradient restricted to the sketch and
    ``hess`` the positive-semidefinite subspace curvature. Solves

        dw = -H^{-1} g + (1^T H^{-1} g) / (1^T H^{-1} 1) * H^{-1} 1

    via one Cholesky factorization and two triangular solves. A marginally
    indefinite H is retried with diagonal damping 1e-10 * trace(H)/s,
    escalating tenfold up to 1e-4 before raising DampedSolveError.
    """
    g = np.asarray(grad, dtype=np.float64).ravel()
    H = np.asarray(hess, dtype=np.float64)
    size = g.size
    if H.shape != (size, size):
        raise ValueError(f"hessian shape {H.shape} does not match gradient length {size}")
    base = float(np.trace(H)) / size
    damping = 0.0
    while True:
        try:
            damped = H if damping == 0.0 else H + (damping * base) * np.eye(size)
            factor = cho_factor(damped, lower=True, check_finite=False)
            break
        except np.linalg.LinAlgError:
            damping = 1e-10 if damping == 0.0 else damping * 10.0
            if damping > 1e-4 or base <= 0.0:
                raise DampedSolveError(
                    "subspace Newton system stayed indefinite through the damping ladder"
                ) from None
    rhs = np.empty((size, 2), dtype=np.float64)
    rhs[:, 0] = g
    rhs[:, 1] = 1.0
    solved = cho_solve(factor, rhs, check_finite=False)
    hinv_g, hinv_one = solved[:, 0], solved[:, 1]
    nu = hinv_g.sum() / hinv_one.sum()
    step = nu * hinv_one - hinv_g
    step -= step.mean()  # scrub the fp residual of the sum-zero constraint
    return step


def decrement(grad, step):
    """Newton decrement sqrt(max(0, -g . dw)); zero at a constrained stationary point."""
    value = -float(np.dot(np.asarray(grad, dtype=np.float64), np.asarray(step, dtype=np.float64)))
    return math.sqrt(max(0.0, value))


def backtracking_line_search(basis, weights, direction, kappa, f_current, g_dot_dw, config=None):
    """Armijo backtracking along a sum-zero ascent direction.

    ``direction`` is full length with zeros off the sketch; ``g_dot_dw`` is
    the minimization-form slope (nonpositive for Newton directions). The
    first trial is feasibility_margin times the largest step keeping every
    coordinate inside (0, 1) (capped at 1), then shrinks by backtrack_beta
    until f(w + step * dw) >= f(w) + armijo_c * step * (-g_dot_dw). Returns
    the accepted step size; a zero direction returns 1.0 unchanged.
    """
    cfg = (config if config is not None else SolverConfig()).validate()
    U = as_candidate_basis(basis)
    w = as_weight_vector(weights, U.shape[0])
    dw = np.asarray(direction, dtype=np.float64)
    if dw.shape != w.shape:
        raise ValueError(f"direction shape {dw.shape} does not match weights {w.shape}")
    if not dw.any():
        return 1.0
    predicted = -float(g_dot_dw)
    rising = dw > 0
    falling = dw < 0
    t_hi = np.inf
    if rising.any():
        t_hi = min(t_hi, float(((1.0 - w[rising]) / dw[rising]).min()))
    if falling.any():
        t_hi = min(t_hi, float((w[falling] / -dw[falling]).min()))
    step = cfg.feasibility_margin * min(1.0, t_hi)
    # absolute slack: near-stationary steps predict ascent below fp noise
    slack = 64.0 * np.finfo(np.float64).eps * (1.0 + abs(f_current))
    for _ in range(61):
        trial = w + step * dw
        try:
            f_trial = relaxed_objective(U, trial, kappa)
        except (ValueError, np.linalg.LinAlgError):
            f_trial = float("-inf")
        if f_trial >= f_current + cfg.armijo_c * step * predicted - slack:
            return step
        step *= cfg.backtrack_beta
    raise LineSearchError("no Armijo step within 60 halvings; direction may not ascend")


def _sketch_hessian_lower(chol, rows, w_rows, kappa):
    """Lower triangle of the sketched curvature, upper left as zeros.

    Same matrix as :func:`sensorselect.objective.sketched_hessian` but only
    the triangle LAPACK reads, built with a symmetric rank-k product.
    """
    V = solve_triangular(chol, rows.T, lower=True, check_finite=False)
    H = _blas.dsyrk(1.0, V, trans=1, lower=1)
    np.square(H, out=H)
    if kappa > 0:
        H[np.diag_indices_from(H)] += kappa * (1.0 / w_rows**2 + 1.0 / (1.0 - w_rows) ** 2)
    return H, V


def _newton_on_sketch(grad_min, H, V, w_rows, kappa):
    """Constrained Newton direction from a lower-triangle curvature.

    Factors H in place, rebuilding it from V on the rare damped retry; the
    returned step is mean-centered onto the sum-zero constraint.
    """
    size = grad_min.size
    base = float(np.trace(H)) / size
    damping = 0.0
    while True:
        factor, info = _lapack.dpotrf(H, lower=1, clean=0, overwrite_a=1)
        if info == 0:
            break
        damping = 1e-10 if damping == 0.0 else damping * 10.0
        if damping > 1e-4 or base <= 0.0:
            raise DampedSolveError(
                "subspace Newton system stayed indefinite through the damping ladder"
            )
        H = _blas.dsyrk(1.0, V, trans=1, lower=1)
        np.square(H, out=H)
        H[np.diag_indices_from(H)] += kappa * (1.0 / w_rows**2 + 1.0 / (1.0 - w_rows) ** 2)
        H[np.diag_indices_from(H)] += damping * base
    rhs = np.empty((size, 2), dtype=np.float64)
    rhs[:, 0] = grad_min
    rhs[:, 1] = 1.0
    solved = cho_solve((factor, True), rhs, check_finite=False)
    hinv_g, hinv_one = solved[:, 0], solved[:, 1]
    nu = hinv_g.sum() / hinv_one.sum()
    step = nu * hinv_one - hinv_g
    step -= step.mean()
    return step


def _line_search_on_sketch(gram, delta_gram, w_rows, dw, barrier_rest, kappa, f_current, slope, cfg):
    """Armijo backtracking with rank-s Fisher updates.

    Decision-for-decision the same search as :func:`backtracking_line_search`
    (feasibility cap, margin, halving ladder, fp slack, 60-halving budget)
    but each trial costs O(r^3 + s): the trial Fisher matrix is
    gram + step * delta_gram and only the sketched barrier terms move.
    Returns (step, trial weights, trial Fisher matrix, its factor, f_trial).
    """
    predicted = -slope
    rising = dw > 0
    falling = dw < 0
    t_hi = np.inf
    if rising.any():
        t_hi = min(t_hi, float(((1.0 - w_rows[rising]) / dw[rising]).min()))
    if falling.any():
        t_hi = min(t_hi, float((w_rows[falling] / -dw[falling]).min()))
    step = cfg.feasibility_margin * min(1.0, t_hi)
    slack = 64.0 * np.finfo(np.float64).eps * (1.0 + abs(f_current))
    for _ in range(61):
        w_trial = w_rows + step * dw
        trial_gram = gram + step * delta_gram
        factor, info = _lapack.dpotrf(trial_gram, lower=1, clean=1)
        if info == 0 and w_trial.min() > 0.0 and w_trial.max() < 1.0:
            logdet = 2.0 * float(np.log(np.diagonal(factor)).sum())
            barrier = float(np.log(w_trial).sum() + np.log1p(-w_trial).sum())
            f_trial = logdet + kappa * (barrier_rest + barrier)
            if f_trial >= f_current + cfg.armijo_c * step * predicted - slack:
                return step, w_trial, trial_gram, factor, f_trial
        step *= cfg.backtrack_beta
    raise LineSearchError("no Armijo step within 60 halvings; direction may not ascend")


def solve(basis, n_select, config=None, mode="full", _probe=None):
    """Optimize the relaxed selection weights and round to a selection.

    Parameters
    ----------
    basis : (n, r) array_like
        Candidate basis, one row per sensor candidate.
    n_select : int
        Number of sensors p to select, 1 <= p < n. Values below r are
        allowed; the rounded selection is then rank deficient and its
        d_optimality reports the -inf sentinel.
    config : SolverConfig, optional
    mode : {"full", "rsn", "crsn"}
    _probe : callable, optional
        Internal test hook called as probe(step, weights_copy, sketch)
        after every accepted step.

    Returns
    -------
    SolverReport
        Final weights (summing to p, strictly inside (0, 1)), the top-p
        selection, objective values, and the per-step trace of
        (step, f, decrement, cumulative seconds).

    Notes
    -----
    The Fisher matrix is maintained by rank-s corrections (the accepted
    line-search trial) and rebuilt from scratch every ceil(n / s) steps to
    bound floating-point drift. BLAS is pinned to one thread inside the
    loop; threaded kernels lose badly on the small factorizations that
    dominate sketched solves.
    """
    U = as_candidate_basis(basis)
    n, _ = U.shape
    p = int(n_select)
    if not 1 <= p < n:
        raise ValueError(f"need 1 <= p < n = {n} for an interior initial point, got p = {p}")
    cfg = (config if config is not None else SolverConfig()).validate()
    if mode not in _MODES:
        raise ValueError(f"mode must be one of {_MODES}, got {mode!r}")
    sketched = mode != "full"
    if sketched:
        s_eff = int(cfg.s) if cfg.s is not None else max(1, n // 10)
        if s_eff > n:
            warnings.warn(
                f"sketch size {s_eff} exceeds n = {n}; clamped to n (full Newton)",
                RuntimeWarning,
                stacklevel=2,
            )
            s_eff = n
    else:
        s_eff = n
    streak_required = (
        int(cfg.consecutive_required)
        if cfg.consecutive_required is not None
        else _default_streak(mode, n, s_eff, cfg.rho)
    )
    rebuild_every = max(1, math.ceil(n / s_eff))
    rng = substream(cfg.seed, "solver", mode)
    kappa = cfg.kappa

    with threadpool_limits(limits=1):
        started = time.perf_counter()
        w = np.full(n, p / n, dtype=np.float64)
        fish = fisher(U, w)
        gram, chol = fish.matrix, fish.chol
        f_val = fish.logdet() + kappa * _barrier(w)
        trace = []
        converged = False
        streak = 0
        since_rebuild = 0
        for k in range(1, cfg.max_steps + 1):
            if not sketched:
                idx = np.arange(n)
            elif mode == "rsn":
                idx = np.sort(sketch_uniform(n, s_eff, rng))
            else:
                idx = np.sort(sketch_elite(w, s_eff, cfg.rho, rng))
            rows = U[idx]
            w_rows = w[idx]
            fisher_inv = cho_solve((chol, True), np.eye(gram.shape[0]), check_finite=False)
            lev = _leverage(rows, fisher_inv)
            grad_min = -(lev + kappa / w_rows - kappa / (1.0 - w_rows))
            hess, V = _sketch_hessian_lower(chol, rows, w_rows, kappa)
            dw = _newton_on_sketch(grad_min, hess, V, w_rows, kappa)
            dec = decrement(grad_min, dw)
            delta_gram = (rows * dw[:, None]).T @ rows
            delta_gram = 0.5 * (delta_gram + delta_gram.T)
            barrier_rest = _barrier(w) - float(
                np.log(w_rows).sum() + np.log1p(-w_rows).sum()
            )
            step_size, w_trial, trial_gram, trial_chol, f_trial = _line_search_on_sketch(
                gram, delta_gram, w_rows, dw, barrier_rest, kappa, f_val,
                float(grad_min @ dw), cfg,
            )
            w[idx] = w_trial  # coordinates off the sketch stay untouched, exactly
            since_rebuild += 1
            if since_rebuild >= rebuild_every:
                fish = fisher(U, w)
                gram, chol = fish.matrix, fish.chol
                f_val = fish.logdet() + kappa * _barrier(w)
                since_rebuild = 0
            else:
                gram, chol = trial_gram, trial_chol
                f_val = f_trial
            trace.append(TraceRow(k, f_val, dec, time.perf_counter() - started))
            if _probe is not None:
                _probe(k, w.copy(), idx)
            if dec < cfg.epsilon:
                streak += 1
                if streak >= streak_required:
                    converged = True
                    break
            else:
                streak = 0
        total = trace[-1].seconds if trace else time.perf_counter() - started
    selection = round_top_p(w, p)
    return SolverReport(
        weights=w,
        selection=selection,
        f_value=f_val,
        f_org=d_optimality(U, selection),
        steps=len(trace),
        converged=converged,
        mode=mode,
        trace=trace,
        total_seconds=total,
    )
