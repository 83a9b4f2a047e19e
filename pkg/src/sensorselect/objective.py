"""D-optimality objectives and their derivatives.

The selection quality of a candidate subset is the log-determinant of its
Fisher information matrix. The continuous relaxation (Joshi & Boyd, 2009)
replaces the binary selection with weights in (0, 1) under a fixed sum and
adds a log barrier:

    f(w) = log det(sum_i w_i u_i^T u_i) + kappa * sum_i (log w_i + log(1 - w_i))

Sign conventions: ``relaxed_objective`` and ``gradient`` are in maximization
form (f is concave). ``sketched_hessian`` returns the negated curvature
matrix, which is positive semidefinite, as consumed by the minimization-form
Newton step in :mod:`sensorselect.solvers`.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, lapack, solve_triangular

from .exceptions import RankDeficiencyError
from .validation import as_candidate_basis, as_index_array, as_weight_vector

__all__ = [
    "FisherMatrix",
    "fisher",
    "d_optimality",
    "relaxed_objective",
    "gradient",
    "sketched_hessian",
]


@dataclass(frozen=True)
class FisherMatrix:
    """An r-by-r Fisher information matrix with its cached Cholesky factor."""

    matrix: np.ndarray
    chol: np.ndarray  # lower triangular, matrix == chol @ chol.T

    def logdet(self):
        return 2.0 * float(np.log(np.diagonal(self.chol)).sum())

    def solve(self, b):
        return cho_solve((self.chol, True), b, check_finite=False)

    def inverse(self):
        return self.solve(np.eye(self.matrix.shape[0]))


def _chol_lower(mat):
    """Lower Cholesky factor; raises RankDeficiencyError with the failing pivot."""
    factor, info = lapack.dpotrf(mat, lower=1, clean=1)
    if info > 0:
        raise RankDeficiencyError(
            f"matrix is not positive definite (pivot {info - 1}); "
            "the candidate basis is rank deficient or the weights vanish",
            pivot=info - 1,
        )
    if info < 0:
        raise ValueError(f"illegal value in Cholesky argument {-info}")
    return factor


def fisher(basis, weights):
    """Fisher information matrix ``sum_i w_i u_i^T u_i`` of weighted candidates.

    Formed as U^T (D_w U) in O(n r^2) and factorized once; the Cholesky
    factor is cached on the returned :class:`FisherMatrix`.
    """
    U = as_candidate_basis(basis)
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (U.shape[0],):
        raise ValueError(f"expected {U.shape[0]} weights, got shape {w.shape}")
    W = (U * w[:, None]).T @ U
    W = 0.5 * (W + W.T)  # scrub fp asymmetry from the GEMM
    return FisherMatrix(matrix=W, chol=_chol_lower(W))


def d_optimality(basis, selection):
    """Log-determinant of the Fisher matrix of the selected rows.

    Returns ``-inf`` when the selected set is rank deficient (for example
    fewer selected rows than modes) so degenerate subsets can still be
    ranked; never raises for singularity.
    """
    U = as_candidate_basis(basis)
    sel = as_index_array(selection, U.shape[0], "selection", distinct=True)
    r = U.shape[1]
    if sel.size < r:
        return float("-inf")
    rows = U[sel]
    G = rows.T @ rows
    G = 0.5 * (G + G.T)
    try:
        factor = _chol_lower(G)
    except RankDeficiencyError:
        return float("-inf")
    pivots = np.diagonal(factor)
    # fp Cholesky can slip past exact singularity with tiny positive pivots
    if (pivots**2).min() <= r * np.finfo(np.float64).eps * np.diagonal(G).max():
        return float("-inf")
    return 2.0 * float(np.log(pivots).sum())


def _barrier(w):
    return float(np.log(w).sum() + np.log1p(-w).sum())


def relaxed_objective(basis, weights, kappa):
    """Barrier-relaxed selection objective f(w), in maximization form."""
    U = as_candidate_basis(basis)
    w = as_weight_vector(weights, U.shape[0])
    if kappa < 0:
        raise ValueError(f"kappa must be nonnegative, got {kappa}")
    return fisher(U, w).logdet() + kappa * _barrier(w)


def _leverage(U_rows, fisher_inv):
    # Row-wise u_i W^{-1} u_i^T via a 3-operand einsum. einsum evaluates each
    # output element independently, so restricting to a row subset returns
    # bitwise the same values as the corresponding entries of the full call.
    return np.einsum("ij,jk,ik->i", U_rows, fisher_inv, U_rows)


def gradient(basis, weights, kappa, idx=None):
    """Gradient of the relaxed objective, optionally restricted to ``idx``.

    Component i is ``u_i W^{-1} u_i^T + kappa/w_i - kappa/(1 - w_i)``. With
    ``idx`` given only those components are computed, in O(|idx| r^2) on top
    of the O(n r^2) Fisher assembly; entry a of the restricted result equals
    entry ``idx[a]`` of the full gradient exactly.
    """
    U = as_candidate_basis(basis)
    w = as_weight_vector(weights, U.shape[0])
    if kappa < 0:
        raise ValueError(f"kappa must be nonnegative, got {kappa}")
    fisher_inv = fisher(U, w).inverse()
    if idx is not None:
        sub = as_index_array(idx, U.shape[0], "idx")
        U = U[sub]
        w = w[sub]
    return _leverage(U, fisher_inv) + kappa / w - kappa / (1.0 - w)


def sketched_hessian(basis, weights, kappa, idx):
    """Negated curvature of the relaxed objective on the sketch ``idx``.

    Entry (a, b) is ``(u_a W^{-1} u_b^T)^2`` plus, on the diagonal,
    ``kappa * (1/w_a^2 + 1/(1 - w_a)^2)``; positive semidefinite by
    construction. Computed as the entrywise square of V V^T where V solves
    the triangular system against the cached Cholesky factor, in
    O(s r^2 + s^2 r); the full n-by-n curvature is never formed unless the
    sketch itself is the full index set.
    """
    U = as_candidate_basis(basis)
    w = as_weight_vector(weights, U.shape[0])
    if kappa < 0:
        raise ValueError(f"kappa must be nonnegative, got {kappa}")
    sub = as_index_array(idx, U.shape[0], "sketch indices", distinct=True)
    fish = fisher(U, w)
    return _hessian_on_sketch(fish, U[sub], w[sub], kappa)


def _hessian_on_sketch(fish, U_rows, w_rows, kappa):
    V = solve_triangular(fish.chol, U_rows.T, lower=True, check_finite=False)
    H = V.T @ V
    np.square(H, out=H)
    if kappa > 0:
        H[np.diag_indices_from(H)] += kappa * (1.0 / w_rows**2 + 1.0 / (1.0 - w_rows) ** 2)
    return H
