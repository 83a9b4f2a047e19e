"""Reference selectors: determinant-based greedy and uniform random.

The greedy selector is the standard two-regime determinant rule: while the
selection has fewer rows than modes it grows the Gram volume of the chosen
rows; once the Fisher matrix is invertible it adds the row with the largest
leverage, which maximizes the determinant gain. It is a reference
implementation, not a reproduction of any particular published variant.
"""

import numpy as np
from scipy.linalg import cho_solve

from .exceptions import RankDeficiencyError
from .objective import _chol_lower
from .validation import as_candidate_basis

__all__ = ["greedy_select", "random_select"]


def greedy_select(basis, p):
    """Determinant-greedy selection of p rows, ties to the lower index.

    Grows the selection one row at a time. For steps k <= r the next row
    maximizes det of the k-by-k Gram of selected rows (equivalently the
    squared distance to the span of the current selection); for k > r it
    maximizes det(U_S^T U_S) through rank-one leverage updates, O(n r) per
    step.
    """
    U = as_candidate_basis(basis)
    n, r = U.shape
    p = int(p)
    if not 1 <= p <= n:
        raise ValueError(f"p must lie in [1, {n}], got {p}")

    selected = []
    taken = np.zeros(n, dtype=bool)

    # Regime 1: squared residual distance to the span of the selected rows.
    residual = np.einsum("ij,ij->i", U, U).copy()
    ortho = []  # orthonormal rows spanning the selection
    for _ in range(min(p, r)):
        scores = np.where(taken, -np.inf, residual)
        j = int(np.argmax(scores))
        selected.append(j)
        taken[j] = True
        v = U[j].copy()
        for q in ortho:
            v -= (v @ q) * q
        norm = float(np.linalg.norm(v))
        if norm > 1e-12 * max(1.0, float(np.linalg.norm(U[j]))):
            q = v / norm
            ortho.append(q)
            residual = np.maximum(residual - (U @ q) ** 2, 0.0)

    # Regime 2: leverage u_i A^{-1} u_i^T with A = U_S^T U_S, rank-one updates.
    if p > r:
        rows = U[np.asarray(selected, dtype=np.intp)]
        A = rows.T @ rows
        A = 0.5 * (A + A.T)
        try:
            inv = cho_solve((_chol_lower(A), True), np.eye(r))
        except RankDeficiencyError:
            # degenerate basis: every addition keeps det = 0, so all
            # candidates tie and the lowest indices win
            for i in range(n):
                if len(selected) == p:
                    break
                if not taken[i]:
                    selected.append(i)
                    taken[i] = True
            return np.sort(np.asarray(selected, dtype=np.intp))
        scaled = U @ inv  # row i holds u_i A^{-1}
        leverage = np.einsum("ij,ij->i", scaled, U)
        for _ in range(r, p):
            scores = np.where(taken, -np.inf, leverage)
            j = int(np.argmax(scores))
            selected.append(j)
            taken[j] = True
            cross = scaled @ U[j]  # u_i A^{-1} u_j^T for all i
            gain = 1.0 + cross[j]
            scaled -= np.outer(cross / gain, scaled[j])
            leverage -= cross**2 / gain

    return np.sort(np.asarray(selected, dtype=np.intp))


def random_select(n, p, rng):
    """Uniform p-subset of [0, n) without replacement, sorted ascending."""
    n, p = int(n), int(p)
    if not 0 <= p <= n:
        raise ValueError(f"p must lie in [0, {n}], got {p}")
    return np.sort(rng.permutation(n)[:p])
