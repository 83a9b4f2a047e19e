"""Small input-validation helpers shared by the library modules."""

import numpy as np


def as_float_matrix(a, name="matrix"):
    """Coerce to a 2-D float64 array with finite entries."""
    out = np.asarray(a, dtype=np.float64)
    if out.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got {out.ndim}-D")
    if out.shape[0] < 1 or out.shape[1] < 1:
        raise ValueError(f"{name} must be nonempty, got shape {out.shape}")
    if not np.isfinite(out).all():
        raise ValueError(f"{name} contains non-finite entries")
    return out


def as_candidate_basis(a):
    """A candidate basis has one row per sensor candidate and n >= r columns."""
    out = as_float_matrix(a, "candidate basis")
    n, r = out.shape
    if n < r:
        raise ValueError(f"candidate basis needs at least as many rows as columns, got {n}x{r}")
    return out


def as_weight_vector(a, n=None):
    """A weight vector is 1-D and strictly inside (0, 1) coordinate-wise."""
    w = np.asarray(a, dtype=np.float64)
    if w.ndim != 1:
        raise ValueError(f"weights must be 1-D, got {w.ndim}-D")
    if n is not None and w.size != n:
        raise ValueError(f"expected {n} weights, got {w.size}")
    if not np.isfinite(w).all() or (w <= 0.0).any() or (w >= 1.0).any():
        raise ValueError("weights must lie strictly inside (0, 1)")
    return w


def as_index_array(a, n, name="indices", distinct=False):
    """A 1-D array of candidate indices in [0, n)."""
    idx = np.asarray(a, dtype=np.intp).ravel()
    if idx.size == 0:
        raise ValueError(f"{name} must be nonempty")
    if (idx < 0).any() or (idx >= n).any():
        raise ValueError(f"{name} must lie in [0, {n})")
    if distinct and np.unique(idx).size != idx.size:
        raise ValueError(f"{name} must be distinct")
    return idx
