"""Problem construction and matrix file I/O.

A candidate basis is a dense (n, r) array whose rows are candidate
observation vectors; a snapshot matrix is a dense (n, m) array with one
spatial point per row and one snapshot per column.
"""

from pathlib import Path

import numpy as np

from .exceptions import MatrixParseError
from .rng import substream
from .validation import as_float_matrix

__all__ = [
    "gen_gaussian_problem",
    "pod_basis",
    "center_snapshots",
    "gen_lowrank_snapshots",
    "read_matrix",
    "write_matrix",
]


def gen_gaussian_problem(n, r, seed):
    """Random sensor-candidate basis with i.i.d. standard-normal entries.

    Parameters
    ----------
    n : int
        Number of sensor candidates (rows).
    r : int
        Number of latent modes (columns), at most ``n``.
    seed : int
        Root seed; the same (n, r, seed) always yields the same matrix.

    Returns
    -------
    (n, r) ndarray
    """
    n, r = int(n), int(r)
    if r < 1:
        raise ValueError(f"need r >= 1, got {r}")
    if n < r:
        raise ValueError(f"need n >= r, got n={n}, r={r}")
    rng = substream(seed, "gaussian-problem", n, r)
    return rng.standard_normal((n, r))


def pod_basis(snapshots, r):
    """Proper orthogonal decomposition basis of a snapshot matrix.

    Returns the ``r`` leading left singular vectors as columns. The SVD sign
    ambiguity is fixed by making the largest-magnitude entry of each column
    positive (first such entry on ties), so results are deterministic.

    Parameters
    ----------
    snapshots : (n, m) array_like
    r : int
        Truncation rank, at most ``min(n, m)``.

    Returns
    -------
    (n, r) ndarray with orthonormal columns.
    """
    X = as_float_matrix(snapshots, "snapshot matrix")
    n, m = X.shape
    r = int(r)
    if not 1 <= r <= min(n, m):
        raise ValueError(f"rank must satisfy 1 <= r <= min(n, m) = {min(n, m)}, got {r}")
    left, _, _ = np.linalg.svd(X, full_matrices=False)
    basis = left[:, :r].copy()
    for j in range(r):
        k = int(np.argmax(np.abs(basis[:, j])))
        if basis[k, j] < 0.0:
            basis[:, j] = -basis[:, j]
    return basis


def center_snapshots(snapshots):
    """Subtract the per-point temporal mean (mean over columns)."""
    X = as_float_matrix(snapshots, "snapshot matrix")
    return X - X.mean(axis=1, keepdims=True)


def gen_lowrank_snapshots(n, m, rank, seed, singular_values=None):
    """Synthetic snapshot matrix with orthonormal factors and a known spectrum.

    Defaults to the linearly decaying spectrum ``2*rank, 2*rank - 2, ..., 2``.
    Useful as a data-driven test problem where the POD basis is known exactly.
    """
    n, m, rank = int(n), int(m), int(rank)
    if not 1 <= rank <= min(n, m):
        raise ValueError(f"rank must satisfy 1 <= rank <= min(n, m) = {min(n, m)}, got {rank}")
    if singular_values is None:
        singular_values = 2.0 * np.arange(rank, 0, -1, dtype=np.float64)
    sv = np.asarray(singular_values, dtype=np.float64)
    if sv.size != rank or (sv <= 0).any():
        raise ValueError("singular_values must hold `rank` positive entries")
    rng = substream(seed, "lowrank-snapshots", n, m, rank)
    left, _ = np.linalg.qr(rng.standard_normal((n, rank)))
    right, _ = np.linalg.qr(rng.standard_normal((m, rank)))
    return (left * sv) @ right.T


def write_matrix(path, matrix):
    """Write a dense matrix as UTF-8 text.

    Format: a header line ``# rows=<n> cols=<r>`` followed by n lines of r
    comma-separated floats at 17 significant digits (exact round trip).
    """
    M = as_float_matrix(matrix, "matrix")
    lines = [f"# rows={M.shape[0]} cols={M.shape[1]}"]
    for row in M:
        lines.append(",".join(format(v, ".17g") for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def read_matrix(path):
    """Read a matrix written by :func:`write_matrix`.

    Raises
    ------
    MatrixParseError
        On a malformed header, a ragged row, or a non-finite/non-numeric
        token; the error names the 1-based file line and column.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise MatrixParseError(f"cannot read file: {exc}", path=path) from exc
    lines = text.splitlines()
    if not lines:
        raise MatrixParseError("empty file", path=path, row=1)
    header = lines[0].strip()
    parts = header.split()
    if (
        len(parts) != 3
        or parts[0] != "#"
        or not parts[1].startswith("rows=")
        or not parts[2].startswith("cols=")
    ):
        raise MatrixParseError(f"malformed header {header!r}", path=path, row=1)
    try:
        n = int(parts[1][len("rows="):])
        r = int(parts[2][len("cols="):])
    except ValueError as exc:
        raise MatrixParseError(f"malformed header {header!r}", path=path, row=1) from exc
    if n < 1 or r < 1:
        raise MatrixParseError(f"header declares empty matrix {n}x{r}", path=path, row=1)
    body = [ln for ln in lines[1:] if ln.strip() != ""]
    if len(body) != n:
        raise MatrixParseError(f"expected {n} data rows, found {len(body)}", path=path, row=1 + len(body))
    out = np.empty((n, r), dtype=np.float64)
    for i, line in enumerate(body):
        tokens = line.split(",")
        if len(tokens) != r:
            raise MatrixParseError(
                f"expected {r} values, found {len(tokens)}", path=path, row=i + 2
            )
        for j, tok in enumerate(tokens):
            try:
                value = float(tok)
            except ValueError as exc:
                raise MatrixParseError(
                    f"non-numeric token {tok.strip()!r}", path=path, row=i + 2, col=j + 1
                ) from exc
            if not np.isfinite(value):
                raise MatrixParseError(
                    f"non-finite value {tok.strip()!r}", path=path, row=i + 2, col=j + 1
                )
            out[i, j] = value
    return out
