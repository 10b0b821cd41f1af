"""Undirected weighted graphs: construction, Erdos-Renyi generation and
Matrix Market ingestion."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

SYMMETRY_TOL = 1e-12


class MatrixMarketError(ValueError):
    """Malformed or unsupported Matrix Market input."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected graph on ``n`` nodes stored as a dense symmetric adjacency.

    The adjacency array is copied and marked read-only on construction.
    """

    adjacency: np.ndarray

    def __post_init__(self):
        a = np.array(self.adjacency, dtype=float, copy=True)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"adjacency must be square, got shape {a.shape}")
        if a.shape[0] < 1:
            raise ValueError("graph needs at least one node")
        if np.any(np.diag(a) != 0.0):
            raise ValueError("adjacency diagonal must be zero")
        if np.max(np.abs(a - a.T), initial=0.0) > SYMMETRY_TOL:
            raise ValueError("adjacency must be symmetric")
        if np.any(a < 0):
            raise ValueError("edge weights must be nonnegative")
        a.setflags(write=False)
        object.__setattr__(self, "adjacency", a)

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    @property
    def num_edges(self) -> int:
        return int(np.count_nonzero(np.triu(self.adjacency, 1)))


def generate_erdos_renyi(n: int, p: float, seed: int) -> Graph:
    """Sample G(n, p) with unit edge weights.

    Each of the n(n-1)/2 unordered pairs is kept independently with
    probability ``p``. The draw depends only on ``(n, p, seed)``.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"edge probability must lie in [0, 1], got {p}")
    rng = np.random.Generator(np.random.Philox(seed))
    iu = np.triu_indices(n, 1)
    keep = rng.random(iu[0].size) < p
    a = np.zeros((n, n))
    a[iu[0][keep], iu[1][keep]] = 1.0
    a = a + a.T
    return Graph(a)


def laplacian(g: Graph) -> np.ndarray:
    """Combinatorial Laplacian ``D - A``."""
    a = g.adjacency
    return np.diag(a.sum(axis=1)) - a


def load_matrix_market(path) -> Graph:
    """Read a Matrix Market coordinate file into a :class:`Graph`.

    Supports ``real``, ``integer`` and ``pattern`` fields with ``symmetric``
    or ``general`` symmetry. General matrices are symmetrized as
    ``(A + A^T) / 2``; self-loops are dropped and pattern entries get
    weight 1. Indices in the file are 1-based.
    """
    path = Path(path)
    with path.open() as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise MatrixMarketError("empty file", 1)

    header = lines[0].split()
    if len(header) != 5 or header[0].lower() != "%%matrixmarket":
        raise MatrixMarketError("missing %%MatrixMarket header", 1)
    obj, fmt, field, symmetry = (h.lower() for h in header[1:])
    if obj != "matrix" or fmt != "coordinate":
        raise MatrixMarketError(f"unsupported object/format {obj} {fmt}", 1)
    if field not in ("real", "integer", "pattern"):
        raise MatrixMarketError(f"unsupported field {field!r}", 1)
    if symmetry not in ("symmetric", "general"):
        raise MatrixMarketError(f"unsupported symmetry {symmetry!r}", 1)

    lineno = 1
    size = None
    for lineno in range(2, len(lines) + 1):
        text = lines[lineno - 1].strip()
        if text and not text.startswith("%"):
            size = text.split()
            break
    if size is None:
        raise MatrixMarketError("missing size line", lineno)
    try:
        rows, cols, nnz = (int(t) for t in size)
    except ValueError:
        raise MatrixMarketError(f"bad size line {' '.join(size)!r}", lineno) from None
    if rows != cols:
        raise MatrixMarketError(f"matrix is not square ({rows} x {cols})", lineno)
    if rows < 1:
        raise MatrixMarketError("matrix has no rows", lineno)

    a = np.zeros((rows, cols))
    want = 2 if field == "pattern" else 3
    seen = 0
    for num in range(lineno + 1, len(lines) + 1):
        text = lines[num - 1].strip()
        if not text or text.startswith("%"):
            continue
        parts = text.split()
        if len(parts) != want:
            raise MatrixMarketError(f"expected {want} fields, got {len(parts)}", num)
        try:
            i, j = int(parts[0]) - 1, int(parts[1]) - 1
            w = 1.0 if field == "pattern" else float(parts[2])
        except ValueError:
            raise MatrixMarketError(f"cannot parse entry {text!r}", num) from None
        if not (0 <= i < rows and 0 <= j < cols):
            raise MatrixMarketError(f"index ({i + 1}, {j + 1}) out of range", num)
        seen += 1
        if i == j:
            continue
        a[i, j] += w
        if symmetry == "symmetric":
            a[j, i] += w
    if seen != nnz:
        raise MatrixMarketError(f"expected {nnz} entries, found {seen}", len(lines))

    if symmetry == "general":
        a = 0.5 * (a + a.T)
    return Graph(a)


def save_matrix_market(g: Graph, path) -> None:
    """Write the lower triangle of ``g`` in symmetric coordinate format."""
    r, c = np.nonzero(np.tril(g.adjacency, -1))
    with Path(path).open("w") as fh:
        fh.write("%%MatrixMarket matrix coordinate real symmetric\n")
        fh.write(f"{g.n} {g.n} {r.size}\n")
        for i, j in zip(r, c):
            fh.write(f"{i + 1} {j + 1} {float(g.adjacency[i, j])!r}\n")
