"""Symmetric eigendecomposition and bandlimited graph Fourier bases.

The default solver is a cyclic Jacobi method with round-robin (parallel)
ordering: every round applies n/2 disjoint plane rotations at once, which
keeps the inner loop in numpy. For large matrices the LAPACK driver
(``numpy.linalg.eigh``) is used instead; both paths share the same sign
and ordering conventions so callers cannot tell them apart.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

SYMMETRY_TOL = 1e-10
OFFDIAG_TOL = 1e-12
MAX_SWEEPS = 100
# Above this size "auto" switches to LAPACK.
JACOBI_MAX_N = 256


class BasisSource(str, Enum):
    ADJACENCY = "adjacency"
    LAPLACIAN = "laplacian"


@dataclass(frozen=True, eq=False)
class SpectralBasis:
    """Full orthonormal eigenbasis; column ``i`` of ``v`` pairs with
    ``eigenvalues[i]``."""

    v: np.ndarray
    eigenvalues: np.ndarray
    source: BasisSource

    @property
    def n(self) -> int:
        return self.v.shape[0]


@dataclass(frozen=True, eq=False)
class BandlimitedBasis:
    """The n x k sub-basis spanning the signal band; ``support`` lists the
    selected column positions in the parent basis."""

    u: np.ndarray
    support: tuple

    @property
    def n(self) -> int:
        return self.u.shape[0]

    @property
    def k(self) -> int:
        return self.u.shape[1]


def _round_robin(m):
    """Yield the m-1 rounds of a round-robin schedule on ``m`` (even) players
    as (p, q) index arrays with p < q."""
    players = list(range(m))
    half = m // 2
    for _ in range(m - 1):
        a = np.array(players[:half])
        b = np.array(players[half:][::-1])
        yield np.minimum(a, b), np.maximum(a, b)
        players = [players[0]] + [players[-1]] + players[1:-1]


def _jacobi(m):
    n = m.shape[0]
    a = np.array(m, dtype=float, copy=True)
    v = np.eye(n)
    if n == 1:
        return np.diag(a).copy(), v
    threshold = OFFDIAG_TOL * np.linalg.norm(a)
    size = n + (n % 2)
    schedule = [(p[q < n], q[q < n]) for p, q in _round_robin(size)]
    off = ~np.eye(n, dtype=bool)

    for _ in range(MAX_SWEEPS):
        if np.max(np.abs(a[off])) <= threshold:
            break
        for p, q in schedule:
            apq = a[p, q]
            active = np.abs(apq) > threshold
            if not np.any(active):
                continue
            p, q, apq = p[active], q[active], apq[active]
            theta = (a[q, q] - a[p, p]) / (2.0 * apq)
            t = np.where(theta >= 0, 1.0, -1.0) / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c

            ap, aq = a[p, :], a[q, :]
            a[p, :] = c[:, None] * ap - s[:, None] * aq
            a[q, :] = s[:, None] * ap + c[:, None] * aq
            ap, aq = a[:, p], a[:, q]
            a[:, p] = ap * c - aq * s
            a[:, q] = ap * s + aq * c
            a[p, q] = 0.0
            a[q, p] = 0.0

            vp, vq = v[:, p], v[:, q]
            v[:, p] = vp * c - vq * s
            v[:, q] = vp * s + vq * c
    else:
        raise RuntimeError(f"Jacobi did not converge in {MAX_SWEEPS} sweeps")
    return np.diag(a).copy(), v


def _canonicalize(w, v, source):
    # Largest-magnitude entry of each eigenvector made positive.
    idx = np.argmax(np.abs(v), axis=0)
    signs = np.where(v[idx, np.arange(v.shape[1])] < 0, -1.0, 1.0)
    v = v * signs

    key = -w if source is BasisSource.ADJACENCY else w
    order = list(np.argsort(key, kind="stable"))
    tol = 1e-10 * (1.0 + np.max(np.abs(w)))
    # Runs of (numerically) equal eigenvalues are ordered by eigenvector.
    out = []
    i = 0
    while i < len(order):
        j = i + 1
        while j < len(order) and key[order[j]] - key[order[j - 1]] <= tol:
            j += 1
        group = order[i:j]
        if len(group) > 1:
            group = sorted(group, key=lambda col: tuple(v[:, col]))
        out.extend(group)
        i = j
    out = np.array(out)
    return w[out], v[:, out]


def eig_symmetric(m, source=BasisSource.ADJACENCY, method="auto") -> SpectralBasis:
    """Eigendecomposition ``m = V diag(w) V^T`` of a real symmetric matrix.

    Parameters
    ----------
    m : (n, n) array_like
        Symmetric matrix (checked to ``1e-10``).
    source : BasisSource or str
        ``adjacency`` sorts eigenvalues descending, ``laplacian`` ascending.
    method : {"auto", "jacobi", "lapack"}
        ``auto`` uses Jacobi up to n = 256 and LAPACK beyond.
    """
    m = np.asarray(m, dtype=float)
    source = BasisSource(source)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"matrix must be square, got shape {m.shape}")
    if np.max(np.abs(m - m.T), initial=0.0) > SYMMETRY_TOL:
        raise ValueError("matrix is not symmetric")
    if method == "auto":
        method = "jacobi" if m.shape[0] <= JACOBI_MAX_N else "lapack"
    if method == "jacobi":
        w, v = _jacobi(0.5 * (m + m.T))
    elif method == "lapack":
        w, v = np.linalg.eigh(0.5 * (m + m.T))
    else:
        raise ValueError(f"unknown method {method!r}")
    w, v = _canonicalize(w, v, source)
    v.setflags(write=False)
    w.setflags(write=False)
    return SpectralBasis(v=v, eigenvalues=w, source=source)


def bandlimit(basis: SpectralBasis, k: int) -> BandlimitedBasis:
    """Keep the first ``k`` basis vectors in the source's sort order."""
    if not 1 <= k <= basis.n:
        raise ValueError(f"bandwidth k must lie in [1, {basis.n}], got {k}")
    u = np.ascontiguousarray(basis.v[:, :k])
    u.setflags(write=False)
    return BandlimitedBasis(u=u, support=tuple(range(k)))


def graph_basis(g, k, source=BasisSource.ADJACENCY, method="auto") -> BandlimitedBasis:
    """Bandlimited basis of a graph's adjacency or Laplacian."""
    from .graph import laplacian

    source = BasisSource(source)
    m = g.adjacency if source is BasisSource.ADJACENCY else laplacian(g)
    return bandlimit(eig_symmetric(m, source, method), k)
