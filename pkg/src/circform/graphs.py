"""Undirected interaction graphs and their Laplacian spectra.

The Laplacian convention is degree-on-diagonal, -1 per edge: for a graph
with neighbor sets N_j,

    l_jj = |N_j|,   l_jk = -1 if k in N_j else 0.

Such a matrix is symmetric positive semidefinite, its row sums vanish, and
the zero eigenvalue is simple exactly when the graph is connected.

Circulant graphs (every row of the Laplacian is the right-rotation of the
previous one) get a closed-form eigendecomposition: with phi_k = (k-1)*2*pi/N
the vectors f^(l), entries e^(i*(l-1)*phi_k), are eigenvectors with eigenvalue

    lambda_l = sum_j c_j * e^(i*(l-1)*(j-1)*2*pi/N)

where (c_1, ..., c_N) is the first Laplacian row.  The eigenvalues are real
because the row is symmetric (c_j = c_{N+2-j}).
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

# Eigenvalues of these small integer Laplacians are well separated; anything
# below this is treated as the structural zero eigenvalue.
ZERO_EIGENVALUE_TOL = 1e-9


@dataclass(frozen=True)
class InteractionGraph:
    """Immutable undirected graph with its Laplacian and spectral summary.

    Attributes
    ----------
    n : number of vertices
    adjacency : (n, n) float array, 1.0 per edge, zero diagonal
    laplacian : (n, n) float array, integer-valued
    is_connected : single zero Laplacian eigenvalue (checked by search)
    is_circulant : every Laplacian row is the rotation of the previous one
    lambda_max : largest Laplacian eigenvalue
    """

    n: int
    adjacency: np.ndarray
    laplacian: np.ndarray
    is_connected: bool
    is_circulant: bool
    lambda_max: float

    def degree(self, k: int) -> int:
        return int(self.laplacian[k, k])

    def neighbors(self, k: int) -> np.ndarray:
        """0-based indices of the vertices adjacent to vertex k."""
        return np.flatnonzero(self.adjacency[k])


@dataclass(frozen=True)
class CirculantSpectrum:
    """Closed-form eigendecomposition of a circulant Laplacian.

    ``vectors[:, l]`` is the unnormalized eigenvector with entries
    e^(i*l*phi_k) (norm sqrt(n)); ``eigenvalues[l]`` is its eigenvalue.
    ``angles`` holds phi_k = k*2*pi/n for k = 0..n-1.
    """

    angles: np.ndarray
    eigenvalues: np.ndarray
    vectors: np.ndarray
    lambda_max: float


def _bfs_connected(adjacency: np.ndarray) -> bool:
    n = adjacency.shape[0]
    seen = np.zeros(n, dtype=bool)
    seen[0] = True
    queue = deque([0])
    while queue:
        j = queue.popleft()
        for k in np.flatnonzero(adjacency[j]):
            if not seen[k]:
                seen[k] = True
                queue.append(int(k))
    return bool(seen.all())


def _rows_are_rotations(laplacian: np.ndarray) -> bool:
    # Exact comparison is safe: entries are integer-valued by construction.
    for j in range(1, laplacian.shape[0]):
        if not np.array_equal(laplacian[j], np.roll(laplacian[j - 1], 1)):
            return False
    return True


def _closed_form_eigenvalues(first_row: np.ndarray) -> np.ndarray:
    n = first_row.shape[0]
    l = np.arange(n)
    phases = np.exp(2j * np.pi * np.outer(l, l) / n)
    eigenvalues = phases @ first_row
    # Imaginary parts vanish by row symmetry; keep the real part only.
    return np.real(eigenvalues)


def _finish(adjacency: np.ndarray) -> InteractionGraph:
    n = adjacency.shape[0]
    degrees = adjacency.sum(axis=1)
    laplacian = np.diag(degrees) - adjacency
    connected = _bfs_connected(adjacency)
    circulant = _rows_are_rotations(laplacian)
    if circulant:
        lam_max = float(np.max(_closed_form_eigenvalues(laplacian[0])))
    else:
        lam_max = float(np.linalg.eigvalsh(laplacian)[-1])
    adjacency.setflags(write=False)
    laplacian.setflags(write=False)
    return InteractionGraph(
        n=n,
        adjacency=adjacency,
        laplacian=laplacian,
        is_connected=connected,
        is_circulant=circulant,
        lambda_max=max(lam_max, 0.0),
    )


def from_edges(n: int, edges) -> InteractionGraph:
    """Build a graph from undirected edges with 1-based vertex labels.

    Labels are 1-based to match the scenario file notation.  Self loops and
    out-of-range labels are rejected; duplicate edges collapse to one.
    """
    if n < 1:
        raise ValueError(f"vertex count must be >= 1, got {n}")
    adjacency = np.zeros((n, n))
    for edge in edges:
        j, k = edge
        if not (1 <= j <= n and 1 <= k <= n):
            raise ValueError(f"edge {edge!r} outside vertex range 1..{n}")
        if j == k:
            raise ValueError(f"self loop {edge!r} not allowed")
        adjacency[j - 1, k - 1] = 1.0
        adjacency[k - 1, j - 1] = 1.0
    return _finish(adjacency)


def from_circulant_row(row) -> InteractionGraph:
    """Build a circulant graph from the first row of its Laplacian.

    The row must be integer-valued with off-diagonal entries in {0, -1},
    symmetric (c_j = c_{N+2-j} in 1-based terms), and have a leading entry
    equal to the number of -1 entries so that the row sums to zero.
    """
    row = np.asarray(row, dtype=float)
    if row.ndim != 1 or row.shape[0] < 1:
        raise ValueError("circulant row must be a non-empty 1-d sequence")
    if not np.array_equal(row, np.round(row)):
        raise ValueError("circulant row entries must be integers")
    n = row.shape[0]
    off = row[1:]
    if not np.all(np.isin(off, (0.0, -1.0))):
        raise ValueError(
            f"off-diagonal circulant entries must be 0 or -1, got {row.tolist()}"
        )
    if not np.array_equal(off, off[::-1]):
        raise ValueError(
            f"circulant row must be symmetric, got {row.tolist()}"
        )
    degree = int(np.count_nonzero(off == -1.0))
    if int(row[0]) != degree:
        raise ValueError(
            f"leading entry {int(row[0])} does not match degree {degree}; "
            "the row must sum to zero"
        )
    adjacency = np.zeros((n, n))
    for shift in np.flatnonzero(off == -1.0) + 1:
        for j in range(n):
            adjacency[j, (j + shift) % n] = 1.0
    return _finish(adjacency)


def complete_graph(n: int) -> InteractionGraph:
    """All-to-all graph on n vertices; Laplacian n*I - ones."""
    if n < 1:
        raise ValueError(f"vertex count must be >= 1, got {n}")
    adjacency = np.ones((n, n)) - np.eye(n)
    return _finish(adjacency)


def block_diagonal(blocks) -> InteractionGraph:
    """Disjoint union of graphs; the Laplacian is block-diagonal.

    Connectivity and circulant structure are re-detected on the assembled
    matrix rather than inferred from the blocks.
    """
    blocks = list(blocks)
    if not blocks:
        raise ValueError("at least one block required")
    n = sum(b.n for b in blocks)
    adjacency = np.zeros((n, n))
    offset = 0
    for b in blocks:
        adjacency[offset:offset + b.n, offset:offset + b.n] = b.adjacency
        offset += b.n
    return _finish(adjacency)


def induced_subgraph(g: InteractionGraph, vertices) -> InteractionGraph:
    """Subgraph on the given 0-based vertex indices, in the given order."""
    idx = np.asarray(vertices, dtype=int)
    if idx.ndim != 1 or idx.shape[0] < 1:
        raise ValueError("vertex selection must be a non-empty 1-d sequence")
    if len(set(idx.tolist())) != idx.shape[0]:
        raise ValueError("vertex selection contains duplicates")
    if idx.min() < 0 or idx.max() >= g.n:
        raise ValueError(f"vertex selection outside 0..{g.n - 1}")
    adjacency = g.adjacency[np.ix_(idx, idx)].copy()
    return _finish(adjacency)


def circulant_spectrum(g: InteractionGraph) -> CirculantSpectrum:
    """Closed-form spectrum of a circulant graph.

    Raises ValueError for non-circulant graphs; use
    ``laplacian_eigenvalues`` (dense solver) for those.
    """
    if not g.is_circulant:
        raise ValueError(
            "graph is not circulant; use laplacian_eigenvalues for the "
            "dense eigensolve"
        )
    n = g.n
    angles = np.arange(n) * (2.0 * np.pi / n)
    l = np.arange(n)
    vectors = np.exp(1j * np.outer(angles, l))
    eigenvalues = _closed_form_eigenvalues(g.laplacian[0])
    return CirculantSpectrum(
        angles=angles,
        eigenvalues=eigenvalues,
        vectors=vectors,
        lambda_max=float(np.max(eigenvalues)),
    )


def laplacian_eigenvalues(g: InteractionGraph) -> np.ndarray:
    """Ascending Laplacian eigenvalues from the dense symmetric solver."""
    return np.linalg.eigvalsh(g.laplacian)


def lambda_max(g: InteractionGraph) -> float:
    """Largest Laplacian eigenvalue (closed form when circulant)."""
    return g.lambda_max


def zero_eigenvalue_multiplicity(g: InteractionGraph) -> int:
    """Number of eigenvalues below the zero threshold; 1 iff connected."""
    values = laplacian_eigenvalues(g)
    return int(np.count_nonzero(np.abs(values) <= ZERO_EIGENVALUE_TOL))
