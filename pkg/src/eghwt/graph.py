"""Weighted undirected graphs, Laplacians, and spectral bisection.

A graph signal is a plain 1D numpy array aligned with node order; no wrapper
type is used. All matrices are scipy sparse CSR unless stated otherwise.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.csgraph as csgraph
import scipy.sparse.linalg as spla

from .errors import ConvergenceFailure, NotConnected, ZeroDegreeNode

# Dense eigensolves below this size; iterative (shift-invert Lanczos) above.
DENSE_EIGEN_THRESHOLD = 128
# Hard ceiling for the dense fallback when the iterative solver fails.
_DENSE_FALLBACK_LIMIT = 4096
# Entries at or below this fraction of max|phi| count as zero for the sign
# convention and for the nonnegative side of a bipartition.
_ZERO_SNAP_REL = 1e-10


class LaplacianKind(enum.Enum):
    UNNORMALIZED = "unnormalized"
    RANDOM_WALK = "random_walk"
    SYMMETRIC = "symmetric"


@dataclass(frozen=True)
class Graph:
    """Finite weighted undirected graph without self-loops.

    `weights` is symmetric, nonnegative, zero-diagonal, CSR. `coords` is an
    optional (n, d) array of node positions, carried as metadata only.
    """

    weights: sp.csr_matrix
    coords: np.ndarray | None = field(default=None)

    def __post_init__(self):
        W = sp.csr_matrix(self.weights, dtype=np.float64, copy=True)
        if W.shape[0] != W.shape[1]:
            raise ValueError(f"weight matrix must be square, got {W.shape}")
        W.eliminate_zeros()
        if (W != W.T).nnz != 0:
            raise ValueError("weight matrix must be symmetric")
        if W.shape[0] and np.any(W.diagonal() != 0.0):
            raise ValueError("weight matrix must have a zero diagonal")
        if W.nnz and W.data.min() < 0.0:
            raise ValueError("edge weights must be nonnegative")
        object.__setattr__(self, "weights", W)
        if self.coords is not None:
            coords = np.atleast_2d(np.asarray(self.coords, dtype=np.float64))
            if coords.shape[0] != W.shape[0]:
                raise ValueError("coords must have one row per node")
            object.__setattr__(self, "coords", coords)

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    def is_connected(self) -> bool:
        if self.n <= 1:
            return True
        ncomp = csgraph.connected_components(self.weights, directed=False,
                                             return_labels=False)
        return ncomp == 1


def path_graph(n: int, weight: float = 1.0) -> Graph:
    """Unweighted path on n nodes (node i adjacent to i+1)."""
    if n < 1:
        raise ValueError("need at least one node")
    if n == 1:
        return Graph(sp.csr_matrix((1, 1)))
    i = np.arange(n - 1)
    W = sp.coo_matrix((np.full(n - 1, weight), (i, i + 1)), shape=(n, n))
    return Graph((W + W.T).tocsr())


def graph_from_edges(n: int, edges, weights=None,
                     coords: np.ndarray | None = None) -> Graph:
    """Build a Graph from an iterable of (src, dst) node pairs."""
    edges = list(edges)
    if weights is None:
        weights = np.ones(len(edges))
    src = np.array([e[0] for e in edges], dtype=np.int64)
    dst = np.array([e[1] for e in edges], dtype=np.int64)
    w = np.asarray(weights, dtype=np.float64)
    W = sp.coo_matrix((np.concatenate([w, w]),
                       (np.concatenate([src, dst]),
                        np.concatenate([dst, src]))), shape=(n, n))
    return Graph(W.tocsr(), coords=coords)


def degree_vector(g: Graph) -> np.ndarray:
    """Weighted degrees d_i = sum_j w_ij as a length-n array."""
    return np.asarray(g.weights.sum(axis=1)).ravel()


def laplacian(g: Graph, kind: LaplacianKind = LaplacianKind.UNNORMALIZED):
    """Graph Laplacian of the requested kind, as sparse CSR.

    UNNORMALIZED: L = D - W. RANDOM_WALK: D^-1 L. SYMMETRIC:
    D^-1/2 L D^-1/2. The normalized kinds require strictly positive degrees.
    """
    d = degree_vector(g)
    L = sp.diags(d) - g.weights
    if kind is LaplacianKind.UNNORMALIZED:
        return L.tocsr()
    if np.any(d == 0.0):
        bad = int(np.flatnonzero(d == 0.0)[0])
        raise ZeroDegreeNode(f"node {bad} has degree zero; normalized "
                             "Laplacian undefined")
    if kind is LaplacianKind.RANDOM_WALK:
        return (sp.diags(1.0 / d) @ L).tocsr()
    if kind is LaplacianKind.SYMMETRIC:
        s = 1.0 / np.sqrt(d)
        return (sp.diags(s) @ L @ sp.diags(s)).tocsr()
    raise ValueError(f"unknown Laplacian kind {kind!r}")


def _snap_zeros(phi: np.ndarray) -> np.ndarray:
    """Flush entries that are zero up to solver jitter to exact +0.0."""
    scale = np.abs(phi).max()
    if scale == 0.0:
        return phi
    out = phi.copy()
    out[np.abs(out) <= _ZERO_SNAP_REL * scale] = 0.0
    return out


def _fix_sign(phi: np.ndarray) -> np.ndarray:
    """Flip so the first nonzero entry (lowest node index) is positive."""
    nz = np.flatnonzero(phi)
    if nz.size and phi[nz[0]] < 0.0:
        return -phi
    return phi


def _second_smallest_dense(M: np.ndarray) -> tuple[float, np.ndarray]:
    vals, vecs = scipy.linalg.eigh(M)
    return float(vals[1]), vecs[:, 1]


def _second_smallest_iterative(M: sp.csr_matrix, tol: float,
                               maxiter: int) -> tuple[float, np.ndarray]:
    # Shift-invert at a small negative sigma: M - sigma*I stays positive
    # definite for PSD M, and the two eigenvalues nearest sigma are 0 and
    # the one we want. Fixed start vector keeps repeated runs identical.
    n = M.shape[0]
    v0 = np.cos(np.arange(1, n + 1, dtype=np.float64))
    vals, vecs = spla.eigsh(M.tocsc(), k=2, sigma=-0.05, which="LM",
                            tol=tol, maxiter=maxiter, v0=v0)
    order = np.argsort(vals)
    return float(vals[order[1]]), vecs[:, order[1]]


def fiedler_vector(g: Graph, kind: LaplacianKind = LaplacianKind.RANDOM_WALK,
                   tol: float = 1e-8, maxiter: int | None = None,
                   dense_threshold: int = DENSE_EIGEN_THRESHOLD,
                   ) -> tuple[float, np.ndarray]:
    """Second-smallest eigenpair (lambda_1, phi_1) of the chosen Laplacian.

    The graph must be connected and have at least 2 nodes. The vector is
    unit 2-norm with its first nonzero entry positive; the RANDOM_WALK pair
    is recovered from the SYMMETRIC form via the degree similarity. Raises
    ConvergenceFailure if the residual ||M phi - lambda phi|| exceeds
    tol * ||M||_inf after the dense fallback is exhausted.
    """
    n = g.n
    if n < 2:
        raise ValueError("Fiedler vector needs at least 2 nodes")
    if not g.is_connected():
        raise NotConnected("graph is disconnected")
    if maxiter is None:
        maxiter = 10 * n

    if kind is LaplacianKind.UNNORMALIZED:
        M = laplacian(g, LaplacianKind.UNNORMALIZED)
    else:
        M = laplacian(g, LaplacianKind.SYMMETRIC)

    if n <= dense_threshold:
        lam, v = _second_smallest_dense(M.toarray())
    else:
        try:
            lam, v = _second_smallest_iterative(M, tol, maxiter)
        except Exception:
            lam, v = None, None
        if v is not None:
            resid = np.linalg.norm(M @ v - lam * v)
            scale = spla.norm(M, np.inf)
            if resid > tol * max(scale, 1.0):
                v = None
        if v is None:
            if n <= _DENSE_FALLBACK_LIMIT:
                lam, v = _second_smallest_dense(M.toarray())
            else:
                raise ConvergenceFailure(
                    f"eigensolver failed residual bound at n={n}")

    if kind is LaplacianKind.RANDOM_WALK:
        d = degree_vector(g)
        v = v / np.sqrt(d)
    v = v / np.linalg.norm(v)
    v = _fix_sign(_snap_zeros(v))
    return lam, v


def induced_subgraph(g: Graph, nodes: np.ndarray) -> Graph:
    """Subgraph on the given nodes, preserving their relative order."""
    nodes = np.asarray(nodes, dtype=np.int64)
    W = g.weights[nodes][:, nodes]
    coords = g.coords[nodes] if g.coords is not None else None
    return Graph(W.tocsr(), coords=coords)


def bipartition_by_fiedler(g: Graph, region: np.ndarray,
                           kind: LaplacianKind = LaplacianKind.RANDOM_WALK,
                           ) -> tuple[np.ndarray, np.ndarray]:
    """Split a region (>= 2 nodes) into (V1, V2) by Fiedler vector sign.

    V1 collects nodes with nonnegative entries (zeros included); if either
    side would be empty, the single node with smallest |entry| is moved
    across. Node order within each side follows the region's order. Raises
    NotConnected if the induced subgraph is disconnected.
    """
    region = np.asarray(region, dtype=np.int64)
    if region.size < 2:
        raise ValueError("bipartition needs at least 2 nodes")
    sub = induced_subgraph(g, region)
    if not sub.is_connected():
        raise NotConnected("induced subgraph is disconnected")
    _, phi = fiedler_vector(sub, kind=kind)
    mask = phi >= 0.0
    if mask.all() or not mask.any():
        # Degenerate one-sided vector: move the weakest entry across.
        j = int(np.argmin(np.abs(phi)))
        mask[j] = not mask[j]
    return region[mask], region[~mask]


def connected_component_split(g: Graph, region: np.ndarray,
                              ) -> tuple[np.ndarray, np.ndarray]:
    """Split a disconnected region into (largest component, the rest)."""
    region = np.asarray(region, dtype=np.int64)
    sub = induced_subgraph(g, region)
    ncomp, labels = csgraph.connected_components(sub.weights, directed=False)
    if ncomp < 2:
        raise ValueError("region is connected; nothing to split")
    sizes = np.bincount(labels, minlength=ncomp)
    big = int(np.argmax(sizes))
    mask = labels == big
    return region[mask], region[~mask]
