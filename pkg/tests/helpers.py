"""Input generators shared across test modules.

These build graphs, trees, and signals for the package to chew on; all
expected values come from oracles.py or frozen constants, never from here.
"""
import numpy as np

from eghwt import Graph, graph_from_edges, relabel_tree
from eghwt.partition import RawTree


def assemble_tree(levels):
    arrays = tuple(tuple(np.asarray(r, dtype=np.int64) for r in lvl)
                   for lvl in levels)
    return relabel_tree(RawTree(arrays))


def split_to_singletons(levels, cut_fn):
    while any(r.size > 1 for r in levels[-1]):
        nxt = []
        for r in levels[-1]:
            if r.size == 1:
                nxt.append(r)
            else:
                cut = cut_fn(r.size)
                nxt.extend([r[:cut], r[cut:]])
        levels.append(nxt)
    return levels


def random_tree(rng, n, permute=False):
    """Arbitrary random hierarchical bipartition; can be very lopsided."""
    order = rng.permutation(n) if permute else np.arange(n)
    levels = split_to_singletons([[order]],
                                 lambda size: int(rng.integers(1, size)))
    return assemble_tree(levels)


def jittered_tree(rng, n, permute=True):
    """Near-balanced random tree; keeps the basis family small enough
    to enumerate even at n=16."""
    order = rng.permutation(n) if permute else np.arange(n)

    def cut(size):
        return max(1, min(size - 1, size // 2 + int(rng.integers(-1, 2))))

    return assemble_tree(split_to_singletons([[order]], cut))


def chain_tree(n):
    """Worst-case imbalance: every split peels off one node."""
    return assemble_tree(split_to_singletons([[np.arange(n)]], lambda s: 1))


def random_connected_graph(rng, n, extra=None):
    """Random spanning tree plus extra edges, weights in [0.5, 2.5)."""
    if n == 1:
        return graph_from_edges(1, [])
    order = rng.permutation(n)
    pairs = set()
    for i in range(1, n):
        j = int(rng.integers(0, i))
        a, b = int(order[i]), int(order[j])
        pairs.add((min(a, b), max(a, b)))
    if extra is None:
        extra = int(rng.integers(0, n))
    for _ in range(extra):
        a, b = rng.integers(0, n, size=2)
        if a != b:
            pairs.add((min(int(a), int(b)), max(int(a), int(b))))
    edges = sorted(pairs)
    weights = 0.5 + 2.0 * rng.random(len(edges))
    return graph_from_edges(n, edges, weights)


def delaunay_grid_graph(seed, side=22, jitter=0.35):
    """Irregular planar graph: jittered grid points, Delaunay edges,
    inverse-distance weights. Node coords are attached to the graph."""
    from scipy.spatial import Delaunay

    rng = np.random.default_rng(seed)
    axis = np.linspace(0.0, 1.0, side)
    xx, yy = np.meshgrid(axis, axis)
    pts = np.column_stack([xx.ravel(), yy.ravel()])
    pts = pts + rng.uniform(-jitter, jitter, pts.shape) / (side - 1)
    pairs = set()
    for simplex in Delaunay(pts).simplices:
        a, b, c = (int(v) for v in simplex)
        for e in ((a, b), (b, c), (a, c)):
            pairs.add((min(e), max(e)))
    edges = sorted(pairs)
    weights = [1.0 / float(np.linalg.norm(pts[a] - pts[b]))
               for a, b in edges]
    return graph_from_edges(len(pts), edges, weights, coords=pts)


def piecewise_smooth_signal(coords):
    """Two narrow bumps plus a large jump across a diagonal line.

    The jump carries most of the energy; adaptive bases that can isolate
    it pull ahead of fixed orderings across the whole error curve.
    """
    x, y = coords[:, 0], coords[:, 1]
    span = max(x.max() - x.min(), 1e-9)
    u = (x - x.min()) / span
    v = (y - y.min()) / max(y.max() - y.min(), 1e-9)
    f = (np.exp(-((u - 0.3) ** 2 + (v - 0.35) ** 2) / 0.01)
         + 0.8 * np.exp(-((u - 0.75) ** 2 + (v - 0.7) ** 2) / 0.008))
    f[u + v > 1.05] += 2.0
    return f
