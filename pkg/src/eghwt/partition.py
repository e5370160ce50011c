"""Hierarchical bipartition trees over graph nodes.

A tree has levels j = 0..jmax. Level 0 is the whole node set in input order;
each level refines the previous one by splitting regions of size >= 2 into
two and carrying singletons down unchanged; level jmax is all singletons.
Regions are stored *relabeled*: the region with index k at level j has
children 2k (always, for carried regions too) and 2k+1 (only when the region
actually splits) at level j+1, so missing indices mark slots that never
materialized. Sorting the present indices at any level recovers the
unrelabeled left-to-right order.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import MalformedTree, NotConnected
from .graph import Graph, bipartition_by_fiedler, connected_component_split

# Child-size ratio beyond which validate_tree emits a balance warning.
BALANCE_WARNING_RATIO = 10.0


class BalanceWarning(UserWarning):
    """A split is heavily lopsided (quality, not validity)."""


@dataclass(frozen=True)
class RawTree:
    """Unrelabeled partition levels: levels[j] is the left-to-right list of
    region node arrays at level j."""

    levels: tuple

    @property
    def jmax(self) -> int:
        return len(self.levels) - 1


class PartitionTree:
    """Relabeled hierarchical bipartition of n nodes.

    `regions[j]` maps the relabeled region index k to its node array; node
    arrays preserve the parent's relative node order. Present indices at
    level j, in sorted order, correspond to left-to-right region order.
    """

    def __init__(self, regions: list[dict[int, np.ndarray]]):
        self.regions = [dict(sorted(level.items())) for level in regions]
        self.jmax = len(self.regions) - 1
        root = self.regions[0]
        if list(root.keys()) != [0]:
            raise MalformedTree("level 0 must be the single region k=0")
        self.n = len(root[0])
        # rank of each present index within its level (raw region order)
        self._rank = [
            {k: r for r, k in enumerate(level)} for level in self.regions
        ]

    def level_keys(self, j: int) -> list[int]:
        """Present region indices at level j, in raw (sorted) order."""
        return list(self.regions[j].keys())

    def has_region(self, j: int, k: int) -> bool:
        return 0 <= j <= self.jmax and k in self.regions[j]

    def region(self, j: int, k: int) -> np.ndarray:
        return self.regions[j][k]

    def region_rank(self, j: int, k: int) -> int:
        """Position of region (j, k) in the raw left-to-right order."""
        return self._rank[j][k]

    def children(self, j: int, k: int) -> tuple[int, ...]:
        """Present child indices of region (j, k) at level j+1."""
        if j >= self.jmax:
            return ()
        out = tuple(c for c in (2 * k, 2 * k + 1) if c in self.regions[j + 1])
        return out

    def leaf_order(self) -> np.ndarray:
        """Node index at each leaf slot, left to right."""
        return np.array([v[0] for v in self.regions[self.jmax].values()],
                        dtype=np.int64)

    def to_json_dict(self) -> dict:
        return {
            "jmax": self.jmax,
            "n": self.n,
            "levels": [
                [{"k": int(k), "nodes": [int(x) for x in v]}
                 for k, v in level.items()]
                for level in self.regions
            ],
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "PartitionTree":
        regions = [
            {entry["k"]: np.asarray(entry["nodes"], dtype=np.int64)
             for entry in level}
            for level in d["levels"]
        ]
        tree = cls(regions)
        if tree.jmax != d["jmax"]:
            raise MalformedTree("jmax field disagrees with level count")
        return tree

    def __eq__(self, other) -> bool:
        if not isinstance(other, PartitionTree):
            return NotImplemented
        if self.jmax != other.jmax or self.n != other.n:
            return False
        for a, b in zip(self.regions, other.regions):
            if a.keys() != b.keys():
                return False
            if any(not np.array_equal(a[k], b[k]) for k in a):
                return False
        return True

    def __repr__(self) -> str:
        return f"PartitionTree(n={self.n}, jmax={self.jmax})"


def _is_partition(a: np.ndarray, b: np.ndarray, parent: np.ndarray) -> bool:
    """True when a and b split the parent's nodes between them.

    Membership is what matters; the two sides may interleave in the
    parent's order (spectral splits usually do).
    """
    if len(a) + len(b) != len(parent):
        return False
    return np.array_equal(np.sort(np.concatenate([a, b])), np.sort(parent))


def relabel_tree(raw: "RawTree | PartitionTree") -> PartitionTree:
    """Assign the 2k / 2k+1 child indexing to an unrelabeled tree.

    Children of the region with (relabeled) index k get indices 2k and
    2k+1; a carried singleton's only child gets 2k. Idempotent: an already
    relabeled PartitionTree is returned as-is. Raises MalformedTree when the
    child rows cannot be matched to their parents.
    """
    if isinstance(raw, PartitionTree):
        return raw
    levels = raw.levels
    if not levels:
        raise MalformedTree("empty tree")
    out: list[dict[int, np.ndarray]] = [
        {0: np.asarray(levels[0][0], dtype=np.int64)}
    ]
    if len(levels[0]) != 1:
        raise MalformedTree("level 0 must contain exactly one region")
    for j in range(1, len(levels)):
        prev = out[j - 1]
        row = [np.asarray(r, dtype=np.int64) for r in levels[j]]
        cur: dict[int, np.ndarray] = {}
        pos = 0
        for k, parent in prev.items():  # sorted == raw order
            if len(parent) == 1:
                if pos >= len(row) or not np.array_equal(row[pos], parent):
                    raise MalformedTree(
                        f"level {j}: carried region mismatch under k={k}")
                cur[2 * k] = row[pos]
                pos += 1
            else:
                if pos + 1 >= len(row):
                    raise MalformedTree(
                        f"level {j}: missing children under k={k}")
                a, b = row[pos], row[pos + 1]
                if not _is_partition(a, b, parent):
                    raise MalformedTree(
                        f"level {j}: children do not partition parent k={k}")
                if len(a) == 0 or len(b) == 0:
                    raise MalformedTree(f"level {j}: empty child under k={k}")
                cur[2 * k] = a
                cur[2 * k + 1] = b
                pos += 2
        if pos != len(row):
            raise MalformedTree(f"level {j}: {len(row) - pos} orphan regions")
        out.append(cur)
    tree = PartitionTree(out)
    if any(len(v) != 1 for v in tree.regions[tree.jmax].values()):
        raise MalformedTree("bottom level must be all singletons")
    return tree


def validate_tree(tree: PartitionTree, g: "Graph | int") -> list[str]:
    """Check the structural rules; return a list of violation strings.

    Checks: level-0 root covers all n nodes exactly once; every level is a
    disjoint cover of the node set; every region's nodes are split between
    its two children (or equal to its single carried child); the bottom
    level is all singletons. Split balance is only a quality concern: a
    lopsided split (child-size ratio above BALANCE_WARNING_RATIO) emits a
    BalanceWarning with the worst ratio, not a violation.
    """
    n = g.n if isinstance(g, Graph) else int(g)
    violations: list[str] = []
    root = tree.regions[0].get(0)
    if root is None or sorted(root.tolist()) != list(range(n)):
        violations.append("[RootViolation at j=0]")
    for j, level in enumerate(tree.regions):
        seen = np.concatenate([v for v in level.values()]) if level else \
            np.empty(0, dtype=np.int64)
        if len(np.unique(seen)) != len(seen):
            violations.append(f"[DisjointnessViolation at j={j}]")
        elif len(seen) != n:
            violations.append(f"[CoverageViolation at j={j}]")
    worst_ratio = 1.0
    for j in range(tree.jmax):
        for k, parent in tree.regions[j].items():
            kids = [tree.regions[j + 1][c]
                    for c in (2 * k, 2 * k + 1) if c in tree.regions[j + 1]]
            if len(parent) == 1:
                if len(kids) != 1 or not np.array_equal(kids[0], parent):
                    violations.append(
                        f"[ChildStructureViolation at j={j}, k={k}]")
            else:
                if len(kids) != 2 or not _is_partition(kids[0], kids[1],
                                                       parent):
                    violations.append(
                        f"[ChildStructureViolation at j={j}, k={k}]")
                else:
                    a, b = len(kids[0]), len(kids[1])
                    worst_ratio = max(worst_ratio, a / b, b / a)
    if any(len(v) != 1 for v in tree.regions[tree.jmax].values()):
        violations.append("[LeafSizeViolation]")
    if worst_ratio > BALANCE_WARNING_RATIO:
        warnings.warn(
            f"lopsided split: max child-size ratio {worst_ratio:.1f}",
            BalanceWarning, stacklevel=2)
    return violations


def _assemble(n: int, split) -> PartitionTree:
    """Drive a splitter over index ranges until all regions are singletons.

    `split(region) -> (left, right)` splits one region of size >= 2. Builds
    the raw level list (carrying singletons) and relabels it.
    """
    if n < 1:
        raise ValueError("need at least one node")
    levels = [[np.arange(n, dtype=np.int64)]]
    while any(len(r) > 1 for r in levels[-1]):
        nxt: list[np.ndarray] = []
        for region in levels[-1]:
            if len(region) == 1:
                nxt.append(region)
            else:
                a, b = split(region)
                nxt.append(np.asarray(a, dtype=np.int64))
                nxt.append(np.asarray(b, dtype=np.int64))
        levels.append(nxt)
    return relabel_tree(RawTree(tuple(tuple(lv) for lv in levels)))


def build_partition_tree_spectral(g: Graph) -> PartitionTree:
    """Recursive spectral bisection tree (random-walk Fiedler vectors).

    The input graph must be connected; a subgraph that falls apart during
    recursion is split into (largest component, rest) instead of spectrally.
    """
    if g.n > 1 and not g.is_connected():
        raise NotConnected("graph is disconnected")

    def split(region: np.ndarray):
        try:
            return bipartition_by_fiedler(g, region)
        except NotConnected:
            return connected_component_split(g, region)

    return _assemble(g.n, split)


def build_partition_tree_midpoint(n: int) -> PartitionTree:
    """Dyadic midpoint tree on path-ordered indices 0..n-1.

    Regions are contiguous ranges; a range of size m splits after its
    ceil(m/2)-th node.
    """

    def split(region: np.ndarray):
        half = (len(region) + 1) // 2
        return region[:half], region[half:]

    return _assemble(int(n), split)


def _tv_prefix(img: np.ndarray):
    """Per-row internal variation and between-row variation, prefix-summed.

    For a row range [a, b): TV = sum of within-row variation of rows a..b-1
    plus variation across adjacent row pairs fully inside the range.
    """
    within = np.abs(np.diff(img, axis=1)).sum(axis=1)
    between = np.abs(np.diff(img, axis=0)).sum(axis=1)
    cw = np.concatenate([[0.0], np.cumsum(within)])
    cb = np.concatenate([[0.0], np.cumsum(between)])
    return cw, cb


def _range_tv(cw, cb, a: int, b: int) -> float:
    tv = cw[b] - cw[a]
    if b - a >= 2:
        tv += cb[b - 1] - cb[a]
    return tv


def _best_cut(cw, cb, a: int, b: int, ncols: int, p: float) -> int:
    """Cut position c in (a, b) minimizing TV1/|I1|^p + TV2/|I2|^p.

    |I| is the pixel count of the part. Ties go to the most balanced cut,
    then to the left-heavy one (so constant regions reproduce the midpoint
    split), then leftmost.
    """
    best = None
    for c in range(a + 1, b):
        cost = (_range_tv(cw, cb, a, c) / ((c - a) * ncols) ** p
                + _range_tv(cw, cb, c, b) / ((b - c) * ncols) ** p)
        key = (cost, abs((c - a) - (b - c)), -(c - a))
        if best is None or key < best[0]:
            best = (key, c)
    return best[1]


def build_partition_tree_ptv(img: np.ndarray, axis: str = "rows",
                             p: float = 3.0) -> PartitionTree:
    """Penalized-total-variation tree over the rows (or columns) of an image.

    Each region is a contiguous run of rows (columns for axis="columns");
    every split exhaustively scans cut positions for the minimizer of
    TV(I1)/|I1|^p + TV(I2)/|I2|^p, where TV counts only variation internal
    to a part (the cut seam contributes to neither side).
    """
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2:
        raise ValueError("PTV tree needs a 2D image")
    if axis == "columns":
        img = img.T
    elif axis != "rows":
        raise ValueError("axis must be 'rows' or 'columns'")
    cw, cb = _tv_prefix(img)
    ncols = img.shape[1]

    def split(region: np.ndarray):
        a, b = int(region[0]), int(region[-1]) + 1
        c = _best_cut(cw, cb, a, b, ncols, p)
        return region[: c - a], region[c - a:]

    return _assemble(img.shape[0], split)
