"""Overcomplete multiscale dictionary on a hierarchical partition tree.

Every coefficient is addressed by a key (j, k, l): level j in [0, jmax],
relabeled region index k, and tag l in [0, 2**(jmax-j)). Tag 0 is the
scaling coefficient of the region, tag 1 the normalized two-child
difference, and higher tags are built from equal-tag child pairs by
sum/difference steps (a lone child passes its tag-l coefficient up as tag
2l unchanged). Each level's coefficients form an orthonormal expansion of
the signal, and the whole table stacks jmax+1 such expansions.

Internally each level is a dense length-n vector in canonical slot order:
regions in left-to-right order, tags ascending inside a region. Level
transforms and their adjoints are precomputed index/coefficient arrays, so
analysis and synthesis are O(n) per level and vectorize over columns.
"""

from __future__ import annotations

import math
from collections.abc import Mapping
from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np

from .errors import FictitiousKey
from .partition import PartitionTree

TagKey = tuple[int, int, int]

_SQRT_HALF = 1.0 / math.sqrt(2.0)


@dataclass(frozen=True)
class _LevelPlan:
    """Index plans for one analysis step (level j+1 -> level j) and its
    adjoint. Pair ops: out[dst] = ca*src[a] + cb*src[b]; copy ops:
    out[dst] = src[src_ix]."""

    pair_dst: np.ndarray
    pair_a: np.ndarray
    pair_b: np.ndarray
    pair_ca: np.ndarray
    pair_cb: np.ndarray
    copy_dst: np.ndarray
    copy_src: np.ndarray
    syn_pair_dst: np.ndarray
    syn_pair_a: np.ndarray
    syn_pair_b: np.ndarray
    syn_pair_ca: np.ndarray
    syn_pair_cb: np.ndarray
    syn_copy_dst: np.ndarray
    syn_copy_src: np.ndarray

    def forward(self, src: np.ndarray) -> np.ndarray:
        out = np.empty_like(src)
        ca, cb = self.pair_ca, self.pair_cb
        if src.ndim == 2:
            ca, cb = ca[:, None], cb[:, None]
        out[self.pair_dst] = ca * src[self.pair_a] + cb * src[self.pair_b]
        out[self.copy_dst] = src[self.copy_src]
        return out

    def adjoint(self, src: np.ndarray) -> np.ndarray:
        out = np.empty_like(src)
        ca, cb = self.syn_pair_ca, self.syn_pair_cb
        if src.ndim == 2:
            ca, cb = ca[:, None], cb[:, None]
        out[self.syn_pair_dst] = (ca * src[self.syn_pair_a]
                                  + cb * src[self.syn_pair_b])
        out[self.syn_copy_dst] = src[self.syn_copy_src]
        return out


class _Layout:
    """Slot layout of the dictionary for one tree: per-level key arrays,
    key -> slot maps, region slices, tag lists, and level transform plans."""

    def __init__(self, tree: PartitionTree):
        self.tree = tree
        self.jmax = tree.jmax
        self.n = tree.n
        jmax = self.jmax

        # tags per region, built bottom-up; a region's tag count equals its
        # node count
        self.tags: list[dict[int, list[int]]] = [dict() for _ in
                                                 range(jmax + 1)]
        for k in tree.level_keys(jmax):
            self.tags[jmax][k] = [0]
        for j in range(jmax - 1, -1, -1):
            for k in tree.level_keys(j):
                kids = tree.children(j, k)
                if len(kids) == 1:
                    self.tags[j][k] = list(self.tags[j + 1][kids[0]])
                    continue
                t0 = self.tags[j + 1][2 * k]
                t1 = self.tags[j + 1][2 * k + 1]
                merged = [0, 1]
                s0, s1 = set(t0[1:]), set(t1[1:])
                for l in sorted(s0 | s1):
                    if l in s0 and l in s1:
                        merged.extend((2 * l, 2 * l + 1))
                    else:
                        merged.append(2 * l)
                self.tags[j][k] = merged

        self.keys_k: list[np.ndarray] = []
        self.keys_l: list[np.ndarray] = []
        self.pos: list[dict[TagKey, int]] = []
        self.slices: list[dict[int, tuple[int, int]]] = []
        for j in range(jmax + 1):
            ks, ls, pos, slc = [], [], {}, {}
            for k in tree.level_keys(j):
                start = len(ks)
                for l in self.tags[j][k]:
                    pos[(k, l)] = len(ks)
                    ks.append(k)
                    ls.append(l)
                slc[k] = (start, len(ks))
            self.keys_k.append(np.array(ks, dtype=np.int64))
            self.keys_l.append(np.array(ls, dtype=np.int64))
            self.pos.append(pos)
            self.slices.append(slc)

        self.leaf_perm = tree.leaf_order()
        self.plans = [self._build_plan(j) for j in range(jmax)]

    def _build_plan(self, j: int) -> _LevelPlan:
        tree = self.tree
        pdst, pa, pb, pca, pcb = [], [], [], [], []
        cdst, csrc = [], []
        sdst, sa, sb, sca, scb = [], [], [], [], []
        scdst, scsrc = [], []
        pos_p, pos_c = self.pos[j], self.pos[j + 1]
        for k in tree.level_keys(j):
            kids = tree.children(j, k)
            if len(kids) == 1:
                for l in self.tags[j][k]:
                    cdst.append(pos_p[(k, l)])
                    csrc.append(pos_c[(kids[0], l)])
                    scdst.append(pos_c[(kids[0], l)])
                    scsrc.append(pos_p[(k, l)])
                continue
            c0, c1 = 2 * k, 2 * k + 1
            n0 = len(tree.region(j + 1, c0))
            n1 = len(tree.region(j + 1, c1))
            a = math.sqrt(n0 / (n0 + n1))
            b = math.sqrt(n1 / (n0 + n1))
            s0 = pos_c[(c0, 0)]
            s1 = pos_c[(c1, 0)]
            # scaling / difference pair on the child scaling coefficients:
            # [s; h] = [[a, b], [b, -a]] [s0; s1], an orthogonal symmetric
            # step, so the adjoint reuses the same weights
            pdst.append(pos_p[(k, 0)])
            pa.append(s0)
            pb.append(s1)
            pca.append(a)
            pcb.append(b)
            pdst.append(pos_p[(k, 1)])
            pa.append(s0)
            pb.append(s1)
            pca.append(b)
            pcb.append(-a)
            sdst.append(s0)
            sa.append(pos_p[(k, 0)])
            sb.append(pos_p[(k, 1)])
            sca.append(a)
            scb.append(b)
            sdst.append(s1)
            sa.append(pos_p[(k, 0)])
            sb.append(pos_p[(k, 1)])
            sca.append(b)
            scb.append(-a)
            t0 = set(self.tags[j + 1][c0][1:])
            t1 = set(self.tags[j + 1][c1][1:])
            for l in sorted(t0 | t1):
                if l in t0 and l in t1:
                    lo, hi = pos_p[(k, 2 * l)], pos_p[(k, 2 * l + 1)]
                    u, v = pos_c[(c0, l)], pos_c[(c1, l)]
                    pdst.extend((lo, hi))
                    pa.extend((u, u))
                    pb.extend((v, v))
                    pca.extend((_SQRT_HALF, _SQRT_HALF))
                    pcb.extend((_SQRT_HALF, -_SQRT_HALF))
                    sdst.extend((u, v))
                    sa.extend((lo, lo))
                    sb.extend((hi, hi))
                    sca.extend((_SQRT_HALF, _SQRT_HALF))
                    scb.extend((_SQRT_HALF, -_SQRT_HALF))
                else:
                    side = c0 if l in t0 else c1
                    cdst.append(pos_p[(k, 2 * l)])
                    csrc.append(pos_c[(side, l)])
                    scdst.append(pos_c[(side, l)])
                    scsrc.append(pos_p[(k, 2 * l)])
        ix = lambda v: np.array(v, dtype=np.int64)
        fx = lambda v: np.array(v, dtype=np.float64)
        return _LevelPlan(ix(pdst), ix(pa), ix(pb), fx(pca), fx(pcb),
                          ix(cdst), ix(csrc),
                          ix(sdst), ix(sa), ix(sb), fx(sca), fx(scb),
                          ix(scdst), ix(scsrc))

    def analyze(self, values: np.ndarray) -> list[np.ndarray]:
        """All level vectors for a signal (or a stack of column signals)."""
        levels: list[np.ndarray] = [None] * (self.jmax + 1)
        levels[self.jmax] = values[self.leaf_perm]
        for j in range(self.jmax - 1, -1, -1):
            levels[j] = self.plans[j].forward(levels[j + 1])
        return levels

    def synthesize_levels(self, levels: list[np.ndarray | None],
                          ) -> np.ndarray:
        """Signal whose level-j expansions contain the given (masked) level
        vectors; None levels contribute nothing."""
        shape = next(v.shape for v in levels if v is not None)
        acc = (levels[0] if levels[0] is not None
               else np.zeros(shape, dtype=np.float64))
        for j in range(self.jmax):
            acc = self.plans[j].adjoint(acc)
            if levels[j + 1] is not None:
                acc = acc + levels[j + 1]
        out = np.empty_like(acc)
        out[self.leaf_perm] = acc
        return out


def _layout_for(tree: PartitionTree) -> _Layout:
    layout = getattr(tree, "_dict_layout", None)
    if layout is None:
        layout = _Layout(tree)
        tree._dict_layout = layout
    return layout


class CoeffTable(Mapping):
    """All dictionary coefficients of one signal: a read-only mapping from
    (j, k, l) keys to floats, plus dense per-level views."""

    def __init__(self, tree: PartitionTree, level_values: list[np.ndarray]):
        self.tree = tree
        self._layout = _layout_for(tree)
        self.level_values = level_values

    @property
    def jmax(self) -> int:
        return self._layout.jmax

    @property
    def n(self) -> int:
        return self._layout.n

    def __getitem__(self, key: TagKey) -> float:
        j, k, l = key
        if not 0 <= j <= self.jmax:
            raise FictitiousKey(key)
        slot = self._layout.pos[j].get((k, l))
        if slot is None:
            raise FictitiousKey(key)
        return float(self.level_values[j][slot])

    def __iter__(self) -> Iterator[TagKey]:
        for j in range(self.jmax + 1):
            ks, ls = self._layout.keys_k[j], self._layout.keys_l[j]
            for k, l in zip(ks.tolist(), ls.tolist()):
                yield (j, k, l)

    def __len__(self) -> int:
        return (self.jmax + 1) * self.n

    def values_at(self, j: int) -> np.ndarray:
        """Level-j coefficients in canonical slot order (a copy)."""
        return self.level_values[j].copy()

    def key_arrays(self, j: int) -> tuple[np.ndarray, np.ndarray]:
        """(region indices, tags) per slot at level j."""
        return self._layout.keys_k[j], self._layout.keys_l[j]


def ghwt_analyze(f: np.ndarray, tree: PartitionTree) -> CoeffTable:
    """Expand a signal against every level of the dictionary.

    O(n) per level. Raises ValueError on a length mismatch.
    """
    f = np.asarray(f, dtype=np.float64)
    if f.shape != (tree.n,):
        raise ValueError(f"signal shape {f.shape} != ({tree.n},)")
    layout = _layout_for(tree)
    return CoeffTable(tree, layout.analyze(f))


def ghwt_basis_vector(key: TagKey, tree: PartitionTree) -> np.ndarray:
    """Materialize one dictionary vector as a signal.

    Raises FictitiousKey for keys that do not exist for this tree.
    """
    layout = _layout_for(tree)
    j, k, l = key
    if not 0 <= j <= layout.jmax or (k, l) not in layout.pos[j]:
        raise FictitiousKey(key)
    levels: list[np.ndarray | None] = [None] * (layout.jmax + 1)
    vec = np.zeros(layout.n, dtype=np.float64)
    vec[layout.pos[j][(k, l)]] = 1.0
    levels[j] = vec
    return layout.synthesize_levels(levels)


class BasisSpec:
    """A set of dictionary keys for one tree, usually an orthonormal basis
    chosen by one of the searches."""

    def __init__(self, tree: PartitionTree, keys):
        self.tree = tree
        self.keys = frozenset((int(j), int(k), int(l)) for j, k, l in keys)
        layout = _layout_for(tree)
        for j, k, l in self.keys:
            if not 0 <= j <= layout.jmax or (k, l) not in layout.pos[j]:
                raise FictitiousKey((j, k, l))

    def sorted_keys(self) -> list[TagKey]:
        return sorted(self.keys)

    def __len__(self) -> int:
        return len(self.keys)

    def __iter__(self) -> Iterator[TagKey]:
        return iter(self.sorted_keys())

    def __contains__(self, key) -> bool:
        return tuple(key) in self.keys

    def __eq__(self, other) -> bool:
        if not isinstance(other, BasisSpec):
            return NotImplemented
        return self.keys == other.keys

    def __hash__(self) -> int:
        return hash(self.keys)

    def coefficients(self, table: CoeffTable) -> np.ndarray:
        """Coefficient values aligned with sorted_keys()."""
        return np.array([table[key] for key in self.sorted_keys()])

    def is_complete(self) -> bool:
        """True when the keys tile the whole dictionary plane, i.e. they
        form a full orthonormal basis reachable by recursively choosing,
        for each block of a region's tags, either the tag split at the same
        level or the region split one level down."""
        layout = _layout_for(self.tree)
        jmax = layout.jmax
        EMPTY, EXACT, BAD = 0, 1, 2

        def pair(a, b):
            vals = [v for v in (a, b) if v is not None]
            if BAD in vals:
                return BAD
            if all(v == EXACT for v in vals):
                return EXACT
            if all(v == EMPTY for v in vals):
                return EMPTY
            return BAD

        # Stage m holds the status of every existing block (j, k, t): tags
        # [t*2^m, (t+1)*2^m) of region (j, k). A block exists iff its base
        # key (j, k, t*2^m) does; absent blocks are vacuously covered.
        status = {}
        for j in range(jmax + 1):
            for (k, l) in layout.pos[j]:
                status[(j, k, l)] = (EXACT if (j, k, l) in self.keys
                                     else EMPTY)
        for m in range(1, jmax + 1):
            nxt = {}
            step = 1 << m
            for j in range(jmax + 1 - m):
                for (k, l) in layout.pos[j]:
                    if l % step:
                        continue
                    t = l // step
                    by_tag = pair(status[(j, k, 2 * t)],
                                  status.get((j, k, 2 * t + 1)))
                    by_region = pair(status.get((j + 1, 2 * k, t)),
                                     status.get((j + 1, 2 * k + 1, t)))
                    if EXACT in (by_tag, by_region):
                        nxt[(j, k, t)] = EXACT
                    elif by_tag == EMPTY and by_region == EMPTY:
                        nxt[(j, k, t)] = EMPTY
                    else:
                        nxt[(j, k, t)] = BAD
            status = nxt
        # Root EXACT proves the keys contain a full tiling; matching the
        # dimension rules out extra keys on top of one.
        return status[(0, 0, 0)] == EXACT and len(self.keys) == layout.n


def synthesize(b, coeffs, tree: PartitionTree) -> np.ndarray:
    """Signal with the given coefficients on the keys of b.

    `b` is a BasisSpec or an iterable of keys; `coeffs` is a mapping
    key -> value or a sequence aligned with the sorted key order. When b
    is a full basis this inverts ghwt_analyze restricted to b; for a
    partial key set it returns the corresponding orthogonal projection
    component.
    """
    layout = _layout_for(tree)
    if not isinstance(b, BasisSpec):
        b = BasisSpec(tree, b)
    keys = b.sorted_keys()
    if isinstance(coeffs, Mapping):
        vals = [coeffs[key] for key in keys]
    else:
        vals = list(coeffs)
        if len(vals) != len(keys):
            raise ValueError("coefficient count does not match basis size")
    levels: list[np.ndarray | None] = [None] * (layout.jmax + 1)
    for (j, k, l), v in zip(keys, vals):
        if levels[j] is None:
            levels[j] = np.zeros(layout.n, dtype=np.float64)
        levels[j][layout.pos[j][(k, l)]] = v
    if all(v is None for v in levels):
        return np.zeros(layout.n, dtype=np.float64)
    return layout.synthesize_levels(levels)


def f2c_view(table: CoeffTable) -> list[tuple[TagKey, float]]:
    """The same coefficients reordered: grouped by tag, levels descending
    inside a tag group, regions left-to-right inside a level."""
    layout = table._layout
    jmax = layout.jmax
    entries = []
    for j in range(jmax + 1):
        ks, ls = layout.keys_k[j], layout.keys_l[j]
        vals = table.level_values[j]
        for slot in range(layout.n):
            entries.append((int(ls[slot]), -j,
                            (j, int(ks[slot]), int(ls[slot])),
                            float(vals[slot])))
    entries.sort(key=lambda e: (e[0], e[1]))
    return [(key, val) for _, _, key, val in entries]


# ---------------------------------------------------------------------------
# cost functionals


class CostFunction:
    """Additive coefficient cost J(c) = sum_i g(c_i).

    Built via lp(p) (0 < p < 2), l0(threshold) (count of entries with
    |c_i| > threshold), or custom(fn) where fn maps an array elementwise.
    """

    def __init__(self, g: Callable[[np.ndarray], np.ndarray], name: str):
        self._g = g
        self.name = name

    def g(self, values) -> np.ndarray:
        values = np.asarray(values, dtype=np.float64)
        out = np.asarray(self._g(values), dtype=np.float64)
        if out.shape != values.shape:
            raise ValueError("cost must be evaluated elementwise")
        return out

    def __repr__(self) -> str:
        return f"CostFunction({self.name})"

    @classmethod
    def lp(cls, p: float = 1.0) -> "CostFunction":
        if not 0.0 < p < 2.0:
            raise ValueError(f"p must be in (0, 2), got {p}")
        if p == 1.0:
            return cls(np.abs, "l1")
        return cls(lambda v: np.abs(v) ** p, f"l{p:g}")

    @classmethod
    def l0(cls, threshold: float = 0.0) -> "CostFunction":
        if threshold < 0.0:
            raise ValueError("threshold must be nonnegative")
        return cls(lambda v: (np.abs(v) > threshold).astype(np.float64),
                   f"l0[{threshold:g}]")

    @classmethod
    def custom(cls, fn: Callable[[np.ndarray], np.ndarray],
               name: str = "custom") -> "CostFunction":
        return cls(fn, name)


def cost_eval(values, cost: CostFunction) -> float:
    """Correctly rounded sum of g over the values (order-independent)."""
    return math.fsum(cost.g(np.asarray(values, dtype=np.float64)).tolist())


def basis_cost(b: BasisSpec, table: CoeffTable, cost: CostFunction) -> float:
    """cost_eval over the basis coefficients, keys in sorted order."""
    return cost_eval(b.coefficients(table), cost)


# ---------------------------------------------------------------------------
# fixed bases


def level_basis(tree: PartitionTree, j: int) -> BasisSpec:
    """All keys of one level (each level is an orthonormal basis)."""
    layout = _layout_for(tree)
    if not 0 <= j <= layout.jmax:
        raise ValueError(f"level {j} out of range")
    ks, ls = layout.keys_k[j], layout.keys_l[j]
    return BasisSpec(tree, [(j, k, l) for k, l in
                            zip(ks.tolist(), ls.tolist())])


def walsh_basis(tree: PartitionTree) -> BasisSpec:
    """The level-0 basis: fully merged tags on the root region."""
    return level_basis(tree, 0)


def haar_basis(tree: PartitionTree) -> BasisSpec:
    """Global scaling key plus every two-child difference key."""
    keys = [(0, 0, 0)]
    for j in range(tree.jmax):
        for k in tree.level_keys(j):
            if len(tree.region(j, k)) >= 2:
                keys.append((j, k, 1))
    return BasisSpec(tree, keys)
