"""Tensor-product dictionaries and best-basis searches for matrices.

A matrix on (row tree) x (column tree) is expanded separately along each
axis; the coefficient at (level pair jr, jc) and (key pair) is the inner
product with the tensor product of the two 1D dictionary vectors. The
four-way best-basis search generalizes the 1D program: each block may be
split by row tag, column tag, row region, or column region, searched by
dynamic programming over block stages.

Two DP engines: an exact one (rational cost arithmetic, dictionary-based,
for small matrices and for oracle-grade equality testing) and a dense
vectorized one whose per-stage tables are numpy grids over relabeled
indices (for image-scale inputs on reasonably balanced trees).
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .bestbasis import CW_TIE_TOL, _band_slots
from .errors import FictitiousKey, InvalidTiling, TooLarge
from .ghwt import CostFunction, _layout_for
from .partition import PartitionTree

TensorKey = tuple[tuple[int, int, int], tuple[int, int, int]]

# matrices up to this many entries use the exact DP engine under "auto"
EXACT_ENGINE_LIMIT = 1024
# refuse dense stage-0 grids bigger than this many doubles (guards against
# grossly imbalanced trees, whose relabeled index range explodes)
DENSE_GRID_LIMIT = 200_000_000

_OPT_ROW_TAG, _OPT_COL_TAG, _OPT_ROW_REGION, _OPT_COL_REGION = 0, 1, 2, 3


class TensorCoeffTable:
    """All tensor coefficients of one matrix.

    mats[jr][jc] is the (n_rows, n_cols) coefficient matrix of the level
    pair, indexed by canonical slots on both axes; each level pair is a
    complete orthonormal expansion of the matrix.
    """

    def __init__(self, row_tree: PartitionTree, col_tree: PartitionTree,
                 mats: list[list[np.ndarray]]):
        self.row_tree = row_tree
        self.col_tree = col_tree
        self.mats = mats
        self._lr = _layout_for(row_tree)
        self._lc = _layout_for(col_tree)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.row_tree.n, self.col_tree.n)

    def level_pair(self, jr: int, jc: int) -> np.ndarray:
        """Coefficients of one level pair, canonical slot order (a copy)."""
        return self.mats[jr][jc].copy()

    def __getitem__(self, key: TensorKey) -> float:
        (jr, kr, lr), (jc, kc, lc) = key
        pr = self._lr.pos[jr].get((kr, lr)) if 0 <= jr <= self._lr.jmax \
            else None
        pc = self._lc.pos[jc].get((kc, lc)) if 0 <= jc <= self._lc.jmax \
            else None
        if pr is None or pc is None:
            raise FictitiousKey(key)
        return float(self.mats[jr][jc][pr, pc])

    def gather(self, keys) -> np.ndarray:
        """Coefficient values for an iterable of tensor keys, in order."""
        return np.array([self[key] for key in keys], dtype=np.float64)


def tensor_analyze(img: np.ndarray, row_tree: PartitionTree,
                   col_tree: PartitionTree) -> TensorCoeffTable:
    """Expand a matrix along both axes (rows first; the result is
    independent of the order, see the adjointness of the level steps)."""
    img = np.asarray(img, dtype=np.float64)
    if img.shape != (row_tree.n, col_tree.n):
        raise ValueError(
            f"image shape {img.shape} != ({row_tree.n}, {col_tree.n})")
    lr = _layout_for(row_tree)
    lc = _layout_for(col_tree)
    row_levels = lr.analyze(img)
    mats: list[list[np.ndarray]] = []
    for jr in range(lr.jmax + 1):
        col_levels = lc.analyze(row_levels[jr].T)
        mats.append([col_levels[jc].T for jc in range(lc.jmax + 1)])
    return TensorCoeffTable(row_tree, col_tree, mats)


class TensorBasisSpec:
    """A set of tensor keys ((jr,kr,lr),(jc,kc,lc)) for one tree pair."""

    def __init__(self, row_tree: PartitionTree, col_tree: PartitionTree,
                 keys):
        self.row_tree = row_tree
        self.col_tree = col_tree
        self.keys = frozenset(
            ((int(a), int(b), int(c)), (int(d), int(e), int(f)))
            for (a, b, c), (d, e, f) in keys)

    def sorted_keys(self) -> list[TensorKey]:
        return sorted(self.keys)

    def __len__(self) -> int:
        return len(self.keys)

    def __iter__(self):
        return iter(self.sorted_keys())

    def __contains__(self, key) -> bool:
        (a, b, c), (d, e, f) = key
        return ((a, b, c), (d, e, f)) in self.keys

    def __eq__(self, other):
        if not isinstance(other, TensorBasisSpec):
            return NotImplemented
        return self.keys == other.keys

    def __hash__(self):
        return hash(self.keys)

    def coefficients(self, tc: TensorCoeffTable) -> np.ndarray:
        return tc.gather(self.sorted_keys())


def tensor_synthesize(keys, coeffs, row_tree: PartitionTree,
                      col_tree: PartitionTree) -> np.ndarray:
    """Matrix with the given coefficients on the given tensor keys.

    A full basis inverts tensor_analyze restricted to it; a partial key set
    yields the orthogonal projection component. `coeffs` is a mapping
    key -> value or a sequence aligned with the sorted key order. Raises
    InvalidTiling on duplicate keys and FictitiousKey on absent ones.
    """
    if isinstance(keys, TensorBasisSpec):
        key_list = keys.sorted_keys()
    else:
        key_list = [tuple(map(tuple, key)) for key in keys]
        if len(set(key_list)) != len(key_list):
            raise InvalidTiling("duplicate tensor keys")
        key_list = sorted(key_list)
    if hasattr(coeffs, "__getitem__") and hasattr(coeffs, "keys"):
        vals = [coeffs[key] for key in key_list]
    else:
        vals = list(coeffs)
        if len(vals) != len(key_list):
            raise ValueError("coefficient count does not match key count")
    lr = _layout_for(row_tree)
    lc = _layout_for(col_tree)
    pair_mats: dict[tuple[int, int], np.ndarray] = {}
    for ((jr, kr, tr), (jc, kc, tcg)), v in zip(key_list, vals):
        pr = lr.pos[jr].get((kr, tr)) if 0 <= jr <= lr.jmax else None
        pc = lc.pos[jc].get((kc, tcg)) if 0 <= jc <= lc.jmax else None
        if pr is None or pc is None:
            raise FictitiousKey(((jr, kr, tr), (jc, kc, tcg)))
        mat = pair_mats.get((jr, jc))
        if mat is None:
            mat = np.zeros((lr.n, lc.n), dtype=np.float64)
            pair_mats[(jr, jc)] = mat
        mat[pr, pc] = v
    row_levels: list[np.ndarray | None] = [None] * (lr.jmax + 1)
    for jr in range(lr.jmax + 1):
        col_levels: list[np.ndarray | None] = [None] * (lc.jmax + 1)
        any_here = False
        for (pjr, pjc), mat in pair_mats.items():
            if pjr == jr:
                col_levels[pjc] = mat.T
                any_here = True
        if any_here:
            row_levels[jr] = lc.synthesize_levels(col_levels).T
    if all(v is None for v in row_levels):
        return np.zeros((lr.n, lc.n), dtype=np.float64)
    return lr.synthesize_levels(row_levels)


# ---------------------------------------------------------------------------
# fixed tensor bases


def level2d_basis(row_tree: PartitionTree, col_tree: PartitionTree,
                  jr: int, jc: int) -> TensorBasisSpec:
    """Tensor product of two fixed single-level bases."""
    lr = _layout_for(row_tree)
    lc = _layout_for(col_tree)
    rkeys = [(jr, int(k), int(l)) for k, l in
             zip(lr.keys_k[jr], lr.keys_l[jr])]
    ckeys = [(jc, int(k), int(l)) for k, l in
             zip(lc.keys_k[jc], lc.keys_l[jc])]
    return TensorBasisSpec(row_tree, col_tree,
                           [(r, c) for r in rkeys for c in ckeys])


def walsh2d_basis(row_tree: PartitionTree,
                  col_tree: PartitionTree) -> TensorBasisSpec:
    return level2d_basis(row_tree, col_tree, 0, 0)


def haar2d_basis(row_tree: PartitionTree,
                 col_tree: PartitionTree) -> TensorBasisSpec:
    """Tensor product of the two 1D Haar bases."""
    from .ghwt import haar_basis
    rkeys = haar_basis(row_tree).sorted_keys()
    ckeys = haar_basis(col_tree).sorted_keys()
    return TensorBasisSpec(row_tree, col_tree,
                           [(r, c) for r in rkeys for c in ckeys])


def tensor_product_basis(row_tree: PartitionTree, col_tree: PartitionTree,
                         row_keys, col_keys) -> TensorBasisSpec:
    """Tensor product of two explicit 1D key sets."""
    rkeys = [tuple(k) for k in row_keys]
    ckeys = [tuple(k) for k in col_keys]
    return TensorBasisSpec(row_tree, col_tree,
                           [(r, c) for r in rkeys for c in ckeys])


# ---------------------------------------------------------------------------
# four-way best basis


def _exact_engine(tc: TensorCoeffTable, cost: CostFunction):
    lr, lc = tc._lr, tc._lc
    Jr, Jc = lr.jmax, lc.jmax
    A: dict[tuple, Fraction] = {}
    for jr in range(Jr + 1):
        rk = lr.keys_k[jr].tolist()
        rl = lr.keys_l[jr].tolist()
        for jc in range(Jc + 1):
            ck = lc.keys_k[jc].tolist()
            cl = lc.keys_l[jc].tolist()
            G = cost.g(tc.mats[jr][jc])
            for a in range(lr.n):
                row = G[a]
                for b in range(lc.n):
                    A[(0, 0, jr, rk[a], rl[a], jc, ck[b], cl[b])] = \
                        Fraction(row[b])
    zero = Fraction(0)
    stage_keys = [set(A)]
    stage_choice: list[dict] = []
    cur = A
    for _ in range(Jr + Jc):
        proposals = set()
        for (mr, mc, jr, kr, tr, jc, kc, tcg) in cur:
            if tr % 2 == 0 and jr + mr < Jr:
                proposals.add((mr + 1, mc, jr, kr, tr // 2, jc, kc, tcg))
            if tcg % 2 == 0 and jc + mc < Jc:
                proposals.add((mr, mc + 1, jr, kr, tr, jc, kc, tcg // 2))
        nxt: dict[tuple, Fraction] = {}
        chz: dict[tuple, int] = {}
        for p in proposals:
            mr, mc, jr, kr, tr, jc, kc, tcg = p
            best_v, best_o = None, None
            if mr >= 1:
                v = (cur.get((mr - 1, mc, jr, kr, 2 * tr, jc, kc, tcg), zero)
                     + cur.get((mr - 1, mc, jr, kr, 2 * tr + 1, jc, kc, tcg),
                               zero))
                best_v, best_o = v, _OPT_ROW_TAG
            if mc >= 1:
                v = (cur.get((mr, mc - 1, jr, kr, tr, jc, kc, 2 * tcg), zero)
                     + cur.get((mr, mc - 1, jr, kr, tr, jc, kc, 2 * tcg + 1),
                               zero))
                if best_v is None or v < best_v:
                    best_v, best_o = v, _OPT_COL_TAG
            if mr >= 1:
                v = (cur.get((mr - 1, mc, jr + 1, 2 * kr, tr, jc, kc, tcg),
                             zero)
                     + cur.get((mr - 1, mc, jr + 1, 2 * kr + 1, tr, jc, kc,
                                tcg), zero))
                if v < best_v:
                    best_v, best_o = v, _OPT_ROW_REGION
            if mc >= 1:
                v = (cur.get((mr, mc - 1, jr, kr, tr, jc + 1, 2 * kc, tcg),
                             zero)
                     + cur.get((mr, mc - 1, jr, kr, tr, jc + 1, 2 * kc + 1,
                                tcg), zero))
                if v < best_v:
                    best_v, best_o = v, _OPT_COL_REGION
            nxt[p] = best_v
            chz[p] = best_o
        stage_keys.append(set(nxt))
        stage_choice.append(chz)
        cur = nxt
    root = (Jr, Jc, 0, 0, 0, 0, 0, 0)
    total = cur[root]
    chosen = {root}
    for s in range(Jr + Jc - 1, -1, -1):
        exists = stage_keys[s]
        picks = stage_choice[s]
        nxt_chosen = set()
        for state in chosen:
            mr, mc, jr, kr, tr, jc, kc, tcg = state
            o = picks[state]
            if o == _OPT_ROW_TAG:
                cands = ((mr - 1, mc, jr, kr, 2 * tr, jc, kc, tcg),
                         (mr - 1, mc, jr, kr, 2 * tr + 1, jc, kc, tcg))
            elif o == _OPT_COL_TAG:
                cands = ((mr, mc - 1, jr, kr, tr, jc, kc, 2 * tcg),
                         (mr, mc - 1, jr, kr, tr, jc, kc, 2 * tcg + 1))
            elif o == _OPT_ROW_REGION:
                cands = ((mr - 1, mc, jr + 1, 2 * kr, tr, jc, kc, tcg),
                         (mr - 1, mc, jr + 1, 2 * kr + 1, tr, jc, kc, tcg))
            else:
                cands = ((mr, mc - 1, jr, kr, tr, jc + 1, 2 * kc, tcg),
                         (mr, mc - 1, jr, kr, tr, jc + 1, 2 * kc + 1, tcg))
            nxt_chosen.update(c for c in cands if c in exists)
        chosen = nxt_chosen
    keys = [((jr, kr, tr), (jc, kc, tcg))
            for (_, _, jr, kr, tr, jc, kc, tcg) in chosen]
    return keys, float(total)


def _slot_grids(layout):
    """Per level: int grid over (region index, tag) holding the canonical
    slot, -1 where no key exists."""
    grids = []
    for j in range(layout.jmax + 1):
        g = np.full((1 << j, 1 << (layout.jmax - j)), -1, dtype=np.int64)
        g[layout.keys_k[j], layout.keys_l[j]] = np.arange(layout.n)
        grids.append(g)
    return grids


def _dense_engine(tc: TensorCoeffTable, cost: CostFunction):
    lr, lc = tc._lr, tc._lc
    Jr, Jc = lr.jmax, lc.jmax
    stage0_doubles = (Jr + 1) * (Jc + 1) * (1 << (Jr + Jc))
    if stage0_doubles > DENSE_GRID_LIMIT:
        raise TooLarge(
            f"dense search grids would hold {stage0_doubles} doubles; the "
            "tree pair is too deep/imbalanced for the vectorized engine")
    slots_r = _slot_grids(lr)
    slots_c = _slot_grids(lc)

    A: dict[tuple, np.ndarray] = {}
    for jr in range(Jr + 1):
        for jc in range(Jc + 1):
            G = cost.g(tc.mats[jr][jc])
            grid = np.zeros((1 << jr, 1 << (Jr - jr),
                             1 << jc, 1 << (Jc - jc)), dtype=np.float64)
            kr, tr = lr.keys_k[jr], lr.keys_l[jr]
            kc, tcg = lc.keys_k[jc], lc.keys_l[jc]
            grid[kr[:, None], tr[:, None], kc[None, :], tcg[None, :]] = G
            A[(0, jr, jc)] = grid
    choices: dict[tuple, np.ndarray] = {}
    S = Jr + Jc
    for s in range(1, S + 1):
        nxt: dict[tuple, np.ndarray] = {}
        for mr in range(max(0, s - Jc), min(s, Jr) + 1):
            mc = s - mr
            for jr in range(Jr - mr + 1):
                for jc in range(Jc - mc + 1):
                    opts, codes = [], []
                    if mr >= 1:
                        src = A[(mr - 1, jr, jc)]
                        opts.append(src[:, 0::2] + src[:, 1::2])
                        codes.append(_OPT_ROW_TAG)
                    if mc >= 1:
                        src = A[(mr, jr, jc)]
                        opts.append(src[..., 0::2] + src[..., 1::2])
                        codes.append(_OPT_COL_TAG)
                    if mr >= 1:
                        src = A[(mr - 1, jr + 1, jc)]
                        opts.append(src[0::2] + src[1::2])
                        codes.append(_OPT_ROW_REGION)
                    if mc >= 1:
                        src = A[(mr, jr, jc + 1)]
                        opts.append(src[:, :, 0::2, :] + src[:, :, 1::2, :])
                        codes.append(_OPT_COL_REGION)
                    if len(opts) == 1:
                        nxt[(mr, jr, jc)] = opts[0]
                        ch = np.full(opts[0].shape, codes[0], dtype=np.uint8)
                    else:
                        stackv = np.stack(opts)
                        arg = np.argmin(stackv, axis=0)
                        nxt[(mr, jr, jc)] = np.min(stackv, axis=0)
                        ch = np.asarray(codes, dtype=np.uint8)[arg]
                    choices[(s, mr, jr, jc)] = ch
        A = nxt

    keys: list[TensorKey] = []
    stack = [(S, Jr, 0, 0, 0, 0, 0, 0)]
    while stack:
        s, mr, jr, kr, tr, jc, kc, tcg = stack.pop()
        if s == 0:
            if slots_r[jr][kr, tr] >= 0 and slots_c[jc][kc, tcg] >= 0:
                keys.append(((jr, kr, tr), (jc, kc, tcg)))
            continue
        o = choices[(s, mr, jr, jc)][kr, tr, kc, tcg]
        if o == _OPT_ROW_TAG:
            stack.append((s - 1, mr - 1, jr, kr, 2 * tr, jc, kc, tcg))
            stack.append((s - 1, mr - 1, jr, kr, 2 * tr + 1, jc, kc, tcg))
        elif o == _OPT_COL_TAG:
            stack.append((s - 1, mr, jr, kr, tr, jc, kc, 2 * tcg))
            stack.append((s - 1, mr, jr, kr, tr, jc, kc, 2 * tcg + 1))
        elif o == _OPT_ROW_REGION:
            stack.append((s - 1, mr - 1, jr + 1, 2 * kr, tr, jc, kc, tcg))
            stack.append((s - 1, mr - 1, jr + 1, 2 * kr + 1, tr, jc, kc, tcg))
        else:
            stack.append((s - 1, mr, jr, kr, tr, jc + 1, 2 * kc, tcg))
            stack.append((s - 1, mr, jr, kr, tr, jc + 1, 2 * kc + 1, tcg))
    vals = _gather_values(tc, keys)
    total = math.fsum(cost.g(vals).tolist())
    return keys, total


def _gather_values(tc: TensorCoeffTable, keys) -> np.ndarray:
    lr, lc = tc._lr, tc._lc
    out = np.empty(len(keys), dtype=np.float64)
    for i, ((jr, kr, tr), (jc, kc, tcg)) in enumerate(keys):
        out[i] = tc.mats[jr][jc][lr.pos[jr][(kr, tr)], lc.pos[jc][(kc, tcg)]]
    return out


def eghwt2d_best_basis(tc: TensorCoeffTable, cost: CostFunction,
                       engine: str = "auto",
                       ) -> tuple[TensorBasisSpec, float]:
    """Minimize the cost over the four-way (tag/region x row/column) basis
    family. Option ties break in the fixed order row tag split, column tag
    split, row region split, column region split.

    engine="exact" runs the rational-arithmetic search (small inputs),
    "dense" the vectorized one, "auto" picks by size.
    """
    if engine == "auto":
        engine = ("exact" if tc.row_tree.n * tc.col_tree.n
                  <= EXACT_ENGINE_LIMIT else "dense")
    if engine == "exact":
        keys, total = _exact_engine(tc, cost)
    elif engine == "dense":
        keys, total = _dense_engine(tc, cost)
    else:
        raise ValueError(f"engine must be auto/exact/dense, got {engine!r}")
    return TensorBasisSpec(tc.row_tree, tc.col_tree, keys), total


# ---------------------------------------------------------------------------
# single-ordering searches on the tensor dictionary


def _region_meta(tree: PartitionTree, layout):
    """Per level: slice starts (slot space) and child rank arrays."""
    starts, child1, child2 = [], [], []
    for j in range(layout.jmax + 1):
        ks = tree.level_keys(j)
        starts.append(np.array([layout.slices[j][k][0] for k in ks],
                               dtype=np.int64))
        if j < layout.jmax:
            rank_next = {k: r for r, k in enumerate(tree.level_keys(j + 1))}
            c1 = np.array([rank_next[2 * k] for k in ks], dtype=np.int64)
            c2 = np.array([rank_next.get(2 * k + 1, -1) for k in ks],
                          dtype=np.int64)
        else:
            c1 = c2 = np.empty(0, dtype=np.int64)
        child1.append(c1)
        child2.append(c2)
    return starts, child1, child2


def _pair_split_value(B_next: np.ndarray, c1: np.ndarray, c2: np.ndarray,
                      axis: int) -> np.ndarray:
    """Sum of the two children's DP values along one axis (absent second
    children contribute zero)."""
    v = np.take(B_next, c1, axis=axis)
    present = c2 >= 0
    if present.any():
        extra = np.take(B_next, np.maximum(c2, 0), axis=axis)
        mask = present[:, None] if axis == 0 else present[None, :]
        v = v + np.where(mask, extra, 0.0)
    return v


def cw2d_best_basis(tc: TensorCoeffTable, ordering: str, cost: CostFunction,
                    ) -> tuple[TensorBasisSpec, float]:
    """Best basis within the product-tree family of one ordering.

    ordering="c2f": blocks are (row region x column region) pairs carrying
    all their tags; each is compared with its row split and column split.
    ordering="f2c": blocks are (row band x column band) pairs, bands being
    fixed (level, tag) slabs, compared with the half-tag band splits one
    level finer per axis. Ties keep the undivided block, then prefer the
    row split. Both families are subsets of the four-way family.
    """
    if ordering == "c2f":
        return _cw2d_c2f(tc, cost)
    if ordering == "f2c":
        return _cw2d_f2c(tc, cost)
    raise ValueError(f"ordering must be 'c2f' or 'f2c', got {ordering!r}")


def _cw2d_c2f(tc: TensorCoeffTable, cost: CostFunction):
    lr, lc = tc._lr, tc._lc
    Jr, Jc = lr.jmax, lc.jmax
    r_starts, r_c1, r_c2 = _region_meta(tc.row_tree, lr)
    c_starts, c_c1, c_c2 = _region_meta(tc.col_tree, lc)
    own: dict[tuple[int, int], np.ndarray] = {}
    for jr in range(Jr + 1):
        for jc in range(Jc + 1):
            G = cost.g(tc.mats[jr][jc])
            part = np.add.reduceat(G, r_starts[jr], axis=0)
            own[(jr, jc)] = np.add.reduceat(part, c_starts[jc], axis=1)
    B: dict[tuple[int, int], np.ndarray] = {}
    choice: dict[tuple[int, int], np.ndarray] = {}
    for total_j in range(Jr + Jc, -1, -1):
        for jr in range(max(0, total_j - Jc), min(total_j, Jr) + 1):
            jc = total_j - jr
            o = own[(jr, jc)]
            rowv = (_pair_split_value(B[(jr + 1, jc)], r_c1[jr], r_c2[jr], 0)
                    if jr < Jr else None)
            colv = (_pair_split_value(B[(jr, jc + 1)], c_c1[jc], c_c2[jc], 1)
                    if jc < Jc else None)
            if rowv is None and colv is None:
                B[(jr, jc)] = o
                choice[(jr, jc)] = np.zeros(o.shape, dtype=np.uint8)
                continue
            rv = rowv if rowv is not None else np.full_like(o, np.inf)
            cv = colv if colv is not None else np.full_like(o, np.inf)
            childmin = np.minimum(rv, cv)
            keep = o <= childmin + CW_TIE_TOL
            B[(jr, jc)] = np.where(keep, o, childmin)
            choice[(jr, jc)] = np.where(keep, np.uint8(0),
                                        np.where(rv <= cv, np.uint8(1),
                                                 np.uint8(2)))
    keys: list[TensorKey] = []
    vals: list[np.ndarray] = []
    rank_r = [tc.row_tree.level_keys(j) for j in range(Jr + 1)]
    rank_c = [tc.col_tree.level_keys(j) for j in range(Jc + 1)]
    rindex = [{k: r for r, k in enumerate(level)} for level in rank_r]
    cindex = [{k: r for r, k in enumerate(level)} for level in rank_c]
    stack = [(0, 0, 0, 0)]
    while stack:
        jr, kr, jc, kc = stack.pop()
        ch = choice[(jr, jc)][rindex[jr][kr], cindex[jc][kc]]
        if ch == 0:
            a, b = lr.slices[jr][kr]
            c, d = lc.slices[jc][kc]
            rkeys = [(jr, kr, int(l)) for l in lr.keys_l[jr][a:b]]
            ckeys = [(jc, kc, int(l)) for l in lc.keys_l[jc][c:d]]
            keys.extend((r, cck) for r in rkeys for cck in ckeys)
            vals.append(tc.mats[jr][jc][a:b, c:d].ravel())
        elif ch == 1:
            for child in tc.row_tree.children(jr, kr):
                stack.append((jr + 1, child, jc, kc))
        else:
            for child in tc.col_tree.children(jc, kc):
                stack.append((jr, kr, jc + 1, child))
    allvals = np.concatenate(vals) if vals else np.empty(0)
    total = math.fsum(cost.g(allvals).tolist())
    return TensorBasisSpec(tc.row_tree, tc.col_tree, keys), total


def _band_meta(layout):
    """Per level: band order (tags ascending), slot arrays, permutation,
    boundaries, and child band ranks one level down."""
    slots, orders, starts, tags = [], [], [], []
    for j in range(layout.jmax + 1):
        bands = _band_slots(layout, j)
        tag_list = sorted(bands)
        tags.append(tag_list)
        slot_groups = [bands[t] for t in tag_list]
        slots.append(slot_groups)
        orders.append(np.concatenate(slot_groups))
        starts.append(np.array(
            [0] + list(np.cumsum([len(g) for g in slot_groups]))[:-1],
            dtype=np.int64))
    child1, child2 = [], []
    for j in range(layout.jmax + 1):
        if j == 0:
            child1.append(np.empty(0, dtype=np.int64))
            child2.append(np.empty(0, dtype=np.int64))
            continue
        prev_rank = {t: r for r, t in enumerate(tags[j - 1])}
        c1 = np.array([prev_rank[2 * t] for t in tags[j]], dtype=np.int64)
        c2 = np.array([prev_rank.get(2 * t + 1, -1) for t in tags[j]],
                      dtype=np.int64)
        child1.append(c1)
        child2.append(c2)
    return tags, slots, orders, starts, child1, child2


def _cw2d_f2c(tc: TensorCoeffTable, cost: CostFunction):
    lr, lc = tc._lr, tc._lc
    Jr, Jc = lr.jmax, lc.jmax
    r_tags, r_slots, r_order, r_starts, r_c1, r_c2 = _band_meta(lr)
    c_tags, c_slots, c_order, c_starts, c_c1, c_c2 = _band_meta(lc)
    own: dict[tuple[int, int], np.ndarray] = {}
    for jr in range(Jr + 1):
        for jc in range(Jc + 1):
            G = cost.g(tc.mats[jr][jc])[r_order[jr]][:, c_order[jc]]
            part = np.add.reduceat(G, r_starts[jr], axis=0)
            own[(jr, jc)] = np.add.reduceat(part, c_starts[jc], axis=1)
    B: dict[tuple[int, int], np.ndarray] = {}
    choice: dict[tuple[int, int], np.ndarray] = {}
    for total_j in range(0, Jr + Jc + 1):
        for jr in range(max(0, total_j - Jc), min(total_j, Jr) + 1):
            jc = total_j - jr
            o = own[(jr, jc)]
            rowv = (_pair_split_value(B[(jr - 1, jc)], r_c1[jr], r_c2[jr], 0)
                    if jr >= 1 else None)
            colv = (_pair_split_value(B[(jr, jc - 1)], c_c1[jc], c_c2[jc], 1)
                    if jc >= 1 else None)
            if rowv is None and colv is None:
                B[(jr, jc)] = o
                choice[(jr, jc)] = np.zeros(o.shape, dtype=np.uint8)
                continue
            rv = rowv if rowv is not None else np.full_like(o, np.inf)
            cv = colv if colv is not None else np.full_like(o, np.inf)
            childmin = np.minimum(rv, cv)
            keep = o <= childmin + CW_TIE_TOL
            B[(jr, jc)] = np.where(keep, o, childmin)
            choice[(jr, jc)] = np.where(keep, np.uint8(0),
                                        np.where(rv <= cv, np.uint8(1),
                                                 np.uint8(2)))
    r_rank = [{t: r for r, t in enumerate(level)} for level in r_tags]
    c_rank = [{t: r for r, t in enumerate(level)} for level in c_tags]
    keys: list[TensorKey] = []
    vals: list[np.ndarray] = []
    stack = [(Jr, 0, Jc, 0)]
    while stack:
        jr, tr, jc, tcg = stack.pop()
        ch = choice[(jr, jc)][r_rank[jr][tr], c_rank[jc][tcg]]
        if ch == 0:
            sr = r_slots[jr][r_rank[jr][tr]]
            sc = c_slots[jc][c_rank[jc][tcg]]
            rkeys = [(jr, int(k), tr) for k in lr.keys_k[jr][sr]]
            ckeys = [(jc, int(k), tcg) for k in lc.keys_k[jc][sc]]
            keys.extend((r, cck) for r in rkeys for cck in ckeys)
            vals.append(tc.mats[jr][jc][np.ix_(sr, sc)].ravel())
        elif ch == 1:
            stack.append((jr - 1, 2 * tr, jc, tcg))
            if 2 * tr + 1 in r_rank[jr - 1]:
                stack.append((jr - 1, 2 * tr + 1, jc, tcg))
        else:
            stack.append((jr, tr, jc - 1, 2 * tcg))
            if 2 * tcg + 1 in c_rank[jc - 1]:
                stack.append((jr, tr, jc - 1, 2 * tcg + 1))
    allvals = np.concatenate(vals) if vals else np.empty(0)
    total = math.fsum(cost.g(allvals).tolist())
    return TensorBasisSpec(tc.row_tree, tc.col_tree, keys), total
