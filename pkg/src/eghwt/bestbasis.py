"""Best-basis searches over the dictionary of one tree.

Three searches are provided. `best_basis_cw` runs the classic split/merge
comparison on a single ordering of the dictionary: "c2f" compares each
region's block of tags against the two child regions' blocks, "f2c"
compares each (level, tag) band against the two half-tag bands one level
finer. `eghwt_best_basis` runs the relabeled dynamic program that chooses,
block by block, between the tag split and the region split, and therefore
searches a strict superset of both orderings' basis families.
`exhaustive_best_basis` enumerates every choosable basis outright and is
the independent check for the DP.

Cost bookkeeping: the DP accumulates in exact rational arithmetic on the
double-precision g-values, and every returned total is the correctly
rounded true sum of the selected coefficients' costs (math.fsum agrees
with the rational total by construction). Rounding is monotone, so
"DP total == exhaustive total" holds exactly whenever both pick
cost-minimal bases, with no tolerance needed.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .errors import TooLarge
from .ghwt import (BasisSpec, CoeffTable, CostFunction, TagKey, _layout_for,
                   cost_eval)

# exhaustive enumeration is only offered up to this many nodes
ENUMERATION_LIMIT = 16

_CHOOSE_TAG_SPLIT = 0
_CHOOSE_REGION_SPLIT = 1


def _stage0_costs(table: CoeffTable, cost: CostFunction) -> dict:
    """Exact per-key costs: {(j, k, l): Fraction(g(value))}."""
    layout = table._layout
    A = {}
    for j in range(layout.jmax + 1):
        g = cost.g(table.level_values[j]).tolist()
        ks = layout.keys_k[j].tolist()
        ls = layout.keys_l[j].tolist()
        for k, l, v in zip(ks, ls, g):
            A[(j, k, l)] = Fraction(v)
    return A


def _run_stages(table: CoeffTable, cost: CostFunction):
    """All DP stages. Returns (stage cost dicts, stage choice dicts).

    Stage m blocks are keyed (j, k, t) = tags [t*2^m, (t+1)*2^m) of region
    (j, k); stage 0 is the coefficient table itself. A block's cost is the
    cheaper of its tag split (same level) and its region split (one level
    down), missing blocks counting zero; exact ties keep the tag split.
    """
    layout = table._layout
    jmax = layout.jmax
    stages = [_stage0_costs(table, cost)]
    choices: list[dict] = []
    A = stages[0]
    zero = Fraction(0)
    for m in range(jmax):
        top = jmax - m - 1
        A2, I2 = {}, {}
        for (j, k, l), v in A.items():
            if j > top or l % 2:
                continue
            t = l // 2
            by_tag = v + A.get((j, k, l + 1), zero)
            by_region = (A.get((j + 1, 2 * k, t), zero)
                         + A.get((j + 1, 2 * k + 1, t), zero))
            key = (j, k, t)
            if by_tag <= by_region:
                A2[key] = by_tag
                I2[key] = _CHOOSE_TAG_SPLIT
            else:
                A2[key] = by_region
                I2[key] = _CHOOSE_REGION_SPLIT
        stages.append(A2)
        choices.append(I2)
        A = A2
    return stages, choices


def eghwt_stage_tables(table: CoeffTable, cost: CostFunction,
                       ) -> tuple[list[dict], list[dict]]:
    """Introspection hook: ({(j,k,t): float cost} per stage, choice dicts).

    Stage jmax holds the single root block (0, 0, 0) whose value equals the
    total returned by eghwt_best_basis exactly.
    """
    stages, choices = _run_stages(table, cost)
    as_float = [{key: float(v) for key, v in st.items()} for st in stages]
    return as_float, choices


def eghwt_best_basis(table: CoeffTable, cost: CostFunction,
                     ) -> tuple[BasisSpec, float]:
    """Minimize the additive cost over every choosable orthonormal basis.

    Runs in O(n log n) block updates for balanced trees (O(n jmax) in
    general). Returns the basis and the correctly rounded minimal total.
    """
    stages, choices = _run_stages(table, cost)
    jmax = table.jmax
    total = stages[jmax][(0, 0, 0)]
    chosen = {(0, 0, 0)}
    for m in range(jmax - 1, -1, -1):
        exists = stages[m]
        picks = choices[m]
        nxt = set()
        for (j, k, t) in chosen:
            if picks[(j, k, t)] == _CHOOSE_TAG_SPLIT:
                cands = ((j, k, 2 * t), (j, k, 2 * t + 1))
            else:
                cands = ((j + 1, 2 * k, t), (j + 1, 2 * k + 1, t))
            nxt.update(c for c in cands if c in exists)
        chosen = nxt
    return BasisSpec(table.tree, chosen), float(total)


# ---------------------------------------------------------------------------
# single-ordering searches

# Absolute slack under which a parent block is kept instead of its
# children: equal-cost comparisons must not recurse forever down chains of
# carried regions, and the coarser description wins the tie.
CW_TIE_TOL = 1e-12


def _c2f_search(table: CoeffTable, cost: CostFunction) -> list[TagKey]:
    layout = table._layout
    tree = table.tree
    jmax = layout.jmax
    G = [cost.g(table.level_values[j]) for j in range(jmax + 1)]
    best: dict[tuple[int, int], float] = {}
    take_own: dict[tuple[int, int], bool] = {}
    for j in range(jmax, -1, -1):
        for k in tree.level_keys(j):
            a, b = layout.slices[j][k]
            own = float(G[j][a:b].sum())
            kids = tree.children(j, k)
            if not kids:
                best[(j, k)] = own
                take_own[(j, k)] = True
                continue
            split = sum(best[(j + 1, c)] for c in kids)
            if own <= split + CW_TIE_TOL:
                best[(j, k)] = own
                take_own[(j, k)] = True
            else:
                best[(j, k)] = split
                take_own[(j, k)] = False
    keys: list[TagKey] = []
    stack = [(0, 0)]
    while stack:
        j, k = stack.pop()
        if take_own[(j, k)]:
            keys.extend((j, k, l) for l in layout.tags[j][k])
        else:
            stack.extend((j + 1, c) for c in tree.children(j, k))
    return keys


def _band_slots(layout, j: int) -> dict[int, np.ndarray]:
    """Slots of each (level j, tag) band, regions left to right."""
    ls = layout.keys_l[j]
    order = np.argsort(ls, kind="stable")
    sorted_ls = ls[order]
    bounds = np.flatnonzero(np.diff(sorted_ls)) + 1
    starts = np.concatenate([[0], bounds])
    return {int(sorted_ls[s]): grp
            for s, grp in zip(starts, np.split(order, bounds))}


def _f2c_search(table: CoeffTable, cost: CostFunction) -> list[TagKey]:
    layout = table._layout
    jmax = layout.jmax
    G = [cost.g(table.level_values[j]) for j in range(jmax + 1)]
    bands = [_band_slots(layout, j) for j in range(jmax + 1)]
    best: dict[tuple[int, int], float] = {}
    take_own: dict[tuple[int, int], bool] = {}
    for j in range(jmax + 1):
        for l, slots in bands[j].items():
            own = float(G[j][slots].sum())
            if j == 0:
                best[(j, l)] = own
                take_own[(j, l)] = True
                continue
            # the same span one level finer: tags 2l and (optionally) 2l+1
            split = best[(j - 1, 2 * l)]
            if (j - 1, 2 * l + 1) in best:
                split += best[(j - 1, 2 * l + 1)]
            if own <= split + CW_TIE_TOL:
                best[(j, l)] = own
                take_own[(j, l)] = True
            else:
                best[(j, l)] = split
                take_own[(j, l)] = False
    keys: list[TagKey] = []
    ks_arrays = [layout.keys_k[j] for j in range(jmax + 1)]
    stack = [(jmax, 0)]
    while stack:
        j, l = stack.pop()
        if take_own[(j, l)]:
            ks = ks_arrays[j][bands[j][l]]
            keys.extend((j, int(k), l) for k in ks)
        else:
            stack.append((j - 1, 2 * l))
            if (j - 1, 2 * l + 1) in best:
                stack.append((j - 1, 2 * l + 1))
    return keys


def best_basis_cw(table: CoeffTable, ordering: str, cost: CostFunction,
                  ) -> tuple[BasisSpec, float]:
    """Best basis within one ordering's split family.

    ordering="c2f": blocks are regions carrying all their tags, compared
    against the two child regions (top-down refinement in space).
    ordering="f2c": blocks are (level, tag) bands compared against the two
    double-tag bands one level coarser in space, starting from the fully
    merged level. Ties keep the undivided block. The returned total is the
    correctly rounded cost of the selected keys.
    """
    if ordering == "c2f":
        keys = _c2f_search(table, cost)
    elif ordering == "f2c":
        keys = _f2c_search(table, cost)
    else:
        raise ValueError(f"ordering must be 'c2f' or 'f2c', got {ordering!r}")
    spec = BasisSpec(table.tree, keys)
    total = math.fsum(cost.g(spec.coefficients(table)).tolist())
    return spec, total


# ---------------------------------------------------------------------------
# exhaustive enumeration


def enumerate_onbs(tree, mode: str = "count"):
    """Count ("count") or list ("list") every choosable orthonormal basis.

    Counting uses the block recursion with inclusion-exclusion for the
    tilings reachable through both split orders and costs O(n jmax) big-int
    work; it equals the number of distinct key sets, carried singletons
    included. Listing returns the same bases as BasisSpecs and is limited
    to ENUMERATION_LIMIT nodes; beyond that it raises TooLarge.
    """
    layout = _layout_for(tree)
    jmax = layout.jmax

    def exists(j, k, t, m):
        return (k, t << m) in layout.pos[j]

    if mode == "count":
        memo: dict = {}

        def count(j, k, t, m):
            if not exists(j, k, t, m):
                return 1
            if m == 0:
                return 1
            key = (j, k, t, m)
            got = memo.get(key)
            if got is not None:
                return got
            by_tag = count(j, k, 2 * t, m - 1) * count(j, k, 2 * t + 1, m - 1)
            by_region = (count(j + 1, 2 * k, t, m - 1)
                         * count(j + 1, 2 * k + 1, t, m - 1))
            total = by_tag + by_region
            if m >= 2:
                total -= (count(j + 1, 2 * k, 2 * t, m - 2)
                          * count(j + 1, 2 * k, 2 * t + 1, m - 2)
                          * count(j + 1, 2 * k + 1, 2 * t, m - 2)
                          * count(j + 1, 2 * k + 1, 2 * t + 1, m - 2))
            memo[key] = total
            return total

        return count(0, 0, 0, jmax)

    if mode != "list":
        raise ValueError(f"mode must be 'count' or 'list', got {mode!r}")
    if tree.n > ENUMERATION_LIMIT:
        raise TooLarge(f"listing bases is supported up to "
                       f"{ENUMERATION_LIMIT} nodes, tree has {tree.n}")

    memo_l: dict = {}

    def tilings(j, k, t, m) -> list[frozenset]:
        if not exists(j, k, t, m):
            return [frozenset()]
        if m == 0:
            return [frozenset([(j, k, t)])]
        key = (j, k, t, m)
        got = memo_l.get(key)
        if got is not None:
            return got
        out = set()
        for la in tilings(j, k, 2 * t, m - 1):
            for rb in tilings(j, k, 2 * t + 1, m - 1):
                out.add(la | rb)
        for la in tilings(j + 1, 2 * k, t, m - 1):
            for rb in tilings(j + 1, 2 * k + 1, t, m - 1):
                out.add(la | rb)
        result = sorted(out, key=lambda s: sorted(s))
        memo_l[key] = result
        return result

    return [BasisSpec(tree, keys) for keys in tilings(0, 0, 0, jmax)]


def exhaustive_best_basis(table: CoeffTable, cost: CostFunction,
                          ) -> tuple[BasisSpec, float]:
    """Scan every choosable basis and return the cheapest.

    The check route for the dynamic program: no shared search logic, each
    candidate's total evaluated independently (correctly rounded). Strictly
    limited to small trees; raises TooLarge past ENUMERATION_LIMIT nodes.
    """
    best_spec = None
    best_cost = math.inf
    for spec in enumerate_onbs(table.tree, mode="list"):
        total = math.fsum(cost.g(spec.coefficients(table)).tolist())
        if total < best_cost:
            best_spec, best_cost = spec, total
    return best_spec, best_cost
