"""Independent reference implementations used to check the package.

Nothing here imports the package's transform or search code. Every
function recomputes its answer from scratch along a different route
(classical flat-array recursions, exact rational arithmetic, dense
eigendecompositions) so that agreement with the package is meaningful.
"""
import math
from fractions import Fraction

import numpy as np

SQRT2 = math.sqrt(2.0)


# ---------------------------------------------------------------------------
# classical sequency-ordered Walsh system on dyadic blocks


def walsh_matrix(size):
    """Rows are +-1 Walsh vectors in sequency order; row r changes sign r times.

    Built by the alternating-sign doubling recursion and self-validated
    against the sign-change count, so downstream comparisons cannot be
    fooled by an ordering mistake here.
    """
    if size & (size - 1):
        raise ValueError("size must be a power of two")
    rows = [np.array([1.0])]
    while rows[0].size < size:
        nxt = []
        for i, r in enumerate(rows):
            sign = -1.0 if i % 2 else 1.0
            nxt.append(np.concatenate([r, sign * r]))
            nxt.append(np.concatenate([r, -sign * r]))
        rows = nxt
    mat = np.vstack(rows)
    for r in range(size):
        changes = int(np.sum(mat[r, :-1] * mat[r, 1:] < 0))
        assert changes == r, "sequency self-check failed"
    return mat


def tag_to_sequency(t):
    """Sign-change count of the tag-t dictionary vector on a dyadic block."""
    if t < 2:
        return t
    s = tag_to_sequency(t // 2)
    if t % 2 == 0:
        return 2 * s + (s % 2)
    return 2 * s + (1 - s % 2)


# ---------------------------------------------------------------------------
# flat-array dyadic packet coefficients (uniform sum/difference butterflies)


def packet_table(f):
    """All packet coefficients of a length-2**m array.

    Returns a list indexed by level j=0..m; level j is a (2**j, 2**(m-j))
    array whose [k, t] entry is the tag-t coefficient of the k-th dyadic
    block. Level m holds the samples themselves.
    """
    f = np.asarray(f, dtype=np.float64)
    n = f.size
    m = n.bit_length() - 1
    if 2 ** m != n:
        raise ValueError("length must be a power of two")
    levels = [None] * (m + 1)
    levels[m] = f.reshape(n, 1).copy()
    for j in range(m - 1, -1, -1):
        prev = levels[j + 1]
        out = np.empty((2 ** j, 2 ** (m - j)))
        for k in range(2 ** j):
            a, b = prev[2 * k], prev[2 * k + 1]
            out[k, 0::2] = (a + b) / SQRT2
            out[k, 1::2] = (a - b) / SQRT2
        levels[j] = out
    return levels


def packet_matrices(m):
    """Analysis matrices per level: row k*width+t is the (k, t) atom."""
    n = 2 ** m
    mats = [None] * (m + 1)
    mats[m] = np.eye(n)
    for j in range(m - 1, -1, -1):
        nxt = mats[j + 1]
        half = 2 ** (m - j - 1)
        out = np.empty((n, n))
        for k in range(2 ** j):
            a = nxt[(2 * k) * half:(2 * k + 1) * half]
            b = nxt[(2 * k + 1) * half:(2 * k + 2) * half]
            out[2 * k * half:(2 * k + 2) * half:2] = (a + b) / SQRT2
            out[2 * k * half + 1:(2 * k + 2) * half:2] = (a - b) / SQRT2
        mats[j] = out
    return mats


# ---------------------------------------------------------------------------
# exact best tiling of the dyadic coefficient plane (1D)


def best_tiling_1d(f, g):
    """Minimum-cost tiling by exact rational dynamic programming.

    Cells are tag bands (j, k, t, s) covering tags [t*2**s, (t+1)*2**s) of
    block (j, k). Ties prefer the tag split. Returns (frozenset of (j, k, t)
    keys, Fraction total).
    """
    tbl = packet_table(f)
    m = len(tbl) - 1
    memo = {}

    def best(j, k, t, s):
        key = (j, k, t, s)
        got = memo.get(key)
        if got is not None:
            return got
        if s == 0:
            res = (Fraction(float(g(tbl[j][k, t]))), frozenset([(j, k, t)]))
        else:
            fa = best(j, k, 2 * t, s - 1)
            fb = best(j, k, 2 * t + 1, s - 1)
            ta = best(j + 1, 2 * k, t, s - 1)
            tb = best(j + 1, 2 * k + 1, t, s - 1)
            if fa[0] + fb[0] <= ta[0] + tb[0]:
                res = (fa[0] + fb[0], fa[1] | fb[1])
            else:
                res = (ta[0] + tb[0], ta[1] | tb[1])
        memo[key] = res
        return res

    val, keys = best(0, 0, 0, m)
    return keys, val


def enumerate_tilings_1d(m):
    """Every distinct tiling of the depth-m plane, as frozensets of keys."""
    memo = {}

    def tilings(j, k, t, s):
        key = (j, k, t, s)
        got = memo.get(key)
        if got is not None:
            return got
        if s == 0:
            res = [frozenset([(j, k, t)])]
        else:
            out = set()
            for a in tilings(j, k, 2 * t, s - 1):
                for b in tilings(j, k, 2 * t + 1, s - 1):
                    out.add(a | b)
            for a in tilings(j + 1, 2 * k, t, s - 1):
                for b in tilings(j + 1, 2 * k + 1, t, s - 1):
                    out.add(a | b)
            res = sorted(out, key=sorted)
        memo[key] = res
        return res

    return tilings(0, 0, 0, m)


# ---------------------------------------------------------------------------
# 2D analogues on tensor-product dyadic planes


def packet_table_2d(img):
    """Level-pair coefficient matrices T[jr][jc] for a dyadic image."""
    img = np.asarray(img, dtype=np.float64)
    M, N = img.shape
    Jr, Jc = M.bit_length() - 1, N.bit_length() - 1
    if (2 ** Jr, 2 ** Jc) != (M, N):
        raise ValueError("shape must be powers of two")
    Pr = packet_matrices(Jr)
    Pc = packet_matrices(Jc)
    return [[Pr[jr] @ img @ Pc[jc].T for jc in range(Jc + 1)]
            for jr in range(Jr + 1)]


def best_tiling_2d(img, g):
    """Exact 4-way recursive best tiling of the 2D coefficient plane.

    Cells carry a row band (jr, kr, tr, sr) and a column band
    (jc, kc, tc, sc). Tie order among equal splits: row tag, column tag,
    row block, column block. Returns (frozenset of key pairs, Fraction).
    """
    t2 = packet_table_2d(img)
    M, N = np.asarray(img).shape
    Jr, Jc = M.bit_length() - 1, N.bit_length() - 1
    memo = {}

    def cell(jr, kr, tr, sr, jc, kc, tc, sc):
        key = (jr, kr, tr, sr, jc, kc, tc, sc)
        got = memo.get(key)
        if got is not None:
            return got
        if sr == 0 and sc == 0:
            wr, wc = 2 ** (Jr - jr), 2 ** (Jc - jc)
            v = t2[jr][jc][kr * wr + tr, kc * wc + tc]
            res = (Fraction(float(g(v))),
                   frozenset([((jr, kr, tr), (jc, kc, tc))]))
            memo[key] = res
            return res
        options = []
        if sr > 0:
            options.append(((jr, kr, 2 * tr, sr - 1, jc, kc, tc, sc),
                            (jr, kr, 2 * tr + 1, sr - 1, jc, kc, tc, sc)))
        if sc > 0:
            options.append(((jr, kr, tr, sr, jc, kc, 2 * tc, sc - 1),
                            (jr, kr, tr, sr, jc, kc, 2 * tc + 1, sc - 1)))
        if sr > 0:
            options.append(((jr + 1, 2 * kr, tr, sr - 1, jc, kc, tc, sc),
                            (jr + 1, 2 * kr + 1, tr, sr - 1, jc, kc, tc, sc)))
        if sc > 0:
            options.append(((jr, kr, tr, sr, jc + 1, 2 * kc, tc, sc - 1),
                            (jr, kr, tr, sr, jc + 1, 2 * kc + 1, tc, sc - 1)))
        best = None
        for a, b in options:
            va, ka = cell(*a)
            vb, kb = cell(*b)
            if best is None or va + vb < best[0]:
                best = (va + vb, ka | kb)
        memo[key] = best
        return best

    val, keys = cell(0, 0, 0, Jr, 0, 0, 0, Jc)
    return keys, val


def enumerate_tilings_2d(Jr, Jc):
    """Every distinct 4-way recursive tiling of the (Jr, Jc) plane.

    Tilings are returned as an integer index matrix plus a decode list:
    row i of the matrix names the atoms of tiling i as indices into
    decode, and every tiling has exactly 2**(Jr+Jc) atoms. The compact
    encoding keeps the 4x4 family (hundreds of thousands of tilings)
    affordable to hold and to evaluate with vectorized gathers.
    """
    ids = {}
    decode = []

    def atom(jr, kr, tr, jc, kc, tc):
        key = ((jr, kr, tr), (jc, kc, tc))
        got = ids.get(key)
        if got is None:
            got = len(decode)
            ids[key] = got
            decode.append(key)
        return got

    memo = {}

    def tilings(jr, kr, tr, sr, jc, kc, tc, sc):
        key = (jr, kr, tr, sr, jc, kc, tc, sc)
        got = memo.get(key)
        if got is not None:
            return got
        if sr == 0 and sc == 0:
            res = [(atom(jr, kr, tr, jc, kc, tc),)]
            memo[key] = res
            return res
        out = set()

        def combine(a, b):
            for x in tilings(*a):
                for y in tilings(*b):
                    out.add(tuple(sorted(x + y)))

        if sr > 0:
            combine((jr, kr, 2 * tr, sr - 1, jc, kc, tc, sc),
                    (jr, kr, 2 * tr + 1, sr - 1, jc, kc, tc, sc))
            combine((jr + 1, 2 * kr, tr, sr - 1, jc, kc, tc, sc),
                    (jr + 1, 2 * kr + 1, tr, sr - 1, jc, kc, tc, sc))
        if sc > 0:
            combine((jr, kr, tr, sr, jc, kc, 2 * tc, sc - 1),
                    (jr, kr, tr, sr, jc, kc, 2 * tc + 1, sc - 1))
            combine((jr, kr, tr, sr, jc + 1, 2 * kc, tc, sc - 1),
                    (jr, kr, tr, sr, jc + 1, 2 * kc + 1, tc, sc - 1))
        res = sorted(out)
        memo[key] = res
        return res

    rows = tilings(0, 0, 0, Jr, 0, 0, 0, Jc)
    return np.array(rows, dtype=np.int32), decode


def tiling_values_2d(t2, decode):
    """Coefficient value per decode entry, aligned for vectorized gathers."""
    Jr = len(t2) - 1
    Jc = len(t2[0]) - 1
    vals = np.empty(len(decode))
    for i, ((jr, kr, tr), (jc, kc, tc)) in enumerate(decode):
        wr, wc = 2 ** (Jr - jr), 2 ** (Jc - jc)
        vals[i] = t2[jr][jc][kr * wr + tr, kc * wc + tc]
    return vals


# ---------------------------------------------------------------------------
# dense eigensolver route for partitioning checks


def dense_fiedler(weights, kind):
    """Second-smallest eigenpair of a graph Laplacian via numpy.linalg.eigh.

    weights is a dense symmetric nonnegative matrix with zero diagonal.
    kind is "unnormalized", "symmetric", or "random_walk"; the latter two
    are computed through the symmetric normalization. Returns (lam, vec)
    with unit 2-norm vec and no sign convention.
    """
    W = np.asarray(weights, dtype=np.float64)
    d = W.sum(axis=1)
    L = np.diag(d) - W
    if kind == "unnormalized":
        lam, vecs = np.linalg.eigh(L)
        return float(lam[1]), vecs[:, 1]
    if np.any(d <= 0):
        raise ValueError("normalized kinds need positive degrees")
    rootinv = 1.0 / np.sqrt(d)
    Ls = rootinv[:, None] * L * rootinv[None, :]
    lam, vecs = np.linalg.eigh(Ls)
    v = vecs[:, 1]
    if kind == "symmetric":
        return float(lam[1]), v
    if kind == "random_walk":
        v = rootinv * v
        return float(lam[1]), v / np.linalg.norm(v)
    raise ValueError(f"unknown kind {kind!r}")
