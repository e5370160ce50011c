"""File formats: delimited coefficient/basis tables, tree JSON, edge lists,
MatrixMarket graphs, signal/matrix CSV, and binary PGM images.

Floats are serialized with repr (shortest round-trip form), so identical
inputs produce byte-identical files.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse as sp

from .graph import Graph
from .partition import PartitionTree

# ---------------------------------------------------------------------------
# coefficient and basis tables


def write_coefficients_csv(path, keys, values) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["j", "k", "l", "value"])
        for (j, k, l), v in zip(keys, values):
            w.writerow([j, k, l, repr(float(v))])


def read_coefficients_csv(path):
    keys, vals = [], []
    with open(path, newline="") as fh:
        rows = iter(csv.reader(fh))
        header = next(rows)
        if [h.strip() for h in header] != ["j", "k", "l", "value"]:
            raise ValueError(f"unexpected coefficient header: {header}")
        for row in rows:
            if not row:
                continue
            keys.append((int(row[0]), int(row[1]), int(row[2])))
            vals.append(float(row[3]))
    return keys, np.array(vals, dtype=np.float64)


def write_basis_csv(path, keys) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["j", "k", "l"])
        for j, k, l in keys:
            w.writerow([j, k, l])


def read_basis_csv(path) -> list[tuple[int, int, int]]:
    keys = []
    with open(path, newline="") as fh:
        rows = iter(csv.reader(fh))
        header = next(rows)
        if [h.strip() for h in header] != ["j", "k", "l"]:
            raise ValueError(f"unexpected basis header: {header}")
        for row in rows:
            if not row:
                continue
            keys.append((int(row[0]), int(row[1]), int(row[2])))
    return keys


_TENSOR_COLS = ["jr", "kr", "lr", "jc", "kc", "lc"]


def write_tensor_coefficients_csv(path, keys, values) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(_TENSOR_COLS + ["value"])
        for ((jr, kr, lr), (jc, kc, lc)), v in zip(keys, values):
            w.writerow([jr, kr, lr, jc, kc, lc, repr(float(v))])


def read_tensor_coefficients_csv(path):
    keys, vals = [], []
    with open(path, newline="") as fh:
        rows = iter(csv.reader(fh))
        header = next(rows)
        if [h.strip() for h in header] != _TENSOR_COLS + ["value"]:
            raise ValueError(f"unexpected tensor coefficient header: "
                             f"{header}")
        for row in rows:
            if not row:
                continue
            nums = [int(x) for x in row[:6]]
            keys.append((tuple(nums[:3]), tuple(nums[3:])))
            vals.append(float(row[6]))
    return keys, np.array(vals, dtype=np.float64)


def write_tensor_basis_csv(path, keys) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(_TENSOR_COLS)
        for (jr, kr, lr), (jc, kc, lc) in keys:
            w.writerow([jr, kr, lr, jc, kc, lc])


def read_tensor_basis_csv(path):
    keys = []
    with open(path, newline="") as fh:
        rows = iter(csv.reader(fh))
        header = next(rows)
        if [h.strip() for h in header] != _TENSOR_COLS:
            raise ValueError(f"unexpected tensor basis header: {header}")
        for row in rows:
            if not row:
                continue
            nums = [int(x) for x in row[:6]]
            keys.append((tuple(nums[:3]), tuple(nums[3:])))
    return keys


# ---------------------------------------------------------------------------
# partition trees


def save_tree_json(path, tree: PartitionTree) -> None:
    with open(path, "w") as fh:
        json.dump(tree.to_json_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_tree_json(path) -> PartitionTree:
    with open(path) as fh:
        return PartitionTree.from_json_dict(json.load(fh))


# ---------------------------------------------------------------------------
# graphs


def _looks_like_header(row: list[str]) -> bool:
    try:
        float(row[0])
    except ValueError:
        return True
    return False


def read_edge_csv(path, n: int | None = None,
                  one_based: bool = False) -> Graph:
    """Weighted edge list `src,dst,weight` (weight optional, default 1).

    Either orientation of a pair may appear, and both may, but then their
    weights must agree; repeating the same orientation is rejected, as are
    self loops and nonpositive weights.
    """
    seen_ordered: set[tuple[int, int]] = set()
    undirected: dict[tuple[int, int], float] = {}
    with open(path, newline="") as fh:
        rows = iter(csv.reader(fh))
        first = next(rows, None)
        if first is not None and not _looks_like_header(first):
            rows = iter([first] + list(rows))
        for row in rows:
            if not row or not row[0].strip():
                continue
            u, v = int(row[0]), int(row[1])
            w = float(row[2]) if len(row) > 2 and row[2].strip() else 1.0
            if one_based:
                u -= 1
                v -= 1
            if u == v:
                raise ValueError(f"self loop on node {u}")
            if u < 0 or v < 0:
                raise ValueError(f"negative node index in edge ({u}, {v})")
            if w <= 0:
                raise ValueError(f"nonpositive weight {w} on ({u}, {v})")
            if (u, v) in seen_ordered:
                raise ValueError(f"duplicate edge ({u}, {v})")
            seen_ordered.add((u, v))
            key = (min(u, v), max(u, v))
            if key in undirected and undirected[key] != w:
                raise ValueError(
                    f"conflicting weights for edge {key}: "
                    f"{undirected[key]} vs {w}")
            undirected[key] = w
    if not undirected:
        raise ValueError("edge list is empty")
    top = max(max(k) for k in undirected)
    if n is None:
        n = top + 1
    elif top >= n:
        raise ValueError(f"node index {top} exceeds n={n}")
    us = np.array([k[0] for k in undirected], dtype=np.int64)
    vs = np.array([k[1] for k in undirected], dtype=np.int64)
    ws = np.array(list(undirected.values()), dtype=np.float64)
    upper = sp.coo_matrix((ws, (us, vs)), shape=(n, n))
    return Graph((upper + upper.T).tocsr())


def write_edge_csv(path, g: Graph, one_based: bool = False) -> None:
    coo = sp.triu(g.weights, k=1).tocoo()
    off = 1 if one_based else 0
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["src", "dst", "weight"])
        for i in order:
            w.writerow([int(coo.row[i]) + off, int(coo.col[i]) + off,
                        repr(float(coo.data[i]))])


def read_coords_csv(path, n: int) -> np.ndarray:
    """Node coordinates `node,x,y` (any row order) for a graph of n nodes.

    Every node must appear exactly once.
    """
    coords = np.full((n, 2), np.nan, dtype=np.float64)
    with open(path, newline="") as fh:
        rows = iter(csv.reader(fh))
        first = next(rows, None)
        if first is not None and not _looks_like_header(first):
            rows = iter([first] + list(rows))
        for row in rows:
            if not row or not row[0].strip():
                continue
            node = int(row[0])
            if not 0 <= node < n:
                raise ValueError(f"node index {node} out of range")
            if not np.isnan(coords[node]).all():
                raise ValueError(f"duplicate coordinates for node {node}")
            coords[node] = (float(row[1]), float(row[2]))
    if np.isnan(coords).any():
        missing = int(np.flatnonzero(np.isnan(coords[:, 0]))[0])
        raise ValueError(f"no coordinates for node {missing}")
    return coords


def read_matrix_market(path) -> Graph:
    mat = scipy.io.mmread(str(path))
    mat = sp.csr_matrix(mat)
    if mat.diagonal().any():
        raise ValueError("matrix has nonzero diagonal entries; self loops "
                         "are not supported")
    return Graph(mat)


# ---------------------------------------------------------------------------
# signals and matrices


def read_signal_csv(path) -> np.ndarray:
    vals = []
    with open(path, newline="") as fh:
        rows = iter(csv.reader(fh))
        first = next(rows, None)
        if first is None:
            raise ValueError("signal file is empty")
        if not _looks_like_header(first):
            vals.append(float(first[0]))
        for row in rows:
            if not row or not row[0].strip():
                continue
            vals.append(float(row[0]))
    if not vals:
        raise ValueError("signal file has no samples")
    return np.array(vals, dtype=np.float64)


def write_signal_csv(path, values) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["value"])
        for v in np.asarray(values, dtype=np.float64).ravel():
            w.writerow([repr(float(v))])


def read_matrix_csv(path) -> np.ndarray:
    arr = np.loadtxt(path, delimiter=",", dtype=np.float64)
    return np.atleast_2d(arr)


def write_matrix_csv(path, arr) -> None:
    np.savetxt(path, np.asarray(arr, dtype=np.float64),
               delimiter=",", fmt="%.17g")


# ---------------------------------------------------------------------------
# PGM images


def read_pgm(path) -> tuple[np.ndarray, int]:
    """Binary (P5) PGM. Returns (pixels as (rows, cols) uint array, maxval).

    16-bit data is big-endian per the format. Comment lines (#) in the
    header are skipped.
    """
    data = Path(path).read_bytes()
    pos = 0

    def token():
        nonlocal pos
        while pos < len(data):
            ch = data[pos:pos + 1]
            if ch == b"#":
                while pos < len(data) and data[pos:pos + 1] not in \
                        (b"\n", b"\r"):
                    pos += 1
            elif ch.isspace():
                pos += 1
            else:
                break
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        return data[start:pos]

    magic = token()
    if magic != b"P5":
        raise ValueError(f"not a binary PGM file (magic {magic!r})")
    width = int(token())
    height = int(token())
    maxval = int(token())
    if not 0 < maxval < 65536:
        raise ValueError(f"invalid maxval {maxval}")
    pos += 1  # single whitespace byte after maxval
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    count = width * height
    if len(data) - pos < count * dtype.itemsize:
        raise ValueError("PGM pixel data is truncated")
    raw = np.frombuffer(data, dtype=dtype, count=count, offset=pos)
    return raw.reshape(height, width).astype(np.int64), maxval


def write_pgm(path, img: np.ndarray, maxval: int = 255) -> None:
    """Binary (P5) PGM from an integer array already in [0, maxval]."""
    img = np.asarray(img)
    if img.ndim != 2:
        raise ValueError("PGM image must be 2D")
    if img.min() < 0 or img.max() > maxval:
        raise ValueError("pixel values exceed [0, maxval]")
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    header = f"P5\n{img.shape[1]} {img.shape[0]}\n{maxval}\n".encode()
    Path(path).write_bytes(header + img.astype(dtype).tobytes())


def normalize_pixels(raw: np.ndarray, maxval: int) -> np.ndarray:
    """Map integer pixels to (0, 1) via (x + 1/2) / (maxval + 1), keeping
    every level strictly inside the unit interval."""
    return (np.asarray(raw, dtype=np.float64) + 0.5) / (maxval + 1)


def quantize_pixels(x: np.ndarray, maxval: int) -> np.ndarray:
    """Inverse of normalize_pixels up to clipping."""
    v = np.floor(np.asarray(x, dtype=np.float64) * (maxval + 1))
    return np.clip(v, 0, maxval).astype(np.int64)


# ---------------------------------------------------------------------------
# JSON reports


def write_json_report(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
