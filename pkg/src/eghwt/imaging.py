"""Pixel-affinity graphs, sparse-approximation reports, and image metrics."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import DisconnectedImageGraph
from .ghwt import ghwt_analyze, synthesize
from .graph import Graph
from .tensor2d import TensorBasisSpec, tensor_analyze, tensor_synthesize


@dataclass(frozen=True)
class PixelAffinityConfig:
    """How pixel pairs are weighted when an image becomes a graph.

    Pixels closer than `radius` (strict, Euclidean, in pixel units) are
    joined by an edge of weight

        exp(-dist(features)^2 / sigma_feature)
        * exp(-dist(position)^2 / sigma_position)

    sigma_position = inf drops the spatial factor entirely. Features
    default to the raw intensities (or channel vectors) of the two pixels;
    image_to_graph accepts a replacement feature image.
    """

    radius: float = 5.0
    sigma_feature: float = 0.005
    sigma_position: float = math.inf

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        if self.sigma_feature <= 0 or self.sigma_position <= 0:
            raise ValueError("sigma values must be positive")


def _neighbor_offsets(radius: float) -> list[tuple[int, int]]:
    r = int(math.ceil(radius))
    out = []
    for dr in range(0, r + 1):
        for dc in range(-r, r + 1):
            if dr == 0 and dc <= 0:
                continue
            if dr * dr + dc * dc < radius * radius:
                out.append((dr, dc))
    return out


def image_to_graph(img: np.ndarray,
                   config: PixelAffinityConfig | None = None,
                   features: np.ndarray | None = None) -> Graph:
    """Affinity graph of an image, pixels in row-major order.

    `features`, when given, replaces the intensities in the feature
    distance; it must share the image's height and width. Emits a
    DisconnectedImageGraph warning if the radius leaves the graph
    disconnected (all in-radius weights are positive, so that only happens
    when the radius excludes every pair).
    """
    config = config or PixelAffinityConfig()
    img = np.asarray(img, dtype=np.float64)
    if img.ndim not in (2, 3):
        raise ValueError("image must be 2D or 2D multichannel")
    feat = img if features is None else np.asarray(features,
                                                   dtype=np.float64)
    if feat.shape[:2] != img.shape[:2]:
        raise ValueError("feature image shape does not match the image")
    if feat.ndim == 2:
        feat = feat[:, :, None]
    m, n = feat.shape[:2]
    rows_list, cols_list, w_list = [], [], []
    ids = np.arange(m * n, dtype=np.int64).reshape(m, n)
    for dr, dc in _neighbor_offsets(config.radius):
        if dr >= m or abs(dc) >= n:
            continue
        src_r = slice(0, m - dr)
        dst_r = slice(dr, m)
        if dc >= 0:
            src_c = slice(0, n - dc)
            dst_c = slice(dc, n)
        else:
            src_c = slice(-dc, n)
            dst_c = slice(0, n + dc)
        a = ids[src_r, src_c].ravel()
        b = ids[dst_r, dst_c].ravel()
        df = feat[src_r, src_c] - feat[dst_r, dst_c]
        d2 = np.einsum("ijk,ijk->ij", df, df).ravel()
        w = np.exp(-d2 / config.sigma_feature)
        if math.isfinite(config.sigma_position):
            w = w * math.exp(-(dr * dr + dc * dc) / config.sigma_position)
        rows_list.append(a)
        cols_list.append(b)
        w_list.append(w)
    if rows_list:
        r = np.concatenate(rows_list)
        c = np.concatenate(cols_list)
        w = np.concatenate(w_list)
        upper = sp.coo_matrix((w, (r, c)), shape=(m * n, m * n))
        weights = (upper + upper.T).tocsr()
    else:
        weights = sp.csr_matrix((m * n, m * n))
    rr, cc = np.divmod(np.arange(m * n), n)
    g = Graph(weights, coords=np.column_stack([cc, -rr]).astype(np.float64))
    if m * n > 1 and not g.is_connected():
        warnings.warn("image affinity graph is disconnected",
                      DisconnectedImageGraph)
    return g


def psnr(reference: np.ndarray, test: np.ndarray) -> float:
    """Peak signal-to-noise ratio in dB, peak taken from the reference.

    Identical inputs report +inf.
    """
    reference = np.asarray(reference, dtype=np.float64)
    test = np.asarray(test, dtype=np.float64)
    if reference.shape != test.shape:
        raise ValueError("shape mismatch")
    mse = float(np.mean((reference - test) ** 2))
    if mse == 0.0:
        return math.inf
    peak = float(np.max(reference))
    if peak == 0.0:
        return -math.inf
    return 10.0 * math.log10(peak * peak / mse)


# ---------------------------------------------------------------------------
# sparse approximation


def _aligned_values(keys, coeffs) -> np.ndarray:
    if hasattr(coeffs, "keys") and hasattr(coeffs, "__getitem__"):
        vals = [coeffs[key] for key in keys]
    else:
        vals = list(np.asarray(coeffs, dtype=np.float64).ravel())
        if len(vals) != len(keys):
            raise ValueError("coefficient count does not match basis size")
    return np.array(vals, dtype=np.float64)


def _rank_order(keys, vals: np.ndarray) -> list[int]:
    # largest magnitude first; equal magnitudes settle by key
    return sorted(range(vals.size), key=lambda i: (-abs(vals[i]), keys[i]))


def _synthesize_keys(basis, keys, vals):
    coeffs = dict(zip(keys, vals))
    if isinstance(basis, TensorBasisSpec):
        return tensor_synthesize(keys, coeffs, basis.row_tree,
                                 basis.col_tree)
    return synthesize(keys, coeffs, basis.tree)


def top_k_approximation(basis, coeffs, k: int):
    """Approximant keeping the k largest-magnitude coefficients.

    `basis` is a BasisSpec or TensorBasisSpec, `coeffs` a mapping or a
    sequence aligned with its sorted keys. Magnitude ties rank by key so
    the selection is deterministic. Returns (approximant, residual norm)
    with residual^2 = sum of the dropped coefficients squared.
    """
    keys = basis.sorted_keys()
    vals = _aligned_values(keys, coeffs)
    if not 0 <= k <= vals.size:
        raise ValueError(f"k={k} out of range for {vals.size} coefficients")
    order = _rank_order(keys, vals)
    kept = order[:k]
    dropped = order[k:]
    residual = math.sqrt(math.fsum(float(vals[i]) ** 2 for i in dropped))
    approx = _synthesize_keys(basis, [keys[i] for i in kept], vals[kept])
    return approx, residual


@dataclass
class ApproxReport:
    """One basis's approximation-error curve, with optional PSNR samples."""

    name: str
    fractions: tuple[float, ...]
    errors: tuple[float, ...]
    psnr_fractions: tuple[float, ...] | None = field(default=None)
    psnrs: tuple[float, ...] | None = field(default=None)

    def rows(self):
        return list(zip(self.fractions, self.errors))


def _keep_count(fraction: float, n: int) -> int:
    return min(int(math.floor(fraction * n + 0.5)), n)


def _tail_errors(vals: np.ndarray, fractions) -> tuple[float, ...]:
    energy = np.sort(vals * vals)[::-1]
    prefix = np.concatenate([[0.0], np.cumsum(energy)])
    total = float(prefix[-1])
    out = []
    for f in fractions:
        k = _keep_count(f, energy.size)
        if total <= 0.0:
            out.append(0.0)
        else:
            rem = max(total - float(prefix[k]), 0.0)
            out.append(math.sqrt(rem / total))
    return tuple(out)


DEFAULT_FRACTION_GRID = tuple(np.round(np.arange(0, 101) / 100,
                                       2).tolist())


def error_curve(f: np.ndarray, bases, fractions=None, psnr_fractions=None,
                exclude_dc: bool = False) -> list[ApproxReport]:
    """Relative l2 error versus fraction of coefficients kept, per basis.

    `bases` is a list of (name, BasisSpec or TensorBasisSpec) pairs over
    trees of the right size for f. The fraction grid defaults to steps of
    0.01. When `psnr_fractions` is given, the approximant is synthesized at
    each of those fractions and compared against f in PSNR. `exclude_dc`
    drops the global scaling coefficient from the ranking and the energy
    (display parity for plots that show detail coefficients only).
    """
    f = np.asarray(f, dtype=np.float64)
    if fractions is None:
        fractions = DEFAULT_FRACTION_GRID
    fractions = tuple(float(x) for x in fractions)
    if any(not 0 <= x <= 1 for x in fractions):
        raise ValueError("fractions must lie in [0, 1]")
    tables: dict = {}
    reports = []
    for name, basis in bases:
        if isinstance(basis, TensorBasisSpec):
            src_key = (id(basis.row_tree), id(basis.col_tree))
            if src_key not in tables:
                tables[src_key] = tensor_analyze(f, basis.row_tree,
                                                 basis.col_tree)
            dc_key = ((0, 0, 0), (0, 0, 0))
        else:
            src_key = id(basis.tree)
            if src_key not in tables:
                tables[src_key] = ghwt_analyze(f, basis.tree)
            dc_key = (0, 0, 0)
        vals = basis.coefficients(tables[src_key])
        keys = basis.sorted_keys()
        if exclude_dc and dc_key in basis:
            keep = [i for i, key in enumerate(keys) if key != dc_key]
            keys = [keys[i] for i in keep]
            vals = vals[keep]
        errors = _tail_errors(vals, fractions)
        psnrs = None
        if psnr_fractions is not None:
            samples = []
            for frac in psnr_fractions:
                approx, _ = top_k_approximation(
                    basis, basis.coefficients(tables[src_key]),
                    _keep_count(float(frac), len(basis)))
                samples.append(psnr(f, approx))
            psnrs = tuple(samples)
        reports.append(ApproxReport(
            name=name, fractions=fractions, errors=errors,
            psnr_fractions=(tuple(float(x) for x in psnr_fractions)
                            if psnr_fractions is not None else None),
            psnrs=psnrs))
    return reports
