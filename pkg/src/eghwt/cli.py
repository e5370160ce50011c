"""Command-line interface.

Subcommands:
  partition    build and save a hierarchical partition tree
  bestbasis    compare the fixed and adapted bases under one cost
  approximate  sparse-approximation error curves and reconstructions

Figures (PNG) are rendered next to the delimited outputs; matplotlib is
imported only here, with the Agg backend, so library use never needs a
display stack.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import traceback
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import formats
from .bestbasis import best_basis_cw, eghwt_best_basis, exhaustive_best_basis
from .errors import (ConvergenceFailure, EghwtError, FictitiousKey,
                     InvalidTiling, MalformedTree, NotConnected, TooLarge)
from .ghwt import (CostFunction, basis_cost, ghwt_analyze, haar_basis,
                   walsh_basis)
from .graph import Graph, path_graph
from .imaging import error_curve, psnr, top_k_approximation
from .partition import (PartitionTree, build_partition_tree_midpoint,
                        build_partition_tree_ptv,
                        build_partition_tree_spectral, validate_tree)
from .tensor2d import (TensorBasisSpec, cw2d_best_basis, eghwt2d_best_basis,
                       haar2d_basis, tensor_analyze, walsh2d_basis)

DEFAULT_FRACTIONS = (0.01, 0.02, 0.05, 0.1, 0.2, 0.5)
BASIS_ORDER = ("haar", "walsh", "c2f", "f2c", "eghwt")


def _cap_threads() -> None:
    raw = os.environ.get("EGHWT_THREADS")
    if not raw:
        return
    try:
        n = max(1, int(raw))
    except ValueError:
        return
    try:
        from threadpoolctl import threadpool_limits
        threadpool_limits(limits=n)
    except Exception:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                    "MKL_NUM_THREADS"):
            os.environ.setdefault(var, str(n))


@dataclass
class RunConfig:
    """Everything needed to reproduce one CLI invocation."""

    command: str
    source: str
    tree: str
    axis: str | None = None
    cost: str | None = None
    p: float | None = None
    threshold: float | None = None
    ptv_p: float | None = None
    fractions: tuple[float, ...] | None = None
    normalize: bool | None = None
    one_based: bool | None = None
    seed: int | None = None
    engine: str | None = None
    oracle: bool | None = None

    def save(self, out_dir: Path) -> None:
        data = {k: v for k, v in asdict(self).items() if v is not None}
        formats.write_json_report(out_dir / "run_config.json", data)


@dataclass
class _Problem:
    kind: str                      # "signal" or "image"
    source: str
    graph: Graph | None = None
    signal: np.ndarray | None = None
    image: np.ndarray | None = None
    maxval: int | None = None


def _load_problem(args, parser, need_signal: bool) -> _Problem:
    chosen = [name for name in ("graph", "mm", "image", "n")
              if getattr(args, name) is not None]
    if len(chosen) != 1:
        parser.error("exactly one of --graph/--mm/--image/--n is required")
    if args.image is not None:
        if args.signal is not None:
            parser.error("--signal does not apply to --image inputs")
        path = Path(args.image)
        if path.suffix.lower() == ".pgm":
            raw, maxval = formats.read_pgm(path)
            img = formats.normalize_pixels(raw, maxval) if args.normalize \
                else raw.astype(np.float64)
            return _Problem("image", str(path), image=img, maxval=maxval)
        img = formats.read_matrix_csv(path)
        return _Problem("image", str(path), image=img)
    if args.graph is not None:
        g = formats.read_edge_csv(args.graph, one_based=args.one_based)
        source = str(args.graph)
    elif args.mm is not None:
        g = formats.read_matrix_market(args.mm)
        source = str(args.mm)
    else:
        if args.n < 1:
            parser.error("--n must be a positive integer")
        g = path_graph(args.n)
        source = f"path:{args.n}"
    if args.coords is not None:
        g = Graph(g.weights, coords=formats.read_coords_csv(args.coords,
                                                            g.n))
    signal = None
    if args.signal is not None:
        signal = formats.read_signal_csv(args.signal)
        if signal.size != g.n:
            parser.error(f"signal has {signal.size} samples but the graph "
                         f"has {g.n} nodes")
    elif need_signal:
        if args.n is not None:
            rng = np.random.default_rng(args.seed)
            signal = rng.standard_normal(g.n)
        else:
            parser.error("this command needs --signal for graph inputs")
    return _Problem("signal", source, graph=g, signal=signal)


def _build_tree_1d(args, problem: _Problem, parser) -> PartitionTree:
    if args.tree == "spectral":
        return build_partition_tree_spectral(problem.graph)
    if args.tree == "midpoint":
        return build_partition_tree_midpoint(problem.graph.n)
    parser.error("--tree ptv applies only to --image inputs")


def _build_trees_2d(args, img: np.ndarray, parser):
    if args.tree == "midpoint":
        return (build_partition_tree_midpoint(img.shape[0]),
                build_partition_tree_midpoint(img.shape[1]))
    if args.tree == "ptv":
        return (build_partition_tree_ptv(img, axis="rows", p=args.ptv_p),
                build_partition_tree_ptv(img, axis="columns", p=args.ptv_p))
    parser.error("--tree spectral applies only to graph inputs")


def _make_cost(args) -> CostFunction:
    if args.cost == "lp":
        return CostFunction.lp(args.p)
    return CostFunction.l0(args.threshold)


def _report_violations(violations: list[str]) -> int:
    for v in violations:
        print(f"tree validation: {v}", file=sys.stderr)
    return 6 if violations else 0


# ---------------------------------------------------------------------------
# figures (matplotlib stays CLI-only, Agg backend)


def _figure_modules():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def _save_cost_figure(path: Path, totals: dict[str, float]) -> None:
    plt = _figure_modules()
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    names = [n for n in BASIS_ORDER if n in totals]
    ax.bar(names, [totals[n] for n in names], color="#4878cf")
    ax.set_ylabel("cost")
    ax.set_title("basis costs")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def _save_curve_figure(path: Path, fractions, curves: dict[str, np.ndarray],
                       ) -> None:
    plt = _figure_modules()
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for name in BASIS_ORDER:
        if name in curves:
            ax.plot(fractions, curves[name], marker="o", label=name)
    ax.set_xlabel("fraction of coefficients kept")
    ax.set_ylabel("relative l2 error")
    ax.set_title("approximation error")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


# ---------------------------------------------------------------------------
# shared basis computation


def _compute_bases_1d(table, cost):
    tree = table.tree
    out = {}
    for name, spec in (("haar", haar_basis(tree)),
                       ("walsh", walsh_basis(tree))):
        out[name] = (spec, basis_cost(spec, table, cost))
    for name in ("c2f", "f2c"):
        out[name] = best_basis_cw(table, name, cost)
    out["eghwt"] = eghwt_best_basis(table, cost)
    return out


def _tensor_total(spec: TensorBasisSpec, tc, cost) -> float:
    return math.fsum(cost.g(spec.coefficients(tc)).tolist())


def _compute_bases_2d(tc, cost, engine: str):
    out = {}
    for name, spec in (("haar", haar2d_basis(tc.row_tree, tc.col_tree)),
                       ("walsh", walsh2d_basis(tc.row_tree, tc.col_tree))):
        out[name] = (spec, _tensor_total(spec, tc, cost))
    for name in ("c2f", "f2c"):
        out[name] = cw2d_best_basis(tc, name, cost)
    out["eghwt"] = eghwt2d_best_basis(tc, cost, engine=engine)
    return out


def _basis_json_1d(name, spec, total, table):
    keys = spec.sorted_keys()
    vals = spec.coefficients(table)
    return {
        "name": name,
        "total_cost": total,
        "keys": [{"j": j, "k": k, "l": l, "coeff": float(v)}
                 for (j, k, l), v in zip(keys, vals)],
    }


def _basis_json_2d(name, spec, total, tc):
    keys = spec.sorted_keys()
    vals = spec.coefficients(tc)
    return {
        "name": name,
        "total_cost": total,
        "keys": [{"jr": jr, "kr": kr, "lr": lr,
                  "jc": jc, "kc": kc, "lc": lc, "coeff": float(v)}
                 for ((jr, kr, lr), (jc, kc, lc)), v in zip(keys, vals)],
    }


def _write_costs(out_dir: Path, totals: dict[str, float]) -> None:
    with open(out_dir / "costs.csv", "w", newline="") as fh:
        fh.write("basis,total_cost\n")
        for name in BASIS_ORDER:
            fh.write(f"{name},{totals[name]!r}\n")
    _save_cost_figure(out_dir / "costs.png", totals)


def _check_dominance(totals: dict[str, float]) -> int:
    bad = [name for name in ("haar", "walsh", "c2f", "f2c")
           if totals["eghwt"] > totals[name]]
    for name in bad:
        print(f"dominance violation: eghwt cost {totals['eghwt']!r} exceeds "
              f"{name} cost {totals[name]!r}", file=sys.stderr)
    return 6 if bad else 0


# ---------------------------------------------------------------------------
# subcommands


def cmd_partition(args, parser) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    problem = _load_problem(args, parser, need_signal=False)
    config = RunConfig(command="partition", source=problem.source,
                       tree=args.tree, axis=args.axis,
                       ptv_p=args.ptv_p if args.tree == "ptv" else None,
                       normalize=args.normalize if problem.kind == "image"
                       else None,
                       one_based=args.one_based or None)
    config.save(out_dir)
    if problem.kind == "image":
        row_tree, col_tree = _build_trees_2d(args, problem.image, parser)
        rc = 0
        if args.axis in ("rows", "both"):
            formats.save_tree_json(out_dir / "row_tree.json", row_tree)
            rc |= _report_violations(
                validate_tree(row_tree, problem.image.shape[0]))
            print(f"row tree: n={row_tree.n} jmax={row_tree.jmax}")
        if args.axis in ("columns", "both"):
            formats.save_tree_json(out_dir / "col_tree.json", col_tree)
            rc |= _report_violations(
                validate_tree(col_tree, problem.image.shape[1]))
            print(f"column tree: n={col_tree.n} jmax={col_tree.jmax}")
        return 6 if rc else 0
    tree = _build_tree_1d(args, problem, parser)
    formats.save_tree_json(out_dir / "tree.json", tree)
    rc = _report_violations(validate_tree(tree, problem.graph))
    print(f"tree: n={tree.n} jmax={tree.jmax}")
    return 6 if rc else 0


def cmd_bestbasis(args, parser) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    problem = _load_problem(args, parser, need_signal=True)
    cost = _make_cost(args)
    config = RunConfig(command="bestbasis", source=problem.source,
                       tree=args.tree, cost=args.cost,
                       p=args.p if args.cost == "lp" else None,
                       threshold=args.threshold if args.cost == "l0"
                       else None,
                       ptv_p=args.ptv_p if args.tree == "ptv" else None,
                       normalize=args.normalize if problem.kind == "image"
                       else None,
                       one_based=args.one_based or None,
                       seed=args.seed, engine=args.engine,
                       oracle=args.oracle or None)
    config.save(out_dir)
    if problem.kind == "image":
        if args.oracle:
            parser.error("--oracle applies only to 1D inputs")
        row_tree, col_tree = _build_trees_2d(args, problem.image, parser)
        formats.save_tree_json(out_dir / "row_tree.json", row_tree)
        formats.save_tree_json(out_dir / "col_tree.json", col_tree)
        tc = tensor_analyze(problem.image, row_tree, col_tree)
        bases = _compute_bases_2d(tc, cost, args.engine)
        totals = {}
        for name, (spec, total) in bases.items():
            totals[name] = total
            formats.write_json_report(
                out_dir / f"bestbasis_{name}.json",
                _basis_json_2d(name, spec, total, tc))
    else:
        tree = _build_tree_1d(args, problem, parser)
        formats.save_tree_json(out_dir / "tree.json", tree)
        table = ghwt_analyze(problem.signal, tree)
        bases = _compute_bases_1d(table, cost)
        totals = {}
        for name, (spec, total) in bases.items():
            totals[name] = total
            formats.write_json_report(
                out_dir / f"bestbasis_{name}.json",
                _basis_json_1d(name, spec, total, table))
        if args.oracle:
            ref_spec, ref_total = exhaustive_best_basis(table, cost)
            ok = ref_total == totals["eghwt"]
            print(f"oracle check: {'ok' if ok else 'MISMATCH'} "
                  f"(exhaustive={ref_total!r}, search={totals['eghwt']!r})")
            if not ok:
                return 6
    _write_costs(out_dir, totals)
    for name in BASIS_ORDER:
        print(f"{name}: cost={totals[name]!r}")
    return _check_dominance(totals)


def _fraction_tag(f: float) -> str:
    return f"{f:g}"


def _parse_fractions(raw, parser) -> tuple[float, ...]:
    if not raw:
        return DEFAULT_FRACTIONS
    vals = []
    for item in raw:
        for tok in str(item).split(","):
            tok = tok.strip()
            if tok:
                try:
                    vals.append(float(tok))
                except ValueError:
                    parser.error(f"bad fraction value: {tok!r}")
    if not vals:
        parser.error("--fraction needs at least one value")
    return tuple(vals)


def cmd_approximate(args, parser) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    problem = _load_problem(args, parser, need_signal=True)
    cost = _make_cost(args)
    fractions = _parse_fractions(args.fraction, parser)
    if any(not 0 <= f <= 1 for f in fractions):
        parser.error("--fraction values must lie in [0, 1]")
    config = RunConfig(command="approximate", source=problem.source,
                       tree=args.tree, cost=args.cost,
                       p=args.p if args.cost == "lp" else None,
                       threshold=args.threshold if args.cost == "l0"
                       else None,
                       ptv_p=args.ptv_p if args.tree == "ptv" else None,
                       fractions=fractions,
                       normalize=args.normalize if problem.kind == "image"
                       else None,
                       one_based=args.one_based or None,
                       seed=args.seed, engine=args.engine)
    config.save(out_dir)

    if problem.kind == "image":
        row_tree, col_tree = _build_trees_2d(args, problem.image, parser)
        formats.save_tree_json(out_dir / "row_tree.json", row_tree)
        formats.save_tree_json(out_dir / "col_tree.json", col_tree)
        tc = tensor_analyze(problem.image, row_tree, col_tree)
        bases = _compute_bases_2d(tc, cost, args.engine)
        coeff_source = tc
        reference = problem.image
    else:
        tree = _build_tree_1d(args, problem, parser)
        formats.save_tree_json(out_dir / "tree.json", tree)
        table = ghwt_analyze(problem.signal, tree)
        bases = _compute_bases_1d(table, cost)
        coeff_source = table
        reference = problem.signal

    sweep = [(name, bases[name][0]) for name in BASIS_ORDER]
    reports = error_curve(reference, sweep)
    curves: dict[str, tuple[float, ...]] = {}
    psnr_report: dict[str, dict[str, float]] = {}
    grid = None
    for report in reports:
        grid = report.fractions
        curves[report.name] = report.errors
        with open(out_dir / f"curve_{report.name}.csv", "w",
                  newline="") as fh:
            fh.write("fraction,error\n")
            for f, e in report.rows():
                fh.write(f"{f!r},{e!r}\n")
    total_coeffs = reference.size
    for name, (spec, _total) in bases.items():
        vals = spec.coefficients(coeff_source)
        psnr_report[name] = {}
        for f in fractions:
            k = min(int(math.floor(f * total_coeffs + 0.5)), len(spec))
            recon, _resid = top_k_approximation(spec, vals, k)
            psnr_report[name][_fraction_tag(f)] = psnr(reference, recon)
            tag = f"recon_{name}_f{_fraction_tag(f)}"
            if problem.kind == "image" and problem.maxval is not None:
                formats.write_pgm(
                    out_dir / f"{tag}.pgm",
                    formats.quantize_pixels(recon, problem.maxval),
                    problem.maxval)
            elif problem.kind == "image":
                formats.write_matrix_csv(out_dir / f"{tag}.csv", recon)
            else:
                formats.write_signal_csv(out_dir / f"{tag}.csv", recon)
    formats.write_json_report(out_dir / "psnr.json",
                              {"fractions": list(fractions),
                               "psnr_db": psnr_report})
    _save_curve_figure(out_dir / "error_curves.png", grid, curves)
    for name in BASIS_ORDER:
        line = ", ".join(
            f"{f:g}:{psnr_report[name][_fraction_tag(f)]:.2f}dB"
            for f in fractions)
        print(f"{name}: {line}")
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eghwt",
        description="hierarchical graph-signal dictionaries and adapted "
                    "bases")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    src = common.add_argument_group("input")
    src.add_argument("--graph", help="edge-list CSV (src,dst,weight)")
    src.add_argument("--mm", help="MatrixMarket adjacency file")
    src.add_argument("--image", help="PGM or CSV matrix")
    src.add_argument("--n", type=int, help="path graph with N nodes")
    src.add_argument("--signal", help="one-column CSV of node values")
    src.add_argument("--coords", help="node coordinates CSV (node,x,y)")
    src.add_argument("--one-based", action="store_true",
                     help="edge list counts nodes from 1")
    src.add_argument("--normalize", action=argparse.BooleanOptionalAction,
                     default=True,
                     help="map PGM pixels into (0,1) (default: on)")
    common.add_argument("--tree", choices=("spectral", "midpoint", "ptv"),
                        default="spectral",
                        help="partition strategy (default: spectral; images "
                             "accept midpoint/ptv)")
    common.add_argument("--ptv-p", type=float, default=3.0,
                        help="variation exponent for --tree ptv")
    common.add_argument("--seed", type=int, default=0,
                        help="seed for the synthetic --n signal")
    common.add_argument("--out", required=True, help="output directory")

    costp = argparse.ArgumentParser(add_help=False)
    costp.add_argument("--cost", choices=("lp", "l0"), default="lp")
    costp.add_argument("--p", type=float, default=1.0,
                       help="exponent for --cost lp (0 < p < 2)")
    costp.add_argument("--threshold", type=float, default=0.0,
                       help="magnitude cutoff for --cost l0")
    costp.add_argument("--engine", choices=("auto", "exact", "dense"),
                       default="auto", help="2D search engine")

    p_part = sub.add_parser("partition", parents=[common],
                            help="build and validate a partition tree")
    p_part.add_argument("--axis", choices=("rows", "columns", "both"),
                        default="both",
                        help="which image axis to partition")
    p_part.set_defaults(func=cmd_partition)

    p_best = sub.add_parser("bestbasis", parents=[common, costp],
                            help="compare haar/walsh/c2f/f2c/eghwt bases")
    p_best.add_argument("--oracle", action="store_true",
                        help="cross-check against exhaustive enumeration "
                             "(small 1D inputs)")
    p_best.set_defaults(func=cmd_bestbasis)

    p_apx = sub.add_parser("approximate", parents=[common, costp],
                           help="sparse approximation curves and "
                                "reconstructions")
    p_apx.add_argument("--fraction", nargs="+", metavar="F[,F...]",
                       help="fractions of coefficients to keep, comma or "
                            "space separated (default "
                            + ",".join(str(f) for f in DEFAULT_FRACTIONS)
                            + ")")
    p_apx.set_defaults(func=cmd_approximate)
    return parser


def main(argv=None) -> int:
    _cap_threads()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, parser)
    except TooLarge as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except NotConnected as e:
        print(f"error: graph is not connected: {e}", file=sys.stderr)
        return 4
    except ConvergenceFailure as e:
        print(f"error: {e}", file=sys.stderr)
        return 5
    except (MalformedTree, InvalidTiling, FictitiousKey) as e:
        print(f"error: {e}", file=sys.stderr)
        return 6
    except (OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except EghwtError as e:
        print(f"error: {e}", file=sys.stderr)
        return 7
    except Exception:
        traceback.print_exc()
        return 7


if __name__ == "__main__":
    sys.exit(main())
