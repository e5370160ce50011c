"""Hierarchical graph-signal dictionaries with best-basis search.

A graph signal is expanded over a multiscale dictionary organized by a
recursive bipartition of the node set; several orthonormal bases live
inside the dictionary and the search routines pick the cheapest one for a
given additive cost. Images get the tensor-product treatment with an
enlarged, four-way adapted search.
"""

from .bestbasis import (ENUMERATION_LIMIT, best_basis_cw, eghwt_best_basis,
                        eghwt_stage_tables, enumerate_onbs,
                        exhaustive_best_basis)
from .errors import (ConvergenceFailure, DisconnectedImageGraph, EghwtError,
                     FictitiousKey, InvalidTiling, MalformedTree,
                     NotConnected, TooLarge, ZeroDegreeNode)
from .ghwt import (BasisSpec, CoeffTable, CostFunction, basis_cost,
                   cost_eval, f2c_view, ghwt_analyze, ghwt_basis_vector,
                   haar_basis, level_basis, synthesize, walsh_basis)
from .graph import (Graph, LaplacianKind, bipartition_by_fiedler,
                    fiedler_vector, graph_from_edges, induced_subgraph,
                    laplacian, path_graph)
from .imaging import (ApproxReport, PixelAffinityConfig, error_curve,
                      image_to_graph, psnr, top_k_approximation)
from .partition import (BalanceWarning, PartitionTree, RawTree,
                        build_partition_tree_midpoint,
                        build_partition_tree_ptv,
                        build_partition_tree_spectral, relabel_tree,
                        validate_tree)
from .tensor2d import (TensorBasisSpec, TensorCoeffTable, cw2d_best_basis,
                       eghwt2d_best_basis, haar2d_basis, level2d_basis,
                       tensor_analyze, tensor_product_basis,
                       tensor_synthesize, walsh2d_basis)

__version__ = "0.1.0"

__all__ = [
    "ApproxReport",
    "BalanceWarning",
    "BasisSpec",
    "CoeffTable",
    "ConvergenceFailure",
    "CostFunction",
    "DisconnectedImageGraph",
    "EghwtError",
    "ENUMERATION_LIMIT",
    "FictitiousKey",
    "Graph",
    "InvalidTiling",
    "LaplacianKind",
    "MalformedTree",
    "NotConnected",
    "PartitionTree",
    "PixelAffinityConfig",
    "RawTree",
    "TensorBasisSpec",
    "TensorCoeffTable",
    "TooLarge",
    "ZeroDegreeNode",
    "basis_cost",
    "best_basis_cw",
    "bipartition_by_fiedler",
    "build_partition_tree_midpoint",
    "build_partition_tree_ptv",
    "build_partition_tree_spectral",
    "cost_eval",
    "cw2d_best_basis",
    "eghwt2d_best_basis",
    "eghwt_best_basis",
    "eghwt_stage_tables",
    "enumerate_onbs",
    "error_curve",
    "exhaustive_best_basis",
    "f2c_view",
    "fiedler_vector",
    "ghwt_analyze",
    "ghwt_basis_vector",
    "graph_from_edges",
    "haar2d_basis",
    "haar_basis",
    "image_to_graph",
    "induced_subgraph",
    "laplacian",
    "level2d_basis",
    "level_basis",
    "path_graph",
    "psnr",
    "relabel_tree",
    "synthesize",
    "tensor_analyze",
    "tensor_product_basis",
    "tensor_synthesize",
    "top_k_approximation",
    "validate_tree",
    "walsh2d_basis",
    "walsh_basis",
]
