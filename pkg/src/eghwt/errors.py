"""Exception and warning types shared across the package."""

from __future__ import annotations


class EghwtError(Exception):
    """Base class for errors raised by this package."""


class NotConnected(EghwtError):
    """The graph (or an induced subgraph that must be split) is disconnected
    in a context that requires connectivity."""


class ZeroDegreeNode(EghwtError):
    """A normalized Laplacian was requested for a graph with an isolated
    node (degree zero), so D^-1 does not exist."""


class ConvergenceFailure(EghwtError):
    """An iterative eigensolve did not reach the requested residual bound."""


class MalformedTree(EghwtError):
    """A hierarchical partition violates the structural rules (disjointness,
    coverage, parent/child bookkeeping, or singleton leaves)."""


class FictitiousKey(KeyError, EghwtError):
    """A (level, region, tag) key addresses a slot that does not exist for
    this tree (region index or tag never materialized)."""


class InvalidTiling(EghwtError):
    """A set of keys does not describe a subset of an orthonormal basis
    selectable from the dictionary."""


class TooLarge(EghwtError):
    """An exhaustive enumeration was requested beyond the supported size."""


class DisconnectedImageGraph(UserWarning):
    """Pixel-affinity construction produced a disconnected graph."""
