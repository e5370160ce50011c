import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from eghwt import build_partition_tree_spectral, path_graph


@pytest.fixture(scope="session")
def p6():
    """Six-node path with its spectral tree and the worked-example signal."""
    g = path_graph(6)
    tree = build_partition_tree_spectral(g)
    f = np.array([2.0, -2.0, 1.0, 3.0, -1.0, -2.0])
    return g, tree, f
