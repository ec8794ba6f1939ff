import numpy as np
import pytest
import scipy.sparse as sp

from opdyn.graph import InfluenceMatrix


def random_row_stochastic(rng: np.random.Generator, n: int, max_degree: int = 5) -> InfluenceMatrix:
    """Random sparse row-stochastic matrix with 1..max_degree entries per row."""
    rows, cols, vals = [], [], []
    for i in range(n):
        deg = int(rng.integers(1, max_degree + 1))
        nbrs = rng.choice(n, size=min(deg, n), replace=False)
        w = rng.uniform(0.1, 1.0, size=len(nbrs))
        w /= w.sum()
        rows.extend([i] * len(nbrs))
        cols.extend(int(c) for c in nbrs)
        vals.extend(float(v) for v in w)
    mat = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    return InfluenceMatrix(mat)


@pytest.fixture
def rng():
    return np.random.default_rng(97)
