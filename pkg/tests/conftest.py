import numpy as np
import pytest

from app.models import AdjacencyStructure, FunctionalDataset


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def tiny_dataset():
    """Four areas on a path graph, two weekdays, three grid points."""
    y = np.array(
        [
            [[1.0, 1.2, 0.9], [1.1, 1.0, 1.0]],
            [[0.9, 1.1, 1.0], [1.0, 0.8, 1.1]],
            [[-1.0, -0.9, -1.2], [-1.1, -1.0, -0.8]],
            [[-0.8, -1.1, -1.0], [-1.0, -1.2, -0.9]],
        ]
    )
    return FunctionalDataset(
        y=y,
        grid=np.array([1.0, 2.0, 3.0]),
        w=np.ones((2, 1), dtype=np.int64),
        adjacency=AdjacencyStructure.from_edges(4, [(0, 1), (1, 2), (2, 3)]),
    )


def random_adjacency(n: int, rng: np.random.Generator, p: float = 0.4) -> AdjacencyStructure:
    upper = np.triu(rng.random((n, n)) < p, k=1)
    return AdjacencyStructure(upper | upper.T)
