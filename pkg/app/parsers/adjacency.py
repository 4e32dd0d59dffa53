"""Read and write adjacency edge lists."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pandas as pd

from app.errors import DataValidationError
from app.models import AdjacencyStructure

ADJACENCY_COLUMNS = ["i", "j"]


def read_adjacency(path: str | Path, n: int) -> AdjacencyStructure:
    """Build adjacency over ``n`` areas from an edge list of 0-based ids.

    Each line is an undirected edge. A file that lists any edge in both
    directions is read as a directed listing and must then be symmetric.
    """
    path = Path(path)
    frame = pd.read_csv(path)
    missing = [c for c in ADJACENCY_COLUMNS if c not in frame.columns]
    if missing:
        raise DataValidationError(f"{path}: missing columns {missing}")
    if frame[ADJACENCY_COLUMNS].isna().any().any():
        raise DataValidationError(f"{path}: missing values")
    pairs = frame[ADJACENCY_COLUMNS].astype(np.int64).to_numpy()
    if pairs.size and (pairs.min() < 0 or pairs.max() >= n):
        raise DataValidationError(f"{path}: ids must lie in 0..{n - 1}")
    if np.any(pairs[:, 0] == pairs[:, 1]):
        raise DataValidationError(f"{path}: self-loops are not allowed")

    directed = np.zeros((n, n), dtype=bool)
    directed[pairs[:, 0], pairs[:, 1]] = True
    if np.any(directed & directed.T) and not np.array_equal(directed, directed.T):
        raise DataValidationError(f"{path}: adjacency lists some edges in one direction only")
    return AdjacencyStructure(directed | directed.T)


def adjacency_to_frame(adj: AdjacencyStructure) -> pd.DataFrame:
    """Undirected edge list with i < j."""
    return pd.DataFrame(adj.edges(), columns=ADJACENCY_COLUMNS)
