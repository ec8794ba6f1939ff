"""Edge-list ingestion and sparse row-stochastic influence matrices.

An influence matrix W is row-stochastic: W[i, j] > 0 means node j's
expressed opinion enters node i's update with that weight, and each row
sums to 1. Matrices are stored in CSR form so that memory and matrix-
vector products stay linear in the edge count.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import IO, Iterable

import numpy as np
import scipy.sparse as sp

from .errors import ParseError, ValidityError

# Row sums of a valid influence matrix may deviate from 1 by at most this.
ROW_SUM_TOL = 1e-12


class EdgeDirection(Enum):
    """Maps a stored arc (u, v) onto an influence direction.

    SOURCE_INFLUENCED_BY_TARGET reads "u follows v": v's opinion reaches
    u, so row u gets a weight in column v. This is the default for
    follower-style edge lists. TARGET_INFLUENCED_BY_SOURCE is the
    opposite reading (u broadcasts to v).
    """

    SOURCE_INFLUENCED_BY_TARGET = "source-influenced-by-target"
    TARGET_INFLUENCED_BY_SOURCE = "target-influenced-by-source"


@dataclass(frozen=True, eq=False)
class EdgeList:
    """A deduplicated directed edge list over densely re-indexed nodes.

    Attributes
    ----------
    sources, targets:
        Dense node indices in 0..node_count-1, one entry per stored arc.
        Self-edges are dropped during parsing; arcs are unique.
    node_count:
        Number of distinct nodes appearing in the surviving arcs.
    original_ids:
        original_ids[i] is the input id of dense node i (sorted ascending).
    dense_index:
        Inverse map, original id -> dense index.
    undirected:
        True when the input listed each link once and the parser expanded
        it into two arcs.
    """

    sources: np.ndarray
    targets: np.ndarray
    node_count: int
    original_ids: np.ndarray
    dense_index: dict[int, int] = field(repr=False)
    undirected: bool = False

    @property
    def arc_count(self) -> int:
        """Number of stored directed arcs."""
        return int(self.sources.shape[0])

    @property
    def edge_count(self) -> int:
        """Edge count in the input's native convention.

        Directed inputs: equals arc_count. Undirected inputs: number of
        distinct unordered pairs, i.e. arc_count / 2.
        """
        return self.arc_count // 2 if self.undirected else self.arc_count


@dataclass(frozen=True, eq=False)
class InfluenceMatrix:
    """Row-stochastic sparse matrix over N nodes, validated on construction.

    Every row holds at least one strictly positive weight in (0, 1] and
    sums to 1 within ROW_SUM_TOL. Instances are immutable and safe to
    share across concurrent simulation runs.
    """

    matrix: sp.csr_matrix

    def __post_init__(self):
        m = self.matrix
        if m.shape[0] != m.shape[1]:
            raise ValidityError(f"influence matrix must be square, got {m.shape}")
        row_nnz = np.diff(m.indptr)
        if (row_nnz == 0).any():
            empty = int(np.flatnonzero(row_nnz == 0)[0])
            raise ValidityError(f"row {empty} has no influencers")
        if m.nnz and (m.data <= 0.0).any():
            raise ValidityError("influence weights must be strictly positive")
        if m.nnz and (m.data > 1.0).any():
            raise ValidityError("influence weights must not exceed 1")
        sums = np.asarray(m.sum(axis=1)).ravel()
        bad = np.abs(sums - 1.0) > ROW_SUM_TOL
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise ValidityError(
                f"row {i} sums to {sums[i]!r}, not 1 within {ROW_SUM_TOL}"
            )

    @classmethod
    def from_coo(
        cls,
        n: int,
        rows: np.ndarray,
        cols: np.ndarray,
        weights: np.ndarray,
    ) -> "InfluenceMatrix":
        """Build and validate a matrix from coordinate data (no duplicates)."""
        mat = sp.csr_matrix(
            (np.asarray(weights, dtype=float), (rows, cols)), shape=(n, n)
        )
        mat.sort_indices()
        return cls(mat)

    @property
    def n(self) -> int:
        return int(self.matrix.shape[0])

    def dot(self, x: np.ndarray) -> np.ndarray:
        """W @ x."""
        return self.matrix @ x

    def transpose_dot(self, z: np.ndarray) -> np.ndarray:
        """W.T @ z (used by column-identity checks)."""
        return self.matrix.T @ z

    def column_sums(self) -> np.ndarray:
        return np.asarray(self.matrix.sum(axis=0)).ravel()


@dataclass(frozen=True)
class NetworkStats:
    """Count and density summary of an EdgeList."""

    node_count: int
    edge_count: int
    directed_arc_count: int
    mean_degree: float
    density: float
    undirected_input: bool

    def to_json(self) -> dict:
        """Plain dict ready for json.dumps.

        edge_count follows the input's native convention; for undirected
        inputs the expansion into directed arcs is visible through
        directed_arc_count.
        """
        return {
            "node_count": self.node_count,
            "edge_count": self.edge_count,
            "directed_arc_count": self.directed_arc_count,
            "mean_degree": self.mean_degree,
            "density": self.density,
            "undirected_input": self.undirected_input,
        }


def parse_edge_list(
    stream: IO[str] | Iterable[str],
    comment_prefix: str = "#",
    undirected: bool = False,
) -> EdgeList:
    """Parse a plain-text edge list into a deduplicated EdgeList.

    Each non-comment, non-blank line must hold two whitespace-separated
    non-negative integer node ids. Lines starting with ``comment_prefix``
    are skipped. Self-edges are dropped; duplicate arcs collapse to one.
    With ``undirected=True`` every input line contributes both arcs.

    Raises
    ------
    ParseError
        On a malformed line (with its 1-based line number), or when no
        edges survive cleanup ("no edges").
    """
    src: list[int] = []
    tgt: list[int] = []
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or line.startswith(comment_prefix):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ParseError(
                f"line {lineno}: expected two node ids, got {len(parts)} tokens"
            )
        try:
            u = int(parts[0])
            v = int(parts[1])
        except ValueError:
            raise ParseError(f"line {lineno}: non-integer node id in {line!r}") from None
        if u < 0 or v < 0:
            raise ParseError(f"line {lineno}: negative node id in {line!r}")
        src.append(u)
        tgt.append(v)

    if not src:
        raise ParseError("no edges")

    arcs = np.column_stack(
        [np.asarray(src, dtype=np.int64), np.asarray(tgt, dtype=np.int64)]
    )
    if undirected:
        arcs = np.vstack([arcs, arcs[:, ::-1]])
    arcs = arcs[arcs[:, 0] != arcs[:, 1]]
    if arcs.shape[0] == 0:
        raise ParseError("no edges")
    arcs = np.unique(arcs, axis=0)

    ids, dense = np.unique(arcs, return_inverse=True)
    dense = dense.reshape(arcs.shape)
    index = {int(orig): i for i, orig in enumerate(ids)}
    return EdgeList(
        sources=np.ascontiguousarray(dense[:, 0]),
        targets=np.ascontiguousarray(dense[:, 1]),
        node_count=int(ids.shape[0]),
        original_ids=ids,
        dense_index=index,
        undirected=undirected,
    )


def build_influence_matrix(
    edges: EdgeList,
    direction: EdgeDirection = EdgeDirection.SOURCE_INFLUENCED_BY_TARGET,
) -> InfluenceMatrix:
    """Construct the uniform-weight influence matrix of an edge list.

    Row i holds weight 1/d_i for each of node i's d_i influencers under
    the chosen direction convention. Nodes without influencers get a
    self-loop of weight 1, which keeps every row stochastic without
    deleting nodes.
    """
    n = edges.node_count
    if direction is EdgeDirection.SOURCE_INFLUENCED_BY_TARGET:
        rows, cols = edges.sources, edges.targets
    elif direction is EdgeDirection.TARGET_INFLUENCED_BY_SOURCE:
        rows, cols = edges.targets, edges.sources
    else:
        raise ValidityError(f"unknown edge direction {direction!r}")

    deg = np.bincount(rows, minlength=n)
    dangling = np.flatnonzero(deg == 0)
    r = np.concatenate([rows, dangling])
    c = np.concatenate([cols, dangling])
    d = deg.astype(float)
    d[dangling] = 1.0
    w = 1.0 / d[r]
    return InfluenceMatrix.from_coo(n, r, c, w)


def generate_regular(n: int, k: int) -> InfluenceMatrix:
    """Circulant k-regular network: node i links to i±1, ..., i±k/2 (mod n).

    Every weight is 1/k; the result is symmetric and doubly stochastic,
    which makes it the reference fixture for the mean-level theory.

    Raises
    ------
    ValidityError
        If n < 3, k is odd, or k is outside [2, n).
    """
    if n < 3:
        raise ValidityError(f"node count must be at least 3, got {n}")
    if k % 2 != 0:
        raise ValidityError(f"degree k must be even, got {k}")
    if not 2 <= k < n:
        raise ValidityError(f"degree k must satisfy 2 <= k < n, got k={k}, n={n}")

    half = k // 2
    offsets = np.concatenate([np.arange(1, half + 1), -np.arange(1, half + 1)])
    rows = np.repeat(np.arange(n, dtype=np.int64), k)
    cols = ((np.arange(n, dtype=np.int64)[:, None] + offsets[None, :]) % n).ravel()
    weights = np.full(n * k, 1.0 / k)
    return InfluenceMatrix.from_coo(n, rows, cols, weights)


def validate_doubly_stochastic(W: InfluenceMatrix, tol: float = ROW_SUM_TOL) -> bool:
    """True iff every column sum lies within tol of 1 (rows are guaranteed)."""
    return bool(np.max(np.abs(W.column_sums() - 1.0)) <= tol)


def network_stats(edges: EdgeList) -> NetworkStats:
    """Counts, mean degree, and density of an edge list.

    Density is directed_arc_count / (N * (N - 1)); for undirected inputs
    the doubled arcs make this the usual undirected density.
    """
    n = edges.node_count
    arcs = edges.arc_count
    return NetworkStats(
        node_count=n,
        edge_count=edges.edge_count,
        directed_arc_count=arcs,
        mean_degree=arcs / n,
        density=arcs / (n * (n - 1)),
        undirected_input=edges.undirected,
    )
