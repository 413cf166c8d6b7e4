"""Undirected graphs with self-loops, degree statistics and edge-list I/O."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

log = logging.getLogger(__name__)


class ParseError(ValueError):
    """Malformed input file."""


class IngestionError(ValueError):
    """Input refers to nodes that do not exist in the graph."""


@dataclass(frozen=True)
class SparseGraph:
    """Undirected graph on nodes ``0..n-1`` stored as sorted pairs ``i <= j``.

    A self-loop ``(i, i)`` adds 1 to the degree of ``i``, so degrees are the
    row sums of the adjacency matrix.
    """

    n: int
    edges: np.ndarray
    labels: tuple | None = None
    degrees: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        e = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        if e.size:
            e = np.sort(e, axis=1)
            e = np.unique(e, axis=0)
            if e.min() < 0 or e.max() >= self.n:
                raise ValueError(f"edge endpoint outside [0, {self.n})")
        e.setflags(write=False)
        object.__setattr__(self, "edges", e)
        deg = np.bincount(e[:, 0], minlength=self.n)
        off = e[:, 0] != e[:, 1]
        deg += np.bincount(e[off, 1], minlength=self.n)
        deg.setflags(write=False)
        object.__setattr__(self, "degrees", deg)

    @classmethod
    def from_pairs(cls, n: int, pairs, labels=None) -> "SparseGraph":
        return cls(n, np.asarray(list(pairs), dtype=np.int64).reshape(-1, 2), labels)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_loops(self) -> int:
        return int(np.count_nonzero(self.edges[:, 0] == self.edges[:, 1]))

    @property
    def d_max(self) -> int:
        return int(self.degrees.max()) if self.n else 0

    def edge_set(self) -> set[tuple[int, int]]:
        return {(int(i), int(j)) for i, j in self.edges}

    def adjacency(self) -> sp.csr_matrix:
        """Symmetric 0/1 adjacency, loops on the diagonal with value 1."""
        i, j = self.edges[:, 0], self.edges[:, 1]
        off = i != j
        rows = np.concatenate([i, j[off]])
        cols = np.concatenate([j, i[off]])
        data = np.ones(len(rows))
        return sp.csr_matrix((data, (rows, cols)), shape=(self.n, self.n))

    def dense(self) -> np.ndarray:
        return self.adjacency().toarray()

    def without_loops(self) -> "SparseGraph":
        keep = self.edges[:, 0] != self.edges[:, 1]
        return SparseGraph(self.n, self.edges[keep], self.labels)

    def subgraph(self, nodes) -> "SparseGraph":
        """Induced subgraph; ``nodes`` gives the new ordering."""
        nodes = np.asarray(nodes, dtype=np.int64)
        remap = np.full(self.n, -1, dtype=np.int64)
        remap[nodes] = np.arange(len(nodes))
        e = remap[self.edges]
        e = e[(e >= 0).all(axis=1)]
        labels = None if self.labels is None else tuple(self.labels[k] for k in nodes)
        return SparseGraph(len(nodes), e, labels)


def degrees(g) -> tuple[np.ndarray, float]:
    """Degree vector and maximum degree.

    Accepts a :class:`SparseGraph` (integer counts) or a dense symmetric
    matrix, in which case the real-valued row sums are returned.
    """
    if isinstance(g, SparseGraph):
        return g.degrees, g.d_max
    a = check_symmetric(g)
    d = a.sum(axis=1)
    return d, float(d.max()) if len(d) else 0.0


def check_symmetric(a, tol: float = 0.0) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    asym = np.abs(a - a.T).max() if a.size else 0.0
    if asym > tol:
        raise ValueError(f"matrix is not symmetric (max asymmetry {asym:.3g})")
    return a


def _data_lines(path):
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            yield lineno, line


def read_edge_list(path, n: int | None = None) -> SparseGraph:
    """Read whitespace-separated node pairs.

    Labels are mapped to ids ``0..n-1`` in order of first appearance and the
    map is kept in ``graph.labels``. When ``n`` is given, labels must be
    integers in ``[0, n)`` and are used as ids directly, so isolated nodes
    survive a write/read round trip.
    """
    pairs = []
    index: dict[str, int] = {}
    for lineno, line in _data_lines(path):
        tokens = line.split()
        if len(tokens) != 2:
            raise ParseError(f"{path}:{lineno}: expected 2 tokens, got {len(tokens)}")
        if n is None:
            ids = [index.setdefault(t, len(index)) for t in tokens]
        else:
            try:
                ids = [int(t) for t in tokens]
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: non-integer node id") from exc
            if min(ids) < 0 or max(ids) >= n:
                raise ParseError(f"{path}:{lineno}: node id outside [0, {n})")
        pairs.append(ids)
    if n is None:
        return SparseGraph.from_pairs(len(index), pairs, labels=tuple(index))
    return SparseGraph.from_pairs(n, pairs, labels=tuple(str(k) for k in range(n)))


def write_edge_list(g: SparseGraph, path, use_labels: bool = False) -> None:
    """One ``i j`` pair per line, ``i <= j``, sorted."""
    with open(path, "w", encoding="utf-8") as fh:
        for i, j in g.edges:
            if use_labels and g.labels is not None:
                fh.write(f"{g.labels[i]} {g.labels[j]}\n")
            else:
                fh.write(f"{i} {j}\n")


@dataclass
class Circles:
    """Ground-truth communities read from a circles file."""

    Z: np.ndarray
    names: list[str]
    uncovered: list[int]
    dropped_ids: list[str] = field(default_factory=list)


def read_circles(path, g: SparseGraph, strict: bool = True) -> Circles:
    """Read ``name<TAB>id id ...`` lines into a binary membership matrix.

    Ids are resolved through ``g.labels``. Unknown ids raise
    :class:`IngestionError` unless ``strict`` is false, in which case they are
    skipped and listed in ``dropped_ids``. Nodes in no circle are reported in
    ``uncovered``; the caller decides whether to drop them.
    """
    labels = g.labels if g.labels is not None else tuple(str(k) for k in range(g.n))
    index = {str(lab): k for k, lab in enumerate(labels)}
    names, columns, dropped = [], [], []
    for lineno, line in _data_lines(path):
        tokens = line.split()
        names.append(tokens[0])
        col = np.zeros(g.n, dtype=np.int8)
        for t in tokens[1:]:
            if t not in index:
                if strict:
                    raise IngestionError(f"{path}:{lineno}: unknown node id {t!r}")
                dropped.append(t)
                continue
            col[index[t]] = 1
        columns.append(col)
    Z = np.column_stack(columns) if columns else np.zeros((g.n, 0), dtype=np.int8)
    uncovered = np.flatnonzero(Z.sum(axis=1) == 0).tolist()
    if dropped:
        log.info("skipped %d circle entries with unknown ids", len(dropped))
    return Circles(Z, names, uncovered, dropped)
