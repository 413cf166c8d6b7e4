"""Stochastic blockmodel with overlaps: parameters, sampling and identifiability."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .graph import SparseGraph, check_symmetric

RANK_RTOL = 1e-8


class ModelError(ValueError):
    """Model parameters do not define a valid random graph."""


def validate_membership(Z) -> np.ndarray:
    Z = np.asarray(Z)
    if Z.ndim != 2:
        raise ModelError(f"membership matrix must be 2-d, got shape {Z.shape}")
    if not np.isin(Z, (0, 1)).all():
        raise ModelError("membership entries must be 0 or 1")
    empty = np.flatnonzero(Z.sum(axis=1) == 0)
    if len(empty):
        raise ModelError(f"nodes with no community: {empty[:10].tolist()}")
    return Z.astype(np.int8)


def log_alpha(n: int, exponent: float) -> float:
    """Degree parameter ``log(n) ** exponent`` (natural log)."""
    return math.log(n) ** exponent


@dataclass
class ModelConfig:
    """Generator parameters, persisted as flat ``key=value`` lines."""

    n: int
    K: int
    alpha: float
    B: np.ndarray
    p: float = 1.0
    m: int = 1

    def __post_init__(self):
        self.B = np.asarray(self.B, dtype=float).reshape(self.K, self.K)
        check_symmetric(self.B)
        if (self.B < 0).any():
            raise ModelError("connectivity matrix has negative entries")
        if self.alpha < 0:
            raise ModelError("alpha must be non-negative")

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"n={self.n}\nK={self.K}\nalpha={self.alpha!r}\n")
            fh.write(f"p={self.p!r}\nm={self.m}\n")
            fh.write("B=" + " ".join(repr(float(b)) for b in self.B.ravel()) + "\n")

    @classmethod
    def load(cls, path) -> "ModelConfig":
        kv = {}
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line and not line.startswith("#"):
                    key, _, value = line.partition("=")
                    kv[key.strip()] = value.strip()
        return cls(
            n=int(kv["n"]),
            K=int(kv["K"]),
            alpha=float(kv["alpha"]),
            B=np.array([float(x) for x in kv["B"].split()]),
            p=float(kv.get("p", 1.0)),
            m=int(kv.get("m", 1)),
        )


def expected_adjacency(Z, B, alpha: float | None = None, validate: bool = True) -> np.ndarray:
    """``A = (alpha / n) Z B Z^T``; ``alpha`` defaults to ``n``.

    Raises :class:`ModelError` naming the first entry outside ``[0, 1]``
    unless ``validate`` is false.
    """
    Z = np.asarray(Z, dtype=float)
    B = check_symmetric(B)
    n = Z.shape[0]
    if Z.shape[1] != B.shape[0]:
        raise ModelError(f"Z has {Z.shape[1]} columns but B is {B.shape[0]}x{B.shape[0]}")
    scale = 1.0 if alpha is None else alpha / n
    A = scale * (Z @ B @ Z.T)
    bad = np.argwhere((A < 0) | (A > 1)) if validate else ()
    if len(bad):
        i, j = bad[0]
        raise ModelError(f"A[{i},{j}] = {A[i, j]:.6g} is not a probability")
    return A


def sample_graph(A, seed) -> SparseGraph:
    """Independent Bernoulli(A_ij) edges for every pair ``i <= j``."""
    A = np.asarray(A, dtype=float)
    rng = np.random.default_rng(seed)
    i, j = np.triu_indices(A.shape[0])
    keep = rng.random(len(i)) < A[i, j]
    return SparseGraph(A.shape[0], np.column_stack([i[keep], j[keep]]))


def sample_sbmo(Z, B, alpha: float, seed) -> SparseGraph:
    return sample_graph(expected_adjacency(Z, B, alpha), seed)


def is_invertible(B, rtol: float = RANK_RTOL) -> bool:
    s = np.linalg.svd(np.asarray(B, dtype=float), compute_uv=False)
    return bool(len(s) and s[-1] > rtol * s[0])


def pure_nodes(Z) -> list[np.ndarray]:
    """Indices of the pure nodes of each community."""
    Z = np.asarray(Z)
    pure = Z.sum(axis=1) == 1
    return [np.flatnonzero(pure & (Z[:, k] == 1)) for k in range(Z.shape[1])]


@dataclass
class IdentifiabilityReport:
    sbmo1: bool
    sbmo2: bool
    sbm1: bool
    sbm2: bool
    pure_nodes_per_community: list[int]

    @property
    def identifiable(self) -> bool:
        return (self.sbmo1 and self.sbmo2) or (self.sbm1 and self.sbm2)


def check_identifiability(Z, B) -> IdentifiabilityReport:
    """Sufficient conditions for the SBMO to be identifiable.

    ``sbmo1``: B invertible. ``sbmo2``: every community has a pure node.
    ``sbm1``/``sbm2``: rows of B pairwise distinct / no node overlaps.
    """
    Z = np.asarray(Z)
    B = np.asarray(B, dtype=float)
    counts = [len(p) for p in pure_nodes(Z)]
    K = B.shape[0]
    distinct_rows = all(
        not np.array_equal(B[k], B[l]) for k, l in combinations(range(K), 2)
    )
    return IdentifiabilityReport(
        sbmo1=is_invertible(B),
        sbmo2=all(c > 0 for c in counts),
        sbm1=distinct_rows,
        sbm2=bool((Z.sum(axis=1) == 1).all()),
        pure_nodes_per_community=counts,
    )


def subcommunities(Z, B):
    """Distinct membership rows and the connectivity between them.

    Returns ``(T, K_prime, B_prime)`` with ``T`` sorted lexicographically and
    ``B_prime[y, z] = y B z^T``.
    """
    T = np.unique(np.asarray(Z, dtype=np.int8), axis=0)
    Tf = T.astype(float)
    return T, len(T), Tf @ np.asarray(B, dtype=float) @ Tf.T


@dataclass
class ScalingSummary:
    O: np.ndarray
    T: np.ndarray
    beta: np.ndarray
    L: np.ndarray
    L_max: float
    O_max: int
    n: int = field(default=0)

    @property
    def K(self) -> int:
        return self.O.shape[0]


def scaling_summary(Z, B) -> ScalingSummary:
    """Finite-n overlap matrix, subcommunity proportions and degree limits."""
    Z = np.asarray(Z, dtype=float)
    n = Z.shape[0]
    O = Z.T @ Z / n
    w = np.linalg.eigvalsh(O)
    if w[0] <= 1e-10 * w[-1]:
        raise ModelError("membership matrix is rank deficient (O not invertible)")
    T, inverse, counts = np.unique(Z.astype(np.int8), axis=0, return_inverse=True, return_counts=True)
    col_sums = Z.sum(axis=0)
    L = T.astype(float) @ np.asarray(B, dtype=float) @ col_sums / n
    return ScalingSummary(
        O=O,
        T=T,
        beta=counts / n,
        L=L,
        L_max=float(L.max()),
        O_max=int(T.sum(axis=1).max()),
        n=n,
    )


def generate_membership(n: int, K: int, p: float, m: int, seed) -> np.ndarray:
    """Random membership matrix with a fixed quota of pure nodes.

    Each community gets ``floor(p * n / K)`` pure nodes. Every other node
    gets a uniformly random support whose size is uniform on ``{2..m}``;
    with ``m == 1`` the leftover nodes are made pure in a random community.
    """
    if not 0 < p <= 1:
        raise ModelError(f"pure fraction p={p} outside (0, 1]")
    if not 1 <= m <= K:
        raise ModelError(f"max overlap m={m} outside [1, K={K}]")
    per = math.floor(p * n / K + 1e-9)
    if per * K > n or per == 0:
        raise ModelError(f"cannot place {per} pure nodes in each of {K} communities with n={n}")
    rng = np.random.default_rng(seed)
    Z = np.zeros((n, K), dtype=np.int8)
    Z[np.arange(per * K), np.repeat(np.arange(K), per)] = 1
    for i in range(per * K, n):
        size = 1 if m == 1 else int(rng.integers(2, m + 1))
        Z[i, rng.choice(K, size=size, replace=False)] = 1
    return Z


def normalize_rows(Z) -> np.ndarray:
    """Rows scaled to unit Euclidean norm (OCCAM-style memberships)."""
    Z = np.asarray(Z, dtype=float)
    return Z / np.linalg.norm(Z, axis=1, keepdims=True)


def two_community_overlap(n: int, s: float) -> np.ndarray:
    """Two communities: ``s*n`` pure nodes each, the rest in both."""
    if not 0 < s <= 0.5:
        raise ModelError(f"s={s} outside (0, 1/2]")
    pure = int(round(s * n))
    mixed = n - 2 * pure
    if mixed < 0:
        raise ModelError("pure blocks exceed n")
    Z = np.zeros((n, 2), dtype=np.int8)
    Z[:pure, 0] = 1
    Z[pure : pure + mixed] = 1
    Z[pure + mixed :, 1] = 1
    return Z


def save_membership(Z, path, header: dict | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for key, value in (header or {}).items():
            fh.write(f"# {key}={value}\n")
        for row in np.asarray(Z, dtype=int):
            fh.write(" ".join(map(str, row)) + "\n")


def load_membership(path) -> tuple[np.ndarray, dict]:
    rows, meta = [], {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                meta[key] = value
                continue
            rows.append([int(x) for x in line.split()])
    return np.array(rows, dtype=np.int8).reshape(len(rows), -1), meta
