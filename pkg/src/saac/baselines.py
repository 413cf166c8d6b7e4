"""Comparison methods: normalized spectral clustering and a simplified OCCAM."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from sklearn.cluster import KMeans

from .graph import SparseGraph
from .solver import SaacError, kmeanspp_init
from .spectra import DENSE_MAX_N, fixed_k_select


@dataclass
class BaselineResult:
    Z: np.ndarray
    method: str
    memberships: np.ndarray | None = None


def _row_normalize(M: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(M, axis=1, keepdims=True)
    return np.divide(M, norms, out=np.zeros_like(M), where=norms > 0)


def _one_hot(labels, K) -> np.ndarray:
    Z = np.zeros((len(labels), K), dtype=np.int8)
    Z[np.arange(len(labels)), labels] = 1
    return Z


def normalized_adjacency_embedding(g: SparseGraph, K: int) -> np.ndarray:
    """Top-``K`` (algebraic) eigenvectors of ``D^-1/2 A D^-1/2``; isolated nodes get 0."""
    d = g.degrees.astype(float)
    inv = np.divide(1.0, np.sqrt(d), out=np.zeros_like(d), where=d > 0)
    Dm = sp.diags(inv)
    N = Dm @ g.adjacency() @ Dm
    if g.n <= DENSE_MAX_N or K >= g.n - 1:
        vals, vecs = np.linalg.eigh(N.toarray())
        return vecs[:, ::-1][:, :K]
    v0 = np.random.default_rng(0).standard_normal(g.n)
    vals, vecs = spla.eigsh(N, k=K, which="LA", tol=1e-8, v0=v0)
    return vecs[:, np.argsort(-vals)]


def spectral_clustering(g: SparseGraph, K: int, seed=0, n_init: int = 10) -> BaselineResult:
    """Hard partition by k-means on the row-normalized normalized-adjacency embedding."""
    if K < 1:
        raise ValueError("K must be at least 1")
    E = _row_normalize(normalized_adjacency_embedding(g, K))
    active = g.degrees > 0
    if len(np.unique(E[active], axis=0)) < K:
        raise SaacError(f"fewer than {K} distinct embedded rows")
    km = KMeans(n_clusters=K, init="k-means++", n_init=n_init, random_state=seed).fit(E[active])
    labels = np.empty(g.n, dtype=np.int64)
    labels[active] = km.labels_
    if (~active).any():
        d2 = ((E[~active, None, :] - km.cluster_centers_[None]) ** 2).sum(axis=2)
        labels[~active] = d2.argmin(axis=1)
    return BaselineResult(_one_hot(labels, K), "sc")


def k_median(E: np.ndarray, K: int, rng, max_iters: int = 100) -> tuple[np.ndarray, np.ndarray, float]:
    """Euclidean assignment with coordinate-wise median centers."""
    C = kmeanspp_init(E, K, None, rng)
    labels = None
    for _ in range(max_iters):
        dist = np.linalg.norm(E[:, None, :] - C[None], axis=2)
        new = dist.argmin(axis=1)
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        for k in range(K):
            members = E[labels == k]
            if len(members):
                C[k] = np.median(members, axis=0)
    dist = np.linalg.norm(E[:, None, :] - C[None], axis=2)
    return C, dist.argmin(axis=1), float(dist.min(axis=1).sum())


def occam_baseline(g: SparseGraph, K: int, seed=0, n_init: int = 10) -> BaselineResult:
    """Simplified OCCAM spectral method.

    Row-normalized ``U |Lambda|^(1/2)`` is clustered by k-median; each row is
    projected on the centroids, clipped at zero and normalized, and entries of
    at least ``1 / (2 sqrt(K))`` become memberships (argmax if none does).
    Not the original thresholding rule.
    """
    emb = fixed_k_select(g, K)
    E = _row_normalize(emb.U * np.sqrt(np.abs(emb.eigenvalues)))
    if len(np.unique(E, axis=0)) < K:
        raise SaacError(f"fewer than {K} distinct embedded rows")
    best = None
    for child in np.random.SeedSequence(seed).spawn(n_init):
        C, _, cost = k_median(E, K, np.random.default_rng(child))
        if best is None or cost < best[1]:
            best = (C, cost)
    C = best[0]
    theta = np.clip(E @ np.linalg.pinv(C), 0.0, None)
    theta = _row_normalize(theta)
    Z = (theta >= 1 / (2 * np.sqrt(K))).astype(np.int8)
    empty = Z.sum(axis=1) == 0
    Z[empty, np.argmax(theta[empty], axis=1)] = 1
    return BaselineResult(Z, "occam", theta)
