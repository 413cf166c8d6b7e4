"""Alternating minimization of ``||U - Z X||_F^2`` over binary Z and real X."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .graph import SparseGraph
from .spectra import SpectralEmbedding, adaptive_select, fixed_k_select

SINGULAR_RTOL = 1e-10
ORACLE_MAX_CANDIDATES = 10**6


class RestartSignal(Exception):
    """Gram matrix of the membership estimate is singular."""


class SaacError(RuntimeError):
    def __init__(self, msg, state=None):
        super().__init__(msg)
        self.state = state


class NoSignalError(SaacError):
    pass


@dataclass
class SaacConfig:
    eps: float | None = None  # defaults to 1e-8 * n
    eta: float = 0.25
    r: float = 2.0
    m: int = 3
    max_iters: int = 200
    max_restarts: int = 5
    n_init: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.eps is not None and self.eps <= 0:
            raise ValueError("eps must be positive")
        if not 0 < self.eta < 0.5:
            raise ValueError("eta must lie in (0, 1/2)")
        if self.r <= 0:
            raise ValueError("r must be positive")
        if self.m < 1:
            raise ValueError("m must be at least 1")


@dataclass
class FitResult:
    Z: np.ndarray
    X: np.ndarray
    loss: float
    trace: list[float]
    restarts: int
    converged: bool
    seed: int = 0
    threshold: float = 0.0
    eigenvalues: np.ndarray | None = field(default=None, repr=False)

    @property
    def K(self) -> int:
        return self.Z.shape[1]

    @property
    def sweeps(self) -> int:
        return len(self.trace)

    def metadata(self) -> dict:
        return {
            "K_hat": self.K,
            "loss": repr(self.loss),
            "sweeps": self.sweeps,
            "restarts": self.restarts,
            "converged": self.converged,
            "seed": self.seed,
            "threshold": repr(self.threshold),
        }

    def save(self, path) -> None:
        from .sbmo import save_membership

        save_membership(self.Z, path, header=self.metadata())


def admissible_rows(K: int, m: int) -> np.ndarray:
    """All ``z`` in ``{0,1}^K`` with ``1 <= |z| <= m``.

    Ordered by support size, then lexicographically by support indices; this
    order is the tie-breaking order everywhere.
    """
    rows = []
    for size in range(1, min(m, K) + 1):
        for support in itertools.combinations(range(K), size):
            z = np.zeros(K, dtype=np.int8)
            z[list(support)] = 1
            rows.append(z)
    return np.array(rows, dtype=np.int8)


def canonical_order(T) -> np.ndarray:
    T = np.unique(np.asarray(T, dtype=np.int8), axis=0)
    if (T.sum(axis=1) == 0).any():
        raise ValueError("candidate set contains the zero row")
    keys = [(int(z.sum()), tuple(np.flatnonzero(z))) for z in T]
    return T[sorted(range(len(T)), key=keys.__getitem__)]


def assign_rows(U: np.ndarray, X: np.ndarray, candidates: np.ndarray, chunk: int = 4096):
    """Best candidate row for every row of ``U``; returns ``(Z, squared residuals)``."""
    P = candidates.astype(float) @ X
    best = np.empty(len(U), dtype=np.int64)
    res = np.empty(len(U))
    for start in range(0, len(U), chunk):
        diff = U[start : start + chunk, None, :] - P[None, :, :]
        d2 = np.einsum("icj,icj->ic", diff, diff)
        idx = np.argmin(d2, axis=1)
        best[start : start + chunk] = idx
        res[start : start + chunk] = d2[np.arange(len(idx)), idx]
    return candidates[best], res


def membership_update(u_row, X, m: int) -> np.ndarray:
    """Exact ``argmin_z ||u - z X||`` over ``1 <= |z|_1 <= m``."""
    X = np.asarray(X, dtype=float)
    Z, _ = assign_rows(np.atleast_2d(np.asarray(u_row, dtype=float)), X, admissible_rows(X.shape[0], m))
    return Z[0]


def centroid_update(Z, U) -> np.ndarray:
    """Least-squares ``X = (Z^T Z)^{-1} Z^T U``; raises :class:`RestartSignal` if singular."""
    Z = np.asarray(Z, dtype=float)
    G = Z.T @ Z
    w = np.linalg.eigvalsh(G)
    if w[-1] <= 0 or w[0] <= SINGULAR_RTOL * w[-1]:
        raise RestartSignal("Z^T Z is singular")
    return np.linalg.solve(G, Z.T @ U)


def lower_median(values) -> float:
    v = np.sort(np.asarray(values))
    return v[(len(v) - 1) // 2]


def kmeanspp_init(U, K: int, degrees=None, seed=None) -> np.ndarray:
    """k-means++ centroids, the first drawn among nodes of at most median degree."""
    U = np.asarray(U, dtype=float)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if len(np.unique(U, axis=0)) < K:
        raise SaacError(f"fewer than {K} distinct rows to seed {K} centroids")
    if degrees is None:
        eligible = np.arange(len(U))
    else:
        degrees = np.asarray(degrees)
        eligible = np.flatnonzero(degrees <= lower_median(degrees))
    centers = [U[rng.choice(eligible)]]
    d2 = np.sum((U - centers[0]) ** 2, axis=1)
    for _ in range(1, K):
        idx = rng.choice(len(U), p=d2 / d2.sum())
        centers.append(U[idx])
        d2 = np.minimum(d2, np.sum((U - U[idx]) ** 2, axis=1))
    return np.array(centers)


def _alternate(U, X, candidates, eps, max_iters):
    """One alternating-minimization run from centroids ``X``."""
    prev = math.inf
    trace = []
    Z = None
    converged = False
    for _ in range(max_iters):
        Z, _ = assign_rows(U, X, candidates)
        X = centroid_update(Z, U)
        loss = float(np.sum((U - Z @ X) ** 2))
        trace.append(loss)
        if prev - loss <= eps:
            converged = True
            break
        prev = loss
    return Z, X, trace, converged


def _run(U, K, candidates, cfg: SaacConfig, eps, degrees, rng):
    restarts = 0
    while True:
        X0 = kmeanspp_init(U, K, degrees, rng)
        try:
            Z, X, trace, conv = _alternate(U, X0, candidates, eps, cfg.max_iters)
            return Z, X, trace, conv, restarts
        except RestartSignal:
            restarts += 1
            if restarts > cfg.max_restarts:
                raise SaacError(f"singular Z^T Z after {cfg.max_restarts} restarts", state=X0)


def embed(g: SparseGraph, cfg: SaacConfig, n_communities: int | None = None) -> SpectralEmbedding:
    if n_communities is None:
        emb = adaptive_select(g, cfg.eta, cfg.r)
        if emb.K == 0:
            raise NoSignalError(f"no eigenvalue passed threshold {emb.threshold:.4g}")
        return emb
    return fixed_k_select(g, n_communities)


def saac_fit(data, config: SaacConfig | None = None, *, n_communities: int | None = None,
             degrees=None, candidates=None) -> FitResult:
    """Fit the additive clustering model.

    ``data`` is either an embedding matrix ``U`` or a :class:`SparseGraph`.
    For a graph, eigenvectors are selected adaptively unless
    ``n_communities`` is given, and node degrees drive the k-means++ seeding.
    The best of ``config.n_init`` runs (by final loss) is returned.
    """
    cfg = config or SaacConfig()
    threshold, eigenvalues = 0.0, None
    if isinstance(data, SparseGraph):
        emb = embed(data, cfg, n_communities)
        U, threshold, eigenvalues = emb.U, emb.threshold, emb.eigenvalues
        degrees = data.degrees if degrees is None else degrees
    elif isinstance(data, SpectralEmbedding):
        U, threshold, eigenvalues = data.U, data.threshold, data.eigenvalues
    else:
        U = np.asarray(data, dtype=float)
    n, K = U.shape
    if candidates is None:
        candidates = admissible_rows(K, min(cfg.m, K))
    else:
        candidates = canonical_order(candidates)
        if candidates.shape[1] != K:
            raise ValueError(f"candidate rows have {candidates.shape[1]} entries, expected {K}")
    eps = 1e-8 * n if cfg.eps is None else cfg.eps

    best = None
    failures = []
    for child in np.random.SeedSequence(cfg.seed).spawn(cfg.n_init):
        rng = np.random.default_rng(child)
        try:
            Z, X, trace, conv, restarts = _run(U, K, candidates, cfg, eps, degrees, rng)
        except SaacError as exc:
            failures.append(exc)
            continue
        if best is None or trace[-1] < best.loss:
            best = FitResult(Z, X, trace[-1], trace, restarts, conv, cfg.seed, threshold, eigenvalues)
    if best is None:
        raise SaacError(f"all {cfg.n_init} runs failed", state=failures[-1].state)
    return best


def saac_fit_constrained_T(U, T, config: SaacConfig | None = None, degrees=None) -> FitResult:
    """Same alternation with memberships restricted to the rows of ``T``."""
    return saac_fit(U, config, degrees=degrees, candidates=T)


def pure_fraction_check(Z, eps_frac: float) -> np.ndarray:
    """Per community: is the fraction of its pure nodes above ``eps_frac``?"""
    if not 0 < eps_frac < 1:
        raise ValueError("eps_frac must lie in (0, 1)")
    Z = np.asarray(Z)
    pure = Z.sum(axis=1) == 1
    frac = (Z[pure] == 1).sum(axis=0) / len(Z)
    return frac > eps_frac


@dataclass
class OracleResult:
    Z: np.ndarray
    X: np.ndarray
    loss: float
    n_candidates: int


def exhaustive_oracle(U, K: int, m: int, batch: int = 4096) -> OracleResult:
    """Global minimum of ``||U - Z X||_F^2`` by enumerating every admissible Z.

    Singular ``Z^T Z`` are skipped. Ties go to the first Z in lexicographic
    order over rows, each row ordered as in :func:`admissible_rows`.
    """
    U = np.asarray(U, dtype=float)
    n = len(U)
    cand = admissible_rows(K, m).astype(float)
    total = len(cand) ** n
    if total > ORACLE_MAX_CANDIDATES:
        raise ValueError(f"{total} candidate membership matrices exceed {ORACLE_MAX_CANDIDATES}")
    codes = np.array(list(itertools.product(range(len(cand)), repeat=n)), dtype=np.int64)
    best_loss, best_code, best_X = math.inf, None, None
    for start in range(0, total, batch):
        Zs = cand[codes[start : start + batch]]
        G = np.einsum("bik,bil->bkl", Zs, Zs)
        w = np.linalg.eigvalsh(G)
        ok = (w[:, -1] > 0) & (w[:, 0] > SINGULAR_RTOL * w[:, -1])
        if not ok.any():
            continue
        Zs, G = Zs[ok], G[ok]
        X = np.linalg.solve(G, np.einsum("bik,id->bkd", Zs, U))
        R = U[None] - Zs @ X
        losses = np.einsum("bij,bij->b", R, R)
        k = int(np.argmin(losses))
        if losses[k] < best_loss:
            best_loss = float(losses[k])
            best_code = codes[start : start + batch][ok][k]
            best_X = X[k]
    if best_code is None:
        raise ValueError("no admissible membership matrix has an invertible Gram matrix")
    return OracleResult(cand[best_code].astype(np.int8), best_X, best_loss, total)
