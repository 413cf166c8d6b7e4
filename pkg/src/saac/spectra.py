"""Eigendecompositions, eigenvector selection and the non-backtracking operator."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .graph import SparseGraph
from .sbmo import ScalingSummary, expected_adjacency, pure_nodes, scaling_summary

log = logging.getLogger(__name__)

DENSE_MAX_N = 2000
SYM_TOL = 1e-10


class ConvergenceError(RuntimeError):
    def __init__(self, msg, partial=None):
        super().__init__(msg)
        self.partial = partial


def eig_sym(M) -> tuple[np.ndarray, np.ndarray]:
    """All eigenpairs of a symmetric matrix, ordered by decreasing ``|lambda|``."""
    M = np.asarray(M, dtype=float)
    asym = np.abs(M - M.T).max() if M.size else 0.0
    if asym > SYM_TOL:
        raise ValueError(f"matrix is not symmetric (max asymmetry {asym:.3g})")
    vals, vecs = np.linalg.eigh(M)
    order = np.argsort(-np.abs(vals), kind="stable")
    return vals[order], vecs[:, order]


@dataclass
class SpectralEmbedding:
    U: np.ndarray
    eigenvalues: np.ndarray
    threshold: float

    @property
    def n(self) -> int:
        return self.U.shape[0]

    @property
    def K(self) -> int:
        return self.U.shape[1]

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"{self.n} {self.K} {self.threshold!r}\n")
            fh.write(" ".join(repr(float(v)) for v in self.eigenvalues) + "\n")
            np.savetxt(fh, self.U, fmt="%.17g")

    @classmethod
    def load(cls, path) -> "SpectralEmbedding":
        with open(path, encoding="utf-8") as fh:
            n, K, thr = fh.readline().split()
            vals = np.array([float(v) for v in fh.readline().split()])
            U = np.loadtxt(fh, ndmin=2).reshape(int(n), int(K))
        return cls(U, vals, float(thr))


def adaptive_threshold(n: int, d_max: float, eta: float = 0.25, r: float = 2.0) -> float:
    """``sqrt(2 (1 + eta) d_max log(4 n^(1+r)))``, natural log."""
    return math.sqrt(2 * (1 + eta) * d_max * (math.log(4) + (1 + r) * math.log(n)))


def _top_eigs(adj: sp.csr_matrix, k: int, seed: int = 0):
    """``k`` eigenpairs of largest magnitude, ordered by decreasing ``|lambda|``."""
    n = adj.shape[0]
    if n <= DENSE_MAX_N or k >= n - 1:
        vals, vecs = eig_sym(adj.toarray())
        return vals[:k], vecs[:, :k]
    v0 = np.random.default_rng(seed).standard_normal(n)
    try:
        vals, vecs = spla.eigsh(adj, k=k, which="LM", tol=1e-8, maxiter=10 * n, v0=v0)
    except spla.ArpackNoConvergence as exc:
        raise ConvergenceError("Lanczos did not converge", (exc.eigenvalues, exc.eigenvectors)) from exc
    order = np.argsort(-np.abs(vals), kind="stable")
    return vals[order], vecs[:, order]


def adaptive_select(g: SparseGraph, eta: float = 0.25, r: float = 2.0) -> SpectralEmbedding:
    """Keep every eigenvector of the adjacency whose ``|lambda|`` beats the threshold."""
    if not 0 < eta < 0.5:
        raise ValueError(f"eta={eta} outside (0, 1/2)")
    if r <= 0:
        raise ValueError(f"r={r} must be positive")
    thr = adaptive_threshold(g.n, g.d_max, eta, r)
    adj = g.adjacency()
    if g.n <= DENSE_MAX_N:
        vals, vecs = eig_sym(adj.toarray())
    else:
        k = min(8, g.n - 2)
        while True:
            vals, vecs = _top_eigs(adj, k)
            if abs(vals[-1]) <= thr or k >= g.n - 2:
                break
            k = min(2 * k, g.n - 2)
    keep = np.abs(vals) > thr
    return SpectralEmbedding(vecs[:, keep], vals[keep], thr)


def fixed_k_select(g: SparseGraph, K: int) -> SpectralEmbedding:
    """The ``K`` eigenvectors of largest ``|lambda|``."""
    if not 1 <= K <= g.n:
        raise ValueError(f"K={K} outside [1, n={g.n}]")
    vals, vecs = _top_eigs(g.adjacency(), K)
    return SpectralEmbedding(vecs, vals, 0.0)


def sym_sqrt(O) -> tuple[np.ndarray, np.ndarray]:
    """Symmetric square root of a positive definite matrix and its inverse."""
    w, V = np.linalg.eigh(O)
    if w.min() <= 0:
        raise ValueError("matrix is not positive definite")
    return (V * np.sqrt(w)) @ V.T, (V / np.sqrt(w)) @ V.T


@dataclass
class CoreQuantities:
    M0: np.ndarray
    mu0: float
    d0: float
    d0_argmin: np.ndarray


MAX_ENUM_K = 12


def _min_norm_small_int(W: np.ndarray, chunk: int = 1 << 16) -> tuple[float, np.ndarray]:
    """min ||z W|| over z in {-1,0,1,2}^K minus 0, by enumeration."""
    K = W.shape[0]
    digits = np.array([-1, 0, 1, 2])
    total = 4**K
    best, arg = np.inf, None
    powers = 4 ** np.arange(K - 1, -1, -1)
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total))
        Zc = digits[(idx[:, None] // powers) % 4]
        norms = np.einsum("ij,ij->i", Zc @ W, Zc @ W)
        norms[~Zc.any(axis=1)] = np.inf
        k = int(np.argmin(norms))
        if norms[k] < best:
            best, arg = norms[k], Zc[k].copy()
    return math.sqrt(best), arg


def core_quantities(summary: ScalingSummary, B) -> CoreQuantities:
    """Core matrix ``O^(1/2) B O^(1/2)`` with its constants ``mu0`` and ``d0``."""
    K = summary.K
    if K > MAX_ENUM_K:
        raise ValueError(
            f"d0 enumeration needs 4^{K} candidates; K > {MAX_ENUM_K} refused, "
            "use ||z O^-1/2|| >= ||z|| / sqrt(lambda_max(O)) as a bound instead"
        )
    O_half, O_inv_half = sym_sqrt(summary.O)
    M0 = O_half @ np.asarray(B, dtype=float) @ O_half
    M0 = (M0 + M0.T) / 2
    eig = np.abs(np.linalg.eigvalsh(M0))
    nonzero = eig[eig > 1e-12 * eig.max()]
    d0, arg = _min_norm_small_int(O_inv_half)
    return CoreQuantities(M0, float(nonzero.min()), d0, arg)


@dataclass
class EigenstructureReport:
    eig_rel_err: float
    rank: int
    span_residual: float
    additivity_err: float
    tol: float = 1e-8

    @property
    def eigenvalues_match(self) -> bool:
        return self.eig_rel_err < self.tol

    @property
    def in_span(self) -> bool:
        return self.span_residual < self.tol

    @property
    def additive(self) -> bool:
        return self.additivity_err < self.tol

    @property
    def passed(self) -> bool:
        return self.eigenvalues_match and self.in_span and self.additive

    def failures(self) -> list[str]:
        names = {"eigenvalues_match": self.eigenvalues_match, "in_span": self.in_span,
                 "additive": self.additive}
        return [k for k, ok in names.items() if not ok]


def verify_eigenstructure(Z, B, alpha: float) -> EigenstructureReport:
    """Check the exact spectral structure of ``A = (alpha/n) Z B Z^T``.

    Compares the nonzero spectrum with ``alpha * eig(M0)``, checks that the
    eigenvectors lie in the column span of ``Z``, and that every row of the
    eigenvector matrix is the sum of the rows of one pure node per community.
    """
    Z = np.asarray(Z, dtype=float)
    K = Z.shape[1]
    A = expected_adjacency(Z, B, alpha, validate=False)
    vals, vecs = eig_sym(A)
    scale = abs(vals[0])
    rank = int(np.count_nonzero(np.abs(vals) > 1e-6 * scale))
    U = vecs[:, :K]

    core = core_quantities(scaling_summary(Z, B), B)
    expected = np.sort(alpha * np.linalg.eigvalsh(core.M0))
    eig_err = float(np.abs(np.sort(vals[:K]) - expected).max() / scale)

    coef, *_ = np.linalg.lstsq(Z, U, rcond=None)
    span_res = float(np.linalg.norm(U - Z @ coef))

    pure = pure_nodes(Z)
    if any(len(p) == 0 for p in pure):
        add_err = math.inf
    else:
        anchors = U[[p[0] for p in pure]]
        add_err = float(np.abs(U - Z @ anchors).max())
    return EigenstructureReport(eig_err, rank, span_res, add_err)


def two_core(g: SparseGraph) -> SparseGraph:
    """Loop-free subgraph after repeatedly deleting nodes of degree <= 1.

    Node ids are kept; removed nodes become isolated.
    """
    edges = g.without_loops().edges
    while len(edges):
        deg = np.bincount(edges.ravel(), minlength=g.n)
        keep = (deg[edges[:, 0]] > 1) & (deg[edges[:, 1]] > 1)
        if keep.all():
            break
        edges = edges[keep]
    return SparseGraph(g.n, edges)


def nonbacktracking_matrix(g: SparseGraph) -> tuple[sp.csr_matrix, np.ndarray]:
    """Non-backtracking operator on directed edges.

    Returns the sparse matrix with ``entry[(u->v), (v->w)] = 1`` for
    ``w != u`` and the ``(2|E|, 2)`` array of directed edges indexing it.
    Self-loops are dropped first.
    """
    loops = g.n_loops
    if loops:
        log.info("dropped %d self-loops before building the non-backtracking operator", loops)
    e = g.without_loops().edges
    if not len(e):
        raise ValueError("graph has no edges")
    directed = np.concatenate([e, e[:, ::-1]])
    directed = directed[np.lexsort((directed[:, 1], directed[:, 0]))]
    src, dst = directed[:, 0], directed[:, 1]
    out_deg = np.bincount(src, minlength=g.n)
    start = np.concatenate([[0], np.cumsum(out_deg)])
    # row e = (u->v) links to every edge leaving v
    reps = out_deg[dst]
    rows = np.repeat(np.arange(len(directed)), reps)
    offsets = np.arange(reps.sum()) - np.repeat(np.cumsum(reps) - reps, reps)
    cols = start[dst][rows] + offsets
    keep = dst[cols] != src[rows]
    rows, cols = rows[keep], cols[keep]
    M = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(len(directed),) * 2)
    return M, directed


DENSE_NB_MAX = 1500


def nb_spectrum(g: SparseGraph, k_eigs: int = 10, seed: int = 0, maxiter: int | None = None) -> np.ndarray:
    """The ``k_eigs`` non-backtracking eigenvalues of largest modulus.

    Works on the 2-core, which carries every nonzero eigenvalue; missing
    eigenvalues are zeros. Ordered by decreasing modulus.
    """
    if k_eigs < 2:
        raise ValueError("k_eigs must be at least 2")
    if not g.without_loops().n_edges:
        raise ValueError("graph has no edges")
    core = two_core(g)
    out = np.zeros(k_eigs, dtype=complex)
    if not core.n_edges:
        return out
    M, _ = nonbacktracking_matrix(core)
    size = M.shape[0]
    if size <= DENSE_NB_MAX or k_eigs >= size - 1:
        vals = np.linalg.eigvals(M.toarray())
    else:
        v0 = np.random.default_rng(seed).standard_normal(size)
        ncv = min(size, max(4 * k_eigs, 40))
        try:
            vals = spla.eigs(M, k=k_eigs, which="LM", ncv=ncv, tol=1e-8,
                             maxiter=maxiter or 10 * size, v0=v0, return_eigenvectors=False)
        except spla.ArpackNoConvergence as exc:
            raise ConvergenceError("Arnoldi did not converge", exc.eigenvalues) from exc
    vals = vals[np.lexsort((-vals.imag, -np.abs(vals)))][:k_eigs]
    out[: len(vals)] = vals
    return out


def second_real_eigenvalue(vals, imag_tol: float = 1e-6) -> float:
    """Second-largest real eigenvalue among ``vals``, NaN if fewer than two."""
    vals = np.asarray(vals)
    real = np.sort(vals[np.abs(vals.imag) <= imag_tol * np.maximum(1, np.abs(vals))].real)[::-1]
    return float(real[1]) if len(real) >= 2 else math.nan
