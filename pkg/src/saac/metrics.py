"""Permutation-invariant comparison of estimated and true membership matrices.

Every metric matches estimated column ``sigma[k]`` with true column ``k``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass
from itertools import permutations

import numpy as np
from scipy.optimize import linear_sum_assignment

MAX_BRUTE_K = 9


def _as_int(Z) -> np.ndarray:
    return np.asarray(Z, dtype=np.int64)


def _mismatch_cost(Zh, Z) -> np.ndarray:
    """``C[k, l]`` = number of entries where ``Zh[:, l]`` and ``Z[:, k]`` differ."""
    Zh, Z = _as_int(Zh), _as_int(Z)
    n = len(Z)
    agree = Z.T @ Zh + (1 - Z).T @ (1 - Zh)
    return n - agree


def misclassified(Zh, Z) -> tuple[int, np.ndarray | None]:
    """Minimum number of nodes with at least one wrong membership entry.

    Exact over all permutations for ``K <= 9``; above that the
    Error-optimal permutation is used and a warning is issued.
    """
    Zh, Z = _as_int(Zh), _as_int(Z)
    n, K = Z.shape
    if Zh.shape != Z.shape:
        return n, None
    if K > MAX_BRUTE_K:
        warnings.warn(f"K={K} > {MAX_BRUTE_K}: MisC approximated with the Error-optimal permutation")
        _, sigma = estimation_error(Zh, Z)
        return int(np.count_nonzero((Zh[:, sigma] != Z).any(axis=1))), sigma
    best, best_sigma = n + 1, None
    perms = np.array(list(permutations(range(K))), dtype=np.int64)
    for chunk in np.array_split(perms, max(1, len(perms) // 512)):
        wrong = (Zh[:, chunk] != Z[:, None, :]).any(axis=2).sum(axis=0)
        k = int(np.argmin(wrong))
        if wrong[k] < best:
            best, best_sigma = int(wrong[k]), chunk[k]
    return best, best_sigma


def estimation_error(Zh, Z) -> tuple[float, np.ndarray | None]:
    """``min_sigma ||Zh P_sigma - Z||_F^2 / (nK)``, or 1 when the K differ.

    The cost splits over columns, so the minimum is a linear assignment.
    """
    Zh, Z = _as_int(Zh), _as_int(Z)
    n, K = Z.shape
    if Zh.shape != Z.shape:
        return 1.0, None
    C = _mismatch_cost(Zh, Z)
    rows, cols = linear_sum_assignment(C)
    sigma = cols[np.argsort(rows)]
    return float(C[rows, cols].sum() / (n * K)), sigma


def _rate(num: int, den: int) -> float:
    if den == 0:
        return 0.0 if num == 0 else math.nan
    return num / den


def fp_fn_rates(Zh, Z, sigma) -> tuple[float, float]:
    """False-positive rate over true ones, false-negative rate over true zeros."""
    if sigma is None:
        return math.nan, math.nan
    Zp, Z = _as_int(Zh)[:, sigma], _as_int(Z)
    fp = int(np.count_nonzero((Zp == 1) & (Z == 0)))
    fn = int(np.count_nonzero((Zp == 0) & (Z == 1)))
    return _rate(fp, int(np.count_nonzero(Z == 1))), _rate(fn, int(np.count_nonzero(Z == 0)))


def _entropy(p: np.ndarray, axis=None) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, -p * np.log2(p), 0.0)
    return terms.sum(axis=axis)


def _ratio(cond, marg, tol=1e-12):
    # a constant column: perfect if it is also determined by the other side
    out = np.where(cond <= tol, 0.0, 1.0)
    np.divide(cond, marg, out=out, where=marg > tol)
    return out


def nvi_cost(Zh, Z) -> np.ndarray:
    """``cost[k, l] = H(X_k|Y_l)/H(X_k) + H(Y_l|X_k)/H(Y_l)``."""
    X, Y = _as_int(Zh).astype(float), _as_int(Z).astype(float)
    n = len(X)
    n11 = X.T @ Y
    n10 = X.T @ (1 - Y)
    n01 = (1 - X).T @ Y
    n00 = n - n11 - n10 - n01
    joint = np.stack([n00, n01, n10, n11]) / n
    h_joint = _entropy(joint, axis=0)
    px = X.mean(axis=0)
    py = Y.mean(axis=0)
    hx = _entropy(np.stack([px, 1 - px]), axis=0)[:, None]
    hy = _entropy(np.stack([py, 1 - py]), axis=0)[None, :]
    h_x_given_y = np.maximum(h_joint - hy, 0.0)
    h_y_given_x = np.maximum(h_joint - hx, 0.0)
    return _ratio(h_x_given_y, np.broadcast_to(hx, h_joint.shape)) + _ratio(
        h_y_given_x, np.broadcast_to(hy, h_joint.shape)
    )


def nvi(Zh, Z) -> float:
    """Extended normalized variation of information; 1 is a perfect match.

    Returns 0 when the number of communities differs.
    """
    Zh, Z = _as_int(Zh), _as_int(Z)
    if Zh.shape != Z.shape:
        return 0.0
    K = Z.shape[1]
    cost = nvi_cost(Zh, Z)  # rows: estimated columns, cols: true columns
    rows, cols = linear_sum_assignment(cost)
    return float(1 - cost[rows, cols].sum() / (2 * K))


@dataclass
class EvalReport:
    run_id: str
    n: int
    K: int
    K_hat: int
    misc: int
    error: float
    fp: float
    fn: float
    nvi: float
    seed: int | None = None

    @property
    def k_match(self) -> bool:
        return self.K == self.K_hat

    def row(self) -> dict:
        return asdict(self)


EVAL_COLUMNS = ["run_id", "n", "K", "K_hat", "misc", "error", "fp", "fn", "nvi", "seed"]


def evaluate(Zh, Z, run_id: str = "", seed: int | None = None) -> EvalReport:
    Zh, Z = _as_int(Zh), _as_int(Z)
    n, K = Z.shape
    misc, _ = misclassified(Zh, Z)
    err, sigma = estimation_error(Zh, Z)
    fp, fn = fp_fn_rates(Zh, Z, sigma)
    return EvalReport(run_id, n, K, Zh.shape[1], misc, err, fp, fn, nvi(Zh, Z), seed)
