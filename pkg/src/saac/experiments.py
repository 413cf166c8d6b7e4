"""Monte Carlo experiment runners writing flat CSV rows.

Every replication row carries its full parameter tuple and seed, and
:func:`run_replication` / :func:`nb_replication` recompute any single row
from that tuple alone.
"""

from __future__ import annotations

import csv
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .baselines import occam_baseline, spectral_clustering
from .graph import SparseGraph, read_circles, read_edge_list
from .metrics import evaluate
from .sbmo import (
    expected_adjacency,
    generate_membership,
    log_alpha,
    normalize_rows,
    sample_graph,
    two_community_overlap,
)
from .solver import SaacConfig, saac_fit
from .spectra import adaptive_select, nb_spectrum, second_real_eigenvalue

log = logging.getLogger(__name__)

ALGOS = ("saac", "saac-adaptive", "sc", "occam")
METRICS = ("misc", "misc_frac", "error", "fp", "fn", "nvi")
WORKERS_ENV = "SAAC_WORKERS"


@dataclass
class ExperimentSpec:
    scenario: str = "sbmo"
    n: int = 500
    K: int = 5
    alpha_exp: float = 1.5
    B: tuple = (5.0, 4.0, 3.0, 3.0, 3.0)
    p: float = 0.8
    m: int = 3
    reps: int = 50
    seed: int = 0
    algos: tuple = ("saac", "sc", "occam")
    model: str = "sbmo"  # or "occam": rows of Z scaled to unit norm
    eta: float = 0.25
    r: float = 2.0
    eps: float | None = None
    alpha: float | None = None  # overrides alpha_exp

    def B_matrix(self) -> np.ndarray:
        b = np.asarray(self.B, dtype=float)
        return np.diag(b) if b.size == self.K else b.reshape(self.K, self.K)

    def degree_parameter(self, n: int) -> float:
        return self.alpha if self.alpha is not None else log_alpha(n, self.alpha_exp)


def worker_count() -> int:
    return max(1, int(os.environ.get(WORKERS_ENV, "1")))


def parallel_map(fn, tasks, workers: int | None = None) -> list:
    """Ordered map; a process pool when more than one worker is configured."""
    workers = worker_count() if workers is None else workers
    if workers <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


def instance(spec: ExperimentSpec, n: int, p: float, seed: int):
    """Membership matrix and sampled graph for one replication."""
    ss_z, ss_g = np.random.SeedSequence(seed).spawn(2)
    Z = generate_membership(n, spec.K, p, spec.m, ss_z)
    weights = normalize_rows(Z) if spec.model == "occam" else Z
    A = expected_adjacency(weights, spec.B_matrix(), spec.degree_parameter(n))
    return Z, sample_graph(A, ss_g)


def fit_algo(algo: str, g: SparseGraph, K: int, spec: ExperimentSpec, seed: int):
    cfg = SaacConfig(eps=spec.eps, eta=spec.eta, r=spec.r, m=min(spec.m, K), seed=seed)
    if algo == "saac":
        return saac_fit(g, cfg, n_communities=K).Z
    if algo == "saac-adaptive":
        return saac_fit(g, cfg).Z
    if algo == "sc":
        return spectral_clustering(g, K, seed).Z
    if algo == "occam":
        return occam_baseline(g, K, seed).Z
    raise ValueError(f"unknown algorithm {algo!r}")


def run_replication(task) -> list[dict]:
    """All algorithms on one sampled instance; failures become status rows."""
    spec, n, p, seed = task
    base = {"scenario": spec.scenario, "model": spec.model, "n": n, "K": spec.K,
            "alpha_exp": spec.alpha_exp, "alpha": spec.degree_parameter(n), "p": p,
            "m": spec.m, "seed": seed, "row_type": "rep"}
    try:
        Z, g = instance(spec, n, p, seed)
        k_hat = adaptive_select(g, spec.eta, spec.r).K
    except Exception as exc:  # noqa: BLE001 - recorded, never aborts a sweep
        return [{**base, "algo": a, "status": f"error: {exc}"} for a in spec.algos]
    rows = []
    for algo in spec.algos:
        row = {**base, "algo": algo, "k_hat_adaptive": k_hat}
        try:
            rep = evaluate(fit_algo(algo, g, spec.K, spec, seed), Z, seed=seed)
        except Exception as exc:  # noqa: BLE001
            rows.append({**row, "status": f"error: {exc}"})
            continue
        rows.append({**row, "status": "ok", "K_hat": rep.K_hat, "misc": rep.misc,
                     "misc_frac": rep.misc / n, "error": rep.error, "fp": rep.fp,
                     "fn": rep.fn, "nvi": rep.nvi})
    return rows


def aggregate(rows: list[dict], keys: tuple, metrics=METRICS, quantiles: bool = False) -> list[dict]:
    """Mean and std (and optionally median/quartiles) of ``metrics`` per group."""
    groups: dict[tuple, list[dict]] = {}
    for row in rows:
        if row.get("row_type") == "rep" and row.get("status") == "ok":
            groups.setdefault(tuple(row[k] for k in keys), []).append(row)
    out = []
    stats = {"mean": np.mean, "std": lambda v: np.std(v, ddof=1) if len(v) > 1 else 0.0}
    if quantiles:
        stats.update({"median": np.median, "q25": lambda v: np.quantile(v, 0.25),
                      "q75": lambda v: np.quantile(v, 0.75)})
    for key, members in groups.items():
        for name, fn in stats.items():
            row = dict(zip(keys, key), row_type=name, status="ok", count=len(members))
            for metric in metrics:
                values = [m[metric] for m in members if m.get(metric) is not None]
                row[metric] = float(fn(np.array(values, dtype=float))) if values else math.nan
            out.append(row)
    return out


def run_purity_sweep(spec: ExperimentSpec, p_grid, workers: int | None = None) -> list[dict]:
    tasks = [(spec, spec.n, float(p), spec.seed + rep) for p in p_grid for rep in range(spec.reps)]
    rows = [r for chunk in parallel_map(run_replication, tasks, workers) for r in chunk]
    return rows + aggregate(rows, ("scenario", "model", "n", "p", "algo"))


def run_consistency_curve(spec: ExperimentSpec, n_grid, workers: int | None = None) -> list[dict]:
    tasks = [(spec, int(n), spec.p, spec.seed + rep) for n in n_grid for rep in range(spec.reps)]
    rows = [r for chunk in parallel_map(run_replication, tasks, workers) for r in chunk]
    agg = aggregate(rows, ("scenario", "model", "n", "algo"), quantiles=True)
    for row in agg:
        if row["row_type"] != "mean":
            continue
        reps = [r for r in rows if r["row_type"] == "rep" and r["n"] == row["n"]
                and r["algo"] == row["algo"] and "k_hat_adaptive" in r]
        row["k_hat_freq"] = float(np.mean([r["k_hat_adaptive"] == spec.K for r in reps])) if reps else math.nan
    return rows + agg


# real networks -----------------------------------------------------------------

def filter_communities(Z: np.ndarray, min_pure: float = 0.10):
    """Drop communities with too few pure nodes, then nodes left uncovered.

    Repeated until stable. Returns ``(kept_nodes, kept_communities)``.
    """
    nodes = np.arange(len(Z))
    comms = np.arange(Z.shape[1])
    while True:
        sub = Z[np.ix_(nodes, comms)]
        covered = sub.sum(axis=1) > 0
        sub = sub[covered]
        pure = sub.sum(axis=1) == 1
        frac = (sub[pure] == 1).sum(axis=0) / max(len(sub), 1)
        keep = frac >= min_pure
        if covered.all() and keep.all():
            return nodes, comms
        nodes, comms = nodes[covered], comms[keep]
        if not len(nodes) or not len(comms):
            return nodes, comms


TABLE_COLUMNS = ["network", "algo", "status", "reason", "n", "K", "c", "O_max",
                 "fp", "fn", "error", "nvi", "c_hat", "seed"]


def run_real_eval(graph_path, circles_path, min_pure: float = 0.10, min_overlap: float = 0.01,
                  algos=("sc", "occam", "saac"), seed: int = 0, m: int = 3,
                  network: str | None = None) -> list[dict]:
    """Table-style evaluation of every algorithm on one labelled network."""
    network = network or Path(graph_path).stem
    g = read_edge_list(graph_path)
    circles = read_circles(circles_path, g, strict=False)
    base = {"network": network, "seed": seed}
    nodes, comms = filter_communities(circles.Z, min_pure)
    if not len(comms):
        return [{**base, "status": "excluded", "reason": f"no community with pure fraction >= {min_pure}"}]
    Z = circles.Z[np.ix_(nodes, comms)]
    overlap = float(np.mean(Z.sum(axis=1) > 1))
    if overlap <= min_overlap:
        return [{**base, "status": "excluded",
                 "reason": f"overlap fraction {overlap:.4f} <= {min_overlap}"}]
    sub = g.subgraph(nodes)
    n, K = Z.shape
    stats = {"n": n, "K": K, "c": float(Z.sum() / n), "O_max": int(Z.sum(axis=1).max())}
    spec = ExperimentSpec(K=K, m=min(m, K))
    rows = []
    for algo in algos:
        row = {**base, **stats, "algo": algo}
        try:
            Zh = fit_algo(algo, sub, K, spec, seed)
        except Exception as exc:  # noqa: BLE001
            rows.append({**row, "status": "error", "reason": str(exc)})
            continue
        rep = evaluate(Zh, Z, network, seed)
        rows.append({**row, "status": "ok", "fp": rep.fp, "fn": rep.fn, "error": rep.error,
                     "nvi": rep.nvi, "c_hat": float(Zh.sum() / n)})
    return rows


def summarize_real(rows: list[dict]) -> list[dict]:
    ok = [dict(r, row_type="rep") for r in rows if r.get("status") == "ok"]
    return aggregate(ok, ("algo",), metrics=("n", "K", "c", "O_max", "fp", "fn", "error", "nvi", "c_hat"))


def find_snap_networks(directory) -> list[tuple[Path, Path]]:
    pairs = []
    for edges in sorted(Path(directory).glob("*.edges")):
        circles = edges.with_suffix(".circles")
        if circles.exists():
            pairs.append((edges, circles))
    return pairs


# sparse regime -----------------------------------------------------------------

NB_COLUMNS = ["n", "s", "a", "seed", "status", "lambda1", "lambda2_real", "radius",
              "detected", "transition_a", "n_edges"]


def nb_transition(s: float) -> float:
    """Conjectured detectability threshold ``a = (2 - 3s) / s^2``."""
    return (2 - 3 * s) / s**2


def nb_instance(n: int, s: float, a: float, seed: int) -> tuple[np.ndarray, SparseGraph]:
    Z = two_community_overlap(n, s)
    A = expected_adjacency(Z, np.diag([a, a]), 1.0)
    return Z, sample_graph(A, seed)


def nb_replication(task) -> tuple[dict, np.ndarray | None]:
    n, s, a, seed, k_eigs = task
    radius = math.sqrt(a * (2 - 3 * s))
    row = {"n": n, "s": s, "a": a, "seed": seed, "radius": radius, "transition_a": nb_transition(s)}
    try:
        _, g = nb_instance(n, s, a, seed)
        row["n_edges"] = g.n_edges
        vals = nb_spectrum(g, k_eigs, seed=seed)
    except Exception as exc:  # noqa: BLE001
        return {**row, "status": f"error: {exc}"}, None
    lam2 = second_real_eigenvalue(vals)
    row.update(status="ok", lambda1=float(vals[0].real), lambda2_real=lam2,
               detected=bool(lam2 > radius))
    return row, vals


def run_nb_sweep(n: int, s: float, a_grid, reps: int, seed: int = 0, k_eigs: int = 10,
                 workers: int | None = None, keep_spectra: int = 0):
    """Leading non-backtracking eigenvalues per replication.

    Returns ``(rows, spectra)``; ``spectra`` holds the eigenvalues of the first
    ``keep_spectra`` replications per ``a`` as ``(a, seed, values)``.
    """
    tasks = [(n, s, float(a), seed + rep, k_eigs) for a in a_grid for rep in range(reps)]
    results = parallel_map(nb_replication, tasks, workers)
    rows = [r for r, _ in results]
    spectra = [(t[2], t[3], v) for t, (_, v) in zip(tasks, results)
               if v is not None and t[3] - seed < keep_spectra]
    summary = []
    for a in a_grid:
        ok = [r for r in rows if r["a"] == float(a) and r["status"] == "ok"]
        if ok:
            summary.append({"n": n, "s": s, "a": float(a), "status": "summary",
                            "detected": float(np.mean([r["detected"] for r in ok])),
                            "lambda1": float(np.mean([r["lambda1"] for r in ok])),
                            "radius": ok[0]["radius"], "transition_a": nb_transition(s)})
    return rows + summary, spectra


def saac_sparse_replication(task) -> dict:
    n, s, a, seed = task
    row = {"n": n, "s": s, "a": a, "seed": seed, "row_type": "rep"}
    try:
        Z, g = nb_instance(n, s, a, seed)
        Zh = saac_fit(g, SaacConfig(m=2, seed=seed), n_communities=2).Z
        rep = evaluate(Zh, Z, seed=seed)
    except Exception as exc:  # noqa: BLE001
        return {**row, "status": f"error: {exc}"}
    return {**row, "status": "ok", "error": rep.error, "accuracy": 1 - rep.error}


def run_saac_sparse_sweep(n: int, s_grid, a_grid, reps: int, seed: int = 0,
                          workers: int | None = None) -> list[dict]:
    """Fraction of correct entries of SAAC in the very sparse two-community model."""
    tasks = [(n, float(s), float(a), seed + rep) for a in a_grid for s in s_grid for rep in range(reps)]
    rows = parallel_map(saac_sparse_replication, tasks, workers)
    return rows + aggregate(rows, ("n", "s", "a"), metrics=("error", "accuracy"))


def spectrum_rows(spectra) -> list[dict]:
    return [{"a": a, "seed": seed, "re": float(v.real), "im": float(v.imag), "modulus": float(abs(v))}
            for a, seed, vals in spectra for v in vals]


def write_csv(rows: list[dict], path, columns: list[str] | None = None) -> None:
    """Comma-separated with header; floats written with full precision."""
    if columns is None:
        columns = []
        for row in rows:
            columns += [k for k in row if k not in columns]
    handle = open(path, "w", newline="", encoding="utf-8") if path not in (None, "-") else None
    fh = handle or sys.stdout
    try:
        writer = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: ("" if row.get(k) is None else row.get(k)) for k in columns})
    finally:
        if handle:
            handle.close()
