import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import special_ortho_group

from saac.graph import SparseGraph
from saac.metrics import estimation_error, misclassified
from saac.sbmo import expected_adjacency, generate_membership, pure_nodes, sample_graph
from saac.solver import (
    NoSignalError,
    RestartSignal,
    SaacConfig,
    SaacError,
    _alternate,
    admissible_rows,
    canonical_order,
    centroid_update,
    exhaustive_oracle,
    kmeanspp_init,
    lower_median,
    membership_update,
    pure_fraction_check,
    saac_fit,
    saac_fit_constrained_T,
)
from saac.spectra import eig_sym

from conftest import blocks, random_identifiable


def _noiseless(seed=0, n=60, K=3, m=2):
    rng = np.random.default_rng(seed)
    Z, B = random_identifiable(rng, n, K, m)
    vals, vecs = eig_sym(expected_adjacency(Z, B, validate=False))
    U = vecs[:, :K]
    X = U[[p[0] for p in pure_nodes(Z)]]
    return Z, U, X


def _orthonormal(K, seed=0):
    return special_ortho_group.rvs(K, random_state=seed) if K > 1 else np.ones((1, 1))


# ---- config


def test_config_validation():
    for bad in (dict(eps=0), dict(eta=0.5), dict(eta=0), dict(r=0), dict(m=0)):
        with pytest.raises(ValueError):
            SaacConfig(**bad)


# ---- candidates and membership update


def test_admissible_rows_order():
    rows = admissible_rows(3, 2).tolist()
    assert rows == [[1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 0], [1, 0, 1], [0, 1, 1]]
    assert len(admissible_rows(5, 3)) == 5 + 10 + 10


def test_canonical_order_rejects_zero_row():
    with pytest.raises(ValueError):
        canonical_order([[0, 0], [1, 0]])
    assert canonical_order([[1, 1], [0, 1], [1, 0], [0, 1]]).tolist() == [[1, 0], [0, 1], [1, 1]]


def test_membership_single():
    X = _orthonormal(4, 1)
    assert membership_update(X[1], X, 2).tolist() == [0, 1, 0, 0]


def test_membership_pair_brute_force():
    X = _orthonormal(3, 2)
    u = X[0] + X[2]
    z = membership_update(u, X, 2)
    assert z.tolist() == [1, 0, 1]
    losses = {c: np.linalg.norm(u - np.array(c) @ X) for c in itertools.product((0, 1), repeat=3) if any(c)}
    assert min(losses, key=losses.get) == tuple(z)
    # with m = 1 the pair is not reachable
    assert membership_update(u, X, 1).sum() == 1


def test_membership_tie_picks_first():
    X = np.eye(2)
    assert membership_update([0.5, 0.5], X, 1).tolist() == [1, 0]


@given(st.integers(0, 10_000), st.integers(1, 5), st.integers(1, 5))
def test_membership_is_exact_minimizer(seed, K, m):
    rng = np.random.default_rng(seed)
    X, u = rng.standard_normal((K, K)), rng.standard_normal(K)
    z = membership_update(u, X, m)
    best = min(
        np.sum((u - np.array(c) @ X) ** 2)
        for c in itertools.product((0, 1), repeat=K)
        if 1 <= sum(c) <= m
    )
    assert 1 <= z.sum() <= m
    assert np.sum((u - z @ X) ** 2) == pytest.approx(best, rel=1e-12, abs=1e-14)


# ---- centroid update


def test_centroid_identity():
    U = np.random.default_rng(0).standard_normal((3, 3))
    assert np.allclose(centroid_update(np.eye(3), U), U)


def test_centroid_zero_column_restarts():
    with pytest.raises(RestartSignal):
        centroid_update(np.array([[1, 0], [1, 0], [1, 0]]), np.ones((3, 2)))


def test_centroid_least_squares_probe():
    rng = np.random.default_rng(5)
    Z = np.vstack([np.eye(3), rng.integers(0, 2, size=(30, 3))])
    U = rng.standard_normal((33, 3))
    X = centroid_update(Z, U)
    R = U - Z @ X
    assert np.abs(Z.T @ R).max() < 1e-8
    base = np.linalg.norm(R)
    for _ in range(100):
        Xp = X + rng.standard_normal(X.shape) * rng.uniform(1e-3, 1)
        assert base <= np.linalg.norm(Z @ Xp - U)


# ---- initialization


def test_lower_median():
    assert lower_median([1, 1, 2, 2]) == 1
    assert lower_median([3, 1, 2]) == 2


def test_kmeanspp_single_centroid_low_degree():
    U = np.arange(8.0).reshape(8, 1)
    degrees = np.array([1, 9, 1, 9, 1, 9, 1, 9])
    for seed in range(20):
        c = kmeanspp_init(U, 1, degrees, seed)
        assert c.shape == (1, 1) and int(c[0, 0]) % 2 == 0


def test_kmeanspp_median_tie():
    U = np.arange(4.0).reshape(4, 1)
    firsts = {float(kmeanspp_init(U, 1, [1, 1, 2, 2], s)[0, 0]) for s in range(50)}
    assert firsts == {0.0, 1.0}


def test_kmeanspp_separated_clusters():
    centers = np.eye(4) * 1e4
    U = np.repeat(centers, 25, axis=0) + np.random.default_rng(0).standard_normal((100, 4)) * 1e-3
    for seed in range(30):
        C = kmeanspp_init(U, 4, np.ones(100), seed)
        assert len({int(np.argmax(c)) for c in C}) == 4


def test_kmeanspp_too_few_distinct_rows():
    with pytest.raises(SaacError):
        kmeanspp_init(np.ones((5, 2)), 2)


# ---- alternation


def test_noiseless_fixed_point():
    Z, U, X = _noiseless()
    cand = admissible_rows(3, 2)
    Zh, Xh, trace, conv = _alternate(U, X, cand, 1e-8 * len(U), 200)
    assert conv and len(trace) <= 2 and trace[-1] <= 1e-16
    assert misclassified(Zh, Z)[0] == 0


def test_single_community_column_mean():
    U = np.random.default_rng(1).standard_normal((20, 1))
    res = saac_fit(U, SaacConfig(n_init=2))
    assert (res.Z == 1).all()
    assert res.X[0, 0] == pytest.approx(U.mean())


def test_fit_recovers_noiseless_model():
    Z, U, _ = _noiseless(seed=4)
    res = saac_fit(U, SaacConfig(m=2, seed=3))
    assert res.loss < 1e-12
    assert estimation_error(res.Z, Z)[0] == 0


def test_fit_deterministic():
    U = np.random.default_rng(2).standard_normal((40, 3))
    a, b = saac_fit(U, SaacConfig(seed=9)), saac_fit(U, SaacConfig(seed=9))
    assert np.array_equal(a.Z, b.Z) and a.trace == b.trace


@given(st.integers(0, 10_000), st.integers(2, 4))
def test_loss_trace_monotone(seed, K):
    rng = np.random.default_rng(seed)
    U = np.linalg.qr(rng.standard_normal((40, K)))[0]
    eps = 1e-8 * 40
    try:
        res = saac_fit(U, SaacConfig(seed=seed, n_init=1, m=2))
    except SaacError:
        return
    t = np.array(res.trace)
    if len(t) > 1:
        assert (np.diff(t)[:-1] < -eps).all()
        assert t[-1] <= t[-2] + 1e-12
    assert ((res.Z.sum(axis=1) >= 1) & (res.Z.sum(axis=1) <= 2)).all()


@given(st.integers(0, 10_000))
def test_conditional_optimality(seed):
    rng = np.random.default_rng(seed)
    U = np.linalg.qr(rng.standard_normal((30, 3)))[0]
    try:
        res = saac_fit(U, SaacConfig(seed=seed, n_init=1, m=2))
    except SaacError:
        return
    cand = admissible_rows(3, 2)
    # X was fitted after the last membership pass; recompute both halves at the fixed point
    for i in range(len(U)):
        row_losses = ((U[i] - cand @ res.X) ** 2).sum(axis=1)
        assert ((U[i] - res.Z[i] @ res.X) ** 2).sum() <= row_losses.min() + 1e-9
    for _ in range(10):
        Xp = res.X + rng.standard_normal(res.X.shape) * 1e-3
        assert res.loss <= np.sum((U - res.Z @ Xp) ** 2) + 1e-12


def test_rotation_robustness():
    rng = np.random.default_rng(7)
    Z, U, X = _noiseless(seed=7)
    U = U + rng.standard_normal(U.shape) * 0.02
    R = _orthonormal(3, 11)
    X0 = kmeanspp_init(U, 3, None, 1)
    cand = admissible_rows(3, 2)
    a = _alternate(U, X0, cand, 1e-10, 200)
    b = _alternate(U @ R, X0 @ R, cand, 1e-10, 200)
    assert np.array_equal(a[0], b[0])
    assert abs(a[2][-1] - b[2][-1]) < 1e-8


def test_column_permutation_only_permutes_estimate():
    Z, U, _ = _noiseless(seed=8)
    res = saac_fit(U, SaacConfig(m=2, seed=1))
    P = np.eye(3, dtype=int)[[2, 0, 1]]
    # relabelled estimate gets the same scores
    assert misclassified(res.Z @ P, Z)[0] == misclassified(res.Z, Z)[0]
    assert estimation_error(res.Z @ P, Z)[0] == estimation_error(res.Z, Z)[0]


def test_no_signal_error():
    g = SparseGraph.from_pairs(20, [(0, 1)])
    with pytest.raises(NoSignalError, match="threshold"):
        saac_fit(g)


def test_fit_on_graph_with_known_k():
    Z = blocks(np.eye(2), 100)
    g = sample_graph(expected_adjacency(Z, np.array([[0.9, 0.05], [0.05, 0.9]]), alpha=200), 0)
    res = saac_fit(g, SaacConfig(m=1), n_communities=2)
    assert misclassified(res.Z, Z)[0] == 0
    auto = saac_fit(g, SaacConfig(m=1))
    assert auto.K == 2 and auto.threshold > 0


def test_all_runs_failing_raises():
    # two identical halves: every Z with two columns is singular or equivalent
    U = np.repeat(np.array([[1.0, 0.0], [0.0, 1.0]]), 3, axis=0)
    with pytest.raises(SaacError):
        saac_fit(U, SaacConfig(m=2, n_init=2), candidates=[[1, 1]])


def test_fit_result_serialization(tmp_path):
    from saac.sbmo import load_membership

    Z, U, _ = _noiseless(seed=1)
    res = saac_fit(U, SaacConfig(m=2))
    res.save(tmp_path / "fit.txt")
    back, meta = load_membership(tmp_path / "fit.txt")
    assert np.array_equal(back, res.Z)
    assert int(meta["K_hat"]) == 3 and float(meta["loss"]) == res.loss
    assert int(meta["sweeps"]) == res.sweeps


# ---- constrained T


def test_constrained_full_set_is_identical():
    U = np.random.default_rng(3).standard_normal((30, 3))
    cfg = SaacConfig(seed=4, m=2)
    a = saac_fit(U, cfg)
    b = saac_fit_constrained_T(U, admissible_rows(3, 2)[::-1], cfg)
    assert np.array_equal(a.Z, b.Z) and a.loss == b.loss


def test_constrained_singletons_is_hard_clustering():
    U = np.random.default_rng(4).standard_normal((30, 3))
    res = saac_fit_constrained_T(U, np.eye(3, dtype=int), SaacConfig(seed=0))
    assert (res.Z.sum(axis=1) == 1).all()


def test_constrained_planted_recovery():
    T = np.array([[1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 0], [1, 1, 1]])
    Z = np.repeat(T, 8, axis=0)
    X = _orthonormal(3, 5)
    res = saac_fit_constrained_T(Z @ X, T, SaacConfig(seed=2))
    assert res.loss < 1e-20
    assert misclassified(res.Z, Z)[0] == 0


def test_constrained_shape_mismatch():
    with pytest.raises(ValueError):
        saac_fit_constrained_T(np.ones((4, 2)), [[1, 0, 0]])


# ---- pure fraction


def test_pure_fraction_balanced_sbm():
    assert pure_fraction_check(blocks(np.eye(4), 5), 0.2).all()
    assert not pure_fraction_check(blocks(np.eye(4), 5), 0.25).any()


def test_pure_fraction_missing_community():
    Z = np.array([[1, 0, 0], [0, 1, 1], [0, 0, 1], [1, 1, 0]])
    assert pure_fraction_check(Z, 0.1).tolist() == [True, False, True]


def test_pure_fraction_generated():
    Z = generate_membership(500, 5, 0.5, 3, 3)
    assert pure_fraction_check(Z, 0.099).all()
    assert not pure_fraction_check(Z, 0.2).any()
    with pytest.raises(ValueError):
        pure_fraction_check(Z, 1.0)


# ---- exhaustive oracle


def test_oracle_identity():
    res = exhaustive_oracle(np.eye(2), 2, 1)
    assert res.loss == pytest.approx(0, abs=1e-24)
    assert res.Z.tolist() == [[1, 0], [0, 1]]


def test_oracle_planted():
    Z = np.array([[1, 0], [0, 1], [1, 1], [1, 0], [0, 1], [1, 1]])
    X = _orthonormal(2, 3)
    res = exhaustive_oracle(Z @ X, 2, 2)
    assert res.loss < 1e-20 and misclassified(res.Z, Z)[0] == 0
    assert res.n_candidates == 3**6


def test_oracle_refuses_large_instances():
    with pytest.raises(ValueError, match="exceed"):
        exhaustive_oracle(np.zeros((14, 2)), 2, 2)


def test_fit_attains_oracle_on_tiny_instance():
    U = np.linalg.qr(np.random.default_rng(11).standard_normal((6, 2)))[0]
    star = exhaustive_oracle(U, 2, 2)
    res = saac_fit(U, SaacConfig(m=2, n_init=20, seed=0))
    assert res.loss >= star.loss - 1e-12
