import numpy as np
import pytest

from saac.baselines import k_median, occam_baseline, spectral_clustering
from saac.graph import SparseGraph
from saac.metrics import misclassified
from saac.sbmo import expected_adjacency, sample_graph

from conftest import blocks


def _cliques(size=5, count=2):
    pairs = [
        (c * size + i, c * size + j)
        for c in range(count)
        for i in range(size)
        for j in range(i + 1, size)
    ]
    return SparseGraph.from_pairs(size * count, pairs), blocks(np.eye(count), size)


def _sbm(seed, n=300, K=3, p=0.3, q=0.02):
    Z = blocks(np.eye(K), n // K)
    B = np.full((K, K), q) + np.eye(K) * (p - q)
    return sample_graph(expected_adjacency(Z, B, alpha=n), seed), Z


def test_sc_two_cliques():
    g, Z = _cliques()
    res = spectral_clustering(g, 2)
    assert misclassified(res.Z, Z)[0] == 0 and res.method == "sc"


def test_occam_two_cliques():
    g, Z = _cliques()
    assert misclassified(occam_baseline(g, 2).Z, Z)[0] == 0


def test_sc_strong_sbm():
    wrong = [misclassified(spectral_clustering(*_sbm(s)[:1], 3, seed=s).Z, _sbm(s)[1])[0] for s in range(5)]
    assert sum(w == 0 for w in wrong) >= 4


def test_occam_matches_sc_on_pure_sbm():
    g, Z = _sbm(1)
    sc = spectral_clustering(g, 3).Z
    oc = occam_baseline(g, 3).Z
    _, sigma = misclassified(oc, sc)
    assert (oc[:, sigma] == sc).all(axis=1).mean() >= 0.95


def test_output_shapes_and_invariants():
    g, _ = _sbm(2)
    sc = spectral_clustering(g, 3, seed=4)
    assert (sc.Z.sum(axis=1) == 1).all()
    oc = occam_baseline(g, 3, seed=4)
    assert (oc.Z.sum(axis=1) >= 1).all()
    assert oc.memberships.shape == (300, 3)
    assert np.allclose(np.linalg.norm(oc.memberships, axis=1), 1)


def test_deterministic_given_seed():
    g, _ = _sbm(3, p=0.1, q=0.05)
    assert np.array_equal(spectral_clustering(g, 3, seed=1).Z, spectral_clustering(g, 3, seed=1).Z)
    assert np.array_equal(occam_baseline(g, 3, seed=1).Z, occam_baseline(g, 3, seed=1).Z)


def test_single_community():
    g, _ = _cliques(6, 1)
    assert (spectral_clustering(g, 1).Z == 1).all()
    assert (occam_baseline(g, 1).Z == 1).all()


def test_isolated_nodes_assigned():
    pairs = [(i, j) for i in range(5) for j in range(i + 1, 5)] + [
        (i, j) for i in range(5, 10) for j in range(i + 1, 10)
    ]
    g = SparseGraph.from_pairs(12, pairs)
    res = spectral_clustering(g, 2)
    assert (res.Z.sum(axis=1) == 1).all()


def test_invalid_k():
    g, _ = _cliques()
    with pytest.raises(ValueError):
        spectral_clustering(g, 0)


def test_k_median_centers_are_medians():
    E = np.array([[0.0], [1.0], [2.0], [100.0], [101.0], [250.0]])
    for seed in range(10):
        C, labels, cost = k_median(E, 2, np.random.default_rng(seed))
        for k in range(2):
            assert C[k, 0] == np.median(E[labels == k, 0])
        assert cost == pytest.approx(np.abs(E - C[labels]).sum())
