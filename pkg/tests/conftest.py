import hypothesis
import numpy as np
import pytest

hypothesis.settings.register_profile("default", max_examples=50, deadline=None)
hypothesis.settings.load_profile("default")


def blocks(rows, size):
    """Expand a small 0/1 pattern so that each row becomes a block of ``size`` nodes."""
    return np.repeat(np.asarray(rows, dtype=np.int8), size, axis=0)


def example1(a=0.6, b=0.5, c=0.4, size=20):
    """Three equivalent parameterizations of one expected adjacency matrix."""
    Z = blocks([[1, 1, 0], [0, 1, 1], [1, 0, 1]], size)
    B = np.diag([a, b, c])
    Zp = blocks(np.eye(3, dtype=np.int8), size)
    Bp = np.array([[a + b, b, a], [b, b + c, c], [a, c, a + c]])
    Zpp = blocks([[1, 0, 0, 1], [0, 1, 0, 1], [0, 0, 1, 1]], size)
    Bpp = np.array(
        [
            [a + b - c, b - c, a - c, 0],
            [b - c, b, 0, 0],
            [a - c, 0, a, 0],
            [0, 0, 0, c],
        ]
    )
    return dict(Z=Z, B=B, Zp=Zp, Bp=Bp, Zpp=Zpp, Bpp=Bpp)


def random_identifiable(rng, n, K, m=2):
    """Random SBMO with a pure node in every community and a well-conditioned B."""
    Z = np.zeros((n, K), dtype=np.int8)
    per = max(1, n // (2 * K))
    Z[np.arange(per * K), np.repeat(np.arange(K), per)] = 1
    for i in range(per * K, n):
        size = int(rng.integers(1, min(m, K) + 1))
        Z[i, rng.choice(K, size=size, replace=False)] = 1
    M = rng.uniform(0.0, 0.3, size=(K, K))
    B = (M + M.T) / 2 + np.diag(rng.uniform(0.5, 1.0, size=K))
    return Z, B


@pytest.fixture
def ex1():
    return example1()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def write_ego_files(directory, name, Z, g, offset=1000):
    """SNAP-style ``<name>.edges`` / ``<name>.circles`` pair with non-contiguous ids."""
    from pathlib import Path

    directory = Path(directory)
    with open(directory / f"{name}.edges", "w") as fh:
        for i, j in g.without_loops().edges:
            fh.write(f"{offset + 3 * i} {offset + 3 * j}\n")
    with open(directory / f"{name}.circles", "w") as fh:
        for k in range(Z.shape[1]):
            ids = " ".join(str(offset + 3 * i) for i in np.flatnonzero(Z[:, k]))
            fh.write(f"circle{k}\t{ids}\n")
    return directory / f"{name}.edges", directory / f"{name}.circles"


def planted_ego(seed=0, n=300, K=3, p=0.6, m=2):
    """Strong-signal SBMO whose every node has at least one edge."""
    from saac.sbmo import expected_adjacency, generate_membership, sample_graph

    Z = generate_membership(n, K, p, m, seed)
    B = np.diag(np.linspace(0.35, 0.25, K))
    g = sample_graph(expected_adjacency(Z, B, alpha=n), seed + 1)
    assert (g.without_loops().degrees > 0).all()
    return Z, g


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
