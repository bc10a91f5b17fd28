import os

import numpy as np
import pytest

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def fixture_paths():
    return {
        "x": os.path.join(DATA_DIR, "fixture_x.csv"),
        "y": os.path.join(DATA_DIR, "fixture_y.csv"),
        "labels": os.path.join(DATA_DIR, "fixture_labels.txt"),
    }


def unit_columns(a):
    a = np.asarray(a, dtype=float)
    return a / np.linalg.norm(a, axis=0)


def random_instance(rng, m, n_x, n_y):
    """Unit-norm Gaussian (Y, X) pair."""
    return unit_columns(rng.standard_normal((m, n_y))), unit_columns(rng.standard_normal((m, n_x)))


def random_subspace(rng, m, k):
    """Orthonormal basis of a random k-dimensional subspace of R^m."""
    q, _ = np.linalg.qr(rng.standard_normal((m, k)))
    return q


def planted_pair(rng, m, k1, k2, common):
    """Bases of two random subspaces sharing a planted ``common``-dimensional part."""
    c = random_subspace(rng, m, common)
    a = np.hstack([c, rng.standard_normal((m, k1 - common))])
    b = np.hstack([c, rng.standard_normal((m, k2 - common))])
    return a, b, c


def random_invertible(rng, n):
    """Well-conditioned random invertible matrix."""
    while True:
        t = rng.standard_normal((n, n))
        if np.linalg.cond(t) < 1e3:
            return t


def principal_cosines(a, b):
    qa, _ = np.linalg.qr(a)
    qb, _ = np.linalg.qr(b)
    return np.linalg.svd(qa.T @ qb, compute_uv=False)


def random_pair_instance(rng, max_dim=30, gap=0.998):
    """Two random subspaces of R^m (m <= max_dim) with a planted common part.

    Instances whose largest non-unit principal cosine exceeds ``gap`` are
    redrawn: alternating projections need about ``1 / (1 - cos^2)``
    iterations there, beyond the default iteration cap.
    """
    while True:
        m = int(rng.integers(4, max_dim + 1))
        k1, k2 = int(rng.integers(1, m)), int(rng.integers(1, m))
        common = int(rng.integers(0, min(k1, k2) + 1))
        a, b, _ = planted_pair(rng, m, k1, k2, common) if common else (
            rng.standard_normal((m, k1)), rng.standard_normal((m, k2)), None)
        cos = principal_cosines(a, b)
        if not np.any((cos > gap) & (cos < 1 - 1e-9)):
            return a, b


def step_gaps(y, x, indices):
    """Gap between the best and runner-up candidate score at every step."""
    from projsel.refselect import step_projectors

    xn = unit_columns(x)
    gaps = []
    available = np.ones(x.shape[1], dtype=bool)
    for p, k in zip(step_projectors(y, xn, indices), indices):
        px = p @ xn
        s = np.einsum("ij,ij->j", px, px)[available]
        s = np.sort(s)[::-1]
        gaps.append(s[0] - s[1] if s.size > 1 else np.inf)
        available[k] = False
    return np.array(gaps)


def tie_free_instance(rng, m, n_x, n_y, tol=1e-9):
    """Random unit-norm instance whose explicit selection has no near tie."""
    from projsel.refselect import select_explicit

    while True:
        y, x = random_instance(rng, m, n_x, n_y)
        res = select_explicit(y, x, min(n_x, n_y))
        if np.all(step_gaps(y, x, res.indices) > tol):
            return y, x
