import itertools
import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.metrics import normalized_mutual_info_score

from conftest import random_invertible
from projsel import evalmetrics as em
from projsel.errors import ContractError, DegenerateError
from projsel.evalmetrics import SelectionRuns
from projsel.refselect import SelectionResult


def cca_oracle(a, b):
    """Largest generalized eigenvalue of the symmetric CCA pencil."""
    a = a - a.mean(axis=0)
    b = b - b.mean(axis=0)
    p, q = a.shape[1], b.shape[1]
    lhs = np.zeros((p + q, p + q))
    lhs[:p, p:] = a.T @ b
    lhs[p:, :p] = b.T @ a
    rhs = scipy.linalg.block_diag(a.T @ a, b.T @ b)
    return float(scipy.linalg.eigh(lhs, rhs, eigvals_only=True)[-1])


def alignment_oracle(k, kp):
    n = k.shape[0]
    h = np.eye(n) - np.ones((n, n)) / n
    kc, kpc = h @ k @ h, h @ kp @ h
    num = sum(kc[i, j] * kpc[i, j] for i in range(n) for j in range(n))
    return num / math.sqrt(sum(v * v for v in kc.ravel()) * sum(v * v for v in kpc.ravel()))


def stability_oracle(sets, n, k):
    m = len(sets)
    total = 0.0
    for f in range(n):
        p = sum(f in s for s in sets) / m
        total += m / (m - 1) * p * (1 - p)
    kbar = k / n
    return 1 - (total / n) / (kbar * (1 - kbar))


def random_runs(rng, n_runs, n, k):
    runs = []
    for _ in range(n_runs):
        idx = rng.choice(n, size=k, replace=False).tolist()
        rel = np.zeros(n)
        rel[idx] = rng.uniform(0.1, 1.0, size=k)
        runs.append((idx, rel))
    return SelectionRuns(runs=runs, n_total=n, k=k)


class TestCCA:
    def test_identical(self, rng):
        a = rng.standard_normal((30, 3))
        assert em.cca_first(a, a) == pytest.approx(1.0, abs=1e-10)

    def test_orthogonal(self):
        a = np.array([[1.0], [-1.0], [1.0], [-1.0]])
        b = np.array([[1.0], [1.0], [-1.0], [-1.0]])
        assert em.cca_first(a, b) == pytest.approx(0.0, abs=1e-12)

    def test_matches_generalized_eig(self, rng):
        for _ in range(20):
            a, b = rng.standard_normal((50, 3)), rng.standard_normal((50, 4))
            b[:, 0] += a[:, 1]
            assert abs(em.cca_first(a, b) - cca_oracle(a, b)) <= 1e-8

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_symmetric_and_invariant(self, seed):
        rng = np.random.default_rng(seed)
        a, b = rng.standard_normal((40, 3)), rng.standard_normal((40, 2))
        rho = em.cca_first(a, b)
        assert abs(rho - em.cca_first(b, a)) <= 1e-10
        assert abs(rho - em.cca_first(a @ random_invertible(rng, 3), b @ random_invertible(rng, 2))) <= 1e-8

    def test_rank_deficient(self, rng):
        a = rng.standard_normal((30, 2))
        a = np.hstack([a, a[:, :1] * 2])
        assert em.cca_first(a, a[:, :2]) == pytest.approx(1.0, abs=1e-10)

    def test_ridge_shrinks(self, rng):
        a, b = rng.standard_normal((30, 3)), rng.standard_normal((30, 3))
        assert em.cca_first(a, b, reg=0.5) < em.cca_first(a, b)
        assert em.cca_first(a, b, reg=1e-8) == pytest.approx(em.cca_first(a, b), abs=1e-6)

    def test_errors(self, rng):
        with pytest.raises(ContractError):
            em.cca_first(np.ones((1, 2)), np.ones((1, 2)))
        with pytest.raises(ContractError):
            em.cca_first(rng.standard_normal((5, 2)), rng.standard_normal((6, 2)))

    def test_curve(self, rng):
        x, y = rng.standard_normal((40, 6)), rng.standard_normal((40, 3))
        curve = em.cca_curve(x, y, [4, 0, 2])
        assert len(curve) == 3
        assert curve[1] == pytest.approx(em.cca_first(x[:, [4, 0]], y), abs=1e-15)
        assert all(b >= a - 1e-12 for a, b in itertools.pairwise(curve))


class TestAlignment:
    def test_self_and_scale(self, rng):
        a = rng.standard_normal((8, 8))
        k = a @ a.T
        assert em.kernel_alignment(k, k) == pytest.approx(1.0, abs=1e-12)
        assert em.kernel_alignment(k, 2 * k) == pytest.approx(1.0, abs=1e-12)

    def test_constant(self):
        with pytest.raises(DegenerateError):
            em.kernel_alignment(np.ones((4, 4)), np.eye(4))

    def test_matches_direct_formula(self, rng):
        for _ in range(20):
            a, b = rng.standard_normal((6, 6)), rng.standard_normal((6, 3))
            k, kp = a @ a.T, b @ b.T
            assert abs(em.kernel_alignment(k, kp) - alignment_oracle(k, kp)) <= 1e-8
            assert em.kernel_alignment(k, kp) == pytest.approx(em.kernel_alignment(kp, k), abs=1e-14)


class TestStability:
    def test_identical(self):
        runs = SelectionRuns(runs=[([0, 3], None)] * 4, n_total=6, k=2)
        assert em.stability_index(runs) == 1.0

    def test_disjoint_pair(self):
        # p_f = 1/2 everywhere: variance 2 * 1/4 = 1/2 against 1/4 -> 1 - 2
        runs = SelectionRuns(runs=[([0, 1, 2], None), ([3, 4, 5], None)], n_total=6, k=3)
        assert em.stability_index(runs) == pytest.approx(-1.0, abs=1e-15)

    def test_random_runs_near_zero(self):
        rng = np.random.default_rng(0)
        vals = [em.stability_index(random_runs(rng, 5, 20, 6)) for _ in range(1000)]
        assert abs(np.mean(vals)) <= 0.05

    def test_matches_direct_formula(self, rng):
        for _ in range(20):
            runs = random_runs(rng, int(rng.integers(2, 8)), 15, int(rng.integers(1, 15)))
            oracle = stability_oracle([set(i) for i, _ in runs.runs], 15, runs.k)
            assert abs(em.stability_index(runs) - oracle) <= 1e-8

    def test_permutation_invariant(self, rng):
        runs = random_runs(rng, 6, 12, 4)
        shuffled = SelectionRuns(runs=runs.runs[::-1], n_total=12, k=4)
        assert em.stability_index(runs) == pytest.approx(em.stability_index(shuffled), abs=1e-14)

    def test_errors(self):
        with pytest.raises(ContractError):
            em.stability_index(SelectionRuns(runs=[([0, 1], None)] * 2, n_total=2, k=2))
        with pytest.raises(ContractError):
            em.stability_index(SelectionRuns(runs=[([0], None)], n_total=3, k=1))
        with pytest.raises(ContractError):
            SelectionRuns(runs=[([0, 5], None)], n_total=3, k=2)


class TestPearson:
    def test_identical(self, rng):
        runs = random_runs(rng, 1, 10, 4)
        assert em.pearson_relevance(SelectionRuns(runs=runs.runs * 3, n_total=10, k=4)) == pytest.approx(1.0)

    def test_anti_ordered(self):
        a = np.array([1.0, 2.0, 3.0, 0.0])
        runs = SelectionRuns(runs=[([0, 1, 2], a), ([0, 1, 3], 3.0 - a)], n_total=4, k=3)
        assert em.pearson_relevance(runs) == pytest.approx(-1.0, abs=1e-14)

    def test_matches_corrcoef(self, rng):
        for _ in range(20):
            runs = random_runs(rng, int(rng.integers(2, 7)), 12, 5)
            c = np.corrcoef(np.array([r for _, r in runs.runs]))
            oracle = c[np.triu_indices(len(runs.runs), 1)].mean()
            assert abs(em.pearson_relevance(runs) - oracle) <= 1e-8

    def test_constant_relevance(self):
        runs = SelectionRuns(runs=[([0], np.ones(3)), ([1], np.array([0.0, 1.0, 0.0]))], n_total=3, k=1)
        with pytest.raises(DegenerateError) as err:
            em.pearson_relevance(runs)
        assert list(err.value.indices) == [0]

    def test_from_results_skips_short_runs(self):
        full = SelectionResult(indices=[2, 0], scores=[0.9, 0.5], requested=2, achieved=2)
        short = SelectionResult(indices=[1], scores=[0.7], requested=2, achieved=1, stopped_early=True)
        with pytest.warns(UserWarning):
            runs = SelectionRuns.from_results([full, short, full], n_total=4)
        assert len(runs.runs) == 2
        np.testing.assert_array_equal(runs.runs[0][1], [0.5, 0, 0.9, 0])


class TestNMI:
    def test_perfect(self):
        assert em.nmi([0, 0, 1, 1, 2], [5, 5, 3, 3, 9]) == pytest.approx(1.0, abs=1e-14)

    def test_single_cluster(self):
        assert em.nmi([0, 0, 0, 0], [0, 1, 0, 1]) == 0.0

    def test_hand_table(self):
        # contingency [[2, 1], [0, 3]] over 6 points
        h_a = math.log(2)
        h_b = -(1 / 3 * math.log(1 / 3) + 2 / 3 * math.log(2 / 3))
        mi = (1 / 3 - 1 / 6) * math.log(2) + 0.5 * math.log(1.5)
        expected = mi / ((h_a + h_b) / 2)
        assert expected == pytest.approx(0.478704, abs=1e-6)
        assert em.nmi([0, 0, 0, 1, 1, 1], [0, 0, 1, 1, 1, 1]) == pytest.approx(expected, abs=1e-14)

    def test_matches_sklearn(self, rng):
        for _ in range(20):
            a, b = rng.integers(0, 4, 30), rng.integers(0, 3, 30)
            assert abs(em.nmi(a, b) - normalized_mutual_info_score(a, b)) <= 1e-8


class TestKMeans:
    def test_toy_six_points(self):
        data = np.array([[0.0, 0.0], [0.1, 0.0], [0.0, 0.1], [5.0, 5.0], [5.1, 5.0], [5.0, 5.1]])
        labels = [0, 0, 1, 1, 1, 1]
        assert em.kmeans_nmi(data, labels, 2, restarts=3) == pytest.approx(em.nmi([0, 0, 0, 1, 1, 1], labels), abs=1e-14)

    def test_recovers_separated_blobs(self, rng):
        centers = np.array([[0, 0], [10, 0], [0, 10]])
        labels = np.repeat([0, 1, 2], 40)
        data = centers[labels] + rng.standard_normal((120, 2))
        assert em.kmeans_nmi(data, labels, 3, restarts=2, seed=1) == pytest.approx(1.0, abs=1e-12)

    def test_deterministic(self, rng):
        data = rng.standard_normal((60, 3))
        labels = rng.integers(0, 3, 60)
        assert em.kmeans_nmi(data, labels, 3, restarts=3, seed=4) == em.kmeans_nmi(data, labels, 3, restarts=3, seed=4)

    def test_errors(self):
        with pytest.raises(ContractError):
            em.kmeans_nmi(np.zeros((3, 2)), [0, 1, 0], 4)
        with pytest.raises(ContractError):
            em.kmeans_nmi(np.zeros((3, 2)), [0, 1, 0], 1)
        with pytest.raises(ContractError):
            em.kmeans_nmi(np.zeros((3, 2)), [0, 1, 0], 2, restarts=0)
