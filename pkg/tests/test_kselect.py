import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_instance, random_invertible, tie_free_instance, unit_columns
from projsel import kernels as kn
from projsel import matio
from projsel import projops as po
from projsel.datagen import GenSpec, generate_files
from projsel.errors import ContractError
from projsel.kernels import KernelSpec
from projsel.kselect import (
    PHASE_LABELS,
    format_timings,
    initial_coordinates,
    select_from_coordinates,
    select_kernel,
    select_streaming,
)
from projsel.refselect import select_explicit

SPECS = {
    "linear": KernelSpec(),
    "poly3": KernelSpec(family="poly3"),
    "rbf": KernelSpec(family="rbf"),
    "rbf-fixed-centered": KernelSpec(family="rbf", rbf_sigma=2.0, center_columns=True),
}


def test_reference_copy_first(rng):
    x = unit_columns(rng.standard_normal((25, 7)))
    res = select_kernel(x[:, 3:4], x, 1)
    assert res.indices == [3]
    assert res.scores[0] == pytest.approx(1.0, abs=1e-12)


def test_duplicate_columns_never_both_selected(rng):
    y, x = random_instance(rng, 50, 10, 8)
    x[:, 7] = x[:, 2]
    res = select_kernel(y, x, 8)
    assert 2 in res.indices or 7 in res.indices
    assert not {2, 7} <= set(res.indices)
    explicit = select_explicit(y, x, 8)
    assert res.indices == explicit.indices
    # the duplicate's coordinates vanish once its twin is deflated
    r, _ = initial_coordinates(*kn.kernel_matrices(y, x, KernelSpec())[:2])
    first = res.indices.index(2) if 2 in res.indices else res.indices.index(7)
    # deflation by the pivot happens at the start of the following step
    select_from_coordinates(r, first + 2)
    assert np.linalg.norm(r[:, 7]) <= 1e-9 and np.linalg.norm(r[:, 2]) <= 1e-9


def test_oracle_equivalence(rng):
    for _ in range(20):
        y, x = tie_free_instance(rng, 100, 30, 8)
        assert select_kernel(y, x, 8).indices == select_explicit(y, x, 8).indices


def test_scores_match_explicit(rng):
    y, x = tie_free_instance(rng, 60, 20, 5)
    np.testing.assert_allclose(select_kernel(y, x, 5).scores, select_explicit(y, x, 5).scores, rtol=0, atol=1e-10)


def test_initial_scores_match_projector(rng):
    y, x = random_instance(rng, 30, 9, 4)
    k_yy, k_yx, _, _ = kn.kernel_matrices(y, x, KernelSpec())
    r, _ = initial_coordinates(k_yy, k_yx)
    p = po.projector_from_matrix(y)
    for j in range(9):
        assert abs(r[:, j] @ r[:, j] - po.corr(x[:, j], p) ** 2) <= 1e-8


@pytest.mark.parametrize("name", SPECS)
def test_loop_invariants(rng, name):
    y, x = rng.standard_normal((40, 6)), rng.standard_normal((40, 15))
    k_yy, k_yx, _, _ = kn.kernel_matrices(unit_columns(y), unit_columns(x), SPECS[name])
    r, _ = initial_coordinates(k_yy, k_yx)
    idx, scores, _ = select_from_coordinates(r, 6)
    for t, k in enumerate(idx):
        # R after t deflations, i.e. the state in which step t scored its pivot
        rt, _ = initial_coordinates(k_yy, k_yx)
        select_from_coordinates(rt, t)
        if t:
            q = rt[:, idx[t - 1]].copy()
            rt -= np.outer(q / (q @ q), q @ rt)
        col = np.einsum("ij,ij->j", rt, rt)
        assert np.all(col <= 1 + 1e-9)
        assert scores[t] == pytest.approx(col[k], abs=1e-12)
        for j in idx[: t]:
            assert np.linalg.norm(rt[:, j]) <= 1e-9


def test_energy_non_increasing(rng):
    y, x = random_instance(rng, 50, 20, 10)
    k_yy, k_yx, _, _ = kn.kernel_matrices(y, x, KernelSpec())
    prev = np.inf
    for t in range(11):
        r, _ = initial_coordinates(k_yy, k_yx)
        select_from_coordinates(r, t) if t else None
        e = float(np.sum(r * r))
        assert e <= prev + 1e-12
        prev = e


def test_refresh_does_not_change_selection(rng):
    y, x = random_instance(rng, 300, 120, 100)
    k_yy, k_yx, _, _ = kn.kernel_matrices(y, x, KernelSpec())
    r1, _ = initial_coordinates(k_yy, k_yx)
    r2 = r1.copy()
    a = select_from_coordinates(r1, 100)
    b = select_from_coordinates(r2, 100, refresh_every=1)
    assert a[0] == b[0]
    np.testing.assert_allclose(a[1], b[1], rtol=0, atol=1e-10)


def test_deterministic(rng):
    y, x = rng.standard_normal((40, 5)), rng.standard_normal((40, 12))
    spec = KernelSpec(family="rbf")
    a, b = select_kernel(y, x, 5, spec), select_kernel(y, x, 5, spec)
    assert (a.indices, a.scores, a.kernel) == (b.indices, b.scores, b.kernel)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_output_subspace_invariance(seed):
    rng = np.random.default_rng(seed)
    y, x = tie_free_instance(rng, 50, 15, 6)
    t = random_invertible(rng, 6) @ np.diag(rng.uniform(0.1, 10.0, 6))
    assert select_kernel(y @ t, x, 6).indices == select_kernel(y, x, 6).indices


def test_errors(rng):
    y, x = random_instance(rng, 10, 4, 3)
    with pytest.raises(ContractError):
        select_kernel(y, x, 4)
    with pytest.raises(ContractError):
        select_kernel(y, x, 0)
    with pytest.raises(ContractError):
        select_kernel(y[:9], x, 1)


def test_result_fields(rng):
    y, x = random_instance(rng, 20, 6, 3)
    res = select_kernel(y, x, 3, KernelSpec(family="rbf"))
    assert set(res.timings_ms) == set(PHASE_LABELS)
    assert res.kernel["family"] == "rbf" and res.kernel["rbf_sigma"] > 0
    text = format_timings(res)
    for label in PHASE_LABELS.values():
        assert label in text


def write_pair(tmp_path, y, x):
    matio.save_bin(y, tmp_path / "y.bin")
    matio.save_bin(x, tmp_path / "x.bin")
    return tmp_path / "y.bin", tmp_path / "x.bin"


class TestStreaming:
    @pytest.mark.parametrize("name", SPECS)
    @pytest.mark.parametrize("unit_norm", [False, True])
    def test_single_chunk_bitwise(self, tmp_path, rng, name, unit_norm):
        y, x = rng.standard_normal((40, 5)) + 0.5, rng.standard_normal((40, 12))
        yp, xp = write_pair(tmp_path, y, x)
        mem = select_kernel(y, x, 5, SPECS[name], unit_norm=unit_norm)
        st_ = select_streaming(yp, xp, 5, SPECS[name], chunk_rows=40, unit_norm=unit_norm)
        assert st_.indices == mem.indices
        assert st_.scores == mem.scores
        assert st_.kernel == mem.kernel

    @pytest.mark.parametrize("name", SPECS)
    @pytest.mark.parametrize("chunk", [1, 3, 7])
    def test_small_chunks(self, tmp_path, rng, name, chunk):
        y, x = random_instance(rng, 10, 8, 4)
        yp, xp = write_pair(tmp_path, y, x)
        mem = select_kernel(y, x, 4, SPECS[name])
        st_ = select_streaming(yp, xp, 4, SPECS[name], chunk_rows=chunk)
        assert st_.indices == mem.indices
        np.testing.assert_allclose(st_.scores, mem.scores, rtol=0, atol=1e-10)

    def test_datagen_files(self, tmp_path):
        spec = GenSpec(m=5000, n_x=30, n_y=30, seed=11)
        generate_files(spec, tmp_path / "x.bin", tmp_path / "y.bin")
        y, x = matio.load_bin(tmp_path / "y.bin"), matio.load_bin(tmp_path / "x.bin")
        mem = select_kernel(y, x, 10)
        st_ = select_streaming(tmp_path / "y.bin", tmp_path / "x.bin", 10, chunk_rows=777)
        assert st_.indices == mem.indices
        np.testing.assert_allclose(st_.scores, mem.scores, rtol=1e-12)
        assert "io" in st_.timings_ms

    def test_row_mismatch(self, tmp_path, rng):
        yp, _ = write_pair(tmp_path, rng.standard_normal((10, 2)), rng.standard_normal((10, 3)))
        matio.save_bin(rng.standard_normal((9, 3)), tmp_path / "x9.bin")
        with pytest.raises(ContractError):
            select_streaming(yp, tmp_path / "x9.bin", 1)

    def test_bad_chunk(self, tmp_path, rng):
        yp, xp = write_pair(tmp_path, rng.standard_normal((10, 2)), rng.standard_normal((10, 3)))
        with pytest.raises(ContractError):
            select_streaming(yp, xp, 1, chunk_rows=0)

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            select_streaming(tmp_path / "nope.bin", tmp_path / "nope2.bin", 1)

    @pytest.mark.slow
    def test_million_rows_match_in_memory(self, tmp_path):
        spec = GenSpec(m=10**6, n_x=100, n_y=100, seed=5)
        generate_files(spec, tmp_path / "x.bin", tmp_path / "y.bin")
        st_ = select_streaming(tmp_path / "y.bin", tmp_path / "x.bin", 10, chunk_rows=65536)
        y, x = matio.load_bin(tmp_path / "y.bin"), matio.load_bin(tmp_path / "x.bin")
        mem = select_kernel(y, x, 10)
        assert st_.indices == mem.indices
