"""Kernelized recursive variable selection.

The working projector is never formed. With ``K_YY = V diag(s^2) V'`` the
coordinates of every candidate in an orthonormal basis of the reference
feature span are the columns of

    R = diag(s^+) V' K_YX          (n_y x n_x)

and the squared column norms of ``R`` are the selection scores. Selecting
column ``k`` with pivot ``q = R[:, k]`` deflates the basis by
``Q(q) = I - q q' / ||q||^2``, i.e. ``R <- R - q (q' R) / ||q||^2``. One
step costs O(n_y n_x); for ``m >> n_x, n_y`` the kernel assembly
dominates, O(m n_y max(n_x, n_y)), and it is the only part that touches
the samples, which is why :func:`select_streaming` only needs to stream
rows through a :class:`~projsel.kernels.GramAccumulator`.
"""

from __future__ import annotations

import time

import numpy as np

from . import matio
from .errors import ContractError
from .kernels import RANK_TOL, GramAccumulator, KernelSpec, gram_factor, kernel_matrices
from .refselect import SCORE_TOL, STOP_LOW_SCORE, SelectionResult, check_inputs

REFRESH_EVERY = 64
DEFAULT_CHUNK_ROWS = 65536

PHASE_LABELS = {
    "k_yx": "Computing K_yx",
    "k_yy": "Computing K_yy",
    "eig": "Eigen decomp. of K_yy",
    "loop": "Selection loop",
}


def initial_coordinates(k_yy, k_yx, rank_tol=RANK_TOL):
    """Return ``(R0, GramFactor)`` with ``R0 = diag(s^+) V' K_YX``."""
    gf = gram_factor(k_yy, rank_tol)
    r = gf.s_pinv[:, None] * (gf.V.T @ np.asarray(k_yx, dtype=np.float64))
    return r, gf


def select_from_coordinates(r, d, score_tol=SCORE_TOL, refresh_every=REFRESH_EVERY):
    """Run the recursive selection loop on a coordinate matrix ``R``.

    ``R`` is modified in place. Returns ``(indices, scores, reason)`` where
    ``reason`` is empty when all ``d`` variables were selected.

    The per-column squared norms are kept as a running vector and updated
    from the rank-one structure of each deflation, then recomputed from
    scratch every ``refresh_every`` steps to shed accumulated rounding.
    Already selected columns are masked with -1.
    """
    n_x = r.shape[1]
    running = np.einsum("ij,ij->j", r, r)
    selected = np.zeros(n_x, dtype=bool)
    indices, scores = [], []
    q = None
    reason = ""
    for t in range(d):
        if t > 0:
            qq = float(q @ q)
            w = q @ r
            r -= np.outer(q / qq, w)
            if t % refresh_every == 0:
                running = np.einsum("ij,ij->j", r, r)
            else:
                running -= w * w / qq
            running[selected] = -1.0
        k = int(np.argmax(running))
        q = r[:, k].copy()
        score = float(q @ q)
        if running[k] <= score_tol or score <= score_tol:
            reason = STOP_LOW_SCORE
            break
        indices.append(k)
        scores.append(score)
        selected[k] = True
        running[k] = -1.0
    return indices, scores, reason


def _finish(result, indices, scores, reason, timings, sigma, spec):
    result.indices = indices
    result.scores = scores
    result.achieved = len(indices)
    result.stopped_early = bool(reason)
    result.reason = reason
    result.kernel = spec.to_dict(sigma)
    result.timings_ms = {k: 1000.0 * v for k, v in timings.items()}
    return result


def select_kernel(y, x, d, spec=None, rank_tol=RANK_TOL, score_tol=SCORE_TOL, unit_norm=False):
    """Select ``d`` columns of ``x`` by kernelized projection onto the span of ``y``.

    Parameters
    ----------
    y : array, shape (m, n_y)
    x : array, shape (m, n_x)
    d : int
        ``1 <= d <= min(n_y, n_x)``.
    spec : KernelSpec, optional
        Defaults to the linear kernel. With the linear kernel the columns
        should already have unit norm (see :func:`projsel.matio.preprocess`).
    rank_tol : float
        Relative cutoff on the singular values of the reference features.
    score_tol : float
        Stop early once the best remaining score is at or below this.
    unit_norm : bool
        Scale columns to unit norm (after any centering) before the kernel
        is applied.

    Returns
    -------
    SelectionResult
        ``timings_ms`` holds ``k_yx``, ``k_yy``, ``eig`` and ``loop``.
    """
    spec = spec or KernelSpec()
    y, x = check_inputs(y, x, d)
    k_yy, k_yx, sigma, timings = kernel_matrices(y, x, spec, unit_norm=unit_norm)
    return _select_from_kernels(k_yy, k_yx, d, spec, sigma, timings, rank_tol, score_tol)


def _select_from_kernels(k_yy, k_yx, d, spec, sigma, timings, rank_tol, score_tol):
    t0 = time.perf_counter()
    r, _ = initial_coordinates(k_yy, k_yx, rank_tol)
    t1 = time.perf_counter()
    indices, scores, reason = select_from_coordinates(r, d, score_tol)
    t2 = time.perf_counter()
    timings = dict(timings, eig=t1 - t0, loop=t2 - t1)
    result = SelectionResult(requested=int(d))
    return _finish(result, indices, scores, reason, timings, sigma, spec)


def _column_means(mm, chunk_rows):
    total = np.zeros(mm.shape[1])
    for a in range(0, mm.shape[0], chunk_rows):
        total += np.asarray(mm[a : a + chunk_rows]).sum(axis=0)
    return total / mm.shape[0]


def select_streaming(y_path, x_path, d, spec=None, chunk_rows=DEFAULT_CHUNK_ROWS,
                     rank_tol=RANK_TOL, score_tol=SCORE_TOL, unit_norm=False):
    """Like :func:`select_kernel`, reading PSELMAT1 files in row blocks.

    Peak memory is O(chunk_rows (n_x + n_y) + n_y n_x), plus ``n_x^2`` when
    an automatic rbf bandwidth is requested. With column centering the
    means are computed in a first pass. ``timings_ms`` gains an ``io``
    entry for time spent reading blocks.

    Raises
    ------
    ContractError
        If the two files disagree on the row count or ``chunk_rows < 1``.
    """
    spec = spec or KernelSpec()
    if chunk_rows < 1:
        raise ContractError("chunk_rows must be at least 1")
    ym = matio.open_bin(y_path)
    xm = matio.open_bin(x_path)
    if ym.shape[0] != xm.shape[0]:
        raise ContractError(f"{y_path} has {ym.shape[0]} rows but {x_path} has {xm.shape[0]}")
    n_y, n_x = ym.shape[1], xm.shape[1]
    check_inputs(np.empty((1, n_y)), np.empty((1, n_x)), d)

    io = 0.0
    mu_y = mu_x = None
    if spec.center_columns:
        t0 = time.perf_counter()
        mu_y = _column_means(ym, chunk_rows)
        mu_x = _column_means(xm, chunk_rows)
        io += time.perf_counter() - t0

    acc = GramAccumulator(n_y, n_x, need_xx=spec.needs_auto_sigma and spec.sigma_over != "y")
    m = ym.shape[0]
    for a in range(0, m, chunk_rows):
        t0 = time.perf_counter()
        yb = np.asarray(ym[a : a + chunk_rows])
        xb = np.asarray(xm[a : a + chunk_rows])
        if mu_y is not None:
            yb = yb - mu_y
            xb = xb - mu_x
        if not (np.isfinite(yb).all() and np.isfinite(xb).all()):
            raise ContractError(f"non-finite values in rows {a}..{a + yb.shape[0] - 1}")
        io += time.perf_counter() - t0
        acc.update(yb, xb)
    k_yy, k_yx, sigma = acc.finalize(spec, unit_norm=unit_norm)
    del ym, xm
    timings = dict(acc.timings, io=io)
    return _select_from_kernels(k_yy, k_yx, d, spec, sigma, timings, rank_tol, score_tol)


def format_timings(result):
    """Human-readable phase breakdown, one ``label: ms`` line per phase."""
    lines = []
    for key, label in PHASE_LABELS.items():
        if key in result.timings_ms:
            lines.append(f"{label}: {result.timings_ms[key]:.3f} ms")
    for key, val in result.timings_ms.items():
        if key not in PHASE_LABELS:
            lines.append(f"{key}: {val:.3f} ms")
    return "\n".join(lines)
