"""Evaluation metrics for selected variable sets.

* :func:`cca_first` -- largest canonical correlation between two column sets.
* :func:`kernel_alignment` -- cosine between double-centered kernel matrices.
* :func:`stability_index` -- Nogueira et al. stability of repeated selections::

      1 - mean_f(s_f^2) / ((k/n) (1 - k/n)),   s_f^2 = M/(M-1) p_f (1 - p_f)

  where ``p_f`` is the fraction of the ``M`` runs that selected feature ``f``.
* :func:`pearson_relevance` -- mean pairwise Pearson correlation of
  per-run relevance vectors.
* :func:`kmeans_nmi` -- k-means clustering scored by normalized mutual
  information against class labels (arithmetic-mean normalization).
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, DegenerateError
from .kernels import center_gram
from .projops import orthonormal_basis


def _centered(a):
    a = np.asarray(a, dtype=np.float64)
    if a.ndim == 1:
        a = a[:, None]
    return a - a.mean(axis=0)


def _inv_sqrt(c, rank_tol):
    w, v = np.linalg.eigh(c)
    keep = w > rank_tol * max(w[-1], 0.0)
    return (v[:, keep] / np.sqrt(w[keep])) @ v[:, keep].T


def cca_first(a, b, reg=0.0, rank_tol=1e-10):
    """First canonical correlation between the columns of ``a`` and ``b``.

    Both inputs are column-centered. With ``reg == 0`` the correlation is
    the largest singular value of ``Ua' Ub`` for orthonormal bases of the
    centered column spans, truncated at ``rank_tol``, so rank-deficient
    inputs are fine. With ``reg > 0`` each covariance block ``C`` gets a
    ridge of ``reg * trace(C) / p`` before whitening.

    Raises
    ------
    ContractError
        If the row counts differ or there are fewer than two samples.
    """
    a, b = _centered(a), _centered(b)
    if a.shape[0] != b.shape[0]:
        raise ContractError(f"row counts differ: {a.shape[0]} vs {b.shape[0]}")
    if a.shape[0] < 2:
        raise ContractError("canonical correlation needs at least two samples")
    if reg < 0:
        raise ContractError("reg must be non-negative")
    if reg == 0:
        ua = orthonormal_basis(a, rank_tol)
        ub = orthonormal_basis(b, rank_tol)
        if ua.shape[1] == 0 or ub.shape[1] == 0:
            return 0.0
        s = np.linalg.svd(ua.T @ ub, compute_uv=False)
    else:
        caa, cbb, cab = a.T @ a, b.T @ b, a.T @ b
        caa = caa + reg * np.trace(caa) / caa.shape[0] * np.eye(caa.shape[0])
        cbb = cbb + reg * np.trace(cbb) / cbb.shape[0] * np.eye(cbb.shape[0])
        s = np.linalg.svd(_inv_sqrt(caa, rank_tol) @ cab @ _inv_sqrt(cbb, rank_tol), compute_uv=False)
    return float(min(max(s[0], 0.0), 1.0)) if s.size else 0.0


def cca_curve(x, y, x_indices, y_indices=None, reg=0.0):
    """Canonical correlations of growing prefixes of two selections.

    Entry ``k - 1`` compares ``x[:, x_indices[:k]]`` with
    ``y[:, y_indices[:k]]``, or with all of ``y`` when ``y_indices`` is None.
    """
    x = np.asarray(x)
    y = np.asarray(y)
    n = len(x_indices) if y_indices is None else min(len(x_indices), len(y_indices))
    out = []
    for k in range(1, n + 1):
        yy = y if y_indices is None else y[:, list(y_indices[:k])]
        out.append(cca_first(x[:, list(x_indices[:k])], yy, reg=reg))
    return out


def kernel_alignment(k, kp):
    """``<Kc, K'c>_F / (||Kc||_F ||K'c||_F)`` for double-centered ``Kc``, ``K'c``.

    Raises
    ------
    DegenerateError
        If either matrix vanishes after centering (e.g. a constant kernel).
    """
    k = np.asarray(k, dtype=np.float64)
    kp = np.asarray(kp, dtype=np.float64)
    if k.shape != kp.shape:
        raise ContractError(f"shape mismatch: {k.shape} vs {kp.shape}")
    kc, kpc = center_gram(k), center_gram(kp)
    nk, nkp = np.linalg.norm(kc), np.linalg.norm(kpc)
    scale = max(np.abs(k).max(), np.abs(kp).max(), np.finfo(float).tiny)
    if nk <= 1e-12 * scale * k.shape[0] or nkp <= 1e-12 * scale * k.shape[0]:
        raise DegenerateError("kernel matrix is constant after centering")
    return float(np.sum(kc * kpc) / (nk * nkp))


@dataclass
class SelectionRuns:
    """Repeated selections over the same pool of ``n_total`` candidates.

    ``runs`` holds ``(indices, relevance)`` pairs. Runs whose size differs
    from ``k`` (early stops) are dropped with a warning when the object is
    built with :meth:`from_results`.
    """

    runs: list
    n_total: int
    k: int

    def __post_init__(self):
        for idx, rel in self.runs:
            if len(set(idx)) != self.k:
                raise ContractError(f"every run must select exactly k = {self.k} distinct indices")
            if any(i < 0 or i >= self.n_total for i in idx):
                raise ContractError(f"index out of range 0..{self.n_total - 1}")
            if rel is not None and len(rel) != self.n_total:
                raise ContractError("relevance vectors must have length n_total")

    @classmethod
    def from_results(cls, results, n_total, k=None):
        """Build from :class:`~projsel.refselect.SelectionResult` objects.

        ``k`` defaults to the requested size; results truncated to their
        first ``k`` picks are accepted, shorter ones are skipped.
        """
        if k is None:
            k = max(r.requested for r in results)
        runs = []
        for i, r in enumerate(results):
            if r.achieved < k:
                warnings.warn(f"run {i} selected {r.achieved} < {k} variables; excluded", stacklevel=2)
                continue
            idx = list(r.indices[:k])
            rel = np.zeros(n_total)
            rel[idx] = r.scores[:k]
            runs.append((idx, rel))
        return cls(runs=runs, n_total=n_total, k=k)

    def indicator(self):
        z = np.zeros((len(self.runs), self.n_total))
        for row, (idx, _) in enumerate(self.runs):
            z[row, list(idx)] = 1.0
        return z


def stability_index(runs):
    """Stability of repeated selections; 1 iff every run picked the same set.

    Raises
    ------
    ContractError
        With fewer than two runs, or if ``k`` is 0 or ``n_total`` (the
        normalizer vanishes).
    """
    if len(runs.runs) < 2:
        raise ContractError("stability needs at least two runs")
    kbar = runs.k / runs.n_total
    if runs.k == 0 or runs.k == runs.n_total:
        raise ContractError("stability index undefined for k = 0 or k = n_total")
    z = runs.indicator()
    var = z.var(axis=0, ddof=1)
    return float(1.0 - var.mean() / (kbar * (1.0 - kbar)))


def pearson_relevance(runs):
    """Mean Pearson correlation of relevance vectors over unordered run pairs.

    Raises
    ------
    DegenerateError
        If some relevance vector is constant; ``indices`` names the run.
    """
    if len(runs.runs) < 2:
        raise ContractError("relevance correlation needs at least two runs")
    rel = np.array([np.asarray(r, dtype=np.float64) for _, r in runs.runs])
    rel = rel - rel.mean(axis=1, keepdims=True)
    norms = np.linalg.norm(rel, axis=1)
    bad = np.flatnonzero(norms == 0.0)
    if bad.size:
        raise DegenerateError(f"constant relevance vector in runs {bad.tolist()}", bad)
    rel /= norms[:, None]
    vals = [rel[i] @ rel[j] for i, j in itertools.combinations(range(len(rel)), 2)]
    return float(np.mean(vals))


def _entropy(counts):
    p = counts[counts > 0] / counts.sum()
    return float(-(p * np.log(p)).sum())


def nmi(labels_a, labels_b):
    """Normalized mutual information, arithmetic-mean normalization.

    A partition with a single block has zero entropy; the score is then
    defined as 0.
    """
    a = np.unique(np.asarray(labels_a), return_inverse=True)[1]
    b = np.unique(np.asarray(labels_b), return_inverse=True)[1]
    if a.shape != b.shape:
        raise ContractError("label vectors differ in length")
    table = np.zeros((a.max() + 1, b.max() + 1))
    np.add.at(table, (a, b), 1.0)
    ha, hb = _entropy(table.sum(axis=1)), _entropy(table.sum(axis=0))
    if ha == 0.0 or hb == 0.0:
        return 0.0
    n = table.sum()
    pij = table / n
    outer = np.outer(table.sum(axis=1), table.sum(axis=0)) / n**2
    nz = pij > 0
    mi = float((pij[nz] * np.log(pij[nz] / outer[nz])).sum())
    return float(min(max(mi / (0.5 * (ha + hb)), 0.0), 1.0))


def kmeans(data, n_clusters, rng, max_iter=300, tol=1e-6):
    """Lloyd's algorithm with k-means++ seeding.

    Stops when inertia changes by at most ``tol`` relative, or after
    ``max_iter`` iterations. Returns ``(labels, centers, inertia)``.
    """
    data = np.asarray(data, dtype=np.float64)
    n = data.shape[0]
    centers = np.empty((n_clusters, data.shape[1]))
    centers[0] = data[rng.integers(n)]
    d2 = ((data - centers[0]) ** 2).sum(axis=1)
    for c in range(1, n_clusters):
        total = d2.sum()
        idx = rng.choice(n, p=d2 / total) if total > 0 else rng.integers(n)
        centers[c] = data[idx]
        d2 = np.minimum(d2, ((data - centers[c]) ** 2).sum(axis=1))

    sq = (data**2).sum(axis=1)
    prev = np.inf
    for _ in range(max_iter):
        dist = sq[:, None] - 2.0 * data @ centers.T + (centers**2).sum(axis=1)[None, :]
        np.maximum(dist, 0.0, out=dist)
        labels = dist.argmin(axis=1)
        inertia = float(dist[np.arange(n), labels].sum())
        for c in range(n_clusters):
            members = labels == c
            if members.any():
                centers[c] = data[members].mean(axis=0)
            else:
                far = int(dist[np.arange(n), labels].argmax())
                centers[c] = data[far]
        if np.isfinite(prev) and abs(prev - inertia) <= tol * max(prev, np.finfo(float).tiny):
            break
        prev = inertia
    return labels, centers, inertia


def kmeans_nmi(data, labels, n_clusters, restarts=1, seed=0):
    """Mean NMI between seeded k-means clusterings and ``labels``.

    ``data`` has samples in rows. Restart ``r`` uses the generator seeded
    with ``(seed, r)``.
    """
    data = np.asarray(data, dtype=np.float64)
    if data.ndim == 1:
        data = data[:, None]
    labels = np.asarray(labels)
    if n_clusters < 2:
        raise ContractError("n_clusters must be at least 2")
    if restarts < 1:
        raise ContractError("restarts must be at least 1")
    if n_clusters > data.shape[0]:
        raise ContractError(f"n_clusters = {n_clusters} exceeds the {data.shape[0]} samples")
    if labels.shape[0] != data.shape[0]:
        raise ContractError("labels and data differ in length")
    scores = []
    for r in range(restarts):
        found, _, _ = kmeans(data, n_clusters, np.random.default_rng([seed, r]))
        scores.append(nmi(found, labels))
    return float(np.mean(scores))
