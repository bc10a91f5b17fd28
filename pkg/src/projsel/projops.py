"""Dense orthogonal-projector algebra.

Projectors are plain ``(m, m)`` float64 arrays that are symmetric and
idempotent. Everything here costs O(m^2) memory and up to O(m^3) time, so
the module serves as the reference path and as a set of cross-checking
oracles for the scalable solver in :mod:`projsel.kselect`.

Three independent constructions of the projector onto an intersection of
subspaces are provided:

* :func:`intersect_anderson` -- closed form ``2 P1 (P1 + P2)^+ P2``;
* :func:`intersect_ben_israel` -- ``I - Q^+ Q`` with ``Q = sum_i w_i (I - P_i)``;
* :func:`intersect_von_neumann` -- the limit of ``(P1 P2)^n``.

:func:`deflate` handles the special case of intersecting with the
orthogonal complement of a single vector by a rank-one update.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError, DegenerateError

PINV_TOL = 1e-10
ALPHA_TOL = 1e-12


def pinv(a, rtol=PINV_TOL):
    """Moore-Penrose inverse via full SVD, cutting singular values below ``rtol * s_max``."""
    return np.linalg.pinv(np.asarray(a, dtype=np.float64), rcond=rtol)


def _symmetrize(p):
    return 0.5 * (p + p.T)


def projector_error(p):
    """Return ``(symmetry, idempotence)`` max-norm defects of ``p``."""
    p = np.asarray(p)
    return float(np.max(np.abs(p - p.T))), float(np.max(np.abs(p @ p - p)))


def check_projector(p, sym_tol=1e-10, idem_tol=1e-8):
    """Raise :class:`ContractError` unless ``p`` is a symmetric idempotent square matrix."""
    p = np.asarray(p)
    if p.ndim != 2 or p.shape[0] != p.shape[1]:
        raise ContractError(f"projector must be square, got shape {p.shape}")
    sym, idem = projector_error(p)
    if sym > sym_tol:
        raise ContractError(f"projector not symmetric (defect {sym:.3g})")
    if idem > idem_tol:
        raise ContractError(f"projector not idempotent (defect {idem:.3g})")
    return p


def orthonormal_basis(a, rank_tol=PINV_TOL):
    """Left singular vectors of ``a`` whose singular values exceed ``rank_tol * s_max``."""
    a = np.asarray(a, dtype=np.float64)
    if a.ndim == 1:
        a = a[:, None]
    u, s, _ = np.linalg.svd(a, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return u[:, :0]
    return u[:, s > rank_tol * s[0]]


def projector_from_matrix(a, rank_tol=PINV_TOL):
    """Projector onto the column span of ``a``.

    Columns need not be linearly independent; the rank is the number of
    singular values above ``rank_tol`` times the largest one. An all-zero
    ``a`` gives the zero projector.

    Examples
    --------
    >>> projector_from_matrix([[1.0, 2.0], [1.0, 2.0]])
    array([[0.5, 0.5],
           [0.5, 0.5]])
    """
    u = orthonormal_basis(a, rank_tol)
    return _symmetrize(u @ u.T)


def complement(p):
    """Projector onto the orthogonal complement of ``range(p)``."""
    p = np.asarray(p, dtype=np.float64)
    return np.eye(p.shape[0]) - p


def corr(x, p_y):
    """Projection correlation ``||P_Y x / ||x||||`` of a variable with a subspace.

    Raises
    ------
    DegenerateError
        If ``x`` is the zero vector.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    nrm = np.linalg.norm(x)
    if nrm == 0.0:
        raise DegenerateError("correlation of a zero vector is undefined")
    u = x / nrm
    return float(np.sqrt(max(u @ (np.asarray(p_y) @ u), 0.0)))


def deflate(p, x, alpha_tol=ALPHA_TOL):
    """Projector onto ``range(p)`` intersected with the complement of unit vector ``x``.

    With ``alpha = x' P x``, returns ``P - P x x' P / alpha``; when
    ``alpha <= alpha_tol`` the vector is orthogonal to ``range(p)`` and ``p``
    comes back unchanged.
    """
    p = np.asarray(p, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64).ravel()
    px = p @ x
    alpha = float(x @ px)
    if alpha <= alpha_tol:
        return p
    return _symmetrize(p - np.outer(px, px) / alpha)


def intersect_anderson(p1, p2, pinv_tol=PINV_TOL):
    """Projector onto ``range(p1) & range(p2)`` by the Anderson-Duffin parallel sum."""
    p1 = np.asarray(p1, dtype=np.float64)
    p2 = np.asarray(p2, dtype=np.float64)
    if p1.shape != p2.shape:
        raise ContractError(f"dimension mismatch: {p1.shape} vs {p2.shape}")
    return _symmetrize(2.0 * p1 @ pinv(p1 + p2, pinv_tol) @ p2)


@dataclass(frozen=True)
class BenIsraelConfig:
    """Weights and pseudo-inverse cutoff for :func:`intersect_ben_israel`.

    ``lambdas=None`` means uniform weights over the projectors passed in.
    """

    lambdas: tuple | None = None
    pinv_tol: float = PINV_TOL

    def weights(self, n):
        if self.lambdas is None:
            return np.full(n, 1.0 / n)
        lam = np.asarray(self.lambdas, dtype=np.float64)
        if lam.shape != (n,):
            raise ContractError(f"expected {n} weights, got {lam.size}")
        if np.any(lam <= 0):
            raise ContractError("weights must be strictly positive")
        if abs(lam.sum() - 1.0) > 1e-12:
            raise ContractError(f"weights must sum to 1, got {lam.sum()!r}")
        return lam


def intersect_ben_israel(ps, cfg=None):
    """Projector onto the intersection of all ``range(P_i)``.

    Uses ``Q = I - sum_i w_i P_i`` (weights summing to one) and returns
    ``I - Q^+ Q``.
    """
    ps = [np.asarray(p, dtype=np.float64) for p in ps]
    if not ps:
        raise ContractError("need at least one projector")
    shape = ps[0].shape
    if any(p.shape != shape for p in ps):
        raise ContractError("projectors have different dimensions")
    cfg = cfg or BenIsraelConfig()
    lam = cfg.weights(len(ps))
    eye = np.eye(shape[0])
    q = eye - sum(w * p for w, p in zip(lam, ps))
    q = _symmetrize(q)
    return _symmetrize(eye - pinv(q, cfg.pinv_tol) @ q)


@dataclass(frozen=True)
class VonNeumannInfo:
    converged: bool
    n_iter: int
    last_step: float


def intersect_von_neumann(p1, p2, max_iter=10000, conv_tol=1e-10):
    """Projector onto ``range(p1) & range(p2)`` as the limit of ``(P1 P2)^n``.

    Starting from ``T = P1 P2`` the update ``T <- P1 P2 T`` is applied until
    the max-norm change drops to ``conv_tol`` or ``max_iter`` updates have
    run. Convergence is geometric in the squared cosine of the smallest
    non-zero principal angle, so nearly-aligned subspaces converge slowly;
    check ``info.converged``.

    Returns
    -------
    p : ndarray
        Symmetrized limit ``(T + T') / 2``.
    info : VonNeumannInfo
    """
    if max_iter < 1:
        raise ContractError("max_iter must be at least 1")
    p1 = np.asarray(p1, dtype=np.float64)
    p2 = np.asarray(p2, dtype=np.float64)
    if p1.shape != p2.shape:
        raise ContractError(f"dimension mismatch: {p1.shape} vs {p2.shape}")
    step = p1 @ p2
    t = step
    delta = np.inf
    converged = False
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        t_new = step @ t
        delta = float(np.max(np.abs(t_new - t)))
        t = t_new
        if delta <= conv_tol:
            converged = True
            break
    return _symmetrize(t), VonNeumannInfo(converged, n_iter, delta)
