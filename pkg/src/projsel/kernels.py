"""Kernels evaluated between variable vectors (matrix columns).

The kernel ``k(x, z)`` compares two length-``m`` columns, not two samples.
Gram and cross-Gram matrices are therefore ``n_y x n_y`` and ``n_y x n_x``
regardless of the sample count, and all three supported families reduce to
column inner products and squared norms:

=========  ======================================
linear     ``x'z``
poly3      ``(x'z)^3``
rbf        ``exp(-||x - z||^2 / (2 sigma^2))``
=========  ======================================

Those sufficient statistics are additive over row blocks, which is what
:class:`GramAccumulator` exploits to assemble kernels from data that does
not fit in memory.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ContractError, DegenerateError
from .matio import PreprocessSpec, preprocess

FAMILIES = ("linear", "poly3", "rbf")
RANK_TOL = 1e-10
SIGMA_CAP = 100_000


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family and its switches.

    Parameters
    ----------
    family : {"linear", "poly3", "rbf"}
    rbf_sigma : float or "auto"
        Bandwidth for ``rbf``. ``"auto"`` uses the mean pairwise distance
        between columns (see :func:`auto_sigma`).
    cosine_normalize : bool or None
        Divide ``k(x, z)`` by ``sqrt(k(x, x) k(z, z))``. ``None`` picks the
        family default: on for ``poly3``, off for ``linear`` (normalize the
        columns instead), irrelevant for ``rbf`` whose diagonal is already 1.
    center_columns : bool
        Subtract column means before evaluating the kernel.
    sigma_over : {"both", "x", "y"}
        Column set whose pairwise distances define the automatic bandwidth.
    sigma_cap : int
        Maximum number of column pairs averaged by the automatic bandwidth.
    seed : int
        Seed for the pair sampling used when the pair count exceeds ``sigma_cap``.
    """

    family: str = "linear"
    rbf_sigma: float | str = "auto"
    cosine_normalize: bool | None = None
    center_columns: bool = False
    sigma_over: str = "both"
    sigma_cap: int = SIGMA_CAP
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ContractError(f"unknown kernel family {self.family!r}; expected one of {FAMILIES}")
        if self.family == "rbf" and self.rbf_sigma != "auto":
            if not float(self.rbf_sigma) > 0:
                raise ContractError(f"rbf_sigma must be positive, got {self.rbf_sigma!r}")
        if self.sigma_over not in ("both", "x", "y"):
            raise ContractError(f"sigma_over must be 'both', 'x' or 'y', got {self.sigma_over!r}")
        if self.sigma_cap < 1:
            raise ContractError("sigma_cap must be positive")

    @property
    def normalized(self):
        if self.family == "rbf":
            return False
        if self.cosine_normalize is None:
            return self.family == "poly3"
        return bool(self.cosine_normalize)

    @property
    def needs_auto_sigma(self):
        return self.family == "rbf" and self.rbf_sigma == "auto"

    def to_dict(self, sigma=None):
        d = {
            "family": self.family,
            "cosine_normalize": self.normalized,
            "center_columns": self.center_columns,
        }
        if self.family == "rbf":
            d["rbf_sigma"] = self.rbf_sigma if sigma is None else float(sigma)
            d["sigma_auto"] = self.rbf_sigma == "auto"
        return d


def kernel_eval(x, z, spec, sigma=None):
    """Evaluate the kernel between two variable vectors directly.

    ``sigma`` overrides ``spec.rbf_sigma``; it is required when ``spec``
    asks for an automatic bandwidth, since one pair of columns cannot
    determine it.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    z = np.asarray(z, dtype=np.float64).ravel()
    if x.shape != z.shape:
        raise ContractError(f"length mismatch: {x.size} vs {z.size}")
    if spec.center_columns:
        x = x - x.mean()
        z = z - z.mean()
    if spec.family == "rbf":
        if sigma is None:
            if spec.needs_auto_sigma:
                raise ContractError("automatic rbf bandwidth needs an explicit sigma here")
            sigma = float(spec.rbf_sigma)
        diff = x - z
        return float(np.exp(-(diff @ diff) / (2.0 * sigma**2)))
    val = float(x @ z)
    if spec.family == "poly3":
        val = val**3
    if spec.normalized:
        nx, nz = float(x @ x), float(z @ z)
        if nx == 0.0 or nz == 0.0:
            raise DegenerateError("cosine normalization of a zero-norm column")
        if spec.family == "poly3":
            nx, nz = nx**3, nz**3
        val /= np.sqrt(nx * nz)
    return val


def _pairs(n, cap, seed):
    total = n * (n - 1) // 2
    if total <= cap:
        i, j = np.triu_indices(n, k=1)
        return i, j
    rng = np.random.default_rng(seed)
    i = rng.integers(0, n, size=cap)
    j = rng.integers(0, n - 1, size=cap)
    # shift so that j != i while keeping j uniform over the other n-1 columns
    j = np.where(j >= i, j + 1, j)
    return i, j


def _mean_distance(gram, cap, seed):
    n = gram.shape[0]
    if n < 2:
        raise ContractError("automatic bandwidth needs at least two columns")
    i, j = _pairs(n, cap, seed)
    diag = np.diag(gram)
    d2 = diag[i] + diag[j] - 2.0 * gram[i, j]
    # below this floor the squared distance is indistinguishable from rounding
    floor = 8.0 * np.finfo(np.float64).eps * (diag[i] + diag[j])
    d2 = np.where(d2 <= floor, 0.0, d2)
    sigma = float(np.mean(np.sqrt(d2)))
    if sigma == 0.0:
        raise DegenerateError("all columns are identical; rbf bandwidth would be zero")
    return sigma


def _sigma_columns(y, x, over):
    if over == "y":
        return y
    if over == "x":
        return x
    return np.hstack([y, x])


def auto_sigma(y, x, cap=SIGMA_CAP, seed=0, over="both"):
    """Mean Euclidean distance between distinct columns.

    Columns are taken from ``[Y, X]`` (``over="both"``), or from one of
    them. All pairs are averaged when there are at most ``cap`` of them,
    otherwise ``cap`` pairs are drawn uniformly with ``seed``.

    Raises
    ------
    DegenerateError
        If every column is identical.
    """
    z = np.asarray(_sigma_columns(np.asarray(y), np.asarray(x), over), dtype=np.float64)
    return _mean_distance(z.T @ z, cap, seed)


@dataclass
class GramAccumulator:
    """Row-block accumulator of the statistics behind ``K_YY`` and ``K_YX``.

    Feed consecutive row blocks of ``Y`` and ``X`` to :meth:`update`, then
    call :meth:`finalize`. Centering is not handled here; pass centered
    blocks if needed.

    Parameters
    ----------
    n_y, n_x : int
    need_xx : bool
        Also accumulate ``X'X`` and ``Y'X`` for the automatic rbf bandwidth.
    """

    n_y: int
    n_x: int
    need_xx: bool = False
    timings: dict = field(default_factory=lambda: {"k_yx": 0.0, "k_yy": 0.0})

    def __post_init__(self):
        self.rows = 0
        self.yy = np.zeros((self.n_y, self.n_y))
        self.yx = np.zeros((self.n_y, self.n_x))
        self.sq_x = np.zeros(self.n_x)
        self.xx = np.zeros((self.n_x, self.n_x)) if self.need_xx else None

    def update(self, y, x):
        # fixed layout so that BLAS rounding does not depend on how blocks arrive
        y = np.asfortranarray(y, dtype=np.float64)
        x = np.asfortranarray(x, dtype=np.float64)
        if y.shape[0] != x.shape[0]:
            raise ContractError(f"row blocks differ in length: {y.shape[0]} vs {x.shape[0]}")
        t0 = time.perf_counter()
        self.yx += y.T @ x
        self.sq_x += np.einsum("ij,ij->j", x, x)
        if self.xx is not None:
            self.xx += x.T @ x
        t1 = time.perf_counter()
        self.yy += y.T @ y
        t2 = time.perf_counter()
        self.timings["k_yx"] += t1 - t0
        self.timings["k_yy"] += t2 - t1
        self.rows += y.shape[0]

    def _stats(self, unit_norm):
        yy, yx, xx, sq_x = self.yy, self.yx, self.xx, self.sq_x
        sq_y = np.diag(yy).copy()
        if unit_norm:
            _check_norms(sq_y, "y")
            _check_norms(sq_x, "x")
            ny, nx = np.sqrt(sq_y), np.sqrt(sq_x)
            yy = yy / np.outer(ny, ny)
            yx = yx / np.outer(ny, nx)
            xx = None if xx is None else xx / np.outer(nx, nx)
            sq_y = np.diag(yy).copy()
            sq_x = sq_x / (nx * nx)
        return yy, yx, xx, sq_y, sq_x

    def finalize(self, spec, unit_norm=False):
        """Return ``(K_YY, K_YX, sigma)`` for ``spec``.

        ``unit_norm`` evaluates the kernel on columns scaled to unit norm,
        which is the streaming counterpart of normalizing with
        :func:`projsel.matio.preprocess` beforehand.
        """
        t0 = time.perf_counter()
        yy, yx, xx, sq_y, sq_x = self._stats(unit_norm)
        sigma = _sigma_from_stats(spec, yy, yx, xx)
        k_yx = _from_stats(yx, sq_y, sq_x, spec, sigma, "x")
        t1 = time.perf_counter()
        k_yy = _from_stats(yy, sq_y, sq_y, spec, sigma, "y")
        k_yy = 0.5 * (k_yy + k_yy.T)
        t2 = time.perf_counter()
        self.timings["k_yx"] += t1 - t0
        self.timings["k_yy"] += t2 - t1
        return k_yy, k_yx, sigma


def _sigma_from_stats(spec, yy, yx, xx):
    if not spec.needs_auto_sigma:
        return float(spec.rbf_sigma) if spec.family == "rbf" else None
    if spec.sigma_over == "y":
        g = yy
    elif spec.sigma_over == "x":
        g = xx
    else:
        g = np.block([[yy, yx], [yx.T, xx]])
    return _mean_distance(g, spec.sigma_cap, spec.seed)


def _from_stats(dot, sq_rows, sq_cols, spec, sigma, which):
    if spec.family == "rbf":
        d2 = sq_rows[:, None] + sq_cols[None, :] - 2.0 * dot
        np.maximum(d2, 0.0, out=d2)
        return np.exp(-d2 / (2.0 * sigma**2))
    k = dot**3 if spec.family == "poly3" else dot.copy()
    if spec.normalized:
        _check_norms(sq_rows, "y")
        _check_norms(sq_cols, which)
        nr = np.sqrt(sq_rows)
        nc = np.sqrt(sq_cols)
        if spec.family == "poly3":
            nr, nc = nr**3, nc**3
        k /= nr[:, None]
        k /= nc[None, :]
    return k


def _check_norms(sq, which):
    bad = np.flatnonzero(sq == 0.0)
    if bad.size:
        raise DegenerateError(
            f"zero-norm {which.upper()} columns cannot be cosine-normalized: {bad.tolist()}", bad
        )


def _prepared(a, spec):
    a = np.asarray(a, dtype=np.float64)
    if spec.center_columns:
        a = preprocess(a, PreprocessSpec(center=True))
    return a


def kernel_matrices(y, x, spec, unit_norm=False):
    """Return ``(K_YY, K_YX, sigma, timings)`` for in-memory data.

    ``unit_norm`` evaluates the kernel on unit-norm columns (after
    centering, when ``spec`` centers).
    """
    y = _prepared(y, spec)
    x = _prepared(x, spec)
    if y.shape[0] != x.shape[0]:
        raise ContractError(f"Y has {y.shape[0]} rows but X has {x.shape[0]}")
    acc = GramAccumulator(y.shape[1], x.shape[1], need_xx=spec.needs_auto_sigma and spec.sigma_over != "y")
    acc.update(y, x)
    k_yy, k_yx, sigma = acc.finalize(spec, unit_norm=unit_norm)
    return k_yy, k_yx, sigma, dict(acc.timings)


def gram(y, spec, sigma=None):
    """Kernel matrix among the columns of ``y``.

    ``sigma`` overrides the bandwidth (used to evaluate the kernel with a
    bandwidth derived from a larger column set).
    """
    if sigma is not None:
        spec = replace(spec, rbf_sigma=float(sigma))
    y = _prepared(y, spec)
    acc = GramAccumulator(y.shape[1], 0, need_xx=spec.needs_auto_sigma)
    acc.update(y, y[:, :0])
    if spec.needs_auto_sigma:
        spec = replace(spec, sigma_over="y")
    return acc.finalize(spec)[0]


def cross_gram(y, x, spec, sigma=None):
    """Kernel values between the columns of ``y`` (rows) and ``x`` (columns)."""
    if sigma is not None:
        spec = replace(spec, rbf_sigma=float(sigma))
    return kernel_matrices(y, x, spec)[1]


def center_gram(k):
    """Double-center a square kernel matrix: ``H K H`` with ``H = I - 11'/n``."""
    k = np.asarray(k, dtype=np.float64)
    if k.ndim != 2 or k.shape[0] != k.shape[1]:
        raise ContractError(f"center_gram expects a square matrix, got {k.shape}")
    kc = k - k.mean(axis=0, keepdims=True)
    kc -= kc.mean(axis=1, keepdims=True)
    return kc


@dataclass(frozen=True)
class GramFactor:
    """Eigendecomposition ``K_YY = V diag(s^2) V'`` with a truncated inverse of ``s``.

    ``s`` are the singular values of the implicit feature matrix of ``Y``,
    sorted descending; ``s_pinv[i]`` is ``1/s[i]`` for the leading ``rank``
    entries and 0 after them.
    """

    V: np.ndarray
    s: np.ndarray
    s_pinv: np.ndarray
    rank: int


def gram_factor(k_yy, rank_tol=RANK_TOL):
    """Factor a symmetric PSD Gram matrix.

    Eigenvalues are clamped at zero before the square root. Directions with
    ``s <= rank_tol * s_max`` count as numerically null.

    Raises
    ------
    ContractError
        If ``k_yy`` is not square or not symmetric within 1e-8 (relative to
        its largest entry).
    """
    k = np.asarray(k_yy, dtype=np.float64)
    if k.ndim != 2 or k.shape[0] != k.shape[1]:
        raise ContractError(f"Gram matrix must be square, got {k.shape}")
    scale = max(float(np.max(np.abs(k))), 1.0) if k.size else 1.0
    if np.max(np.abs(k - k.T), initial=0.0) > 1e-8 * scale:
        raise ContractError("Gram matrix is not symmetric")
    w, v = np.linalg.eigh(0.5 * (k + k.T))
    order = np.argsort(-w, kind="stable")
    w, v = w[order], v[:, order]
    s = np.sqrt(np.clip(w, 0.0, None))
    keep = s > rank_tol * s[0] if s.size and s[0] > 0 else np.zeros(s.shape, bool)
    s_pinv = np.zeros_like(s)
    s_pinv[keep] = 1.0 / s[keep]
    return GramFactor(V=v, s=s, s_pinv=s_pinv, rank=int(keep.sum()))


def project_coords(gf, kyx):
    """Coordinates of ``phi(x)`` in the leading eigenbasis of ``K_YY``.

    ``kyx`` holds the kernel values between the reference columns and a
    candidate column (or one candidate per column). The Euclidean norm of
    the result equals the norm of the projection of ``phi(x)`` onto the span
    of the reference features.
    """
    kyx = np.asarray(kyx, dtype=np.float64)
    return gf.s_pinv[:, None] * (gf.V.T @ kyx) if kyx.ndim == 2 else gf.s_pinv * (gf.V.T @ kyx)
