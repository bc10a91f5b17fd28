"""Synthetic two-view data: ``Y = X W + E`` with i.i.d. Gaussian entries.

Random numbers are defined position by position so that any block of any
matrix can be regenerated independently, in any language:

* Raw stream. ``u[n]`` is output word ``n % 4`` of the Philox4x64-10 block
  cipher applied to counter ``n // 4`` with the 128-bit key
  ``(seed, stream_id)``. ``stream_id`` is 0 for X, 1 for W and 2 for E.
* Normals. Words ``u[2k]`` and ``u[2k+1]`` give
  ``a = ((u[2k] >> 11) + 1) * 2**-53`` in (0, 1] and
  ``b = (u[2k+1] >> 11) * 2**-53`` in [0, 1); then
  ``z[2k] = sqrt(-2 ln a) cos(2 pi b)`` and
  ``z[2k+1] = sqrt(-2 ln a) sin(2 pi b)`` (Box-Muller).
* Layout. Entry ``(i, j)`` of an ``r x c`` matrix is ``sigma * z[j * r + i]``
  (column-major order).

Results are bit-reproducible for a fixed platform math library; across
libraries ``log``/``cos``/``sin`` may differ in the last ulp.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import matio
from .errors import ContractError

STREAM_X, STREAM_W, STREAM_E = 0, 1, 2
DEFAULT_CHUNK_ROWS = 65536
MAX_ELEMENTS = 2**40
_TWO_PI = 2.0 * np.pi
_INV_2_53 = 2.0**-53


@dataclass(frozen=True)
class GenSpec:
    """Size, scale and seed of a synthetic problem.

    ``sigma`` is the standard deviation shared by X, W and E. ``noise=False``
    sets E to zero.
    """

    m: int
    n_x: int
    n_y: int
    sigma: float = 1.0
    seed: int = 0
    noise: bool = True

    def __post_init__(self):
        for name in ("m", "n_x", "n_y"):
            if int(getattr(self, name)) < 1:
                raise ContractError(f"{name} must be at least 1")
        if self.sigma < 0:
            raise ContractError("sigma must be non-negative")
        if not 0 <= int(self.seed) < 2**64:
            raise ContractError("seed must fit in 64 unsigned bits")
        for rows, cols in ((self.m, self.n_x), (self.m, self.n_y), (self.n_x, self.n_y)):
            if rows * cols > MAX_ELEMENTS:
                raise ContractError(f"{rows}x{cols} matrix exceeds {MAX_ELEMENTS} elements")


def raw_words(seed, stream_id, start, count):
    """``count`` consecutive raw 64-bit words starting at stream position ``start``."""
    block, offset = divmod(start, 4)
    # numpy increments the counter before producing a block
    bg = np.random.Philox(key=np.array([seed, stream_id], dtype=np.uint64), counter=(block - 1) % 2**256)
    return bg.random_raw(offset + count)[offset:]


def normals(seed, stream_id, start, count):
    """Standard normals ``z[start : start + count]`` of one stream."""
    if count <= 0:
        return np.empty(0)
    first = start - (start % 2)
    last = start + count
    n_pairs = (last - first + 1) // 2
    u = raw_words(seed, stream_id, first, 2 * n_pairs)
    a = ((u[0::2] >> np.uint64(11)).astype(np.float64) + 1.0) * _INV_2_53
    b = (u[1::2] >> np.uint64(11)).astype(np.float64) * _INV_2_53
    rad = np.sqrt(-2.0 * np.log(a))
    ang = _TWO_PI * b
    z = np.empty(2 * n_pairs)
    z[0::2] = rad * np.cos(ang)
    z[1::2] = rad * np.sin(ang)
    return z[start - first : start - first + count]


def gaussian_block(seed, stream_id, n_rows, row_start, row_stop, cols, sigma):
    """Rows ``row_start:row_stop`` of an ``n_rows x cols`` Gaussian matrix."""
    out = np.empty((row_stop - row_start, cols), order="F")
    for j in range(cols):
        out[:, j] = normals(seed, stream_id, j * n_rows + row_start, row_stop - row_start)
    out *= sigma
    return out


def _weights(spec):
    return gaussian_block(spec.seed, STREAM_W, spec.n_x, 0, spec.n_x, spec.n_y, spec.sigma)


def _rows(spec, w, a, b):
    xb = gaussian_block(spec.seed, STREAM_X, spec.m, a, b, spec.n_x, spec.sigma)
    yb = xb @ w
    if spec.noise:
        yb += gaussian_block(spec.seed, STREAM_E, spec.m, a, b, spec.n_y, spec.sigma)
    return xb, yb


def generate(spec, chunk_rows=DEFAULT_CHUNK_ROWS):
    """Return ``(X, Y)`` in memory.

    Output is identical to :func:`generate_files` with the same ``chunk_rows``.
    """
    w = _weights(spec)
    x = np.empty((spec.m, spec.n_x), order="F")
    y = np.empty((spec.m, spec.n_y), order="F")
    for a in range(0, spec.m, chunk_rows):
        b = min(a + chunk_rows, spec.m)
        x[a:b], y[a:b] = _rows(spec, w, a, b)
    return matio.as_colmatrix(x, copy=False), matio.as_colmatrix(y, copy=False)


def generate_files(spec, x_path, y_path, chunk_rows=DEFAULT_CHUNK_ROWS):
    """Write ``X`` and ``Y`` as PSELMAT1 files, ``chunk_rows`` rows at a time."""
    w = _weights(spec)
    xm = matio.create_bin(x_path, spec.m, spec.n_x)
    ym = matio.create_bin(y_path, spec.m, spec.n_y)
    for a in range(0, spec.m, chunk_rows):
        b = min(a + chunk_rows, spec.m)
        xm[a:b], ym[a:b] = _rows(spec, w, a, b)
    xm.flush()
    ym.flush()
    del xm, ym


def expected_file_size(rows, cols):
    return matio.HEADER_SIZE + 8 * rows * cols
