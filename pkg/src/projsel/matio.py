"""Loading, saving and preprocessing of variable-as-column matrices.

All matrices handled by the package are float64 arrays of shape
``(m, n)``: ``m`` samples in rows, ``n`` variables in columns. They are
stored in Fortran (column-major) order so that ``a[:, j]`` is one
contiguous block; column access is the hot path of variable selection.

Binary format (``PSELMAT1``)::

    offset  size     content
    0       8        ASCII magic b"PSELMAT1"
    8       8        rows, uint64 little-endian
    16      8        cols, uint64 little-endian
    24      8*r*c    float64 little-endian values, column-major
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, DegenerateError, FormatError, ParseError, TruncatedError

MAGIC = b"PSELMAT1"
HEADER_SIZE = 24
_DTYPE = np.dtype("<f8")


def as_colmatrix(a, copy=True):
    """Validate ``a`` and return it as a read-only column-major float64 matrix.

    A 1-d input is treated as a single column.
    """
    if copy:
        arr = np.array(a, dtype=np.float64, order="F", ndmin=1)
    else:
        arr = np.asarray(a, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1, order="F")
    if arr.ndim != 2:
        raise ContractError(f"expected a 2-d matrix, got {arr.ndim} dimensions")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ContractError(f"matrix must have at least one row and one column, got {arr.shape}")
    if not np.isfinite(arr).all():
        bad = np.flatnonzero(~np.isfinite(arr).all(axis=0))
        raise ContractError(f"non-finite entries in columns {bad.tolist()}")
    if not arr.flags.f_contiguous:
        arr = np.asfortranarray(arr)
    arr.flags.writeable = False
    return arr


def load_csv(path, has_header=False, delimiter=","):
    """Read a numeric CSV file into a column-major matrix.

    Parameters
    ----------
    path : str or path-like
    has_header : bool
        Skip the first non-blank line.
    delimiter : str or None
        Field separator; ``None`` splits on runs of whitespace.

    Raises
    ------
    ParseError
        On an empty file, ragged rows or non-numeric / non-finite fields.
        The message names the offending 1-based line number.
    """
    rows = []
    width = None
    header_pending = has_header
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            if header_pending:
                header_pending = False
                continue
            fields = text.split() if delimiter is None else text.split(delimiter)
            if width is None:
                width = len(fields)
            elif len(fields) != width:
                raise ParseError(f"expected {width} fields, found {len(fields)}", lineno)
            try:
                values = [float(f) for f in fields]
            except ValueError:
                raise ParseError(f"non-numeric field in {text!r}", lineno) from None
            if not all(np.isfinite(values)):
                raise ParseError("non-finite value", lineno)
            rows.append(values)
    if not rows:
        raise ParseError(f"{os.fspath(path)}: no data rows")
    return as_colmatrix(np.array(rows, dtype=np.float64), copy=False)


def save_csv(a, path, delimiter=","):
    """Write a matrix as CSV with full round-trip precision."""
    np.savetxt(path, np.asarray(a), delimiter=delimiter, fmt="%.17g")


def _read_header(fh, path):
    head = fh.read(HEADER_SIZE)
    if len(head) < len(MAGIC) or head[: len(MAGIC)] != MAGIC:
        raise FormatError(f"{os.fspath(path)}: bad magic, not a PSELMAT1 file")
    if len(head) < HEADER_SIZE:
        raise TruncatedError(f"{os.fspath(path)}: truncated header")
    rows = int.from_bytes(head[8:16], "little")
    cols = int.from_bytes(head[16:24], "little")
    if rows < 1 or cols < 1:
        raise FormatError(f"{os.fspath(path)}: invalid shape {rows}x{cols}")
    return rows, cols


def read_bin_shape(path):
    """Return ``(rows, cols)`` from a PSELMAT1 header, checking payload length."""
    with open(path, "rb") as fh:
        rows, cols = _read_header(fh, path)
    expected = HEADER_SIZE + 8 * rows * cols
    actual = os.path.getsize(path)
    if actual < expected:
        raise TruncatedError(
            f"{os.fspath(path)}: header claims {rows}x{cols} "
            f"({rows * cols} values) but payload holds {(actual - HEADER_SIZE) // 8}"
        )
    if actual > expected:
        raise FormatError(f"{os.fspath(path)}: {actual - expected} trailing bytes")
    return rows, cols


def save_bin(a, path):
    """Write ``a`` in PSELMAT1 format."""
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise ContractError("save_bin expects a 2-d matrix")
    rows, cols = a.shape
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(rows.to_bytes(8, "little"))
        fh.write(cols.to_bytes(8, "little"))
        fh.write(np.asarray(a, dtype=_DTYPE).tobytes(order="F"))


def load_bin(path):
    """Read a PSELMAT1 file fully into memory."""
    rows, cols = read_bin_shape(path)
    data = np.fromfile(path, dtype=_DTYPE, count=rows * cols, offset=HEADER_SIZE)
    return as_colmatrix(data.reshape((rows, cols), order="F"), copy=False)


def open_bin(path):
    """Memory-map a PSELMAT1 file read-only; values are not checked for finiteness."""
    rows, cols = read_bin_shape(path)
    return np.memmap(path, dtype=_DTYPE, mode="r", offset=HEADER_SIZE, shape=(rows, cols), order="F")


def create_bin(path, rows, cols):
    """Create a zero-filled PSELMAT1 file and return a writable memory map of it."""
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(int(rows).to_bytes(8, "little"))
        fh.write(int(cols).to_bytes(8, "little"))
        fh.truncate(HEADER_SIZE + 8 * rows * cols)
    return np.memmap(path, dtype=_DTYPE, mode="r+", offset=HEADER_SIZE, shape=(rows, cols), order="F")


def load_matrix(path, has_header=False, delimiter=","):
    """Dispatch on content: PSELMAT1 files by magic, anything else as CSV."""
    with open(path, "rb") as fh:
        magic = fh.read(len(MAGIC))
    if magic == MAGIC:
        return load_bin(path)
    return load_csv(path, has_header=has_header, delimiter=delimiter)


@dataclass(frozen=True)
class PreprocessSpec:
    """Column preprocessing switches.

    ``center`` subtracts each column's mean; ``unit_norm`` then scales each
    column to Euclidean norm one.
    """

    center: bool = False
    unit_norm: bool = False


def preprocess(a, spec):
    """Apply ``spec`` to the columns of ``a`` and return a new matrix.

    Raises
    ------
    DegenerateError
        If ``spec.unit_norm`` is set and some column has zero norm (after
        centering, when requested). ``indices`` lists every such column.
    """
    out = np.array(a, dtype=np.float64, order="F")
    scale = np.abs(out).max(axis=0) * np.sqrt(out.shape[0])
    if spec.center:
        out -= out.mean(axis=0)
    if spec.unit_norm:
        norms = np.linalg.norm(out, axis=0)
        # centering a constant column leaves rounding residue, not signal
        bad = np.flatnonzero(norms <= 1e-12 * scale)
        if bad.size:
            raise DegenerateError(f"zero-norm columns cannot be normalized: {bad.tolist()}", bad)
        out /= norms
    return as_colmatrix(out, copy=False)
