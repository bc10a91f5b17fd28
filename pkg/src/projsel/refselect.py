"""Reference variable selection with explicit projection matrices.

At step ``t`` the working projector ``P_t`` maps onto the part of the span
of ``Y`` that is orthogonal to every variable selected so far. Each step
picks the unselected column of ``X`` with the largest ``||P_t x / ||x|| ||^2``
and removes the direction ``P_t x`` from ``P_t`` by a rank-one deflation.

This path stores an ``m x m`` matrix and is meant for small ``m``; it is
the oracle the kernelized solver is tested against.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ContractError, DegenerateError
from .projops import PINV_TOL, deflate, projector_from_matrix

SCORE_TOL = 1e-12
MAX_ROWS = 5000

STOP_LOW_SCORE = "best remaining score below score_tol"


@dataclass
class SelectionResult:
    """Outcome of a selection run.

    Attributes
    ----------
    indices : list of int
        Selected column indices of ``X`` in selection order.
    scores : list of float
        Squared projection norm of each selected variable at the step it
        was chosen.
    requested : int
    achieved : int
    stopped_early : bool
    reason : str
        Empty unless ``stopped_early``.
    kernel : dict
    timings_ms : dict
    """

    indices: list = field(default_factory=list)
    scores: list = field(default_factory=list)
    requested: int = 0
    achieved: int = 0
    stopped_early: bool = False
    reason: str = ""
    kernel: dict = field(default_factory=dict)
    timings_ms: dict = field(default_factory=dict)

    def relevance(self, n_total):
        """Length-``n_total`` vector with step scores at selected indices, 0 elsewhere."""
        r = np.zeros(n_total)
        r[self.indices] = self.scores
        return r

    def to_dict(self):
        return asdict(self)

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, d):
        fields = cls.__dataclass_fields__
        return cls(**{k: v for k, v in d.items() if k in fields})

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def check_inputs(y, x, d):
    """Shared argument checks; returns ``(y, x)`` as float arrays."""
    y = np.asarray(y, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if y.ndim != 2 or x.ndim != 2:
        raise ContractError("Y and X must be 2-d matrices")
    if y.shape[0] != x.shape[0]:
        raise ContractError(f"Y has {y.shape[0]} rows but X has {x.shape[0]}")
    n_y, n_x = y.shape[1], x.shape[1]
    if int(d) != d or d < 1:
        raise ContractError(f"D must be a positive integer, got {d!r}")
    if d > n_y:
        raise ContractError(f"D = {d} exceeds the number of reference variables n_y = {n_y}")
    if d > n_x:
        raise ContractError(f"D = {d} exceeds the number of candidate variables n_x = {n_x}")
    return y, x


def select_explicit(y, x, d, rank_tol=PINV_TOL, score_tol=SCORE_TOL, max_rows=MAX_ROWS):
    """Select ``d`` columns of ``x`` using dense ``m x m`` projectors.

    Parameters
    ----------
    y : array, shape (m, n_y)
        Reference variables.
    x : array, shape (m, n_x)
        Candidate variables. Scores use ``x_k / ||x_k||``.
    d : int
        Number of variables to select, ``1 <= d <= n_y``.
    rank_tol : float
        Relative singular-value cutoff for the span of ``y``.
    score_tol : float
        Stop early once the best remaining score is at or below this.
    max_rows : int
        Refuse inputs with more samples than this.

    Returns
    -------
    SelectionResult
        Ties in the argmax resolve to the lowest column index.
    """
    y, x = check_inputs(y, x, d)
    m = y.shape[0]
    if m > max_rows:
        raise ContractError(f"explicit path is limited to {max_rows} samples, got {m}")
    norms = np.linalg.norm(x, axis=0)
    bad = np.flatnonzero(norms == 0.0)
    if bad.size:
        raise DegenerateError(f"zero-norm X columns: {bad.tolist()}", bad)
    xn = x / norms

    p = projector_from_matrix(y, rank_tol)
    result = SelectionResult(requested=int(d), kernel={"family": "explicit"})
    available = np.ones(x.shape[1], dtype=bool)
    for _ in range(d):
        px = p @ xn
        scores = np.einsum("ij,ij->j", px, px)
        scores[~available] = -1.0
        k = int(np.argmax(scores))
        if scores[k] <= score_tol:
            result.stopped_early = True
            result.reason = STOP_LOW_SCORE
            break
        result.indices.append(k)
        result.scores.append(float(scores[k]))
        available[k] = False
        v = px[:, k]
        p = deflate(p, v / np.sqrt(scores[k]))
    result.achieved = len(result.indices)
    return result


def step_projectors(y, x, indices, rank_tol=PINV_TOL):
    """Working projectors ``P_0, P_1, ...`` for a given selection order.

    ``P_0`` projects onto the span of ``y``; ``P_t`` follows from ``P_{t-1}``
    by deflating the selected direction. Useful for inspecting a run.
    """
    y = np.asarray(y, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    p = projector_from_matrix(y, rank_tol)
    out = [p]
    for k in indices:
        v = p @ x[:, k]
        nrm = np.linalg.norm(v)
        if nrm > 0:
            p = deflate(p, v / nrm)
        out.append(p)
    return out
