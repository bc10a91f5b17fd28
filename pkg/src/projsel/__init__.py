"""Supervised variable selection by projection operators.

Selects, one at a time, the columns of an input matrix ``X`` that are most
correlated with the column span of a reference matrix ``Y``, removing at
each step the direction already explained. Two solvers are provided:

* :func:`select_explicit` -- dense ``m x m`` projectors, for small data and
  as a correctness oracle;
* :func:`select_kernel` / :func:`select_streaming` -- the kernelized
  recursive solver whose cost is linear in the number of samples.
"""

from .errors import ContractError, DegenerateError, FormatError, ParseError, ProjselError, TruncatedError
from .kernels import GramFactor, KernelSpec, auto_sigma, center_gram, cross_gram, gram, gram_factor, kernel_eval, project_coords
from .kselect import select_kernel, select_streaming
from .matio import PreprocessSpec, load_bin, load_csv, load_matrix, preprocess, save_bin, save_csv
from .refselect import SelectionResult, select_explicit

__version__ = "0.1.0"

__all__ = [
    "ContractError",
    "DegenerateError",
    "FormatError",
    "GramFactor",
    "KernelSpec",
    "ParseError",
    "PreprocessSpec",
    "ProjselError",
    "SelectionResult",
    "TruncatedError",
    "auto_sigma",
    "center_gram",
    "cross_gram",
    "gram",
    "gram_factor",
    "kernel_eval",
    "load_bin",
    "load_csv",
    "load_matrix",
    "preprocess",
    "project_coords",
    "save_bin",
    "save_csv",
    "select_explicit",
    "select_kernel",
    "select_streaming",
]
