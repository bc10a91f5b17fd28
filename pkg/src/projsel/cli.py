"""Command-line interface: ``projsel {select,gen,bench,eval}``.

Exit status is 0 on success (an early stop is still a success), 1 on
invalid arguments or inputs that violate a precondition, and 2 on I/O or
file-format errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import tempfile
import time

import numpy as np

from . import datagen, evalmetrics, matio
from .errors import ContractError, FormatError, ProjselError
from .kernels import RANK_TOL, KernelSpec
from .kselect import DEFAULT_CHUNK_ROWS, format_timings, select_kernel, select_streaming
from .refselect import SCORE_TOL, SelectionResult


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _float_list(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _int_list(text):
    return [int(float(v)) for v in text.split(",") if v.strip()]


def _add_kernel_flags(p):
    p.add_argument("--kernel", choices=("linear", "poly3", "rbf"), default="linear")
    p.add_argument("--rbf-sigma", default=None, help="'auto' or a positive bandwidth (rbf only)")
    p.add_argument("--sigma-over", choices=("both", "x", "y"), default="both",
                   help="columns whose mean pairwise distance sets an automatic bandwidth")
    p.add_argument("--center", action="store_true", help="subtract column means")
    p.add_argument("--normalize", action="store_true", help="scale columns to unit norm")
    p.add_argument("--rank-tol", type=float, default=RANK_TOL)
    p.add_argument("--score-tol", type=float, default=SCORE_TOL)
    p.add_argument("--seed", type=int, default=0)


def _add_input_flags(p):
    p.add_argument("--x", required=True, help="candidate variables (CSV or PSELMAT1)")
    p.add_argument("--y", required=True, help="reference variables (CSV or PSELMAT1)")
    p.add_argument("--format", choices=("csv", "bin"), default=None,
                   help="input format; detected from the file magic by default")
    p.add_argument("--has-header", action="store_true")
    p.add_argument("--delimiter", default=",", help="CSV separator; 'ws' for whitespace")


def build_parser():
    parser = _Parser(prog="projsel", description="Variable selection by projection operators.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("select", help="select variables of X correlated with the span of Y")
    _add_input_flags(p)
    p.add_argument("--d", type=int, required=True, help="number of variables to select")
    _add_kernel_flags(p)
    p.add_argument("--chunk-rows", type=int, default=None,
                   help="stream PSELMAT1 inputs in blocks of this many rows")
    p.add_argument("--out", default=None, help="output JSON path (default stdout)")
    p.add_argument("--timings", action="store_true", help="print the phase breakdown to stderr")

    p = sub.add_parser("gen", help="generate synthetic data Y = XW + E")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--nx", type=int, required=True)
    p.add_argument("--ny", type=int, required=True)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise", choices=("on", "off"), default="on")
    p.add_argument("--x-out", required=True)
    p.add_argument("--y-out", required=True)
    p.add_argument("--format", choices=("csv", "bin"), default="bin")
    p.add_argument("--chunk-rows", type=int, default=datagen.DEFAULT_CHUNK_ROWS)

    p = sub.add_parser("bench", help="time streaming selection over a grid of sample sizes")
    p.add_argument("--m-grid", type=_int_list, default=[10**4, 10**5, 10**6])
    p.add_argument("--nx", type=int, default=100)
    p.add_argument("--ny", type=int, default=100)
    p.add_argument("--d", type=int, default=10)
    p.add_argument("--sigma", type=float, default=1.0)
    _add_kernel_flags(p)
    p.add_argument("--chunk-rows", type=int, default=DEFAULT_CHUNK_ROWS)
    p.add_argument("--repeats", type=int, default=1, help="keep the fastest of this many runs")
    p.add_argument("--workdir", default=None, help="where generated data is written")
    p.add_argument("--out", default=None, help="output CSV path (default stdout)")

    p = sub.add_parser("eval", help="evaluation metrics")
    esub = p.add_subparsers(dest="eval_command", required=True, parser_class=_Parser)

    e = esub.add_parser("metrics", help="metrics of existing selection results")
    e.add_argument("--results", nargs="+", required=True, help="selection JSON files of X variables")
    e.add_argument("--results-y", nargs="+", default=None,
                   help="selections of Y variables; canonical correlations then compare both subsets")
    e.add_argument("--x", default=None)
    e.add_argument("--y", default=None)
    e.add_argument("--format", choices=("csv", "bin"), default=None)
    e.add_argument("--has-header", action="store_true")
    e.add_argument("--delimiter", default=",")
    e.add_argument("--n-total", type=int, default=None, help="candidate pool size (default: columns of --x)")
    e.add_argument("--k", type=int, default=None, help="selection size compared across runs")
    e.add_argument("--labels", default=None, help="one class label per sample, for k-means NMI")
    e.add_argument("--clusters", type=int, default=None)
    e.add_argument("--restarts", type=int, default=20)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--max-alignment-rows", type=int, default=5000,
                   help="skip sample-kernel alignment above this many samples")
    e.add_argument("--out", default=None)

    e = esub.add_parser("stability", help="selection stability over random row subsamples")
    _add_input_flags(e)
    e.add_argument("--d", type=_int_list, required=True, help="selection size(s), comma separated")
    _add_kernel_flags(e)
    e.add_argument("--fractions", type=_float_list, default=[0.1, 0.2, 0.3, 0.4, 0.5])
    e.add_argument("--repeats", type=int, default=10)
    e.add_argument("--out", default=None)
    return parser


def _kernel_spec(args):
    if args.rbf_sigma is not None and args.kernel != "rbf":
        raise ContractError("--rbf-sigma is only valid with --kernel rbf")
    sigma = args.rbf_sigma or "auto"
    if sigma != "auto":
        try:
            sigma = float(sigma)
        except ValueError:
            raise ContractError(f"--rbf-sigma must be 'auto' or a number, got {args.rbf_sigma!r}") from None
    return KernelSpec(family=args.kernel, rbf_sigma=sigma, center_columns=args.center,
                      sigma_over=args.sigma_over, seed=args.seed)


def _load(path, args):
    delim = None if args.delimiter == "ws" else args.delimiter
    fmt = getattr(args, "format", None)
    if fmt == "bin":
        return matio.load_bin(path)
    if fmt == "csv":
        return matio.load_csv(path, has_header=args.has_header, delimiter=delim)
    return matio.load_matrix(path, has_header=args.has_header, delimiter=delim)


def _is_bin(path):
    with open(path, "rb") as fh:
        return fh.read(len(matio.MAGIC)) == matio.MAGIC


def _emit(text, out):
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
            if not text.endswith("\n"):
                fh.write("\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _result_doc(result, n_x, n_y):
    doc = result.to_dict()
    doc["n_x"] = int(n_x)
    doc["n_y"] = int(n_y)
    return doc


def run_selection(args, spec):
    if args.d < 1:
        raise ContractError(f"--d must be at least 1, got {args.d}")
    if args.chunk_rows is not None:
        if args.chunk_rows < 1:
            raise ContractError("--chunk-rows must be at least 1")
        if not (_is_bin(args.x) and _is_bin(args.y)):
            raise ContractError("--chunk-rows requires PSELMAT1 inputs (convert with `gen` or save_bin)")
        result = select_streaming(args.y, args.x, args.d, spec, chunk_rows=args.chunk_rows,
                                  rank_tol=args.rank_tol, score_tol=args.score_tol,
                                  unit_norm=args.normalize)
        n_x = matio.read_bin_shape(args.x)[1]
        n_y = matio.read_bin_shape(args.y)[1]
        return result, n_x, n_y
    x = _load(args.x, args)
    y = _load(args.y, args)
    result = select_kernel(y, x, args.d, spec, rank_tol=args.rank_tol, score_tol=args.score_tol,
                           unit_norm=args.normalize)
    return result, x.shape[1], y.shape[1]


def cmd_select(args):
    spec = _kernel_spec(args)
    result, n_x, n_y = run_selection(args, spec)
    _emit(json.dumps(_result_doc(result, n_x, n_y), indent=2), args.out)
    if args.timings:
        print(format_timings(result), file=sys.stderr)
    return 0


def cmd_gen(args):
    spec = datagen.GenSpec(m=args.m, n_x=args.nx, n_y=args.ny, sigma=args.sigma, seed=args.seed,
                           noise=args.noise == "on")
    if args.chunk_rows < 1:
        raise ContractError("--chunk-rows must be at least 1")
    if args.format == "bin":
        datagen.generate_files(spec, args.x_out, args.y_out, chunk_rows=args.chunk_rows)
    else:
        x, y = datagen.generate(spec, chunk_rows=args.chunk_rows)
        matio.save_csv(x, args.x_out)
        matio.save_csv(y, args.y_out)
    return 0


BENCH_FIELDS = ["m", "n_x", "n_y", "d", "kernel", "io_ms", "k_yx_ms", "k_yy_ms", "eig_ms",
                "loop_ms", "total_ms", "achieved"]


def cmd_bench(args):
    spec = _kernel_spec(args)
    if args.d < 1:
        raise ContractError("--d must be at least 1")
    if args.repeats < 1:
        raise ContractError("--repeats must be at least 1")
    grid = sorted(set(args.m_grid))
    if not grid or grid[0] < 1:
        raise ContractError("--m-grid needs positive sample sizes")
    rows = []
    with tempfile.TemporaryDirectory(dir=args.workdir) as tmp:
        for m in grid:
            xp, yp = os.path.join(tmp, f"x_{m}.bin"), os.path.join(tmp, f"y_{m}.bin")
            gspec = datagen.GenSpec(m=m, n_x=args.nx, n_y=args.ny, sigma=args.sigma, seed=args.seed)
            datagen.generate_files(gspec, xp, yp)
            best = None
            for _ in range(args.repeats):
                t0 = time.perf_counter()
                res = select_streaming(yp, xp, args.d, spec, chunk_rows=args.chunk_rows,
                                       rank_tol=args.rank_tol, score_tol=args.score_tol,
                                       unit_norm=args.normalize)
                total = 1000.0 * (time.perf_counter() - t0)
                if best is None or total < best[0]:
                    best = (total, res)
            total, res = best
            t = res.timings_ms
            rows.append({
                "m": m, "n_x": args.nx, "n_y": args.ny, "d": args.d, "kernel": spec.family,
                "io_ms": f"{t.get('io', 0.0):.3f}", "k_yx_ms": f"{t['k_yx']:.3f}",
                "k_yy_ms": f"{t['k_yy']:.3f}", "eig_ms": f"{t['eig']:.3f}",
                "loop_ms": f"{t['loop']:.3f}", "total_ms": f"{total:.3f}", "achieved": res.achieved,
            })
            os.remove(xp)
            os.remove(yp)
    out = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        writer = csv.DictWriter(out, fieldnames=BENCH_FIELDS)
        writer.writeheader()
        writer.writerows(rows)
    finally:
        if args.out:
            out.close()
    return 0


def _read_result(path):
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: invalid JSON ({exc})") from None
    return SelectionResult.from_dict(doc), doc


def _linear_sample_kernel(a):
    a = np.asarray(a, dtype=np.float64)
    return a @ a.T


def cmd_eval_metrics(args):
    loaded = [_read_result(p) for p in args.results]
    results = [r for r, _ in loaded]
    x = _load(args.x, args) if args.x else None
    y = _load(args.y, args) if args.y else None
    n_total = args.n_total or (x.shape[1] if x is not None else loaded[0][1].get("n_x"))
    if n_total is None:
        raise ContractError("candidate pool size unknown; pass --n-total or --x")
    report = {"n_runs": len(results), "n_total": int(n_total)}

    if len(results) >= 2:
        runs = evalmetrics.SelectionRuns.from_results(results, n_total, k=args.k)
        report["k"] = runs.k
        report["runs_used"] = len(runs.runs)
        if len(runs.runs) >= 2:
            report["stability_index"] = evalmetrics.stability_index(runs)
            report["pearson_relevance"] = evalmetrics.pearson_relevance(runs)

    if x is not None and y is not None:
        if x.shape[0] != y.shape[0]:
            raise ContractError(f"X has {x.shape[0]} rows but Y has {y.shape[0]}")
        y_idx = None
        if args.results_y:
            y_idx = [r.indices for r, _ in (_read_result(p) for p in args.results_y)]
        curves = []
        for i, r in enumerate(results):
            yi = None if y_idx is None else y_idx[min(i, len(y_idx) - 1)]
            curves.append(evalmetrics.cca_curve(x, y, r.indices, yi))
        report["cca_curve"] = curves[0] if len(curves) == 1 else curves
        if x.shape[0] <= args.max_alignment_rows and results[0].indices:
            ky = _linear_sample_kernel(y)
            kx = _linear_sample_kernel(x[:, results[0].indices])
            report["kernel_alignment_linear"] = evalmetrics.kernel_alignment(kx, ky)

    if args.labels:
        if x is None:
            raise ContractError("--labels requires --x")
        labels = np.loadtxt(args.labels, ndmin=1)
        n_clusters = args.clusters or len(np.unique(labels))
        report["nmi"] = [
            evalmetrics.kmeans_nmi(x[:, r.indices], labels, n_clusters, args.restarts, args.seed)
            for r in results
        ]
        report["nmi_full"] = evalmetrics.kmeans_nmi(x, labels, n_clusters, args.restarts, args.seed)

    _emit(json.dumps(report, indent=2), args.out)
    return 0


def cmd_eval_stability(args):
    spec = _kernel_spec(args)
    x = _load(args.x, args)
    y = _load(args.y, args)
    if x.shape[0] != y.shape[0]:
        raise ContractError(f"X has {x.shape[0]} rows but Y has {y.shape[0]}")
    if args.repeats < 2:
        raise ContractError("--repeats must be at least 2")
    if any(not 0 < f <= 1 for f in args.fractions):
        raise ContractError("--fractions must lie in (0, 1]")
    m, n_x = x.shape
    rng = np.random.default_rng(args.seed)
    table = []
    for frac in args.fractions:
        size = max(2, int(round(frac * m)))
        subsets = [np.sort(rng.choice(m, size=size, replace=False)) for _ in range(args.repeats)]
        for d in args.d:
            results = [
                select_kernel(y[rows], x[rows], d, spec, rank_tol=args.rank_tol,
                              score_tol=args.score_tol, unit_norm=args.normalize)
                for rows in subsets
            ]
            runs = evalmetrics.SelectionRuns.from_results(results, n_x, k=d)
            entry = {"fraction": frac, "d": d, "runs_used": len(runs.runs)}
            if len(runs.runs) >= 2:
                entry["stability_index"] = evalmetrics.stability_index(runs)
                entry["pearson_relevance"] = evalmetrics.pearson_relevance(runs)
            table.append(entry)
    _emit(json.dumps({"repeats": args.repeats, "results": table}, indent=2), args.out)
    return 0


COMMANDS = {
    "select": cmd_select,
    "gen": cmd_gen,
    "bench": cmd_bench,
    ("eval", "metrics"): cmd_eval_metrics,
    ("eval", "stability"): cmd_eval_stability,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # usage errors and --help; keeps main() usable as a function
        return exc.code
    key = (args.command, args.eval_command) if args.command == "eval" else args.command
    try:
        return COMMANDS[key](args)
    except (OSError, FormatError) as exc:
        print(f"projsel: error: {exc}", file=sys.stderr)
        return 2
    except (ProjselError, ValueError) as exc:
        print(f"projsel: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
