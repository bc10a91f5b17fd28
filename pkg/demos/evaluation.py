"""Scoring selections: stability under subsampling, canonical correlation, clustering.

Uses the bundled 500-sample fixture (20 candidate columns, 5 reference
columns, 3 classes).

Run:  python3 demos/evaluation.py
"""

import os

import numpy as np

from projsel import evalmetrics as em
from projsel import load_csv, select_kernel
from projsel.kernels import KernelSpec

here = os.path.join(os.path.dirname(os.path.abspath(__file__)), os.pardir, "tests", "data")
x = np.asarray(load_csv(os.path.join(here, "fixture_x.csv")))
y = np.asarray(load_csv(os.path.join(here, "fixture_y.csv")))
labels = np.loadtxt(os.path.join(here, "fixture_labels.txt"))

rng = np.random.default_rng(0)
print("stability over 10 random subsamples, d = 4")
for frac in (0.1, 0.3, 0.5):
    results = []
    for _ in range(10):
        rows = np.sort(rng.choice(500, size=int(frac * 500), replace=False))
        results.append(select_kernel(y[rows], x[rows], 4, unit_norm=True))
    runs = em.SelectionRuns.from_results(results, 20, k=4)
    print(f"  {int(100 * frac):>3}% rows: stability {em.stability_index(runs):.3f}, "
          f"relevance correlation {em.pearson_relevance(runs):.3f}")

full = select_kernel(y, x, 5, unit_norm=True)
print("\npicks on all rows:", full.indices)
print("first canonical correlation as picks accumulate:",
      np.round(em.cca_curve(x, y, full.indices), 3).tolist())

k_sel = x[:, full.indices] @ x[:, full.indices].T
print("alignment of sample kernels, selected X vs Y:", f"{em.kernel_alignment(k_sel, y @ y.T):.3f}")

rbf = select_kernel(y, x, 5, KernelSpec(family="rbf"), unit_norm=True)
for name, cols in (("linear picks", full.indices), ("rbf picks", rbf.indices), ("all columns", range(20))):
    print(f"k-means NMI, {name:>12}: {em.kmeans_nmi(x[:, list(cols)], labels, 3, restarts=5):.3f}")
