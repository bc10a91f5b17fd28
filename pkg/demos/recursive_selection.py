"""Recursive selection: the explicit projector algorithm and its kernel form.

The explicit version keeps an m x m projector and deflates it after every
pick. The kernelized version never touches anything larger than
n_y x n_x once the kernel matrices are built, and returns the same picks
for the linear kernel. Nonlinear kernels change the notion of
correlation, and so the picks.

Run:  python3 demos/recursive_selection.py
"""

import time

import numpy as np

from projsel import KernelSpec, PreprocessSpec, preprocess, select_explicit, select_kernel
from projsel.datagen import GenSpec, generate

x, y = generate(GenSpec(m=800, n_x=40, n_y=8, seed=3))
x = preprocess(x, PreprocessSpec(center=True, unit_norm=True))
y = preprocess(y, PreprocessSpec(center=True, unit_norm=True))

t0 = time.perf_counter()
explicit = select_explicit(y, x, 8)
t1 = time.perf_counter()
kernel = select_kernel(y, x, 8)
t2 = time.perf_counter()

print("explicit picks:", explicit.indices, f"({1000 * (t1 - t0):.1f} ms)")
print("kernel picks:  ", kernel.indices, f"({1000 * (t2 - t1):.1f} ms)")
print("step scores:   ", np.round(kernel.scores, 4).tolist())
print("largest score gap:", f"{np.max(np.abs(np.subtract(explicit.scores, kernel.scores))):.1e}")

# A candidate that duplicates an earlier pick is worthless once that pick is made.
dup = np.hstack([x, x[:, [kernel.indices[0]]]])
again = select_kernel(y, dup, 8)
print("\nwith a duplicate of the first pick appended as column 40:", again.indices)

for spec in (KernelSpec(family="poly3"), KernelSpec(family="rbf")):
    res = select_kernel(y, x, 8, spec)
    print(f"{spec.family:>6} picks:", res.indices, res.kernel)
