"""Projectors, intersections of subspaces and rank-one deflation.

Two random subspaces of R^12 share a planted 2-dimensional part. Three
independent constructions of the projector onto their intersection are
compared, then the intersection with a hyperplane x^perp is obtained by
a single deflation step.

Run:  python3 demos/projector_algebra.py
"""

import numpy as np

from projsel import projops as po

rng = np.random.default_rng(0)
m = 12
common = np.linalg.qr(rng.standard_normal((m, 2)))[0]
a = np.hstack([common, rng.standard_normal((m, 3))])
b = np.hstack([common, rng.standard_normal((m, 4))])

p1 = po.projector_from_matrix(a)
p2 = po.projector_from_matrix(b)
print("rank of P1, P2:", round(np.trace(p1)), round(np.trace(p2)))

# The projector only depends on the span, not on the basis.
mixed = a @ rng.standard_normal((5, 5))
print("basis change moves P1 by", f"{np.linalg.norm(po.projector_from_matrix(mixed) - p1):.1e}")

pa = po.intersect_anderson(p1, p2)
pb = po.intersect_ben_israel([p1, p2])
pv, info = po.intersect_von_neumann(p1, p2)
truth = common @ common.T
print("\nintersection projector vs planted subspace (Frobenius):")
print(f"  parallel sum    {np.linalg.norm(pa - truth):.1e}")
print(f"  complements     {np.linalg.norm(pb - truth):.1e}")
print(f"  alternating     {np.linalg.norm(pv - truth):.1e}  ({info.n_iter} iterations)")

# Removing one direction: P restricted to x^perp.
x = rng.standard_normal(m)
px = p1 @ x
q = po.deflate(p1, px / np.linalg.norm(px))
print("\nafter deflating P1 by its component of x:")
print("  rank", round(np.trace(q)), "| corr(x) before", f"{po.corr(x, p1):.3f}", "after", f"{po.corr(x, q):.1e}")
hyper = np.eye(m) - np.outer(x, x) / (x @ x)
print("  matches the intersection with x^perp:", f"{np.linalg.norm(q - po.intersect_anderson(p1, hyper)):.1e}")
