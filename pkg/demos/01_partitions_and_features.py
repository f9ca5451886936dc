#!/usr/bin/env python3
"""Walkthrough: cube partitions and local Taylor features.

Builds epsilon-covers of the square, shows how points map to cells, and
measures how fast a piecewise Taylor fit converges as cells shrink.
"""

import math

import numpy as np

from cinderella import (
    TaylorFeatureMap,
    assign_regions,
    auto_epsilon,
    build_partition,
    enumerate_multi_indices,
    feature_matrix,
    taylor_remainder_check,
)

# A partition of [-1, 1]^2 with cover radius 0.4 gets ceil(1/0.4) = 3 cells
# per axis, nine cells total. Every point is within 1/3 <= 0.4 of its center.
part = build_partition(dim=2, epsilon=0.4)
print(f"cells per axis: {part.cells_per_axis}, regions: {part.n_regions}")
print(f"effective radius: {part.effective_radius:.4f} (requested {part.epsilon})")

rng = np.random.default_rng(0)
pts = rng.uniform(-1, 1, size=(5, 2))
idx = assign_regions(part, pts)
for z, n in zip(pts, idx):
    print(f"  point {np.round(z, 3)} -> cell {n} centered at {part.centers[n]}")

# Cover radius matched to a run length: more episodes justify finer cells.
for K in (64, 4096, 262144):
    print(f"auto epsilon for K={K:>6}, d=2, nu=1: {auto_epsilon(K, 2, 1.0):.4f}")

# Degree-2 features on a cell are the monomials 1, dx, dy, dx^2, dx*dy, dy^2
# of the offset from the cell center.
fmap = TaylorFeatureMap(partition=part, index_set=enumerate_multi_indices(2, 2))
print(f"\nfeature dimension for degree 2 in d=2: {fmap.dim_features}")
print("features of a point near a center:")
print(np.round(feature_matrix(fmap, pts[:1]), 4)[0])

# The payoff: a function with bounded third derivative is approximated by a
# per-cell quadratic with error at most L * eps^3. sin(2x) has L_3 = 8.
print("\npiecewise-quadratic fit of sin(2x):")


def f(points):
    return np.sin(2.0 * points[:, 0])


def df(alpha, center):
    k = alpha[0]
    return 2.0**k * math.sin(2.0 * center[0] + k * math.pi / 2.0)


for eps in (0.5, 0.25, 0.125):
    err = taylor_remainder_check(f, df, nu=3.0, epsilon=eps)
    print(f"  eps={eps:<6} max error {err:.6f}   bound 8*eps^3 = {8 * eps**3:.6f}")
