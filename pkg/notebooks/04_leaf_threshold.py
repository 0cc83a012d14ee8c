# ---
# jupyter:
#   jupytext:
#     formats: py:light
#     text_representation:
#       extension: .py
#       format_name: light
# ---

# # A leaf under a failing parent
#
# In an in-arborescence a leaf `u` lends only to its parent `v`.  Shock `v`
# alone and vary total external assets `E`: below some level the leaf fails,
# above it the leaf survives.

import numpy as np

from finstab.graphs import degree_profile, generate_in_arborescence
from finstab.sweep import threshold_scan

g = generate_in_arborescence(50, seed=3)
d_in = degree_profile(g).in_degree
leaves = [u for u, v in g.edges.tolist() if d_in[u] == 0 and d_in[v] > 1]
print(len(leaves), "leaves with a shared parent")

scan = threshold_scan(g, leaves[0], phi=0.5, gamma=0.25)
print("parent", scan.parent, "in-degree", d_in[scan.parent], "threshold E* =", round(scan.threshold, 4))
print("".join("x" if f else "." for f in scan.fails))

# With unit weights the first-step algebra gives `E* = n (k - 2 iota) / (k - 1)`
# for a parent with in-degree `k` and out-degree `iota`.

k = d_in[scan.parent]
iota = 0 if scan.parent == 0 else 1
print(g.n * (k - 2 * iota) / (k - 1))

# How often is survival a clean step in E?

rng = np.random.default_rng(0)
steps = []
for _ in range(100):
    t = generate_in_arborescence(50, rng)
    d = degree_profile(t).in_degree
    cand = [u for u, v in t.edges.tolist() if d[u] == 0 and d[v] > 1]
    if cand:
        steps.append(threshold_scan(t, cand[0]).monotone)
print(f"{np.mean(steps):.0%} step functions")
