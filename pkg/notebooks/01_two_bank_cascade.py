# ---
# jupyter:
#   jupytext:
#     formats: py:light
#     text_representation:
#       extension: .py
#       format_name: light
# ---

# # Two banks, one loan
#
# Bank 0 lends one unit to bank 1.  External assets `E = 4` are split
# equally, so each bank holds 2.  We shock bank 1 with severity `phi = 0.5`
# and watch the loss travel back to its creditor.

import numpy as np

from finstab.balance import AssetConfig, assign_homogeneous, compute_sheets
from finstab.contagion import apply_initial_shock, cascade
from finstab.graphs import DirectedGraph

g = DirectedGraph(2, [[0, 1]])
net = assign_homogeneous(g, AssetConfig(total_external=4.0, total_interbank=1.0, gamma=0.25))
sheets = compute_sheets(net)
for v, s in enumerate(sheets):
    print(v, s)

# Bank 1 borrowed, so its interbank borrowing `b = 1` counts towards its
# assets: `a = 3`, `c = 0.75`.  The shock removes `phi * e = 1.5`.

c0 = apply_initial_shock(sheets, [1], phi=0.5)
print(c0)

# Bank 1 is now insolvent.  It passes `min(|c|, b) / d_in = 0.75` to its
# only creditor, whose equity of 0.5 cannot absorb it.

res = cascade(net, sheets, [1], phi=0.5)
print("dead:", sorted(res.final_dead), "rounds:", res.rounds, "trace:", res.dead_trace)
print("final equity:", res.equity)

# With a thicker equity buffer the creditor survives.

net45 = assign_homogeneous(g, AssetConfig(4.0, 1.0, gamma=0.45))
res45 = cascade(net45, compute_sheets(net45), [1], phi=0.5)
print("dead:", sorted(res45.final_dead), "creditor equity:", np.round(res45.equity[0], 3))

# Halving external assets breaks the balance-sheet assumption for the lender:
# its effective external asset `b - iota + sigma E` drops to zero.

from finstab.errors import ValidationError

try:
    compute_sheets(assign_homogeneous(g, AssetConfig(2.0, 1.0, 0.25)))
except ValidationError as exc:
    print(exc)
