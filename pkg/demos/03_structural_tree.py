"""
Structural similarity tree
==========================

Devices report noised per-bin degree vectors, then build ordered degree
matrices from their neighbors' vectors. The server compares matrices with
dynamic time warping and clusters the result into a binary tree.
"""

import math

import numpy as np

from fedwalk.federation import RunConfig, run_hct_protocol
from fedwalk.graph import Graph
from fedwalk.hct import dtw_dissimilarity, noise_inflation_bound

# DTW aligns matrices with different row counts
a = np.array([[0.0, 0.0], [2.0, 2.0]])
b = np.array([[1.0, 1.0]])
print("DTW between a 2-row and a 1-row matrix:", dtw_dissimilarity(a, b))

# Two stars joined at the hubs: leaves are structurally interchangeable
edges = [(0, 1)] + [(0, i) for i in range(2, 6)] + [(1, i) for i in range(6, 10)]
g = Graph.from_edges(10, edges)
out = run_hct_protocol(g, RunConfig(epsilon=math.inf, k=2, seed=0))
print("messages exchanged:", len(out.messages), "(2 per device each way)")
tree = out.tree
for side in tree.children[tree.root - g.num_vertices]:
    print("root child covers", sorted(tree.leaves(side).tolist()))

# Leaves sharing a small subtree have small lowest common ancestors
print("LCA leaf count (2, 3):", tree.lca_leaf_count(2, 3), " (2, 0):", tree.lca_leaf_count(2, 0))

# With noise the dissimilarities inflate, but on average within a bound
noisy = run_hct_protocol(g, RunConfig(epsilon=1.0, k=2, seed=0))
off = ~np.eye(10, dtype=bool)
inflation = (noisy.dissim - out.dissim)[off].mean()
print("mean inflation %.2f  bound %.1f" % (inflation, noise_inflation_bound(2, int(g.degrees().max()), 1.0)))
