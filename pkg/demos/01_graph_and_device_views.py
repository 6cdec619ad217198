"""
Graphs and per-device views
===========================

Each vertex lives on its own device, which only ever sees its own neighbor
list. This script loads a small edge list and shows what each device holds.
"""

import os
import tempfile

import numpy as np

from fedwalk.graph import device_views, load_edge_list, stochastic_block_model
from fedwalk.privacy import random_source

# Ids in files need not be contiguous; they are compacted on load
path = os.path.join(tempfile.mkdtemp(), "edges.txt")
with open(path, "w") as fh:
    fh.write("# a path with a tail\n10 20\n20 30\n30 40\n20 50\n")
g = load_edge_list(path)
print("vertices", g.num_vertices, "edges", g.num_edges)
print("original ids", g.original_ids.tolist())

# A device sees one vertex and its neighbors, nothing else
for view in device_views(g):
    print(f"device {view.vertex} (file id {g.original_ids[view.vertex]}) sees {view.neighbors}")

# The synthetic fixture used throughout: 4 blocks of 50, dense inside, sparse across
g, labels = stochastic_block_model([50] * 4, 0.3, 0.02, random_source(0))
deg = g.degrees()
print("SBM: |V| =", g.num_vertices, "|E| =", g.num_edges, "mean degree %.1f" % deg.mean())
print("labels of vertices 0 and 150:", set(labels.labels[0]), set(labels.labels[150]))
print("sum of degrees == 2|E|:", int(np.sum(deg)) == 2 * g.num_edges)
