import itertools
import math

import networkx as nx
import numpy as np
import pytest

from fedwalk.graph import Graph
from fedwalk.hct import Hct


def brute_force_dtw(a, b):
    """Minimum total row-wise L1 cost over every monotone alignment path."""
    a, b = np.atleast_2d(a), np.atleast_2d(b)
    x, y = len(a), len(b)
    cell = np.abs(a[:, None, :] - b[None, :, :]).sum(axis=2)
    best = np.inf

    def walk(i, j, acc):
        nonlocal best
        acc += cell[i, j]
        if i == x - 1 and j == y - 1:
            best = min(best, acc)
            return
        if i + 1 < x:
            walk(i + 1, j, acc)
        if j + 1 < y:
            walk(i, j + 1, acc)
        if i + 1 < x and j + 1 < y:
            walk(i + 1, j + 1, acc)

    walk(0, 0, 0.0)
    return best


def dp_ratio_violations(sample_a, sample_b, epsilon, edges, min_count=1000):
    """Histogram bins where count ratio exceeds e^eps beyond 4 standard errors.

    The slack per bin is ``4 * sqrt(1/n_a + 1/n_b)`` (delta method on the log
    ratio); bins with fewer than ``min_count`` samples on either side are
    ignored.
    """
    ca, _ = np.histogram(sample_a, edges)
    cb, _ = np.histogram(sample_b, edges)
    bad = []
    for na, nb_ in zip(ca, cb):
        if na < min_count or nb_ < min_count:
            continue
        slack = 4.0 * math.sqrt(1.0 / na + 1.0 / nb_)
        for r in (na / nb_, nb_ / na):
            if r > math.exp(epsilon) * (1.0 + slack):
                bad.append(r)
    return bad


def tree_as_networkx(tree: Hct) -> nx.DiGraph:
    g = nx.DiGraph()
    g.add_nodes_from(range(2 * tree.num_leaves - 1))
    for t, (l, r) in enumerate(tree.children):
        g.add_edge(tree.num_leaves + t, int(l))
        g.add_edge(tree.num_leaves + t, int(r))
    return g


def oracle_lca_leaf_count(tree, v1, v2):
    g = tree_as_networkx(tree)
    a = nx.lowest_common_ancestor(g, v1, v2)
    return sum(1 for x in nx.descendants(g, a) | {a} if x < tree.num_leaves)


def oracle_tree_distance(tree, v1, v2):
    return nx.shortest_path_length(tree_as_networkx(tree).to_undirected(), v1, v2)


def balanced_tree(n_leaves_pow2):
    """Balanced tree over leaves 0..n-1 merging neighbours pairwise, level by level."""
    n = n_leaves_pow2
    level = list(range(n))
    children = []
    nxt = n
    while len(level) > 1:
        new = []
        for i in range(0, len(level), 2):
            children.append((level[i], level[i + 1]))
            new.append(nxt)
            nxt += 1
        level = new
    return Hct(np.array(children))


@pytest.fixture
def path3():
    return Graph.from_edges(3, [(0, 1), (1, 2)])


@pytest.fixture
def k4():
    return Graph.from_edges(4, itertools.combinations(range(4), 2))


@pytest.fixture
def two_cliques():
    edges = list(itertools.combinations(range(5), 2)) + list(itertools.combinations(range(5, 10), 2))
    edges.append((4, 5))
    return Graph.from_edges(10, edges)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
