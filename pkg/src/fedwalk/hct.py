"""Hierarchical clustering tree (HCT) construction from noised structural summaries.

Pipeline: random vertex bins -> per-device noised per-bin neighbor counts ->
per-device ordered degree matrices -> pairwise DTW dissimilarity ->
average-linkage agglomerative clustering -> binary tree with LCA queries.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numba as nb
import numpy as np

from .graph import DeviceView

# TBB builds shipped with some distros are too old for numba; prefer OpenMP
nb.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]
from .privacy import noise_counts


@dataclass(frozen=True)
class BinAssignment:
    k: int
    bin_of: np.ndarray

    def members(self, j: int) -> np.ndarray:
        return np.flatnonzero(self.bin_of == j)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.bin_of, minlength=self.k)


def default_bin_count(num_vertices: int) -> int:
    return max(1, int(math.floor(math.log(num_vertices)))) if num_vertices > 1 else 1


def assign_bins(num_vertices: int, k: int, rng: np.random.Generator) -> BinAssignment:
    """Uniformly random bins, repaired so that no bin is empty.

    ``k`` randomly chosen vertices seed one bin each; the rest are placed
    uniformly at random.
    """
    if not 1 <= k <= num_vertices:
        raise ValueError(f"bin count k={k} must lie in 1..{num_vertices}")
    bin_of = rng.integers(0, k, size=num_vertices)
    seeds = rng.permutation(num_vertices)[:k]
    bin_of[seeds] = np.arange(k)
    return BinAssignment(k, bin_of.astype(np.int64))


def true_bin_counts(view: DeviceView, bins: BinAssignment) -> np.ndarray:
    nbrs = np.asarray(view.neighbors, dtype=np.int64)
    return np.bincount(bins.bin_of[nbrs], minlength=bins.k).astype(float)


def local_degree_vector(view: DeviceView, bins: BinAssignment, epsilon: float, rng) -> np.ndarray:
    """Per-bin neighbor counts of ``view.vertex`` plus Laplace(0, 1/epsilon) noise."""
    return noise_counts(true_bin_counts(view, bins), epsilon, rng)


@dataclass(frozen=True)
class OrderedDegreeMatrix:
    rows: np.ndarray
    row_vertices: tuple[int, ...]

    @property
    def shape(self):
        return self.rows.shape


def ordered_degree_matrix(view: DeviceView, vectors) -> OrderedDegreeMatrix:
    """Stack the neighbors' degree vectors, ascending by estimated degree.

    The estimated degree is the plain sum of the noised entries (negatives
    included); equal sums fall back to ascending vertex id. A vertex with no
    neighbors gets a single all-zero row.
    """
    if not view.neighbors:
        k = len(next(iter(vectors.values()))) if isinstance(vectors, dict) else np.shape(vectors)[1]
        return OrderedDegreeMatrix(np.zeros((1, k)), ())
    try:
        rows = np.array([vectors[u] for u in view.neighbors], dtype=float)
    except (KeyError, IndexError) as exc:
        raise KeyError(f"vertex {view.vertex}: missing degree vector for neighbor {exc}") from None
    est = rows.sum(axis=1)
    order = np.lexsort((np.asarray(view.neighbors), est))
    return OrderedDegreeMatrix(rows[order], tuple(view.neighbors[i] for i in order))


@nb.njit(cache=True)
def _dtw_core(a, b):
    x, y, k = a.shape[0], b.shape[0], a.shape[1]
    prev = np.empty(y)
    cur = np.empty(y)
    for i in range(x):
        for j in range(y):
            d = 0.0
            for c in range(k):
                d += abs(a[i, c] - b[j, c])
            if i == 0 and j == 0:
                best = 0.0
            elif i == 0:
                best = cur[j - 1]
            elif j == 0:
                best = prev[j]
            else:
                best = min(prev[j], cur[j - 1], prev[j - 1])
            cur[j] = best + d
        prev, cur = cur, prev
    return prev[y - 1]


def _as_rows(m):
    rows = m.rows if isinstance(m, OrderedDegreeMatrix) else m
    return np.ascontiguousarray(np.atleast_2d(np.asarray(rows, dtype=float)))


def dtw_dissimilarity(a, b) -> float:
    """DTW alignment cost between two ordered degree matrices under row-wise L1.

    ``cost(i, j) = |row_i - row_j|_1 + min(cost(i-1, j), cost(i, j-1), cost(i-1, j-1))``
    with the first row and column accumulating along their single predecessor.
    """
    a, b = _as_rows(a), _as_rows(b)
    if a.shape[0] == 0 or b.shape[0] == 0:
        raise ValueError("DTW needs at least one row on each side")
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"column mismatch: {a.shape[1]} vs {b.shape[1]}")
    return float(_dtw_core(a, b))


@nb.njit(parallel=True, cache=True)
def _all_pairs_dtw(rows, offsets):
    n = offsets.shape[0] - 1
    out = np.zeros((n, n))
    for i in nb.prange(n):
        a = rows[offsets[i]:offsets[i + 1]]
        for j in range(i + 1, n):
            v = _dtw_core(a, rows[offsets[j]:offsets[j + 1]])
            out[i, j] = v
            out[j, i] = v
    return out


def dissimilarity_matrix(matrices) -> np.ndarray:
    """Dense symmetric |V|x|V| DTW table; ``matrices[v]`` for v in ``0..n-1``."""
    mats = [_as_rows(matrices[v]) for v in range(len(matrices))]
    if not mats:
        return np.zeros((0, 0))
    ks = {m.shape[1] for m in mats}
    if len(ks) != 1:
        raise ValueError(f"inconsistent bin counts {sorted(ks)}")
    offsets = np.zeros(len(mats) + 1, dtype=np.int64)
    offsets[1:] = np.cumsum([m.shape[0] for m in mats])
    return _all_pairs_dtw(np.concatenate(mats), offsets)


def structural_dissimilarity(graph, bins: BinAssignment, epsilon: float, seed: int):
    """Centralized shortcut for the protocol's dissimilarity matrix.

    Uses the same per-device random streams as the federated run, so for a
    given seed and bin plan both produce identical matrices. ``epsilon=inf``
    gives the noiseless reference.
    """
    from .graph import device_views
    from .privacy import random_source

    views = device_views(graph)
    vectors = np.vstack([
        local_degree_vector(v, bins, epsilon, random_source(seed, "device", v.vertex)) for v in views
    ])
    return dissimilarity_matrix([ordered_degree_matrix(v, vectors) for v in views]), vectors


def noise_inflation_bound(k: int, max_degree: int, epsilon: float) -> float:
    """Upper bound ``3 k maxdeg^2 / (2 eps)`` on the expected dissimilarity
    inflation caused by the degree-vector noise."""
    if k <= 0 or max_degree <= 0 or epsilon <= 0:
        raise ValueError("k, max_degree and epsilon must be positive")
    return 3.0 * k * max_degree**2 / (2.0 * epsilon)


theorem1_bound = noise_inflation_bound


# --- clustering -----------------------------------------------------------


@nb.njit(cache=True)
def _row_nn(d, active, i):
    best = np.inf
    arg = -1
    for j in range(d.shape[0]):
        if j != i and active[j] and d[i, j] < best:
            best = d[i, j]
            arg = j
    return arg, best


@nb.njit(cache=True)
def _average_linkage(dist):
    n = dist.shape[0]
    d = dist.copy()
    active = np.ones(n, dtype=np.bool_)
    size = np.ones(n, dtype=np.int64)
    node = np.arange(n)
    nn = np.empty(n, dtype=np.int64)
    nnd = np.empty(n)
    for i in range(n):
        nn[i], nnd[i] = _row_nn(d, active, i)
    merges = np.empty((n - 1, 2), dtype=np.int64)
    heights = np.empty(n - 1)
    for t in range(n - 1):
        # smallest slot attaining the global minimum; its nn is the smallest partner
        a = -1
        best = np.inf
        for i in range(n):
            if active[i] and nnd[i] < best:
                best = nnd[i]
                a = i
        b = nn[a]
        if b < a:
            a, b = b, a
        merges[t, 0] = node[a]
        merges[t, 1] = node[b]
        heights[t] = best
        active[b] = False
        sa, sb = size[a], size[b]
        for j in range(n):
            if active[j] and j != a:
                v = (sa * d[a, j] + sb * d[b, j]) / (sa + sb)
                d[a, j] = v
                d[j, a] = v
        size[a] = sa + sb
        node[a] = n + t
        if t == n - 2:
            break
        nn[a], nnd[a] = _row_nn(d, active, a)
        for r in range(n):
            if not active[r] or r == a:
                continue
            if nn[r] == a or nn[r] == b:
                nn[r], nnd[r] = _row_nn(d, active, r)
            elif d[r, a] < nnd[r] or (d[r, a] == nnd[r] and a < nn[r]):
                nn[r] = a
                nnd[r] = d[r, a]
    return merges, heights


class Hct:
    """Binary hierarchical clustering tree over vertices ``0..n-1``.

    Node ids: leaves are the vertex ids ``0..n-1``; internal nodes are
    ``n..2n-2`` in merge order, the root being the last one.
    """

    def __init__(self, children: np.ndarray, heights=None):
        children = np.asarray(children, dtype=np.int64).reshape(-1, 2)
        n = children.shape[0] + 1
        self.num_leaves = n
        self.children = children
        self.heights = None if heights is None else np.asarray(heights, dtype=float)
        total = 2 * n - 1
        parent = np.full(total, -1, dtype=np.int64)
        for t, (l, r) in enumerate(children):
            node = n + t
            for c in (l, r):
                if not 0 <= c < node or parent[c] != -1:
                    raise ValueError(f"malformed merge {t}: child {c}")
                parent[c] = node
        roots = np.flatnonzero(parent == -1)
        if len(roots) != 1:
            raise ValueError(f"tree has {len(roots)} roots")
        self.root = int(roots[0])
        self.parent = parent

        leaf_count = np.ones(total, dtype=np.int64)
        for t, (l, r) in enumerate(children):
            leaf_count[n + t] = leaf_count[l] + leaf_count[r]
        self.leaf_count = leaf_count

        # preorder pass: depths, and a leaf order in which every subtree is contiguous
        depth = np.zeros(total, dtype=np.int64)
        order = np.empty(n, dtype=np.int64)
        pos = 0
        stack = [self.root]
        while stack:
            v = stack.pop()
            if v < n:
                order[pos] = v
                pos += 1
                continue
            l, r = children[v - n]
            depth[l] = depth[r] = depth[v] + 1
            stack.append(r)
            stack.append(l)
        self.depth = depth
        self.leaf_order = order
        lo = np.empty(total, dtype=np.int64)
        lo[order] = np.arange(n)
        # children always precede their parent in merge order
        for t in range(n - 1):
            l, r = children[t]
            lo[n + t] = min(lo[l], lo[r])
        self.lo = lo

    @property
    def num_internal(self) -> int:
        return self.num_leaves - 1

    def _check(self, v):
        if not 0 <= v < self.num_leaves:
            raise KeyError(f"vertex {v} is not a leaf of this tree")

    def leaves(self, node: int) -> np.ndarray:
        s = self.lo[node]
        return self.leaf_order[s:s + self.leaf_count[node]]

    def lca(self, v1: int, v2: int) -> int:
        self._check(v1)
        self._check(v2)
        a, b = v1, v2
        while self.depth[a] > self.depth[b]:
            a = self.parent[a]
        while self.depth[b] > self.depth[a]:
            b = self.parent[b]
        while a != b:
            a, b = self.parent[a], self.parent[b]
        return int(a)

    def lca_leaf_count(self, v1: int, v2: int) -> int:
        return int(self.leaf_count[self.lca(v1, v2)])

    def tree_distance(self, v1: int, v2: int) -> int:
        a = self.lca(v1, v2)
        return int(self.depth[v1] + self.depth[v2] - 2 * self.depth[a])

    def lca_profile(self, v: int):
        """``(lca_leaf_counts, distances)`` from leaf ``v`` to every leaf.

        Walks the ancestor chain once; each ancestor labels the leaves of the
        sibling subtree it joins in.
        """
        self._check(v)
        counts = np.ones(self.num_leaves, dtype=np.int64)
        dist = np.zeros(self.num_leaves, dtype=np.int64)
        child, anc = v, self.parent[v]
        dv = self.depth[v]
        while anc != -1:
            l, r = self.children[anc - self.num_leaves]
            sib = r if l == child else l
            members = self.leaves(sib)
            counts[members] = self.leaf_count[anc]
            dist[members] = dv + self.depth[members] - 2 * self.depth[anc]
            child, anc = anc, self.parent[anc]
        return counts, dist

    def write(self, path, header: str | None = None):
        with open(path, "w") as fh:
            if header:
                fh.write(header.rstrip("\n") + "\n")
            for v in range(self.num_leaves):
                fh.write(f"leaf {v}\n")
            for t, (l, r) in enumerate(self.children):
                fh.write(f"{self.num_leaves + t} {l} {r}\n")

    @classmethod
    def read(cls, path) -> "Hct":
        leaves, triples = [], []
        with open(path) as fh:
            for line in fh:
                line = line.split("#", 1)[0].split()
                if not line:
                    continue
                if line[0] == "leaf":
                    leaves.append(int(line[1]))
                else:
                    triples.append(tuple(int(x) for x in line))
        n = len(leaves)
        if sorted(leaves) != list(range(n)):
            raise ValueError(f"{path}: leaves must be exactly 0..{n - 1}")
        triples.sort()
        if [t[0] for t in triples] != list(range(n, 2 * n - 1)):
            raise ValueError(f"{path}: internal node ids must be {n}..{2 * n - 2}")
        return cls(np.array([t[1:] for t in triples], dtype=np.int64).reshape(-1, 2))


def build_hct(dissim) -> Hct:
    """Average-linkage (UPGMA) agglomerative clustering into a binary tree.

    Deterministic: among equally close cluster pairs, the lexicographically
    smallest pair of cluster keys merges first, a cluster's key being its
    smallest vertex id.
    """
    d = np.asarray(dissim, dtype=float)
    n = d.shape[0]
    if d.shape != (n, n):
        raise ValueError("dissimilarity matrix must be square")
    if n == 0:
        raise ValueError("cannot cluster an empty vertex set")
    if n == 1:
        return Hct(np.zeros((0, 2), dtype=np.int64))
    merges, heights = _average_linkage(np.ascontiguousarray(d))
    return Hct(merges, heights)


# --- persistence ----------------------------------------------------------

_MAGIC = b"FWDISS01"
_HEADER = struct.Struct("<8sQQd")


def write_dissimilarity(path, dissim: np.ndarray, k: int, epsilon: float):
    """Binary lower triangle (diagonal included), row-major, float64 little-endian."""
    n = dissim.shape[0]
    rows, cols = np.tril_indices(n)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, n, k, float(epsilon)))
        fh.write(np.ascontiguousarray(dissim[rows, cols], dtype="<f8").tobytes())


def read_dissimilarity(path):
    """Return ``(matrix, k, epsilon)``."""
    with open(path, "rb") as fh:
        magic, n, k, eps = _HEADER.unpack(fh.read(_HEADER.size))
        if magic != _MAGIC:
            raise ValueError(f"{path}: not a dissimilarity file")
        tri = np.frombuffer(fh.read(), dtype="<f8")
    if tri.size != n * (n + 1) // 2:
        raise ValueError(f"{path}: truncated payload")
    out = np.zeros((n, n))
    rows, cols = np.tril_indices(n)
    out[rows, cols] = tri
    out[cols, rows] = tri
    return out, int(k), float(eps)
