"""Global graph, label sets and the per-device restricted views."""

from __future__ import annotations

import os
from bisect import bisect_left
from dataclasses import dataclass, field

import numpy as np


class GraphFormatError(ValueError):
    """Raised for malformed edge-list or label files."""


@dataclass(frozen=True)
class DeviceView:
    """What a single device knows: its own id and its neighbor list."""

    vertex: int
    neighbors: tuple[int, ...]

    @property
    def degree(self) -> int:
        return len(self.neighbors)


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected, unweighted graph with compact vertex ids ``0..n-1``.

    ``original_ids[i]`` is the id vertex ``i`` carried in the source file.
    """

    adjacency: tuple[tuple[int, ...], ...]
    original_ids: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.original_ids is None:
            object.__setattr__(self, "original_ids", np.arange(len(self.adjacency), dtype=np.int64))
        _validate(self.adjacency)

    @classmethod
    def from_edges(cls, num_vertices: int, edges, original_ids=None) -> "Graph":
        nbrs = [set() for _ in range(num_vertices)]
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v:
                raise GraphFormatError(f"self-loop on vertex {u}")
            if not (0 <= u < num_vertices and 0 <= v < num_vertices):
                raise GraphFormatError(f"edge ({u}, {v}) out of range for {num_vertices} vertices")
            nbrs[u].add(v)
            nbrs[v].add(u)
        adjacency = tuple(tuple(sorted(s)) for s in nbrs)
        ids = None if original_ids is None else np.asarray(original_ids, dtype=np.int64)
        return cls(adjacency, ids)

    @property
    def num_vertices(self) -> int:
        return len(self.adjacency)

    @property
    def num_edges(self) -> int:
        return sum(len(a) for a in self.adjacency) // 2

    def neighbors(self, v: int) -> tuple[int, ...]:
        return self.adjacency[v]

    def degrees(self) -> np.ndarray:
        return np.fromiter((len(a) for a in self.adjacency), dtype=np.int64, count=self.num_vertices)

    def edges(self):
        """Yield each undirected edge once as ``(u, v)`` with ``u < v``."""
        for u, nbrs in enumerate(self.adjacency):
            for v in nbrs:
                if u < v:
                    yield u, v

    def non_isolated(self) -> list[int]:
        return [v for v, a in enumerate(self.adjacency) if a]

    def id_index(self) -> dict[int, int]:
        return {int(orig): i for i, orig in enumerate(self.original_ids)}


def _validate(adjacency):
    n = len(adjacency)
    for v, nbrs in enumerate(adjacency):
        prev = -1
        for u in nbrs:
            if u <= prev:
                raise GraphFormatError(f"adjacency of {v} is not strictly sorted")
            if u == v:
                raise GraphFormatError(f"self-loop on vertex {v}")
            if not 0 <= u < n:
                raise GraphFormatError(f"neighbor {u} of {v} out of range")
            prev = u
    for v, nbrs in enumerate(adjacency):
        for u in nbrs:
            other = adjacency[u]
            i = bisect_left(other, v)
            if i == len(other) or other[i] != v:
                raise GraphFormatError(f"edge {v}-{u} is not symmetric")


@dataclass(frozen=True)
class LabelSet:
    labels: tuple[frozenset, ...]
    num_labels: int

    def __post_init__(self):
        for s in self.labels:
            for lab in s:
                if not 0 <= lab < self.num_labels:
                    raise GraphFormatError(f"label {lab} outside 0..{self.num_labels - 1}")

    def labeled_vertices(self) -> list[int]:
        return [v for v, s in enumerate(self.labels) if s]

    def indicator(self) -> np.ndarray:
        y = np.zeros((len(self.labels), self.num_labels), dtype=bool)
        for v, s in enumerate(self.labels):
            for lab in s:
                y[v, lab] = True
        return y


def _data_lines(path):
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if line:
                yield lineno, line


def load_edge_list(path) -> Graph:
    """Read a two-column edge list.

    Original ids are compacted to ``0..n-1`` in ascending order. Duplicate
    and reversed lines collapse to one undirected edge; a third column
    (a weight) is rejected rather than ignored.
    """
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    raw_edges = []
    for lineno, line in _data_lines(path):
        parts = line.replace(",", " ").split()
        if len(parts) != 2:
            raise GraphFormatError(f"{path}:{lineno}: expected two vertex ids, got {line!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise GraphFormatError(f"{path}:{lineno}: non-integer vertex id in {line!r}") from None
        if u < 0 or v < 0:
            raise GraphFormatError(f"{path}:{lineno}: negative vertex id")
        if u == v:
            raise GraphFormatError(f"{path}:{lineno}: self-loop on vertex {u}")
        raw_edges.append((u, v))
    ids = np.unique(np.asarray(raw_edges, dtype=np.int64).ravel()) if raw_edges else np.zeros(0, np.int64)
    index = {int(x): i for i, x in enumerate(ids)}
    edges = [(index[u], index[v]) for u, v in raw_edges]
    return Graph.from_edges(len(ids), edges, ids)


def load_labels(path, graph: Graph) -> LabelSet:
    """Read ``vertex l1,l2,...`` lines; vertex ids are the file's original ids."""
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    index = graph.id_index()
    sets = [set() for _ in range(graph.num_vertices)]
    max_label = -1
    for lineno, line in _data_lines(path):
        parts = line.split(None, 1)
        try:
            orig = int(parts[0])
            labs = [int(x) for x in parts[1].replace(",", " ").split()] if len(parts) > 1 else []
        except ValueError:
            raise GraphFormatError(f"{path}:{lineno}: cannot parse {line!r}") from None
        if orig not in index:
            raise GraphFormatError(f"{path}:{lineno}: vertex {orig} is not in the graph")
        if any(lab < 0 for lab in labs):
            raise GraphFormatError(f"{path}:{lineno}: negative label id")
        sets[index[orig]].update(labs)
        max_label = max([max_label, *labs])
    return LabelSet(tuple(frozenset(s) for s in sets), max_label + 1)


def write_edge_list(graph: Graph, path, header: str | None = None):
    with open(path, "w") as fh:
        if header:
            fh.write(header.rstrip("\n") + "\n")
        for u, v in graph.edges():
            fh.write(f"{graph.original_ids[u]} {graph.original_ids[v]}\n")


def write_id_map(graph: Graph, path, header: str | None = None):
    with open(path, "w") as fh:
        if header:
            fh.write(header.rstrip("\n") + "\n")
        for i, orig in enumerate(graph.original_ids):
            fh.write(f"{i} {orig}\n")


def device_views(graph: Graph) -> list[DeviceView]:
    return [DeviceView(v, graph.adjacency[v]) for v in range(graph.num_vertices)]


def erdos_renyi(n: int, p: float, rng) -> Graph:
    upper = np.triu(rng.random((n, n)) < p, 1)
    us, vs = np.nonzero(upper)
    return Graph.from_edges(n, zip(us.tolist(), vs.tolist()))


def stochastic_block_model(sizes, p_in: float, p_out: float, rng) -> tuple[Graph, LabelSet]:
    """Planted-partition graph; each vertex is labeled with its block."""
    block = np.repeat(np.arange(len(sizes)), sizes)
    n = len(block)
    prob = np.where(block[:, None] == block[None, :], p_in, p_out)
    upper = np.triu(rng.random((n, n)) < prob, 1)
    us, vs = np.nonzero(upper)
    graph = Graph.from_edges(n, zip(us.tolist(), vs.tolist()))
    labels = LabelSet(tuple(frozenset([int(b)]) for b in block), len(sizes))
    return graph, labels
