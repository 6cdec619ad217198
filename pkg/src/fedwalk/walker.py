"""Federated random-walk generation.

A walk is a token passed between devices. Each holder appends the
exponential-mechanism encoding of its own id and hands the token to a
random neighbor, or, with probability ``p``, appends its neighbor's encoding
too and jumps straight to a predicted two-hop vertex, saving one
device-to-device message.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .hct import BinAssignment, Hct
from .privacy import exponential_probabilities, random_source, sample_cumulative

# payload byte model
ID_BYTES = 4
REAL_BYTES = 8
TUPLE_BYTES = 16

SKIPPED_HOP = "skipped-hop"
PREDICTED_HOP = "predicted-hop"


@dataclass(frozen=True)
class WalkConfig:
    l: int = 40
    epsilon: float = 2.0
    p: float = 0.2
    gamma: int = 80
    predictor_records: str = SKIPPED_HOP

    def __post_init__(self):
        if self.l < 2:
            raise ValueError(f"walk length must be at least 2, got {self.l}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {self.p}")
        if self.gamma < 1:
            raise ValueError(f"gamma must be at least 1, got {self.gamma}")
        if not self.epsilon >= 0:
            raise ValueError(f"encoder epsilon must be non-negative, got {self.epsilon}")
        if self.predictor_records not in (SKIPPED_HOP, PREDICTED_HOP):
            raise ValueError(f"unknown predictor_records {self.predictor_records!r}")


@dataclass
class WalkSequence:
    """``encoded`` goes to the server; ``true_path`` is kept for diagnostics only.

    ``steps[i]`` says how position ``i+1`` was reached from position ``i``:
    ``edge`` (a sampled graph edge), ``predicted`` (two-hop predictor),
    ``fallback`` (an isolated holder bouncing the token back to its sender) or
    ``repeat`` (the holder re-appending itself after a predicted-hop record).
    """

    encoded: list
    true_path: list
    steps: list = field(default_factory=list)


@dataclass
class CommStats:
    device_to_device: int = 0
    device_to_server: int = 0
    server_to_device: int = 0
    device_to_device_bytes: int = 0
    device_to_server_bytes: int = 0
    server_to_device_bytes: int = 0

    def __iadd__(self, other: "CommStats"):
        for name in self.__dataclass_fields__:
            setattr(self, name, getattr(self, name) + getattr(other, name))
        return self

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in self.__dataclass_fields__}


def encoder_score(v1: int, v2: int, dissim, tree: Hct) -> float:
    return -float(dissim[v1, v2]) * tree.lca_leaf_count(v1, v2)


def encoder_probabilities(v: int, dissim, tree: Hct, epsilon: float) -> np.ndarray:
    """Distribution over all vertices of the encoding of ``v``."""
    counts, _ = tree.lca_profile(v)
    return exponential_probabilities(-np.asarray(dissim[v], dtype=float) * counts, epsilon)


def encode_vertex(v: int, dissim, tree: Hct, epsilon: float, rng) -> int:
    return sample_cumulative(np.cumsum(encoder_probabilities(v, dissim, tree, epsilon)), rng)


def _round_half_up(x):
    return int(math.floor(x + 0.5))


def predictor_pool(u: int, c_u, tree: Hct, bins: BinAssignment, order=None) -> np.ndarray:
    """Per bin j, the ``round(c_u[j])`` vertices of bin j nearest to ``u`` in the tree.

    Negative entries count as zero, counts are capped at what the bin holds,
    ``u`` itself is never included. Ties in tree distance go to lower ids.
    """
    if order is None:
        order = _tree_order(u, tree)
    bins_in_order = bins.bin_of[order]
    pool = []
    for j, c in enumerate(np.asarray(c_u, dtype=float)):
        want = _round_half_up(max(c, 0.0))
        if want:
            pool.append(order[bins_in_order == j][:want])
    return np.concatenate(pool) if pool else np.zeros(0, dtype=np.int64)


def _tree_order(u, tree):
    _, dist = tree.lca_profile(u)
    order = np.lexsort((np.arange(tree.num_leaves), dist))
    return order[order != u]


def predict_two_hop(u: int, c_u, tree: Hct, bins: BinAssignment, rng, order=None) -> int:
    pool = predictor_pool(u, c_u, tree, bins, order)
    if pool.size:
        return int(pool[int(rng.random() * pool.size)])
    # empty pool: any vertex but u
    x = int(rng.random() * (tree.num_leaves - 1))
    return x + 1 if x >= u else x


class WalkContext:
    """Everything a device receives before walking starts: the HCT, the
    dissimilarity matrix, the bin plan and the degree-vector dictionary.

    Encoder distributions and per-vertex tree orderings are computed lazily
    and cached; all devices share this read-only copy.
    """

    def __init__(self, dissim, tree: Hct, bins: BinAssignment, vectors, epsilon: float):
        self.dissim = np.asarray(dissim, dtype=float)
        self.tree = tree
        self.bins = bins
        self.vectors = np.asarray(vectors, dtype=float)
        self.epsilon = float(epsilon)
        self.num_vertices = self.dissim.shape[0]
        self._cdf = {}
        self._order = {}

    def encoder_cdf(self, v: int) -> np.ndarray:
        cdf = self._cdf.get(v)
        if cdf is None:
            cdf = np.cumsum(encoder_probabilities(v, self.dissim, self.tree, self.epsilon))
            self._cdf[v] = cdf
        return cdf

    def encode(self, v: int, rng) -> int:
        return sample_cumulative(self.encoder_cdf(v), rng)

    def predict(self, u: int, rng) -> int:
        order = self._order.get(u)
        if order is None:
            order = self._order[u] = _tree_order(u, self.tree)
        return predict_two_hop(u, self.vectors[u], self.tree, self.bins, rng, order)


def run_walk(start: int, config: WalkConfig, views, context: WalkContext, rng, on_message=None, audit=False):
    """Simulate one walk; returns ``(WalkSequence, CommStats)``.

    ``views[v]`` is the only adjacency data touched, and only for the current
    holder. ``on_message(kind, src, dst, nbytes, payload)`` observes every
    transfer; ``payload`` is only materialized when ``audit`` is set.
    """
    if not views[start].neighbors:
        raise ValueError(f"walk start {start} is isolated")
    stats = CommStats()
    encoded, path, steps = [], [], []
    holder, sender, budget = start, None, config.l
    while True:
        if budget == 1:
            encoded.append(context.encode(holder, rng))
            path.append(holder)
            nbytes = ID_BYTES * len(encoded)
            stats.device_to_server += 1
            stats.device_to_server_bytes += nbytes
            if on_message:
                on_message("walk-upload", holder, None, nbytes, tuple(encoded) if audit else None)
            break
        nbrs = views[holder].neighbors
        if nbrs:
            u, kind = nbrs[int(rng.random() * len(nbrs))], "edge"
        else:
            # only reachable through a prediction; the sender is the one id it knows
            u, kind = sender, "fallback"
        encoded.append(context.encode(holder, rng))
        path.append(holder)
        if budget > 2 and rng.random() < config.p:
            target = context.predict(u, rng)
            if config.predictor_records == SKIPPED_HOP:
                recorded, steps_added = u, [kind, "predicted"]
            else:
                recorded, steps_added = target, ["predicted", "repeat"]
            encoded.append(context.encode(recorded, rng))
            path.append(recorded)
            steps.extend(steps_added)
            budget -= 2
        else:
            target = u
            steps.append(kind)
            budget -= 1
        nbytes = TUPLE_BYTES + ID_BYTES * len(encoded)
        stats.device_to_device += 1
        stats.device_to_device_bytes += nbytes
        if on_message:
            payload = None
            if audit:
                payload = {"tuple": (budget, config.epsilon, config.p), "sequence": tuple(encoded)}
            on_message("walk-hop", holder, target, nbytes, payload)
        if target != holder:
            # a prediction may land back on the holder; keep the last other device
            sender, holder = holder, target
    return WalkSequence(encoded, path, steps), stats


def generate_corpus(graph, config: WalkConfig, context: WalkContext, seed: int, views=None, on_message=None, audit=False):
    """``gamma`` passes; each pass dispatches one walk from every non-isolated
    vertex in a freshly shuffled order.

    Returns ``(walks, CommStats)``; the stats include the initial broadcast of
    the tree and dissimilarity matrix plus one dispatch tuple per walk.
    """
    if views is None:
        from .graph import device_views
        views = device_views(graph)
    n = graph.num_vertices
    stats = CommStats()
    bcast = broadcast_bytes(n)
    stats.server_to_device += n
    stats.server_to_device_bytes += n * bcast
    if on_message:
        for v in range(n):
            on_message("hct-broadcast", None, v, bcast, None)
    starts = np.asarray(graph.non_isolated(), dtype=np.int64)
    walks = []
    for pass_ in range(config.gamma):
        order = random_source(seed, "order", pass_).permutation(starts)
        for v in order.tolist():
            stats.server_to_device += 1
            stats.server_to_device_bytes += TUPLE_BYTES
            if on_message:
                on_message("walk-dispatch", None, v, TUPLE_BYTES, None)
            rng = random_source(seed, "walk", pass_, v)
            walk, s = run_walk(v, config, views, context, rng, on_message, audit)
            walks.append(walk)
            stats += s
    return walks, stats


def uniform_walks(graph, l: int, gamma: int, seed: int) -> list:
    """Plain centralized random walks (the DeepWalk corpus), same start schedule."""
    starts = np.asarray(graph.non_isolated(), dtype=np.int64)
    walks = []
    for pass_ in range(gamma):
        for v in random_source(seed, "order", pass_).permutation(starts).tolist():
            rng = random_source(seed, "walk", pass_, v)
            path = [v]
            for _ in range(l - 1):
                nbrs = graph.adjacency[path[-1]]
                path.append(nbrs[int(rng.random() * len(nbrs))])
            walks.append(path)
    return walks


def broadcast_bytes(n: int) -> int:
    """Per-device size of the tree + dissimilarity broadcast."""
    return REAL_BYTES * n * n + 2 * ID_BYTES * max(n - 1, 0)


def expected_messages(l: int, p: float) -> float:
    """Closed-form expected device-to-device messages for one ``l``-vertex walk.

    ``(l-2)/(1+p) + (2 - 2p - 1/(1+p)) (1 - (-p)^(l-2)) / (1+p)`` for ``l >= 3``.
    Note this expression does not satisfy the step recurrence it is meant to
    solve (it undercounts for ``p > 0``); see :func:`exact_expected_messages`.
    """
    if l < 1:
        raise ValueError("l must be at least 1")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    if l == 1:
        return 0.0
    if l == 2:
        return 1.0
    q = 1.0 + p
    return (l - 2) / q + (2.0 - 2.0 * p - 1.0 / q) * (1.0 - (-p) ** (l - 2)) / q


def exact_expected_messages(l: int, p: float) -> float:
    """Solution of the message recurrence with ``E_1 = 0``, ``E_2 = 1``.

    ``E_l = 1 + (l-2)/(1+p) - p^2 (1 - (-p)^(l-2)) / (1+p)^2``. This is what the
    simulated protocol converges to. :func:`expected_messages` agrees with it
    only for ``p = 0`` or ``l <= 2``.
    """
    if l < 1:
        raise ValueError("l must be at least 1")
    if l == 1:
        return 0.0
    q = 1.0 + p
    return 1.0 + (l - 2) / q - p * p * (1.0 - (-p) ** (l - 2)) / (q * q)


def expected_messages_recurrence(l: int, p: float) -> float:
    """Same quantity from ``E_l = p (E_{l-2} + 1) + (1 - p)(E_{l-1} + 1)``."""
    e = [0.0, 0.0, 1.0]
    for m in range(3, l + 1):
        e.append(p * (e[m - 2] + 1.0) + (1.0 - p) * (e[m - 1] + 1.0))
    return e[l]


def expected_savings(l: int, p: float, num_vertices: int = 1, gamma: int = 1) -> float:
    return num_vertices * gamma * ((l - 1) - expected_messages(l, p))


def write_corpus(walks, path, header: str | None = None):
    with open(path, "w") as fh:
        if header:
            fh.write(header.rstrip("\n") + "\n")
        for w in walks:
            fh.write(" ".join(map(str, w.encoded)) + "\n")


def read_corpus(path) -> list:
    out = []
    with open(path) as fh:
        for line in fh:
            if line.startswith("#") or not line.strip():
                continue
            out.append([int(x) for x in line.split()])
    return out
