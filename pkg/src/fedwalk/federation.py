"""Simulated server/device orchestration with full message accounting.

The server object is built from the vertex count alone and only ever sees
message payloads; each device holds exactly one :class:`DeviceView`. Every
exchange goes through :class:`Network`, which records one :class:`Message`
per protocol step.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import os
import time
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import __version__
from .embedding import SkipGramConfig, train, write_embeddings
from .evaluation import evaluate
from .graph import DeviceView, Graph, device_views, load_edge_list, load_labels, write_id_map
from .hct import (
    BinAssignment,
    Hct,
    assign_bins,
    build_hct,
    default_bin_count,
    dissimilarity_matrix,
    local_degree_vector,
    ordered_degree_matrix,
    write_dissimilarity,
)
from .privacy import random_source
from .walker import (
    ID_BYTES,
    REAL_BYTES,
    CommStats,
    WalkConfig,
    WalkContext,
    broadcast_bytes,
    exact_expected_messages,
    expected_messages,
    generate_corpus,
    uniform_walks,
    write_corpus,
)

log = logging.getLogger(__name__)

SERVER = -1

MESSAGE_KINDS = (
    "group-plan",
    "degree-vector",
    "vector-dictionary",
    "degree-matrix",
    "hct-broadcast",
    "walk-dispatch",
    "walk-hop",
    "walk-upload",
)


class ProtocolError(RuntimeError):
    """A protocol invariant (visibility, accounting) was violated."""


class Message(NamedTuple):
    kind: str
    src: int
    dst: int
    nbytes: int


@dataclass
class RunConfig:
    k: int | None = None
    epsilon: float = 2.0
    l: int = 40
    p: float = 0.2
    gamma: int = 80
    d: int = 128
    w: int = 10
    negatives: int = 5
    epochs: int = 1
    seed: int = 0
    train_ratios: tuple = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6)
    predictor_records: str = "skipped-hop"
    threads: int = 1
    baseline: bool = False

    def __post_init__(self):
        self.train_ratios = tuple(self.train_ratios)
        self.walk_config()
        self.skipgram_config()
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.k is not None and self.k < 1:
            raise ValueError(f"k must be at least 1, got {self.k}")
        if self.threads < 1:
            raise ValueError(f"threads must be at least 1, got {self.threads}")
        if not all(0.0 < r < 1.0 for r in self.train_ratios):
            raise ValueError(f"train ratios must lie in (0, 1), got {self.train_ratios}")

    def walk_config(self) -> WalkConfig:
        return WalkConfig(self.l, self.epsilon, self.p, self.gamma, self.predictor_records)

    def skipgram_config(self) -> SkipGramConfig:
        return SkipGramConfig(d=self.d, w=self.w, negatives=self.negatives, epochs=self.epochs)

    def resolved_k(self, num_vertices: int) -> int:
        return self.k if self.k is not None else default_bin_count(num_vertices)

    def as_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["train_ratios"] = list(self.train_ratios)
        return out

    def digest(self) -> str:
        text = json.dumps(self.as_dict(), sort_keys=True)
        return hashlib.sha256(text.encode()).hexdigest()[:16]


def provenance_header(config: RunConfig, extra: str = "") -> str:
    return f"# fedwalk {__version__} config={config.digest()} seed={config.seed}{(' ' + extra) if extra else ''}"


class Network:
    """Delivers payloads and records the message log."""

    def __init__(self):
        self.log: list[Message] = []

    def record(self, kind, src, dst, nbytes):
        if kind not in MESSAGE_KINDS:
            raise ProtocolError(f"unknown message kind {kind!r}")
        src = SERVER if src is None else src
        dst = SERVER if dst is None else dst
        if src != SERVER and dst != SERVER and kind != "walk-hop":
            raise ProtocolError(f"device-to-device message of kind {kind}")
        self.log.append(Message(kind, int(src), int(dst), int(nbytes)))

    def counts(self) -> dict:
        out = dict.fromkeys(MESSAGE_KINDS, 0)
        for m in self.log:
            out[m.kind] += 1
        return out

    def write(self, path, header: str | None = None):
        with open(path, "w") as fh:
            if header:
                fh.write(header + "\n")
            for m in self.log:
                src = "server" if m.src == SERVER else m.src
                dst = "server" if m.dst == SERVER else m.dst
                fh.write(f"{m.kind} {src} {dst} {m.nbytes}\n")


class Device:
    """One vertex's client. Holds its own view and whatever the server sent it."""

    def __init__(self, view: DeviceView, epsilon: float, rng):
        self.view = view
        self._epsilon = epsilon
        self._rng = rng
        self.vector = None

    def on_group_plan(self, bins: BinAssignment) -> np.ndarray:
        self.vector = local_degree_vector(self.view, bins, self._epsilon, self._rng)
        return self.vector

    def on_vector_dictionary(self, vectors: np.ndarray) -> np.ndarray:
        return ordered_degree_matrix(self.view, vectors).rows


class Server:
    """Knows the vertex set and nothing else about the graph."""

    def __init__(self, num_vertices: int):
        self.num_vertices = num_vertices
        self.vectors = None
        self.matrices = None

    def plan_bins(self, k: int, rng) -> BinAssignment:
        return assign_bins(self.num_vertices, k, rng)

    def collect_vectors(self, replies: list) -> np.ndarray:
        self.vectors = np.vstack(replies)
        return self.vectors

    def cluster(self, matrices: list):
        self.matrices = matrices
        dissim = dissimilarity_matrix(matrices)
        return dissim, build_hct(dissim)


@dataclass
class HctOutputs:
    tree: Hct
    dissim: np.ndarray
    vectors: np.ndarray
    bins: BinAssignment
    messages: list = field(default_factory=list)


def run_hct_protocol(graph: Graph, config: RunConfig, network: Network | None = None) -> HctOutputs:
    """Bin plan -> noised degree vectors -> dictionary -> ordered matrices -> DTW + clustering.

    Every round is barrier-synchronized: all replies are in before the next
    broadcast goes out.
    """
    net = network or Network()
    n = graph.num_vertices
    k = config.resolved_k(n)
    server = Server(n)
    devices = [Device(v, config.epsilon, random_source(config.seed, "device", v.vertex)) for v in device_views(graph)]

    bins = server.plan_bins(k, random_source(config.seed, "bins"))
    plan_bytes = ID_BYTES * n
    replies = []
    for dev in devices:
        net.record("group-plan", SERVER, dev.view.vertex, plan_bytes)
        vec = dev.on_group_plan(bins)
        net.record("degree-vector", dev.view.vertex, SERVER, REAL_BYTES * k)
        replies.append(vec)
    vectors = server.collect_vectors(replies)

    dict_bytes = REAL_BYTES * n * k
    matrices = []
    for dev in devices:
        net.record("vector-dictionary", SERVER, dev.view.vertex, dict_bytes)
        rows = dev.on_vector_dictionary(vectors)
        net.record("degree-matrix", dev.view.vertex, SERVER, REAL_BYTES * rows.size)
        matrices.append(rows)

    if config.threads > 1:
        import numba

        numba.set_num_threads(config.threads)
    dissim, tree = server.cluster(matrices)
    return HctOutputs(tree, dissim, vectors, bins, net.log)


def _audit_hop(payload):
    # a hop carries the (budget, epsilon, p) tuple and encoded ids, nothing else
    if set(payload) != {"tuple", "sequence"}:
        raise ProtocolError(f"unexpected walk-hop payload fields {sorted(payload)}")
    if not all(isinstance(x, int) for x in payload["sequence"]):
        raise ProtocolError("walk-hop sequence must hold vertex ids only")


def run_walk_protocol(graph: Graph, hct: HctOutputs, config: RunConfig, network: Network | None = None, audit=False):
    """Broadcast tree + dissimilarity, then ``gamma`` dispatch rounds.

    Returns ``(walks, CommStats, message log)``.
    """
    net = network or Network()
    context = WalkContext(hct.dissim, hct.tree, hct.bins, hct.vectors, config.epsilon)
    views = device_views(graph)

    def on_message(kind, src, dst, nbytes, payload=None):
        if audit and kind == "walk-hop":
            _audit_hop(payload)
        net.record(kind, src, dst, nbytes)

    walks, stats = generate_corpus(graph, config.walk_config(), context, config.seed, views, on_message, audit)
    hops = sum(1 for m in net.log if m.kind == "walk-hop")
    if hops != stats.device_to_device:
        raise ProtocolError(f"{hops} walk-hop messages logged but {stats.device_to_device} counted")
    return walks, stats, net.log


def comm_report(stats: CommStats, config: RunConfig, num_walks: int, num_vertices: int) -> dict:
    per_walk = stats.device_to_device / num_walks if num_walks else 0.0
    expected = expected_messages(config.l, config.p)
    return {
        "counts": stats.as_dict(),
        "walks": num_walks,
        "per_walk_device_to_device": {
            "observed": per_walk,
            "expected": expected,
            "expected_exact": exact_expected_messages(config.l, config.p),
        },
        "savings_per_walk": {"observed": (config.l - 1) - per_walk, "expected": (config.l - 1) - expected},
        "broadcast_bytes_per_device": broadcast_bytes(num_vertices),
        "privacy": {"laplace_epsilon": config.epsilon, "encoder_epsilon": config.epsilon, "composed": False},
    }


def fedwalk_embeddings(graph: Graph, config: RunConfig, audit=False):
    """In-memory FedWalk run; returns ``(embeddings, walks, stats, hct_outputs)``."""
    hct = run_hct_protocol(graph, config)
    walks, stats, _ = run_walk_protocol(graph, hct, config, audit=audit)
    emb = train(walks, config.skipgram_config(), random_source(config.seed, "skipgram"), graph.num_vertices)
    return emb, walks, stats, hct


def deepwalk_embeddings(graph: Graph, config: RunConfig):
    """Centralized baseline: same trainer, true uniform walks, no encoding."""
    walks = uniform_walks(graph, config.l, config.gamma, config.seed)
    return train(walks, config.skipgram_config(), random_source(config.seed, "skipgram"), graph.num_vertices)


class StageError(RuntimeError):
    def __init__(self, stage, cause):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


def _stage(name):
    class _Ctx:
        def __enter__(self):
            self.t = time.perf_counter()
            log.info("stage %s: start", name)

        def __exit__(self, etype, exc, tb):
            if exc is not None and not isinstance(exc, (StageError, ProtocolError)):
                raise StageError(name, exc) from exc
            log.info("stage %s: %.2fs", name, time.perf_counter() - self.t)

    return _Ctx()


def write_json(path, obj, config: RunConfig):
    doc = {"provenance": {"tool": f"fedwalk {__version__}", "config_hash": config.digest(), "seed": config.seed}}
    doc.update(obj)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=False)
        fh.write("\n")


def run_pipeline(edges_path, labels_path, config: RunConfig, out_dir, write_message_log=True) -> dict:
    """hct -> walks -> skipgram -> eval, persisting every intermediate artifact."""
    os.makedirs(out_dir, exist_ok=True)
    header = provenance_header(config)
    with _stage("load"):
        graph = load_edge_list(edges_path)
        labels = load_labels(labels_path, graph) if labels_path else None
        write_id_map(graph, os.path.join(out_dir, "id_map.txt"), header)
    net = Network()
    with _stage("hct"):
        hct = run_hct_protocol(graph, config, net)
        k = hct.bins.k
        write_dissimilarity(os.path.join(out_dir, "dissimilarity.bin"), hct.dissim, k, config.epsilon)
        hct.tree.write(os.path.join(out_dir, "hct.txt"), header)
    with _stage("walk"):
        walks, stats, _ = run_walk_protocol(graph, hct, config, net)
        write_corpus(walks, os.path.join(out_dir, "corpus.txt"), header)
        report = comm_report(stats, config, len(walks), graph.num_vertices)
        report["message_counts"] = net.counts()
        write_json(os.path.join(out_dir, "comm_report.json"), report, config)
        if write_message_log:
            net.write(os.path.join(out_dir, "messages.log"), header)
    with _stage("embed"):
        emb = train(walks, config.skipgram_config(), random_source(config.seed, "skipgram"), graph.num_vertices)
        write_embeddings(emb, os.path.join(out_dir, "embeddings.txt"), graph.original_ids, header)
    metrics = []
    with _stage("eval"):
        if labels is not None:
            baseline = deepwalk_embeddings(graph, config).input_vectors if config.baseline else None
            for tr in config.train_ratios:
                m = evaluate(emb.input_vectors, labels, tr, config.seed)
                if baseline is not None:
                    base = evaluate(baseline, labels, tr, config.seed)
                    m["deepwalk"] = {"micro_f1": base["micro_f1"], "macro_f1": base["macro_f1"]}
                metrics.append(m)
            write_json(os.path.join(out_dir, "metrics.json"), {"metrics": metrics, "config": config.as_dict()}, config)
    result = {
        "config": config.as_dict(),
        "num_vertices": graph.num_vertices,
        "num_edges": graph.num_edges,
        "k": k,
        "comm": report,
        "metrics": metrics,
    }
    write_json(os.path.join(out_dir, "report.json"), result, config)
    return result
