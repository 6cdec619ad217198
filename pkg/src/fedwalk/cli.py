"""Command-line driver: ``fedwalk {hct,walk,embed,eval,pipeline,theory}``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal invariant
violation. Settings come from a flat ``key = value`` file (``--config`` or
``$FEDWALK_CONFIG``) and are overridden by flags.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys

import numpy as np

from .embedding import read_embeddings, train, write_embeddings
from .evaluation import evaluate
from .federation import (
    HctOutputs,
    ProtocolError,
    RunConfig,
    StageError,
    comm_report,
    provenance_header,
    run_hct_protocol,
    run_pipeline,
    run_walk_protocol,
    write_json,
)
from .graph import GraphFormatError, load_edge_list, load_labels, write_id_map
from .hct import BinAssignment, Hct, read_dissimilarity, write_dissimilarity
from .privacy import random_source
from .walker import expected_messages, read_corpus, write_corpus

CONFIG_ENV = "FEDWALK_CONFIG"

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def parse_config_file(path) -> dict:
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise GraphFormatError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = value
    return out


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}


def _coerce(key, value):
    if key not in _FIELDS:
        raise UsageError(f"unknown config key {key!r}")
    if key == "train_ratios":
        if isinstance(value, str):
            value = [v for v in value.replace(",", " ").split() if v]
        return tuple(float(v) for v in value)
    if key == "k":
        return None if value in (None, "", "auto", "None") else int(value)
    if key == "baseline":
        return value if isinstance(value, bool) else str(value).lower() in ("1", "true", "yes")
    if key == "predictor_records":
        return str(value)
    default = _FIELDS[key].default
    return type(default)(value)


def resolve_config(args) -> RunConfig:
    values = {}
    path = getattr(args, "config", None) or os.environ.get(CONFIG_ENV)
    if path:
        if not os.path.exists(path):
            raise FileNotFoundError(path)
        values.update(parse_config_file(path))
    for key in _FIELDS:
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    try:
        return RunConfig(**{k: _coerce(k, v) for k, v in values.items()})
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad configuration: {exc}") from None


def _add_run_flags(p):
    p.add_argument("--config", help=f"flat key = value file (default ${CONFIG_ENV})")
    p.add_argument("--seed", type=int)
    p.add_argument("--k", type=int, help="bin count (default floor(ln |V|))")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--l", type=int, help="walk length")
    p.add_argument("--p", type=float, help="predictor trigger probability")
    p.add_argument("--gamma", type=int, help="walks per vertex")
    p.add_argument("--d", type=int, help="embedding dimension")
    p.add_argument("--w", type=int, help="window radius")
    p.add_argument("--negatives", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--train-ratios", dest="train_ratios", nargs="+", type=float)
    p.add_argument("--predictor-records", dest="predictor_records", choices=("skipped-hop", "predicted-hop"))
    p.add_argument("--threads", type=int)


def build_parser():
    parser = _Parser(prog="fedwalk", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("theory", help="closed-form expected messages and savings")
    p.add_argument("--l", type=int, nargs="+", default=[40])
    p.add_argument("--p", type=float, nargs="+", default=[0.0, 0.1, 0.2, 0.3, 0.4])
    p.add_argument("--num-vertices", type=int, default=1)
    p.add_argument("--gamma", type=int, default=1)

    p = sub.add_parser("hct", help="run the HCT construction protocol")
    p.add_argument("--edges", required=True)
    p.add_argument("--out", required=True)
    _add_run_flags(p)

    p = sub.add_parser("walk", help="generate the encoded walk corpus")
    p.add_argument("--edges", required=True)
    p.add_argument("--hct-dir", required=True)
    p.add_argument("--out", required=True)
    _add_run_flags(p)

    p = sub.add_parser("embed", help="train SkipGram on a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--edges", required=True, help="edge list, for vertex count and id map")
    p.add_argument("--out", required=True)
    _add_run_flags(p)

    p = sub.add_parser("eval", help="multi-label classification metrics")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--edges", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--out", required=True)
    _add_run_flags(p)

    p = sub.add_parser("pipeline", help="hct -> walk -> embed -> eval")
    p.add_argument("--edges", required=True)
    p.add_argument("--labels")
    p.add_argument("--out", default="fedwalk_out")
    p.add_argument("--baseline", action="store_const", const=True, help="also score a DeepWalk baseline")
    p.add_argument("--no-message-log", action="store_true")
    _add_run_flags(p)
    return parser


def theory_table(ls, ps, num_vertices=1, gamma=1) -> list[dict]:
    rows = []
    for l in ls:
        for p in ps:
            e = expected_messages(l, p)
            rows.append({
                "l": l, "p": p, "expected_messages": e,
                "savings_per_walk": (l - 1) - e,
                "total_savings": num_vertices * gamma * ((l - 1) - e),
            })
    return rows


def format_theory(rows) -> str:
    lines = [f"{'l':>4} {'p':>5} {'E_l':>10} {'saved/walk':>11} {'|V|*gamma*saved':>16}"]
    for r in rows:
        lines.append(
            f"{r['l']:>4d} {r['p']:>5.2f} {r['expected_messages']:>10.4f} "
            f"{r['savings_per_walk']:>11.4f} {r['total_savings']:>16.2f}"
        )
    return "\n".join(lines)


def _write_vectors(path, vectors, header):
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for v, row in enumerate(vectors):
            fh.write(f"{v} " + " ".join(repr(float(x)) for x in row) + "\n")


def _read_rows(path, dtype=float):
    rows = []
    with open(path) as fh:
        for line in fh:
            if line.startswith("#") or not line.strip():
                continue
            rows.append([dtype(x) for x in line.split()[1:]])
    return np.array(rows, dtype=dtype)


def _cmd_hct(args, config):
    graph = load_edge_list(args.edges)
    os.makedirs(args.out, exist_ok=True)
    header = provenance_header(config)
    out = run_hct_protocol(graph, config)
    write_id_map(graph, os.path.join(args.out, "id_map.txt"), header)
    write_dissimilarity(os.path.join(args.out, "dissimilarity.bin"), out.dissim, out.bins.k, config.epsilon)
    out.tree.write(os.path.join(args.out, "hct.txt"), header)
    _write_vectors(os.path.join(args.out, "vectors.txt"), out.vectors, header)
    with open(os.path.join(args.out, "bins.txt"), "w") as fh:
        fh.write(header + "\n")
        for v, b in enumerate(out.bins.bin_of):
            fh.write(f"{v} {b}\n")
    print(f"hct: {graph.num_vertices} vertices, k={out.bins.k}, {len(out.messages)} messages")


def _cmd_walk(args, config):
    graph = load_edge_list(args.edges)
    d = args.hct_dir
    dissim, k, _ = read_dissimilarity(os.path.join(d, "dissimilarity.bin"))
    tree = Hct.read(os.path.join(d, "hct.txt"))
    vectors = _read_rows(os.path.join(d, "vectors.txt"))
    bin_of = _read_rows(os.path.join(d, "bins.txt"), int)[:, 0]
    hct = HctOutputs(tree, dissim, vectors, BinAssignment(k, bin_of.astype(np.int64)))
    walks, stats, _ = run_walk_protocol(graph, hct, config)
    os.makedirs(args.out, exist_ok=True)
    write_corpus(walks, os.path.join(args.out, "corpus.txt"), provenance_header(config))
    write_json(os.path.join(args.out, "comm_report.json"), comm_report(stats, config, len(walks), graph.num_vertices), config)
    print(f"walk: {len(walks)} walks, {stats.device_to_device} device-to-device messages")


def _cmd_embed(args, config):
    graph = load_edge_list(args.edges)
    corpus = read_corpus(args.corpus)
    emb = train(corpus, config.skipgram_config(), random_source(config.seed, "skipgram"), graph.num_vertices)
    os.makedirs(os.path.dirname(os.path.abspath(args.out)), exist_ok=True)
    write_embeddings(emb, args.out, graph.original_ids, provenance_header(config))
    print(f"embed: wrote {emb.num_vertices}x{emb.input_vectors.shape[1]} to {args.out}")


def _cmd_eval(args, config):
    graph = load_edge_list(args.edges)
    labels = load_labels(args.labels, graph)
    emb = read_embeddings(args.embeddings, graph.original_ids)
    metrics = [evaluate(emb, labels, tr, config.seed) for tr in config.train_ratios]
    write_json(args.out, {"metrics": metrics, "config": config.as_dict()}, config)
    for m in metrics:
        print(f"T_R={m['T_R']:.2f} micro_f1={m['micro_f1']:.4f} macro_f1={m['macro_f1']:.4f}")


def _cmd_pipeline(args, config):
    result = run_pipeline(args.edges, args.labels, config, args.out, write_message_log=not args.no_message_log)
    comm = result["comm"]["per_walk_device_to_device"]
    print(
        f"pipeline: per-walk device-to-device {comm['observed']:.3f} "
        f"(closed form {comm['expected']:.3f}, exact {comm['expected_exact']:.3f})"
    )
    for m in result["metrics"]:
        print(f"T_R={m['T_R']:.2f} micro_f1={m['micro_f1']:.4f} macro_f1={m['macro_f1']:.4f}")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(parser.format_help())
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
        if args.command == "theory":
            print(format_theory(theory_table(args.l, args.p, args.num_vertices, args.gamma)))
            return EXIT_OK
        config = resolve_config(args)
        {"hct": _cmd_hct, "walk": _cmd_walk, "embed": _cmd_embed, "eval": _cmd_eval, "pipeline": _cmd_pipeline}[
            args.command
        ](args, config)
        return EXIT_OK
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_USAGE
    except StageError as exc:
        print(f"fedwalk: {exc}", file=sys.stderr)
        return _code_for(exc.cause)
    except Exception as exc:
        print(f"fedwalk: {type(exc).__name__}: {exc}", file=sys.stderr)
        return _code_for(exc)


def _code_for(exc) -> int:
    if isinstance(exc, (ProtocolError, AssertionError, FloatingPointError)):
        return EXIT_INTERNAL
    if isinstance(exc, (FileNotFoundError, GraphFormatError, ValueError, KeyError, OSError, json.JSONDecodeError)):
        return EXIT_DATA
    return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
