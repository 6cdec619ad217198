"""SkipGram with negative sampling, trained on walk corpora."""

from __future__ import annotations

from dataclasses import dataclass

import numba as nb
import numpy as np


@dataclass(frozen=True)
class SkipGramConfig:
    d: int = 128
    w: int = 10
    negatives: int = 5
    lr_start: float = 0.025
    lr_end: float = 0.0001
    epochs: int = 1

    def __post_init__(self):
        if self.d < 1 or self.w < 1 or self.negatives < 1 or self.epochs < 1:
            raise ValueError("d, w, negatives and epochs must all be at least 1")
        if not self.lr_start >= self.lr_end > 0:
            raise ValueError("need lr_start >= lr_end > 0")


@dataclass
class EmbeddingMatrix:
    input_vectors: np.ndarray
    output_vectors: np.ndarray

    @property
    def num_vertices(self) -> int:
        return self.input_vectors.shape[0]

    def copy(self) -> "EmbeddingMatrix":
        return EmbeddingMatrix(self.input_vectors.copy(), self.output_vectors.copy())


def init_embeddings(num_vertices: int, config: SkipGramConfig, rng) -> EmbeddingMatrix:
    d = config.d
    w_in = (rng.random((num_vertices, d)) - 0.5) / d
    return EmbeddingMatrix(w_in, np.zeros((num_vertices, d)))


def _log_sigmoid(x):
    return -np.logaddexp(0.0, -x)


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def pair_loss_and_grads(center_vec, context_vec, negative_vecs):
    """Negative-sampling loss for one (center, context) pair and its gradients.

    ``loss = -log s(u_ctx . v) - sum_neg log s(-u_neg . v)``. Returns
    ``(loss, d/dv, d/du_ctx, d/du_neg)`` with ``d/du_neg`` shaped like
    ``negative_vecs``.
    """
    v = np.asarray(center_vec, dtype=float)
    u = np.asarray(context_vec, dtype=float)
    un = np.atleast_2d(np.asarray(negative_vecs, dtype=float))
    s_pos = u @ v
    s_neg = un @ v
    loss = -_log_sigmoid(s_pos) - _log_sigmoid(-s_neg).sum()
    g_pos = _sigmoid(s_pos) - 1.0
    g_neg = _sigmoid(s_neg)
    grad_v = g_pos * u + g_neg @ un
    grad_u = g_pos * v
    grad_un = g_neg[:, None] * v[None, :]
    return float(loss), grad_v, grad_u, grad_un


def sgd_pair_step(matrix: EmbeddingMatrix, center: int, context: int, negatives, lr: float) -> float:
    """One gradient step on a (center, context) pair; returns the pre-update loss."""
    if lr <= 0:
        raise ValueError("learning rate must be positive")
    negatives = np.asarray(negatives, dtype=np.int64)
    w_in, w_out = matrix.input_vectors, matrix.output_vectors
    loss, gv, gu, gun = pair_loss_and_grads(w_in[center], w_out[context], w_out[negatives])
    w_out[context] -= lr * gu
    # repeated negatives accumulate
    np.subtract.at(w_out, negatives, lr * gun)
    w_in[center] -= lr * gv
    return loss


@nb.njit(cache=True)
def _sig(x):
    if x > 30.0:
        return 1.0
    if x < -30.0:
        return 0.0
    return 1.0 / (1.0 + np.exp(-x))


@nb.njit(cache=True)
def _softplus(x):
    # log(1 + exp(x)) without overflow
    if x > 30.0:
        return x
    return np.log1p(np.exp(x))


@nb.njit(cache=True)
def _train(flat, offsets, w_in, w_out, cdf, window, negatives, lr_start, lr_end, epochs, total_pairs, seed):
    np.random.seed(seed)
    d = w_in.shape[1]
    grad_v = np.empty(d)
    neg = np.empty(negatives, dtype=np.int64)
    epoch_loss = np.zeros(epochs)
    step = 0
    denom = max(total_pairs - 1, 1)
    for ep in range(epochs):
        for wi in range(offsets.shape[0] - 1):
            lo, hi = offsets[wi], offsets[wi + 1]
            for i in range(lo, hi):
                c = flat[i]
                for j in range(max(lo, i - window), min(hi, i + window + 1)):
                    if j == i:
                        continue
                    ctx = flat[j]
                    lr = lr_start + (lr_end - lr_start) * step / denom
                    step += 1
                    for t in range(negatives):
                        r = np.random.random() * cdf[-1]
                        neg[t] = np.searchsorted(cdf, r, side="right")
                        if neg[t] >= cdf.shape[0]:
                            neg[t] = cdf.shape[0] - 1
                    for a in range(d):
                        grad_v[a] = 0.0
                    s = 0.0
                    for a in range(d):
                        s += w_out[ctx, a] * w_in[c, a]
                    epoch_loss[ep] += _softplus(-s)
                    g = _sig(s) - 1.0
                    for a in range(d):
                        grad_v[a] += g * w_out[ctx, a]
                        w_out[ctx, a] -= lr * g * w_in[c, a]
                    for t in range(negatives):
                        nv = neg[t]
                        s = 0.0
                        for a in range(d):
                            s += w_out[nv, a] * w_in[c, a]
                        epoch_loss[ep] += _softplus(s)
                        g = _sig(s)
                        for a in range(d):
                            grad_v[a] += g * w_out[nv, a]
                            w_out[nv, a] -= lr * g * w_in[c, a]
                    for a in range(d):
                        w_in[c, a] -= lr * grad_v[a]
    return epoch_loss


def _flatten(corpus):
    seqs = [np.asarray(getattr(w, "encoded", w), dtype=np.int64) for w in corpus]
    offsets = np.zeros(len(seqs) + 1, dtype=np.int64)
    offsets[1:] = np.cumsum([len(s) for s in seqs])
    flat = np.concatenate(seqs) if seqs else np.zeros(0, np.int64)
    return flat, offsets


def count_pairs(lengths, window: int) -> int:
    total = 0
    for n in lengths:
        i = np.arange(n)
        total += int((np.minimum(i + window, n - 1) - np.maximum(i - window, 0)).sum())
    return total


def negative_cdf(flat: np.ndarray, num_vertices: int) -> np.ndarray:
    """Cumulative unigram^(3/4) weights over corpus vertices."""
    counts = np.bincount(flat, minlength=num_vertices).astype(float)
    return np.cumsum(counts**0.75)


def train(corpus, config: SkipGramConfig, rng, num_vertices: int | None = None, init=None, return_losses=False):
    """Fit embeddings to a walk corpus (walks or plain id sequences).

    Within one walk every position within ``w`` of the center is a context;
    the learning rate falls linearly from ``lr_start`` to ``lr_end`` over all
    pair updates of all epochs. Deterministic for a fixed ``rng`` state.
    """
    flat, offsets = _flatten(corpus)
    if flat.size == 0:
        raise ValueError("cannot train on an empty corpus")
    if num_vertices is None:
        num_vertices = int(flat.max()) + 1
    if flat.max() >= num_vertices or flat.min() < 0:
        raise ValueError("corpus contains vertex ids outside 0..num_vertices-1")
    matrix = init.copy() if init is not None else init_embeddings(num_vertices, config, rng)
    cdf = negative_cdf(flat, num_vertices)
    total = count_pairs(np.diff(offsets), config.w) * config.epochs
    seed = int(rng.integers(0, 2**31 - 1))
    losses = _train(
        flat, offsets, matrix.input_vectors, matrix.output_vectors, cdf,
        config.w, config.negatives, config.lr_start, config.lr_end, config.epochs, total, seed,
    )
    if not np.all(np.isfinite(matrix.input_vectors)):
        raise FloatingPointError("non-finite embedding entries after training")
    return (matrix, losses) if return_losses else matrix


def write_embeddings(matrix: EmbeddingMatrix, path, original_ids=None, header: str | None = None):
    """word2vec text layout: ``|V| d`` then ``vertex_id f1 ... fd`` per row."""
    n, d = matrix.input_vectors.shape
    ids = np.arange(n) if original_ids is None else original_ids
    with open(path, "w") as fh:
        if header:
            fh.write(header.rstrip("\n") + "\n")
        fh.write(f"{n} {d}\n")
        for i in range(n):
            fh.write(f"{ids[i]} " + " ".join(repr(float(x)) for x in matrix.input_vectors[i]) + "\n")


def read_embeddings(path, original_ids=None) -> np.ndarray:
    """Inverse of :func:`write_embeddings`; rows are placed by compact index."""
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#") and ln.strip()]
    n, d = (int(x) for x in lines[0].split())
    index = None if original_ids is None else {int(o): i for i, o in enumerate(original_ids)}
    out = np.zeros((n, d))
    for ln in lines[1:]:
        parts = ln.split()
        vid = int(parts[0])
        out[vid if index is None else index[vid]] = [float(x) for x in parts[1:]]
    return out
