"""Multi-label node classification: split, one-vs-rest logistic regression, F1."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SplitSpec:
    train_ratio: float
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_ratio < 1.0:
            raise ValueError(f"train ratio must lie in (0, 1), got {self.train_ratio}")


def split(labeled_vertices, spec: SplitSpec, rng=None):
    """Uniform split without replacement into ``(train, test)`` id arrays."""
    from .privacy import random_source

    verts = np.asarray(labeled_vertices, dtype=np.int64)
    if rng is None:
        rng = random_source(spec.seed, "split")
    perm = rng.permutation(verts)
    n_train = int(round(spec.train_ratio * len(verts)))
    if n_train == 0 or n_train == len(verts):
        raise ValueError(f"degenerate split: {n_train} of {len(verts)} vertices in training")
    return np.sort(perm[:n_train]), np.sort(perm[n_train:])


@dataclass
class ClassifierModel:
    weights: dict = field(default_factory=dict)
    skipped: list = field(default_factory=list)
    num_labels: int = 0

    def probabilities(self, x: np.ndarray) -> np.ndarray:
        """``len(x) x num_labels`` scores; labels without a model score 0."""
        xb = np.hstack([x, np.ones((len(x), 1))])
        out = np.zeros((len(x), self.num_labels))
        for lab, w in self.weights.items():
            out[:, lab] = _sigmoid(xb @ w)
        return out


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def logistic_loss(w, xb, y, l2):
    z = xb @ w
    return float(np.mean(np.logaddexp(0.0, z) - y * z) + 0.5 * l2 * (w[:-1] @ w[:-1]))


def fit_logistic(xb, y, l2=1e-4, max_iter=500, tol=1e-6):
    """Full-batch gradient descent; step ``1/L`` from the Lipschitz bound of the loss.

    Returns ``(w, losses)`` with the loss recorded before each step.
    """
    n = len(y)
    lip = np.linalg.norm(xb, 2) ** 2 / (4.0 * n) + l2
    step = 1.0 / lip
    w = np.zeros(xb.shape[1])
    losses = []
    reg = np.ones_like(w)
    reg[-1] = 0.0  # bias is not penalized
    for _ in range(max_iter):
        losses.append(logistic_loss(w, xb, y, l2))
        grad = xb.T @ (_sigmoid(xb @ w) - y) / n + l2 * reg * w
        if np.linalg.norm(grad) < tol:
            break
        w -= step * grad
    losses.append(logistic_loss(w, xb, y, l2))
    return w, losses


def train_classifier(embeddings, labels, train_set, l2=1e-4, max_iter=500) -> ClassifierModel:
    x = np.asarray(embeddings)[train_set]
    xb = np.hstack([x, np.ones((len(x), 1))])
    y_all = labels.indicator()[train_set]
    model = ClassifierModel(num_labels=labels.num_labels)
    for lab in range(labels.num_labels):
        y = y_all[:, lab].astype(float)
        if not y.any():
            log.warning("label %d has no positive training vertex; skipped", lab)
            model.skipped.append(lab)
            continue
        model.weights[lab], _ = fit_logistic(xb, y, l2, max_iter)
    return model


def top_k_labels(probs, k: int) -> frozenset:
    """Indices of the ``k`` largest scores, ties to the lower label id."""
    if k <= 0:
        return frozenset()
    order = np.lexsort((np.arange(len(probs)), -np.asarray(probs)))
    return frozenset(int(i) for i in order[:k])


def predict(model: ClassifierModel, embeddings, test_set, true_label_counts) -> list:
    probs = model.probabilities(np.asarray(embeddings)[test_set])
    return [top_k_labels(p, int(k)) for p, k in zip(probs, true_label_counts)]


def _counts(predictions, truth, num_labels):
    tp = np.zeros(num_labels)
    fp = np.zeros(num_labels)
    fn = np.zeros(num_labels)
    for pred, true in zip(predictions, truth):
        for lab in pred:
            if lab in true:
                tp[lab] += 1
            else:
                fp[lab] += 1
        for lab in true:
            if lab not in pred:
                fn[lab] += 1
    return tp, fp, fn


def _f1(tp, fp, fn):
    denom = 2 * tp + fp + fn
    return np.divide(2 * tp, denom, out=np.zeros_like(tp, dtype=float), where=denom > 0)


def _num_labels(predictions, truth, num_labels):
    if num_labels is not None:
        return num_labels
    seen = [lab for s in (*predictions, *truth) for lab in s]
    return max(seen) + 1 if seen else 0


def per_label_f1(predictions, truth, num_labels=None) -> np.ndarray:
    """F1 per label; 0 for a label with no positives and no predictions."""
    n = _num_labels(predictions, truth, num_labels)
    return _f1(*_counts(predictions, truth, n))


def micro_f1(predictions, truth, num_labels=None) -> float:
    n = _num_labels(predictions, truth, num_labels)
    tp, fp, fn = (x.sum() for x in _counts(predictions, truth, n))
    return float(_f1(np.array([tp]), np.array([fp]), np.array([fn]))[0])


def macro_f1(predictions, truth, num_labels=None) -> float:
    f = per_label_f1(predictions, truth, num_labels)
    return float(f.mean()) if f.size else 0.0


def evaluate(embeddings, labels, train_ratio: float, seed: int = 0) -> dict:
    """Split, fit and score; returns the metrics report as a plain dict."""
    train_set, test_set = split(labels.labeled_vertices(), SplitSpec(train_ratio, seed))
    model = train_classifier(embeddings, labels, train_set)
    truth = [labels.labels[v] for v in test_set]
    preds = predict(model, embeddings, test_set, [len(t) for t in truth])
    per_label = per_label_f1(preds, truth, labels.num_labels)
    return {
        "T_R": train_ratio,
        "micro_f1": micro_f1(preds, truth, labels.num_labels),
        "macro_f1": float(per_label.mean()) if per_label.size else 0.0,
        "per_label_f1": [float(x) for x in per_label],
        "skipped_labels": list(model.skipped),
        "seed": seed,
        "thresholding": "top-k with true label count per test vertex",
    }
