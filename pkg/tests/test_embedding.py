import math

import numpy as np
import pytest

from fedwalk.embedding import (
    EmbeddingMatrix,
    SkipGramConfig,
    count_pairs,
    init_embeddings,
    negative_cdf,
    pair_loss_and_grads,
    read_embeddings,
    sgd_pair_step,
    train,
    write_embeddings,
)
from fedwalk.privacy import random_source
from fedwalk.walker import uniform_walks


def loss_only(v, u, un):
    return pair_loss_and_grads(v, u, un)[0]


def numeric_grad(f, x, h=1e-6):
    g = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        xp, xm = x.copy(), x.copy()
        xp[idx] += h
        xm[idx] -= h
        g[idx] = (f(xp) - f(xm)) / (2 * h)
    return g


def rel_err(a, b):
    return np.abs(a - b).max() / max(np.abs(a).max(), np.abs(b).max(), 1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_gradients_match_finite_differences(seed):
    rng = random_source(20, seed)
    v, u, un = rng.normal(size=6), rng.normal(size=6), rng.normal(size=(3, 6))
    _, gv, gu, gun = pair_loss_and_grads(v, u, un)
    assert rel_err(gv, numeric_grad(lambda x: loss_only(x, u, un), v)) <= 1e-4
    assert rel_err(gu, numeric_grad(lambda x: loss_only(v, x, un), u)) <= 1e-4
    assert rel_err(gun, numeric_grad(lambda x: loss_only(v, u, x), un)) <= 1e-4


def test_loss_at_origin():
    assert loss_only(np.zeros(4), np.zeros(4), np.zeros((5, 4))) == pytest.approx(-6 * math.log(0.5))


def test_loss_is_stable_for_large_scores():
    v = np.full(3, 100.0)
    loss, gv, _, _ = pair_loss_and_grads(v, -v, v[None, :])
    assert math.isfinite(loss) and np.all(np.isfinite(gv))
    assert loss == pytest.approx(2 * 30_000, rel=1e-9)


def test_step_increases_positive_dot():
    m = init_embeddings(5, SkipGramConfig(d=8), random_source(21))
    m.output_vectors[:] = random_source(22).normal(size=(5, 8)) * 0.1
    for _ in range(20):
        before = m.input_vectors[0] @ m.output_vectors[1]
        sgd_pair_step(m, 0, 1, [3, 4], 0.05)
        assert m.input_vectors[0] @ m.output_vectors[1] > before


def test_step_returns_loss_and_lowers_it():
    m = init_embeddings(4, SkipGramConfig(d=4), random_source(23))
    first = sgd_pair_step(m, 0, 1, [2, 2], 0.1)
    assert first == pytest.approx(-3 * math.log(0.5))
    assert sgd_pair_step(m, 0, 1, [2, 2], 0.1) < first


def test_init_shape_and_range():
    m = init_embeddings(7, SkipGramConfig(d=16), random_source(24))
    assert m.input_vectors.shape == (7, 16) and not m.output_vectors.any()
    assert np.abs(m.input_vectors).max() <= 0.5 / 16


def test_count_pairs_brute_force():
    lengths, w = [1, 2, 5, 9], 3
    brute = sum(1 for n in lengths for i in range(n) for j in range(n) if i != j and abs(i - j) <= w)
    assert count_pairs(lengths, w) == brute


def test_negative_cdf():
    cdf = negative_cdf(np.array([0, 0, 2]), 4)
    assert np.allclose(np.diff(cdf, prepend=0), [2**0.75, 0, 1, 0])


def test_training_separates_cliques(two_cliques):
    walks = uniform_walks(two_cliques, 20, 20, seed=1)
    m = train(walks, SkipGramConfig(d=16, w=3, epochs=3), random_source(25))
    x = m.input_vectors / np.linalg.norm(m.input_vectors, axis=1, keepdims=True)
    cos = x @ x.T
    a, b = list(range(5)), list(range(5, 10))
    within = (cos[np.ix_(a, a)].sum() + cos[np.ix_(b, b)].sum() - 10) / 40
    between = cos[np.ix_(a, b)].mean()
    assert within > between + 0.3


def test_training_loss_decreases(two_cliques):
    walks = uniform_walks(two_cliques, 20, 5, seed=2)
    _, losses = train(walks, SkipGramConfig(d=16, w=3, epochs=10), random_source(26), return_losses=True)
    assert len(losses) == 10 and losses[-1] < losses[0]


def test_training_deterministic(two_cliques):
    walks = uniform_walks(two_cliques, 10, 2, seed=3)
    cfg = SkipGramConfig(d=8, w=2)
    a = train(walks, cfg, random_source(27))
    b = train(walks, cfg, random_source(27))
    assert np.array_equal(a.input_vectors, b.input_vectors)


def test_training_errors():
    with pytest.raises(ValueError):
        train([], SkipGramConfig(d=4), random_source(0))
    with pytest.raises(ValueError):
        train([[0, 5]], SkipGramConfig(d=4), random_source(0), num_vertices=3)


def test_untouched_vertex_keeps_init():
    init = init_embeddings(4, SkipGramConfig(d=4), random_source(28))
    m = train([[0, 1, 0, 1]], SkipGramConfig(d=4, w=1), random_source(29), init=init)
    assert np.array_equal(m.input_vectors[3], init.input_vectors[3])


def test_embedding_round_trip(tmp_path):
    m = EmbeddingMatrix(random_source(30).normal(size=(3, 2)), np.zeros((3, 2)))
    path = tmp_path / "e.txt"
    write_embeddings(m, str(path), np.array([10, 20, 30]), "# h")
    assert path.read_text().splitlines()[1] == "3 2"
    assert np.array_equal(read_embeddings(str(path), np.array([10, 20, 30])), m.input_vectors)


@pytest.mark.parametrize("kw", [{"d": 0}, {"w": 0}, {"lr_start": 0.001, "lr_end": 0.01}])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        SkipGramConfig(**kw)
