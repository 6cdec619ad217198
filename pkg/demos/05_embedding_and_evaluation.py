"""
Embeddings and node classification
==================================

The server trains SkipGram on the uploaded encoded walks, then a one-vs-rest
logistic classifier scores micro and macro F1. A centralized DeepWalk run
on the true walks is the reference.
"""

from fedwalk.evaluation import evaluate
from fedwalk.federation import RunConfig, deepwalk_embeddings, fedwalk_embeddings
from fedwalk.graph import stochastic_block_model
from fedwalk.privacy import random_source

g, labels = stochastic_block_model([50] * 4, 0.3, 0.02, random_source(3))
cfg = RunConfig(epsilon=4.0, p=0.0, gamma=10, d=64, w=5, seed=3)

fed, walks, stats, _ = fedwalk_embeddings(g, cfg)
base = deepwalk_embeddings(g, cfg)
for tr in (0.1, 0.5):
    f = evaluate(fed.input_vectors, labels, tr, cfg.seed)
    d = evaluate(base.input_vectors, labels, tr, cfg.seed)
    print(f"T_R={tr}: fedwalk micro {f['micro_f1']:.3f} macro {f['macro_f1']:.3f} | "
          f"deepwalk micro {d['micro_f1']:.3f} macro {d['macro_f1']:.3f}")
