"""Finite-difference verification of the full model on a random small instance."""

import numpy as np

from . import encoder as enc
from . import heads
from .encoder import EncoderConfig
from .graph import DependencyGraph, LabelVocabulary, build_relation_matrix, relation_onehot_dim
from .synthetic import random_tree
from .tensor import finite_diff_check

GRADCHECK_DEFAULTS = dict(n_layers=1, n_heads=2, head_dim=4, ffn_dim=16, n_words=4)


def random_instance(seed, n_layers=1, n_heads=2, head_dim=4, ffn_dim=16, n_words=4,
                    n_sentence_labels=3, n_dep_labels=2, use_graph=True, use_pos=True,
                    init_std=0.5, token_reduction="sum"):
    """A random model plus one random sentence; returns ``(loss_fn, params)``.

    Weights are drawn with ``init_std`` (default 0.5, larger than training
    init) so that no gradient component is vanishingly small relative to
    finite-difference round-off.
    """
    rng = np.random.default_rng(seed)
    deps = LabelVocabulary(tuple(f"rel{i}" for i in range(n_dep_labels)))
    config = EncoderConfig(
        vocab_size=8, pos_tag_count=5, relation_dim=relation_onehot_dim(deps),
        n_layers=n_layers, n_heads=n_heads, head_dim=head_dim, ffn_dim=ffn_dim,
        max_len=n_words + 2, use_pos_embeddings=use_pos, use_graph=use_graph,
        dropout=0.0, init_std=init_std,
    )
    n_tags = 4 * n_sentence_labels + 1
    params = enc.init_encoder_params(config, rng)
    params.update(heads.init_head_params(config.d_model, n_sentence_labels, n_tags, rng, std=init_std))
    for name, p in params.items():
        if name.endswith((".b1", ".b2", ".bo", ".beta")) or name.endswith(".b"):
            p.data[...] = rng.normal(0.0, 0.1, size=p.shape)
        elif name.endswith(".gamma"):
            p.data[...] = 1.0 + rng.normal(0.0, 0.1, size=p.shape)
    words = [int(t) for t in rng.integers(4, config.vocab_size, size=n_words)]
    pos = [int(t) for t in rng.integers(2, config.pos_tag_count, size=n_words)]
    head_of, _ = random_tree(n_words, rng)
    labels = [deps.labels[int(k)] for k in rng.integers(0, n_dep_labels, size=n_words)]
    R = build_relation_matrix(DependencyGraph.from_heads(head_of, labels), deps)
    gold_label = int(rng.integers(n_sentence_labels))
    gold_tags = [int(t) for t in rng.integers(0, n_tags, size=n_words)]

    def loss_fn():
        H = enc.encoder_forward(words, pos, R, params, config)
        return heads.joint_loss(H, gold_label, gold_tags, params, token_reduction=token_reduction)

    ordered = [params[k] for k in sorted(params)]
    return loss_fn, ordered, config


def run_gradcheck(seed=7, h=1e-5, **overrides):
    """Maximum relative error over all parameters of a random instance."""
    options = {**GRADCHECK_DEFAULTS, **overrides}
    loss_fn, params, _ = random_instance(seed, **options)
    return finite_diff_check(loss_fn, params, h=h)
