"""Sentence-level LF classifier on the CLS state and per-word BIO tagger."""

from dataclasses import dataclass

import numpy as np

from . import tensor as tn
from .tensor import Tensor


@dataclass
class JointPrediction:
    sentence_label: int
    tag_sequence: list
    sentence_probs: np.ndarray
    token_probs: np.ndarray


def init_head_params(d_model, n_sentence_labels, n_tags, rng, std=0.02):
    return {
        "head.sent.w": Tensor(rng.normal(0.0, std, size=(d_model, n_sentence_labels)), requires_grad=True),
        "head.sent.b": Tensor(np.zeros(n_sentence_labels), requires_grad=True),
        "head.tag.w": Tensor(rng.normal(0.0, std, size=(d_model, n_tags)), requires_grad=True),
        "head.tag.b": Tensor(np.zeros(n_tags), requires_grad=True),
    }


def sentence_logits(H, params):
    """Logits from the CLS row; H is (..., T, d_h)."""
    return tn.as_tensor(H)[..., 0, :] @ params["head.sent.w"] + params["head.sent.b"]


def token_logits(H, params):
    """Logits for every non-CLS row; word n sits at index n of the result."""
    return tn.as_tensor(H)[..., 1:, :] @ params["head.tag.w"] + params["head.tag.b"]


def _softmax(logits):
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def classify_sentence(H, params):
    h = tn.as_tensor(H)
    return _softmax(sentence_logits(h[None], params).data[0])


def tag_tokens(H, params):
    """Per-word distributions (N x C_tag) for an unbatched H with CLS and SEP rows."""
    h = tn.as_tensor(H)
    return _softmax(token_logits(h[None], params).data[0, :-1])


def joint_loss(H, gold_sentence_label, gold_tags, params, token_reduction="sum"):
    """Sentence CE plus summed (or averaged) word CE for one sentence."""
    h = tn.as_tensor(H)
    n = len(gold_tags)
    if h.shape[0] != n + 2:
        raise ValueError(f"H has {h.shape[0]} rows, expected {n + 2}")
    targets = np.zeros((1, n + 1), dtype=np.int64)
    targets[0, :n] = gold_tags
    lengths = np.array([n])
    return batch_joint_loss(h[None], np.array([gold_sentence_label]), targets, lengths, params,
                            token_reduction=token_reduction)


def batch_joint_loss(H, sentence_labels, tag_targets, lengths, params, token_reduction="sum"):
    """Mean over the batch of per-sentence joint loss.

    ``tag_targets`` is (B, T-1), aligned with ``token_logits``; only the first
    ``lengths[b]`` entries of row b are scored (CLS, SEP and padding are not).
    """
    if token_reduction not in ("sum", "mean"):
        raise ValueError(f"unknown token_reduction {token_reduction!r}")
    B = len(lengths)
    sent = tn.cross_entropy(sentence_logits(H, params), sentence_labels)
    tok_logits = token_logits(H, params)
    positions = np.arange(tok_logits.shape[1])[None, :]
    lengths = np.asarray(lengths)
    weights = (positions < lengths[:, None]).astype(np.float64)
    if token_reduction == "mean":
        weights = weights / np.maximum(lengths, 1)[:, None]
    tok = tn.cross_entropy(tok_logits, tag_targets, weights)
    return (sent + tok) * (1.0 / B)


def predict(H, params):
    """Argmax decoding; ties resolve to the lowest class id."""
    sent = classify_sentence(H, params)
    tok = tag_tokens(H, params)
    return JointPrediction(
        sentence_label=int(np.argmax(sent)),
        tag_sequence=[int(t) for t in np.argmax(tok, axis=-1)],
        sentence_probs=sent,
        token_probs=tok,
    )
