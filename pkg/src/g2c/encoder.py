"""Graph-aware Transformer encoder.

Each layer computes, per head,

    score_ij = [q_i.k_j + q_i.a_ij + a_ij.k_j] / sqrt(3d)
    out_i    = sum_j softmax_j(score_ij) * (v_j + b_ij)

where ``a_ij = W_RA[R_ij]`` and ``b_ij = W_RV[R_ij]`` are relation embeddings
looked up from the relation matrix ``R`` (shared across heads, one table per
layer). The vanilla baseline drops both relation terms and scales by sqrt(d).
Layers are post-norm: attention -> add & norm -> GELU FFN -> add & norm.
"""

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import tensor as tn
from .tensor import Tensor

PAD_ID, UNK_ID, CLS_ID, SEP_ID = 0, 1, 2, 3
NO_POS_ID, UNK_POS_ID = 0, 1


@dataclass(frozen=True)
class EncoderConfig:
    vocab_size: int
    pos_tag_count: int
    relation_dim: int
    n_layers: int = 2
    n_heads: int = 2
    head_dim: int = 16
    ffn_dim: int = 64
    max_len: int = 128
    use_pos_embeddings: bool = True
    use_graph: bool = True
    vanilla_scaling: bool = False
    dropout: float = 0.1
    layer_norm_eps: float = 1e-5
    init_std: float = 0.02

    def __post_init__(self):
        if self.relation_dim % 2 != 1:
            raise ValueError("relation_dim must be odd (2|G| + 1)")
        for name in ("vocab_size", "pos_tag_count", "n_heads", "head_dim", "ffn_dim", "max_len"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.n_layers < 0:
            raise ValueError("n_layers must be non-negative")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")

    @property
    def d_model(self):
        return self.n_heads * self.head_dim

    @property
    def score_scale(self):
        return 1.0 / math.sqrt(self.head_dim if self.vanilla_scaling else 3 * self.head_dim)

    def to_dict(self):
        return asdict(self)


def init_encoder_params(config, rng):
    """Normal(0, init_std) weights, zero biases, unit layer-norm gains."""
    std, dh = config.init_std, config.d_model

    def normal(*shape):
        return Tensor(rng.normal(0.0, std, size=shape), requires_grad=True)

    def zeros(*shape):
        return Tensor(np.zeros(shape), requires_grad=True)

    def ones(*shape):
        return Tensor(np.ones(shape), requires_grad=True)

    params = {
        "emb.token": normal(config.vocab_size, dh),
        "emb.position": normal(config.max_len, dh),
    }
    if config.use_pos_embeddings:
        params["emb.pos_tag"] = normal(config.pos_tag_count, dh)
    for n in range(config.n_layers):
        p = f"layer{n}."
        params[p + "attn.wq"] = normal(dh, dh)
        params[p + "attn.wk"] = normal(dh, dh)
        params[p + "attn.wv"] = normal(dh, dh)
        if config.use_graph:
            params[p + "attn.rel_a"] = normal(config.relation_dim, config.head_dim)
            params[p + "attn.rel_v"] = normal(config.relation_dim, config.head_dim)
        params[p + "attn.wo"] = normal(dh, dh)
        params[p + "attn.bo"] = zeros(dh)
        params[p + "ln1.gamma"] = ones(dh)
        params[p + "ln1.beta"] = zeros(dh)
        params[p + "ffn.w1"] = normal(dh, config.ffn_dim)
        params[p + "ffn.b1"] = zeros(config.ffn_dim)
        params[p + "ffn.w2"] = normal(config.ffn_dim, dh)
        params[p + "ffn.b2"] = zeros(dh)
        params[p + "ln2.gamma"] = ones(dh)
        params[p + "ln2.beta"] = zeros(dh)
    return params


def _embed(token_ids, pos_ids, params, config):
    token_ids = np.asarray(token_ids)
    T = token_ids.shape[-1]
    if T > config.max_len:
        raise ValueError(f"sequence of length {T} exceeds max_len {config.max_len}")
    x = tn.embedding(params["emb.token"], token_ids)
    x = x + params["emb.position"][:T]
    if config.use_pos_embeddings:
        x = x + tn.embedding(params["emb.pos_tag"], pos_ids)
    return x


def with_specials(tokens, pos_tags):
    """Wrap word ids with CLS/SEP and the no-PoS tag at both ends."""
    return [CLS_ID, *tokens, SEP_ID], [NO_POS_ID, *pos_tags, NO_POS_ID]


def embed_inputs(tokens, pos_tags, params, config):
    """Input embeddings X (T x d_h) for one sentence of word and PoS ids."""
    if len(tokens) != len(pos_tags):
        raise ValueError("tokens and pos_tags differ in length")
    if len(tokens) > config.max_len - 2:
        raise ValueError(f"sentence of {len(tokens)} words exceeds max_len - 2")
    ids, pos = with_specials(tokens, pos_tags)
    return _embed(np.asarray(ids)[None], np.asarray(pos)[None], params, config)[0]


def _split_heads(x, config):
    B, T, _ = x.shape
    return x.reshape(B, T, config.n_heads, config.head_dim).transpose(0, 2, 1, 3)


def _scores(z, relations, params, config, layer):
    """Pre-softmax scores (B, H, T, T) plus the per-head value and relation terms."""
    p = f"layer{layer}.attn."
    q = _split_heads(z @ params[p + "wq"], config)
    k = _split_heads(z @ params[p + "wk"], config)
    v = _split_heads(z @ params[p + "wv"], config)
    s = q @ k.transpose(0, 1, 3, 2)
    rel_v = None
    if config.use_graph:
        relations = np.asarray(relations)
        if relations.size and relations.max() >= config.relation_dim:
            raise IndexError("relation index exceeds relation_dim")
        rel_a = tn.embedding(params[p + "rel_a"], relations)
        s = s + tn.einsum("bhid,bijd->bhij", q, rel_a) + tn.einsum("bijd,bhjd->bhij", rel_a, k)
        rel_v = tn.embedding(params[p + "rel_v"], relations)
    return s * config.score_scale, v, rel_v


def _attend(scores, v, rel_v, mask):
    probs = tn.softmax_lastdim(scores, None if mask is None else mask[:, None, None, :])
    out = probs @ v
    if rel_v is not None:
        out = out + tn.einsum("bhij,bijd->bhid", probs, rel_v)
    return out


def _layer(z, relations, mask, params, config, layer, training, rng):
    p = f"layer{layer}."
    B, T, dh = z.shape
    scores, v, rel_v = _scores(z, relations, params, config, layer)
    heads = _attend(scores, v, rel_v, mask)
    attn = heads.transpose(0, 2, 1, 3).reshape(B, T, dh) @ params[p + "attn.wo"] + params[p + "attn.bo"]
    attn = tn.dropout(attn, config.dropout, rng, training)
    z = tn.layer_norm(z + attn, params[p + "ln1.gamma"], params[p + "ln1.beta"], config.layer_norm_eps)
    ff = tn.gelu(z @ params[p + "ffn.w1"] + params[p + "ffn.b1"]) @ params[p + "ffn.w2"] + params[p + "ffn.b2"]
    ff = tn.dropout(ff, config.dropout, rng, training)
    return tn.layer_norm(z + ff, params[p + "ln2.gamma"], params[p + "ln2.beta"], config.layer_norm_eps)


def encode(token_ids, pos_ids, relations, mask, params, config, training=False, rng=None):
    """Batched encoder: ids (B, T), relations (B, T, T), key mask (B, T) -> H (B, T, d_h).

    ``mask`` may be None when no position is padding.
    """
    if training and config.dropout > 0 and rng is None:
        raise ValueError("training with dropout needs an rng")
    z = _embed(token_ids, pos_ids, params, config)
    for n in range(config.n_layers):
        z = _layer(z, relations, mask, params, config, n, training, rng)
    return z


def encoder_forward(tokens, pos_tags, R, params, config):
    """Inference-mode H (T x d_h) for one sentence; ``R`` is its T x T relation matrix."""
    ids, pos = with_specials(tokens, pos_tags)
    if len(ids) > config.max_len:
        raise ValueError(f"sentence of {len(tokens)} words exceeds max_len - 2")
    R = np.asarray(R)
    if R.shape != (len(ids), len(ids)):
        raise ValueError(f"relation matrix shape {R.shape} does not match T={len(ids)}")
    return encode(np.asarray(ids)[None], np.asarray(pos)[None], R[None], None, params, config)[0]


def attention_scores(Z, R, params, config, layer=0, head=0):
    """Pre-softmax score matrix (T x T) of one head for hidden states Z (T x d_h)."""
    z = tn.as_tensor(Z)
    scores, _, _ = _scores(z.reshape(1, *z.shape), np.asarray(R)[None], params, config, layer)
    return scores[0, head]


def attention_values(alpha, Z, R, params, config, layer=0, head=0):
    """Per-head attention output (T x d) from scores ``alpha`` (T x T)."""
    p = f"layer{layer}.attn."
    z = tn.as_tensor(Z)
    lo, hi = head * config.head_dim, (head + 1) * config.head_dim
    v = (z @ params[p + "wv"])[:, lo:hi]
    probs = tn.softmax_lastdim(alpha)
    out = probs @ v
    if config.use_graph:
        rel_v = tn.embedding(params[p + "rel_v"], np.asarray(R))
        out = out + tn.einsum("ij,ijd->id", probs, rel_v)
    return out
