"""Vocabularies, padded batches and the joint encoder + heads model."""

from dataclasses import dataclass

import numpy as np

from . import encoder as enc
from . import heads
from .bio import spans_from_tags, tag_inventory, tags_from_strings, tags_to_strings
from .config import variant_flags
from .encoder import NO_POS_ID, PAD_ID, UNK_ID, UNK_POS_ID, EncoderConfig
from .graph import LabelVocabulary, build_relation_matrix, relation_onehot_dim
from .tensor import Tensor, no_grad

TOKEN_SPECIALS = ("[PAD]", "[UNK]", "[CLS]", "[SEP]")
POS_SPECIALS = ("[NOPOS]", "[UNK]")


class Vocabulary:
    """String <-> id map with reserved leading entries."""

    def __init__(self, items, specials, unk_id):
        self.itos = list(specials) + [s for s in items if s not in specials]
        self.stoi = {s: i for i, s in enumerate(self.itos)}
        self.n_specials = len(specials)
        self.unk_id = unk_id

    @classmethod
    def build(cls, sequences, specials, unk_id):
        return cls(sorted({s for seq in sequences for s in seq}), specials, unk_id)

    def __len__(self):
        return len(self.itos)

    def encode(self, seq):
        return [self.stoi.get(s, self.unk_id) for s in seq]

    def items(self):
        return self.itos[self.n_specials:]


@dataclass
class Batch:
    token_ids: np.ndarray
    pos_ids: np.ndarray
    relations: np.ndarray
    mask: np.ndarray
    lengths: np.ndarray
    sentence_labels: np.ndarray | None = None
    tag_targets: np.ndarray | None = None


@dataclass
class SentencePrediction:
    sentence_label: str
    tags: list
    spans: list


class G2CModel:
    """Encoder and joint heads plus everything needed to map text to ids."""

    def __init__(self, config, tokens, pos_tags, dep_labels, scheme, params):
        self.config = config
        self.tokens = tokens
        self.pos_tags = pos_tags
        self.dep_labels = dep_labels
        self.scheme = scheme
        self.params = params

    @classmethod
    def create(cls, run_config, train, lf_labels, dep_labels=None, rng=None):
        use_graph, use_pos, vanilla = variant_flags(run_config.model_variant)
        tokens = Vocabulary.build((s.tokens for s in train), TOKEN_SPECIALS, UNK_ID)
        pos_tags = Vocabulary.build((s.upos for s in train), POS_SPECIALS, UNK_POS_ID)
        if dep_labels is None:
            dep_labels = sorted({l for s in train for _, _, l in s.deps})
        deps = LabelVocabulary(tuple(dep_labels))
        scheme = tag_inventory(lf_labels)
        config = EncoderConfig(
            vocab_size=len(tokens),
            pos_tag_count=len(pos_tags),
            relation_dim=relation_onehot_dim(deps),
            n_layers=run_config.n_layers,
            n_heads=run_config.n_heads,
            head_dim=run_config.head_dim,
            ffn_dim=run_config.ffn_dim,
            max_len=run_config.max_len,
            use_pos_embeddings=use_pos,
            use_graph=use_graph,
            vanilla_scaling=vanilla,
            dropout=run_config.dropout,
            init_std=run_config.init_std,
        )
        rng = np.random.default_rng(run_config.seed) if rng is None else rng
        params = enc.init_encoder_params(config, rng)
        params.update(heads.init_head_params(config.d_model, len(scheme.lf_labels), len(scheme), rng,
                                             std=run_config.init_std))
        return cls(config, tokens, pos_tags, deps, scheme, params)

    @property
    def lf_labels(self):
        return list(self.scheme.lf_labels)

    def parameters(self):
        return [self.params[k] for k in sorted(self.params)]

    def with_params(self, arrays):
        """Copy of this model using the given name -> array parameters."""
        params = {k: Tensor(np.asarray(arrays[k], dtype=np.float64), requires_grad=True) for k in self.params}
        return G2CModel(self.config, self.tokens, self.pos_tags, self.dep_labels, self.scheme, params)

    def encode_sentence(self, sentence):
        """Id arrays for one sentence (without padding)."""
        n = len(sentence.tokens)
        if n + 2 > self.config.max_len:
            raise ValueError(f"sentence of {n} words exceeds max_len {self.config.max_len} - 2")
        ids, pos = enc.with_specials(self.tokens.encode(sentence.tokens), self.pos_tags.encode(sentence.upos))
        R = build_relation_matrix(sentence.graph, self.dep_labels, n + 2, strict=False)
        label = tags = None
        if sentence.sentence_label is not None:
            label = self.scheme.lf_labels.index(sentence.sentence_label)
        if sentence.tags is not None:
            tags = tags_from_strings(sentence.tags, self.scheme)
        return ids, pos, R, label, tags

    def collate(self, encoded):
        """Pad a list of :meth:`encode_sentence` outputs into a :class:`Batch`."""
        B = len(encoded)
        T = max(len(e[0]) for e in encoded)
        token_ids = np.full((B, T), PAD_ID, dtype=np.int64)
        pos_ids = np.full((B, T), NO_POS_ID, dtype=np.int64)
        relations = np.zeros((B, T, T), dtype=np.int64)
        mask = np.zeros((B, T), dtype=bool)
        lengths = np.zeros(B, dtype=np.int64)
        has_gold = all(e[3] is not None and e[4] is not None for e in encoded)
        labels = np.zeros(B, dtype=np.int64) if has_gold else None
        targets = np.zeros((B, T - 1), dtype=np.int64) if has_gold else None
        for b, (ids, pos, R, label, tags) in enumerate(encoded):
            t = len(ids)
            token_ids[b, :t] = ids
            pos_ids[b, :t] = pos
            relations[b, :t, :t] = R
            mask[b, :t] = True
            lengths[b] = t - 2
            if has_gold:
                labels[b] = label
                targets[b, :t - 2] = tags
        return Batch(token_ids, pos_ids, relations, mask, lengths, labels, targets)

    def forward(self, batch, training=False, rng=None):
        return enc.encode(batch.token_ids, batch.pos_ids, batch.relations, batch.mask,
                          self.params, self.config, training=training, rng=rng)

    def loss(self, batch, token_reduction="sum", training=False, rng=None):
        H = self.forward(batch, training=training, rng=rng)
        return heads.batch_joint_loss(H, batch.sentence_labels, batch.tag_targets, batch.lengths,
                                      self.params, token_reduction=token_reduction)

    def hidden_states(self, sentences, batch_size=32):
        out = []
        for start in range(0, len(sentences), batch_size):
            chunk = sentences[start:start + batch_size]
            batch = self.collate([self.encode_sentence(s) for s in chunk])
            with no_grad():
                H = self.forward(batch).data
            out.extend(H[b, :batch.lengths[b] + 2] for b in range(len(chunk)))
        return out

    def predict(self, sentences, batch_size=32):
        out = []
        for start in range(0, len(sentences), batch_size):
            chunk = sentences[start:start + batch_size]
            batch = self.collate([self.encode_sentence(s) for s in chunk])
            with no_grad():
                H = self.forward(batch)
                sent = heads.sentence_logits(H, self.params).data
                tok = heads.token_logits(H, self.params).data
            for b in range(len(chunk)):
                tag_ids = [int(t) for t in np.argmax(tok[b, :batch.lengths[b]], axis=-1)]
                out.append(SentencePrediction(
                    sentence_label=self.scheme.lf_labels[int(np.argmax(sent[b]))],
                    tags=tags_to_strings(tag_ids, self.scheme),
                    spans=spans_from_tags(tag_ids, self.scheme),
                ))
        return out
