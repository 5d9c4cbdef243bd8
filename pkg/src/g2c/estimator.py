"""scikit-learn style front end for training and applying the tagger."""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .checkpoint import load_checkpoint, save_checkpoint
from .config import RunConfig
from .model import G2CModel
from .training import evaluate_model, run_training
from .validation import check_labels, check_sentences, lf_labels_from


class G2CTagger(BaseEstimator):
    """Joint LF sentence classifier and BIO collocation tagger.

    ``fit`` takes annotated sentences (objects or JSONL dicts carrying
    ``tags`` and ``sentence_label``); ``y`` is ignored because the gold
    labels travel with the sentences. ``predict`` returns one
    :class:`~g2c.model.SentencePrediction` per input, and ``transform``
    returns the CLS hidden state of each sentence.
    """

    def __init__(self, model_variant="g2c", n_layers=2, n_heads=2, head_dim=16, ffn_dim=64,
                 max_len=128, dropout=0.1, init_std=0.02, learning_rate=5e-4, warmup_steps=None,
                 epochs=50, batch_size=16, token_reduction="sum", patience=5, seed=13):
        self.model_variant = model_variant
        self.n_layers = n_layers
        self.n_heads = n_heads
        self.head_dim = head_dim
        self.ffn_dim = ffn_dim
        self.max_len = max_len
        self.dropout = dropout
        self.init_std = init_std
        self.learning_rate = learning_rate
        self.warmup_steps = warmup_steps
        self.epochs = epochs
        self.batch_size = batch_size
        self.token_reduction = token_reduction
        self.patience = patience
        self.seed = seed

    def run_config(self):
        return RunConfig.from_dict(self.get_params())

    @classmethod
    def from_run_config(cls, config):
        return cls(**config.to_dict())

    def fit(self, X, y=None, eval_set=None, lf_labels=None, dep_labels=None, on_improve=None):
        config = self.run_config()
        train = check_sentences(X, require_gold=True)
        dev = check_sentences(eval_set, require_gold=True, name="eval_set") if eval_set else []
        if lf_labels is None:
            lf_labels = lf_labels_from(train, dev)
        check_labels(train, lf_labels)
        check_labels(dev, lf_labels, name="eval_set")
        model = G2CModel.create(config, train, lf_labels, dep_labels=dep_labels)
        self.trainer_, result = run_training(model, config, train, dev, on_improve=on_improve)
        self.model_ = model.with_params(result.best_params)
        self.history_ = result.history
        self.best_epoch_ = result.best_epoch
        self.stopped_early_ = result.stopped_early
        self.classes_ = np.array(lf_labels)
        self.train_frequencies_ = {lf: sum(s.sentence_label == lf for s in train) for lf in lf_labels}
        return self

    def predict(self, X):
        check_is_fitted(self, "model_")
        return self.model_.predict(check_sentences(X))

    def transform(self, X):
        check_is_fitted(self, "model_")
        return np.stack([H[0] for H in self.model_.hidden_states(check_sentences(X))])

    def evaluate(self, X, frequencies=None):
        """MetricsReport on gold-annotated sentences."""
        check_is_fitted(self, "model_")
        sentences = check_sentences(X, require_gold=True)
        if frequencies is None:
            frequencies = getattr(self, "train_frequencies_", None)
        report, _ = evaluate_model(self.model_, sentences, frequencies=frequencies)
        return report

    def score(self, X, y=None):
        """Span macro-F1 over (LF, role) labels."""
        return self.evaluate(X).macro_f1_by_role

    def save(self, path, meta=None):
        check_is_fitted(self, "model_")
        save_checkpoint(path, self.model_, self.run_config(), meta=meta)

    @classmethod
    def load(cls, path):
        ckpt = load_checkpoint(path)
        est = cls.from_run_config(ckpt.run_config)
        est.model_ = ckpt.model
        est.classes_ = np.array(ckpt.model.lf_labels)
        est.train_frequencies_ = ckpt.meta.get("train_frequencies")
        return est
