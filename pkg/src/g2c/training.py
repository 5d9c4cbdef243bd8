"""Adam with linear warmup, epoch loop, dev-based early stopping."""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .bio import spans_from_tags, tags_from_strings
from .metrics import evaluate
from .tensor import backward

logger = logging.getLogger(__name__)


class TrainingError(RuntimeError):
    pass


class Adam:
    """Adam without weight decay, operating in place on ``Tensor.data``."""

    def __init__(self, params, lr=5e-4, betas=(0.9, 0.999), eps=1e-8):
        self.params = params
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.step_count = 0
        self.m = {k: np.zeros_like(p.data) for k, p in params.items()}
        self.v = {k: np.zeros_like(p.data) for k, p in params.items()}

    def zero_grad(self):
        for p in self.params.values():
            p.zero_grad()

    def step(self, lr=None):
        lr = self.lr if lr is None else lr
        self.step_count += 1
        t = self.step_count
        c1 = 1.0 - self.beta1 ** t
        c2 = 1.0 - self.beta2 ** t
        for k in sorted(self.params):
            p = self.params[k]
            if p.grad is None:
                continue
            g = p.grad
            self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * g
            self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * g * g
            p.data -= lr * (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + self.eps)

    def state_dict(self):
        return {"step": self.step_count, "m": dict(self.m), "v": dict(self.v)}

    def load_state_dict(self, state):
        self.step_count = int(state["step"])
        for k in self.params:
            self.m[k] = np.array(state["m"][k], dtype=np.float64)
            self.v[k] = np.array(state["v"][k], dtype=np.float64)


def warmup_lr(step, base_lr, warmup_steps):
    """Rate for 0-based ``step``: linear ramp over ``warmup_steps``, then constant."""
    if warmup_steps and step < warmup_steps:
        return base_lr * (step + 1) / warmup_steps
    return base_lr


def float32_snapshot(model):
    return {k: p.data.astype(np.float32) for k, p in model.params.items()}


def evaluate_model(model, sentences, frequencies=None, batch_size=32):
    preds = model.predict(sentences, batch_size=batch_size)
    gold_spans = [spans_from_tags(tags_from_strings(s.tags, model.scheme), model.scheme) for s in sentences]
    return evaluate(
        [s.sentence_label for s in sentences],
        [p.sentence_label for p in preds],
        gold_spans,
        [p.spans for p in preds],
        frequencies=frequencies,
    ), preds


@dataclass
class TrainingResult:
    best_params: dict
    best_epoch: int
    history: list = field(default_factory=list)
    stopped_early: bool = False


class Trainer:
    """Owns the optimiser and RNG for one training run of a :class:`G2CModel`."""

    def __init__(self, model, run_config, warmup_steps=0):
        self.model = model
        self.config = run_config
        self.warmup_steps = warmup_steps
        self.optimizer = Adam(model.params, lr=run_config.learning_rate)
        self.rng = np.random.default_rng(run_config.seed + 1)

    def train_step(self, batch):
        self.optimizer.zero_grad()
        loss = self.model.loss(batch, token_reduction=self.config.token_reduction, training=True, rng=self.rng)
        value = loss.item()
        if not math.isfinite(value):
            raise TrainingError(f"non-finite loss {value} at step {self.optimizer.step_count}")
        backward(loss)
        self.optimizer.step(warmup_lr(self.optimizer.step_count, self.config.learning_rate, self.warmup_steps))
        return value

    def train_epoch(self, encoded):
        order = self.rng.permutation(len(encoded))
        bs = self.config.batch_size
        losses = []
        for start in range(0, len(order), bs):
            batch = self.model.collate([encoded[i] for i in order[start:start + bs]])
            losses.append(self.train_step(batch))
        return float(np.mean(losses))

    def state(self):
        return {"optimizer": self.optimizer.state_dict(), "rng": self.rng.bit_generator.state}

    def load_state(self, optimizer_state, rng_state=None):
        self.optimizer.load_state_dict(optimizer_state)
        if rng_state is not None:
            self.rng.bit_generator.state = rng_state

    def fit(self, train, dev=(), on_improve=None):
        """Train with early stopping on dev (span macro-F1, then sentence accuracy).

        Dev scores are computed on float32-rounded weights so a saved
        checkpoint reproduces them exactly. With an empty dev set the last
        epoch wins. ``on_improve(epoch, trainer)`` fires when a new best is kept.
        """
        if not train:
            raise TrainingError("empty training set")
        dev = list(dev)
        encoded = [self.model.encode_sentence(s) for s in train]
        best_key, best_params, best_epoch = None, None, 0
        history, stale = [], 0
        stopped = False
        for epoch in range(1, self.config.epochs + 1):
            loss = self.train_epoch(encoded)
            snapshot = float32_snapshot(self.model)
            record = {"epoch": epoch, "loss": loss, "steps": self.optimizer.step_count}
            if dev:
                report, _ = evaluate_model(self.model.with_params(snapshot), dev)
                record["dev_macro_f1"] = report.macro_f1_by_role
                record["dev_macro_f1_by_lf"] = report.macro_f1_by_lf
                record["dev_sentence_accuracy"] = report.sentence_accuracy
                key = (report.macro_f1_by_role, report.sentence_accuracy)
            else:
                key = (epoch,)
            history.append(record)
            logger.info("epoch %d loss %.4f %s", epoch, loss,
                        {k: round(v, 4) for k, v in record.items() if k.startswith("dev")})
            if best_key is None or key > best_key:
                best_key, best_params, best_epoch, stale = key, snapshot, epoch, 0
                if on_improve is not None:
                    on_improve(epoch, self)
            else:
                stale += 1
                if stale >= self.config.patience:
                    stopped = True
                    break
        return TrainingResult(best_params, best_epoch, history, stopped)


def run_training(model, run_config, train, dev=(), on_improve=None):
    steps_per_epoch = math.ceil(len(train) / run_config.batch_size)
    trainer = Trainer(model, run_config, warmup_steps=run_config.resolved_warmup(steps_per_epoch))
    result = trainer.fit(train, dev, on_improve=on_improve)
    return trainer, result
