"""Run configuration shared by the estimator, the trainer and the CLI."""

import json
from dataclasses import asdict, dataclass, fields

VARIANTS = ("baseline", "g2c_wo_pos", "g2c")


def variant_flags(variant):
    """``(use_graph, use_pos_embeddings, vanilla_scaling)`` for a model variant."""
    if variant == "baseline":
        return False, False, True
    if variant == "g2c_wo_pos":
        return True, False, False
    if variant == "g2c":
        return True, True, False
    raise ValueError(f"unknown model_variant {variant!r}; expected one of {VARIANTS}")


@dataclass
class RunConfig:
    model_variant: str = "g2c"
    n_layers: int = 2
    n_heads: int = 2
    head_dim: int = 16
    ffn_dim: int = 64
    max_len: int = 128
    dropout: float = 0.1
    init_std: float = 0.02
    learning_rate: float = 5e-4
    warmup_steps: int | None = None
    epochs: int = 50
    batch_size: int = 16
    token_reduction: str = "sum"
    patience: int = 5
    seed: int = 13

    def __post_init__(self):
        variant_flags(self.model_variant)
        for name in ("n_heads", "head_dim", "ffn_dim", "max_len", "epochs", "batch_size", "patience"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.n_layers < 0:
            raise ValueError("n_layers must be non-negative")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.warmup_steps is not None and self.warmup_steps < 0:
            raise ValueError("warmup_steps must be non-negative")
        if self.token_reduction not in ("sum", "mean"):
            raise ValueError("token_reduction must be 'sum' or 'mean'")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path):
        with open(path, encoding="utf-8") as f:
            return cls.from_dict(json.load(f))

    def to_dict(self):
        return asdict(self)

    def resolved_warmup(self, steps_per_epoch):
        if self.warmup_steps is not None:
            return self.warmup_steps
        return int(round(0.1 * self.epochs * steps_per_epoch))
