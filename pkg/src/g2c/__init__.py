"""Graph-aware transformer for joint lexical-function classification and collocation tagging."""

from .bio import Span, TagScheme, spans_from_tags, tag_inventory, tags_from_spans
from .config import RunConfig
from .dataset import AnnotatedSentence, read_jsonl, write_jsonl
from .estimator import G2CTagger
from .graph import DependencyGraph, LabelVocabulary, build_label_vocabulary, build_relation_matrix
from .metrics import MetricsReport, evaluate, span_prf, spearman_rho

__all__ = [
    "AnnotatedSentence",
    "DependencyGraph",
    "G2CTagger",
    "LabelVocabulary",
    "MetricsReport",
    "RunConfig",
    "Span",
    "TagScheme",
    "build_label_vocabulary",
    "build_relation_matrix",
    "evaluate",
    "read_jsonl",
    "span_prf",
    "spans_from_tags",
    "spearman_rho",
    "tag_inventory",
    "tags_from_spans",
    "write_jsonl",
]

__version__ = "0.1.0"
