"""Dependency graphs, label vocabularies and the relation matrix fed to attention."""

import logging
from dataclasses import dataclass, field

import numpy as np

logger = logging.getLogger(__name__)

ROOT = -1


class VocabularyError(KeyError):
    """Raised for a dependency label missing from a strict vocabulary lookup."""


@dataclass(frozen=True)
class DependencyGraph:
    """Single-headed labelled dependency structure over ``n_tokens`` words.

    ``edges`` holds ``(head, dependent, label)`` with 0-based word indices and
    ``head == ROOT`` (-1) for the root attachment.
    """

    n_tokens: int
    edges: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple((int(h), int(d), str(l)) for h, d, l in self.edges))

    @classmethod
    def from_heads(cls, heads, labels):
        """Build from parallel head/label lists (head -1 = ROOT)."""
        return cls(len(heads), tuple((h, i, l) for i, (h, l) in enumerate(zip(heads, labels))))

    def labels(self):
        return [l for _, _, l in self.edges]


def validate_graph(graph):
    """Return a list of diagnostics; an empty list means the graph is well formed."""
    problems = []
    n = graph.n_tokens
    incoming = [0] * n
    roots = 0
    for head, dep, _ in graph.edges:
        if not 0 <= dep < n:
            problems.append(f"dependent index {dep} out of range")
            continue
        if head == ROOT:
            roots += 1
        elif not 0 <= head < n:
            problems.append(f"head index {head} out of range")
        incoming[dep] += 1
    for i, count in enumerate(incoming):
        if count > 1:
            problems.append(f"multiple heads at index {i}")
        elif count == 0:
            problems.append(f"no head at index {i}")
    if roots == 0:
        problems.append("missing root")
    elif roots > 1:
        problems.append("duplicate root")
    return problems


@dataclass(frozen=True)
class LabelVocabulary:
    """Sorted dependency labels indexed 1..|G|; index 0 means "no relation"."""

    labels: tuple
    index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        labels = tuple(self.labels)
        if len(set(labels)) != len(labels):
            raise ValueError("duplicate dependency labels")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "index", {l: i + 1 for i, l in enumerate(labels)})

    def __len__(self):
        return len(self.labels)

    def __contains__(self, label):
        return label in self.index

    def lookup(self, label, strict=True):
        try:
            return self.index[label]
        except KeyError:
            if strict:
                raise VocabularyError(label) from None
            logger.warning("unseen dependency label %r mapped to no-relation", label)
            return 0


def build_label_vocabulary(graphs):
    graphs = list(graphs)
    if not graphs:
        raise ValueError("cannot build a label vocabulary from an empty corpus")
    return LabelVocabulary(tuple(sorted({l for g in graphs for l in g.labels()})))


def relation_onehot_dim(vocab):
    """Rows of the relation embedding tables: forward + backward labels + none."""
    return 2 * len(vocab) + 1


def build_relation_matrix(graph, vocab, T=None, strict=True):
    """T x T matrix of relation ids with CLS at 0 (standing in for ROOT) and SEP last.

    Edge ``(h, d, l)`` writes ``k_l`` at ``[h', d']`` and ``k_l + |G|`` at
    ``[d', h']`` where primes denote the +1 shift for CLS. With
    ``strict=False`` unknown labels are treated as no relation.
    """
    if T is None:
        T = graph.n_tokens + 2
    if T != graph.n_tokens + 2:
        raise ValueError(f"T must be n_tokens + 2 = {graph.n_tokens + 2}, got {T}")
    size = len(vocab)
    R = np.zeros((T, T), dtype=np.int64)
    for head, dep, label in graph.edges:
        k = vocab.lookup(label, strict=strict)
        if k == 0:
            continue
        i = 0 if head == ROOT else head + 1
        j = dep + 1
        if not (0 <= i < T - 1 and 1 <= j < T - 1):
            raise IndexError(f"edge ({head}, {dep}) out of range for {graph.n_tokens} tokens")
        R[i, j] = k
        R[j, i] = k + size
    return R
