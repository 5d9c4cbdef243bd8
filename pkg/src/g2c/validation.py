"""Input checks shared by the estimator and the CLI."""

from .dataset import AnnotatedSentence
from .graph import validate_graph


def check_sentences(X, require_gold=False, name="X"):
    """Coerce records to AnnotatedSentence and reject malformed ones.

    Accepts AnnotatedSentence objects or JSONL-style dicts. Raises ValueError
    naming the offending index.
    """
    if isinstance(X, (str, bytes, dict)):
        raise TypeError(f"{name} must be a sequence of sentences")
    out = []
    for i, s in enumerate(X):
        if isinstance(s, dict):
            s = AnnotatedSentence.from_record(s)
        elif not isinstance(s, AnnotatedSentence):
            raise TypeError(f"{name}[{i}] is {type(s).__name__}, expected a sentence record")
        n = len(s.tokens)
        if n == 0:
            raise ValueError(f"{name}[{i}] has no tokens")
        if len(s.upos) != n or len(s.lemmas) != n:
            raise ValueError(f"{name}[{i}]: tokens/upos/lemmas differ in length")
        problems = validate_graph(s.graph)
        if problems:
            raise ValueError(f"{name}[{i}]: malformed dependency graph: {'; '.join(problems)}")
        if require_gold:
            if s.tags is None or s.sentence_label is None:
                raise ValueError(f"{name}[{i}] lacks gold tags or sentence_label")
            if len(s.tags) != n:
                raise ValueError(f"{name}[{i}]: {len(s.tags)} tags for {n} tokens")
        out.append(s)
    if not out:
        raise ValueError(f"{name} is empty")
    return out


def check_labels(sentences, lf_labels, name="X"):
    known = set(lf_labels)
    for i, s in enumerate(sentences):
        if s.sentence_label is not None and s.sentence_label not in known:
            raise ValueError(f"{name}[{i}]: sentence_label {s.sentence_label!r} not in the LF inventory")


def lf_labels_from(*collections):
    """Sorted LF names found in sentence labels and tags."""
    labels = set()
    for sentences in collections:
        for s in sentences:
            if s.sentence_label is not None:
                labels.add(s.sentence_label)
            for t in s.tags or ():
                if t != "O":
                    labels.add(t[2:].rsplit("_", 1)[0])
    return sorted(labels)
