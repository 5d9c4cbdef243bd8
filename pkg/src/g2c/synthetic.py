"""Generated corpora for the overfit and graph-signal experiments."""

import numpy as np

from .bio import Span, tag_inventory, tags_from_spans, tags_to_strings
from .dataset import AnnotatedSentence
from .graph import ROOT

DEFAULT_LFS = ("Magn", "Oper1", "Real1", "AntiMagn")
_COLLOCATE_POS = {"Magn": "ADJ", "AntiMagn": "ADJ", "Oper1": "VERB", "Real1": "VERB"}


def random_tree(n, rng, root=None):
    """Heads for a uniformly shuffled attachment tree; returns (heads, root)."""
    order = list(rng.permutation(n))
    if root is not None:
        order.remove(root)
        order.insert(0, root)
    heads = [ROOT] * n
    for k in range(1, n):
        heads[order[k]] = int(order[rng.integers(0, k)])
    return heads, int(order[0])


def _sentence(tokens, upos, heads, labels, spans, lf, scheme):
    tags = tags_to_strings(tags_from_spans(spans, len(tokens), scheme), scheme)
    deps = [(h, d, l) for d, (h, l) in enumerate(zip(heads, labels))]
    base = [i for s in spans if s.role == "b" for i in range(s.start, s.end + 1)]
    coll = [i for s in spans if s.role == "c" for i in range(s.start, s.end + 1)]
    return AnnotatedSentence(
        tokens=tokens, upos=upos, deps=deps, tags=tags, sentence_label=lf,
        instances=[{"lf": lf, "base": base, "collocate": coll}],
    )


def overfit_corpus(n_sentences=200, lf_labels=DEFAULT_LFS, n_fillers=30, seed=0):
    """Sentences each holding one collocation drawn from a per-LF lexicon.

    Every LF owns three bases (one of them two words long) and three
    collocates; fillers fill the rest. Two dependency labels: the collocate
    hangs off the base head with ``mod``, every other attachment is ``dep``.
    """
    rng = np.random.default_rng(seed)
    scheme = tag_inventory(lf_labels)
    fillers = [f"w{i:02d}" for i in range(n_fillers)]
    filler_pos = ["DET", "NOUN", "VERB", "ADP", "PRON"]
    lexicon = {}
    for lf in lf_labels:
        stem = lf.lower()
        bases = [[f"{stem}_base0"], [f"{stem}_base1"], [f"{stem}_grand", f"{stem}_slam"]]
        collocates = [f"{stem}_coll{k}" for k in range(3)]
        lexicon[lf] = (bases, collocates)
    out = []
    for _ in range(n_sentences):
        lf = lf_labels[rng.integers(len(lf_labels))]
        bases, collocates = lexicon[lf]
        base = bases[rng.integers(len(bases))]
        coll = collocates[rng.integers(len(collocates))]
        n = int(rng.integers(5, 11))
        slots = n - len(base) - 1
        words = [fillers[rng.integers(len(fillers))] for _ in range(slots)]
        pos = [filler_pos[rng.integers(len(filler_pos))] for _ in range(slots)]
        units = [("base", base), ("coll", [coll])] + [("fill", [w]) for w in words]
        perm = rng.permutation(len(units))
        tokens, upos, roles = [], [], []
        fill_k = 0
        for u in perm:
            kind, unit = units[u]
            for w in unit:
                tokens.append(w)
                roles.append(kind)
                if kind == "base":
                    upos.append("NOUN")
                elif kind == "coll":
                    upos.append(_COLLOCATE_POS.get(lf, "ADJ"))
                else:
                    upos.append(pos[fill_k])
                    fill_k += 1
        base_idx = [i for i, r in enumerate(roles) if r == "base"]
        coll_idx = roles.index("coll")
        heads, _ = random_tree(n, rng, root=base_idx[0])
        labels = ["dep"] * n
        heads[coll_idx] = base_idx[0]
        labels[coll_idx] = "mod"
        for i in base_idx[1:]:
            heads[i] = base_idx[0]
        spans = [Span(base_idx[0], base_idx[-1], lf, "b"), Span(coll_idx, coll_idx, lf, "c")]
        out.append(_sentence(tokens, upos, heads, labels, spans, lf, scheme))
    return out


def graph_signal_corpus(n_sentences=300, n_fillers=20, seed=0):
    """Sentences whose only tagging cue is a dependency label.

    Words are drawn uniformly from one filler pool with a single PoS tag and
    attached into a random tree labelled ``dep``. One non-root edge is
    relabelled ``rel_a`` or ``rel_b``; its head is the base and its
    dependent the collocate of LF ``A`` or ``B`` respectively.
    """
    rng = np.random.default_rng(seed)
    scheme = tag_inventory(("A", "B"))
    fillers = [f"w{i:02d}" for i in range(n_fillers)]
    out = []
    for _ in range(n_sentences):
        n = int(rng.integers(6, 11))
        tokens = [fillers[rng.integers(n_fillers)] for _ in range(n)]
        heads, root = random_tree(n, rng)
        labels = ["dep"] * n
        dep = int(rng.choice([i for i in range(n) if i != root]))
        lf = "A" if rng.random() < 0.5 else "B"
        labels[dep] = "rel_a" if lf == "A" else "rel_b"
        spans = [Span(heads[dep], heads[dep], lf, "b"), Span(dep, dep, lf, "c")]
        out.append(_sentence(tokens, ["X"] * n, heads, labels, spans, lf, scheme))
    return out


def split_corpus(sentences, fractions=(0.8, 0.1, 0.1)):
    n = len(sentences)
    n_train = int(round(fractions[0] * n))
    n_dev = int(round(fractions[1] * n))
    return sentences[:n_train], sentences[n_train:n_train + n_dev], sentences[n_train + n_dev:]
