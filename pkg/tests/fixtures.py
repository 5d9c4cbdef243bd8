"""A small on-disk parsed corpus and collocation list for dataset-builder tests."""

MAGN = [("heavy", "smoker"), ("strong", "coffee"), ("deep", "sleep"), ("high", "fever"),
        ("bitter", "cold"), ("heavy", "rain"), ("strong", "wind"), ("deep", "regret"),
        ("high", "hope"), ("grand", "slam")]
OPER1 = [("take", "walk"), ("make", "mistake"), ("pay", "attention")]
REAL1 = [("keep", "promise"), ("fulfil", "duty")]


def _row(i, form, upos, head, rel, lemma=None):
    return "\t".join([str(i), form, lemma or form.lower(), upos, "_", "_", str(head), rel, "_", "_"])


def magn_sentence(adj, noun):
    rows = [_row(1, "The", "DET", 3, "det"), _row(2, adj, "ADJ", 3, "amod"),
            _row(3, noun, "NOUN", 4, "nsubj"), _row(4, "sleeps", "VERB", 0, "root", "sleep"),
            _row(5, ".", "PUNCT", 4, "punct")]
    return "\n".join(rows)


def pair_sentence(a, b):
    rows = [_row(1, "The", "DET", 3, "det"), _row(2, a[0], "ADJ", 3, "amod"),
            _row(3, a[1], "NOUN", 4, "nsubj"), _row(4, "sees", "VERB", 0, "root", "see"),
            _row(5, "the", "DET", 7, "det"), _row(6, b[0], "ADJ", 7, "amod"),
            _row(7, b[1], "NOUN", 4, "obj"), _row(8, ".", "PUNCT", 4, "punct")]
    return "\n".join(rows)


def verb_sentence(verb, noun, lemma=None):
    rows = [_row(1, "They", "PRON", 2, "nsubj", "they"), _row(2, verb, "VERB", 0, "root", lemma),
            _row(3, "a", "DET", 4, "det"), _row(4, noun, "NOUN", 2, "obj"), _row(5, ".", "PUNCT", 2, "punct")]
    return "\n".join(rows)


def write_fixture(root):
    """Write ``corpus/part*.conllu`` and ``lfs.tsv`` under ``root``; return their paths."""
    corpus = root / "corpus"
    corpus.mkdir(parents=True, exist_ok=True)
    blocks = ["# sent_id = m%d\n" % i + magn_sentence(a, n) for i, (a, n) in enumerate(MAGN)]
    blocks += [magn_sentence(a, n) for a, n in MAGN[:4]]
    blocks += [pair_sentence(MAGN[i], MAGN[(i + 1) % len(MAGN)]) for i in range(len(MAGN))]
    (corpus / "part1.conllu").write_text("\n\n".join(blocks) + "\n\n", encoding="utf-8")
    blocks = [verb_sentence(v, n) for v, n in OPER1 + REAL1]
    blocks.append(verb_sentence("Took", "walk", lemma="Take"))
    (corpus / "part2.conllu").write_text("\n\n".join(blocks) + "\n", encoding="utf-8")
    lines = ["# lf\tbase\tbase_pos\tcollocate\tcollocate_pos"]
    lines += [f"Magn\t{n}\tNOUN\t{a}\tADJ" for a, n in MAGN]
    lines += [f"Oper1\t{n}\tNOUN\t{v}\tVERB" for v, n in OPER1]
    lines += [f"Real1\t{n}\tNOUN\t{v}\tVERB" for v, n in REAL1]
    lines.append(f"Magn\tsmoker\tNOUN\theavy\tADJ")
    (root / "lfs.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return corpus, root / "lfs.tsv"


# Sentences in the fixture that contain at least one listed collocation.
N_MATCHED = len(MAGN) + 4 + len(MAGN) + len(OPER1) + len(REAL1) + 1
