"""Build tagged collocation datasets from parsed corpora and LF instance lists."""

import json
import logging
import math
import random
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path

from .bio import EncodingError, Span, tag_inventory, tags_from_spans, tags_to_strings
from .graph import ROOT, DependencyGraph, build_label_vocabulary

logger = logging.getLogger(__name__)


class DatasetFormatError(ValueError):
    """Malformed input file; the message carries file and line."""


@dataclass(frozen=True)
class CollocationInstance:
    lf: str
    base_lemma: str
    base_pos: str
    collocate_lemma: str
    collocate_pos: str

    @property
    def key(self):
        return (self.lf, self.base_lemma, self.collocate_lemma)


@dataclass
class ParsedSentence:
    tokens: list
    lemmas: list
    upos: list
    graph: DependencyGraph

    def __post_init__(self):
        n = len(self.tokens)
        if not (len(self.lemmas) == len(self.upos) == n == self.graph.n_tokens):
            raise ValueError("parallel sentence fields differ in length")


@dataclass(frozen=True)
class Occurrence:
    lf: str
    base: tuple
    collocate: tuple
    base_lemma: str
    collocate_lemma: str

    @property
    def instance_key(self):
        return (self.lf, self.base_lemma, self.collocate_lemma)

    def spans(self):
        return [Span(self.base[0], self.base[-1], self.lf, "b"),
                Span(self.collocate[0], self.collocate[-1], self.lf, "c")]


@dataclass
class AnnotatedSentence:
    """One training/evaluation record. ``deps`` use head = -1 for ROOT."""

    tokens: list
    upos: list
    deps: list
    lemmas: list = None
    tags: list = None
    sentence_label: str = None
    instances: list = field(default_factory=list)

    def __post_init__(self):
        if self.lemmas is None:
            self.lemmas = list(self.tokens)
        self.deps = [tuple(e) for e in self.deps]

    def __len__(self):
        return len(self.tokens)

    @property
    def graph(self):
        return DependencyGraph(len(self.tokens), tuple(self.deps))

    def to_record(self):
        rec = {
            "tokens": list(self.tokens),
            "lemmas": list(self.lemmas),
            "upos": list(self.upos),
            "deps": [[h, d, l] for h, d, l in self.deps],
        }
        if self.tags is not None:
            rec["tags"] = list(self.tags)
        if self.sentence_label is not None:
            rec["sentence_label"] = self.sentence_label
        if self.instances:
            rec["instances"] = [dict(i) for i in self.instances]
        return rec

    @classmethod
    def from_record(cls, rec):
        try:
            return cls(
                tokens=list(rec["tokens"]),
                upos=list(rec["upos"]),
                deps=[tuple(e) for e in rec["deps"]],
                lemmas=rec.get("lemmas"),
                tags=rec.get("tags"),
                sentence_label=rec.get("sentence_label"),
                instances=list(rec.get("instances", [])),
            )
        except (KeyError, TypeError) as exc:
            raise DatasetFormatError(f"bad record: missing or malformed field {exc}") from None


def load_collocation_list(path):
    """Read the 5-column TSV (lf, base, base_pos, collocate, collocate_pos)."""
    seen, out = set(), []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\n").rstrip("\r")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) != 5 or not all(c.strip() for c in cols):
                raise DatasetFormatError(f"{path}:{lineno}: expected 5 non-empty tab-separated columns, got {len(cols)}")
            inst = CollocationInstance(*(c.strip() for c in cols))
            if inst.key not in seen:
                seen.add(inst.key)
                out.append(inst)
    return out


def load_conllu(path):
    """Yield ParsedSentence objects; range tokens and empty nodes are skipped."""
    path = str(path)
    rows, start = [], None

    def finish(lineno):
        ids = [r[0] for r in rows]
        if ids != list(range(1, len(rows) + 1)):
            raise DatasetFormatError(f"{path}:{lineno}: token ids are not 1..n")
        edges = []
        for tid, _, _, _, head, rel in rows:
            if head > len(rows):
                raise DatasetFormatError(f"{path}:{lineno}: HEAD {head} out of range")
            edges.append((ROOT if head == 0 else head - 1, tid - 1, rel))
        return ParsedSentence(
            tokens=[r[1] for r in rows],
            lemmas=[r[2] for r in rows],
            upos=[r[3] for r in rows],
            graph=DependencyGraph(len(rows), tuple(edges)),
        )

    with open(path, encoding="utf-8") as f:
        lineno = 0
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\n").rstrip("\r")
            if not line.strip():
                if rows:
                    yield finish(start)
                    rows = []
                continue
            if line.startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) != 10:
                raise DatasetFormatError(f"{path}:{lineno}: expected 10 columns, got {len(cols)}")
            if "-" in cols[0] or "." in cols[0]:
                continue
            try:
                tid = int(cols[0])
                head = int(cols[6])
            except ValueError:
                raise DatasetFormatError(f"{path}:{lineno}: non-integer ID or HEAD") from None
            if not rows:
                start = lineno
            rows.append((tid, cols[1], cols[2], cols[3], head, cols[7]))
        if rows:
            yield finish(start)


def _run_head(run, heads):
    """Token of a contiguous run whose head lies outside the run (first if several)."""
    inside = set(run)
    for i in run:
        if heads[i] not in inside:
            return i
    return run[0]


def _find_runs(sentence, lemma, pos, heads):
    words = lemma.split()
    k = len(words)
    lemmas = [l.lower() for l in sentence.lemmas]
    runs = []
    for start in range(len(lemmas) - k + 1):
        if lemmas[start:start + k] == [w.lower() for w in words]:
            run = tuple(range(start, start + k))
            if sentence.upos[_run_head(run, heads)] == pos:
                runs.append(run)
    return runs


def match_instances(sentence, instances, allow_case_hop=False):
    """Occurrences of listed collocations whose heads are linked in the parse.

    Lemma comparison is case-insensitive; multiword lemmas must match a
    contiguous run. The two run heads must share a direct dependency edge,
    or (with ``allow_case_hop``) be linked through one intermediate ADP.
    """
    heads = [None] * len(sentence.tokens)
    for h, d, _ in sentence.graph.edges:
        heads[d] = h
    neighbours = defaultdict(set)
    for h, d, _ in sentence.graph.edges:
        if h != ROOT:
            neighbours[h].add(d)
            neighbours[d].add(h)

    def linked(a, b):
        if b in neighbours[a]:
            return True
        if allow_case_hop:
            return any(sentence.upos[m] == "ADP" for m in neighbours[a] & neighbours[b])
        return False

    found = []
    for inst in instances:
        for base in _find_runs(sentence, inst.base_lemma, inst.base_pos, heads):
            for coll in _find_runs(sentence, inst.collocate_lemma, inst.collocate_pos, heads):
                if set(base) & set(coll):
                    continue
                if linked(_run_head(base, heads), _run_head(coll, heads)):
                    found.append(Occurrence(inst.lf, base, coll, inst.base_lemma, inst.collocate_lemma))
    found.sort(key=lambda o: (o.base[0], o.collocate[0], o.lf))
    return found


def label_sentence(occurrences):
    """Most frequent LF; ties go to the LF with the leftmost base span."""
    occurrences = list(occurrences)
    if not occurrences:
        raise ValueError("cannot label a sentence without occurrences")
    counts = Counter(o.lf for o in occurrences)
    first = {}
    for o in occurrences:
        first[o.lf] = min(first.get(o.lf, o.base[0]), o.base[0])
    return min(counts, key=lambda lf: (-counts[lf], first[lf], lf))


def annotate(sentence, occurrences, scheme):
    """AnnotatedSentence for a parsed sentence, or None when spans overlap."""
    spans = sorted({s for o in occurrences for s in o.spans()})
    try:
        tag_ids = tags_from_spans(spans, len(sentence.tokens), scheme)
    except EncodingError:
        return None
    return AnnotatedSentence(
        tokens=list(sentence.tokens),
        lemmas=list(sentence.lemmas),
        upos=list(sentence.upos),
        deps=list(sentence.graph.edges),
        tags=tags_to_strings(tag_ids, scheme),
        sentence_label=label_sentence(occurrences),
        instances=[{"lf": o.lf, "base": list(o.base), "collocate": list(o.collocate),
                    "base_lemma": o.base_lemma, "collocate_lemma": o.collocate_lemma}
                   for o in occurrences],
    )


def _instance_keys(sentence):
    return {(i["lf"], i["base_lemma"], i["collocate_lemma"]) for i in sentence.instances}


def held_out_size(n):
    """Dev (= test) size for an LF with ``n`` unique instances."""
    if n < 3:
        return 0
    return max(1, math.floor(0.1 * n + 0.5))


def assign_instances(sentences, seed):
    """Map each LF-wise unique instance to "train", "dev" or "test"."""
    by_lf = defaultdict(set)
    for s in sentences:
        for lf, base, coll in _instance_keys(s):
            by_lf[lf].add((base, coll))
    rng = random.Random(seed)
    assignment = {}
    for lf in sorted(by_lf):
        pool = sorted(by_lf[lf])
        rng.shuffle(pool)
        k = held_out_size(len(pool))
        for i, (base, coll) in enumerate(pool):
            split = "test" if i < k else "dev" if i < 2 * k else "train"
            assignment[(lf, base, coll)] = split
    return assignment


def split_dataset(sentences, seed):
    """Instance-disjoint train/dev/test split; returns (splits, n_dropped, assignment)."""
    assignment = assign_instances(sentences, seed)
    splits = {"train": [], "dev": [], "test": []}
    dropped = 0
    for s in sentences:
        targets = {assignment[k] for k in _instance_keys(s)}
        if len(targets) != 1:
            dropped += 1
            continue
        splits[targets.pop()].append(s)
    return splits, dropped, assignment


@dataclass
class BuildResult:
    splits: dict
    lf_labels: list
    dep_labels: list
    stats: dict
    review: list = field(default_factory=list)


def build_dataset(corpus_paths, instances, seed, max_len=128, allow_case_hop=False):
    """Match, annotate and split; ``max_len`` counts CLS and SEP."""
    instances = list(instances)
    lf_labels = sorted({i.lf for i in instances})
    scheme = tag_inventory(lf_labels)
    annotated, review = [], []
    counters = Counter()
    relation_stats = Counter()
    for path in sorted(str(p) for p in corpus_paths):
        for idx, sent in enumerate(load_conllu(path)):
            counters["sentences_scanned"] += 1
            occ = match_instances(sent, instances, allow_case_hop=allow_case_hop)
            if not occ:
                continue
            if len(sent.tokens) + 2 > max_len:
                counters["dropped_too_long"] += 1
                continue
            record = annotate(sent, occ, scheme)
            if record is None:
                counters["dropped_overlapping"] += 1
                continue
            heads = {d: (h, l) for h, d, l in sent.graph.edges}
            for o in occ:
                relation_stats[_relation_between(o, heads)] += 1
            annotated.append(record)
            review.append((path, idx, record))
    splits, dropped, assignment = split_dataset(annotated, seed)
    counters["dropped_cross_split"] = dropped
    dep_labels = list(build_label_vocabulary(s.graph for s in splits["train"]).labels) if splits["train"] else []
    stats = _stats(splits, assignment, counters, relation_stats)
    return BuildResult(splits, lf_labels, dep_labels, stats, review)


def _relation_between(occ, heads):
    b, c = occ.base, occ.collocate
    for x, y, direction in ((c, b, "collocate<-base"), (b, c, "base<-collocate")):
        for i in x:
            h, label = heads.get(i, (None, None))
            if h in y:
                return f"{label}:{direction}"
    return "indirect"


def _stats(splits, assignment, counters, relation_stats):
    per_lf = defaultdict(lambda: {k: 0 for k in ("train", "dev", "test")})
    unique = defaultdict(lambda: {k: 0 for k in ("train", "dev", "test")})
    for name, rows in splits.items():
        for s in rows:
            per_lf[s.sentence_label][name] += 1
    for (lf, _, _), split in assignment.items():
        unique[lf][split] += 1
    return {
        "sentences": {k: len(v) for k, v in splits.items()},
        "sentences_per_lf": {lf: per_lf[lf] for lf in sorted(per_lf)},
        "unique_instances_per_lf": {lf: unique[lf] for lf in sorted(unique)},
        "dropped": {
            "cross_split": counters["dropped_cross_split"],
            "overlapping": counters["dropped_overlapping"],
            "too_long": counters["dropped_too_long"],
        },
        "sentences_scanned": counters["sentences_scanned"],
        "relations": dict(sorted(relation_stats.items())),
    }


def _dumps(obj):
    return json.dumps(obj, ensure_ascii=False, sort_keys=False)


def write_jsonl(path, sentences):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for s in sentences:
            f.write(_dumps(s.to_record() if isinstance(s, AnnotatedSentence) else s) + "\n")


def read_jsonl(path):
    out = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetFormatError(f"{path}:{lineno}: {exc.msg}") from None
            try:
                out.append(AnnotatedSentence.from_record(rec))
            except DatasetFormatError as exc:
                raise DatasetFormatError(f"{path}:{lineno}: {exc}") from None
    return out


def emit_dataset(result, out_dir, review=False):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name in ("train", "dev", "test"):
        write_jsonl(out / f"{name}.jsonl", result.splits[name])
    labels = {
        "lf_labels": result.lf_labels,
        "tags": list(tag_inventory(result.lf_labels).tags) if result.lf_labels else ["O"],
        "dep_labels": result.dep_labels,
    }
    (out / "labels.json").write_text(json.dumps(labels, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")
    (out / "stats.json").write_text(json.dumps(result.stats, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")
    if review:
        with open(out / "review.tsv", "w", encoding="utf-8", newline="\n") as f:
            f.write("file\tsentence\tlf\tbase\tcollocate\ttext\n")
            for path, idx, rec in result.review:
                for inst in rec.instances:
                    base = " ".join(rec.tokens[i] for i in inst["base"])
                    coll = " ".join(rec.tokens[i] for i in inst["collocate"])
                    f.write(f"{path}\t{idx}\t{inst['lf']}\t{base}\t{coll}\t{' '.join(rec.tokens)}\n")
    return out


def load_labels(data_dir):
    return json.loads((Path(data_dir) / "labels.json").read_text(encoding="utf-8"))
