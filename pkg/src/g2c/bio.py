"""BIO tag inventory per lexical function and role, and span encoding/decoding."""

from dataclasses import dataclass, field

ROLES = ("b", "c")
ROLE_NAMES = {"b": "base", "c": "collocate"}


class EncodingError(ValueError):
    """Raised when spans cannot be expressed as a flat BIO sequence."""


@dataclass(frozen=True, order=True)
class Span:
    """Inclusive word range ``[start, end]`` tagged with an LF and a role (``b``/``c``)."""

    start: int
    end: int
    lf: str
    role: str

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"role must be one of {ROLES}, got {self.role!r}")
        if not 0 <= self.start <= self.end:
            raise ValueError(f"invalid span bounds ({self.start}, {self.end})")

    @property
    def label(self):
        return f"{self.lf}_{self.role}"


@dataclass(frozen=True)
class TagScheme:
    lf_labels: tuple
    tags: tuple = field(init=False)
    ids: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        lfs = tuple(self.lf_labels)
        if not lfs:
            raise ValueError("at least one LF label is required")
        if len(set(lfs)) != len(lfs):
            raise ValueError("duplicate LF labels")
        tags = ["O"]
        for lf in lfs:
            tags += [f"B-{lf}_b", f"I-{lf}_b", f"B-{lf}_c", f"I-{lf}_c"]
        object.__setattr__(self, "lf_labels", lfs)
        object.__setattr__(self, "tags", tuple(tags))
        object.__setattr__(self, "ids", {t: i for i, t in enumerate(tags)})

    def __len__(self):
        return len(self.tags)

    def tag_id(self, tag):
        return self.ids[tag]

    def parse(self, tag_id):
        """``(prefix, lf, role)`` for a tag id; ``("O", None, None)`` for outside."""
        if tag_id == 0:
            return "O", None, None
        lf_index, slot = divmod(int(tag_id) - 1, 4)
        return ("B", "I")[slot % 2], self.lf_labels[lf_index], ROLES[slot // 2]

    def encode_tag(self, prefix, lf, role):
        return self.ids[f"{prefix}-{lf}_{role}"]


def tag_inventory(lf_labels):
    return TagScheme(tuple(lf_labels))


def tags_from_spans(spans, n, scheme):
    tags = [0] * n
    for span in sorted(spans):
        if span.end >= n:
            raise EncodingError(f"span {span} exceeds sentence length {n}")
        if any(tags[i] for i in range(span.start, span.end + 1)):
            raise EncodingError(f"span {span} overlaps another span")
        tags[span.start] = scheme.encode_tag("B", span.lf, span.role)
        for i in range(span.start + 1, span.end + 1):
            tags[i] = scheme.encode_tag("I", span.lf, span.role)
    return tags


def repair_tags(tags, scheme):
    """Rewrite orphan ``I-X`` (not continuing an ``X`` run) as ``B-X``."""
    out = []
    prev = None
    for t in tags:
        prefix, lf, role = scheme.parse(t)
        if prefix == "I" and prev != (lf, role):
            t = scheme.encode_tag("B", lf, role)
        out.append(t)
        prev = None if prefix == "O" else (lf, role)
    return out


def spans_from_tags(tags, scheme):
    spans = []
    start = current = None
    for i, t in enumerate(repair_tags(tags, scheme)):
        prefix, lf, role = scheme.parse(t)
        if current is not None and prefix != "I":
            spans.append(Span(start, i - 1, *current))
            current = None
        if prefix == "B":
            start, current = i, (lf, role)
    if current is not None:
        spans.append(Span(start, len(tags) - 1, *current))
    return spans


def tags_to_strings(tag_ids, scheme):
    return [scheme.tags[t] for t in tag_ids]


def tags_from_strings(tags, scheme):
    try:
        return [scheme.ids[t] for t in tags]
    except KeyError as exc:
        raise EncodingError(f"unknown tag {exc.args[0]!r}") from None
