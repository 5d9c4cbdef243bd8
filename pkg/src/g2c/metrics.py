"""Sentence accuracy, exact-match span P/R/F1, span confusion and rank correlation."""

import json
import math
from collections import Counter, defaultdict
from dataclasses import asdict, dataclass, field

import numpy as np

MISSED = "MISSED"
SPURIOUS = "SPURIOUS"


def _prf(tp, n_gold, n_pred):
    precision = tp / n_pred if n_pred else 0.0
    recall = tp / n_gold if n_gold else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return precision, recall, f1


def sentence_accuracy(gold, pred):
    gold, pred = list(gold), list(pred)
    if len(gold) != len(pred):
        raise ValueError("gold and predicted label lists differ in length")
    if not gold:
        raise ValueError("accuracy of an empty list is undefined")
    return sum(g == p for g, p in zip(gold, pred)) / len(gold)


def _span_key(span, by_role=True):
    return (span.lf, span.role) if by_role else span.lf


def span_prf(gold, pred, by_role=True):
    """Exact-match span scores per label, plus their unweighted macro F1.

    ``gold`` and ``pred`` are aligned lists of per-sentence span collections.
    Labels are ``(lf, role)`` pairs, or LF names when ``by_role`` is False
    (counts pooled over both roles). Only labels present in gold or
    predictions are scored.
    """
    if len(gold) != len(pred):
        raise ValueError("gold and predicted sentence lists differ in length")
    tp, n_gold, n_pred = Counter(), Counter(), Counter()
    for g_spans, p_spans in zip(gold, pred):
        g_set, p_set = set(g_spans), set(p_spans)
        for s in g_set:
            n_gold[_span_key(s, by_role)] += 1
        for s in p_set:
            n_pred[_span_key(s, by_role)] += 1
        for s in g_set & p_set:
            tp[_span_key(s, by_role)] += 1
    per_label = {}
    for label in sorted(set(n_gold) | set(n_pred)):
        p, r, f = _prf(tp[label], n_gold[label], n_pred[label])
        per_label[label] = {
            "precision": p, "recall": r, "f1": f,
            "gold_count": n_gold[label], "pred_count": n_pred[label], "correct": tp[label],
        }
    macro = float(np.mean([v["f1"] for v in per_label.values()])) if per_label else 0.0
    return per_label, macro


def confusion_matrix(gold, pred):
    """Counts keyed ``(gold_label, pred_label)`` over ``LF_role`` labels, MISSED and SPURIOUS.

    A gold span is paired with a prediction of identical boundaries and role,
    exact LF matches first; unpaired gold spans go to MISSED, unpaired
    predictions come from SPURIOUS.
    """
    counts = Counter()
    for g_spans, p_spans in zip(gold, pred, strict=True):
        g_set, p_set = set(g_spans), set(p_spans)
        for s in g_set & p_set:
            counts[(s.label, s.label)] += 1
        remaining = defaultdict(list)
        for s in sorted(p_set - g_set):
            remaining[(s.start, s.end, s.role)].append(s)
        for s in sorted(g_set - p_set):
            candidates = remaining.get((s.start, s.end, s.role))
            if candidates:
                counts[(s.label, candidates.pop(0).label)] += 1
            else:
                counts[(s.label, MISSED)] += 1
        for leftovers in remaining.values():
            for s in leftovers:
                counts[(SPURIOUS, s.label)] += 1
    return dict(counts)


def confusion_labels(confusion):
    labels = sorted({l for pair in confusion for l in pair} - {MISSED, SPURIOUS})
    return labels + [MISSED, SPURIOUS]


def confusion_to_tsv(confusion):
    labels = confusion_labels(confusion)
    lines = ["gold\\pred\t" + "\t".join(labels)]
    for g in labels:
        lines.append(g + "\t" + "\t".join(str(confusion.get((g, p), 0)) for p in labels))
    return "\n".join(lines) + "\n"


def rankdata(values):
    """Fractional ranks (1-based), ties sharing the mean of their positions."""
    values = np.asarray(values, dtype=np.float64)
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(len(values))
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman_rho(x, y):
    """Pearson correlation of tie-averaged ranks; None when either input is constant."""
    x, y = list(x), list(y)
    if len(x) != len(y) or len(x) < 2:
        raise ValueError("spearman_rho needs two equal-length sequences of length >= 2")
    rx, ry = rankdata(x), rankdata(y)
    rx -= rx.mean()
    ry -= ry.mean()
    denom = math.sqrt(float((rx * rx).sum()) * float((ry * ry).sum()))
    if denom == 0.0:
        return None
    return float(max(-1.0, min(1.0, (rx * ry).sum() / denom)))


@dataclass
class MetricsReport:
    sentence_accuracy: float
    macro_f1_by_role: float
    macro_f1_by_lf: float
    per_label: dict = field(default_factory=dict)
    per_lf: dict = field(default_factory=dict)
    confusion: dict = field(default_factory=dict)
    spearman_rho: float | None = None
    n_sentences: int = 0

    @property
    def macro_f1(self):
        return self.macro_f1_by_role

    def to_dict(self):
        d = asdict(self)
        d["macro_f1"] = self.macro_f1_by_role
        d["per_label"] = {f"{lf}_{role}": v for (lf, role), v in self.per_label.items()}
        d["confusion"] = [
            {"gold": g, "pred": p, "count": c} for (g, p), c in sorted(self.confusion.items())
        ]
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def evaluate(gold_labels, pred_labels, gold_spans, pred_spans, frequencies=None):
    """Assemble a :class:`MetricsReport`.

    ``frequencies`` maps LF -> count (typically training-set sentences); when
    given, the report carries the Spearman correlation between those counts
    and per-LF F1 over LFs present in this evaluation.
    """
    per_label, macro_role = span_prf(gold_spans, pred_spans, by_role=True)
    per_lf, macro_lf = span_prf(gold_spans, pred_spans, by_role=False)
    rho = None
    if frequencies:
        lfs = [lf for lf in sorted(per_lf) if lf in frequencies]
        if len(lfs) >= 2:
            rho = spearman_rho([frequencies[lf] for lf in lfs], [per_lf[lf]["f1"] for lf in lfs])
    return MetricsReport(
        sentence_accuracy=sentence_accuracy(gold_labels, pred_labels),
        macro_f1_by_role=macro_role,
        macro_f1_by_lf=macro_lf,
        per_label=per_label,
        per_lf=per_lf,
        confusion=confusion_matrix(gold_spans, pred_spans),
        spearman_rho=rho,
        n_sentences=len(gold_labels),
    )


def aggregate_runs(reports):
    """Sample mean and (n-1) standard deviation of each scalar metric across runs.

    Accepts MetricsReport objects or plain ``{name: value}`` dicts.
    """
    reports = list(reports)
    if not reports:
        raise ValueError("no reports to aggregate")
    rows = []
    for r in reports:
        if isinstance(r, MetricsReport):
            r = {"sentence_accuracy": r.sentence_accuracy, "macro_f1_by_role": r.macro_f1_by_role,
                 "macro_f1_by_lf": r.macro_f1_by_lf}
        rows.append(r)
    out = {}
    for key in rows[0]:
        values = np.array([row[key] for row in rows], dtype=np.float64)
        std = float(values.std(ddof=1)) if len(values) > 1 else 0.0
        out[key] = {"mean": float(values.mean()), "std": std}
    return out
