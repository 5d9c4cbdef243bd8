import math

import numpy as np
import pytest
import scipy.stats

from g2c.bio import Span
from g2c.metrics import (
    MISSED,
    SPURIOUS,
    aggregate_runs,
    confusion_matrix,
    confusion_to_tsv,
    evaluate,
    rankdata,
    sentence_accuracy,
    span_prf,
    spearman_rho,
)
from oracles import brute_force_prf, rank_spearman

LFS = ("Magn", "Oper1", "Real1")


def random_span_set(rng, n=8):
    out = set()
    for _ in range(int(rng.integers(0, 4))):
        start = int(rng.integers(0, n))
        out.add(Span(start, min(n - 1, start + int(rng.integers(0, 2))), LFS[rng.integers(3)], "bc"[rng.integers(2)]))
    return out


def perturb(rng, spans):
    out = set()
    for s in sorted(spans):
        r = rng.random()
        if r < 0.5:
            out.add(s)
        elif r < 0.7:
            out.add(Span(s.start, s.end, LFS[rng.integers(3)], s.role))
        elif r < 0.85:
            out.add(Span(s.start, s.end + 1, s.lf, s.role))
    return out | random_span_set(rng) if rng.random() < 0.3 else out


class TestSentenceAccuracy:
    def test_example(self):
        assert sentence_accuracy(["A", "B", "B", "C"], ["A", "B", "C", "C"]) == 0.75

    def test_empty(self):
        with pytest.raises(ValueError):
            sentence_accuracy([], [])


class TestSpanPRF:
    def test_single_match(self):
        per, macro = span_prf([[Span(1, 1, "Magn", "c")]], [[Span(1, 1, "Magn", "c")]])
        assert per[("Magn", "c")]["f1"] == 1.0 and macro == 1.0

    def test_boundary_mismatch(self):
        per, _ = span_prf([[Span(1, 2, "Magn", "b")]], [[Span(1, 1, "Magn", "b")]])
        assert per[("Magn", "b")]["precision"] == 0.0 and per[("Magn", "b")]["recall"] == 0.0

    def test_role_mismatch(self):
        per, macro = span_prf([[Span(0, 0, "Magn", "b")]], [[Span(0, 0, "Magn", "c")]])
        assert per[("Magn", "b")]["f1"] == 0.0 and per[("Magn", "c")]["f1"] == 0.0 and macro == 0.0

    def test_no_predictions(self):
        per, _ = span_prf([[Span(0, 0, "Magn", "b")]], [[]])
        assert per[("Magn", "b")]["precision"] == 0.0

    def test_pooled_by_lf(self):
        gold = [[Span(0, 0, "Magn", "b"), Span(1, 1, "Magn", "c")]]
        pred = [[Span(0, 0, "Magn", "b")]]
        per, macro = span_prf(gold, pred, by_role=False)
        assert per["Magn"]["precision"] == 1.0 and per["Magn"]["recall"] == 0.5
        assert macro == pytest.approx(2 / 3)

    def test_random_against_brute_force(self, rng):
        for _ in range(200):
            gold = [random_span_set(rng) for _ in range(4)]
            pred = [perturb(rng, g) for g in gold]
            per, macro = span_prf(gold, pred)
            oracle = brute_force_prf(gold, pred, key=lambda s: (s.lf, s.role))
            assert set(per) == set(oracle)
            f1s = []
            for label, (tp, ng, npred) in sorted(oracle.items()):
                p = tp / npred if npred else 0.0
                r = tp / ng if ng else 0.0
                f = 2 * p * r / (p + r) if p + r else 0.0
                assert (per[label]["precision"], per[label]["recall"], per[label]["f1"]) == (p, r, f)
                f1s.append(f)
            assert macro == (float(np.mean(f1s)) if f1s else 0.0)


class TestConfusion:
    def test_label_swap_and_misses(self):
        gold = [[Span(0, 0, "Magn", "c"), Span(2, 2, "Oper1", "b")]]
        pred = [[Span(0, 0, "Real1", "c"), Span(4, 4, "Magn", "b")]]
        c = confusion_matrix(gold, pred)
        assert c == {("Magn_c", "Real1_c"): 1, ("Oper1_b", MISSED): 1, (SPURIOUS, "Magn_b"): 1}

    def test_exact_match_not_stolen(self):
        gold = [[Span(2, 2, "Magn", "b"), Span(2, 2, "Oper1", "b")]]
        pred = [[Span(2, 2, "Oper1", "b"), Span(2, 2, "Real1", "b")]]
        c = confusion_matrix(gold, pred)
        assert c == {("Oper1_b", "Oper1_b"): 1, ("Magn_b", "Real1_b"): 1}

    def test_diagonal_counts_true_positives(self, rng):
        for _ in range(500):
            gold = [random_span_set(rng) for _ in range(3)]
            pred = [perturb(rng, g) for g in gold]
            per, _ = span_prf(gold, pred)
            c = confusion_matrix(gold, pred)
            for (lf, role), row in per.items():
                assert c.get((f"{lf}_{role}", f"{lf}_{role}"), 0) == row["correct"]

    def test_tsv_header(self):
        tsv = confusion_to_tsv({("Magn_b", "Magn_b"): 2})
        assert tsv.splitlines()[0].split("\t") == ["gold\\pred", "Magn_b", MISSED, SPURIOUS]


class TestSpearman:
    def test_perfect(self):
        assert spearman_rho([1, 2, 3], [10, 20, 30]) == 1.0

    def test_reversed(self):
        assert spearman_rho([1, 2, 3], [30, 20, 10]) == -1.0

    def test_constant(self):
        assert spearman_rho([1, 1, 1], [1, 2, 3]) is None

    def test_tie_ranks(self):
        np.testing.assert_array_equal(rankdata([10, 20, 20, 30]), [1, 2.5, 2.5, 4])

    def test_against_oracles(self, rng):
        for _ in range(200):
            n = int(rng.integers(3, 12))
            x = rng.integers(0, 5, size=n).tolist()
            y = rng.integers(0, 5, size=n).tolist()
            if len(set(x)) < 2 or len(set(y)) < 2:
                continue
            rho = spearman_rho(x, y)
            assert abs(rho - rank_spearman(x, y)) <= 1e-12
            assert abs(rho - scipy.stats.spearmanr(x, y).statistic) <= 1e-12

    def test_monotone_invariance(self, rng):
        x, y = rng.normal(size=20), rng.normal(size=20)
        assert spearman_rho(np.exp(x), y ** 3) == pytest.approx(spearman_rho(x, y), abs=1e-12)


class TestReport:
    def test_evaluate(self):
        gold = [[Span(0, 0, "Magn", "c"), Span(1, 1, "Magn", "b")], [Span(0, 0, "Oper1", "c")]]
        pred = [[Span(0, 0, "Magn", "c"), Span(1, 1, "Magn", "b")], []]
        report = evaluate(["Magn", "Oper1"], ["Magn", "Magn"], gold, pred, {"Magn": 10, "Oper1": 2})
        assert report.sentence_accuracy == 0.5
        assert report.macro_f1_by_role == pytest.approx(2 / 3)
        assert report.spearman_rho == 1.0
        d = report.to_dict()
        assert d["macro_f1"] == report.macro_f1_by_role
        assert set(d["per_label"]) == {"Magn_b", "Magn_c", "Oper1_c"}

    def test_aggregate(self):
        out = aggregate_runs([{"f1": 0.5}, {"f1": 0.7}])
        assert out["f1"]["mean"] == pytest.approx(0.6)
        assert out["f1"]["std"] == pytest.approx(math.sqrt(0.02), abs=1e-12)

    def test_aggregate_single(self):
        assert aggregate_runs([{"f1": 0.4}])["f1"] == {"mean": 0.4, "std": 0.0}
