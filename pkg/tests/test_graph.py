import numpy as np
import pytest

from conftest import random_graph
from g2c.graph import (
    ROOT,
    DependencyGraph,
    LabelVocabulary,
    VocabularyError,
    build_label_vocabulary,
    build_relation_matrix,
    relation_onehot_dim,
    validate_graph,
)
from oracles import brute_force_relations


class TestVocabulary:
    def test_lexicographic(self):
        g = DependencyGraph(2, ((ROOT, 0, "obj"), (0, 1, "nsubj")))
        vocab = build_label_vocabulary([g])
        assert vocab.index == {"nsubj": 1, "obj": 2}
        assert len(vocab) == 2

    def test_single_label(self):
        vocab = build_label_vocabulary([DependencyGraph(1, ((ROOT, 0, "root"),))])
        assert vocab.index == {"root": 1}

    def test_repeated_labels_once(self):
        g = DependencyGraph(3, ((ROOT, 0, "root"), (0, 1, "dep"), (0, 2, "dep")))
        assert build_label_vocabulary([g, g]).labels == ("dep", "root")

    def test_empty_corpus(self):
        with pytest.raises(ValueError):
            build_label_vocabulary([])

    def test_unknown_label(self):
        vocab = LabelVocabulary(("a",))
        with pytest.raises(VocabularyError):
            vocab.lookup("b")
        assert vocab.lookup("b", strict=False) == 0


@pytest.mark.parametrize("n_labels,expected", [(2, 5), (1, 3), (37, 75)])
def test_relation_onehot_dim(n_labels, expected):
    assert relation_onehot_dim(LabelVocabulary(tuple(f"l{i}" for i in range(n_labels)))) == expected


class TestRelationMatrix:
    def test_empty_edges(self):
        R = build_relation_matrix(DependencyGraph(1, ()), LabelVocabulary(("x",)), 3)
        np.testing.assert_array_equal(R, np.zeros((3, 3), dtype=int))

    def test_single_edge(self):
        vocab = LabelVocabulary(("nsubj", "obj"))
        R = build_relation_matrix(DependencyGraph(2, ((0, 1, "obj"),)), vocab, 4)
        expected = np.zeros((4, 4), dtype=int)
        expected[1, 2] = 2
        expected[2, 1] = 4
        np.testing.assert_array_equal(R, expected)

    def test_three_token_sentence(self):
        g = DependencyGraph(3, ((ROOT, 1, "root"), (1, 0, "nsubj"), (1, 2, "obj")))
        vocab = build_label_vocabulary([g])
        R = build_relation_matrix(g, vocab)
        np.testing.assert_array_equal(R, brute_force_relations(g, vocab))
        assert R[0, 2] == vocab.index["root"]
        assert R[4].tolist() == [0] * 5 and R[:, 4].tolist() == [0] * 5

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            build_relation_matrix(DependencyGraph(2, ()), LabelVocabulary(("a",)), 5)

    def test_unknown_label_strict(self):
        with pytest.raises(VocabularyError):
            build_relation_matrix(DependencyGraph(1, ((ROOT, 0, "zzz"),)), LabelVocabulary(("a",)))

    def test_unknown_label_lenient(self):
        R = build_relation_matrix(DependencyGraph(1, ((ROOT, 0, "zzz"),)), LabelVocabulary(("a",)), strict=False)
        assert not R.any()

    def test_properties_on_random_graphs(self, rng):
        labels = ("amod", "dep", "nsubj", "obj")
        vocab = LabelVocabulary(labels)
        G = len(labels)
        for _ in range(200):
            g = random_graph(rng, int(rng.integers(1, 12)), labels)
            R = build_relation_matrix(g, vocab)
            assert np.all(np.diag(R) == 0)
            fwd = (R >= 1) & (R <= G)
            back = R > G
            assert np.all(R.T[fwd] == R[fwd] + G)
            assert np.all(R.T[back] == R[back] - G)
            assert np.count_nonzero(R) == 2 * len(g.edges)


class TestValidateGraph:
    def test_tree_ok(self):
        g = DependencyGraph(3, ((ROOT, 1, "root"), (1, 0, "nsubj"), (1, 2, "obj")))
        assert validate_graph(g) == []

    def test_multiple_heads(self):
        g = DependencyGraph(2, ((ROOT, 0, "root"), (0, 1, "a"), (ROOT, 1, "b")))
        assert "multiple heads at index 1" in validate_graph(g)

    def test_missing_root(self):
        g = DependencyGraph(2, ((1, 0, "a"), (0, 1, "b")))
        assert "missing root" in validate_graph(g)

    def test_out_of_range(self):
        g = DependencyGraph(1, ((ROOT, 0, "root"), (5, 0, "x")))
        problems = validate_graph(g)
        assert any("out of range" in p for p in problems)
