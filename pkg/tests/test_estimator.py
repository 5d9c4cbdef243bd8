import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from g2c import G2CTagger
from g2c.synthetic import overfit_corpus, split_corpus

SMALL = dict(n_layers=1, n_heads=2, head_dim=4, ffn_dim=16, max_len=16, batch_size=8, epochs=3)


@pytest.fixture(scope="module")
def corpus():
    return split_corpus(overfit_corpus(n_sentences=40, seed=5))


@pytest.fixture(scope="module")
def fitted(corpus):
    train, dev, _ = corpus
    return G2CTagger(**SMALL).fit(train, eval_set=dev)


class TestParams:
    def test_get_set_params(self):
        est = G2CTagger(head_dim=8)
        assert est.get_params()["head_dim"] == 8
        est.set_params(model_variant="baseline")
        assert est.run_config().model_variant == "baseline"

    def test_clone(self):
        est = clone(G2CTagger(seed=3, epochs=7))
        assert est.seed == 3 and est.epochs == 7

    def test_bad_variant_on_fit(self, corpus):
        with pytest.raises(ValueError, match="model_variant"):
            G2CTagger(model_variant="bert").fit(corpus[0])


class TestFitted:
    def test_attributes(self, fitted):
        assert list(fitted.classes_) == ["AntiMagn", "Magn", "Oper1", "Real1"]
        assert 1 <= fitted.best_epoch_ <= 3
        assert len(fitted.history_) >= fitted.best_epoch_

    def test_predict(self, fitted, corpus):
        test = corpus[2]
        preds = fitted.predict(test)
        assert len(preds) == len(test)
        for s, p in zip(test, preds):
            assert len(p.tags) == len(s.tokens)
            assert p.sentence_label in fitted.classes_

    def test_transform(self, fitted, corpus):
        Z = fitted.transform(corpus[2])
        assert Z.shape == (len(corpus[2]), 8)
        assert np.all(np.isfinite(Z))

    def test_score_in_unit_interval(self, fitted, corpus):
        assert 0.0 <= fitted.score(corpus[2]) <= 1.0

    def test_save_load(self, fitted, corpus, tmp_path):
        fitted.save(tmp_path / "m.g2ck")
        loaded = G2CTagger.load(tmp_path / "m.g2ck")
        assert loaded.get_params() == fitted.get_params()
        assert [p.tags for p in loaded.predict(corpus[2])] == [p.tags for p in fitted.predict(corpus[2])]

    def test_accepts_dicts(self, fitted, corpus):
        records = [s.to_record() for s in corpus[2]]
        assert len(fitted.predict(records)) == len(records)


class TestValidation:
    def test_not_fitted(self, corpus):
        with pytest.raises(NotFittedError):
            G2CTagger().predict(corpus[2])

    def test_empty(self):
        with pytest.raises(ValueError, match="empty"):
            G2CTagger(**SMALL).fit([])

    def test_missing_gold(self, corpus):
        rec = corpus[0][0].to_record()
        del rec["tags"]
        with pytest.raises(ValueError, match="gold"):
            G2CTagger(**SMALL).fit([rec])

    def test_bad_graph(self, corpus):
        rec = corpus[0][0].to_record()
        rec["deps"] = rec["deps"][1:]
        with pytest.raises(ValueError, match="graph"):
            G2CTagger(**SMALL).fit([rec])

    def test_string_input(self):
        with pytest.raises(TypeError):
            G2CTagger(**SMALL).fit("train.jsonl")

    def test_unknown_label(self, corpus):
        with pytest.raises(ValueError, match="inventory"):
            G2CTagger(**SMALL).fit(corpus[0], lf_labels=["Magn"])
