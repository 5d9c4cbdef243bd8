import numpy as np
import pytest

from g2c.checkpoint import CheckpointFormatError, load_checkpoint, save_checkpoint
from g2c.config import RunConfig
from g2c.model import G2CModel
from g2c.synthetic import overfit_corpus, split_corpus
from g2c.tensor import Tensor
from g2c.training import Adam, Trainer, TrainingError, evaluate_model, run_training, warmup_lr

SMALL = dict(n_layers=1, n_heads=2, head_dim=4, ffn_dim=16, max_len=16, batch_size=8)


@pytest.fixture(scope="module")
def corpus():
    return split_corpus(overfit_corpus(n_sentences=40, seed=3))


def make_model(train, **kw):
    config = RunConfig(**{**SMALL, **kw})
    return G2CModel.create(config, train, ["AntiMagn", "Magn", "Oper1", "Real1"]), config


class TestAdam:
    def test_first_step_is_lr_times_sign(self):
        w = Tensor(np.array([1.0, -2.0, 3.0]), requires_grad=True)
        w.grad = np.array([0.5, -4.0, 0.0])
        Adam({"w": w}, lr=0.1).step()
        np.testing.assert_allclose(w.data, [0.9, -1.9, 3.0], atol=1e-6)

    def test_quadratic_converges(self):
        w = Tensor(np.array([5.0]), requires_grad=True)
        opt = Adam({"w": w}, lr=0.1)
        for _ in range(500):
            w.grad = 2 * w.data
            opt.step()
        assert abs(w.data[0]) < 1e-2


class TestWarmup:
    def test_ramp_then_constant(self):
        assert [warmup_lr(s, 1.0, 4) for s in range(6)] == [0.25, 0.5, 0.75, 1.0, 1.0, 1.0]

    def test_no_warmup(self):
        assert warmup_lr(0, 0.3, 0) == 0.3

    def test_default_is_ten_percent(self):
        assert RunConfig(epochs=20).resolved_warmup(5) == 10
        assert RunConfig(warmup_steps=3).resolved_warmup(5) == 3


class TestTrainer:
    def test_loss_decreases(self, corpus):
        train, _, _ = corpus
        model, config = make_model(train, epochs=15, learning_rate=3e-3)
        _, result = run_training(model, config, train)
        assert result.history[-1]["loss"] < result.history[0]["loss"]
        assert result.best_epoch == 15

    def test_deterministic(self, corpus):
        train, dev, _ = corpus

        def history():
            model, config = make_model(train, epochs=3)
            return run_training(model, config, train, dev)[1].history

        assert history() == history()

    def test_early_stopping(self, corpus):
        train, dev, _ = corpus
        model, config = make_model(train, epochs=200, patience=1, learning_rate=1e-6)
        _, result = run_training(model, config, train, dev)
        assert result.stopped_early
        keys = [(h["dev_macro_f1"], h["dev_sentence_accuracy"]) for h in result.history]
        assert keys[-1] <= max(keys[:-1])
        assert len(result.history) == result.best_epoch + 1

    def test_non_finite_loss(self, corpus):
        train, _, _ = corpus
        model, config = make_model(train, epochs=1)
        model.params["head.sent.b"].data[0] = np.nan
        with pytest.raises(TrainingError):
            run_training(model, config, train)

    def test_empty_train(self, corpus):
        model, config = make_model(corpus[0])
        with pytest.raises(TrainingError):
            Trainer(model, config).fit([])


class TestCheckpoint:
    def test_round_trip(self, corpus, tmp_path):
        train, dev, _ = corpus
        model, config = make_model(train)
        save_checkpoint(tmp_path / "m.g2ck", model, config, meta={"epoch": 0})
        ckpt = load_checkpoint(tmp_path / "m.g2ck")
        for k, p in model.params.items():
            assert np.array_equal(ckpt.model.params[k].data.astype(np.float32), p.data.astype(np.float32))
        assert ckpt.run_config == config and ckpt.meta == {"epoch": 0}
        snap = model.with_params({k: p.data.astype(np.float32) for k, p in model.params.items()})
        assert [p.tags for p in snap.predict(dev)] == [p.tags for p in ckpt.model.predict(dev)]

    def test_bad_magic(self, tmp_path):
        (tmp_path / "x").write_bytes(b"NOPE" + bytes(20))
        with pytest.raises(CheckpointFormatError, match="magic"):
            load_checkpoint(tmp_path / "x")

    def test_wrong_version(self, corpus, tmp_path):
        model, config = make_model(corpus[0])
        save_checkpoint(tmp_path / "m", model, config)
        raw = bytearray((tmp_path / "m").read_bytes())
        raw[4] = 9
        (tmp_path / "m").write_bytes(bytes(raw))
        with pytest.raises(CheckpointFormatError, match="version"):
            load_checkpoint(tmp_path / "m")

    def test_truncated(self, corpus, tmp_path):
        model, config = make_model(corpus[0])
        save_checkpoint(tmp_path / "m", model, config)
        raw = (tmp_path / "m").read_bytes()
        (tmp_path / "m").write_bytes(raw[:-4])
        with pytest.raises(CheckpointFormatError):
            load_checkpoint(tmp_path / "m")

    def test_resume_matches_continuous(self, corpus, tmp_path):
        train, _, _ = corpus
        model, config = make_model(train)
        batch = model.collate([model.encode_sentence(s) for s in train[:8]])
        # Start from float32-representable weights so the save is lossless.
        model = model.with_params({k: p.data.astype(np.float32) for k, p in model.params.items()})

        trainer = Trainer(model, config, warmup_steps=2)
        trainer.train_step(batch)
        save_checkpoint(tmp_path / "m", model, config, optimizer=trainer.optimizer.state_dict(),
                        rng_state=trainer.rng.bit_generator.state)
        trainer.train_step(batch)

        ckpt = load_checkpoint(tmp_path / "m")
        second = Trainer(ckpt.model, config, warmup_steps=2)
        second.load_state(ckpt.optimizer, ckpt.rng_state)
        second.train_step(batch)
        diff = max(np.abs(model.params[k].data - ckpt.model.params[k].data).max() for k in model.params)
        assert diff <= 1e-6

    def test_eval_reproduces_dev_metric(self, corpus, tmp_path):
        train, dev, _ = corpus
        model, config = make_model(train, epochs=4, learning_rate=3e-3)
        path = tmp_path / "best.g2ck"
        trainer, result = run_training(model, config, train, dev,
                                       on_improve=lambda e, t: save_checkpoint(path, t.model, config))
        report, _ = evaluate_model(load_checkpoint(path).model, dev)
        best = result.history[result.best_epoch - 1]
        assert report.macro_f1_by_role == best["dev_macro_f1"]
        assert report.sentence_accuracy == best["dev_sentence_accuracy"]
