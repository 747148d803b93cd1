"""Linear baseline: training, decisions, gradients, persistence."""

import numpy as np
import pytest

from pglot import linear
from pglot.conv import Head
from pglot.errors import Corrupt, EmptyDataset, SpecMismatch
from pglot.features import FeatureSpec, featurize, featurize_matrix, ngram_vocab
from pglot.formats import FormatId
from pglot.linear import LinearTrainConfig, predict_linear, scores, train_linear
from pglot.synth import synth_donor


@pytest.fixture(scope="module")
def toy():
    """Linearly separable: PHP donors vs PNG donors."""
    pos = [synth_donor(FormatId.PHP, i, 500) for i in range(6)]
    neg = [synth_donor(FormatId.PNG, i, 700) for i in range(6)]
    spec = ngram_vocab(pos + neg, 64)
    x = featurize_matrix(pos + neg, spec)
    y = np.array([[1.0]] * 6 + [[0.0]] * 6)
    return spec, x, y


class TestTrain:
    def test_separable_reaches_full_accuracy(self, toy):
        spec, x, y = toy
        model, _ = train_linear(x, y, spec, Head.BINARY)
        preds = [predict_linear(model, x[i]) for i in range(len(x))]
        assert preds == [True] * 6 + [False] * 6

    def test_deterministic(self, toy):
        spec, x, y = toy
        a, _ = train_linear(x, y, spec, Head.BINARY)
        b, _ = train_linear(x, y, spec, Head.BINARY)
        assert np.array_equal(a.w, b.w) and np.array_equal(a.b, b.b)

    def test_empty_raises(self, toy):
        spec, x, y = toy
        with pytest.raises(EmptyDataset):
            train_linear(x[:0], y[:0], spec, Head.BINARY)

    def test_finite_difference_gradient(self):
        rng = np.random.default_rng(0)
        w = rng.standard_normal((2, 9))
        b = rng.standard_normal(2)
        x = rng.standard_normal((6, 9))
        y = rng.integers(0, 2, (6, 2)).astype(float)
        _, dw, db = linear.loss_and_grad(w, b, x, y, 0.01)
        eps = 1e-3
        worst = 0.0
        coords = [(arr, g) for arr, g in ((w, dw), (b, db))]
        for arr, g in coords:
            flat, gl = arr.ravel(), g.ravel()
            idxs = rng.choice(flat.size, size=min(50, flat.size), replace=False)
            for i in idxs:
                orig = flat[i]
                flat[i] = orig + eps
                lp, _, _ = linear.loss_and_grad(w, b, x, y, 0.01)
                flat[i] = orig - eps
                lm, _, _ = linear.loss_and_grad(w, b, x, y, 0.01)
                flat[i] = orig
                num = (lp - lm) / (2 * eps)
                worst = max(worst, abs(num - gl[i]) / max(abs(num), abs(gl[i]), 1e-10))
        assert worst < 1e-6, worst


class TestPredict:
    def test_zero_vector_gives_sigmoid_bias(self, toy):
        spec, x, y = toy
        model, _ = train_linear(x, y, spec, Head.BINARY)
        p = scores(model, np.zeros(spec.dim))
        expected = 1.0 / (1.0 + np.exp(-model.b))
        assert np.allclose(p, expected)

    def test_positive_scaling_never_flips_decisions(self, toy):
        spec, x, y = toy
        model, _ = train_linear(x, y, spec, Head.BINARY)
        scaled = linear.LinearModel(spec, model.head, model.w * 3.0, model.b * 3.0)
        for i in range(len(x)):
            assert predict_linear(model, x[i]) == predict_linear(scaled, x[i])
            margin_before = abs(scores(model, x[i])[0] - 0.5)
            margin_after = abs(scores(scaled, x[i])[0] - 0.5)
            assert margin_after >= margin_before - 1e-12

    def test_spec_mismatch(self, toy):
        spec, x, y = toy
        model, _ = train_linear(x, y, spec, Head.BINARY)
        with pytest.raises(SpecMismatch):
            scores(model, np.zeros(spec.dim + 1))

    def test_multilabel_head_returns_sets(self, toy):
        spec, x, _ = toy
        y = np.zeros((len(x), 12))
        y[:6, 9] = 1.0   # PHP slot
        y[6:, 3] = 1.0   # PNG slot
        model, _ = train_linear(x, y, spec, Head.MULTILABEL)
        out = predict_linear(model, x[0])
        assert out == {FormatId.PHP}


class TestPersistence:
    def test_roundtrip_byte_exact(self, toy):
        spec, x, y = toy
        model, _ = train_linear(x, y, spec, Head.BINARY)
        blob = linear.save_bytes(model)
        again = linear.load_bytes(blob)
        assert linear.save_bytes(again) == blob
        assert again.spec == model.spec

    def test_corrupt_rejected(self, toy):
        spec, x, y = toy
        model, _ = train_linear(x, y, spec, Head.BINARY)
        blob = bytearray(linear.save_bytes(model))
        blob[25] ^= 1
        with pytest.raises(Corrupt):
            linear.load_bytes(bytes(blob))

    def test_predictions_survive_roundtrip(self, toy, tmp_path):
        spec, x, y = toy
        model, _ = train_linear(x, y, spec, Head.BINARY)
        linear.save(model, tmp_path / "m.pglin")
        loaded = linear.load(tmp_path / "m.pglin")
        for i in range(len(x)):
            assert np.allclose(scores(model, x[i]), scores(loaded, x[i]))
