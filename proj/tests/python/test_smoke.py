"""Smoke tests for the Python bindings: every exposed operation runs end to
end on small inputs and returns sane shapes/values."""

import math

import numpy as np
import pytest

import longsiam as ls

ls.set_threads(1)


def test_nifti_roundtrip(tmp_path):
    vol = np.random.default_rng(0).random((7, 6, 5), dtype=np.float32)
    path = str(tmp_path / "v.nii.gz")
    ls.write_nifti(path, vol, spacing=(1.5, 2.0, 2.5))
    back, spacing = ls.read_nifti(path)
    assert back.shape == (7, 6, 5)
    assert np.array_equal(back, vol)
    assert spacing == pytest.approx((1.5, 2.0, 2.5))


def test_downscale_spline_shape_and_constant():
    vol = np.full((12, 10, 8), 0.625, dtype=np.float32)
    out = ls.downscale_spline(vol)
    assert out.shape == (6, 5, 4)
    assert np.allclose(out, 0.625, atol=1e-5)


def test_preprocess_pair():
    rng = np.random.default_rng(1)
    b = rng.random((20, 18, 14), dtype=np.float32)
    f = rng.random((20, 18, 14), dtype=np.float32)
    pb, pf = ls.preprocess_pair(b, f, target=[24, 20, 16])
    assert pb.shape == (12, 10, 8)
    assert pf.shape == (12, 10, 8)
    assert pb.min() >= 0.0 and pb.max() <= 1.0 + 1e-6


def test_augment_deterministic():
    vol = np.random.default_rng(2).random((16, 16, 12), dtype=np.float32)
    a1 = ls.augment_image(vol, seed=9)
    a2 = ls.augment_image(vol, seed=9)
    a3 = ls.augment_image(vol, seed=10)
    assert np.array_equal(a1, a2)
    assert a1.shape == vol.shape
    assert not np.array_equal(a1, a3)


def test_make_subject_bounds():
    vol = ls.make_subject(shape=[32, 32, 24], seed=3)
    assert vol.shape == (32, 32, 24)
    assert vol.min() >= 0.0 and vol.max() <= 1.0
    frac = float((vol > 0).mean())
    assert 0.1 < frac < 0.6


def test_generate_cohort(tmp_path):
    out = tmp_path / "cohort"
    n = ls.generate_cohort(str(out), preset="desk", n_stable=3, n_decline=2, seed=4)
    assert n == 5
    manifest = (out / "manifest.csv").read_text().strip().splitlines()
    assert manifest[0] == "subject_id,baseline_path,followup_path,label"
    assert len(manifest) == 6


def test_model_forward_and_features():
    model = ls.Model.build(input_shape=[16, 16, 16], filters=[2, 3, 4],
                           widths=[8, 6, 2], seed=5)
    assert model.input_shape == [16, 16, 16]
    rng = np.random.default_rng(5)
    b = rng.random((3, 16, 16, 16), dtype=np.float32)
    f = rng.random((3, 16, 16, 16), dtype=np.float32)
    probs = model.forward(b, f)
    assert probs.shape == (3, 2)
    assert np.allclose(probs.sum(axis=1), 1.0, atol=1e-5)
    assert probs.min() >= 0.0
    feats = model.features(b, f, stage="dense2_out")
    assert feats.shape == (3, 6)
    sub = model.features(b, f, stage="subtract_out")
    assert sub.shape == (3, 4 * 2 * 2 * 2)


def test_model_checkpoint_roundtrip(tmp_path):
    model = ls.Model.build(input_shape=[16, 16, 16], filters=[2, 2, 2],
                           widths=[8, 4, 2], seed=6)
    path = str(tmp_path / "m.ckpt")
    model.save(path)
    loaded = ls.Model.load(path)
    rng = np.random.default_rng(6)
    b = rng.random((2, 16, 16, 16), dtype=np.float32)
    f = rng.random((2, 16, 16, 16), dtype=np.float32)
    assert np.array_equal(model.forward(b, f), loaded.forward(b, f))
    assert loaded.parameter_count == model.parameter_count


def test_metrics():
    probs = np.array([[0.9, 0.1], [0.2, 0.8]], dtype=np.float32)
    onehot = np.array([[1.0, 0.0], [0.0, 1.0]], dtype=np.float32)
    ce = ls.crossentropy(probs, onehot)
    assert ce == pytest.approx(-(math.log(0.9) + math.log(0.8)) / 2, rel=1e-5)
    assert ls.accuracy(probs, [0, 1]) == 1.0
    assert ls.accuracy(probs, [1, 0]) == 0.0
    assert ls.msle(probs, onehot) > 0.0


def test_train_run_improves_separable_toy():
    rng = np.random.default_rng(7)
    n = 24
    b = rng.random((n, 16, 16, 16), dtype=np.float32)
    f = b.copy()
    labels = [i % 2 for i in range(n)]
    for i in range(n):
        if labels[i] == 1:
            f[i] *= 0.5  # class-1 follow-ups are globally dimmer
    model = ls.Model.build(input_shape=[16, 16, 16], filters=[2, 2, 2],
                           widths=[8, 4, 2], seed=7, dropout_rate=0.0)
    report = ls.train_run(model, b, f, labels, b[:8], f[:8], labels[:8],
                          epochs=12, batch_size=8, lr=1e-3, seed=7, augment=False)
    assert len(report) == 12
    assert report[-1]["train_loss"] < report[0]["train_loss"]
    assert report[-1]["train_acc"] >= 0.9


def test_tsne_separates_two_blobs():
    rng = np.random.default_rng(8)
    a = rng.normal(0.0, 0.05, size=(12, 4))
    bb = rng.normal(5.0, 0.05, size=(12, 4))
    x = np.vstack([a, bb])
    p = ls.input_affinities(x, perplexity=5.0)
    assert p.shape == (24, 24)
    assert p.sum() == pytest.approx(1.0, abs=1e-8)
    coords, kl = ls.tsne(x, perplexity=5.0, iterations=150, seed=8)
    assert coords.shape == (24, 2)
    assert math.isfinite(kl)
    ca, cb = coords[:12].mean(axis=0), coords[12:].mean(axis=0)
    spread = max(coords[:12].std(), coords[12:].std())
    assert np.linalg.norm(ca - cb) > 2.0 * spread
