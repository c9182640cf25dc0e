import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from inferlab.metrics import accuracy, batch_metrics, mean_std, mse, psnr, psnr_from_mse, ssim
from inferlab.models import build_mlp
from inferlab.data import TabularDataset, synth_tabular

C1 = (0.01 * 255) ** 2


def test_mse_examples():
    x = np.random.default_rng(0).random((4, 4))
    assert mse(x, x) == 0
    assert mse(np.zeros((3, 3)), np.ones((3, 3))) == 65025
    assert mse(np.array([0.0, 0.0]), np.array([1.0, 0.0])) == 32512.5
    with pytest.raises(ValueError):
        mse(np.zeros(3), np.zeros(4))


@pytest.mark.parametrize("m, db", [(65.025, 30.0), (65025, 0.0), (650.25, 20.0)])
def test_psnr_examples(m, db):
    assert psnr_from_mse(m) == pytest.approx(db, abs=1e-9)


def test_psnr_identical_is_inf():
    x = np.ones((2, 2)) * 0.3
    assert psnr(x, x) == math.inf


def test_ssim_examples():
    x = np.random.default_rng(1).random((16, 16))
    assert ssim(x, x) == pytest.approx(1.0, abs=1e-12)
    assert ssim(np.zeros((12, 12)), np.ones((12, 12))) == pytest.approx(C1 / (65025 + C1), rel=1e-9)
    c = np.full((11, 11), 100 / 255)
    assert ssim(c, c) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        ssim(np.zeros((10, 12)), np.zeros((10, 12)))


def test_batch_metric_examples():
    rng = np.random.default_rng(2)
    a = rng.random((3, 12, 12))
    rec = batch_metrics(a, a)
    assert rec.mse == 0 and rec.ssim == pytest.approx(1.0) and rec.n_images == 3
    pair = batch_metrics(np.stack([a[0], np.zeros((12, 12))]), np.stack([a[0], np.ones((12, 12))]))
    assert pair.ssim == pytest.approx((1 + C1 / (65025 + C1)) / 2, rel=1e-9)
    one = batch_metrics(a[:1], a[1:2])
    assert one.mse == mse(a[0], a[1]) and one.ssim == ssim(a[0], a[1]) and one.psnr == psnr(a[0], a[1])
    with pytest.raises(ValueError):
        batch_metrics(a, a[:2])


def test_mean_std_examples():
    m, s = mean_std([0.7, 0.9])
    assert m == pytest.approx(0.8) and s == pytest.approx(math.sqrt(0.02), rel=1e-12)
    assert mean_std([0.4]) == (0.4, 0.0)
    with pytest.raises(ValueError):
        mean_std([])


def test_accuracy_all_correct():
    ds, _ = synth_tabular(30, 0)
    model = build_mlp(ds.records.shape[1], 2, 0)
    pred = model.predict(ds)
    relabeled = TabularDataset(ds.records, pred, ds.schema)
    assert accuracy(model, relabeled) == 1.0


img = arrays(np.float64, (12, 12), elements=st.floats(0, 1))


@settings(max_examples=40, deadline=None)
@given(img, img)
def test_ssim_symmetric_and_bounded(x, y):
    a, b = ssim(x, y), ssim(y, x)
    assert abs(a - b) <= 1e-12
    assert a <= 1 + 1e-12


@settings(max_examples=40, deadline=None)
@given(img, img)
def test_psnr_mse_consistency(x, y):
    m = mse(x, y)
    if m > 0:
        assert psnr(x, y) == pytest.approx(10 * math.log10(65025 / m), rel=1e-9)
