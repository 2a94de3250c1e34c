import math

import numpy as np
import pytest

import prognosis as pg


def test_losses_and_total():
    assert pg.cross_entropy_loss([0.5], [1.0]) == pytest.approx(math.log(2.0), abs=1e-6)
    assert pg.cross_entropy_loss([0.9, 0.1], [1.0, 0.0]) == pytest.approx(0.10536, abs=1e-5)
    assert pg.mse_loss([3.0], [5.0]) == 4.0
    assert pg.mse_loss([1.0, 2.0], [2.0, 4.0]) == 2.5
    ce, mse, total = pg.total_loss(0.25, 4.0)
    assert total == ce + mse
    with pytest.raises(pg.PrognosisError, match="EmptyBatch"):
        pg.mse_loss([], [])


def test_challenge_metric_and_roc():
    scores = [0.9, 0.8, 0.7, 0.2, 0.1]
    labels = [1, 1, 0, 1, 0]
    assert pg.challenge_metric(scores, labels) == pytest.approx(2 / 3)
    points = pg.roc_points(scores, labels)
    assert math.isinf(points[0][0])
    assert len(points) == 6
    assert pg.accuracy([1, 1, 0, 0], [1, 0, 0, 0]) == 0.75
    with pytest.raises(pg.PrognosisError, match="SingleClassLabels"):
        pg.challenge_metric([0.1, 0.2], [1, 1])


def test_filter_and_resampler():
    mags = pg.bandpass_magnitude(0.5, 35.0, 4, 100.0, np.array([0.0, 0.5, 10.0, 35.0]))
    assert mags[0] < 1e-12
    assert mags[1] == pytest.approx(1 / math.sqrt(2), abs=0.01)
    assert mags[2] == pytest.approx(1.0, abs=0.02)
    assert mags[3] == pytest.approx(1 / math.sqrt(2), abs=0.01)
    assert pg.butterworth_bandpass(0.5, 35.0, 4, 100.0).shape == (4, 5)

    t = np.arange(2500) / 250.0
    y = pg.resample(np.sin(2 * math.pi * 5.0 * t), 250.0, 100.0)
    assert y.shape == (1000,)
    spectrum = np.abs(np.fft.rfft(y))
    assert np.argmax(spectrum) * 100.0 / len(y) == pytest.approx(5.0, abs=100.0 / len(y))
    scaled = pg.minmax_rescale(np.array([2.0, 4.0, 3.0]))
    assert list(scaled) == [0.0, 1.0, 0.5]


def test_montage_and_architecture():
    pairs = pg.montage()
    assert len(pairs) == 18
    assert pairs[0] == ("Fp1", "F7")
    assert pg.receptive_field("entry4") == (2970, 2430)
    cfg = pg.model_config("entry4")
    assert cfg["tokens_per_channel"] == 12
    assert cfg["n_bipolar_channels"] * cfg["tokens_per_channel"] + 2 == 218


def test_synthesize_preprocess_forward(tmp_path):
    meta, recs = pg.synthesize_patient("poor", seed=3, duration_s=310.0, patient_id="py1", out_dir=tmp_path / "py1")
    assert meta["outcome"] == "Poor" and meta["cpc"] >= 3
    assert recs[0]["samples"].shape == (19, 310 * 250)

    header = next((tmp_path / "py1").glob("*.hdr.json"))
    back = pg.load_recording(header)
    assert np.array_equal(back["samples"], recs[0]["samples"])

    segments = pg.preprocess(header)
    assert segments.shape == (1, pg.BIPOLAR_CHANNELS, pg.SEGMENT_SAMPLES)
    assert segments.dtype == np.float32
    assert np.abs(segments).max() <= 1.0

    model = pg.Model.init("desk", seed=1)
    assert model.n_parameters == 66178
    out = model.forward(segments[0])
    assert 0.0 <= out["poor_prob"] <= 1.0
    assert 1 <= out["cpc_pred"] <= 5

    ckpt = tmp_path / "m.ckpt"
    model.save(ckpt)
    again = pg.Model.load(ckpt).forward(segments[0])
    assert again["poor_prob"] == pytest.approx(out["poor_prob"], abs=1e-5)

    pred = model.predict_patient(tmp_path / "py1")
    assert pred["patient_id"] == "py1" and pred["n_segments_used"] == 1

    with pytest.raises(ValueError):
        model.forward(np.zeros((18, 10), dtype=np.float32))


def test_split_and_gradcheck():
    patients = [(f"p{i}", 1 + i % 5) for i in range(10)]
    train, val = pg.split_patients(patients, 0.8, 4)
    assert len(train) + len(val) == 10 and not set(train) & set(val)
    cases = pg.gradcheck(seed=2, include_model=False)
    assert cases
    assert all(passed for _, _, _, passed in cases)
