import json

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from cans.errors import InvariantError, ProfileFormatError, ProfileMissingError
from cans.model import accuracy_curve
from cans.profiler import (
    AccuracySample,
    fit_accuracy_curve,
    load_profiles,
    profiles_to_dict,
    read_samples_csv,
    save_profiles,
)

from instances import MNV1_COEFFS

LADDER = (360, 540, 720, 900, 1080)


def _samples(coeffs, rs=LADDER):
    c2, c1, c0 = coeffs
    return [AccuracySample(r, c2 * r * r + c1 * r + c0) for r in rs]


def test_fit_recovers_mobilenet_curve():
    fit = fit_accuracy_curve(_samples(MNV1_COEFFS))
    assert np.allclose(fit.coeffs, MNV1_COEFFS, rtol=0, atol=1e-6)
    assert fit.mse < 1e-9


def test_fit_constant():
    fit = fit_accuracy_curve([AccuracySample(r, 50.0) for r in (360, 720, 1080)])
    assert np.allclose(fit.coeffs, (0, 0, 50), atol=1e-9)


def test_fit_mse_matches_residuals():
    pts = [(360, 20.0), (540, 52.0), (720, 61.0), (1080, 55.0)]
    fit = fit_accuracy_curve([AccuracySample(r, a) for r, a in pts])
    # oracle: residuals of an independent lstsq solution in raw units
    V = np.array([[r * r, r, 1.0] for r, _ in pts])
    y = np.array([a for _, a in pts])
    ref, *_ = np.linalg.lstsq(V, y, rcond=None)
    resid = y - V @ ref
    assert fit.mse == pytest.approx(float(np.mean(resid**2)), rel=1e-6)
    assert np.allclose(fit.coeffs, ref, rtol=1e-6)


def test_fit_needs_three_distinct_resolutions():
    with pytest.raises(InvariantError, match="3 distinct"):
        fit_accuracy_curve([AccuracySample(360, 10), AccuracySample(360, 12), AccuracySample(720, 40)])


@settings(max_examples=200)
@given(
    st.floats(600, 1500),
    st.floats(50, 100),
    st.floats(5e-5, 3e-4),
)
def test_fit_round_trip_concave(vertex, peak, curvature):
    c2 = -curvature
    coeffs = (c2, -2 * c2 * vertex, peak + c2 * vertex**2)
    values = [accuracy_curve(coeffs, r) for r in LADDER]
    assume(all(0 < v < 100 for v in values))
    samples = _samples(coeffs)
    fit = fit_accuracy_curve(samples)
    assert np.allclose(fit.coeffs, coeffs, rtol=0, atol=1e-6)
    assert fit(720) == pytest.approx(accuracy_curve(coeffs, 720), abs=1e-6)


def test_read_samples_csv(tmp_path):
    p = tmp_path / "s.csv"
    p.write_text("resolution,accuracy\n360,22.4\n720,64.0\n1080,53.8\n")
    assert [s.resolution for s in read_samples_csv(p)] == [360, 720, 1080]
    p.write_text("360,abc\n")
    with pytest.raises(ProfileFormatError):
        read_samples_csv(p)


def test_load_fixture(net_instance):
    assert net_instance.K == 3 and net_instance.N == 3
    assert net_instance.models[0].accuracy_coeffs == MNV1_COEFFS
    assert net_instance.params.l_max == 0.08


def _doc(profile_path):
    return json.loads(profile_path.read_text())


def test_load_rejects_negative_framerate(profile_path, tmp_path):
    doc = _doc(profile_path)
    doc["streams"][1]["framerate"] = -30
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    with pytest.raises(InvariantError) as err:
        load_profiles(bad)
    assert err.value.field == "streams[1].framerate"


def test_load_rejects_missing_latency(profile_path, tmp_path):
    doc = _doc(profile_path)
    del doc["models"][2]["proc_latency"]["900"]
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    with pytest.raises(ProfileMissingError, match="900p") as err:
        load_profiles(bad)
    assert err.value.field == "models[2].proc_latency"


def test_load_rejects_duplicate_ids(profile_path, tmp_path):
    doc = _doc(profile_path)
    doc["models"][1]["id"] = 1
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    with pytest.raises(InvariantError, match="duplicate"):
        load_profiles(bad)


@pytest.mark.parametrize("text", ["{not json", "[]", '{"streams": 3, "models": []}'])
def test_load_rejects_malformed(tmp_path, text):
    bad = tmp_path / "bad.json"
    bad.write_text(text)
    with pytest.raises(ProfileFormatError):
        load_profiles(bad)


def test_load_rejects_unknown_keys(profile_path, tmp_path):
    doc = _doc(profile_path)
    doc["streams"][0]["fps"] = 30
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    with pytest.raises(ProfileFormatError, match="fps"):
        load_profiles(bad)


def test_missing_file(tmp_path):
    with pytest.raises(OSError):
        load_profiles(tmp_path / "nope.json")


def test_save_load_round_trip(profile_path, tmp_path):
    streams, models, params = load_profiles(profile_path)
    out = tmp_path / "copy.json"
    save_profiles(out, streams, models, params)
    again = load_profiles(out)
    assert again == (streams, models, params)
    assert profiles_to_dict(*again) == profiles_to_dict(streams, models, params)


def test_l_max_defaults_to_tightest_deadline(profile_path, tmp_path):
    doc = _doc(profile_path)
    del doc["params"]["l_max"]
    for s, d in zip(doc["streams"], (0.2, 0.05, 0.1)):
        s["deadline"] = d
    p = tmp_path / "p.json"
    p.write_text(json.dumps(doc))
    _, _, params = load_profiles(p)
    assert params.l_max == 0.05
