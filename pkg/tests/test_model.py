import pytest
from hypothesis import given
from hypothesis import strategies as st

from cans.errors import DomainError, InvariantError, ProfileMissingError
from cans.model import (
    Assignment,
    DetectionModel,
    GlobalParams,
    VideoStream,
    accuracy,
    accuracy_curve,
    bitrate,
    end_to_end_latency,
    transmission_latency,
)

from instances import MNV1_COEFFS


@pytest.mark.parametrize(
    "r, alpha, expected",
    [(1080, 8, 9_331_200), (1, 1, 1), (360, 8, 1_036_800)],
)
def test_bitrate(r, alpha, expected):
    assert bitrate(r, alpha) == expected


@pytest.mark.parametrize("r, alpha", [(0, 8), (-1, 8), (360, 0)])
def test_bitrate_rejects_non_positive(r, alpha):
    with pytest.raises(DomainError):
        bitrate(r, alpha)


@given(st.integers(1, 5000), st.floats(0.1, 64))
def test_bitrate_is_quadratic(r, alpha):
    assert bitrate(2 * r, alpha) == 4 * bitrate(r, alpha)


def test_transmission_latency(stream30):
    assert transmission_latency(stream30, 1080, 100e6, 8) == pytest.approx(3.1104e-3, rel=1e-12)
    assert transmission_latency(stream30, 360, 100e6, 8) == pytest.approx(0.3456e-3, rel=1e-12)
    with pytest.raises(DomainError):
        transmission_latency(stream30, 0, 100e6, 8)
    with pytest.raises(DomainError):
        transmission_latency(stream30, 360, 0, 8)


def test_end_to_end_latency(stream30):
    m = DetectionModel(1, {360: 0.002, 720: 0.010, 1080: 0.020}, MNV1_COEFFS)
    assert end_to_end_latency(stream30, 1080, m, 100e6, 8) == pytest.approx(23.1104e-3, rel=1e-12)
    assert end_to_end_latency(stream30, 720, m, 20e6, 8) == pytest.approx(16.912e-3, rel=1e-12)


def test_end_to_end_rejects_unprofiled_resolution(stream30):
    m = DetectionModel(1, {360: 0.002, 720: 0.010}, MNV1_COEFFS)
    with pytest.raises(ProfileMissingError):
        end_to_end_latency(stream30, 1080, m, 100e6, 8)


def test_zero_processing_latency_rejected():
    with pytest.raises(InvariantError, match="proc_latency"):
        DetectionModel(1, {360: 0.0, 1080: 0.01}, MNV1_COEFFS)


def test_processing_latency_interpolates():
    m = DetectionModel(1, {360: 0.004, 720: 0.010}, MNV1_COEFFS)
    assert m.processing_latency(540) == pytest.approx(0.007)
    assert m.processing_latency(360) == 0.004


@pytest.mark.parametrize("r, expected", [(720, 64.038), (360, 22.422), (1080, 53.814)])
def test_accuracy_mobilenet_curve(r, expected):
    m = DetectionModel(1, {360: 0.01, 1080: 0.02}, MNV1_COEFFS)
    assert accuracy(m, r) == pytest.approx(expected, abs=1e-9)


def test_accuracy_clamps():
    assert accuracy_curve((0, 0, 150), 720) == 100.0
    assert accuracy_curve((0, 0, -5), 720) == 0.0


def test_accuracy_diminishing_gains_on_ladder():
    c2, c1, _ = MNV1_COEFFS
    assert -c1 / (2 * c2) == pytest.approx(829)
    values = [accuracy_curve(MNV1_COEFFS, r) for r in (360, 540, 720)]
    d1, d2 = values[1] - values[0], values[2] - values[1]
    assert d1 > d2 > 0


@given(
    st.floats(-1e-2, 1e-2),
    st.floats(-10, 10),
    st.floats(-500, 500),
    st.floats(1, 5000),
)
def test_accuracy_always_in_range(c2, c1, c0, r):
    assert 0.0 <= accuracy_curve((c2, c1, c0), r) <= 100.0


@given(st.integers(100, 2000), st.integers(1, 500), st.floats(1e6, 1e9))
def test_transmission_latency_monotone(r, dr, b):
    s = VideoStream(1, 25, 1, 0.1)
    assert transmission_latency(s, r + dr, b, 8) > transmission_latency(s, r, b, 8)
    assert transmission_latency(s, r, b * 1.5, 8) < transmission_latency(s, r, b, 8)


@pytest.mark.parametrize(
    "kwargs, field",
    [
        (dict(framerate=-30), "framerate"),
        (dict(qos=0), "qos"),
        (dict(deadline=0), "deadline"),
        (dict(resolution_ladder=()), "resolution_ladder"),
        (dict(resolution_ladder=(720, 360)), "resolution_ladder"),
    ],
)
def test_stream_invariants(kwargs, field):
    base = dict(id=1, framerate=30, qos=1, deadline=0.08)
    with pytest.raises(InvariantError) as err:
        VideoStream(**{**base, **kwargs})
    assert err.value.field == field


def test_model_requires_concave_curve():
    with pytest.raises(InvariantError, match="concave"):
        DetectionModel(1, {360: 0.01}, (0.0, 0.0, 50.0))


@pytest.mark.parametrize(
    "kwargs",
    [dict(alpha=0), dict(bandwidth=-1), dict(l_max=0), dict(reconfig_threshold=1.0),
     dict(iou_min=0), dict(omega=-1), dict(accuracy_units="permille")],
)
def test_params_invariants(kwargs):
    with pytest.raises(InvariantError):
        GlobalParams(**kwargs)


def test_params_defaults_match_experiment_setup():
    p = GlobalParams()
    assert (p.alpha, p.omega, p.l_max, p.reconfig_threshold, p.iou_min) == (8, 6, 0.08, 0.1, 0.7)


def test_assignment_accessors():
    a = Assignment(((720, 3), (360, 1)))
    assert a.resolutions == (720, 360)
    assert a.model_ids == (3, 1)
    assert len(a) == 2
