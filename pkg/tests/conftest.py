from pathlib import Path

import pytest

from cans.cli import default_profile
from cans.model import DetectionModel, VideoStream
from cans.optimizer import ProblemInstance
from cans.profiler import load_instance

from instances import MNV1_COEFFS


@pytest.fixture
def profile_path() -> Path:
    return Path(default_profile())


@pytest.fixture
def net_instance(profile_path) -> ProblemInstance:
    return load_instance(profile_path)


@pytest.fixture
def stream30() -> VideoStream:
    return VideoStream(id=1, framerate=30, qos=1.0, deadline=0.08)


@pytest.fixture
def mnv1() -> DetectionModel:
    proc = {360: 0.003, 540: 0.005, 720: 0.010, 900: 0.015, 1080: 0.020}
    return DetectionModel(1, proc, MNV1_COEFFS, name="mobilenet-v1")
