"""Camera-network self-configuration: per-stream resolution and detector
selection under bandwidth and deadline constraints."""

from .errors import (
    CansError,
    DomainError,
    EnumerationCapError,
    FrameMismatchError,
    InvariantError,
    ProfileFormatError,
    ProfileMissingError,
    StartupInfeasibleError,
    UsageError,
)
from .model import (
    Assignment,
    DetectionModel,
    GlobalParams,
    VideoStream,
    accuracy,
    bitrate,
    end_to_end_latency,
    transmission_latency,
)
from .optimizer import (
    FeasibilityReport,
    Policy,
    ProblemInstance,
    objective,
    solve_bruteforce,
    solve_cans,
    solve_policy,
)

__version__ = "0.1.0"
