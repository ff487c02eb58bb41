"""Spin-bath decoherence, pointer states and claim licensing, plus a toy fringe pipeline."""

__version__ = "0.1.0"

from .errors import NumericGuard  # noqa: E402
from .spinbath import (  # noqa: E402
    Direction,
    EnvironmentSpec,
    EnvQubitSpec,
    ModelSpec,
    QubitAmplitudes,
    decoherence_factor,
    decoherence_series,
    env_random,
    reduced_state,
)

__all__ = [
    "Direction",
    "EnvQubitSpec",
    "EnvironmentSpec",
    "ModelSpec",
    "NumericGuard",
    "QubitAmplitudes",
    "decoherence_factor",
    "decoherence_series",
    "env_random",
    "reduced_state",
]
