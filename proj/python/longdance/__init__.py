"""Music-conditioned long-term dance generation (C++ core)."""

import json

import torch  # noqa: F401  loads libtorch before the extension

from ._core import (
    ConfigError,
    InvalidArgument,
    LongdanceError,
    ParseError,
    ShapeError,
    TrainingDivergedError,
    beat_align,
    diversity,
    freezing_rate,
    frechet_distance,
    generate,
    joint_positions,
    kinematic_features,
    noise_schedule,
    q_sample,
    read_beats,
    read_motion,
    synth_dataset,
)
from . import _core

__all__ = [
    "ConfigError", "InvalidArgument", "LongdanceError", "ParseError", "ShapeError", "TrainingDivergedError",
    "beat_align", "default_config", "diversity", "evaluate", "freezing_rate", "frechet_distance", "generate",
    "joint_positions", "kinematic_features", "noise_schedule", "q_sample", "read_beats", "read_motion",
    "synth_dataset", "train",
]


def default_config(large=False):
    return json.loads(_core.default_config(large))


def train(config, out, on_step=None):
    """config: partial run config dict; must set data.manifest."""
    return _core.train(json.dumps(config), str(out), on_step)


def evaluate(generated, reference, music=(), skeleton="smpl24"):
    return json.loads(_core.evaluate([str(p) for p in generated], [str(p) for p in reference],
                                     [None if m is None else str(m) for m in music], skeleton))
