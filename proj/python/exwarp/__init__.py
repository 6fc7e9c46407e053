"""Python bindings for the exwarp frame-scheduling library."""

import json

from ._exwarp import (
    DimensionError,
    Episode,
    ExwarpError,
    FormatError,
    SchedulerError,
    ValidationError,
    config_hash,
    families,
    latency_slots,
    load_dataset,
    psnr,
    render_family,
    run_command,
    run_episode,
    save_dataset,
    speed_sweep_episode,
    ssim,
    total_latency_ms,
)
from ._exwarp import train as _train


def train(episodes, config=None):
    """Train a policy on `episodes`; `config` uses the same keys as the CLI config file."""
    return _train(list(episodes), json.dumps(config or {}))


__all__ = [
    "DimensionError",
    "Episode",
    "ExwarpError",
    "FormatError",
    "SchedulerError",
    "ValidationError",
    "config_hash",
    "families",
    "latency_slots",
    "load_dataset",
    "psnr",
    "render_family",
    "run_command",
    "run_episode",
    "save_dataset",
    "speed_sweep_episode",
    "ssim",
    "total_latency_ms",
    "train",
]
