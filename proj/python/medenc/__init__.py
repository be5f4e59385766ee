# Copyright 2026 The medenc Authors
# SPDX-License-Identifier: Apache-2.0
"""Transformer encoder pre-training, fine-tuning and benchmark scoring."""

from ._medenc import (
    Checkpoint,
    CompatibilityError,
    ConfigError,
    ContractError,
    DataError,
    EncoderConfig,
    Error,
    FormatError,
    IndexError,
    IoError,
    ShapeError,
    TrainingError,
    Vocab,
    clean_text,
    gradcheck,
    lr_at,
    overall,
    round_half_up,
    run_cli,
    score,
)

__all__ = [
    "Checkpoint",
    "CompatibilityError",
    "ConfigError",
    "ContractError",
    "DataError",
    "EncoderConfig",
    "Error",
    "FormatError",
    "IndexError",
    "IoError",
    "ShapeError",
    "TrainingError",
    "Vocab",
    "clean_text",
    "gradcheck",
    "lr_at",
    "overall",
    "round_half_up",
    "run_cli",
    "score",
]
