# Copyright 2026 The fairlds Authors
# SPDX-License-Identifier: Apache-2.0
"""Latent distribution shifting: balanced subgroup sampling in a generator's latent space."""

from ._fairlds import (
    LdsError,
    default_config,
    edit,
    fairness_discrepancy,
    imbalance_score,
    kl_divergence,
    read_latent_file,
    sample_fair,
    write_latent_file,
)

__all__ = [
    "LdsError",
    "default_config",
    "edit",
    "fairness_discrepancy",
    "imbalance_score",
    "kl_divergence",
    "read_latent_file",
    "sample_fair",
    "write_latent_file",
]
