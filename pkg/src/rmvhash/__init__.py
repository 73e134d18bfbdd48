"""Robust multi-view hashing with low-rank kernelized similarity recovery."""

from . import (
    anchor_graph,
    core_math,
    dataset,
    evaluation,
    hash_trainer,
    kernel_sim,
    lowrank_alm,
    model_io,
    oos_encoder,
)

__all__ = [
    "anchor_graph",
    "core_math",
    "dataset",
    "evaluation",
    "hash_trainer",
    "kernel_sim",
    "lowrank_alm",
    "model_io",
    "oos_encoder",
]
