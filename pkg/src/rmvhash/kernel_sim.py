"""Gaussian-RBF kernelized similarity between landmarks and samples.

A kernelized similarity matrix K^(m) is the rectangular R x N matrix of RBF
similarities between R landmark objects and the N samples of view m.
"""

from dataclasses import dataclass, field

import numpy as np

from . import core_math


@dataclass(frozen=True)
class KernelLandmarks:
    """R landmark objects, stored as one (R, d_m) block per view.

    Row r of every block refers to the same underlying landmark object.
    """

    blocks: tuple            # M arrays, each (R, d_m)
    mode: str = "kmeans"

    @property
    def R(self):
        return self.blocks[0].shape[0]

    def concatenated(self):
        return np.hstack(self.blocks)


@dataclass
class KernelConfig:
    sigmas: tuple = ()            # one per view
    sigma_concat: float = 0.0
    self_tuning_k: int = 7


def select_kernel_landmarks(ds, R, mode="kmeans", seed=0, kmeans_iters=25):
    """Pick R landmark objects from a dataset.

    uniform-sample mode takes R training samples (all views of each);
    kmeans mode clusters the concatenated feature space and splits the
    centers back into per-view blocks.
    """
    n = ds.n_samples
    if R > n:
        raise ValueError(f"cannot select {R} landmarks from {n} samples")
    if mode in ("uniform", "uniform-sample"):
        rng = np.random.default_rng(seed)
        idx = rng.choice(n, size=R, replace=False)
        blocks = tuple(v[:, idx].T.copy() for v in ds.views)
        return KernelLandmarks(blocks=blocks, mode="uniform-sample")
    if mode == "kmeans":
        concat = ds.concatenated().T                     # (N, d)
        centers = core_math.kmeans(concat, R, max_iters=kmeans_iters, seed=seed).centers
        blocks = []
        offset = 0
        for d in ds.dims:
            blocks.append(centers[:, offset:offset + d].copy())
            offset += d
        return KernelLandmarks(blocks=tuple(blocks), mode="kmeans")
    raise ValueError(f"unknown kernel landmark mode {mode!r}")


def _dists(points, landmarks):
    d2 = (
        np.sum(points ** 2, axis=1)[:, None]
        - 2.0 * points @ landmarks.T
        + np.sum(landmarks ** 2, axis=1)[None, :]
    )
    return np.sqrt(np.maximum(d2, 0.0))


def self_tuning_sigma(view, z_view, k_st=7):
    """Self-tuned bandwidth: median over samples of the distance to the
    k_st-th nearest landmark."""
    z_view = np.asarray(z_view, dtype=float)
    if k_st > z_view.shape[0]:
        raise ValueError(f"k_st={k_st} exceeds R={z_view.shape[0]}")
    d = _dists(np.asarray(view, dtype=float).T, z_view)
    kth = np.sort(d, axis=1)[:, k_st - 1]
    sigma = float(np.median(kth))
    if sigma <= 0:
        raise ValueError("degenerate data: self-tuned bandwidth is zero")
    return sigma


def build_kernel_matrix(view, z_view, sigma):
    """R x N matrix with entries exp(-||z_r - x_i||^2 / (2 sigma^2))."""
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    view = np.asarray(view, dtype=float)
    z_view = np.asarray(z_view, dtype=float)
    if view.shape[0] != z_view.shape[1]:
        raise ValueError(
            f"view dim {view.shape[0]} != landmark dim {z_view.shape[1]}"
        )
    d = _dists(z_view, view.T)   # (R, N)
    return np.exp(-(d ** 2) / (2.0 * sigma ** 2))


def tune_config(ds, landmarks, self_tuning_k=7):
    """Per-view self-tuned bandwidths plus a concatenated-space bandwidth."""
    sigmas = tuple(
        self_tuning_sigma(v, z, self_tuning_k)
        for v, z in zip(ds.views, landmarks.blocks)
    )
    sigma_concat = self_tuning_sigma(
        ds.concatenated(), landmarks.concatenated(), self_tuning_k
    )
    return KernelConfig(
        sigmas=sigmas, sigma_concat=sigma_concat, self_tuning_k=self_tuning_k
    )


def build_view_kernels(ds, landmarks, cfg):
    """List of per-view R x N kernelized similarity matrices."""
    return [
        build_kernel_matrix(v, z, s)
        for v, z, s in zip(ds.views, landmarks.blocks, cfg.sigmas)
    ]


def query_kernel_vector(x_views, landmarks, cfg, mode="concat"):
    """Length-R kernel vector for one query given as a list of M view vectors.

    concat mode: RBF over the concatenated feature space with sigma_concat.
    view-sum mode: sum of per-view kernels, matching K = sum_m K^(m).
    """
    if len(x_views) != len(landmarks.blocks):
        raise ValueError(
            f"query has {len(x_views)} views, expected {len(landmarks.blocks)}"
        )
    x_views = [np.asarray(x, dtype=float).ravel() for x in x_views]
    for m, (x, z) in enumerate(zip(x_views, landmarks.blocks)):
        if x.size != z.shape[1]:
            raise ValueError(f"view {m}: query dim {x.size} != landmark dim {z.shape[1]}")
    if mode == "concat":
        x = np.concatenate(x_views)
        z = landmarks.concatenated()
        d2 = np.sum((z - x) ** 2, axis=1)
        return np.exp(-d2 / (2.0 * cfg.sigma_concat ** 2))
    if mode == "view-sum":
        out = np.zeros(landmarks.R)
        for x, z, s in zip(x_views, landmarks.blocks, cfg.sigmas):
            d2 = np.sum((z - x) ** 2, axis=1)
            out += np.exp(-d2 / (2.0 * s ** 2))
        return out
    raise ValueError(f"unknown query kernel mode {mode!r}")
