"""Out-of-sample encoding: exact inductive embedding over training neighbors
and the scalable prototype approximation over a small K-means base set."""

from dataclasses import dataclass

import numpy as np

from . import core_math


@dataclass(frozen=True)
class BaseSet:
    centers: np.ndarray      # (Z, d) in the concatenated feature space
    embeddings: np.ndarray   # (Z, P) pre-sign real embeddings
    sigma: float
    k_oos: int

    @property
    def Z(self):
        return self.centers.shape[0]


def _center_bandwidth(centers, k_st=7):
    z = centers.shape[0]
    if z == 1:
        return 1.0
    d2 = (
        np.sum(centers ** 2, axis=1)[:, None]
        - 2.0 * centers @ centers.T
        + np.sum(centers ** 2, axis=1)[None, :]
    )
    d = np.sqrt(np.maximum(d2, 0.0))
    # k-th nearest *other* center; column 0 is the center itself
    kth = np.sort(d, axis=1)[:, min(k_st, z - 1)]
    sigma = float(np.median(kth))
    return sigma if sigma > 0 else 1.0


def build_base_set(ds, model, Z, seed=0, k_oos=25, kmeans_iters=25):
    """Cluster the concatenated features into Z centers and store each
    center's pre-sign projection through the model's query kernel path."""
    from . import hash_trainer  # local import: model embedding path

    n = ds.n_samples
    if Z > n:
        raise ValueError(f"cannot build {Z} base centers from {n} samples")
    concat = ds.concatenated().T                     # (N, d)
    if Z == n:
        centers = concat.copy()
    else:
        centers = core_math.kmeans(concat, Z, max_iters=kmeans_iters, seed=seed).centers
    dims = ds.dims
    offsets = np.cumsum((0,) + dims)
    embeddings = np.empty((Z, model.W.shape[1]))
    for j in range(Z):
        x_views = [centers[j, offsets[m]:offsets[m + 1]] for m in range(len(dims))]
        embeddings[j] = hash_trainer.embed_query(model, x_views)
    return BaseSet(
        centers=centers,
        embeddings=embeddings,
        sigma=_center_bandwidth(centers),
        k_oos=min(k_oos, Z),
    )


def _weighted_embed(x_q, points, embeddings, k, sigma):
    x_q = np.asarray(x_q, dtype=float).ravel()
    d2 = np.sum((points - x_q) ** 2, axis=1)
    order = np.argsort(d2, kind="stable")[:k]
    w = np.exp(-d2[order] / sigma ** 2)
    total = w.sum()
    if total <= 0:
        # weights underflowed: deterministic nearest-neighbor fallback
        return embeddings[order[0]].astype(float).copy()
    return (w @ embeddings[order]) / total


def inductive_embed(x_q, X, Y, k, sigma):
    """Exact inductive embedding: Gaussian-weighted average of the embeddings
    of the k nearest training points.

    X is (N, d) in the concatenated feature space and Y is (N, P).
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if k > X.shape[0]:
        raise ValueError(f"k={k} exceeds N={X.shape[0]}")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    return _weighted_embed(x_q, X, Y, k, sigma)


def prototype_encode(x_q, base, full_sum=False):
    """Binary code from the base-set approximation; sign(0) = +1.

    Truncated to the k_oos nearest centers by default; full_sum uses all Z.
    """
    if base.Z < 1:
        raise ValueError("base set is empty")
    k = base.Z if full_sum else base.k_oos
    y = _weighted_embed(x_q, base.centers, base.embeddings, k, base.sigma)
    return np.where(y >= 0, 1, -1).astype(np.int8)
