"""Proximal operators, projections, and K-means used by the solver modules."""

from dataclasses import dataclass

import numpy as np


class NumericError(RuntimeError):
    """A numerical routine (SVD, linear solve) failed to produce a result."""


def scalar_shrink(x, rho):
    """Soft-thresholding S_rho(x) = max(x - rho, 0) + min(x + rho, 0).

    Applies elementwise when x is an array.
    """
    if rho < 0:
        raise ValueError(f"shrinkage threshold must be nonnegative, got {rho}")
    x = np.asarray(x, dtype=float)
    out = np.maximum(x - rho, 0.0) + np.minimum(x + rho, 0.0)
    return out if out.ndim else float(out)


def svt(mtx, tau):
    """Singular value thresholding: U S_tau(Sigma) V^T, the prox of tau*||.||_*."""
    if tau < 0:
        raise ValueError(f"tau must be nonnegative, got {tau}")
    mtx = np.asarray(mtx, dtype=float)
    if not np.all(np.isfinite(mtx)):
        raise ValueError("svt input must be finite")
    try:
        u, s, vt = np.linalg.svd(mtx, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"SVD did not converge on a {mtx.shape} matrix: {exc}") from exc
    s = np.maximum(s - tau, 0.0)
    return (u * s) @ vt


def col_l21_prox(c, kappa):
    """Columnwise shrinkage: prox of kappa*||.||_{2,1}.

    Column i is scaled by max(0, 1 - kappa/||c_i||); columns with norm <= kappa
    (including zero columns) are zeroed.
    """
    if kappa < 0:
        raise ValueError(f"kappa must be nonnegative, got {kappa}")
    c = np.asarray(c, dtype=float)
    norms = np.linalg.norm(c, axis=0)
    scale = np.zeros_like(norms)
    nz = norms > 0
    scale[nz] = np.maximum(0.0, 1.0 - kappa / norms[nz])
    return c * scale


def project_nonneg(v):
    """Elementwise projection onto the nonnegative orthant."""
    return np.maximum(np.asarray(v, dtype=float), 0.0)


def project_simplex(v):
    """Euclidean projection of a vector onto {w : w >= 0, sum(w) = 1}.

    Sort-based algorithm, O(n log n).
    """
    v = np.asarray(v, dtype=float).ravel()
    if v.size == 0:
        raise ValueError("cannot project an empty vector onto the simplex")
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    rho = np.nonzero(u * np.arange(1, v.size + 1) > (css - 1.0))[0][-1]
    theta = (css[rho] - 1.0) / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def project_simplex_columns(mtx):
    """Project each column of a matrix onto the probability simplex."""
    mtx = np.asarray(mtx, dtype=float)
    out = np.empty_like(mtx)
    for i in range(mtx.shape[1]):
        out[:, i] = project_simplex(mtx[:, i])
    return out


@dataclass
class KMeansResult:
    centers: np.ndarray      # (L, d)
    assignments: np.ndarray  # (N,) int
    inertia: float


def _kmeanspp_init(points, L, rng):
    n = points.shape[0]
    centers = np.empty((L, points.shape[1]))
    first = rng.integers(n)
    centers[0] = points[first]
    d2 = np.sum((points - centers[0]) ** 2, axis=1)
    for j in range(1, L):
        total = d2.sum()
        if total <= 0:
            # all remaining mass at existing centers; fall back to uniform
            idx = rng.integers(n)
        else:
            idx = rng.choice(n, p=d2 / total)
        centers[j] = points[idx]
        d2 = np.minimum(d2, np.sum((points - centers[j]) ** 2, axis=1))
    return centers


def kmeans(points, L, max_iters=50, seed=0):
    """Lloyd iterations with k-means++ seeding; deterministic for a fixed seed.

    Empty clusters are re-seeded at the point farthest from its assigned
    center (deterministic tie-break by lowest index).
    """
    points = np.asarray(points, dtype=float)
    n = points.shape[0]
    if L > n:
        raise ValueError(f"cannot form {L} clusters from {n} points")
    if max_iters < 1:
        raise ValueError("max_iters must be at least 1")
    rng = np.random.default_rng(seed)
    centers = _kmeanspp_init(points, L, rng)
    assignments = np.zeros(n, dtype=int)
    for _ in range(max_iters):
        d2 = (
            np.sum(points ** 2, axis=1)[:, None]
            - 2.0 * points @ centers.T
            + np.sum(centers ** 2, axis=1)[None, :]
        )
        new_assign = np.argmin(d2, axis=1)
        for j in range(L):
            mask = new_assign == j
            if not np.any(mask):
                worst = int(np.argmax(d2[np.arange(n), new_assign]))
                centers[j] = points[worst]
                new_assign[worst] = j
                mask = new_assign == j
            centers[j] = points[mask].mean(axis=0)
        if np.array_equal(new_assign, assignments):
            assignments = new_assign
            break
        assignments = new_assign
    inertia = float(np.sum((points - centers[assignments]) ** 2))
    return KMeansResult(centers=centers, assignments=assignments, inertia=inertia)
