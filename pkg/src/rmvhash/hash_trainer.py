"""Alternating optimization of kernel hash functions over multi-view data.

Couples the anchor-graph smoothness terms, the code-consensus terms, and the
ridge regression from the recovered consensus similarity onto relaxed codes.
Codes Y are held as (N, P); the database code of sample i is
sign(W^T Khat_i + b).
"""

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import anchor_graph, kernel_sim, lowrank_alm, oos_encoder
from .core_math import NumericError


@dataclass
class HyperParams:
    P: int = 32
    gamma: float = 1e-4
    delta: float = 1e-6
    alpha: float = 0.1
    beta: float = 1.0
    lam: float = 1e-3
    outer_iters: int = 60
    outer_tol: float = 1e-4
    orthogonalize: bool = True

    def __post_init__(self):
        if self.P < 1:
            raise ValueError("code length P must be at least 1")
        if min(self.gamma, self.delta, self.lam) < 0 or min(self.alpha, self.beta) <= 0:
            raise ValueError("hash hyperparameters out of range")


@dataclass
class GraphConfig:
    L: int = 300
    k: int = 3
    landmark_mode: str = "kmeans"
    bandwidth: float | None = None


@dataclass
class KernelSelectConfig:
    R: int | None = None        # default: same as graph L
    mode: str = "kmeans"
    self_tuning_k: int = 7


@dataclass
class OosConfig:
    Z: int = 300
    k_oos: int = 25


@dataclass
class CodeState:
    Y: np.ndarray               # (N, P) relaxed consensus codes
    Y_view: list                # M arrays (N, P)

    def binary_codes(self):
        return np.where(self.Y >= 0, 1, -1).astype(np.int8)


@dataclass
class HashModel:
    W: np.ndarray               # (R, P)
    b: np.ndarray               # (P,)
    landmarks: kernel_sim.KernelLandmarks
    kernel_config: kernel_sim.KernelConfig
    query_mode: str = "concat"
    base_set: object = None     # oos_encoder.BaseSet
    meta: dict = field(default_factory=dict)

    @property
    def code_length(self):
        return self.W.shape[1]


@dataclass
class TrainDiagnostics:
    objective_trace: list = field(default_factory=list)
    outer_iter_seconds: list = field(default_factory=list)
    alm: lowrank_alm.ALMDiagnostics | None = None
    converged: bool = False
    outer_iterations: int = 0

    def objective_csv(self, path):
        lines = ["iteration,objective,seconds"]
        for i, (o, s) in enumerate(
            zip(self.objective_trace, self.outer_iter_seconds), start=1
        ):
            lines.append(f"{i},{o:.12g},{s:.6g}")
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")


def update_Wb(Khat, Y, delta):
    """Closed-form ridge solution of the regression from Khat columns to Y.

    W = (Khat Lc Khat^T + delta I)^{-1} Khat Lc Y with Lc the centering
    matrix; b makes the residual column means vanish.
    """
    Khat = np.asarray(Khat, dtype=float)
    Y = np.asarray(Y, dtype=float)
    n = Khat.shape[1]
    if Y.shape[0] != n:
        raise ValueError(f"Y has {Y.shape[0]} rows, expected {n}")
    Kc = Khat - Khat.mean(axis=1, keepdims=True)     # Khat @ Lc
    gram = Kc @ Kc.T
    if delta > 0:
        gram = gram + delta * np.eye(gram.shape[0])
    try:
        W = np.linalg.solve(gram, Kc @ Y)
    except np.linalg.LinAlgError as exc:
        raise NumericError(
            "singular normal equations in update_Wb; use delta > 0"
        ) from exc
    b = (Y.sum(axis=0) - W.T @ Khat.sum(axis=1)) / n
    return W, b


def _solve_view_codes(graph, Y, gamma, tol=1e-8, maxiter=500):
    """Solve (2 L^(m) + gamma I) Y^(m) = gamma Y column by column with CG."""
    n, p = Y.shape

    def matvec(v):
        return 2.0 * anchor_graph.laplacian_apply(graph, v) + gamma * v

    op = spla.LinearOperator((n, n), matvec=matvec)
    out = np.empty_like(Y)
    for j in range(p):
        rhs = gamma * Y[:, j]
        x, info = spla.cg(op, rhs, rtol=tol, atol=0.0, maxiter=maxiter)
        if info != 0:
            resid = np.linalg.norm(matvec(x) - rhs)
            raise NumericError(
                f"code solve failed on column {j}: CG info={info}, residual={resid:.3e}"
            )
        out[:, j] = x
    return out


def _orthogonalize(Y):
    """Closest decorrelated, equal-energy relaxation: Y (Y^T Y)^{-1/2} sqrt(N)."""
    n = Y.shape[0]
    evals, evecs = np.linalg.eigh(Y.T @ Y)
    evals = np.maximum(evals, 1e-12 * max(evals.max(), 1.0))
    inv_sqrt = (evecs / np.sqrt(evals)) @ evecs.T
    return Y @ inv_sqrt * np.sqrt(n)


def update_codes(state, graphs, Khat, W, b, hp):
    """One sweep over the code blocks: per-view smoothing solves, consensus
    averaging against the regression output, optional orthogonalization."""
    if hp.gamma > 0:
        y_view = [_solve_view_codes(g, state.Y, hp.gamma) for g in graphs]
    else:
        y_view = [state.Y.copy() for _ in graphs]
    reg = Khat.T @ W + b
    m = len(graphs)
    if hp.gamma > 0:
        Y = (hp.gamma * np.sum(y_view, axis=0) + hp.beta * reg) / (hp.gamma * m + hp.beta)
    else:
        Y = reg.copy()
    if hp.orthogonalize:
        Y = _orthogonalize(Y)
    return CodeState(Y=Y, Y_view=y_view)


def objective(state, graphs, Khat, E_list, W, b, hp):
    """Full relaxed objective: graph smoothness + code consensus + nuclear
    and l21 recovery penalties + regression fit with ridge."""
    total = 0.0
    for g, yv in zip(graphs, state.Y_view):
        lap = anchor_graph.laplacian_apply(g, yv)
        total += 2.0 * float(np.sum(yv * lap))
        total += hp.gamma * float(np.sum((state.Y - yv) ** 2))
    total += hp.alpha * float(np.sum(np.linalg.svd(Khat, compute_uv=False)))
    total += hp.lam * sum(float(np.sum(np.linalg.norm(E, axis=0))) for E in E_list)
    resid = Khat.T @ W + b - state.Y
    total += hp.beta * (float(np.sum(resid ** 2)) + hp.delta * float(np.sum(W ** 2)))
    return total


def spectral_code_init(graphs, p, seed=0):
    """Warm-start codes from the top eigenvectors of the averaged anchor
    adjacency, computed through the reduced L x L factor; falls back to a
    seeded random orthonormal basis when the spectrum is too flat."""
    m = len(graphs)
    n = graphs[0].n_samples
    blocks = [
        (g.F @ sp.diags(1.0 / np.sqrt(g.lambda_diag))) / np.sqrt(m) for g in graphs
    ]
    H = sp.hstack(blocks, format="csr")
    T = (H.T @ H).toarray()
    evals, evecs = np.linalg.eigh(T)
    order = np.argsort(evals)[::-1]
    evals, evecs = evals[order], evecs[:, order]
    good = evals > 1e-10 * evals[0]
    if np.count_nonzero(good) < p:
        rng = np.random.default_rng(seed)
        q, _ = np.linalg.qr(rng.normal(size=(n, p)))
        return q * np.sqrt(n)
    U = H @ evecs[:, :p]
    U /= np.sqrt(evals[:p])
    norms = np.linalg.norm(U, axis=0)
    return U / norms * np.sqrt(n)


def mean_kernel_baseline(K_list, constraint_mode="nonneg"):
    """No-recovery consensus: the plain view average of the kernel matrices."""
    Kbar = sum(K_list) / len(K_list)
    return lowrank_alm._project(Kbar, constraint_mode)


def train(
    ds,
    hp=None,
    alm_cfg=None,
    graph_cfg=None,
    kernel_cfg=None,
    oos_cfg=None,
    seed=0,
    recovery=True,
    query_mode="concat",
):
    """Full training pipeline.

    Builds per-view anchor graphs and kernelized similarities, recovers the
    consensus Khat by inexact ALM (or the plain view average when recovery is
    off), then alternates the closed-form (W, b) solve with the code sweep
    until the relative objective change drops below hp.outer_tol.
    """
    hp = hp or HyperParams()
    graph_cfg = graph_cfg or GraphConfig()
    kernel_cfg = kernel_cfg or KernelSelectConfig()
    oos_cfg = oos_cfg or OosConfig()
    alm_cfg = alm_cfg or lowrank_alm.ALMConfig(alpha=hp.alpha, lam=hp.lam)

    n = ds.n_samples
    R = kernel_cfg.R if kernel_cfg.R is not None else graph_cfg.L
    if n < R or n < graph_cfg.L:
        raise ValueError(f"need at least max(R, L) samples, got N={n}")

    graphs = []
    for m, view in enumerate(ds.views):
        landmarks = anchor_graph.select_graph_landmarks(
            view, graph_cfg.L, mode=graph_cfg.landmark_mode, seed=seed + 1000 * m
        )
        graphs.append(
            anchor_graph.build_truncated_affinity(
                view, landmarks, graph_cfg.k, t=graph_cfg.bandwidth
            )
        )

    klm = kernel_sim.select_kernel_landmarks(ds, R, mode=kernel_cfg.mode, seed=seed)
    kcfg = kernel_sim.tune_config(ds, klm, kernel_cfg.self_tuning_k)
    K_list = kernel_sim.build_view_kernels(ds, klm, kcfg)

    diag = TrainDiagnostics()
    if recovery:
        Khat, E_list, alm_diag = lowrank_alm.recover(K_list, alm_cfg)
        diag.alm = alm_diag
    else:
        Khat = mean_kernel_baseline(K_list, alm_cfg.constraint_mode)
        E_list = [K - Khat for K in K_list]

    Y0 = spectral_code_init(graphs, hp.P, seed=seed)
    state = CodeState(Y=Y0, Y_view=[Y0.copy() for _ in graphs])
    W = np.zeros((R, hp.P))
    b = np.zeros(hp.P)

    prev_obj = None
    for it in range(1, hp.outer_iters + 1):
        t0 = time.perf_counter()
        W, b = update_Wb(Khat, state.Y, hp.delta)
        state = update_codes(state, graphs, Khat, W, b, hp)
        obj = objective(state, graphs, Khat, E_list, W, b, hp)
        diag.outer_iter_seconds.append(time.perf_counter() - t0)
        diag.objective_trace.append(obj)
        diag.outer_iterations = it
        if prev_obj is not None and abs(prev_obj - obj) <= hp.outer_tol * abs(prev_obj):
            diag.converged = True
            break
        prev_obj = obj

    model = HashModel(
        W=W,
        b=b,
        landmarks=klm,
        kernel_config=kcfg,
        query_mode=query_mode,
        meta={"P": hp.P, "N": n, "M": ds.n_views, "seed": seed, "recovery": recovery},
    )
    model.base_set = oos_encoder.build_base_set(
        ds, model, Z=min(oos_cfg.Z, n), seed=seed, k_oos=oos_cfg.k_oos
    )
    return model, state, Khat, diag


def encode_database(model, Khat):
    """(N, P) codes: column i maps to sign(W^T Khat_i + b), sign(0) = +1."""
    Khat = np.asarray(Khat, dtype=float)
    if Khat.shape[0] != model.W.shape[0]:
        raise ValueError(
            f"Khat has {Khat.shape[0]} rows, expected {model.W.shape[0]}"
        )
    pre = Khat.T @ model.W + model.b
    return np.where(pre >= 0, 1, -1).astype(np.int8)


def embed_query(model, x_views, mode=None):
    """Pre-sign projection W^T k(x_q) + b of one query."""
    mode = mode or model.query_mode
    kvec = kernel_sim.query_kernel_vector(
        x_views, model.landmarks, model.kernel_config, mode=mode
    )
    return model.W.T @ kvec + model.b


def encode_query(model, x_views, mode=None):
    """Length-P binary code of one query, sign(0) = +1."""
    pre = embed_query(model, x_views, mode=mode)
    return np.where(pre >= 0, 1, -1).astype(np.int8)


def encode_queries(model, ds, mode=None):
    """Codes for every sample of a query dataset, one row per sample."""
    codes = np.empty((ds.n_samples, model.code_length), dtype=np.int8)
    for i in range(ds.n_samples):
        codes[i] = encode_query(model, [v[:, i] for v in ds.views], mode=mode)
    return codes
