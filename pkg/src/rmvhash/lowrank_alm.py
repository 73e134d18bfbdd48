"""Inexact-ALM recovery of a consensus low-rank kernelized similarity.

Solves  min  alpha*||Khat||_*  +  lam * sum_m ||E^(m)||_{2,1}
        s.t. K^(m) = Khat + E^(m),  Khat >= 0
by alternating closed-form block updates (Q via singular value thresholding,
E^(m) via columnwise shrinkage, Khat via averaging plus projection) with a
single multiplier/penalty update per sweep.
"""

from dataclasses import dataclass, field

import numpy as np

from . import core_math


@dataclass
class ALMConfig:
    alpha: float = 0.1
    lam: float = 1e-3
    mu0: float | None = None      # default: 1 / ||mean(K)||_2
    rho: float = 1.3
    mu_max: float = 1e8
    tol: float = 1e-6
    max_iters: int = 300
    constraint_mode: str = "nonneg"      # or "simplex"
    shrink_mode: str = "column-l21"      # or "elementwise"
    q_mode: str = "exact"                # or "paper-literal"
    c_weight_mode: str = "exact"         # divide by M+1; "paper-literal" uses M

    def __post_init__(self):
        if self.rho <= 1:
            raise ValueError(f"rho must exceed 1, got {self.rho}")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.alpha <= 0 or self.lam < 0:
            raise ValueError("alpha must be positive and lam nonnegative")


@dataclass
class ALMState:
    K_list: list                  # M observed (R, N) matrices
    Khat: np.ndarray
    Q: np.ndarray
    E: list
    A: list                       # multipliers for K = Khat + E
    B: np.ndarray                 # multiplier for Khat = Q
    mu: float


@dataclass
class ALMDiagnostics:
    fit_residuals: list = field(default_factory=list)   # max_m ||Khat+E-K||/||K||
    gap_residuals: list = field(default_factory=list)   # ||Khat-Q||/||Khat||
    objectives: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False

    def to_csv(self, path):
        lines = ["iteration,fit_residual,gap_residual,objective"]
        for i, (f, g, o) in enumerate(
            zip(self.fit_residuals, self.gap_residuals, self.objectives), start=1
        ):
            lines.append(f"{i},{f:.12g},{g:.12g},{o:.12g}")
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")


def _project(mtx, mode):
    if mode == "nonneg":
        return core_math.project_nonneg(mtx)
    if mode == "simplex":
        return core_math.project_simplex_columns(mtx)
    raise ValueError(f"unknown constraint mode {mode!r}")


def init_state(K_list, cfg):
    K_list = [np.asarray(K, dtype=float) for K in K_list]
    shape = K_list[0].shape
    for m, K in enumerate(K_list):
        if K.shape != shape:
            raise ValueError(f"view {m} has shape {K.shape}, expected {shape}")
        if not np.all(np.isfinite(K)):
            raise ValueError(f"view {m} contains non-finite entries")
    Kbar = sum(K_list) / len(K_list)
    mu = cfg.mu0 if cfg.mu0 is not None else 1.0 / max(np.linalg.norm(Kbar, 2), 1e-12)
    Khat = _project(Kbar, cfg.constraint_mode)
    return ALMState(
        K_list=K_list,
        Khat=Khat,
        Q=Khat.copy(),
        E=[np.zeros(shape) for _ in K_list],
        A=[np.zeros(shape) for _ in K_list],
        B=np.zeros(shape),
        mu=float(mu),
    )


def update_Q(state, cfg):
    """Nuclear-norm prox step on the auxiliary variable.

    exact mode solves the Q-subproblem of the Lagrangian,
    Q = svt(Khat + B/mu, alpha/mu); paper-literal mode applies
    Q = svt(Khat + B/(mu*alpha), 1/(mu*alpha)) verbatim.
    """
    if cfg.q_mode == "exact":
        return core_math.svt(state.Khat + state.B / state.mu, cfg.alpha / state.mu)
    if cfg.q_mode == "paper-literal":
        ma = state.mu * cfg.alpha
        return core_math.svt(state.Khat + state.B / ma, 1.0 / ma)
    raise ValueError(f"unknown q_mode {cfg.q_mode!r}")


def update_E(state, cfg, m):
    """Shrinkage step on the view-m error: prox of (lam/mu) * ||.||_{2,1}
    (columnwise; elementwise mode replicates the scalar-shrink notation)."""
    resid = state.K_list[m] - state.Khat - state.A[m] / state.mu
    kappa = cfg.lam / state.mu
    if cfg.shrink_mode == "column-l21":
        return core_math.col_l21_prox(resid, kappa)
    if cfg.shrink_mode == "elementwise":
        return core_math.scalar_shrink(resid, kappa)
    raise ValueError(f"unknown shrink_mode {cfg.shrink_mode!r}")


def update_Khat(state, cfg):
    """Average the M+1 quadratic pulls and project onto the constraint set."""
    M = len(state.K_list)
    acc = state.Q - state.B / state.mu
    for m in range(M):
        acc = acc + state.K_list[m] - state.E[m] - state.A[m] / state.mu
    denom = M + 1 if cfg.c_weight_mode == "exact" else M
    return _project(acc / denom, cfg.constraint_mode)


def update_multipliers(state, cfg):
    """Gradient-ascent multiplier step and penalty growth (in place)."""
    for m in range(len(state.K_list)):
        state.A[m] = state.A[m] + state.mu * (state.Khat + state.E[m] - state.K_list[m])
    state.B = state.B + state.mu * (state.Khat - state.Q)
    state.mu = min(cfg.rho * state.mu, cfg.mu_max)
    return state


def objective(Khat, E_list, cfg):
    """alpha*||Khat||_* + lam * sum_m ||E^(m)||_{2,1}."""
    nuc = float(np.sum(np.linalg.svd(Khat, compute_uv=False)))
    l21 = sum(float(np.sum(np.linalg.norm(E, axis=0))) for E in E_list)
    return cfg.alpha * nuc + cfg.lam * l21


def residuals(state):
    fit = max(
        np.linalg.norm(state.Khat + state.E[m] - state.K_list[m], "fro")
        / max(np.linalg.norm(state.K_list[m], "fro"), 1e-12)
        for m in range(len(state.K_list))
    )
    gap = np.linalg.norm(state.Khat - state.Q, "fro") / max(
        np.linalg.norm(state.Khat, "fro"), 1e-12
    )
    return float(fit), float(gap)


def recover(K_list, cfg=None):
    """Run the inexact-ALM sweep until both relative residuals fall below tol.

    Returns (Khat, E_list, diagnostics); non-convergence within max_iters is
    reported via diagnostics.converged, not raised.
    """
    cfg = cfg or ALMConfig()
    state = init_state(K_list, cfg)
    diag = ALMDiagnostics()
    for it in range(1, cfg.max_iters + 1):
        state.Q = update_Q(state, cfg)
        for m in range(len(state.K_list)):
            state.E[m] = update_E(state, cfg, m)
        state.Khat = update_Khat(state, cfg)
        fit, gap = residuals(state)
        update_multipliers(state, cfg)
        diag.fit_residuals.append(fit)
        diag.gap_residuals.append(gap)
        diag.objectives.append(objective(state.Khat, state.E, cfg))
        diag.iterations = it
        if fit < cfg.tol and gap < cfg.tol:
            diag.converged = True
            break
    return state.Khat, state.E, diag
