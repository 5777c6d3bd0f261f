"""Alternating solver for structured multi-output kernel regression.

Model: predictions on the training set are F = S beta K with a kernel
matrix K (N x N), dual coefficients beta (q x N) and an output-structure
matrix S (q x q).  The fitted objective is

    Q(beta, S) = 1/2 tr(beta K beta^T)
               + gamma/2 tr(S beta K G K beta^T S^T)
               + tau * sum_i nu(||y_i - f_i||)
               + lam * sum_j ||S_:j||_2

with the dead-zone quadratic nu(u) = 0 for u < eps, (u - eps)^2 otherwise,
and G a Laplacian over the training outputs.  beta is optimized by
iteratively reweighted least squares with a backtracking line search on the
true objective; S by a reweighted closed-form update for the column-sparsity
term.  Both steps only ever accept monotone objective decreases.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ParameterError, ShapeError

# Armijo sufficient-decrease constant, step shrink factor, smallest step.
LINESEARCH_C1 = 1e-4
LINESEARCH_SHRINK = 0.5
LINESEARCH_MIN_STEP = 1e-10
# Relative residual certified by every inner beta solve.
STATIONARITY_TOL = 1e-8


class SolverWarning(UserWarning):
    """Non-fatal solver condition (ridge fallback, line-search stop, ...)."""


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters of the alternating solver.

    epsilon may be a nonnegative float or "auto" (resolved against the
    labels as 0.01 * median ||y_i||).  lam weighs the column-sparsity term
    on S; smoothing floors the column norms in its reweighting.
    """

    tau: float = 1.0
    gamma: float = 0.0
    lam: float = 0.0
    epsilon: float | str = 0.0
    max_outer: int = 30
    max_irwls: int = 30
    max_s_iters: int = 30
    tol: float = 1e-6
    smoothing: float = 1e-8

    def __post_init__(self) -> None:
        if self.tau <= 0 or not np.isfinite(self.tau):
            raise ParameterError(f"tau must be positive and finite, got {self.tau}")
        if self.gamma < 0 or self.lam < 0:
            raise ParameterError("gamma and lam must be nonnegative")
        if isinstance(self.epsilon, str):
            if self.epsilon != "auto":
                raise ParameterError(f"epsilon must be >= 0 or 'auto', got {self.epsilon!r}")
        elif self.epsilon < 0:
            raise ParameterError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.max_outer < 0 or self.max_irwls < 1 or self.max_s_iters < 1:
            raise ParameterError("iteration caps out of range")
        if self.tol <= 0 or self.smoothing <= 0:
            raise ParameterError("tol and smoothing must be positive")


def resolve_epsilon(cfg: TrainConfig, Y: np.ndarray) -> float:
    """Resolve the insensitivity radius; 'auto' is 1% of the median label norm."""
    if isinstance(cfg.epsilon, str):
        return 0.01 * float(np.median(np.linalg.norm(np.asarray(Y, dtype=float), axis=0)))
    return float(cfg.epsilon)


@dataclass(frozen=True)
class ObjectiveReport:
    """Objective value split into its four terms (total is their exact sum)."""

    total: float
    rkhs_term: float
    manifold_term: float
    loss_term: float
    l21_term: float


@dataclass
class SolverState:
    """Solver iterate: coefficients, structure matrix, and audit trail.

    objective_trace holds every accepted objective value (initialization,
    each IRWLS step, each S iteration); it is non-increasing.  Treat
    returned states as immutable.
    """

    beta: np.ndarray
    S: np.ndarray
    objective_trace: list[float] = field(default_factory=list)
    outer_trace: list[float] = field(default_factory=list)
    irwls_weights: np.ndarray | None = None
    active_mask: np.ndarray | None = None
    converged: bool = False
    flags: tuple[str, ...] = ()


# ======================================================================
# objective and derivatives
# ======================================================================


def _check_problem(K: np.ndarray, G: np.ndarray | None, Y: np.ndarray) -> None:
    n = K.shape[0]
    if K.ndim != 2 or K.shape != (n, n):
        raise ShapeError(f"K must be square, got {K.shape}")
    if Y.ndim != 2 or Y.shape[1] != n:
        raise ShapeError(f"Y must have one column per sample: Y {Y.shape}, K {K.shape}")
    if G is not None and G.shape != (n, n):
        raise ShapeError(f"G must be {n}x{n}, got {G.shape}")


def objective(
    beta: np.ndarray,
    S: np.ndarray,
    K: np.ndarray,
    G: np.ndarray | None,
    Y: np.ndarray,
    cfg: TrainConfig,
) -> ObjectiveReport:
    """Evaluate the full training objective at (beta, S)."""
    beta = np.asarray(beta, dtype=float)
    S = np.asarray(S, dtype=float)
    K = np.asarray(K, dtype=float)
    Y = np.asarray(Y, dtype=float)
    G = None if G is None else np.asarray(getattr(G, "laplacian", G), dtype=float)
    _check_problem(K, G, Y)
    eps = resolve_epsilon(cfg, Y)
    BK = beta @ K
    F = S @ BK
    E = Y - F
    rkhs = 0.5 * float(np.sum(beta * BK))
    if cfg.gamma > 0.0 and G is not None:
        man = 0.5 * cfg.gamma * float(np.sum((F @ G) * F))
    else:
        man = 0.0
    u = np.linalg.norm(E, axis=0)
    over = np.maximum(u - eps, 0.0)
    loss = cfg.tau * float(np.sum(over * over))
    l21 = cfg.lam * float(np.sum(np.linalg.norm(S, axis=0)))
    return ObjectiveReport(
        total=rkhs + man + loss + l21,
        rkhs_term=rkhs,
        manifold_term=man,
        loss_term=loss,
        l21_term=l21,
    )


def irwls_weights(E: np.ndarray, cfg: TrainConfig, eps: float | None = None) -> np.ndarray:
    """Per-sample quadratic weights D_ii for the current residual columns.

    D_ii = 0 when ||e_i|| < eps (dead zone, including ||e_i|| = 0), else
    2 tau (||e_i|| - eps) / ||e_i||; always in [0, 2 tau).
    """
    E = np.asarray(E, dtype=float)
    if eps is None:
        eps = resolve_epsilon(cfg, E)  # only reachable with numeric cfg.epsilon
    u = np.linalg.norm(E, axis=0)
    d = np.zeros_like(u)
    act = u > eps if eps > 0 else u > 0
    d[act] = 2.0 * cfg.tau * (u[act] - eps) / u[act]
    return d


def grad_beta(
    beta: np.ndarray,
    S: np.ndarray,
    K: np.ndarray,
    G: np.ndarray | None,
    Y: np.ndarray,
    cfg: TrainConfig,
) -> np.ndarray:
    """Gradient of the objective in beta (exact where the loss is differentiable)."""
    eps = resolve_epsilon(cfg, Y)
    BK = beta @ K
    E = Y - S @ BK
    D = irwls_weights(E, cfg, eps)
    g = beta @ K
    if cfg.gamma > 0.0 and G is not None:
        g = g + cfg.gamma * (S.T @ S) @ ((BK @ G) @ K)
    g = g - S.T @ ((E * D) @ K)
    return g


def grad_S(
    beta: np.ndarray,
    S: np.ndarray,
    K: np.ndarray,
    G: np.ndarray | None,
    Y: np.ndarray,
    cfg: TrainConfig,
) -> np.ndarray:
    """Gradient of the objective in S, with the smoothed column-norm reweighting."""
    eps = resolve_epsilon(cfg, Y)
    BK = beta @ K
    E = Y - S @ BK
    D = irwls_weights(E, cfg, eps)
    g = -(E * D) @ BK.T
    if cfg.gamma > 0.0 and G is not None:
        g = g + cfg.gamma * S @ ((BK @ G) @ BK.T)
    if cfg.lam > 0.0:
        P = 1.0 / (2.0 * np.maximum(np.linalg.norm(S, axis=0), cfg.smoothing))
        g = g + 2.0 * cfg.lam * (S * P[None, :])
    return g


def stationarity_residual(
    beta: np.ndarray,
    S: np.ndarray,
    K: np.ndarray,
    G: np.ndarray | None,
    Y: np.ndarray,
    D: np.ndarray,
    gamma: float,
) -> float:
    """Relative residual of the weighted-problem stationarity system at beta.

    System: beta K + S^T S beta K (gamma G + diag(D)) K = S^T Y diag(D) K.
    """
    n = K.shape[0]
    W = np.diag(D) if G is None or gamma == 0.0 else gamma * G + np.diag(D)
    rhs = (S.T @ (Y * D[None, :])) @ K
    lhs = beta @ K + (S.T @ S) @ beta @ (K @ W @ K)
    den = max(float(np.linalg.norm(rhs)), 1e-30)
    return float(np.linalg.norm(lhs - rhs)) / den


# ======================================================================
# beta step
# ======================================================================


def _solve_beta_system(
    S: np.ndarray,
    K: np.ndarray,
    G: np.ndarray | None,
    Y: np.ndarray,
    D: np.ndarray,
    gamma: float,
    refine: bool = False,
) -> tuple[np.ndarray, bool]:
    """Solve beta + S^T S beta K(gamma G + D) = S^T Y D for beta.

    Any solution also satisfies the stationarity system right-multiplied
    by K.  Diagonalizing S^T S = U diag(mu) U^T decouples the equation into
    one N x N solve per eigenvalue: row i of U^T beta solves
    x (I + mu_i A) = c_i with A = K (gamma G + D).  A has nonnegative real
    spectrum (product of PSD factors), so I + mu A is always invertible.
    refine adds one pass of iterative refinement per solve.
    Returns (beta, used_ridge_fallback).
    """
    n = K.shape[0]
    q = S.shape[0]
    if gamma > 0.0 and G is not None:
        W = gamma * G + np.diag(D)
    else:
        W = np.diag(D)
    A = K @ W
    C = S.T @ (Y * D[None, :])
    if np.array_equal(S, np.eye(q)):
        mu = np.ones(1)
        groups = [(1.0, np.arange(q))]
        U = None
        Ct = C
    else:
        StS = S.T @ S
        mu, U = np.linalg.eigh(StS)
        Ct = U.T @ C
        order = np.argsort(mu, kind="stable")
        groups = []
        idx = 0
        while idx < q:
            j = idx
            while j < q and mu[order[j]] == mu[order[idx]]:
                j += 1
            groups.append((float(mu[order[idx]]), order[idx:j]))
            idx = j

    eye = np.eye(n)
    beta_t = np.empty((q, n))
    used_ridge = False
    for mval, rows in groups:
        M = eye + mval * A
        rhs = Ct[rows].T  # (I + mu A)^T x = c^T  <=>  x^T (I + mu A) = c
        try:
            sol = np.linalg.solve(M.T, rhs)
        except np.linalg.LinAlgError:
            used_ridge = True
            ridge = 1e-10 * max(float(np.trace(K)) / n, 1.0)
            M = eye + mval * ((K + ridge * eye) @ W)
            sol = np.linalg.solve(M.T, rhs)
        if refine:
            corr = rhs - M.T @ sol
            sol = sol + np.linalg.solve(M.T, corr)
        beta_t[rows] = sol.T
    return (beta_t if U is None else U @ beta_t), used_ridge


def solve_beta_step(
    S: np.ndarray,
    K: np.ndarray,
    G: np.ndarray | None,
    Y: np.ndarray,
    D: np.ndarray,
    cfg: TrainConfig,
) -> np.ndarray:
    """Minimizer of the weighted quadratic surrogate in beta for fixed S and D.

    The returned matrix satisfies the stationarity system with relative
    residual <= 1e-8; a ridge-regularized kernel is substituted (with a
    warning) if the plain solve cannot reach that.
    """
    S = np.asarray(S, dtype=float)
    K = np.asarray(K, dtype=float)
    Y = np.asarray(Y, dtype=float)
    D = np.asarray(D, dtype=float).ravel()
    G = None if G is None else np.asarray(getattr(G, "laplacian", G), dtype=float)
    _check_problem(K, G, Y)
    if S.shape != (Y.shape[0], Y.shape[0]):
        raise ShapeError(f"S must be {Y.shape[0]}x{Y.shape[0]}, got {S.shape}")
    if D.size != K.shape[0]:
        raise ShapeError(f"D must have one weight per sample, got {D.size}")
    beta, used_ridge = _solve_beta_system(S, K, G, Y, D, cfg.gamma)
    if used_ridge:
        warnings.warn("beta step fell back to a ridge-regularized kernel", SolverWarning)
    res = stationarity_residual(beta, S, K, G, Y, D, cfg.gamma)
    if res > STATIONARITY_TOL:
        beta2, _ = _solve_beta_system(S, K, G, Y, D, cfg.gamma, refine=True)
        res2 = stationarity_residual(beta2, S, K, G, Y, D, cfg.gamma)
        if res2 < res:
            beta, res = beta2, res2
    if res > STATIONARITY_TOL:
        ridge = 1e-10 * max(float(np.trace(K)) / K.shape[0], 1.0)
        Kr = K + ridge * np.eye(K.shape[0])
        beta2, _ = _solve_beta_system(S, Kr, G, Y, D, cfg.gamma, refine=True)
        res2 = stationarity_residual(beta2, S, Kr, G, Y, D, cfg.gamma)
        if res2 < res:
            beta, res = beta2, res2
        warnings.warn(
            f"beta step stationarity residual {res:.3e} after ridge fallback",
            SolverWarning,
        )
    return beta


# ======================================================================
# IRWLS on beta with a line search on the true objective
# ======================================================================


def irwls_optimize_beta(
    state: SolverState,
    K: np.ndarray,
    G: np.ndarray | None,
    Y: np.ndarray,
    cfg: TrainConfig,
) -> SolverState:
    """Descend the objective in beta for fixed S.

    Each sweep recomputes the residual weights, solves the weighted
    surrogate, and backtracks along the difference direction until the true
    objective satisfies the Armijo condition.  The trace gains one entry
    per accepted step; decrease is monotone.
    """
    K = np.asarray(K, dtype=float)
    Y = np.asarray(Y, dtype=float)
    G = None if G is None else np.asarray(getattr(G, "laplacian", G), dtype=float)
    eps = resolve_epsilon(cfg, Y)
    ncfg = replace(cfg, epsilon=eps)
    beta = np.array(state.beta, dtype=float)
    S = np.asarray(state.S, dtype=float)
    trace = list(state.objective_trace)
    flags = list(state.flags)
    cur = objective(beta, S, K, G, Y, ncfg).total
    if not trace:
        trace.append(cur)
    D = None
    converged = False
    for _ in range(cfg.max_irwls):
        E = Y - S @ (beta @ K)
        D = irwls_weights(E, ncfg, eps)
        with warnings.catch_warnings(record=True) as wlog:
            warnings.simplefilter("always", SolverWarning)
            beta_hat = solve_beta_step(S, K, G, Y, D, ncfg)
        for w in wlog:
            flags.append(str(w.message))
        delta = beta_hat - beta
        dn = float(np.linalg.norm(delta))
        if dn <= 1e-14 * (1.0 + float(np.linalg.norm(beta))):
            converged = True
            break
        g = grad_beta(beta, S, K, G, Y, ncfg)
        slope = float(np.sum(g * delta))
        if slope >= 0.0:
            # surrogate solution is not a descent direction: stationary up to noise
            converged = True
            break
        eta = 1.0
        new = None
        while eta >= LINESEARCH_MIN_STEP:
            cand = beta + eta * delta
            val = objective(cand, S, K, G, Y, ncfg).total
            if val <= cur + LINESEARCH_C1 * eta * slope:
                new = (cand, val)
                break
            eta *= LINESEARCH_SHRINK
        if new is None:
            flags.append("line search found no decrease at minimum step")
            break
        beta, val = new
        trace.append(val)
        if abs(cur - val) <= cfg.tol * (1.0 + abs(cur)):
            cur = val
            converged = True
            break
        cur = val
    E = Y - S @ (beta @ K)
    D = irwls_weights(E, ncfg, eps)
    u = np.linalg.norm(E, axis=0)
    return SolverState(
        beta=beta,
        S=S,
        objective_trace=trace,
        outer_trace=list(state.outer_trace),
        irwls_weights=D,
        active_mask=u >= eps,
        converged=converged,
        flags=tuple(flags),
    )


# ======================================================================
# S step: reweighted closed-form updates for the column-sparsity term
# ======================================================================


def _update_S_impl(
    beta: np.ndarray,
    K: np.ndarray,
    G: np.ndarray | None,
    Y: np.ndarray,
    D: np.ndarray,
    cfg: TrainConfig,
    S0: np.ndarray,
    obj_cfg: TrainConfig,
) -> tuple[np.ndarray, list[float], list[str]]:
    q = Y.shape[0]
    BK = beta @ K
    loss_bracket = (BK * D[None, :]) @ BK.T
    R = (Y * D[None, :]) @ BK.T
    if cfg.gamma > 0.0 and G is not None:
        man_bracket = cfg.gamma * ((BK @ G) @ BK.T)
    else:
        man_bracket = np.zeros((q, q))
    base = loss_bracket + man_bracket
    base = 0.5 * (base + base.T)
    S = np.array(S0, dtype=float)
    cur = objective(beta, S, K, G, Y, obj_cfg).total
    accepted: list[float] = []
    flags: list[str] = []
    for _ in range(cfg.max_s_iters):
        if cfg.lam > 0.0:
            P = 1.0 / (2.0 * np.maximum(np.linalg.norm(S, axis=0), cfg.smoothing))
            B = base + 2.0 * cfg.lam * np.diag(P)
        else:
            B = base
        try:
            S_new = np.linalg.solve(B, R.T).T
        except np.linalg.LinAlgError:
            ridge = 1e-10 * max(float(np.trace(B)), 1.0)
            S_new = np.linalg.solve(B + ridge * np.eye(q), R.T).T
            flags.append("S update used a ridge-regularized bracket")
        val = objective(beta, S_new, K, G, Y, obj_cfg).total
        if val > cur + 1e-12 * (1.0 + abs(cur)):
            # reweighted step overshot the true objective (possible with eps > 0)
            flags.append("S update stopped on a non-decreasing iterate")
            break
        moved = float(np.linalg.norm(S_new - S))
        S = S_new
        accepted.append(val)
        stalled = abs(cur - val) <= cfg.tol * (1.0 + abs(cur))
        cur = val
        if stalled and moved <= cfg.tol * (1.0 + float(np.linalg.norm(S))):
            break
    return S, accepted, flags


def update_S(
    beta: np.ndarray,
    K: np.ndarray,
    G: np.ndarray | None,
    Y: np.ndarray,
    D: np.ndarray,
    cfg: TrainConfig,
    S0: np.ndarray | None = None,
) -> np.ndarray:
    """Optimize the structure matrix for fixed beta and residual weights D.

    Iterates S <- Y D K beta^T (2 lam P + beta K D K beta^T
    + gamma beta K G K beta^T)^(-1) with P_jj = 1 / (2 max(||S_:j||, smoothing))
    recomputed from the running iterate (started at S0, identity by default).
    Iterates that would increase the true objective are rejected.
    """
    beta = np.asarray(beta, dtype=float)
    K = np.asarray(K, dtype=float)
    Y = np.asarray(Y, dtype=float)
    D = np.asarray(D, dtype=float).ravel()
    G = None if G is None else np.asarray(getattr(G, "laplacian", G), dtype=float)
    _check_problem(K, G, Y)
    q = Y.shape[0]
    if beta.shape != (q, K.shape[0]):
        raise ShapeError(f"beta must be {q}x{K.shape[0]}, got {beta.shape}")
    S0 = np.eye(q) if S0 is None else np.asarray(S0, dtype=float)
    eps = resolve_epsilon(cfg, Y)
    obj_cfg = replace(cfg, epsilon=eps)
    S, accepted, flags = _update_S_impl(beta, K, G, Y, D, cfg, S0, obj_cfg)
    for msg in flags:
        if "ridge" in msg:
            warnings.warn(msg, SolverWarning)
    return S


# ======================================================================
# outer alternation
# ======================================================================


def fit(
    K: np.ndarray,
    G: np.ndarray | None,
    Y: np.ndarray,
    cfg: TrainConfig,
    update_structure: bool = True,
) -> SolverState:
    """Alternate beta sweeps and S updates from (beta, S) = (0, I).

    Never raises on non-convergence: the best (last) state is returned with
    flags describing any early stops.  update_structure=False freezes S at
    the identity (the unstructured baseline).
    """
    K = np.asarray(K, dtype=float)
    Y = np.asarray(Y, dtype=float)
    G = None if G is None else np.asarray(getattr(G, "laplacian", G), dtype=float)
    _check_problem(K, G, Y)
    if not np.allclose(K, K.T, atol=1e-8 * max(1.0, float(np.abs(K).max())), rtol=0.0):
        raise ShapeError("K must be symmetric")
    q, n = Y.shape
    eps = resolve_epsilon(cfg, Y)
    ncfg = replace(cfg, epsilon=eps)
    state = SolverState(beta=np.zeros((q, n)), S=np.eye(q))
    state.objective_trace.append(objective(state.beta, state.S, K, G, Y, ncfg).total)
    E = Y - state.S @ (state.beta @ K)
    state.irwls_weights = irwls_weights(E, ncfg, eps)
    state.active_mask = np.linalg.norm(E, axis=0) >= eps
    prev = state.objective_trace[-1]
    flags: list[str] = []
    converged = False
    for _ in range(cfg.max_outer):
        state = irwls_optimize_beta(state, K, G, Y, ncfg)
        flags = list(state.flags)
        if update_structure:
            D = state.irwls_weights
            S_new, accepted, sflags = _update_S_impl(
                state.beta, K, G, Y, D, ncfg, state.S, ncfg
            )
            flags.extend(sflags)
            state = SolverState(
                beta=state.beta,
                S=S_new,
                objective_trace=state.objective_trace + accepted,
                outer_trace=list(state.outer_trace),
                converged=state.converged,
                flags=tuple(flags),
            )
            E = Y - state.S @ (state.beta @ K)
            state.irwls_weights = irwls_weights(E, ncfg, eps)
            state.active_mask = np.linalg.norm(E, axis=0) >= eps
        cur = state.objective_trace[-1]
        state.outer_trace.append(cur)
        if abs(prev - cur) <= cfg.tol * (1.0 + abs(prev)):
            converged = True
            break
        prev = cur
    if not converged and cfg.max_outer > 0:
        flags.append("outer alternation hit max_outer before the tolerance")
    state.converged = converged
    state.flags = tuple(dict.fromkeys(flags))
    return state
