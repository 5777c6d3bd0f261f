"""Gaussian kernel banks and target-alignment based kernel combination.

A bank of Gaussian kernels over a bandwidth grid is combined into a single
kernel with nonnegative unit-norm weights chosen to maximize the centered
alignment between the combined kernel and a target kernel built from the
training labels.  The weight problem reduces to a small nonnegative
quadratic program which is solved to certified KKT residuals.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import AlignmentError, ParameterError, ShapeError, SolverError

# KKT certification tolerance for the nonnegative QP.
KKT_TOL = 1e-8
# Default bandwidth grid: 10 values evenly spaced across [0.1, 1].
DEFAULT_BANDWIDTHS = tuple(np.linspace(0.1, 1.0, 10))


def gaussian_kernel(X: np.ndarray, X2: np.ndarray | None, sigma: float) -> np.ndarray:
    """Gaussian kernel matrix with entry (i, j) = exp(-||x_i - x2_j||^2 / (2 sigma^2)).

    X and X2 hold one sample per column.  Passing X2=None (or the same
    array) computes the symmetric self-kernel with an exactly-unit diagonal.
    """
    if sigma <= 0 or not np.isfinite(sigma):
        raise ParameterError(f"bandwidth must be positive and finite, got {sigma}")
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ShapeError(f"X must be 2-d (features x samples), got shape {X.shape}")
    self_mode = X2 is None or X2 is X
    if self_mode:
        X2m = X
    else:
        X2m = np.asarray(X2, dtype=float)
        if X2m.ndim != 2 or X2m.shape[0] != X.shape[0]:
            raise ShapeError(
                f"X2 must have the same feature dimension as X: {X.shape} vs {X2m.shape}"
            )
        self_mode = X2m.shape == X.shape and np.array_equal(X, X2m)
    sq1 = np.sum(X * X, axis=0)
    sq2 = sq1 if self_mode else np.sum(X2m * X2m, axis=0)
    d2 = sq1[:, None] + sq2[None, :] - 2.0 * (X.T @ X2m)
    np.maximum(d2, 0.0, out=d2)
    K = np.exp(d2 / (-2.0 * sigma * sigma))
    if self_mode:
        # kill rounding asymmetry and pin k(x, x) = 1
        K = 0.5 * (K + K.T)
        np.fill_diagonal(K, 1.0)
    return K


def center_kernel(K: np.ndarray) -> np.ndarray:
    """Double-center a kernel matrix so its rows and columns sum to zero."""
    K = np.asarray(K, dtype=float)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise ShapeError(f"kernel must be square, got shape {K.shape}")
    rm = K.mean(axis=1, keepdims=True)
    cm = K.mean(axis=0, keepdims=True)
    return K - rm - cm + K.mean()


def alignment(K: np.ndarray, K_T: np.ndarray) -> float:
    """Cosine of the angle between two kernel matrices in Frobenius geometry."""
    K = np.asarray(K, dtype=float)
    T = np.asarray(getattr(K_T, "matrix", K_T), dtype=float)
    if K.shape != T.shape:
        raise ShapeError(f"kernel shapes differ: {K.shape} vs {T.shape}")
    nk = np.linalg.norm(K)
    nt = np.linalg.norm(T)
    if nk == 0.0 or nt == 0.0:
        raise AlignmentError("alignment undefined for a zero-norm kernel")
    return float(np.clip(float(np.sum(K * T)) / (nk * nt), -1.0, 1.0))


@dataclass
class TargetKernel:
    """Label-derived target kernel K_T = Y^T Y (one label vector per column of Y)."""

    matrix: np.ndarray

    @classmethod
    def from_labels(cls, Y: np.ndarray) -> "TargetKernel":
        Y = np.asarray(Y, dtype=float)
        if Y.ndim != 2:
            raise ShapeError(f"label matrix must be 2-d, got shape {Y.shape}")
        return cls(Y.T @ Y)


@dataclass
class BaseKernelBank:
    """A list of same-shaped kernel matrices evaluated on one sample set."""

    kernels: list[np.ndarray]
    bandwidths: tuple[float, ...]
    centered: bool = False

    def __post_init__(self) -> None:
        if len(self.kernels) == 0:
            raise ShapeError("kernel bank must contain at least one kernel")
        if len(self.kernels) != len(self.bandwidths):
            raise ShapeError(
                f"{len(self.kernels)} kernels but {len(self.bandwidths)} bandwidths"
            )
        n = self.kernels[0].shape[0]
        for K in self.kernels:
            if K.shape != (n, n):
                raise ShapeError("all bank kernels must be square and same-shaped")

    @property
    def size(self) -> int:
        return len(self.kernels)

    @property
    def n_samples(self) -> int:
        return self.kernels[0].shape[0]

    def validate(self, tol: float = 1e-12) -> None:
        """Full invariant check: symmetry, PSD, unit diagonal when uncentered."""
        for sig, K in zip(self.bandwidths, self.kernels):
            if not np.allclose(K, K.T, atol=tol, rtol=0.0):
                raise ShapeError(f"bank kernel (sigma={sig}) is not symmetric")
            w = np.linalg.eigvalsh(K)
            if w.min() < -1e-8 * max(1.0, np.trace(K) / K.shape[0]):
                raise ShapeError(f"bank kernel (sigma={sig}) is not PSD")
            if not self.centered and not np.allclose(np.diag(K), 1.0, atol=1e-12):
                raise ShapeError(f"bank kernel (sigma={sig}) diagonal is not 1")

    def centered_copy(self) -> "BaseKernelBank":
        if self.centered:
            return self
        return BaseKernelBank(
            [center_kernel(K) for K in self.kernels], self.bandwidths, centered=True
        )


def build_gaussian_bank(
    X: np.ndarray, bandwidths: tuple[float, ...] | None = None
) -> BaseKernelBank:
    """Evaluate a Gaussian kernel for every bandwidth on the given samples."""
    if bandwidths is None:
        bandwidths = DEFAULT_BANDWIDTHS
    bandwidths = tuple(float(s) for s in bandwidths)
    X = np.asarray(X, dtype=float)
    sq = np.sum(X * X, axis=0)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (X.T @ X)
    np.maximum(d2, 0.0, out=d2)
    kernels = []
    for sig in bandwidths:
        if sig <= 0 or not np.isfinite(sig):
            raise ParameterError(f"bandwidth must be positive and finite, got {sig}")
        K = np.exp(d2 / (-2.0 * sig * sig))
        K = 0.5 * (K + K.T)
        np.fill_diagonal(K, 1.0)
        kernels.append(K)
    return BaseKernelBank(kernels, bandwidths, centered=False)


@dataclass
class KernelWeights:
    """Nonnegative unit-Euclidean-norm combination weights over a bank."""

    omega: np.ndarray
    per_kernel_alignment: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        self.omega = np.asarray(self.omega, dtype=float)
        if self.omega.ndim != 1:
            raise ShapeError("omega must be a vector")
        if np.any(self.omega < 0):
            raise ParameterError("omega must be componentwise nonnegative")
        n = np.linalg.norm(self.omega)
        if abs(n - 1.0) > 1e-10:
            raise ParameterError(f"omega must have unit Euclidean norm, got {n}")


def solve_nonneg_qp(
    V: np.ndarray,
    alpha: np.ndarray,
    max_iter: int = 2000,
    kkt_tol: float = KKT_TOL,
) -> np.ndarray:
    """Minimize q^T V q - 2 q^T alpha subject to q >= 0.

    V must be symmetric PSD.  Projected gradient descent with Armijo
    backtracking, with an active-set polish (exact solve on the free
    coordinates) every few sweeps.  The returned point satisfies
    q >= 0, grad = 2(Vq - alpha) >= -kkt_tol and
    |q_i (Vq - alpha)_i| <= kkt_tol * (1 + ||alpha||).
    """
    V = np.asarray(V, dtype=float)
    alpha = np.asarray(alpha, dtype=float).ravel()
    m = alpha.size
    if V.shape != (m, m):
        raise ShapeError(f"V must be {m}x{m}, got {V.shape}")
    if not np.allclose(V, V.T, atol=1e-10 * max(1.0, float(np.abs(V).max())), rtol=0.0):
        raise ShapeError("V must be symmetric")

    scale = 1.0 + np.linalg.norm(alpha)

    def f(q: np.ndarray) -> float:
        return float(q @ V @ q - 2.0 * q @ alpha)

    def kkt_ok(q: np.ndarray) -> bool:
        half = V @ q - alpha
        return bool(np.min(2.0 * half) >= -kkt_tol and np.max(np.abs(q * half)) <= kkt_tol * scale)

    def polish(q: np.ndarray) -> np.ndarray:
        # exact solve on the free set; iterate set changes a few times
        best = q
        for _ in range(2 * m + 2):
            g = 2.0 * (V @ best - alpha)
            free = (best > 0) | (g < -0.5 * kkt_tol)
            if not np.any(free):
                cand = np.zeros(m)
            else:
                # alpha restricted to the span of V's columns keeps this consistent
                sol, *_ = np.linalg.lstsq(V[np.ix_(free, free)], alpha[free], rcond=None)
                cand = np.zeros(m)
                cand[free] = np.maximum(sol, 0.0)
            if f(cand) <= f(best) + 1e-15 * scale * scale:
                best = cand
            if kkt_ok(best):
                break
        return best

    def active_set(q0: np.ndarray) -> np.ndarray:
        # Lawson-Hanson style: grow the free set greedily from the most
        # violated dual coordinate, backtracking when a solve goes negative.
        # Starting from zero keeps the free subproblems small, which matters
        # because near-duplicate kernels make the full V nearly singular.
        q = q0.copy()
        free = q > 0
        for _ in range(6 * m + 10):
            w = alpha - V @ q
            w_blocked = np.where(free, -np.inf, w)
            j = int(np.argmax(w_blocked))
            if not np.any(~free) or w_blocked[j] <= 0.25 * kkt_tol:
                break
            free[j] = True
            for _ in range(m + 1):
                sol, *_ = np.linalg.lstsq(V[np.ix_(free, free)], alpha[free], rcond=None)
                z = np.zeros(m)
                z[free] = sol
                if sol.size == 0 or sol.min() >= 0.0:
                    q = z
                    break
                neg = free & (z < 0)
                with np.errstate(divide="ignore", invalid="ignore"):
                    ratio = np.where(neg, q / (q - z), np.inf)
                theta = float(np.min(ratio))
                q = q + min(max(theta, 0.0), 1.0) * (z - q)
                drop = neg & (q <= 1e-14 * max(1.0, q.max()))
                q[drop] = 0.0
                free &= ~drop
                if not np.any(free):
                    q = np.zeros(m)
                    break
            np.maximum(q, 0.0, out=q)
        return q

    lip = 2.0 * max(float(np.linalg.eigvalsh(V).max()), 1e-300)
    q = np.maximum(
        np.linalg.lstsq(V + 1e-12 * np.trace(V) / m * np.eye(m), alpha, rcond=None)[0], 0.0
    )
    if kkt_ok(q):
        return q
    q = active_set(np.zeros(m))
    if kkt_ok(q):
        return q
    step0 = 1.0 / lip
    for it in range(max_iter):
        g = 2.0 * (V @ q - alpha)
        eta = step0
        fq = f(q)
        for _ in range(60):
            q_new = np.maximum(q - eta * g, 0.0)
            if f(q_new) <= fq + 1e-4 * float(g @ (q_new - q)):
                break
            eta *= 0.5
        q = q_new
        if it % 5 == 4 or kkt_ok(q):
            q = polish(q)
            if kkt_ok(q):
                return q
    q = polish(q)
    if kkt_ok(q):
        return q
    raise SolverError("nonnegative QP did not reach KKT tolerance")


def align_weights(bank: BaseKernelBank, K_T: np.ndarray | TargetKernel) -> KernelWeights:
    """Alignment-maximizing nonnegative unit-norm weights for a kernel bank.

    The bank kernels are centered first (centering the target is the
    caller's choice).  alpha_i = <Kc_i, K_T>_F and V_ij = <Kc_i, Kc_j>_F
    define the quadratic program; the minimizer is normalized to unit norm.
    """
    T = np.asarray(getattr(K_T, "matrix", K_T), dtype=float)
    n = bank.n_samples
    if T.shape != (n, n):
        raise ShapeError(f"target kernel must be {n}x{n}, got {T.shape}")
    cbank = bank.centered_copy()
    M = cbank.size
    flat = np.stack([K.ravel() for K in cbank.kernels])
    alpha = flat @ T.ravel()
    V = flat @ flat.T
    V = 0.5 * (V + V.T)
    q = solve_nonneg_qp(V, alpha)
    nq = np.linalg.norm(q)
    if nq == 0.0:
        raise AlignmentError(
            "degenerate alignment: no base kernel has positive alignment with the target "
            f"(alpha={np.array2string(alpha, precision=3)})"
        )
    omega = q / nq
    per = np.empty(M)
    tn = np.linalg.norm(T)
    for i, K in enumerate(cbank.kernels):
        kn = np.linalg.norm(K)
        per[i] = alpha[i] / (kn * tn) if kn > 0 and tn > 0 else np.nan
    return KernelWeights(omega, per_kernel_alignment=per)


def combine(bank: BaseKernelBank, weights: KernelWeights | np.ndarray) -> np.ndarray:
    """Weighted sum of the bank kernels."""
    w = np.asarray(getattr(weights, "omega", weights), dtype=float).ravel()
    if w.size != bank.size:
        raise ShapeError(f"{bank.size} kernels but {w.size} weights")
    out = np.zeros_like(bank.kernels[0])
    for wi, K in zip(w, bank.kernels):
        out += wi * K
    return out
