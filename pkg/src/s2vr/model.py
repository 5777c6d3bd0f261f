"""End-to-end model: feature scaling, kernel learning, solver fit, prediction.

fit_model wires the pipeline together: standardize features, build the
Gaussian kernel bank, learn alignment weights against the label target
kernel, build the output Laplacian, and run the alternating solver on
row-centered labels.  Predictions add the stored per-output training means
back.  Models serialize to a versioned little-endian binary container with
a trailing checksum.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field, replace

import numpy as np

from . import solver
from .errors import DataError, FormatError, ModeError, ShapeError
from .graph import build_laplacian
from .kernels import (
    DEFAULT_BANDWIDTHS,
    KernelWeights,
    TargetKernel,
    align_weights,
    build_gaussian_bank,
    combine,
    gaussian_kernel,
)
from .solver import SolverState, TrainConfig

MODE_JOINT = "joint_angles_landmarks"
MODE_ANGLES = "angles_only"
_MODE_CODES = {MODE_JOINT: 0, MODE_ANGLES: 1}

MODEL_MAGIC = b"S2VR"
MODEL_VERSION = 1


@dataclass
class FeatureScaler:
    """Per-dimension affine map fitted on training features.

    scale folds the per-dimension standard deviation together with a
    sqrt(d) factor so that squared distances between scaled samples are
    O(1) regardless of the descriptor length, which keeps the bandwidth
    grid meaningful for any feature dimension.
    """

    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> "FeatureScaler":
        X = np.asarray(X, dtype=float)
        mean = X.mean(axis=1)
        std = X.std(axis=1)
        if not np.any(std > 0):
            raise DataError("all feature dimensions have zero variance")
        std = np.where(std > 0, std, 1.0)
        return cls(mean=mean, scale=std * np.sqrt(X.shape[0]))

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape[0] != self.mean.size:
            raise ShapeError(f"expected {self.mean.size} feature dims, got {X.shape[0]}")
        return (X - self.mean[:, None]) / self.scale[:, None]


@dataclass
class ModelParams:
    """Learned parameters: dual coefficients, structure matrix, kernel weights."""

    beta: np.ndarray
    S: np.ndarray
    omega: np.ndarray


@dataclass
class S2VRModel:
    """A fitted structured multi-output kernel regressor."""

    params: ModelParams
    bandwidths: tuple[float, ...]
    support_features: np.ndarray  # scaled, one column per support sample
    output_mean: np.ndarray
    scaler: FeatureScaler
    config: TrainConfig
    mode: str
    scaled_train_hash: bytes = b"\x00" * 8
    fit_state: SolverState | None = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.mode not in _MODE_CODES:
            raise ModeError(f"unknown mode {self.mode!r}")
        q = self.output_mean.size
        if self.params.S.shape != (q, q):
            raise ShapeError("structure matrix does not match the output count")
        if self.params.beta.shape != (q, self.support_features.shape[1]):
            raise ShapeError("beta does not match the support sample count")

    @property
    def n_outputs(self) -> int:
        return self.output_mean.size

    @property
    def n_support(self) -> int:
        return self.support_features.shape[1]


def _scaled_hash(Xs: np.ndarray) -> bytes:
    return hashlib.blake2b(np.ascontiguousarray(Xs).tobytes(), digest_size=8).digest()


def fit_model(
    X: np.ndarray,
    Y: np.ndarray,
    cfg: TrainConfig,
    mode: str = MODE_JOINT,
    bandwidths: tuple[float, ...] | None = None,
    rho: float | str = "auto",
    freeze_structure: bool = False,
) -> S2VRModel:
    """Fit the full pipeline on features X (d x N) and labels Y (q x N).

    Kernel weights are learned once, by centered alignment against the
    label target kernel built from row-centered labels, before the
    alternating optimization.  freeze_structure keeps S at the identity.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.ndim != 2 or Y.ndim != 2 or X.shape[1] != Y.shape[1]:
        raise ShapeError(f"inconsistent shapes: X {X.shape}, Y {Y.shape}")
    n = X.shape[1]
    if n < 5:
        raise DataError(f"need at least 5 training samples, got {n}")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
        raise DataError("features and labels must be finite")
    if mode == MODE_ANGLES and Y.shape[0] != 3:
        raise ModeError(f"angles_only mode expects 3 outputs, got {Y.shape[0]}")
    if mode not in _MODE_CODES:
        raise ModeError(f"unknown mode {mode!r}")
    if bandwidths is None:
        bandwidths = DEFAULT_BANDWIDTHS
    bandwidths = tuple(float(s) for s in bandwidths)

    output_mean = Y.mean(axis=1)
    Yc = Y - output_mean[:, None]
    if not np.any(np.abs(Yc) > 0):
        raise DataError("labels have zero variance")
    scaler = FeatureScaler.fit(X)
    Xs = scaler.transform(X)

    bank = build_gaussian_bank(Xs, bandwidths)
    weights = align_weights(bank, TargetKernel.from_labels(Yc))
    K = combine(bank, weights)
    eps = solver.resolve_epsilon(cfg, Yc)
    ncfg = replace(cfg, epsilon=eps)
    G = build_laplacian(Y, rho).laplacian if ncfg.gamma > 0 else None
    state = solver.fit(K, G, Yc, ncfg, update_structure=not freeze_structure)

    if eps > 0 and state.irwls_weights is not None and np.any(state.irwls_weights > 0):
        support = state.irwls_weights > 0
    else:
        support = np.ones(n, dtype=bool)
    return S2VRModel(
        params=ModelParams(
            beta=state.beta[:, support].copy(),
            S=state.S.copy(),
            omega=weights.omega.copy(),
        ),
        bandwidths=bandwidths,
        support_features=Xs[:, support].copy(),
        output_mean=output_mean,
        scaler=scaler,
        config=ncfg,
        mode=mode,
        scaled_train_hash=_scaled_hash(Xs),
        fit_state=state,
    )


def fit_baseline_svr(
    X: np.ndarray,
    Y: np.ndarray,
    cfg: TrainConfig,
    mode: str = MODE_JOINT,
    bandwidths: tuple[float, ...] | None = None,
) -> S2VRModel:
    """Unstructured multi-output baseline: S frozen at identity, no structure terms."""
    base_cfg = replace(cfg, gamma=0.0, lam=0.0)
    return fit_model(X, Y, base_cfg, mode=mode, bandwidths=bandwidths, freeze_structure=True)


def predict(model: S2VRModel, X_new: np.ndarray) -> np.ndarray:
    """Predict label vectors (q x N_new) for new feature columns."""
    X_new = np.asarray(X_new, dtype=float)
    if X_new.ndim != 2:
        raise ShapeError(f"feature matrix must be 2-d, got {X_new.shape}")
    Xs = model.scaler.transform(X_new)
    q, nt = model.n_outputs, Xs.shape[1]
    if nt == 0:
        return np.zeros((q, 0)) + model.output_mean[:, None]
    Kt = np.zeros((model.n_support, nt))
    for w, sig in zip(model.params.omega, model.bandwidths):
        if w != 0.0:
            Kt += w * gaussian_kernel(model.support_features, Xs, sig)
    return model.params.S @ (model.params.beta @ Kt) + model.output_mean[:, None]


# ----------------------------------------------------------------------
# binary container
# ----------------------------------------------------------------------
# layout (little-endian):
#   magic 'S2VR' | u32 version | u32 mode | u32 q | u32 Ns | u32 d | u32 M
#   f64 tau, gamma, lam, epsilon, tol, smoothing
#   u32 max_outer, max_irwls, max_s_iters
#   8-byte scaled-train hash
#   f64 arrays: bandwidths[M], omega[M], mean[d], scale[d],
#               support[d*Ns], output_mean[q], beta[q*Ns], S[q*q]  (row-major)
#   u64 checksum (blake2b-8 of everything before it)

_HEAD = struct.Struct("<4sIIIIII")
_SCALARS = struct.Struct("<6d3I")


def serialize(model: S2VRModel) -> bytes:
    """Encode a model as the versioned binary container."""
    q = model.n_outputs
    ns = model.n_support
    d = model.scaler.mean.size
    m = len(model.bandwidths)
    cfg = model.config
    if isinstance(cfg.epsilon, str):
        raise FormatError("cannot serialize an unresolved 'auto' epsilon")
    parts = [
        _HEAD.pack(MODEL_MAGIC, MODEL_VERSION, _MODE_CODES[model.mode], q, ns, d, m),
        _SCALARS.pack(
            cfg.tau, cfg.gamma, cfg.lam, cfg.epsilon, cfg.tol, cfg.smoothing,
            cfg.max_outer, cfg.max_irwls, cfg.max_s_iters,
        ),
        model.scaled_train_hash,
    ]
    for arr in (
        np.asarray(model.bandwidths, dtype=float),
        model.params.omega,
        model.scaler.mean,
        model.scaler.scale,
        model.support_features,
        model.output_mean,
        model.params.beta,
        model.params.S,
    ):
        parts.append(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    body = b"".join(parts)
    checksum = hashlib.blake2b(body, digest_size=8).digest()
    return body + checksum


def deserialize(data: bytes) -> S2VRModel:
    """Decode a binary container; raises a format error on any corruption."""
    if len(data) < _HEAD.size + _SCALARS.size + 8 + 8:
        raise FormatError(f"container truncated: {len(data)} bytes")
    if data[:4] != MODEL_MAGIC:
        raise FormatError(f"bad magic bytes {data[:4]!r}")
    magic, version, mode_code, q, ns, d, m = _HEAD.unpack_from(data, 0)
    if version != MODEL_VERSION:
        raise FormatError(f"unsupported format version {version}")
    if mode_code not in (0, 1):
        raise FormatError(f"unknown mode code {mode_code}")
    n_floats = 2 * m + 2 * d + d * ns + q + q * ns + q * q
    expected = _HEAD.size + _SCALARS.size + 8 + 8 * n_floats + 8
    if len(data) != expected:
        raise FormatError(f"container is {len(data)} bytes, expected {expected}")
    body, stored = data[:-8], data[-8:]
    if hashlib.blake2b(body, digest_size=8).digest() != stored:
        raise FormatError(f"checksum mismatch at offset {len(data) - 8}")
    off = _HEAD.size
    tau, gamma, lam, epsilon, tol, smoothing, mo, mi, ms = _SCALARS.unpack_from(data, off)
    off += _SCALARS.size
    train_hash = data[off : off + 8]
    off += 8

    def take(count: int, shape: tuple[int, ...]) -> np.ndarray:
        nonlocal off
        arr = np.frombuffer(data, dtype="<f8", count=count, offset=off).astype(float)
        off += 8 * count
        return arr.reshape(shape)

    bandwidths = take(m, (m,))
    omega = take(m, (m,))
    mean = take(d, (d,))
    scale = take(d, (d,))
    support = take(d * ns, (d, ns))
    output_mean = take(q, (q,))
    beta = take(q * ns, (q, ns))
    S = take(q * q, (q, q))
    cfg = TrainConfig(
        tau=tau, gamma=gamma, lam=lam, epsilon=epsilon,
        max_outer=mo, max_irwls=mi, max_s_iters=ms, tol=tol, smoothing=smoothing,
    )
    mode = MODE_JOINT if mode_code == 0 else MODE_ANGLES
    return S2VRModel(
        params=ModelParams(beta=beta, S=S, omega=KernelWeights(omega).omega),
        bandwidths=tuple(float(s) for s in bandwidths),
        support_features=support,
        output_mean=output_mean,
        scaler=FeatureScaler(mean=mean, scale=scale),
        config=cfg,
        mode=mode,
        scaled_train_hash=train_hash,
    )


def save_model(model: S2VRModel, path) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize(model))


def load_model(path) -> S2VRModel:
    with open(path, "rb") as fh:
        return deserialize(fh.read())
