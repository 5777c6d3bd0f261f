"""Structured multi-output kernel regression for spinal landmark and Cobb angle estimation."""

from .errors import (
    AlignmentError,
    DataError,
    FormatError,
    GeometryError,
    MetricError,
    ModeError,
    ParameterError,
    RenderError,
    S2VRError,
    ShapeError,
    SolverError,
)
from .geometry import (
    SpineAnnotation,
    SpineShapeParams,
    cobb_from_landmarks,
    consistency_gap,
    generate_spine,
    vertebra_slope,
)
from .graph import OutputGraph, build_laplacian, manifold_penalty
from .kernels import (
    BaseKernelBank,
    KernelWeights,
    TargetKernel,
    align_weights,
    alignment,
    build_gaussian_bank,
    center_kernel,
    combine,
    gaussian_kernel,
    solve_nonneg_qp,
)
from .features import GrayImage, HogDescriptor, hog, hog_length, render
from .metrics import EvalReport, evaluate, kfold_indices, pearson, rrmse
from .model import (
    MODE_ANGLES,
    MODE_JOINT,
    FeatureScaler,
    ModelParams,
    S2VRModel,
    deserialize,
    fit_baseline_svr,
    fit_model,
    load_model,
    predict,
    save_model,
    serialize,
)
from .solver import (
    ObjectiveReport,
    SolverState,
    TrainConfig,
    fit,
    grad_S,
    grad_beta,
    irwls_optimize_beta,
    irwls_weights,
    objective,
    solve_beta_step,
    stationarity_residual,
    update_S,
)

__version__ = "0.1.0"
