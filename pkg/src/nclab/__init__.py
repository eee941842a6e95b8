"""Desk-scale laboratory for neural collapse under the unconstrained
feature model with regularized (rescaled) MSE loss."""

__version__ = "0.1.0"

from .closed_form import (
    ClosedFormSolution,
    SpectralSummary,
    etf,
    global_minimizer,
    optimal_bias,
    shrinkage_minimizer,
    spectrum_shifted_labels,
)
from .landscape import (
    CriticalReport,
    Direction,
    balance_residual,
    classify_critical_point,
    hessian_bilinear,
    min_curvature_probe,
    negative_curvature_certificate,
)
from .metrics import (
    MetricsReport,
    compute_report,
    cosine_margins,
    nc1,
    nc2,
    nc3,
    ncc_agreement,
    numerical_rank,
)
from .model import (
    ClassStats,
    Params,
    ProblemConfig,
    build_labels,
    class_stats,
    gradient,
    loss,
    vanilla_loss,
)
from .numerics import SvdResult, make_rng, nuclear_norm, pinv, sym_eig, thin_svd
from .optimize import (
    DivergenceError,
    TrainConfig,
    TraceRecord,
    default_step_size,
    init_params,
    multistart_oracle,
    train,
)
from .viz import (
    LandscapeGrid,
    PolarPoint,
    classifier_outputs,
    emit_grid,
    feature_from_polar,
    gradient_field_limit,
    loss_surface_ce,
    loss_surface_mse,
)
