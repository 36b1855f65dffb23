"""Differentiable structural-similarity metrics and toy image-model training."""

from .autoencoder import DeterministicAutoencoder
from .elvae import ElVaeConfig, ExpectedLossVAE, elvae_loss, sample_prior, train_elvae
from .exceptions import (
    ConfigError,
    CorruptImage,
    DegenerateScaleError,
    DivergenceError,
    NonFiniteActivation,
    NotFittedError,
    SimlearnError,
    UnsupportedImageFormat,
)
from .losses import Loss, batch_loss, estimate_loss_scale, mae, mse, psnr
from .metrics import (
    LocalStats,
    MetricParams,
    fd_gradient,
    fd_relative_error,
    local_stats,
    max_feasible_scales,
    ms_ssim,
    ms_ssim_grad,
    ssim,
    ssim_components,
    ssim_grad,
)
from .model_selection import (
    MmdResult,
    SelectionResult,
    median_bandwidth,
    mmd2_unbiased,
    rbf_kernel,
    relative_similarity,
    select_tradeoff,
)
from .sr import SrReport, SrRow, evaluate_dir

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "CorruptImage",
    "DegenerateScaleError",
    "DeterministicAutoencoder",
    "DivergenceError",
    "ElVaeConfig",
    "ExpectedLossVAE",
    "LocalStats",
    "Loss",
    "MetricParams",
    "MmdResult",
    "NonFiniteActivation",
    "NotFittedError",
    "SelectionResult",
    "SimlearnError",
    "SrReport",
    "SrRow",
    "UnsupportedImageFormat",
    "batch_loss",
    "elvae_loss",
    "estimate_loss_scale",
    "evaluate_dir",
    "fd_gradient",
    "fd_relative_error",
    "local_stats",
    "mae",
    "max_feasible_scales",
    "median_bandwidth",
    "mmd2_unbiased",
    "ms_ssim",
    "ms_ssim_grad",
    "mse",
    "psnr",
    "rbf_kernel",
    "relative_similarity",
    "sample_prior",
    "select_tradeoff",
    "ssim",
    "ssim_components",
    "ssim_grad",
    "train_elvae",
    "__version__",
]
