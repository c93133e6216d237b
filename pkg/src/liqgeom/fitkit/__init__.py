from .diagnostics import LogSlope, log_residuals, logslope_diagnostic, residual_autocorr
from .fit import (
    Comparison,
    FitOptions,
    FitResult,
    aic,
    compare,
    fit,
    initial_guesses,
    levenberg_marquardt,
)
from .models import CUMULATIVE_MODELS, MODELS, get_model, model_eval

__all__ = [
    "CUMULATIVE_MODELS",
    "Comparison",
    "FitOptions",
    "FitResult",
    "LogSlope",
    "MODELS",
    "aic",
    "compare",
    "fit",
    "get_model",
    "initial_guesses",
    "levenberg_marquardt",
    "log_residuals",
    "logslope_diagnostic",
    "model_eval",
    "residual_autocorr",
]
