"""Frequency-domain estimation of a single change point in mean and variance."""

from freqcp.asymptotics import (
    confidence_interval,
    jtj_asymptotic,
    jtj_exact,
    plugin_standard_errors,
    sandwich_standard_errors,
    sigma_matrix,
    standard_errors,
)
from freqcp.cleaning import CleanReport, clean_outliers
from freqcp.dataio import load_series, save_series
from freqcp.estimator import FitConfig, FitResult, Theta, fit, resolve_ambiguity
from freqcp.montecarlo import Scenario, generate, run_scenario, verify_moments
from freqcp.pipeline import analyze, fit_report
from freqcp.spectral import (
    FrequencyGrid,
    Periodogram,
    SeriesError,
    expected_periodogram,
    model_g,
    periodogram,
)

__version__ = "0.1.0"

__all__ = [
    "CleanReport",
    "FitConfig",
    "FitResult",
    "FrequencyGrid",
    "Periodogram",
    "Scenario",
    "SeriesError",
    "Theta",
    "analyze",
    "clean_outliers",
    "confidence_interval",
    "expected_periodogram",
    "fit",
    "fit_report",
    "generate",
    "jtj_asymptotic",
    "jtj_exact",
    "load_series",
    "model_g",
    "periodogram",
    "plugin_standard_errors",
    "resolve_ambiguity",
    "run_scenario",
    "sandwich_standard_errors",
    "save_series",
    "sigma_matrix",
    "standard_errors",
    "verify_moments",
]
