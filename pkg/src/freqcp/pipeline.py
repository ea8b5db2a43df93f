"""End-to-end analysis of one series and the report it produces."""

from __future__ import annotations

import math
import time
from dataclasses import asdict, replace
from datetime import datetime, timezone

from freqcp.asymptotics import (
    confidence_interval,
    plugin_standard_errors,
    sandwich_standard_errors,
)
from freqcp.estimator import FitConfig, FitResult, fit, resolve_ambiguity
from freqcp.spectral import as_series, periodogram

REPORT_FIELDS = (
    "input",
    "T",
    "sigma2",
    "mu2",
    "lambda",
    "lambda_resolved",
    "tau_hat",
    "se_sigma2",
    "se_mu2",
    "se_lambda",
    "se_sandwich_sigma2",
    "se_sandwich_mu2",
    "se_sandwich_lambda",
    "ci_sigma2",
    "ci_mu2",
    "ci_lambda",
    "ci_level",
    "converged",
    "iterations",
    "objective",
    "flags",
    "segment_stats",
    "cleaning",
    "timestamp",
)


def analyze(series, config: FitConfig = FitConfig()) -> FitResult:
    """Periodogram, fit, side resolution and standard errors for one series."""
    x = as_series(series)
    result = resolve_ambiguity(x, fit(periodogram(x), config))
    se, se_flags = plugin_standard_errors(result.theta, x.size, result.lambda_resolved)
    return replace(
        result,
        standard_errors=se,
        flags=tuple(sorted(set(result.flags) | set(se_flags))),
    )


def _finite(v):
    if v is None:
        return None
    v = float(v)
    return v if math.isfinite(v) else None


def fit_report(
    series,
    config: FitConfig = FitConfig(),
    source: str | None = None,
    cleaning=None,
    level: float = 0.95,
) -> tuple[dict, FitResult]:
    """Run :func:`analyze` and lay the result out as a flat, JSON-ready dict.

    Every key in ``REPORT_FIELDS`` is always present; values that do not
    exist on a given path are ``None`` and explained in ``flags``.
    """
    started = datetime.now(timezone.utc)
    t0 = time.perf_counter()
    x = as_series(series)
    result = analyze(x, config)
    theta = result.theta

    se = result.standard_errors or (None, None, None)
    sandwich = (None, None, None)
    if result.standard_errors is not None:
        sandwich = sandwich_standard_errors(theta, x.size)

    ci = {"ci_sigma2": None, "ci_mu2": None, "ci_lambda": None}
    flags = set(result.flags)
    if result.standard_errors is not None:
        lo, hi, _ = confidence_interval(theta.sigma2, se[0], level, bounds=(0.0, math.inf))
        ci["ci_sigma2"] = [lo, hi]
        lo, hi, _ = confidence_interval(theta.mu2, se[1], level, bounds=(0.0, math.inf))
        ci["ci_mu2"] = [lo, hi]
        lo, hi, truncated = confidence_interval(result.lambda_resolved, se[2], level, bounds=(0.0, 1.0))
        ci["ci_lambda"] = [lo, hi]
        if truncated:
            flags.add("ci_lambda_truncated")

    report = {
        "input": {"path": source, "T": int(x.size)},
        "T": int(x.size),
        "sigma2": _finite(theta.sigma2),
        "mu2": _finite(theta.mu2),
        "lambda": _finite(theta.lam),
        "lambda_resolved": _finite(result.lambda_resolved),
        "tau_hat": result.tau_hat,
        "se_sigma2": _finite(se[0]),
        "se_mu2": _finite(se[1]),
        "se_lambda": _finite(se[2]),
        "se_sandwich_sigma2": _finite(sandwich[0]),
        "se_sandwich_mu2": _finite(sandwich[1]),
        "se_sandwich_lambda": _finite(sandwich[2]),
        **ci,
        "ci_level": level,
        "converged": bool(result.converged),
        "iterations": int(result.iterations),
        "objective": float(result.objective),
        "flags": sorted(flags),
        "segment_stats": asdict(result.segment_stats) if result.segment_stats else None,
        "cleaning": cleaning,
        "timestamp": {
            "utc": started.isoformat(),
            "elapsed_seconds": time.perf_counter() - t0,
        },
    }
    return report, result
