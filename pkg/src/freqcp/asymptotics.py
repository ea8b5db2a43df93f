"""Asymptotic covariance of the spectral change-point estimator.

After rate scaling ``(sqrt(T), T, T)`` the estimates of
``(sigma2, mu2, lam)`` are asymptotically normal with covariance
``sigma2**2 * Sigma``.  ``Sigma`` follows from the leading terms of the
Gauss-Newton normal matrix ``J'J``; this module computes both the exact
finite sums and those leading terms so the two can be compared.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from freqcp.estimator import Theta
from freqcp.spectral import FrequencyGrid, model_g, model_g_deriv


@dataclass(frozen=True)
class SigmaMatrix:
    """``Sigma`` and its closed-form inverse; ``scale`` is ``sigma2**2``."""

    matrix: np.ndarray
    inverse: np.ndarray
    scale: float


def jacobian(theta: Theta, grid: FrequencyGrid) -> np.ndarray:
    """Columns ``(1, g, mu2 * dg/dlam)`` of the model's Jacobian, shape ``(M, 3)``."""
    return np.column_stack(
        [
            np.ones(grid.M),
            model_g(theta.lam, grid),
            theta.mu2 * model_g_deriv(theta.lam, grid),
        ]
    )


def jtj_exact(theta: Theta, grid: FrequencyGrid) -> np.ndarray:
    J = jacobian(theta, grid)
    return J.T @ J


def jtj_asymptotic(theta: Theta, T: int) -> np.ndarray:
    """Leading-order ``J'J`` for ``lam`` in (0, 1/2)."""
    lam, mu2 = theta.lam, theta.mu2
    if not 0.0 < lam < 0.5:
        raise ValueError(f"lambda must lie in (0, 1/2), got {lam}")
    a12 = lam * (1 - lam) * T / 2
    a13 = mu2 * (0.5 - lam) * T
    a22 = (2 * lam**3 / 3 - lam**4) * T**2 / 2
    a23 = mu2 * (lam**2 - 2 * lam**3) * T**2 / 2
    a33 = mu2**2 * (lam - 2 * lam**2) * T**2
    return np.array(
        [
            [T / 2, a12, a13],
            [a12, a22, a23],
            [a13, a23, a33],
        ]
    )


def sigma_matrix(theta: Theta) -> SigmaMatrix:
    lam, mu2 = theta.lam, theta.mu2
    if not 0.0 < lam < 0.5:
        raise ValueError(f"Sigma needs lambda in (0, 1/2), got {lam}")
    if mu2 <= 0:
        raise ValueError(f"Sigma needs mu2 > 0, got {mu2}")
    s23 = -6.0 / (mu2 * lam**2)
    matrix = np.array(
        [
            [2.0, 0.0, 0.0],
            [0.0, 12.0 / lam**3, s23],
            [0.0, s23, 2.0 * (2 - 3 * lam) / (mu2**2 * lam * (1 - 2 * lam))],
        ]
    )
    i23 = lam**2 * mu2 * (0.5 - lam)
    inverse = np.array(
        [
            [0.5, 0.0, 0.0],
            [0.0, lam**3 * (1.0 / 3 - lam / 2), i23],
            [0.0, i23, lam * mu2**2 * (1 - 2 * lam)],
        ]
    )
    return SigmaMatrix(matrix, inverse, theta.sigma2**2)


def standard_errors(theta: Theta, T: int) -> tuple[float, float, float]:
    """Plug-in standard errors of ``(sigma2, mu2, lam)``.

    ``sigma2`` converges at rate ``sqrt(T)``, the other two at rate ``T``.
    """
    sig = sigma_matrix(theta)
    d = np.diag(sig.matrix)
    s2 = theta.sigma2
    return (
        s2 * math.sqrt(d[0] / T),
        s2 * math.sqrt(d[1]) / T,
        s2 * math.sqrt(d[2]) / T,
    )


def plugin_standard_errors(theta: Theta, T: int, lambda_resolved: float | None = None):
    """Standard errors for reporting, with the edge cases handled.

    Returns ``(se, flags)``; ``se`` is ``None`` when unavailable.  A
    resolved ``lam`` above 1/2 is folded back to ``1 - lam`` (the model is
    symmetric), and within ``5/T`` of 1/2 the ``lam`` variance blows up so
    nothing is reported.
    """
    flags = []
    lam = theta.lam if lambda_resolved is None else lambda_resolved
    if not math.isfinite(lam) or theta.mu2 <= 0:
        return None, ["se_unavailable_no_change"]
    if lam > 0.5:
        lam = 1.0 - lam
        flags.append("se_folded")
    if lam > 0.5 - 5.0 / T:
        return None, flags + ["se_unavailable_near_half"]
    return standard_errors(theta._replace(lam=lam), T), flags


def sandwich_standard_errors(theta: Theta, T: int) -> tuple[float, float, float]:
    """Finite-T standard errors allowing for heteroscedastic periodogram ordinates.

    Uses ``Var(I_k) = sigma2**2 + 2 sigma2 mu2 g_k`` (complex Gaussian DFT
    with a deterministic mean) in ``(J'J)^-1 J'VJ (J'J)^-1``.  Low
    frequencies carry most of the ``lam`` information and most of the
    extra variance, so these are much wider than :func:`standard_errors`.
    """
    lam = min(theta.lam, 1.0 - theta.lam)
    grid = FrequencyGrid(T)
    J = jacobian(theta._replace(lam=lam), grid)
    var = theta.sigma2**2 + 2.0 * theta.sigma2 * theta.mu2 * model_g(lam, grid)
    bread = np.linalg.inv(J.T @ J)
    cov = bread @ (J.T * var) @ J @ bread
    return tuple(float(math.sqrt(v)) for v in np.diag(cov))


def confidence_interval(estimate: float, se: float, level: float = 0.95, bounds=None):
    """Normal interval ``estimate +/- z se``.

    Returns ``(low, high, truncated)``.  With ``bounds=(a, b)`` the ends are
    clipped into that range and ``truncated`` says whether clipping
    happened.
    """
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must lie in (0, 1), got {level}")
    if se < 0:
        raise ValueError(f"standard error must be nonnegative, got {se}")
    half = norm.ppf((1.0 + level) / 2.0) * se
    low, high = estimate - half, estimate + half
    truncated = False
    if bounds is not None:
        a, b = bounds
        if low < a:
            low, truncated = a, True
        if high > b:
            high, truncated = b, True
    return low, high, truncated


def inner_product_sums(lam: float, T: int) -> list[tuple[float, float]]:
    """Exact inner products of ``1, g, dg`` against their leading asymptotics.

    Order: ``<1,g>``, ``<g,g>``, ``<1,dg>``, ``<g,dg>``, ``<dg,dg>``.
    """
    if not 0.0 < lam < 0.5:
        raise ValueError(f"lambda must lie in (0, 1/2), got {lam}")
    if T < 64:
        raise ValueError(f"T must be at least 64, got {T}")
    grid = FrequencyGrid(T)
    g = model_g(lam, grid)
    dg = model_g_deriv(lam, grid)
    exact = [g.sum(), g @ g, dg.sum(), g @ dg, dg @ dg]
    asymptotic = [
        (lam - lam**2) / 2 * T,
        (2 * lam**3 / 3 - lam**4) / 2 * T**2,
        (0.5 - lam) * T,
        (lam**2 - 2 * lam**3) / 2 * T**2,
        (lam - 2 * lam**2) * T**2,
    ]
    return [(float(e), float(a)) for e, a in zip(exact, asymptotic)]
