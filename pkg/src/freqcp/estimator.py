"""Least-squares fit of the mean-shift spectrum to an observed periodogram.

The objective is ``S(theta) = sum_k (I_k - sigma2 - mu2 g_k(lam))^2``.
``sigma2`` and ``mu2`` enter linearly and get closed-form coordinate
updates; ``lam`` gets a Gauss-Newton step.  All three updates read the
previous iterate.  Because ``g(lam) == g(1 - lam)`` the fit only sees
``lam`` in (0, 1/2); :func:`resolve_ambiguity` picks the side in the
time domain afterwards.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from freqcp.spectral import (
    Periodogram,
    as_series,
    model_g,
    model_g_deriv,
    model_g_matrix,
)

log = logging.getLogger(__name__)


class Theta(NamedTuple):
    sigma2: float
    mu2: float
    lam: float


@dataclass(frozen=True)
class FitConfig:
    """Iteration controls.

    ``grid_points=None`` means ``min(T // 4, 256)``.  ``sigma2_divisor`` is
    ``"ls"`` (divide by M, the least-squares normal equation) or ``"m-1"``
    (divide by M - 1).  ``schedule="jacobi"`` applies the three coordinate
    updates; ``"gauss-newton"`` solves the full 3x3 normal equations per
    step instead.  Both share the same fixed point.
    """

    max_iterations: int = 100
    tolerance: float = 1e-8
    grid_points: int | None = None
    damping: float = 0.5
    max_halvings: int = 20
    mu2_floor_factor: float = 1e-10
    sigma2_divisor: str = "ls"
    schedule: str = "jacobi"

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")
        if not 0 < self.tolerance < 1:
            raise ValueError("tolerance must lie in (0, 1)")
        if self.grid_points is not None and self.grid_points < 2:
            raise ValueError("grid_points must be at least 2")
        if not 0 < self.damping < 1:
            raise ValueError("damping must lie in (0, 1)")
        if self.max_halvings < 0 or self.mu2_floor_factor <= 0:
            raise ValueError("max_halvings must be >= 0 and mu2_floor_factor > 0")
        if self.sigma2_divisor not in ("ls", "m-1"):
            raise ValueError("sigma2_divisor must be 'ls' or 'm-1'")
        if self.schedule not in ("jacobi", "gauss-newton"):
            raise ValueError("schedule must be 'jacobi' or 'gauss-newton'")

    def grid_size(self, T: int) -> int:
        if self.grid_points is not None:
            return self.grid_points
        return max(2, min(T // 4, 256))


@dataclass(frozen=True)
class SegmentStats:
    tau: int
    mean_before: float
    var_before: float
    mean_after: float
    var_after: float
    pooled_at_lambda: float
    pooled_at_mirror: float


@dataclass(frozen=True)
class FitResult:
    theta: Theta
    objective: float
    iterations: int
    converged: bool
    T: int
    lambda_resolved: float | None = None
    tau_hat: int | None = None
    standard_errors: tuple | None = None
    segment_stats: SegmentStats | None = None
    flags: tuple[str, ...] = ()
    history: tuple[float, ...] = field(default=(), repr=False)

    @property
    def no_change(self) -> bool:
        return "no_change" in self.flags


def _check_grid(pgram: Periodogram) -> np.ndarray:
    values = np.asarray(pgram.values, dtype=np.float64)
    if values.shape != (pgram.grid.M,):
        raise ValueError(
            f"periodogram has {values.size} values but its grid has {pgram.grid.M} frequencies"
        )
    return values


def mu2_floor(pgram: Periodogram, config: FitConfig) -> float:
    """Smallest ``mu2`` treated as a real mean shift (scaled to the data)."""
    return config.mu2_floor_factor * float(np.mean(pgram.values)) ** 2


def residuals(pgram: Periodogram, theta: Theta) -> np.ndarray:
    values = _check_grid(pgram)
    return values - theta.sigma2 - theta.mu2 * model_g(theta.lam, pgram.grid)


def objective(pgram: Periodogram, theta: Theta) -> float:
    u = residuals(pgram, theta)
    return float(u @ u)


def update_sigma2(pgram: Periodogram, prev: Theta, divisor: int | None = None, flags=None) -> float:
    """Closed-form ``sigma2`` from the previous ``(mu2, lam)``.

    ``divisor`` defaults to ``M - 1``; pass ``M`` to land on the
    least-squares normal equation instead.  Non-positive results are
    clamped to ``1e-12 * mean(I)`` and ``"sigma2_clamped"`` is added to
    ``flags``.
    """
    values = _check_grid(pgram)
    M = pgram.grid.M
    if divisor is None:
        divisor = M - 1
    value = float(np.sum(values - prev.mu2 * model_g(prev.lam, pgram.grid))) / divisor
    if value <= 0:
        value = 1e-12 * max(float(np.mean(values)), np.finfo(float).tiny)
        if flags is not None:
            flags.add("sigma2_clamped")
    return value


def update_mu2(pgram: Periodogram, prev: Theta, flags=None) -> float:
    """Increment-form update ``mu2 + <g, u> / <g, g>``, clamped at zero."""
    g = model_g(prev.lam, pgram.grid)
    gg = float(g @ g)
    if gg <= 0:
        raise ValueError(f"model vector vanishes at lambda={prev.lam}")
    value = prev.mu2 + float(g @ residuals(pgram, prev)) / gg
    if value < 0:
        value = 0.0
        if flags is not None:
            flags.add("mu2_clamped")
    return value


def _clamp_lambda(lam: float, T: int) -> float:
    return min(max(lam, 1.0 / T), 0.5 - 1.0 / T)


def update_lambda(pgram: Periodogram, prev: Theta, config: FitConfig = FitConfig(), flags=None) -> float:
    """Gauss-Newton step for ``lam`` with ``sigma2``, ``mu2`` held at ``prev``.

    The step is halved until the objective stops increasing (at most
    ``config.max_halvings`` times) and the result is clamped into
    ``[1/T, 1/2 - 1/T]``.
    """
    T = pgram.grid.T
    if prev.mu2 <= mu2_floor(pgram, config):
        if flags is not None:
            flags.add("lambda_step_skipped")
        return prev.lam
    dg = model_g_deriv(prev.lam, pgram.grid)
    dgdg = float(dg @ dg)
    if dgdg <= 0:
        raise ValueError(f"derivative of the model vector vanishes at lambda={prev.lam}")
    step = float(dg @ residuals(pgram, prev)) / (prev.mu2 * dgdg)

    s_prev = objective(pgram, prev)
    alpha = 1.0
    for _ in range(config.max_halvings + 1):
        lam = _clamp_lambda(prev.lam + alpha * step, T)
        if objective(pgram, prev._replace(lam=lam)) <= s_prev:
            return lam
        alpha *= config.damping
    if flags is not None:
        flags.add("lambda_step_rejected")
    return prev.lam


def _linear_fit(values: np.ndarray, G: np.ndarray, floor: float):
    """Least squares for ``(sigma2, mu2)`` on basis ``{1, g}`` for each row of ``G``."""
    M = values.size
    sg = G.sum(axis=1)
    sgg = np.einsum("ij,ij->i", G, G)
    sgi = G @ values
    si = values.sum()
    det = M * sgg - sg**2
    with np.errstate(divide="ignore", invalid="ignore"):
        mu2 = np.where(det > 0, (M * sgi - sg * si) / det, 0.0)
    mu2 = np.maximum(mu2, 0.0)
    sigma2 = np.maximum((si - mu2 * sg) / M, floor)
    return sigma2, mu2


def init_theta(pgram: Periodogram, config: FitConfig = FitConfig()) -> Theta:
    """Global start: best exact ``(sigma2, mu2)`` solve over a ``lam`` grid in (0, 1/2)."""
    values = _check_grid(pgram)
    n = config.grid_size(pgram.grid.T)
    lams = np.arange(1, n) / (2.0 * n)
    G = model_g_matrix(lams, pgram.grid)
    floor = 1e-12 * max(float(np.mean(values)), np.finfo(float).tiny)
    sigma2, mu2 = _linear_fit(values, G, floor)
    resid = values[None, :] - sigma2[:, None] - mu2[:, None] * G
    S = np.einsum("ij,ij->i", resid, resid)
    j = int(np.argmin(S))
    return Theta(float(sigma2[j]), float(mu2[j]), float(lams[j]))


def _gauss_newton_target(pgram: Periodogram, theta: Theta, flags) -> Theta:
    grid = pgram.grid
    g = model_g(theta.lam, grid)
    J = np.column_stack([np.ones(grid.M), g, theta.mu2 * model_g_deriv(theta.lam, grid)])
    u = residuals(pgram, theta)
    try:
        step = np.linalg.solve(J.T @ J, J.T @ u)
    except np.linalg.LinAlgError:
        flags.add("singular_normal_equations")
        step = np.zeros(3)
    floor = 1e-12 * max(float(np.mean(pgram.values)), np.finfo(float).tiny)
    return Theta(
        max(theta.sigma2 + step[0], floor),
        max(theta.mu2 + step[1], 0.0),
        _clamp_lambda(theta.lam + step[2], grid.T),
    )


def _relative_change(old: Theta, new: Theta, mu2_scale: float) -> float:
    d_sigma2 = abs(new.sigma2 - old.sigma2) / max(abs(old.sigma2), np.finfo(float).tiny)
    d_mu2 = abs(new.mu2 - old.mu2) / max(abs(old.mu2), mu2_scale, np.finfo(float).tiny)
    d_lam = abs(new.lam - old.lam) / old.lam
    return max(d_sigma2, d_mu2, d_lam)


def _no_change_result(pgram, iterations, flags, history) -> FitResult:
    values = pgram.values
    sigma2 = max(float(np.mean(values)), np.finfo(float).tiny)
    theta = Theta(sigma2, 0.0, math.nan)
    u = values - sigma2
    return FitResult(
        theta=theta,
        objective=float(u @ u),
        iterations=iterations,
        converged=False,
        T=pgram.grid.T,
        flags=tuple(sorted(flags | {"no_change"})),
        history=tuple(history),
    )


def fit(pgram: Periodogram, config: FitConfig = FitConfig()) -> FitResult:
    """Fit ``(sigma2, mu2, lam)`` with ``lam`` restricted to (0, 1/2).

    Each iteration forms the three coordinate updates from the previous
    iterate and, if the combined move raises the objective, shrinks it
    towards the previous iterate.  Non-convergence is reported through
    ``FitResult.converged``; it is not an error.
    """
    values = _check_grid(pgram)
    M = pgram.grid.M
    divisor = M if config.sigma2_divisor == "ls" else M - 1
    floor = mu2_floor(pgram, config)
    flags: set[str] = set()

    theta = init_theta(pgram, config)
    S = objective(pgram, theta)
    history = [S]
    if theta.mu2 <= floor:
        return _no_change_result(pgram, 0, flags, history)

    converged = False
    iterations = 0
    for iterations in range(1, config.max_iterations + 1):
        if config.schedule == "jacobi":
            target = Theta(
                update_sigma2(pgram, theta, divisor, flags),
                update_mu2(pgram, theta, flags),
                update_lambda(pgram, theta, config, flags),
            )
        else:
            target = _gauss_newton_target(pgram, theta, flags)
        if _relative_change(theta, target, floor) <= config.tolerance:
            S_t = objective(pgram, target)
            if S_t <= S:
                theta, S = target, S_t
                history.append(S)
            converged = True
            break

        alpha, candidate = 1.0, target
        S_c = objective(pgram, candidate)
        halvings = 0
        while S_c > S and halvings < config.max_halvings:
            alpha *= config.damping
            halvings += 1
            candidate = Theta(*(o + alpha * (t - o) for o, t in zip(theta, target)))
            S_c = objective(pgram, candidate)
        if S_c > S:
            flags.add("stalled")
            break

        change = _relative_change(theta, candidate, floor)
        theta, S = candidate, S_c
        history.append(S)
        if theta.mu2 <= floor:
            return _no_change_result(pgram, iterations, flags, history)
        if change <= config.tolerance:
            converged = True
            break

    if not converged:
        log.debug("fit did not converge after %d iterations", iterations)
    return FitResult(
        theta=theta,
        objective=S,
        iterations=iterations,
        converged=converged,
        T=pgram.grid.T,
        flags=tuple(sorted(flags)),
        history=tuple(history),
    )


def _pooled_split(x: np.ndarray, lam: float):
    T = x.size
    tau = int(math.floor(lam * T))
    if tau < 2 or T - tau < 2:
        raise ValueError(f"split at tau={tau} leaves a segment shorter than 2 (T={T})")
    vb = float(np.var(x[:tau], ddof=1))
    va = float(np.var(x[tau:], ddof=1))
    return lam * vb + (1.0 - lam) * va


def resolve_ambiguity(series, prefit: FitResult) -> FitResult:
    """Decide whether the change sits at ``lam`` or ``1 - lam``.

    The split leaving the mean shift inside one segment inflates that
    segment's variance, so the side with the smaller pooled variance wins.
    """
    x = as_series(series)
    if x.size != prefit.T:
        raise ValueError(f"series length {x.size} does not match fit length {prefit.T}")
    if prefit.no_change:
        return prefit
    lam = prefit.theta.lam
    if not 0.0 < lam < 0.5:
        raise ValueError(f"pre-resolution lambda must lie in (0, 1/2), got {lam}")

    flags = set(prefit.flags)
    p_lam = _pooled_split(x, lam)
    p_mirror = _pooled_split(x, 1.0 - lam)
    if abs(p_lam - p_mirror) <= 1e-12 * max(p_lam, p_mirror, 1.0):
        resolved = lam
        flags.add("ambiguity_tie")
    elif p_lam < p_mirror:
        resolved = lam
    else:
        resolved = 1.0 - lam
    # gap below ~2 standard errors of a variance estimate: side choice is shaky
    if abs(p_lam - p_mirror) < 2.0 * prefit.theta.sigma2 * math.sqrt(2.0 / x.size):
        flags.add("ambiguity_weak")

    tau = int(math.floor(resolved * x.size))
    stats = SegmentStats(
        tau=tau,
        mean_before=float(np.mean(x[:tau])),
        var_before=float(np.var(x[:tau], ddof=1)),
        mean_after=float(np.mean(x[tau:])),
        var_after=float(np.var(x[tau:], ddof=1)),
        pooled_at_lambda=p_lam,
        pooled_at_mirror=p_mirror,
    )
    return replace(
        prefit,
        lambda_resolved=resolved,
        tau_hat=tau,
        segment_stats=stats,
        flags=tuple(sorted(flags)),
    )
