"""Fourier transform, periodogram and the mean-shift spectral signature.

A series with a single mean change at relative position ``lam`` leaves a
deterministic imprint on its periodogram,

    E[I_k] = sigma2 + mu2 * g_k(lam),
    g_k(lam) = sin^2(pi k lam) / (T sin^2(pi k / T)),   k = 1 .. floor(T/2),

which every estimator in this package fits.  Everything here is a pure
function of its inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

MIN_LENGTH = 8


class SeriesError(ValueError):
    """Raised for input series that cannot be analysed."""


def as_series(values) -> np.ndarray:
    """Validate ``values`` as a time series and return a float64 copy."""
    x = np.array(values, dtype=np.float64)
    if x.ndim != 1:
        raise SeriesError(f"series must be one-dimensional, got shape {x.shape}")
    if x.size < MIN_LENGTH:
        raise SeriesError(f"series needs at least {MIN_LENGTH} values, got {x.size}")
    if not np.all(np.isfinite(x)):
        bad = int(np.flatnonzero(~np.isfinite(x))[0])
        raise SeriesError(f"non-finite value at index {bad}")
    return x


@dataclass(frozen=True)
class FrequencyGrid:
    """Fourier frequencies ``2 pi k / T`` for ``k = 1 .. floor(T/2)``.

    The zero frequency is excluded since it only carries the overall mean.
    For even ``T`` the Nyquist frequency is the last entry.
    """

    T: int

    def __post_init__(self):
        if int(self.T) != self.T or self.T < 2:
            raise ValueError(f"T must be an integer >= 2, got {self.T}")

    @property
    def M(self) -> int:
        return self.T // 2

    @cached_property
    def k(self) -> np.ndarray:
        return np.arange(1, self.M + 1, dtype=np.float64)

    @cached_property
    def omega(self) -> np.ndarray:
        return 2.0 * np.pi * self.k / self.T

    @cached_property
    def _denominator(self) -> np.ndarray:
        # T sin^2(pi k / T) never vanishes for 1 <= k <= T/2
        d = self.T * np.sin(np.pi * self.k / self.T) ** 2
        assert np.all(d > 0)
        return d


@dataclass(frozen=True)
class Periodogram:
    grid: FrequencyGrid
    values: np.ndarray

    @property
    def T(self) -> int:
        return self.grid.T

    @property
    def M(self) -> int:
        return self.grid.M

    def scaled(self, factor: float) -> "Periodogram":
        return Periodogram(self.grid, self.values * factor)


def dft(series, k: int) -> complex:
    """Direct-sum DFT coefficient ``sum_t X_t exp(i t 2 pi k / T)``."""
    x = np.asarray(series, dtype=np.float64)
    T = x.size
    if not 0 <= k < T:
        raise IndexError(f"frequency index {k} outside [0, {T - 1}]")
    t = np.arange(T)
    # reduce k*t mod T first so the phase stays exact for large T
    phase = 2.0 * np.pi * ((k * t) % T) / T
    return complex(np.sum(x * np.cos(phase)) + 1j * np.sum(x * np.sin(phase)))


def dft_full(series) -> np.ndarray:
    """All ``T`` DFT coefficients with the ``exp(+i t omega)`` sign convention."""
    x = np.asarray(series, dtype=np.float64)
    return np.fft.ifft(x) * x.size


def dft_direct(series) -> np.ndarray:
    """O(T^2) reference for :func:`dft_full`."""
    x = np.asarray(series, dtype=np.float64)
    T = x.size
    t = np.arange(T)
    phase = 2.0 * np.pi * (np.outer(t, t) % T) / T
    return np.exp(1j * phase) @ x


def full_periodogram(series) -> np.ndarray:
    """``|d(omega_k)|^2 / T`` for every ``k = 0 .. T-1``."""
    x = np.asarray(series, dtype=np.float64)
    return np.abs(dft_full(x)) ** 2 / x.size


def periodogram(series) -> Periodogram:
    """Half-spectrum periodogram on ``k = 1 .. floor(T/2)``."""
    x = as_series(series)
    grid = FrequencyGrid(x.size)
    return Periodogram(grid, full_periodogram(x)[1 : grid.M + 1])


def periodogram_batch(samples: np.ndarray) -> np.ndarray:
    """Half-spectrum periodograms for each row of a 2-D array."""
    samples = np.asarray(samples, dtype=np.float64)
    T = samples.shape[-1]
    d = np.fft.rfft(samples, axis=-1)
    return (np.abs(d[..., 1 : T // 2 + 1]) ** 2) / T


def dirichlet_magnitude(tau: int, omega: float) -> float:
    """``|sum_{t<tau} exp(i t omega)| = |sin(tau omega / 2) / sin(omega / 2)|``.

    Bounded by ``1 / |sin(omega / 2)|``.  At ``omega = 0 mod 2 pi`` the
    magnitude is simply ``tau``; that case is rejected here so callers
    handle it explicitly.
    """
    if tau < 1:
        raise ValueError(f"tau must be positive, got {tau}")
    half = np.sin(omega / 2.0)
    if abs(half) < 1e-15:
        raise ValueError("omega is 0 mod 2*pi; the magnitude there is tau itself")
    return float(abs(np.sin(tau * omega / 2.0) / half))


def _check_lambda(lam: float) -> None:
    if not 0.0 < lam < 1.0:
        raise ValueError(f"lambda must lie in (0, 1), got {lam}")


def model_g(lam: float, grid: FrequencyGrid) -> np.ndarray:
    """Mean-shift signature ``g_k(lam)`` on ``grid``."""
    _check_lambda(lam)
    return np.sin(np.pi * lam * grid.k) ** 2 / grid._denominator


def model_g_deriv(lam: float, grid: FrequencyGrid) -> np.ndarray:
    """``d g_k / d lam = pi k sin(2 pi k lam) / (T sin^2(pi k / T))``."""
    _check_lambda(lam)
    return np.pi * grid.k * np.sin(2.0 * np.pi * lam * grid.k) / grid._denominator


def model_g_matrix(lams, grid: FrequencyGrid) -> np.ndarray:
    """``g`` for many ``lam`` at once, shape ``(len(lams), M)``."""
    lams = np.asarray(lams, dtype=np.float64)
    return np.sin(np.pi * np.outer(lams, grid.k)) ** 2 / grid._denominator


def expected_periodogram(theta, grid: FrequencyGrid) -> np.ndarray:
    """Model spectrum ``sigma2 + mu2 * g(lam)`` for ``theta = (sigma2, mu2, lam)``."""
    sigma2, mu2, lam = theta
    return sigma2 + mu2 * model_g(lam, grid)
