"""Outlier detection and replacement for piecewise-constant records.

Detection is a rolling robust z-score: ``x_t`` is flagged when it sits
more than ``threshold`` MAD-based standard deviations from the median of
its ``window`` neighbours on each side (``x_t`` itself excluded).  Each
flagged point is replaced by a normal draw whose mean and standard
deviation come from the nearest ``window`` clean observations before and
after it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from freqcp.spectral import as_series

MAD_TO_SD = 1.4826


@dataclass(frozen=True)
class CleanReport:
    indices: tuple[int, ...]
    original: tuple[float, ...]
    replacements: tuple[float, ...]
    window: int
    threshold: float
    max_fraction: float
    seed: int
    detector: str = "rolling median/MAD robust z-score"

    def to_dict(self) -> dict:
        return {
            "detector": self.detector,
            "window": self.window,
            "threshold": self.threshold,
            "max_fraction": self.max_fraction,
            "seed": self.seed,
            "count": len(self.indices),
            "indices": list(self.indices),
            "original": list(self.original),
            "replacements": list(self.replacements),
        }


def detect_outliers(x: np.ndarray, window: int = 5, threshold: float = 4.0) -> np.ndarray:
    """Boolean mask of points far from their neighbourhood median."""
    T = x.size
    mask = np.zeros(T, dtype=bool)
    w = window
    # interior points: full neighbourhoods, vectorised
    if T >= 2 * w + 1:
        win = sliding_window_view(x, 2 * w + 1)
        centre = win[:, w]
        nb = np.delete(win, w, axis=1)
        med = np.median(nb, axis=1)
        mad = np.median(np.abs(nb - med[:, None]), axis=1)
        mask[w : T - w] = np.abs(centre - med) > threshold * MAD_TO_SD * mad
    for t in list(range(min(w, T))) + list(range(max(T - w, w), T)):
        nb = np.concatenate([x[max(0, t - w) : t], x[t + 1 : t + 1 + w]])
        med = np.median(nb)
        mad = np.median(np.abs(nb - med))
        mask[t] = abs(x[t] - med) > threshold * MAD_TO_SD * mad
    return mask


def _clean_neighbours(x: np.ndarray, mask: np.ndarray, t: int, w: int) -> np.ndarray:
    before = [i for i in range(t - 1, -1, -1) if not mask[i]][:w]
    after = [i for i in range(t + 1, x.size) if not mask[i]][:w]
    return x[before + after]


def clean_outliers(
    series,
    window: int = 5,
    threshold: float = 4.0,
    seed: int = 0,
    max_fraction: float = 0.1,
):
    """Return ``(cleaned_series, CleanReport)``.

    Raises ``ValueError`` if more than ``max_fraction`` of the points would
    be replaced; rewriting that much of a series is not cleaning.
    """
    x = as_series(series)
    if window < 2:
        raise ValueError(f"window must be at least 2, got {window}")
    if threshold <= 0:
        raise ValueError(f"threshold must be positive, got {threshold}")
    if 2 * window + 1 > x.size:
        raise ValueError(f"window {window} too large for a series of length {x.size}")

    mask = detect_outliers(x, window, threshold)
    idx = np.flatnonzero(mask)
    if idx.size > max_fraction * x.size:
        raise ValueError(
            f"{idx.size} outliers exceed the allowed {max_fraction:.0%} of {x.size} points"
        )

    rng = np.random.default_rng(seed)
    cleaned = x.copy()
    replacements = []
    for t in idx:
        nb = _clean_neighbours(x, mask, int(t), window)
        sd = float(np.std(nb, ddof=1)) if nb.size > 1 else 0.0
        value = float(rng.normal(float(np.mean(nb)), sd))
        cleaned[t] = value
        replacements.append(value)

    report = CleanReport(
        indices=tuple(int(i) for i in idx),
        original=tuple(float(v) for v in x[idx]),
        replacements=tuple(replacements),
        window=window,
        threshold=threshold,
        max_fraction=max_fraction,
        seed=seed,
    )
    return cleaned, report
