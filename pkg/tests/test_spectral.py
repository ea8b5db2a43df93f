import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from freqcp.spectral import (
    FrequencyGrid,
    SeriesError,
    as_series,
    dft,
    dft_direct,
    dft_full,
    dirichlet_magnitude,
    expected_periodogram,
    full_periodogram,
    model_g,
    model_g_deriv,
    model_g_matrix,
    periodogram,
    periodogram_batch,
)

finite = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False, allow_infinity=False)
series_st = arrays(np.float64, st.integers(8, 200), elements=finite)


# --- validation -------------------------------------------------------------


def test_short_series_rejected():
    with pytest.raises(SeriesError):
        as_series(np.ones(7))
    assert as_series(np.ones(8)).size == 8


@pytest.mark.parametrize("bad", [np.nan, np.inf, -np.inf])
def test_non_finite_rejected(bad):
    x = np.ones(16)
    x[5] = bad
    with pytest.raises(SeriesError, match="index 5"):
        as_series(x)


def test_two_dimensional_rejected():
    with pytest.raises(SeriesError):
        as_series(np.ones((4, 4)))


def test_grid_layout():
    for T in (8, 9, 64, 257):
        grid = FrequencyGrid(T)
        assert grid.M == T // 2
        assert grid.k[0] == 1 and grid.k[-1] == T // 2
        assert np.all(np.diff(grid.omega) > 0)
        assert grid.omega[0] > 0 and grid.omega[-1] <= math.pi
    assert FrequencyGrid(64).omega[-1] == math.pi


# --- dft ----------------------------------------------------------------------


def test_dft_constant_zero_frequency():
    assert dft(np.full(12, 2.5), 0) == pytest.approx(12 * 2.5)


@pytest.mark.parametrize("k", [1, 3, 6, 11])
def test_dft_constant_nonzero_frequency(k):
    c = 2.5
    assert abs(dft(np.full(12, c), k)) < 1e-10 * 12 * c


@pytest.mark.parametrize("k", [0, 1, 2, 3])
def test_dft_delta(k):
    assert dft([1.0, 0.0, 0.0, 0.0], k) == pytest.approx(1.0)


def test_dft_index_out_of_range():
    with pytest.raises(IndexError):
        dft(np.ones(8), 8)


def test_dft_sign_convention():
    # sum sin(w t) e^{+i w t} = iT/2; the opposite sign convention gives -iT/2
    T = 16
    t = np.arange(T)
    x = np.sin(2 * np.pi * t / T)
    assert dft(x, 1) == pytest.approx(1j * T / 2)


@given(series_st)
@settings(max_examples=50, deadline=None)
def test_fft_matches_direct_sum(x):
    scale = max(1.0, float(np.max(np.abs(x))))
    np.testing.assert_allclose(dft_full(x), dft_direct(x), atol=1e-9 * scale * x.size)


def test_fft_matches_direct_sum_large():
    x = np.random.default_rng(0).standard_normal(4096)
    np.testing.assert_allclose(dft_full(x), dft_direct(x), atol=1e-8)
    for k in (1, 100, 2048):
        assert dft(x, k) == pytest.approx(dft_full(x)[k], abs=1e-8)


# --- periodogram --------------------------------------------------------------


def test_periodogram_constant_is_zero():
    pg = periodogram(np.full(32, 3.0))
    assert pg.values.shape == (16,)
    assert np.all(pg.values < 1e-24)


def test_periodogram_alternating():
    # |sum (-1)^t e^{i pi t}|^2 / 4 = 16 / 4 (T = 4 is below the analysis minimum,
    # so the full-spectrum routine is used)
    I = full_periodogram([1.0, -1.0, 1.0, -1.0])
    assert I[2] == pytest.approx(4.0)
    assert I[1] == pytest.approx(0.0, abs=1e-15)


@given(series_st)
@settings(max_examples=100, deadline=None)
def test_parseval(x):
    energy = float(np.sum(x**2))
    assert abs(full_periodogram(x).sum() - energy) <= 1e-6 * energy + 1e-12


@given(series_st)
@settings(max_examples=50, deadline=None)
def test_periodogram_nonnegative(x):
    assert np.all(periodogram(x).values >= 0)


@pytest.mark.parametrize("c", [0.1, -3.0, 10.0])
def test_periodogram_scaling(c):
    x = np.random.default_rng(1).standard_normal(101)
    np.testing.assert_allclose(periodogram(c * x).values, c**2 * periodogram(x).values, rtol=1e-12)


def test_batch_matches_single():
    X = np.random.default_rng(2).standard_normal((5, 65))
    batch = periodogram_batch(X)
    for row, I in zip(X, batch):
        np.testing.assert_allclose(I, periodogram(row).values, rtol=1e-12, atol=1e-14)


# --- dirichlet kernel ------------------------------------------------------------


@pytest.mark.parametrize("omega", [0.1, 1.0, 3.0, 5.5])
def test_dirichlet_single_term(omega):
    assert dirichlet_magnitude(1, omega) == pytest.approx(1.0)


def test_dirichlet_zero():
    assert dirichlet_magnitude(4, math.pi) == pytest.approx(0.0, abs=1e-15)


def test_dirichlet_small_frequency_bound():
    assert dirichlet_magnitude(100, 0.01) <= 200.000833335764


def test_dirichlet_matches_geometric_sum():
    for tau in (3, 17, 64):
        for omega in (0.3, 2.0):
            direct = abs(np.sum(np.exp(1j * omega * np.arange(tau))))
            assert dirichlet_magnitude(tau, omega) == pytest.approx(direct, rel=1e-12)


def test_dirichlet_bound_on_grid():
    T = 512
    omega = 2 * np.pi * np.arange(1, T) / T
    bound = 1 / np.abs(np.sin(omega / 2)) + 1e-12
    for tau in range(1, T + 1):
        vals = np.array([dirichlet_magnitude(tau, w) for w in omega[::7]])
        assert np.all(vals <= bound[::7])


def test_dirichlet_tends_to_tau():
    for tau in (5, 100, 512):
        assert dirichlet_magnitude(tau, 1e-9) == pytest.approx(tau, rel=1e-9)
    with pytest.raises(ValueError):
        dirichlet_magnitude(5, 0.0)


# --- model function ---------------------------------------------------------------


def test_g_vanishes_at_integer_multiple():
    assert model_g(0.25, FrequencyGrid(8))[3] == pytest.approx(0.0, abs=1e-30)


def test_g_value_half():
    assert model_g(0.5, FrequencyGrid(8))[0] == pytest.approx(0.853553390593274, rel=1e-12)


def test_dg_value():
    assert model_g_deriv(0.25, FrequencyGrid(8))[0] == pytest.approx(2.681517061334488, rel=1e-12)


def test_dg_even_k_at_half():
    dg = model_g_deriv(0.5, FrequencyGrid(64))
    assert np.all(np.abs(dg[1::2]) < 1e-10)


@pytest.mark.parametrize("T", [64, 257, 1024])
@pytest.mark.parametrize("lam", [0.1, 0.23, 0.4, 0.49])
def test_g_symmetry(T, lam):
    grid = FrequencyGrid(T)
    np.testing.assert_allclose(model_g(lam, grid), model_g(1 - lam, grid), rtol=0, atol=1e-12)
    np.testing.assert_allclose(
        model_g_deriv(lam, grid), -model_g_deriv(1 - lam, grid), rtol=0, atol=1e-9 * T
    )


def test_g_nonnegative():
    grid = FrequencyGrid(300)
    for lam in np.linspace(0.01, 0.99, 50):
        assert np.all(model_g(lam, grid) >= 0)


def test_g_domain():
    with pytest.raises(ValueError):
        model_g(0.0, FrequencyGrid(16))
    with pytest.raises(ValueError):
        model_g_deriv(1.0, FrequencyGrid(16))


def test_gradient_finite_difference():
    grid = FrequencyGrid(256)
    h = 1e-6
    for lam in np.random.default_rng(3).uniform(0.02, 0.98, 20):
        fd = (model_g(lam + h, grid) - model_g(lam - h, grid)) / (2 * h)
        dg = model_g_deriv(lam, grid)
        # relative error on the scale of the derivative vector (individual
        # entries can pass through zero)
        assert np.max(np.abs(fd - dg)) <= 1e-5 * np.max(np.abs(dg))


def test_g_matrix_rows():
    grid = FrequencyGrid(50)
    lams = [0.1, 0.3, 0.77]
    G = model_g_matrix(lams, grid)
    for row, lam in zip(G, lams):
        np.testing.assert_allclose(row, model_g(lam, grid), rtol=1e-12, atol=1e-15)


def test_expected_periodogram():
    grid = FrequencyGrid(8)
    assert expected_periodogram((1.0, 4.0, 0.25), grid)[0] == pytest.approx(2.707106781186548)
    np.testing.assert_array_equal(expected_periodogram((2.0, 0.0, 0.3), grid), np.full(4, 2.0))


def test_model_matches_noiseless_step():
    # a noiseless step of size d at tau has I_k = d^2 g_k(tau / T) exactly
    T, tau, d = 200, 60, 1.7
    x = np.r_[np.zeros(tau), np.full(T - tau, d)]
    pg = periodogram(x)
    np.testing.assert_allclose(pg.values, d**2 * model_g(tau / T, pg.grid), rtol=1e-10, atol=1e-12)


# --- small-k limits of the kernel ratios -------------------------------------------


def test_small_k_limits():
    # the ratios are continuous in k; their k -> 0 limits, evaluated at k = 1e-4
    T, lam, k = 4096, 0.3, 1e-4
    s = np.sin(np.pi * k / T)
    ratios = [
        (np.sin(np.pi * k * lam) ** 2 / s**2, lam**2 * T**2),
        (k * np.sin(2 * np.pi * k * lam) / s**2, 2 * lam * T**2 / np.pi),
        (np.sin(np.pi * k * lam) ** 4 / s**4, lam**4 * T**4),
        (k * np.sin(2 * np.pi * k * lam) * np.sin(np.pi * k * lam) ** 2 / s**4, 2 * lam**3 * T**4 / np.pi),
        (k**2 * np.sin(2 * np.pi * k * lam) ** 2 / s**4, 4 * lam**2 * T**4 / np.pi**2),
    ]
    for value, limit in ratios:
        assert value == pytest.approx(limit, rel=5e-3)


def test_small_k_ratio_at_unit_k_is_far_from_limit():
    # at k = 1 the first ratio is nowhere near its limit; recorded so the
    # k -> 0 reading above is not mistaken for a k = 1 property
    T, lam = 4096, 0.3
    value = np.sin(np.pi * lam) ** 2 / np.sin(np.pi / T) ** 2
    assert abs(value / (lam**2 * T**2) - 1) > 0.2
