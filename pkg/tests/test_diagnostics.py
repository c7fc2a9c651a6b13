import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ekdisp import spectral as sp
from ekdisp.diagnostics import (
    ResolutionError,
    WindowError,
    XNormConfig,
    cauchy_variation,
    decay_fit,
    linear_energy,
    modified_energy,
    norm_series,
    weighted_profile_norm,
    wraparound_limit,
    x_norm_snapshot,
)
from ekdisp.model import from_analytic
from ekdisp.propagator import evolve_linear, linear_propagate


def gaussian(grid, width=2.0, carrier=0.0):
    (x,) = grid.centered_coords()
    return sp.to_fourier(sp.Field(grid, np.exp(-(x**2) / (2 * width**2)) * np.exp(1j * carrier * x)))


def random_band_limited(grid, seed, band=2.0):
    rng = np.random.default_rng(seed)
    coeffs = (rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)) * (grid.kabs <= band)
    # the mean of Re psi carries no potential (U vanishes at 0), so leave it out
    coeffs[(0,) * grid.dim] = 1j * coeffs[(0,) * grid.dim].imag
    return sp.Field(grid, 1e-3 * coeffs, "fourier")


def test_weighted_norm_of_gaussian_moment():
    # || x exp(-x^2 / (2 w^2)) ||_2^2 = w^3 sqrt(pi) / 2 in one dimension
    grid = sp.make_grid(1, 256, 32 * np.pi)
    (x,) = grid.coords()
    w = 2.0
    psi = sp.to_fourier(sp.Field(grid, np.exp(-(x**2) / (2 * w**2)) + np.exp(-((x - grid.length) ** 2) / (2 * w**2))))
    assert weighted_profile_norm(psi, 0.0) == pytest.approx(math.sqrt(w**3 * math.sqrt(math.pi) / 2), rel=1e-8)


@pytest.mark.parametrize("order, weights", [(2, (1 / 2,)), (4, (2 / 3, -1 / 12))])
def test_weighted_norm_of_single_mode(order, weights):
    grid = sp.make_grid(1, 64, 10.0)
    values = np.zeros(64, dtype=complex)
    values[5] = 1.0
    expected = math.sqrt(grid.dx * 2 * sum(v * v for v in weights) / grid.dk**2)
    assert weighted_profile_norm(sp.Field(grid, values, "fourier"), 0.0, order) == pytest.approx(expected, rel=1e-13)
    with pytest.raises(ValueError):
        weighted_profile_norm(sp.Field(grid, values, "fourier"), 0.0, 3)


@given(st.floats(0, 2 * math.pi), st.floats(0, 30))
@settings(max_examples=20, deadline=None)
def test_weighted_norm_invariances(theta, t):
    grid = sp.make_grid(1, 128, 32 * np.pi)
    psi = gaussian(grid, 2.0, 0.5)
    base = weighted_profile_norm(psi, 0.0)
    rotated = psi.with_values(np.exp(1j * theta) * psi.values)
    assert weighted_profile_norm(rotated, 0.0) == pytest.approx(base, rel=1e-12)
    # along the linear flow the profile does not move
    assert weighted_profile_norm(linear_propagate(psi, t), t) == pytest.approx(base, rel=1e-10)


def test_x_norm_exponent():
    assert XNormConfig().exponent(3) == pytest.approx(1 / (0.5 - 1 / 3 - 0.01))
    assert XNormConfig().exponent(3) == pytest.approx(6.383, abs=1e-3)
    with pytest.raises(ValueError, match="pass p"):
        XNormConfig().exponent(2)
    assert XNormConfig(p=6.0).exponent(1) == 6.0


def test_x_norm_of_zero_state():
    grid = sp.make_grid(3, 16, 10.0)
    snap = x_norm_snapshot(sp.Field(grid, np.zeros(grid.shape, dtype=complex), "fourier"), 2.0)
    assert (snap.h_N, snap.weighted, snap.w_kp_scaled) == (0.0, 0.0, 0.0)


@given(st.integers(0, 1000))
@settings(max_examples=10, deadline=None)
def test_linearized_energy_matches_linear_energy(quantum_params, seed):
    grid = sp.make_grid(2, 32, 20.0)
    psi = random_band_limited(grid, seed)
    bundle = from_analytic(quantum_params, psi)
    e0 = modified_energy(quantum_params, bundle, 0, linearized=True).total
    assert e0 == pytest.approx(grid.cell_volume * linear_energy(psi), rel=1e-12)


def test_linear_energy_is_conserved_by_linear_flow():
    grid = sp.make_grid(1, 128, 32 * np.pi)
    psi = gaussian(grid, 2.0, 1.0)
    assert linear_energy(linear_propagate(psi, 17.0)) == pytest.approx(linear_energy(psi), rel=1e-13)


def test_high_energy_order_is_refused(quantum_params):
    grid = sp.make_grid(1, 1024, 32 * np.pi)
    psi = gaussian(grid)
    psi = psi.with_values(1e-3 * psi.values)
    with pytest.raises(ResolutionError):
        modified_energy(quantum_params, from_analytic(quantum_params, psi), 6)


@pytest.fixture(scope="module")
def linear_run():
    grid = sp.make_grid(1, 1024, 64 * np.pi)
    psi = gaussian(grid, 1.5, 1.0)
    limit = wraparound_limit(grid, psi)
    times = np.geomspace(1.0, limit, 24)
    return evolve_linear(psi, times), limit


def test_decay_fit_linear_flow(linear_run):
    traj, limit = linear_run
    assert decay_fit(traj, "L2").slope == pytest.approx(0.0, abs=1e-10)
    assert decay_fit(traj, "Linf").slope == pytest.approx(-0.5, abs=0.07)


def test_decay_fit_rejects_bad_windows(linear_run):
    traj, limit = linear_run
    with pytest.raises(WindowError, match="start"):
        decay_fit(traj, "Linf", window=(2.0, limit))
    with pytest.raises(WindowError, match="wrap-around"):
        decay_fit(traj, "Linf", window=(5.0, 2 * limit))
    with pytest.raises(WindowError, match="half a decade"):
        decay_fit(traj, "Linf", window=(5.0, 10.0))
    with pytest.raises(WindowError, match="snapshots"):
        decay_fit(traj, "Linf", min_snapshots=100)


def test_norm_series_length(linear_run):
    traj, _ = linear_run
    assert norm_series(traj, "L2").shape == (len(traj),)


def test_cauchy_variation_vanishes_for_linear_flow():
    grid = sp.make_grid(1, 128, 32 * np.pi)
    traj = evolve_linear(gaussian(grid), [1.0, 2.0])
    assert cauchy_variation(traj, 1.0, 2.0) < 1e-13
    with pytest.raises(ValueError):
        cauchy_variation(traj, 0.5, 1.0)
