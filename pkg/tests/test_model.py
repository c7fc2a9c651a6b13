import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ekdisp import spectral as sp
from ekdisp.model import (
    AdmissibilityError,
    StabilityError,
    constant_capillarity,
    critical_exponents,
    custom_capillarity,
    ell_of_rho,
    from_analytic,
    gtilde_prime_at_one,
    madelung_phase_factor,
    make_model,
    normalize,
    power_pressure,
    preset_model,
    rho_of_ell,
    sound_coefficient_a,
    to_analytic,
)


@pytest.mark.parametrize(
    "capillarity, gamma, alpha, g2",
    [("quantum", 1.0, 0.0, 2.0), ("quantum", 2.0, 0.0, 4.0), ("constant", 1.0, 0.5, 1.0), ("constant", 2.0, 0.5, 3.0)],
)
def test_normalized_constants(capillarity, gamma, alpha, g2):
    # hand-derived: quantum a is constant; constant-K gives a ~ sqrt(rho)
    params = normalize(preset_model(capillarity, "power", rho_c=1.5, c=3.0, gamma=gamma))
    assert params.normalized
    assert math.isclose(params.alpha, alpha, abs_tol=1e-12)
    assert math.isclose(params.gtilde_second, g2, rel_tol=1e-12)
    assert math.isclose(float(sound_coefficient_a(params, 1.5)), 1.0, rel_tol=1e-12)
    assert math.isclose(gtilde_prime_at_one(params), 2.0, rel_tol=1e-12)


def test_quantum_normalization_gives_unit_kappa(quantum_params):
    assert quantum_params.capillarity.coefficient == pytest.approx(1.0)
    assert madelung_phase_factor(quantum_params) == pytest.approx(0.5)


def test_normalizing_twice_is_idempotent(constant_params):
    again = normalize(constant_params)
    assert again.scales == pytest.approx(constant_params.scales)
    assert again.alpha == pytest.approx(constant_params.alpha)


def test_stability_violation_raises():
    with pytest.raises(StabilityError, match="g'"):
        normalize(preset_model("quantum", "power", c=-1.0))


def test_bad_admissible_interval():
    with pytest.raises(ValueError):
        preset_model("quantum", "power", admissible=(1.2, 2.0))


@given(st.floats(0.55, 1.95), st.sampled_from(["quantum", "constant"]))
@settings(max_examples=50, deadline=None)
def test_ell_inverse_roundtrip(rho, cap):
    params = preset_model(cap, "power", kappa=0.7, K0=1.3)
    assert rho_of_ell(params, ell_of_rho(params, rho)) == pytest.approx(rho, rel=1e-13)


def test_custom_law_matches_closed_form():
    K0 = 1.3
    custom = make_model(
        1.0,
        custom_capillarity(lambda r: np.full_like(np.asarray(r, float), K0), lambda r: np.zeros_like(np.asarray(r, float))),
        power_pressure(2.0, 1.0, 1.0),
    )
    closed = make_model(1.0, constant_capillarity(K0), power_pressure(2.0, 1.0, 1.0))
    rho = np.linspace(0.6, 1.9, 11)
    assert np.allclose(ell_of_rho(custom, rho), ell_of_rho(closed, rho), atol=1e-11)
    L = ell_of_rho(closed, rho)
    assert np.allclose(rho_of_ell(custom, L), rho, atol=1e-10)
    assert custom.alpha == pytest.approx(closed.alpha, abs=1e-9)


def test_density_outside_interval_rejected(quantum_params):
    with pytest.raises(AdmissibilityError):
        ell_of_rho(quantum_params, 0.1)
    with pytest.raises(AdmissibilityError):
        rho_of_ell(quantum_params, 10.0)


def test_analytic_roundtrip(constant_params):
    grid = sp.make_grid(2, 32, 20.0)
    x, y = grid.centered_coords()
    env = np.exp(-(x**2 + y**2) / 8.0)
    rho = sp.Field(grid, 1.0 + 0.05 * env * np.cos(x))
    phi = sp.Field(grid, 0.03 * env * np.sin(y))
    bundle = to_analytic(constant_params, rho, phi)
    back = from_analytic(constant_params, bundle.psi)
    assert np.allclose(back.rho.values, bundle.rho.values, atol=1e-13)
    assert np.allclose(back.phi.values, bundle.phi.values, atol=1e-12)


def test_analytic_requires_normalized():
    raw = preset_model("quantum", "power", c=3.0)
    grid = sp.make_grid(1, 16)
    with pytest.raises(ValueError, match="normalized"):
        to_analytic(raw, sp.Field(grid, np.ones(16)), sp.Field(grid, np.zeros(16)))


def test_vacuum_rejected(quantum_params):
    grid = sp.make_grid(1, 16)
    rho = np.ones(16)
    rho[3] = 0.0
    with pytest.raises(AdmissibilityError):
        to_analytic(quantum_params, sp.Field(grid, rho), sp.Field(grid, np.zeros(16)))


def test_critical_exponents_known_values():
    p_s, p_t = critical_exponents(3)
    assert p_s == pytest.approx(2.0)
    assert p_t == pytest.approx((math.sqrt(7) + 4) / 3)
    assert critical_exponents(2)[0] == pytest.approx(1 + math.sqrt(2))
