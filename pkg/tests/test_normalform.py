import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ekdisp import spectral as sp
from ekdisp.normalform import (
    NormalFormDivergence,
    NormalFormParams,
    bilinear_apply,
    bilinear_apply_hat,
    constant_symbol,
    density_quadratic_residual,
    forward,
    inverse,
    normal_form_remainder,
    quadratic_Q,
    symbol_identity_residual,
    transform_state,
    zero_mode,
)


def smooth_pair(grid, amplitude=1e-2):
    # band-limited well inside the lattice so products do not alias
    (x,) = grid.centered_coords()
    phi = amplitude * np.exp(-((x - 1.0) ** 2) / 18.0) * np.cos(0.7 * x)
    l = amplitude * np.exp(-((x + 2.0) ** 2) / 12.0)
    return sp.Field(grid, phi), sp.Field(grid, l)


def analytic_state(grid, amplitude):
    (x,) = grid.centered_coords()
    values = amplitude * np.exp(-(x**2) / 18.0) * (np.cos(0.4 * x) + 1j * np.exp(-((x - 2) ** 2) / 10.0))
    return sp.to_fourier(sp.Field(grid, values))


vec = arrays(np.float64, (3,), elements=st.floats(-10, 10))


@given(vec, vec, st.floats(-3, 3))
@settings(max_examples=200, deadline=None)
def test_symbol_identity_and_bound(eta, zeta, alpha):
    nf = NormalFormParams(alpha)
    assert symbol_identity_residual(nf, eta, zeta) <= 1e-12 * (1 + eta @ eta + zeta @ zeta)
    value = nf.B.eval(eta, zeta)
    assert value == pytest.approx(nf.B.eval(zeta, eta))
    assert abs(value) <= abs(alpha - 1) / 4 + 1e-15


def test_unit_symbol_reproduces_product(grid1d):
    phi, l = smooth_pair(grid1d, 1.0)
    prod = bilinear_apply(constant_symbol(1.0), phi, l)
    assert np.allclose(sp.to_physical(prod).values, phi.values * l.values, atol=1e-13)


def test_gradient_form_matches_direct_form(grid1d):
    nf = NormalFormParams(0.5)
    phi, _ = smooth_pair(grid1d, 1.0)
    phi_hat = sp.to_fourier(phi).values
    direct = bilinear_apply_hat(nf.B, grid1d, phi_hat, phi_hat)
    grad = sp.gradient_hat(grid1d, phi_hat)[0]
    via_grad = -bilinear_apply_hat(nf.B_grad, grid1d, grad, grad)
    assert np.allclose(direct, via_grad, atol=1e-14)


def test_inverse_roundtrip(grid1d):
    nf = NormalFormParams(0.5)
    phi, l = smooth_pair(grid1d, 0.05)
    l1 = forward(nf, phi, l)
    back = inverse(nf, phi, l1)
    assert np.allclose(back.values, sp.to_fourier(l).values, atol=1e-13)


def test_identity_when_alpha_is_one(grid1d):
    nf = NormalFormParams(1.0)
    phi, l = smooth_pair(grid1d)
    assert np.array_equal(forward(nf, phi, l).values, sp.to_fourier(l).values)


def test_inverse_diverges_for_large_data(grid1d):
    nf = NormalFormParams(-3.0)
    phi, l = smooth_pair(grid1d, 10.0)
    with pytest.raises(NormalFormDivergence):
        inverse(nf, phi, forward(nf, phi, l))


def test_bilinear_refuses_large_grids():
    grid = sp.make_grid(3, 64)
    zeros = np.zeros(grid.shape, dtype=complex)
    with pytest.raises(ValueError, match="limited"):
        bilinear_apply_hat(constant_symbol(1.0), grid, zeros, zeros)


def test_transformed_density_term_has_zero_mean(grid1d, constant_params):
    psi = analytic_state(grid1d, 1e-2)
    raw = abs(zero_mode(density_quadratic_residual(constant_params, psi, transformed=False)))
    done = abs(zero_mode(density_quadratic_residual(constant_params, psi, transformed=True)))
    assert raw > 1e-6
    assert done < 1e-12 * raw


def test_quadratic_part_is_homogeneous(grid1d, constant_params):
    z = transform_state(constant_params, analytic_state(grid1d, 1e-2))
    q1 = quadratic_Q(constant_params, z).values
    q2 = quadratic_Q(constant_params, z.with_values(2 * z.values)).values
    assert np.allclose(q2, 4 * q1, atol=1e-16)


def test_remainder_is_cubic(grid1d, constant_params):
    norms = [
        sp.hs_norm(normal_form_remainder(constant_params, analytic_state(grid1d, a)), 0) for a in (1e-3, 2e-3)
    ]
    assert norms[1] / norms[0] == pytest.approx(8.0, rel=0.02)
