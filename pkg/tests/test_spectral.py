import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ekdisp import spectral as sp


@given(st.integers(0, 2**32 - 1), st.sampled_from([1, 2]))
@settings(max_examples=25, deadline=None)
def test_fft_roundtrip_and_parseval(seed, dim):
    grid = sp.make_grid(dim, 16, 10.0)
    v = np.random.default_rng(seed).standard_normal(grid.shape)
    vhat = sp.fft(grid, v)
    assert np.allclose(sp.ifft(grid, vhat), v, atol=1e-13)
    assert np.isclose(np.sum(np.abs(vhat) ** 2), np.sum(v**2), rtol=1e-12)


def test_field_space_tags():
    grid = sp.make_grid(1, 16)
    f = sp.Field(grid, np.ones(16))
    with pytest.raises(ValueError):
        sp.transform(f, "inverse")
    assert sp.to_physical(sp.to_fourier(f)).space == "physical"


def test_derivative_of_sine():
    grid = sp.make_grid(1, 64, 2 * np.pi)
    (x,) = grid.coords()
    d = sp.ifft(grid, sp.gradient_hat(grid, sp.fft(grid, np.sin(3 * x)))[0])
    assert np.allclose(np.real(d), 3 * np.cos(3 * x), atol=1e-12)


def test_laplacian_and_divergence_agree():
    grid = sp.make_grid(2, 32, 2 * np.pi)
    x, y = grid.coords()
    f = np.sin(x) * np.cos(2 * y) * np.ones(grid.shape)
    fh = sp.fft(grid, f)
    lap = sp.laplacian_hat(grid, fh)
    div = sp.divergence_hat(grid, sp.gradient_hat(grid, fh))
    assert np.allclose(lap, div, atol=1e-10)
    assert np.allclose(np.real(sp.ifft(grid, lap)), -5 * f, atol=1e-10)


def test_norm_parsing():
    assert sp.parse_norm_kind("Linf") == ("Lp", {"p": np.inf})
    assert sp.parse_norm_kind("W3,4") == ("Wkp", {"k": 3, "p": 4.0})
    assert sp.parse_norm_kind("Hdot0.5") == ("Hdot", {"s": 0.5})
    with pytest.raises(ValueError):
        sp.parse_norm_kind("Q2")


def test_lp_norm_of_constant():
    grid = sp.make_grid(2, 16, 4.0)
    f = sp.Field(grid, 3.0 * np.ones(grid.shape))
    assert np.isclose(sp.lp_norm(f, 2), 3.0 * 4.0)
    assert np.isclose(sp.lp_norm(f, np.inf), 3.0)


def test_hs_norm_of_single_mode():
    grid = sp.make_grid(1, 32, 2 * np.pi)
    (x,) = grid.coords()
    f = sp.Field(grid, np.cos(2 * x))
    l2 = np.sqrt(np.pi)
    assert np.isclose(sp.hs_norm(f, 0), l2)
    assert np.isclose(sp.hs_norm(f, 1), l2 * np.sqrt(5.0))
    assert np.isclose(sp.hdot_norm(f, 1), l2 * 2.0)


def test_dyadic_weights_partition_unity():
    grid = sp.make_grid(2, 64, 20.0)
    total = sum(sp.dyadic_weight(grid, j) for j in sp.dyadic_range(grid))
    assert np.allclose(total, 1.0, atol=1e-12)


def test_dealias_mask_keeps_low_modes():
    grid = sp.make_grid(1, 48, 2 * np.pi)
    mask = sp.dealias_mask(grid, 2 / 3)
    assert mask[0] and mask[16] and not mask[17]
    with pytest.raises(ValueError):
        sp.dealias_mask(grid, 0.0)


def test_non_finite_symbol_rejected():
    grid = sp.make_grid(1, 16)
    with pytest.raises(ValueError):
        sp.evaluate_symbol(grid, lambda r: 1.0 / r)
