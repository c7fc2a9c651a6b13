"""
Quadratic normal form for the density equation.

The change of unknown l1 = l - B[phi, phi] + B[l, l] with

    B(eta, zeta) = (alpha - 1) eta.zeta / (2 (2 + |eta|^2 + |zeta|^2))

removes the quadratic term (alpha - 1) grad(phi).grad(l), which has no
divergence structure, from the equation for l.  What is left at quadratic
order is -alpha div(l grad phi), whose mean vanishes.

Bilinear multipliers are applied by an exact double sum over the lattice
with out-of-band frequencies dropped, so this module is meant for small
grids (at most 2^16 modes).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import spectral as sp
from .dispersion import symbol_H, symbol_U
from .model import ModelParams, real_imag_parts
from .propagator import nonlinearity_hat, potential_and_density
from .spectral import Field, SpectralGrid

MAX_EXACT_MODES = 2**16

SymbolFn = Callable[[np.ndarray, np.ndarray], np.ndarray]


class NormalFormDivergence(RuntimeError):
    """The fixed-point inversion of the normal form stopped contracting."""


@dataclass(frozen=True)
class BilinearSymbol:
    """Symbol evaluated on frequency arrays of shape (..., d)."""

    eval: SymbolFn
    symmetric: bool = True
    label: str = "custom"


@dataclass(frozen=True)
class NormalFormParams:
    alpha: float

    @property
    def B(self) -> BilinearSymbol:
        c = 0.5 * (self.alpha - 1.0)

        def sym(eta: np.ndarray, zeta: np.ndarray) -> np.ndarray:
            dot = np.sum(eta * zeta, axis=-1)
            return c * dot / (2.0 + np.sum(eta * eta, axis=-1) + np.sum(zeta * zeta, axis=-1))

        return BilinearSymbol(sym, True, "normal_form")

    @property
    def B_grad(self) -> BilinearSymbol:
        """Symbol acting on gradients: B[phi, phi] = -sum_i B_grad[d_i phi, d_i phi]."""
        c = 0.5 * (self.alpha - 1.0)

        def sym(eta: np.ndarray, zeta: np.ndarray) -> np.ndarray:
            return c / (2.0 + np.sum(eta * eta, axis=-1) + np.sum(zeta * zeta, axis=-1))

        return BilinearSymbol(sym, True, "normal_form_gradient")

    @classmethod
    def from_model(cls, params: ModelParams) -> "NormalFormParams":
        return cls(alpha=params.alpha)


def constant_symbol(value: float) -> BilinearSymbol:
    return BilinearSymbol(lambda e, z: np.full(e.shape[:-1], float(value)), True, f"constant({value})")


# --- exact bilinear application -------------------------------------------------


def _lattice_indices(grid: SpectralGrid) -> np.ndarray:
    """Integer frequency indices in [-n/2, n/2) for every mode, shape (N, d)."""
    m = np.fft.fftfreq(grid.n, d=1.0 / grid.n).astype(int)
    mesh = np.meshgrid(*([m] * grid.dim), indexing="ij")
    return np.stack([x.ravel() for x in mesh], axis=-1)


def _flat_index(grid: SpectralGrid, idx: np.ndarray) -> np.ndarray:
    n = grid.n
    flat = np.zeros(idx.shape[:-1], dtype=np.int64)
    for axis in range(grid.dim):
        flat = flat * n + np.mod(idx[..., axis], n)
    return flat


def bilinear_apply_hat(
    symbol: BilinearSymbol, grid: SpectralGrid, f_hat: np.ndarray, g_hat: np.ndarray, chunk: int = 256
) -> np.ndarray:
    """(B[f,g])^(xi) = n^{-d/2} sum_eta B(eta, xi - eta) f(eta) g(xi - eta)."""
    total = grid.n**grid.dim
    if total > MAX_EXACT_MODES:
        raise ValueError(f"grid has {total} modes; the exact bilinear path is limited to {MAX_EXACT_MODES}")
    idx = _lattice_indices(grid)
    half = grid.n // 2
    f_flat = f_hat.ravel()
    g_flat = g_hat.ravel()
    out = np.zeros(total, dtype=complex)
    active = np.nonzero(f_flat)[0]
    for start in range(0, active.size, chunk):
        eta_ids = active[start : start + chunk]
        eta = idx[eta_ids]
        zeta = idx[None, :, :] - eta[:, None, :]
        inband = np.all((zeta >= -half) & (zeta < half), axis=-1)
        sym = symbol.eval(grid.dk * eta[:, None, :].astype(float), grid.dk * zeta.astype(float))
        g_vals = g_flat[_flat_index(grid, zeta)]
        contrib = np.where(inband, sym * f_flat[eta_ids][:, None] * g_vals, 0.0)
        out += contrib.sum(axis=0)
    return (out / np.sqrt(total)).reshape(grid.shape)


def bilinear_apply(symbol: BilinearSymbol, f: Field, g: Field) -> Field:
    if f.grid != g.grid:
        raise ValueError("fields live on different grids")
    f_hat = sp.to_fourier(f).values
    g_hat = sp.to_fourier(g).values
    return Field(f.grid, bilinear_apply_hat(symbol, f.grid, f_hat, g_hat), "fourier")


def symbol_identity_residual(params: NormalFormParams, eta: np.ndarray, zeta: np.ndarray) -> np.ndarray:
    """|2 B (2 + |eta|^2 + |zeta|^2) + (1 - alpha) eta.zeta|."""
    eta = np.asarray(eta, dtype=float)
    zeta = np.asarray(zeta, dtype=float)
    weight = 2.0 + np.sum(eta * eta, axis=-1) + np.sum(zeta * zeta, axis=-1)
    dot = np.sum(eta * zeta, axis=-1)
    return np.abs(2.0 * params.B.eval(eta, zeta) * weight + (1.0 - params.alpha) * dot)


# --- the change of unknown ----------------------------------------------------


def _b_hat(nf: NormalFormParams, grid: SpectralGrid, phi_hat: np.ndarray, l_hat: np.ndarray) -> np.ndarray:
    """Fourier coefficients of b = -B[phi, phi] + B[l, l], using the gradient form for phi."""
    if nf.alpha == 1.0:
        return np.zeros(grid.shape, dtype=complex)
    grad = sp.gradient_hat(grid, phi_hat)
    bphi = -sum(bilinear_apply_hat(nf.B_grad, grid, grad[i], grad[i]) for i in range(grid.dim))
    return -bphi + bilinear_apply_hat(nf.B, grid, l_hat, l_hat)


def forward(params: ModelParams | NormalFormParams, phi: Field, l: Field) -> Field:
    """l1 = l - B[phi, phi] + B[l, l]."""
    nf = params if isinstance(params, NormalFormParams) else NormalFormParams.from_model(params)
    grid = phi.grid
    phi_hat = sp.to_fourier(phi).values
    l_hat = sp.to_fourier(l).values
    return Field(grid, l_hat + _b_hat(nf, grid, phi_hat, l_hat), "fourier")


def inverse(
    params: ModelParams | NormalFormParams,
    phi: Field,
    l1: Field,
    tol: float = 1e-13,
    max_iter: int = 200,
) -> Field:
    """Solve l = l1 + B[phi, phi] - B[l, l] by fixed-point iteration."""
    nf = params if isinstance(params, NormalFormParams) else NormalFormParams.from_model(params)
    grid = phi.grid
    phi_hat = sp.to_fourier(phi).values
    l1_hat = sp.to_fourier(l1).values
    if nf.alpha == 1.0:
        return Field(grid, l1_hat.copy(), "fourier")
    grad = sp.gradient_hat(grid, phi_hat)
    bphi = -sum(bilinear_apply_hat(nf.B_grad, grid, grad[i], grad[i]) for i in range(grid.dim))
    l_hat = l1_hat.copy()
    prev = np.inf
    scale = max(1.0, float(np.linalg.norm(l1_hat)))
    for _ in range(max_iter):
        new = l1_hat + bphi - bilinear_apply_hat(nf.B, grid, l_hat, l_hat)
        if not np.all(np.isfinite(new)):
            raise NormalFormDivergence("normal form inversion produced non-finite values")
        dist = float(np.linalg.norm(new - l_hat) * np.sqrt(grid.cell_volume))
        l_hat = new
        if dist <= tol * scale:
            return Field(grid, l_hat, "fourier")
        if dist > prev:
            raise NormalFormDivergence(
                f"fixed-point iteration is not contracting (step {dist:.3g} > previous {prev:.3g}); "
                "data lie outside the neighbourhood where the normal form is invertible"
            )
        prev = dist
    raise NormalFormDivergence(f"no convergence after {max_iter} iterations")


def transform_state(params: ModelParams, psi: Field) -> Field:
    """z = phi1 + i l1 with phi1 = Re psi and l1 the normal form of l."""
    grid = psi.grid
    psi_hat = sp.to_fourier(psi).values
    phi_hat, l_hat = potential_and_density(grid, psi_hat)
    re_hat, _ = real_imag_parts(grid, psi_hat)
    l1_hat = l_hat + _b_hat(NormalFormParams.from_model(params), grid, phi_hat, l_hat)
    return Field(grid, re_hat + 1j * l1_hat, "fourier")


def quadratic_Q(params: ModelParams, z: Field) -> Field:
    """
    Quadratic part of the transformed equation d/dt z - iHz:

        U(alpha l1 Lap l1 - (|grad phi|^2 - |grad l1|^2)/2 - gtilde''(1) l1^2 / 2
          + (2 - Lap) b(phi, l1)) - i alpha div(l1 grad phi)

    with phi = U^{-1} Re z and b = -B[phi, phi] + B[l1, l1].
    """
    grid = z.grid
    alpha = params.alpha
    z_hat = sp.to_fourier(z).values
    phi_hat, l1_hat = potential_and_density(grid, z_hat)
    l1 = np.real(sp.ifft(grid, l1_hat))
    grad_phi = np.real(sp.ifft(grid, sp.gradient_hat(grid, phi_hat)))
    grad_l1 = np.real(sp.ifft(grid, sp.gradient_hat(grid, l1_hat)))
    lap_l1 = np.real(sp.ifft(grid, -grid.k2 * l1_hat))
    real_part = (
        alpha * l1 * lap_l1
        - 0.5 * (np.sum(grad_phi**2, axis=0) - np.sum(grad_l1**2, axis=0))
        - 0.5 * params.gtilde_second * l1**2
    )
    b_hat = _b_hat(NormalFormParams.from_model(params), grid, phi_hat, l1_hat)
    real_hat = sp.fft(grid, real_part) + (2.0 + grid.k2) * b_hat
    flux_hat = sp.fft(grid, l1 * grad_phi)
    div_hat = sp.divergence_hat(grid, flux_hat)
    return Field(grid, symbol_U(grid.kabs) * real_hat - 1j * alpha * div_hat, "fourier")


def transformed_time_derivative(params: ModelParams, psi: Field, fraction: float = 1.0) -> Field:
    """
    d/dt z along the exact flow, by the chain rule:

        dz/dt = dpsi/dt + i db/dt,   db/dt = -2 B[phi, dphi/dt] + 2 B[l, dl/dt]

    with dpsi/dt = iH psi + N(psi).
    """
    grid = psi.grid
    nf = NormalFormParams.from_model(params)
    psi_hat = sp.to_fourier(psi).values
    dpsi = 1j * symbol_H(grid.kabs) * psi_hat + nonlinearity_hat(params, grid, psi_hat, fraction)
    phi_hat, l_hat = potential_and_density(grid, psi_hat)
    dphi_hat, dl_hat = potential_and_density(grid, dpsi)
    db = 2.0 * bilinear_apply_hat(nf.B, grid, l_hat, dl_hat) - 2.0 * bilinear_apply_hat(nf.B, grid, phi_hat, dphi_hat)
    return Field(grid, dpsi + 1j * db, "fourier")


def normal_form_remainder(params: ModelParams, psi: Field, fraction: float = 1.0) -> Field:
    """dz/dt - iHz - Q(z); cubic in the amplitude."""
    grid = psi.grid
    z = transform_state(params, psi)
    dz = transformed_time_derivative(params, psi, fraction).values
    out = dz - 1j * symbol_H(grid.kabs) * z.values - quadratic_Q(params, z).values
    return Field(grid, out, "fourier")


def density_quadratic_residual(params: ModelParams, psi: Field, transformed: bool = True) -> Field:
    """
    Quadratic part of the right-hand side of the density equation.

    Untransformed: -grad(phi).grad(l) - alpha l Lap phi.  Transformed, the
    time derivative of b along the linear flow, 2B[phi, (2 - Lap) l] +
    2B[-Lap phi, l], is added; the sum equals -alpha div(l grad phi).
    """
    grid = psi.grid
    psi_hat = sp.to_fourier(psi).values
    phi_hat, l_hat = potential_and_density(grid, psi_hat)
    l = np.real(sp.ifft(grid, l_hat))
    grad_phi = np.real(sp.ifft(grid, sp.gradient_hat(grid, phi_hat)))
    grad_l = np.real(sp.ifft(grid, sp.gradient_hat(grid, l_hat)))
    lap_phi = np.real(sp.ifft(grid, -grid.k2 * phi_hat))
    quad = -np.sum(grad_phi * grad_l, axis=0) - params.alpha * l * lap_phi
    out = sp.fft(grid, quad)
    if transformed:
        nf = NormalFormParams.from_model(params)
        out = out + 2.0 * bilinear_apply_hat(nf.B, grid, phi_hat, (2.0 + grid.k2) * l_hat)
        out = out + 2.0 * bilinear_apply_hat(nf.B, grid, grid.k2 * phi_hat, l_hat)
    return Field(grid, out, "fourier")


def zero_mode(field: Field) -> complex:
    """Mean-mode coefficient of a Fourier-space field."""
    return complex(field.values[(0,) * field.grid.dim])


__all__ = [
    "BilinearSymbol",
    "MAX_EXACT_MODES",
    "NormalFormDivergence",
    "NormalFormParams",
    "bilinear_apply",
    "constant_symbol",
    "density_quadratic_residual",
    "forward",
    "inverse",
    "normal_form_remainder",
    "quadratic_Q",
    "symbol_identity_residual",
    "transform_state",
    "transformed_time_derivative",
    "zero_mode",
]
