"""
Constitutive laws and changes of unknowns for the Euler-Korteweg system.

The chain of variables is

    (rho, u)  ->  (L, u, w)  ->  (phi, l)  ->  psi = U phi + i l

with L = ell(rho) the primitive of sqrt(K/rho) normalised by ell(rho_c) = 1,
l = L - 1, u = grad phi and U = sqrt(-Lap / (2 - Lap)).  The analytic
formulation assumes the normalisation a(rho_c) = 1 and gtilde'(1) = 2,
which `normalize` enforces by rescaling time, space and the laws.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Literal

import numpy as np
from numpy.polynomial import chebyshev as cheb
from scipy import integrate

from . import spectral as sp
from .dispersion import symbol_U, symbol_U_inv
from .spectral import Field

Law = Callable[[np.ndarray], np.ndarray]


class StabilityError(ValueError):
    """Raised when the stability condition g'(rho_c) > 0 fails."""


class AdmissibilityError(ValueError):
    """Density or L value outside the admissible interval (vacuum proximity)."""


@dataclass(frozen=True)
class CapillarityLaw:
    """Capillarity coefficient K(rho) > 0 with its derivative."""

    kind: Literal["quantum", "constant", "custom"]
    K: Law
    K_prime: Law
    coefficient: float = float("nan")

    def scaled(self, factor: float) -> "CapillarityLaw":
        if self.kind == "quantum":
            return quantum_capillarity(self.coefficient * factor)
        if self.kind == "constant":
            return constant_capillarity(self.coefficient * factor)
        K, Kp = self.K, self.K_prime
        return CapillarityLaw("custom", lambda r: factor * K(r), lambda r: factor * Kp(r))


def quantum_capillarity(kappa: float) -> CapillarityLaw:
    """K = kappa / rho (quantum hydrodynamics)."""
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    return CapillarityLaw(
        "quantum",
        lambda r: kappa / np.asarray(r, dtype=float),
        lambda r: -kappa / np.asarray(r, dtype=float) ** 2,
        float(kappa),
    )


def constant_capillarity(K0: float) -> CapillarityLaw:
    if K0 <= 0:
        raise ValueError("K0 must be positive")
    return CapillarityLaw(
        "constant",
        lambda r: np.full_like(np.asarray(r, dtype=float), K0),
        lambda r: np.zeros_like(np.asarray(r, dtype=float)),
        float(K0),
    )


def custom_capillarity(K: Law, K_prime: Law) -> CapillarityLaw:
    return CapillarityLaw("custom", K, K_prime)


@dataclass(frozen=True)
class PressureLaw:
    """Pressure term g(rho) with first and (optionally) second derivative."""

    g: Law
    g_prime: Law
    g_second: Law | None = None
    label: str = "custom"

    def affine(self, factor: float, shift: float) -> "PressureLaw":
        """Return factor * (g - shift)."""
        g, gp, gs = self.g, self.g_prime, self.g_second
        return PressureLaw(
            lambda r: factor * (g(r) - shift),
            lambda r: factor * gp(r),
            None if gs is None else (lambda r: factor * gs(r)),
            self.label,
        )


def power_pressure(c: float, gamma: float, rho_c: float) -> PressureLaw:
    """g(rho) = c (rho^gamma - rho_c^gamma)."""
    return PressureLaw(
        lambda r: c * (np.asarray(r, dtype=float) ** gamma - rho_c**gamma),
        lambda r: c * gamma * np.asarray(r, dtype=float) ** (gamma - 1),
        lambda r: c * gamma * (gamma - 1) * np.asarray(r, dtype=float) ** (gamma - 2),
        f"power(c={c}, gamma={gamma})",
    )


@dataclass(frozen=True)
class ModelParams:
    """
    Laws, reference density and derived constants.

    alpha is a'(1) in the L variable and gtilde_second is gtilde''(1).
    `scales` records (time, length, potential) factors from `normalize`:
    t = time * t', x = length * x', phi = potential * phi'.
    """

    rho_c: float
    capillarity: CapillarityLaw
    pressure: PressureLaw
    alpha: float
    gtilde_second: float
    normalized: bool = False
    admissible: tuple[float, float] = (0.5, 2.0)
    scales: dict = field(default_factory=lambda: {"time": 1.0, "length": 1.0, "potential": 1.0})

    @property
    def rho_bounds(self) -> tuple[float, float]:
        return (self.admissible[0] * self.rho_c, self.admissible[1] * self.rho_c)


def make_model(
    rho_c: float,
    capillarity: CapillarityLaw,
    pressure: PressureLaw,
    admissible: tuple[float, float] = (0.5, 2.0),
) -> ModelParams:
    """Raw (unnormalised) parameters with alpha and gtilde''(1) filled in."""
    if rho_c <= 0:
        raise ValueError("rho_c must be positive")
    lo, hi = admissible
    if not 0 < lo < 1 < hi:
        raise ValueError("admissible interval factors must satisfy 0 < lo < 1 < hi")
    base = ModelParams(rho_c, capillarity, pressure, 0.0, 0.0, False, (float(lo), float(hi)))
    K = float(np.asarray(capillarity.K(np.array(rho_c))))
    if not K > 0:
        raise ValueError("capillarity must be positive at rho_c")
    return replace(base, alpha=_alpha(base), gtilde_second=_gtilde_second(base))


# --- the L variable ---------------------------------------------------------


def _as_array(x) -> np.ndarray:
    return np.asarray(x, dtype=float)


def _check_rho(params: ModelParams, rho: np.ndarray) -> None:
    lo, hi = params.rho_bounds
    if np.any(~np.isfinite(rho)) or np.any(rho < lo * (1 - 1e-14)) or np.any(rho > hi * (1 + 1e-14)):
        raise AdmissibilityError(f"density outside admissible interval [{lo:g}, {hi:g}]")


def _ell_quad(params: ModelParams, rho: float) -> float:
    K = params.capillarity.K
    val, _ = integrate.quad(
        lambda s: math.sqrt(float(K(np.array(s))) / s), params.rho_c, rho, epsabs=1e-14, epsrel=1e-13, limit=200
    )
    return 1.0 + val


_CHEB_CACHE: dict[tuple, cheb.Chebyshev] = {}


def _ell_custom(params: ModelParams, rho: np.ndarray) -> np.ndarray:
    # Chebyshev proxy of the quadrature on the admissible interval
    key = (id(params.capillarity), params.rho_c, params.admissible)
    proxy = _CHEB_CACHE.get(key)
    if proxy is None:
        lo, hi = params.rho_bounds
        proxy = cheb.Chebyshev.interpolate(np.vectorize(lambda r: _ell_quad(params, r)), 96, domain=[lo, hi])
        _CHEB_CACHE[key] = proxy
    return proxy(rho)


def ell_of_rho(params: ModelParams, rho) -> np.ndarray:
    """L = 1 + int_{rho_c}^{rho} sqrt(K(s)/s) ds."""
    rho = _as_array(rho)
    _check_rho(params, rho)
    law = params.capillarity
    if law.kind == "quantum":
        return 1.0 + math.sqrt(law.coefficient) * np.log(rho / params.rho_c)
    if law.kind == "constant":
        return 1.0 + 2.0 * math.sqrt(law.coefficient) * (np.sqrt(rho) - math.sqrt(params.rho_c))
    if rho.ndim == 0:
        return np.asarray(_ell_quad(params, float(rho)))
    return _ell_custom(params, rho)


def ell_prime(params: ModelParams, rho) -> np.ndarray:
    rho = _as_array(rho)
    return np.sqrt(params.capillarity.K(rho) / rho)


def ell_range(params: ModelParams) -> tuple[float, float]:
    lo, hi = params.rho_bounds
    return float(ell_of_rho(params, lo)), float(ell_of_rho(params, hi))


def rho_of_ell(params: ModelParams, L, max_iter: int = 100) -> np.ndarray:
    """Inverse of ell: closed form for the presets, safeguarded Newton otherwise."""
    L = _as_array(L)
    lmin, lmax = ell_range(params)
    span = lmax - lmin
    if np.any(~np.isfinite(L)) or np.any(L < lmin - 1e-12 * span) or np.any(L > lmax + 1e-12 * span):
        raise AdmissibilityError(f"L outside the image [{lmin:.6g}, {lmax:.6g}] of the admissible densities")
    law = params.capillarity
    if law.kind == "quantum":
        return params.rho_c * np.exp((L - 1.0) / math.sqrt(law.coefficient))
    if law.kind == "constant":
        return (math.sqrt(params.rho_c) + (L - 1.0) / (2.0 * math.sqrt(law.coefficient))) ** 2
    return _newton_inverse(params, L, max_iter)


def _newton_inverse(params: ModelParams, L: np.ndarray, max_iter: int) -> np.ndarray:
    lo_r, hi_r = params.rho_bounds
    lo = np.full(L.shape, lo_r)
    hi = np.full(L.shape, hi_r)
    rho = np.full(L.shape, params.rho_c)
    tol = 1e-13 * max(1.0, float(np.max(np.abs(L))) if L.size else 1.0)
    for _ in range(max_iter):
        F = ell_of_rho(params, rho) - L
        if np.all(np.abs(F) <= tol):
            return rho
        # keep the bracket, fall back to bisection when Newton leaves it
        lo = np.where(F < 0, rho, lo)
        hi = np.where(F > 0, rho, hi)
        step = rho - F / ell_prime(params, rho)
        outside = (step <= lo) | (step >= hi)
        rho = np.where(outside, 0.5 * (lo + hi), step)
    raise RuntimeError("Newton inversion of ell did not converge in 100 iterations")


def sound_coefficient_a(params: ModelParams, rho) -> np.ndarray:
    """a(rho) = sqrt(rho K(rho))."""
    rho = _as_array(rho)
    _check_rho(params, rho)
    return np.sqrt(rho * params.capillarity.K(rho))


def a_of_ell(params: ModelParams, L) -> np.ndarray:
    """atilde(L) = a(ell^{-1}(L))."""
    return sound_coefficient_a(params, rho_of_ell(params, L))


def gtilde(params: ModelParams, L) -> np.ndarray:
    return params.pressure.g(rho_of_ell(params, L))


def _a_prime(params: ModelParams, rho: float) -> float:
    K = float(params.capillarity.K(np.array(rho)))
    Kp = float(params.capillarity.K_prime(np.array(rho)))
    return (K + rho * Kp) / (2.0 * math.sqrt(rho * K))


def _alpha(params: ModelParams) -> float:
    # d/dL a(rho(L)) at L = 1, using d rho / dL = rho / a
    rc = params.rho_c
    a0 = float(sound_coefficient_a(params, rc))
    return _a_prime(params, rc) * rc / a0


def gtilde_prime_at_one(params: ModelParams) -> float:
    rc = params.rho_c
    return float(params.pressure.g_prime(np.array(rc))) / float(ell_prime(params, rc))


def _gtilde_second(params: ModelParams) -> float:
    rc = params.rho_c
    if params.pressure.g_second is None:
        h = 1e-4
        vals = gtilde(params, np.array([1.0 - h, 1.0, 1.0 + h]))
        return float((vals[0] - 2 * vals[1] + vals[2]) / h**2)
    a0 = float(sound_coefficient_a(params, rc))
    drho = rc / a0
    d2rho = drho * (a0 - rc * _a_prime(params, rc)) / a0**2
    gp = float(params.pressure.g_prime(np.array(rc)))
    gs = float(params.pressure.g_second(np.array(rc)))
    return gs * drho**2 + gp * d2rho


def normalize(params: ModelParams) -> ModelParams:
    """
    Rescale so that a(rho_c) = 1 and gtilde'(1) = 2.

    With t = T t', x = X x' and phi = a0 phi', the choice T = 2/G and
    X^2 = T a0 (G = gtilde'(1), a0 = a(rho_c)) maps the laws to
    K' = K / a0^2 and g' = (T / a0) (g - g(rho_c)); the density is unchanged.
    """
    G = gtilde_prime_at_one(params)
    if not G > 0:
        raise StabilityError(
            f"stability condition g'(rho_c) > 0 violated (gtilde'(1) = {G:.6g}); "
            "the linearized system is not dispersive"
        )
    a0 = float(sound_coefficient_a(params, params.rho_c))
    T = 2.0 / G
    X = math.sqrt(T * a0)
    shift = float(params.pressure.g(np.array(params.rho_c)))
    cap = params.capillarity.scaled(1.0 / a0**2)
    pres = params.pressure.affine(T / a0, shift)
    out = ModelParams(params.rho_c, cap, pres, 0.0, 0.0, True, params.admissible)
    prev = params.scales
    scales = {
        "time": prev["time"] * T,
        "length": prev["length"] * X,
        "potential": prev["potential"] * a0,
    }
    return replace(out, alpha=_alpha(out), gtilde_second=_gtilde_second(out), scales=scales)


def critical_exponents(d: int) -> tuple[float, float]:
    """Strauss exponent and the quasilinear critical exponent for dimension d."""
    if d < 1:
        raise ValueError("dimension must be positive")
    p_S = (math.sqrt(d * d + 12 * d + 4) + d + 2) / (2 * d)
    p_tilde = (math.sqrt(2 * d + 1) + d + 1) / d
    return p_S, p_tilde


# --- state bundles ------------------------------------------------------------


@dataclass(frozen=True)
class StateBundle:
    rho: Field
    u: Field
    phi: Field
    l: Field
    psi: Field


def _require_normalized(params: ModelParams) -> None:
    if not params.normalized:
        raise ValueError("the analytic variables require normalized parameters (see normalize)")


def to_analytic(params: ModelParams, rho: Field, phi: Field) -> StateBundle:
    """Physical density and potential to (phi, l, psi); the mean of phi is removed."""
    _require_normalized(params)
    grid = rho.grid
    rho_v = np.real(sp.to_physical(rho).values)
    if np.min(rho_v) <= 0:
        raise AdmissibilityError("vacuum: density must be positive")
    l_v = ell_of_rho(params, rho_v) - 1.0
    phi_v = np.real(sp.to_physical(phi).values)
    phi_v = phi_v - phi_v.mean()
    phi_hat = sp.fft(grid, phi_v)
    psi_hat = symbol_U(grid.kabs) * phi_hat + 1j * sp.fft(grid, l_v)
    u = np.real(sp.ifft(grid, sp.gradient_hat(grid, phi_hat)))
    return StateBundle(
        rho=Field(grid, rho_v),
        u=Field(grid, u),
        phi=Field(grid, phi_v),
        l=Field(grid, l_v),
        psi=Field(grid, psi_hat, "fourier"),
    )


def real_imag_parts(grid: sp.SpectralGrid, psi_hat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Fourier coefficients of Re psi and Im psi from those of psi."""
    flipped = np.conj(psi_hat)
    for axis in range(grid.dim):
        flipped = np.roll(np.flip(flipped, axis=axis), 1, axis=axis)
    return 0.5 * (psi_hat + flipped), -0.5j * (psi_hat - flipped)


def from_analytic(params: ModelParams, psi: Field) -> StateBundle:
    """phi = U^{-1} Re psi, l = Im psi, rho = ell^{-1}(1 + l)."""
    _require_normalized(params)
    grid = psi.grid
    psi_x = sp.to_physical(psi).values
    re_hat = sp.fft(grid, np.real(psi_x))
    l_v = np.imag(psi_x)
    phi_hat = symbol_U_inv(grid.kabs) * re_hat
    phi_v = np.real(sp.ifft(grid, phi_hat))
    rho_v = rho_of_ell(params, 1.0 + l_v)
    u = np.real(sp.ifft(grid, sp.gradient_hat(grid, phi_hat)))
    return StateBundle(
        rho=Field(grid, rho_v),
        u=Field(grid, u),
        phi=Field(grid, phi_v),
        l=Field(grid, l_v),
        psi=sp.to_fourier(psi),
    )


def madelung_phase_factor(params: ModelParams) -> float:
    """Factor c in Psi = sqrt(rho) exp(i c phi), fixed by matching linearizations."""
    if params.capillarity.kind != "quantum":
        raise ValueError("the Madelung map needs the quantum capillarity law K = kappa / rho")
    return 1.0 / (2.0 * math.sqrt(params.capillarity.coefficient))


def madelung_wavefunction(params: ModelParams, bundle: StateBundle) -> Field:
    c = madelung_phase_factor(params)
    rho = np.real(bundle.rho.values)
    phi = np.real(bundle.phi.values)
    return Field(bundle.rho.grid, np.sqrt(rho) * np.exp(1j * c * phi))


def preset_model(
    capillarity: str,
    pressure: str,
    rho_c: float = 1.0,
    kappa: float = 1.0,
    K0: float = 1.0,
    c: float = 1.0,
    gamma: float = 1.0,
    admissible: tuple[float, float] = (0.5, 2.0),
) -> ModelParams:
    """Build raw parameters from preset names ("quantum"/"constant", "power")."""
    if capillarity == "quantum":
        cap = quantum_capillarity(kappa)
    elif capillarity == "constant":
        cap = constant_capillarity(K0)
    else:
        raise ValueError(f"unknown capillarity preset {capillarity!r}")
    if pressure != "power":
        raise ValueError(f"unknown pressure preset {pressure!r}")
    return make_model(rho_c, cap, power_pressure(c, gamma, rho_c), admissible)
