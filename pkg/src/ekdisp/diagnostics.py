"""Energies, X-norm components, decay fits and scattering measurements."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import spectral as sp
from .dispersion import symbol_H
from .model import ModelParams, StateBundle, from_analytic, sound_coefficient_a
from .propagator import Trajectory, group_velocity_bound
from .spectral import Field, SpectralGrid

MACHINE_EPS = float(np.finfo(float).eps)

# centred first-derivative stencils, one-sided weights for offsets 1..m
_CENTRAL_WEIGHTS = {
    2: (1 / 2,),
    4: (2 / 3, -1 / 12),
    6: (3 / 4, -3 / 20, 1 / 60),
    8: (4 / 5, -1 / 5, 4 / 105, -1 / 280),
}


class ResolutionError(ValueError):
    """High derivative powers would be dominated by round-off."""


class WindowError(ValueError):
    """The requested decay-fit window is unusable."""


# --- energies ------------------------------------------------------------------


def linear_energy(psi: Field) -> float:
    """sum (2 + |xi|^2) |psi_hat|^2, conserved by the linear flow."""
    psi_hat = sp.to_fourier(psi).values
    return float(np.sum((2.0 + psi.grid.k2) * np.abs(psi_hat) ** 2))


@dataclass
class EnergyReport:
    """terms[m] = (int phi_m^2 |Lap^m z|^2, 2 int phi_m^2 / a |Lap^m l|^2)."""

    terms: list[tuple[float, float]]
    time: float = 0.0

    @property
    def total(self) -> float:
        return float(sum(a + b for a, b in self.terms))


def _check_resolution(grid: SpectralGrid, n: int, tolerance: float) -> None:
    amplification = grid.k_max ** (2 * n) * MACHINE_EPS
    if amplification > tolerance:
        raise ResolutionError(
            f"|xi|_max^{2 * n} * eps = {amplification:.3g} exceeds {tolerance:.3g}; "
            "lower n or the grid resolution"
        )


def modified_energy(
    params: ModelParams,
    bundle: StateBundle,
    n: int,
    time: float = 0.0,
    linearized: bool = False,
    guard: float = 1e-8,
) -> EnergyReport:
    """
    E_n = sum_{m<=n} int phi_m^2 |Lap^m z|^2 + 2 int phi_m^2 / a |Lap^m l|^2

    with z = grad phi + i grad l and gauge phi_m = a^m sqrt(rho / rho_c).
    With linearized=True the gauge and a are set to 1.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    grid = bundle.psi.grid
    _check_resolution(grid, n, guard)
    rho = np.real(bundle.rho.values)
    if linearized:
        a = np.ones(grid.shape)
        root = np.ones(grid.shape)
    else:
        a = np.asarray(sound_coefficient_a(params, rho), dtype=float)
        root = np.sqrt(rho / params.rho_c)
    phi_hat = sp.fft(grid, np.real(bundle.phi.values))
    l_hat = sp.fft(grid, np.real(bundle.l.values))
    z_hat = sp.gradient_hat(grid, phi_hat) + 1j * sp.gradient_hat(grid, l_hat)
    dv = grid.cell_volume
    terms = []
    for m in range(n + 1):
        power = (-grid.k2) ** m
        gauge2 = (a**m * root) ** 2
        z_m = sp.ifft(grid, power * z_hat)
        l_m = np.real(sp.ifft(grid, power * l_hat))
        kinetic = float(np.sum(gauge2 * np.sum(np.abs(z_m) ** 2, axis=0)) * dv)
        density = float(2.0 * np.sum(gauge2 / a * l_m**2) * dv)
        terms.append((kinetic, density))
    return EnergyReport(terms, time)


def mass(params: ModelParams, psi: Field) -> float:
    """int (rho - rho_c) dx."""
    bundle = from_analytic(params, psi)
    return float(np.sum(np.real(bundle.rho.values) - params.rho_c) * psi.grid.cell_volume)


# --- X-norm components ----------------------------------------------------------


def _profile_derivative(grid: SpectralGrid, f_hat: np.ndarray, order: int) -> np.ndarray:
    if order not in _CENTRAL_WEIGHTS:
        raise ValueError(f"finite-difference order must be one of {sorted(_CENTRAL_WEIGHTS)}")
    out = []
    for axis in range(grid.dim):
        d = np.zeros_like(f_hat)
        for shift, w in enumerate(_CENTRAL_WEIGHTS[order], start=1):
            d = d + w * (np.roll(f_hat, -shift, axis=axis) - np.roll(f_hat, shift, axis=axis))
        out.append(d / grid.dk)
    return np.stack(out)


def weighted_profile_norm(psi: Field, t: float, order: int = 8) -> float:
    """
    Discrete ||x e^{-itH} psi||_{L^2} through the profile e^{-itH(xi)} psi_hat(xi).

    The xi-gradient uses centred differences of the given order on the
    lattice (spacing 2 pi / L, periodic in xi); the result is
    sqrt(dx^d sum |grad_xi f|^2).  Position is measured from the grid origin.
    """
    if psi.space != "fourier":
        raise ValueError("weighted_profile_norm expects a Fourier-space field")
    grid = psi.grid
    profile = np.exp(-1j * t * symbol_H(grid.kabs)) * psi.values
    grad = _profile_derivative(grid, profile, order)
    return float(np.sqrt(grid.cell_volume * np.sum(np.abs(grad) ** 2)))


@dataclass(frozen=True)
class XNormConfig:
    N: int = 6
    k: int = 3
    p: float | None = None
    epsilon: float = 0.01
    fd_order: int = 8

    def exponent(self, dim: int) -> float:
        if self.p is not None:
            return float(self.p)
        inv = 0.5 - 1.0 / dim - self.epsilon
        if inv <= 0:
            raise ValueError(f"1/p = 1/2 - 1/d - eps is not positive for d = {dim}; pass p explicitly")
        return 1.0 / inv


@dataclass
class NormSnapshot:
    t: float
    h_N: float
    weighted: float
    w_kp_scaled: float
    N: int
    k: int
    p: float
    epsilon: float

    @property
    def total(self) -> float:
        return self.h_N + self.weighted + self.w_kp_scaled


def x_norm_snapshot(psi: Field, t: float, cfg: XNormConfig = XNormConfig()) -> NormSnapshot:
    """||psi||_{H^N} + ||x e^{-itH} psi||_{L^2} + <t>^{1+3 eps} ||psi||_{W^{k,p}}."""
    psi = sp.to_fourier(psi)
    p = cfg.exponent(psi.grid.dim)
    h = sp.hs_norm(psi, cfg.N)
    w = weighted_profile_norm(psi, t, cfg.fd_order)
    bracket = np.sqrt(1.0 + t * t)
    wk = bracket ** (1.0 + 3.0 * cfg.epsilon) * sp.wkp_norm(psi, cfg.k, p)
    snap = NormSnapshot(float(t), h, w, float(wk), cfg.N, cfg.k, p, cfg.epsilon)
    if not all(np.isfinite([snap.h_N, snap.weighted, snap.w_kp_scaled])):
        raise ValueError("X-norm component is not finite")
    return snap


# --- decay -----------------------------------------------------------------------


@dataclass
class DecayFit:
    slope: float
    stderr: float
    window: tuple[float, float]
    times: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)


def norm_series(trajectory: Trajectory, norm_kind: str) -> np.ndarray:
    kind, params = sp.parse_norm_kind(norm_kind)
    return np.array([sp.norm(trajectory.field(i), kind, **params) for i in range(len(trajectory))])


def wraparound_limit(grid: SpectralGrid, psi0: Field | None = None, threshold: float = 1e-2) -> float:
    """L / (2 v), v the group speed bound of the data (or of the lattice)."""
    return grid.length / (2.0 * group_velocity_bound(grid, psi0, threshold))


def fit_loglog(times: np.ndarray, values: np.ndarray) -> tuple[float, float]:
    x, y = np.log(times), np.log(values)
    coef, cov = np.polyfit(x, y, 1, cov=True)
    return float(coef[0]), float(np.sqrt(cov[0, 0]))


def decay_fit(
    trajectory: Trajectory,
    norm_kind: str,
    window: tuple[float, float] | None = None,
    min_snapshots: int = 8,
    t_min: float = 5.0,
) -> DecayFit:
    """
    Slope of log ||psi(t)|| against log t over the window.

    The default window is [5, L / (2 v)] with v from the spectrum of the
    first snapshot.  Windows starting before t = 5, reaching beyond the
    wrap-around limit, or spanning less than half a decade are rejected.
    """
    limit = wraparound_limit(trajectory.grid, trajectory.field(0))
    lo, hi = window if window is not None else (t_min, limit)
    if lo < t_min:
        raise WindowError(f"window must start at t >= {t_min}, got {lo}")
    if hi > limit * (1 + 1e-9):
        raise WindowError(f"window end {hi:.4g} exceeds the wrap-around limit {limit:.4g}")
    if hi / lo < np.sqrt(10.0):
        raise WindowError(f"window [{lo:.4g}, {hi:.4g}] spans less than half a decade")
    times = np.asarray(trajectory.times, dtype=float)
    sel = (times >= lo * (1 - 1e-12)) & (times <= hi * (1 + 1e-12))
    if sel.sum() < min_snapshots:
        raise WindowError(f"only {int(sel.sum())} snapshots in window, need {min_snapshots}")
    values = norm_series(trajectory, norm_kind)[sel]
    slope, stderr = fit_loglog(times[sel], values)
    return DecayFit(slope, stderr, (float(lo), float(hi)), times[sel], values)


# --- scattering -----------------------------------------------------------------


def scattering_profile(psi: Field, t: float) -> Field:
    """f(t) = e^{-itH} psi(t)."""
    psi = sp.to_fourier(psi)
    return psi.with_values(np.exp(-1j * t * symbol_H(psi.grid.kabs)) * psi.values)


def _snapshot_index(trajectory: Trajectory, t: float) -> int:
    times = np.asarray(trajectory.times)
    hits = np.nonzero(np.isclose(times, t, rtol=1e-12, atol=1e-12))[0]
    if hits.size == 0:
        raise ValueError(f"no snapshot at t = {t}")
    return int(hits[0])


def cauchy_variation(trajectory: Trajectory, t1: float, t2: float, s: float = 0.0) -> float:
    """||f(t2) - f(t1)||_{H^s}."""
    if not t2 > t1 >= 1.0:
        raise ValueError("need t2 > t1 >= 1")
    f1 = scattering_profile(trajectory.field(_snapshot_index(trajectory, t1)), t1)
    f2 = scattering_profile(trajectory.field(_snapshot_index(trajectory, t2)), t2)
    return sp.hs_norm(f2.with_values(f2.values - f1.values), s)


def cauchy_series(trajectory: Trajectory, starts: Sequence[float], s: float = 0.0) -> np.ndarray:
    """Variation over [t, 2t] for each t in starts."""
    return np.array([cauchy_variation(trajectory, t, 2.0 * t, s) for t in starts])
