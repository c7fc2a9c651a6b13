"""
Time integration of the diagonalized system

    d/dt psi - i H psi = N(psi),   psi = U phi + i l,

where N = U N1 + i N2 collects the quadratic and higher-order terms.  The
linear group e^{itH} is applied exactly; the nonlinearity is evaluated
pseudospectrally with 2/3 dealiasing.

A Gross-Pitaevskii solver for psi = Psi - 1,

    i d/dt psi + Lap psi - 2 Re psi = psi^2 + 2 |psi|^2 + |psi|^2 psi,

shares the same linear group after the change of unknowns v = U Im psi + i Re psi.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np

from . import spectral as sp
from .dispersion import (
    DispersiveSymbols,
    apply_U_inv,
    symbol_H,
    symbol_H_prime,
    symbol_U,
    symbol_U_inv,
)
from .model import ModelParams, a_of_ell, gtilde, real_imag_parts
from .spectral import Field, SpectralGrid

__all__ = [
    "DispersiveSymbols",
    "IntegratorConfig",
    "SolverError",
    "Trajectory",
    "apply_U_inv",
    "evolve",
    "gp_evolve",
    "gp_reference_step",
    "group_velocity_bound",
    "linear_propagate",
    "nonlinearity",
    "step",
]

Scheme = Literal["strang_splitting", "exponential_rk4"]


class SolverError(RuntimeError):
    """Aborted time integration; `snapshot` holds the last finite state."""

    def __init__(self, message: str, time: float, snapshot: np.ndarray | None = None):
        super().__init__(f"{message} (t = {time:.6g})")
        self.time = time
        self.snapshot = snapshot


@dataclass(frozen=True)
class IntegratorConfig:
    scheme: Scheme = "strang_splitting"
    dt: float = 0.01
    dealias_fraction: float = 2.0 / 3.0
    snapshot_times: tuple[float, ...] = ()
    amplitude_guard: float = 0.25

    def __post_init__(self) -> None:
        if self.scheme not in ("strang_splitting", "exponential_rk4"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        times = tuple(float(t) for t in self.snapshot_times)
        if any(b < a for a, b in zip(times, times[1:])):
            raise ValueError("snapshot_times must be sorted")
        if times and times[0] < 0:
            raise ValueError("snapshot_times must be non-negative")
        object.__setattr__(self, "snapshot_times", times)


@dataclass
class Trajectory:
    grid: SpectralGrid
    times: np.ndarray
    states: list[np.ndarray] = field(default_factory=list)

    def field(self, index: int) -> Field:
        return Field(self.grid, self.states[index], "fourier")

    def __len__(self) -> int:
        return len(self.states)


def linear_propagate(psi: Field, t: float) -> Field:
    """Multiply by e^{itH}."""
    if psi.space != "fourier":
        raise ValueError("linear_propagate expects a Fourier-space field")
    if not np.isfinite(t):
        raise ValueError("propagation time must be finite")
    return psi.with_values(np.exp(1j * t * symbol_H(psi.grid.kabs)) * psi.values)


def group_velocity_bound(grid: SpectralGrid, psi: Field | None = None, threshold: float = 1e-2) -> float:
    """
    Largest group speed H'(|xi|).

    Without a field this is the maximum over the whole lattice.  With a
    field, only modes whose amplitude is at least `threshold` times the
    peak amplitude count, which is the speed that bounds how far the bulk
    of a band-limited packet travels.
    """
    speeds = symbol_H_prime(grid.kabs)
    if psi is None:
        return float(speeds.max())
    amp = np.abs(sp.to_fourier(psi).values)
    return float(speeds[amp >= threshold * amp.max()].max())


# --- nonlinearity -------------------------------------------------------------


def potential_and_density(grid: SpectralGrid, psi_hat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Fourier coefficients of phi = U^{-1} Re psi and l = Im psi."""
    re_hat, im_hat = real_imag_parts(grid, psi_hat)
    return symbol_U_inv(grid.kabs) * re_hat, im_hat


def _real(grid: SpectralGrid, vhat: np.ndarray) -> np.ndarray:
    return np.real(sp.ifft(grid, vhat))


def nonlinear_terms(params: ModelParams, grid: SpectralGrid, psi_hat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Physical-space N1 and N2 before dealiasing."""
    phi_hat, l_hat = potential_and_density(grid, psi_hat)
    l = _real(grid, l_hat)
    grad_phi = _real(grid, sp.gradient_hat(grid, phi_hat))
    grad_l = _real(grid, sp.gradient_hat(grid, l_hat))
    lap_phi = _real(grid, -grid.k2 * phi_hat)
    lap_l = _real(grid, -grid.k2 * l_hat)
    a = a_of_ell(params, 1.0 + l)
    g = gtilde(params, 1.0 + l)
    sq_phi = np.sum(grad_phi**2, axis=0)
    sq_l = np.sum(grad_l**2, axis=0)
    n1 = (a - 1.0) * lap_l - 0.5 * (sq_phi - sq_l) + (2.0 * l - g)
    n2 = -np.sum(grad_phi * grad_l, axis=0) + (1.0 - a) * lap_phi
    return n1, n2


def nonlinearity_hat(
    params: ModelParams, grid: SpectralGrid, psi_hat: np.ndarray, fraction: float = 2.0 / 3.0
) -> np.ndarray:
    n1, n2 = nonlinear_terms(params, grid, psi_hat)
    out = symbol_U(grid.kabs) * sp.fft(grid, n1) + 1j * sp.fft(grid, n2)
    return out * sp.dealias_mask(grid, fraction)


def nonlinearity(params: ModelParams, psi: Field, fraction: float = 2.0 / 3.0) -> Field:
    """N(psi) = U N1 + i N2 as a Fourier-space field."""
    if not params.normalized:
        raise ValueError("nonlinearity needs normalized parameters")
    psi_hat = sp.to_fourier(psi).values
    return Field(psi.grid, nonlinearity_hat(params, psi.grid, psi_hat, fraction), "fourier")


# --- time stepping ------------------------------------------------------------

RHS = Callable[[np.ndarray], np.ndarray]
LinearFlow = Callable[[np.ndarray, float], np.ndarray]


def _strang(psi: np.ndarray, dt: float, rhs: RHS, flow: LinearFlow) -> np.ndarray:
    psi = flow(psi, 0.5 * dt)
    mid = psi + 0.5 * dt * rhs(psi)
    psi = psi + dt * rhs(mid)
    return flow(psi, 0.5 * dt)


def _exp_rk4(psi: np.ndarray, dt: float, rhs: RHS, flow: LinearFlow) -> np.ndarray:
    # integrating-factor RK4 with the exact linear group
    half = 0.5 * dt
    k1 = rhs(psi)
    k2 = rhs(flow(psi + half * k1, half))
    psi_half = flow(psi, half)
    k3 = rhs(psi_half + half * k2)
    k4 = rhs(flow(psi_half + dt * k3, half))
    return flow(psi, dt) + dt / 6.0 * (flow(k1, dt) + 2.0 * flow(k2 + k3, half) + k4)


_SCHEMES = {"strang_splitting": _strang, "exponential_rk4": _exp_rk4}


def _ek_flow(grid: SpectralGrid) -> LinearFlow:
    H = symbol_H(grid.kabs)
    return lambda v, tau: np.exp(1j * tau * H) * v


def step(params: ModelParams, config: IntegratorConfig, psi: Field, dt: float | None = None) -> Field:
    """One step of the configured scheme; negative dt runs backwards."""
    dt = config.dt if dt is None else dt
    grid = psi.grid
    psi_hat = sp.to_fourier(psi).values

    def rhs(v: np.ndarray) -> np.ndarray:
        return nonlinearity_hat(params, grid, v, config.dealias_fraction)

    out = _SCHEMES[config.scheme](psi_hat, dt, rhs, _ek_flow(grid))
    if not np.all(np.isfinite(out)):
        raise SolverError("non-finite state after step", 0.0, psi_hat)
    return Field(grid, out, "fourier")


def _run(
    grid: SpectralGrid,
    config: IntegratorConfig,
    psi0: np.ndarray,
    advance: Callable[[np.ndarray, float], np.ndarray],
    guard: Callable[[np.ndarray], float] | None,
) -> Trajectory:
    times = config.snapshot_times
    traj = Trajectory(grid, np.asarray(times, dtype=float))
    psi = psi0.copy()
    t = 0.0
    for target in times:
        while target - t > 1e-12 * max(1.0, target):
            h = config.dt
            if target - t <= h * (1.0 + 1e-9):
                h = target - t
            try:
                new = advance(psi, h)
            except (ValueError, FloatingPointError) as exc:
                raise SolverError(str(exc), t, psi) from exc
            if not np.all(np.isfinite(new)):
                raise SolverError("non-finite state", t, psi)
            if guard is not None:
                amp = guard(new)
                if amp > config.amplitude_guard:
                    raise SolverError(
                        f"amplitude guard exceeded: max|l| = {amp:.4g} > {config.amplitude_guard:g}", t + h, psi
                    )
            psi = new
            t += h
        t = target
        traj.states.append(psi.copy())
    return traj


def evolve(params: ModelParams, config: IntegratorConfig, psi0: Field) -> Trajectory:
    """Integrate from t = 0 and record the state at each snapshot time."""
    if not params.normalized:
        raise ValueError("evolve needs normalized parameters")
    grid = psi0.grid
    scheme = _SCHEMES[config.scheme]
    flow = _ek_flow(grid)

    def rhs(v: np.ndarray) -> np.ndarray:
        return nonlinearity_hat(params, grid, v, config.dealias_fraction)

    def guard(v: np.ndarray) -> float:
        return float(np.max(np.abs(np.imag(sp.ifft(grid, v)))))

    init = sp.to_fourier(psi0).values
    if guard(init) > config.amplitude_guard:
        raise SolverError("initial data violates the amplitude guard", 0.0, init)
    return _run(grid, config, init, lambda v, h: scheme(v, h, rhs, flow), guard)


def evolve_linear(psi0: Field, times) -> Trajectory:
    """Exact linear flow sampled at the given times."""
    psi_hat = sp.to_fourier(psi0)
    times = np.asarray(list(times), dtype=float)
    return Trajectory(psi0.grid, times, [linear_propagate(psi_hat, t).values for t in times])


# --- Gross-Pitaevskii reference ----------------------------------------------


def _gp_flow(grid: SpectralGrid) -> LinearFlow:
    # With psi = a + i b the linear part reads a' = -Lap b, b' = Lap a - 2a.
    # v = U b + i a then obeys v' = i H v, and the zero mode evolves as
    # a0' = 0, b0' = -2 a0.
    H = symbol_H(grid.kabs)
    U = symbol_U(grid.kabs)
    Uinv = symbol_U_inv(grid.kabs)
    zero = grid.kabs == 0

    def flow(psi_hat: np.ndarray, tau: float) -> np.ndarray:
        a_hat, b_hat = real_imag_parts(grid, psi_hat)
        v_hat = np.exp(1j * tau * H) * (U * b_hat + 1j * a_hat)
        ub_hat, a_new = real_imag_parts(grid, v_hat)
        b_new = Uinv * ub_hat
        b_new[zero] = b_hat[zero] - 2.0 * tau * a_hat[zero]
        a_new[zero] = a_hat[zero]
        return a_new + 1j * b_new

    return flow


def gp_nonlinearity_hat(grid: SpectralGrid, psi_hat: np.ndarray, fraction: float = 2.0 / 3.0) -> np.ndarray:
    psi = sp.ifft(grid, psi_hat)
    mod2 = np.abs(psi) ** 2
    rhs = -1j * (psi * psi + 2.0 * mod2 + mod2 * psi)
    return sp.fft(grid, rhs) * sp.dealias_mask(grid, fraction)


def gp_reference_step(psi_gp: Field, dt: float, fraction: float = 2.0 / 3.0) -> Field:
    grid = psi_gp.grid
    psi_hat = sp.to_fourier(psi_gp).values
    out = _strang(psi_hat, dt, lambda v: gp_nonlinearity_hat(grid, v, fraction), _gp_flow(grid))
    if not np.all(np.isfinite(out)):
        raise SolverError("non-finite state after GP step", 0.0, psi_hat)
    return Field(grid, out, "fourier")


def gp_evolve(config: IntegratorConfig, psi0: Field) -> Trajectory:
    grid = psi0.grid
    scheme = _SCHEMES[config.scheme]
    flow = _gp_flow(grid)

    def rhs(v: np.ndarray) -> np.ndarray:
        return gp_nonlinearity_hat(grid, v, config.dealias_fraction)

    init = sp.to_fourier(psi0).values
    return _run(grid, config, init, lambda v, h: scheme(v, h, rhs, flow), None)
