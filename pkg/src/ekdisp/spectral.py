"""
Periodic spectral substrate.

- `SpectralGrid`: torus [0, L)^d with an even number of points per axis
- `Field`: values on a grid tagged as physical or Fourier
- unitary FFTs (``norm="ortho"``), so Parseval holds without extra factors
- Fourier multipliers, spectral derivatives, 2/3 dealiasing
- smooth Littlewood-Paley partition (plain sum to one)
- Lebesgue, Sobolev and homogeneous Sobolev norms
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Literal, Sequence

import numpy as np
import scipy.fft as sfft

Space = Literal["physical", "fourier"]

# worker count for scipy.fft; set from the CLI --threads flag
_FFT_WORKERS = 1


def set_fft_workers(workers: int) -> None:
    global _FFT_WORKERS
    _FFT_WORKERS = max(1, int(workers))


@dataclass(frozen=True)
class SpectralGrid:
    """
    Uniform periodic grid.

    Parameters
    ----------
    dim : int
        Spatial dimension, 1, 2 or 3.
    n : int
        Points per axis (even, at least 8).
    length : float
        Side of the periodic box.
    """

    dim: int
    n: int
    length: float = 32.0 * np.pi

    def __post_init__(self) -> None:
        if self.dim not in (1, 2, 3):
            raise ValueError(f"dim must be 1, 2 or 3, got {self.dim}")
        if self.n % 2 != 0 or self.n < 8:
            raise ValueError(f"points per axis must be even and >= 8, got {self.n}")
        if not self.length > 0:
            raise ValueError(f"box length must be positive, got {self.length}")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    @property
    def dx(self) -> float:
        return self.length / self.n

    @property
    def cell_volume(self) -> float:
        return self.dx**self.dim

    @property
    def dk(self) -> float:
        """Lattice spacing in frequency, 2*pi/L."""
        return 2.0 * np.pi / self.length

    @property
    def k_max(self) -> float:
        """Largest represented |xi_i| (the Nyquist frequency)."""
        return 0.5 * self.n * self.dk

    @cached_property
    def k1d(self) -> np.ndarray:
        return self.dk * np.fft.fftfreq(self.n, d=1.0 / self.n)

    @cached_property
    def k_axes(self) -> tuple[np.ndarray, ...]:
        """Broadcastable wavenumber arrays, one per axis."""
        out = []
        for i in range(self.dim):
            shape = [1] * self.dim
            shape[i] = self.n
            out.append(self.k1d.reshape(shape))
        return tuple(out)

    @cached_property
    def k2(self) -> np.ndarray:
        total = np.zeros(self.shape)
        for k in self.k_axes:
            total = total + k * k
        return total

    @cached_property
    def kabs(self) -> np.ndarray:
        return np.sqrt(self.k2)

    @cached_property
    def nyquist_mask(self) -> np.ndarray:
        """True where some component sits on the unpaired Nyquist frequency."""
        mask = np.zeros(self.shape, dtype=bool)
        for k in self.k_axes:
            mask = mask | (np.abs(k) >= self.k_max * (1 - 1e-12))
        return mask

    def coords(self) -> tuple[np.ndarray, ...]:
        """Broadcastable physical coordinates in [0, L)."""
        x = np.arange(self.n) * self.dx
        out = []
        for i in range(self.dim):
            shape = [1] * self.dim
            shape[i] = self.n
            out.append(x.reshape(shape))
        return tuple(out)

    def centered_coords(self) -> tuple[np.ndarray, ...]:
        """Coordinates folded into [-L/2, L/2) around the grid origin."""
        return tuple(((x + self.length / 2) % self.length) - self.length / 2 for x in self.coords())


def make_grid(dim: int, points_per_axis: int, box_length: float = 32.0 * np.pi) -> SpectralGrid:
    return SpectralGrid(dim=int(dim), n=int(points_per_axis), length=float(box_length))


@dataclass(frozen=True)
class Field:
    """Grid values with a space tag; vector fields carry components on axis 0."""

    grid: SpectralGrid
    values: np.ndarray
    space: Space = "physical"

    def __post_init__(self) -> None:
        if self.space not in ("physical", "fourier"):
            raise ValueError(f"unknown space tag {self.space!r}")
        tail = self.values.shape[-self.grid.dim:]
        if tail != self.grid.shape or self.values.ndim not in (self.grid.dim, self.grid.dim + 1):
            raise ValueError(f"values of shape {self.values.shape} do not match grid {self.grid.shape}")

    @property
    def component_count(self) -> int:
        return 1 if self.values.ndim == self.grid.dim else self.values.shape[0]

    def with_values(self, values: np.ndarray, space: Space | None = None) -> "Field":
        return Field(self.grid, values, self.space if space is None else space)


def _axes(grid: SpectralGrid, values: np.ndarray) -> tuple[int, ...]:
    return tuple(range(values.ndim - grid.dim, values.ndim))


def fft(grid: SpectralGrid, values: np.ndarray) -> np.ndarray:
    return sfft.fftn(values, axes=_axes(grid, values), norm="ortho", workers=_FFT_WORKERS)


def ifft(grid: SpectralGrid, values: np.ndarray) -> np.ndarray:
    return sfft.ifftn(values, axes=_axes(grid, values), norm="ortho", workers=_FFT_WORKERS)


def transform(field: Field, direction: Literal["forward", "inverse"]) -> Field:
    if direction == "forward":
        if field.space != "physical":
            raise ValueError("forward transform expects a physical-space field")
        return field.with_values(fft(field.grid, field.values), "fourier")
    if direction == "inverse":
        if field.space != "fourier":
            raise ValueError("inverse transform expects a Fourier-space field")
        return field.with_values(ifft(field.grid, field.values), "physical")
    raise ValueError(f"direction must be 'forward' or 'inverse', got {direction!r}")


def to_fourier(field: Field) -> Field:
    return field if field.space == "fourier" else transform(field, "forward")


def to_physical(field: Field) -> Field:
    return field if field.space == "physical" else transform(field, "inverse")


Symbol = Callable[[np.ndarray], np.ndarray] | np.ndarray | float


def evaluate_symbol(grid: SpectralGrid, symbol: Symbol) -> np.ndarray:
    """Radial callables receive |xi|; arrays are taken as given."""
    if callable(symbol):
        values = np.asarray(symbol(grid.kabs))
    else:
        values = np.asarray(symbol)
    if not np.all(np.isfinite(values)):
        raise ValueError("multiplier symbol is not finite on the lattice")
    return values


def apply_multiplier(field: Field, symbol: Symbol) -> Field:
    if field.space != "fourier":
        raise ValueError("multipliers act on Fourier-space fields")
    return field.with_values(field.values * evaluate_symbol(field.grid, symbol))


def derivative_symbol(grid: SpectralGrid, axis: int, order: int = 1) -> np.ndarray:
    """(i xi_axis)^order, with the unpaired Nyquist mode dropped for odd orders."""
    k = grid.k_axes[axis]
    sym = (1j * k) ** order
    if order % 2 == 1:
        sym = np.where(np.abs(k) >= grid.k_max * (1 - 1e-12), 0.0, sym)
    return sym


def gradient_hat(grid: SpectralGrid, vhat: np.ndarray) -> np.ndarray:
    return np.stack([derivative_symbol(grid, i) * vhat for i in range(grid.dim)])


def laplacian_hat(grid: SpectralGrid, vhat: np.ndarray) -> np.ndarray:
    return -grid.k2 * vhat


def divergence_hat(grid: SpectralGrid, what: np.ndarray) -> np.ndarray:
    return sum(derivative_symbol(grid, i) * what[i] for i in range(grid.dim))


def dealias_mask(grid: SpectralGrid, fraction: float = 2.0 / 3.0) -> np.ndarray:
    if not 0 < fraction <= 1:
        raise ValueError(f"dealias fraction must lie in (0, 1], got {fraction}")
    cut = fraction * grid.k_max * (1 + 1e-12)
    mask = np.ones(grid.shape, dtype=bool)
    for k in grid.k_axes:
        mask = mask & (np.abs(k) <= cut)
    return mask


def dealias(field: Field, fraction: float = 2.0 / 3.0) -> Field:
    if field.space != "fourier":
        raise ValueError("dealias acts on Fourier-space fields")
    return field.with_values(field.values * dealias_mask(field.grid, fraction))


# --- Littlewood-Paley partition -------------------------------------------


def smooth_step(t: np.ndarray) -> np.ndarray:
    """C-infinity step from 0 (t <= 0) to 1 (t >= 1) built from exp(-1/x)."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        up = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
        down = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1.0 - t, 1.0)), 0.0)
        return up / (up + down)


def dyadic_bump(r: np.ndarray, scale: float) -> np.ndarray:
    """
    Partition function of the block centred at `scale`.

    Supported on [scale/2, 2*scale], equal to one at `scale`; neighbouring
    blocks (scale, 2*scale) sum to one pointwise.
    """
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore"):
        u = np.log2(np.where(r > 0, r, np.nan) / scale)
    out = np.where(u <= 0, smooth_step(u + 1.0), 1.0 - smooth_step(u))
    return np.where(np.isnan(u), 0.0, out)


def plateau_cutoff(x: np.ndarray) -> np.ndarray:
    """Smooth cutoff equal to 1 on |x| <= 1 and 0 on |x| >= 2."""
    return 1.0 - smooth_step(np.abs(np.asarray(x, dtype=float)) - 1.0)


def dyadic_range(grid: SpectralGrid) -> range:
    """Block indices j covering the lattice, in units of 2*pi/L."""
    top = np.sqrt(grid.dim) * grid.n / 2
    return range(0, int(np.ceil(np.log2(top))) + 2)


def dyadic_weight(grid: SpectralGrid, j: int) -> np.ndarray:
    r = grid.kabs / grid.dk
    w = dyadic_bump(r, 2.0**j)
    if j == dyadic_range(grid).start:
        # everything below the lowest block centre, zero mode included
        w = np.where(r <= 2.0**j, 1.0, w)
    return w


def dyadic_project(field: Field, j: int) -> Field:
    if field.space != "fourier":
        raise ValueError("dyadic projection acts on Fourier-space fields")
    if j < dyadic_range(field.grid).start:
        return field.with_values(np.zeros_like(field.values))
    return field.with_values(field.values * dyadic_weight(field.grid, j))


# --- norms ------------------------------------------------------------------


def _check_finite(values: np.ndarray) -> None:
    if not np.all(np.isfinite(values)):
        raise ValueError("field contains non-finite values")


def lp_norm(field: Field, p: float) -> float:
    vals = to_physical(field).values
    _check_finite(vals)
    mag = np.abs(vals)
    if field.component_count > 1:
        mag = np.sqrt(np.sum(mag**2, axis=0))
    if np.isinf(p):
        return float(mag.max())
    if p < 1:
        raise ValueError(f"p must lie in [1, inf], got {p}")
    return float((np.sum(mag**p) * field.grid.cell_volume) ** (1.0 / p))


def _weighted_l2(field: Field, weight: np.ndarray) -> float:
    vhat = to_fourier(field).values
    _check_finite(vhat)
    power = np.abs(vhat) ** 2
    if field.component_count > 1:
        power = power.sum(axis=0)
    return float(np.sqrt(np.sum(weight * power) * field.grid.cell_volume))


def hs_norm(field: Field, s: float) -> float:
    return _weighted_l2(field, (1.0 + field.grid.k2) ** s)


def hdot_norm(field: Field, s: float) -> float:
    k2 = field.grid.k2
    with np.errstate(divide="ignore"):
        w = np.where(k2 > 0, k2**s, 0.0)
    return _weighted_l2(field, w)


def multi_indices(dim: int, k: int) -> list[tuple[int, ...]]:
    return [b for b in itertools.product(range(k + 1), repeat=dim) if sum(b) <= k]


def wkp_norm(field: Field, k: int, p: float) -> float:
    """Sum of L^p norms of all derivatives of order at most k."""
    grid = field.grid
    vhat = to_fourier(field).values
    total = 0.0
    for beta in multi_indices(grid.dim, k):
        sym = np.ones(grid.shape, dtype=complex)
        for axis, order in enumerate(beta):
            if order:
                sym = sym * derivative_symbol(grid, axis, order)
        total += lp_norm(Field(grid, sym * vhat, "fourier"), p)
    return total


def norm(field: Field, kind: str, **params: float) -> float:
    """Dispatch on kind in {"Lp", "Hs", "Wkp", "Hdot"}."""
    if kind == "Lp":
        return lp_norm(field, params["p"])
    if kind == "Hs":
        return hs_norm(field, params["s"])
    if kind == "Hdot":
        return hdot_norm(field, params["s"])
    if kind == "Wkp":
        return wkp_norm(field, int(params["k"]), params["p"])
    raise ValueError(f"unknown norm kind {kind!r}")


def parse_norm_kind(spec: str) -> tuple[str, dict[str, float]]:
    """Parse labels like ``L2``, ``Linf``, ``H1``, ``Hdot0.5``, ``W3,4``."""
    spec = spec.strip()
    if spec.startswith("Hdot"):
        return "Hdot", {"s": float(spec[4:])}
    if spec.startswith("H"):
        return "Hs", {"s": float(spec[1:])}
    if spec.startswith("W"):
        k, p = spec[1:].split(",")
        return "Wkp", {"k": int(k), "p": _parse_p(p)}
    if spec.startswith("L"):
        return "Lp", {"p": _parse_p(spec[1:])}
    raise ValueError(f"cannot parse norm kind {spec!r}")


def _parse_p(text: str) -> float:
    return np.inf if text.strip().lower() in ("inf", "infinity") else float(text)


def vector_field(grid: SpectralGrid, components: Sequence[np.ndarray], space: Space = "physical") -> Field:
    return Field(grid, np.stack(list(components)), space)
