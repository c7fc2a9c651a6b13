"""Radial symbols of the diagonalized linear flow."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import Field, SpectralGrid


def symbol_U(r):
    """U(r) = r / sqrt(2 + r^2), bounded by one."""
    r = np.asarray(r, dtype=float)
    return r / np.sqrt(2.0 + r * r)


def symbol_H(r):
    """H(r) = r sqrt(2 + r^2), the dispersion relation."""
    r = np.asarray(r, dtype=float)
    return r * np.sqrt(2.0 + r * r)


def symbol_H_prime(r):
    """Group speed H'(r) = (2 + 2 r^2) / sqrt(2 + r^2)."""
    r = np.asarray(r, dtype=float)
    return (2.0 + 2.0 * r * r) / np.sqrt(2.0 + r * r)


def symbol_H_second(r):
    r = np.asarray(r, dtype=float)
    return r * (6.0 + 2.0 * r * r) / (2.0 + r * r) ** 1.5


def symbol_U_inv(r):
    """1/U off the origin; the zero mode is mapped to 0."""
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.sqrt(2.0 + r * r) / r
    return np.where(r > 0, out, 0.0)


@dataclass(frozen=True)
class DispersiveSymbols:
    """Symbols U, H and U^{-1} sampled on a lattice."""

    grid: SpectralGrid

    @property
    def U(self) -> np.ndarray:
        return symbol_U(self.grid.kabs)

    @property
    def H(self) -> np.ndarray:
        return symbol_H(self.grid.kabs)

    @property
    def U_inv(self) -> np.ndarray:
        return symbol_U_inv(self.grid.kabs)

    @property
    def zero_mode(self) -> np.ndarray:
        return self.grid.kabs == 0


def apply_U_inv(field: Field) -> tuple[Field, bool]:
    """
    Apply U^{-1} to a Fourier-space field.

    Returns the result and a flag that is True when the input carried a
    nonzero mean, which U^{-1} discards.
    """
    if field.space != "fourier":
        raise ValueError("U^{-1} acts on Fourier-space fields")
    grid = field.grid
    zero = grid.kabs == 0
    dropped = bool(np.any(np.abs(field.values[..., zero]) > 0))
    return field.with_values(field.values * symbol_U_inv(grid.kabs)), dropped
