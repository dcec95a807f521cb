"""Closed-form profiles, exponent formulas, and exterior data builders."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as gamma_fn

from .grid import Grid, GridFunction, TailModel
from .solver import GAMMA_MAX

__all__ = [
    "growth_exponent",
    "schauder_exponent",
    "profile_coefficient",
    "exact_local_profile",
    "getoor_profile",
    "getoor_constant",
    "ExponentRow",
    "exponent_table",
    "odd_exterior_builder",
    "ValidationReport",
    "validate_params",
]


def growth_exponent(s: float, gamma: float) -> float:
    """Sharp growth rate 2s/(1-gamma) at branching points."""
    return 2.0 * s / (1.0 - gamma)


def schauder_exponent(s: float, gamma: float) -> float:
    """Naive regularity rate 2s + gamma; strictly below the sharp rate."""
    return 2.0 * s + gamma


def profile_coefficient(gamma: float) -> float:
    """Coefficient kappa with (kappa x^beta)'' = (kappa x^beta)^gamma, beta = 2/(1-gamma)."""
    beta = growth_exponent(1.0, gamma)
    return float((beta * (beta - 1.0)) ** (-1.0 / (1.0 - gamma)))


def exact_local_profile(grid: Grid, gamma: float) -> GridFunction:
    """Two-phase local solution kappa*(x_+^beta - x_-^beta) sampled on the grid."""
    beta = growth_exponent(1.0, gamma)
    kappa = profile_coefficient(gamma)
    x = grid.x
    vals = kappa * (
        np.maximum(x, 0.0) ** beta - np.maximum(-x, 0.0) ** beta
    )
    return GridFunction(grid, vals, TailModel.zero())


def getoor_profile(s: float, grid: Grid) -> GridFunction:
    """(1 - x^2)_+^s on the grid; its fractional Laplacian is constant on (-1, 1)."""
    vals = np.maximum(1.0 - grid.x**2, 0.0) ** s
    return GridFunction(grid, vals, TailModel.zero())


def getoor_constant(s: float) -> float:
    """Value of the fractional Laplacian of (1 - x^2)_+^s inside (-1, 1)."""
    return float(4.0**s * gamma_fn(0.5 + s) * gamma_fn(1.0 + s) / np.sqrt(np.pi))


@dataclass(frozen=True)
class ExponentRow:
    s: float
    gamma: float
    growth: float
    schauder: float
    nu: int | None  # derivative-vanishing order; None when indeterminate


def _nu_regime(s: float, gamma: float) -> int | None:
    if s < 1.0 - gamma:
        return 1
    if s > 1.0 - gamma / 2.0:
        return 2
    return None


def exponent_table(s_values, gamma_values) -> list[ExponentRow]:
    """Cross product of exponent formulas over the given parameter lists."""
    rows = []
    for s in s_values:
        for g in gamma_values:
            rows.append(
                ExponentRow(
                    s=float(s),
                    gamma=float(g),
                    growth=growth_exponent(s, g),
                    schauder=schauder_exponent(s, g),
                    nu=_nu_regime(s, g),
                )
            )
    return rows


def odd_exterior_builder(grid: Grid, kind: str, amplitude: float) -> GridFunction:
    """Odd exterior data with zero interior values and a zero tail.

    kind "ramp": sign(y) * amplitude * min((|y|-a)/a, 1)^2, vanishing at the
    interior boundary and saturating one window further out.  kind "plateau":
    sign(y) * amplitude on the whole exterior.  Odd data cannot be expressed
    by the even tail models, so both builders truncate to a zero tail.
    """
    a = grid.a
    y = grid.x
    vals = np.zeros(grid.n)
    ext = grid.exterior
    ye = y[ext]
    if kind == "ramp":
        vals[ext] = amplitude * np.sign(ye) * np.minimum((np.abs(ye) - a) / a, 1.0) ** 2
    elif kind == "plateau":
        vals[ext] = amplitude * np.sign(ye)
    else:
        raise ValueError(f"unknown builder kind {kind!r}")
    return GridFunction(grid, vals, TailModel.zero())


@dataclass
class ValidationReport:
    errors: list[str]
    warnings: list[str]
    rows: list[ExponentRow]

    @property
    def ok(self) -> bool:
        return not self.errors


def validate_params(s: float, gamma: float) -> ValidationReport:
    """Check parameter ranges and report the exponent regime.

    Errors are out-of-range parameters; an indeterminate derivative-vanishing
    order (1 - gamma <= s <= 1 - gamma/2) is reported as a warning.
    """
    errors = []
    warnings_ = []
    if not (0.0 < gamma < GAMMA_MAX):
        errors.append(f"gamma={gamma:g} outside (0, 1/3)")
    if not (0.5 <= s < 0.999):
        errors.append(f"s={s:g} outside [0.5, 0.999)")
    rows = []
    if not errors:
        rows = exponent_table([s], [gamma])
        if rows[0].nu is None:
            warnings_.append(
                f"derivative-vanishing order indeterminate for s={s:g}, gamma={gamma:g}"
            )
    return ValidationReport(errors=errors, warnings=warnings_, rows=rows)
