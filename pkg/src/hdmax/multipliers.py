"""Radial profiles of the sphere, ball and heat-kernel multiplier symbols.

All three symbols are characters of rotation-invariant probability measures,
so they depend on the frequency only through ``r = |xi|`` and are real.

The ball symbol in dimension ``d`` coincides with the sphere symbol in
dimension ``d + 2`` (the first coordinate of a uniform point in the unit ball
of R^d has the same law as that of a uniform point on the unit sphere of
R^(d+2)). That identity is the default route; the ray average
``d * int_0^1 mu(s r) s^(d-1) ds`` is kept as an independent route.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .numerics import (
    DEFAULT_SPEC,
    DomainError,
    QuadratureSpec,
    integrate,
    oscillatory_moment,
)


class Method(str, enum.Enum):
    QUADRATURE = "quadrature"
    CLOSED_FORM = "closed_form"
    MONTE_CARLO = "monte_carlo"


class SymbolPair(str, enum.Enum):
    MU_MINUS_G = "mu_minus_g"
    MU_MINUS_M = "mu_minus_m"
    G_MINUS_M = "g_minus_m"


@dataclass(frozen=True)
class MultiplierPoint:
    r: float
    d: int
    value: float
    method: Method
    error_estimate: float = 0.0


def _check(r: float, d: int, d_min: int = 3):
    if int(d) != d or d < d_min:
        raise DomainError(f"d must be an integer >= {d_min}, got {d}")
    if not (math.isfinite(r) and r >= 0):
        raise DomainError(f"r must be finite and >= 0, got {r}")


def mu(r: float, d: int, spec: QuadratureSpec = DEFAULT_SPEC) -> MultiplierPoint:
    """Spherical-average symbol at radius ``r``."""
    _check(r, d)
    if r == 0:
        return MultiplierPoint(0.0, d, 1.0, Method.CLOSED_FORM)
    val, err = oscillatory_moment(r, float(d), 0, spec)
    return MultiplierPoint(float(r), d, val, Method.QUADRATURE, err)


def mu_radial_derivative(r: float, d: int, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """``r * d/dr mu(r)`` via the sine-moment integral."""
    return mu_radial_derivative_point(r, d, spec).value


def mu_radial_derivative_point(r: float, d: int, spec: QuadratureSpec = DEFAULT_SPEC) -> MultiplierPoint:
    _check(r, d)
    if r == 0:
        return MultiplierPoint(0.0, d, 0.0, Method.CLOSED_FORM)
    val, err = oscillatory_moment(r, float(d), 1, spec)
    scale = 2.0 * math.pi * r
    return MultiplierPoint(float(r), d, -scale * val, Method.QUADRATURE, scale * err)


def mu_radial_derivative_recursion(r: float, d: int, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """``r * mu_d'(r) = (d - 2) * (mu_{d-2}(r) - mu_d(r))``, valid for d >= 4.

    This is the Bessel-recursion form of the derivative expressed through the
    symbol two dimensions lower (for d = 4 that is the circle, whose weight
    is still integrable after the angular substitution).
    """
    _check(r, d, d_min=4)
    if r == 0:
        return 0.0
    lower, _ = oscillatory_moment(r, float(d - 2), 0, spec)
    upper, _ = oscillatory_moment(r, float(d), 0, spec)
    return (d - 2) * (lower - upper)


def ball_multiplier(r: float, d: int, spec: QuadratureSpec = DEFAULT_SPEC, method: str = "shift") -> MultiplierPoint:
    """Ball-average symbol ``m(r) = d * int_0^1 mu(s r) s^(d-1) ds``.

    ``method="shift"`` evaluates it as the sphere symbol in dimension d + 2.
    ``method="ray"`` integrates ``d s^(d-1) mu(s r)`` over s in [0, 1]; it is
    far more expensive and serves as a cross-check. (Substituting u = s^d
    would absorb the weight but leaves a u^(2/d) branch point at u = 0 that
    Gauss-Legendre resolves only algebraically.)
    """
    _check(r, d)
    if r == 0:
        return MultiplierPoint(0.0, d, 1.0, Method.CLOSED_FORM)
    if method == "shift":
        val, err = oscillatory_moment(r, float(d + 2), 0, spec)
        return MultiplierPoint(float(r), d, val, Method.QUADRATURE, err)
    if method == "ray":
        inner = spec.tightened(10.0)

        def f(s):
            flat = np.ravel(s)
            out = np.array([oscillatory_moment(r * x, float(d), 0, inner)[0] for x in flat])
            return (d * flat ** (d - 1) * out).reshape(np.shape(s))

        panels = max(spec.panel_count, math.ceil(2.0 * r) + 1)
        val, err = integrate(f, 0.0, 1.0, spec, panels=panels)
        return MultiplierPoint(float(r), d, val, Method.QUADRATURE, err)
    raise DomainError(f"unknown ball_multiplier method {method!r}")


def ball_radial_derivative(r: float, d: int, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """``r * d/dr m(r)``."""
    _check(r, d)
    return mu_radial_derivative(r, d + 2, spec)


def gaussian_multiplier(r: float, d: int) -> MultiplierPoint:
    """Heat-kernel symbol ``exp(-2 pi^2 r^2 / d)`` (closed form)."""
    _check(r, d, d_min=1)
    return MultiplierPoint(float(r), d, math.exp(-2.0 * math.pi ** 2 * r * r / d), Method.CLOSED_FORM)


def gaussian_radial_derivative(r: float, d: int) -> float:
    _check(r, d, d_min=1)
    x = 2.0 * math.pi ** 2 * r * r / d
    return -2.0 * x * math.exp(-x)


def _parts(pair: SymbolPair, r: float, d: int, spec: QuadratureSpec, derivative: bool):
    pair = SymbolPair(pair)
    if derivative:
        vals = {
            "mu": lambda: mu_radial_derivative(r, d, spec),
            "m": lambda: ball_radial_derivative(r, d, spec),
            "g": lambda: gaussian_radial_derivative(r, d),
        }
    else:
        vals = {
            "mu": lambda: mu(r, d, spec).value,
            "m": lambda: ball_multiplier(r, d, spec).value,
            "g": lambda: gaussian_multiplier(r, d).value,
        }
    left, right = pair.value.split("_minus_")
    return vals[left](), vals[right]()


def difference(pair: SymbolPair | str, r: float, d: int, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Value of the selected difference symbol at radius ``r``."""
    _check(r, d)
    a, b = _parts(pair, r, d, spec, derivative=False)
    return a - b


def difference_radial_derivative(pair: SymbolPair | str, r: float, d: int, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """``r * d/dr`` of the selected difference symbol."""
    _check(r, d)
    a, b = _parts(pair, r, d, spec, derivative=True)
    return a - b


def mu_minus_m_by_ray(r: float, d: int, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """``mu(r) - m(r) = int_0^1 (s r) mu'(s r) s^(d-1) ds`` as a quadrature along the ray."""
    _check(r, d)
    if r == 0:
        return 0.0
    inner = spec.tightened(10.0)

    def f(s):
        flat = np.ravel(s)
        out = np.array([mu_radial_derivative(r * x, d, inner) if x > 0 else 0.0 for x in flat])
        return (flat ** (d - 1) * out).reshape(np.shape(s))

    panels = max(spec.panel_count, math.ceil(2.0 * r) + 1)
    val, _ = integrate(f, 0.0, 1.0, spec, panels=panels)
    return val


def mu_closed_form_d3(r: float) -> float:
    """``sin(2 pi r) / (2 pi r)``, the three-dimensional sphere symbol."""
    if r == 0:
        return 1.0
    x = 2.0 * math.pi * r
    return math.sin(x) / x
