"""Scalar special functions and quadrature primitives.

Everything here is a pure function of its arguments. The oscillatory
integral is evaluated after the substitution ``s = cos(theta)``, which turns
the algebraic weight ``(1 - s^2)^((d-3)/2) ds`` into the smooth weight
``sin(theta)^(d-2) dtheta`` and removes the endpoint singularity of the
weight for even ``d``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

LOG_PI = math.log(math.pi)
INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0

# Underflow guard for exp(); anything below this contributes < 1e-300.
_LOG_TINY = -690.0


class DomainError(ValueError):
    """Argument outside the domain of a function."""


class ConvergenceError(ArithmeticError):
    """An iterative method failed to reach its tolerance."""

    def __init__(self, message: str, error_estimate: float = math.inf):
        super().__init__(message)
        self.error_estimate = error_estimate


@dataclass(frozen=True)
class QuadratureSpec:
    """Composite Gauss-Legendre settings.

    ``panel_count`` is the minimum number of panels; the integrators double
    the panel count until two successive estimates agree to within
    ``max(abs_tol, rel_tol * |value|)`` or ``max_panels`` is exceeded.
    """

    panel_count: int = 4
    nodes_per_panel: int = 10
    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    max_panels: int = 1 << 20

    def __post_init__(self):
        if int(self.panel_count) != self.panel_count or self.panel_count < 1:
            raise DomainError(f"panel_count must be a positive integer, got {self.panel_count}")
        if int(self.nodes_per_panel) != self.nodes_per_panel or self.nodes_per_panel < 2:
            raise DomainError(f"nodes_per_panel must be >= 2, got {self.nodes_per_panel}")
        for name in ("abs_tol", "rel_tol"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise DomainError(f"{name} must be finite and positive, got {v}")
        if self.max_panels < self.panel_count:
            raise DomainError("max_panels must be >= panel_count")

    def tightened(self, factor: float) -> "QuadratureSpec":
        return QuadratureSpec(
            panel_count=self.panel_count,
            nodes_per_panel=self.nodes_per_panel,
            abs_tol=self.abs_tol / factor,
            rel_tol=self.rel_tol / factor,
            max_panels=self.max_panels,
        )


DEFAULT_SPEC = QuadratureSpec()


# ---------------------------------------------------------------------------
# Gamma, incomplete beta, incomplete gamma
# ---------------------------------------------------------------------------

def log_gamma(s: float) -> float:
    """ln Gamma(s) for real s > 0."""
    s = float(s)
    if not math.isfinite(s) or s <= 0.0:
        raise DomainError(f"log_gamma requires a finite s > 0, got {s}")
    return math.lgamma(s)


def log_gamma_half_ratio(x: float) -> float:
    """``ln Gamma(x + 1/2) - ln Gamma(x)``.

    For large x the two lgamma values are huge and their difference loses
    about log10(x ln x) digits, so the asymptotic series is used instead.
    """
    if x < 25.0:
        return log_gamma(x + 0.5) - log_gamma(x)
    y = 1.0 / x
    y2 = y * y
    return 0.5 * math.log(x) - y * (1.0 / 8.0 - y2 * (1.0 / 192.0 - y2 * (1.0 / 640.0 - y2 * 17.0 / 14336.0)))


def log_beta(a: float, b: float) -> float:
    return log_gamma(a) + log_gamma(b) - log_gamma(a + b)


def _beta_cf(x: float, a: float, b: float, max_iter: int = 20000, eps: float = 1e-16) -> float:
    """Continued fraction for I_x(a, b) (modified Lentz)."""
    tiny = 1e-300
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    dd = 1.0 - qab * x / qap
    if abs(dd) < tiny:
        dd = tiny
    dd = 1.0 / dd
    h = dd
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        dd = 1.0 + aa * dd
        if abs(dd) < tiny:
            dd = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        dd = 1.0 / dd
        h *= dd * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        dd = 1.0 + aa * dd
        if abs(dd) < tiny:
            dd = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        dd = 1.0 / dd
        delta = dd * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    raise ConvergenceError(f"incomplete beta continued fraction did not converge (x={x}, a={a}, b={b})")


def _check_beta_args(x: float, a: float, b: float):
    if not (math.isfinite(a) and a > 0 and math.isfinite(b) and b > 0):
        raise DomainError(f"reg_inc_beta requires a > 0 and b > 0, got a={a}, b={b}")
    if not (0.0 <= x <= 1.0):
        raise DomainError(f"reg_inc_beta requires x in [0, 1], got {x}")


def _log_front(x: float, a: float, b: float) -> float:
    return a * math.log(x) + b * math.log1p(-x) - log_beta(a, b)


def log_reg_inc_beta(x: float, a: float, b: float) -> float:
    """ln I_x(a, b); stays finite where I_x itself underflows.

    Returns ``-inf`` at x = 0.
    """
    x, a, b = float(x), float(a), float(b)
    _check_beta_args(x, a, b)
    if x == 0.0:
        return -math.inf
    if x == 1.0:
        return 0.0
    if x < (a + 1.0) / (a + b + 2.0):
        return _log_front(x, a, b) - math.log(a) + math.log(_beta_cf(x, a, b))
    tail = math.exp(_log_front(x, a, b) - math.log(b)) * _beta_cf(1.0 - x, b, a)
    return math.log1p(-tail)


def reg_inc_beta(x: float, a: float, b: float) -> float:
    """Regularized incomplete beta I_x(a, b).

    Uses the continued fraction directly when ``x < (a+1)/(a+b+2)`` and the
    reflection ``I_x(a,b) = 1 - I_{1-x}(b,a)`` otherwise.
    """
    x, a, b = float(x), float(a), float(b)
    _check_beta_args(x, a, b)
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(_log_front(x, a, b) - math.log(a)) * _beta_cf(x, a, b)
    return 1.0 - math.exp(_log_front(1.0 - x, b, a) - math.log(b)) * _beta_cf(1.0 - x, b, a)


def _inc_gamma_pair(a: float, x: float, max_iter: int = 100000) -> tuple[float, float]:
    """``(P(a, x), Q(a, x))``, each without cancellation on its own side.

    Series for P when ``x < a + 1``, Lentz continued fraction for Q otherwise.
    """
    a, x = float(a), float(x)
    if not (math.isfinite(a) and a > 0):
        raise DomainError(f"incomplete gamma requires a > 0, got {a}")
    if not (x >= 0):
        raise DomainError(f"incomplete gamma requires x >= 0, got {x}")
    if x == 0.0:
        return 0.0, 1.0
    if math.isinf(x):
        return 1.0, 0.0
    log_pref = -x + a * math.log(x) - log_gamma(a)
    if x < a + 1.0:
        ap = a
        term = 1.0 / a
        total = term
        for _ in range(max_iter):
            ap += 1.0
            term *= x / ap
            total += term
            if abs(term) < abs(total) * 1e-17:
                p = min(1.0, total * math.exp(log_pref))
                return p, 1.0 - p
        raise ConvergenceError(f"incomplete gamma series did not converge (a={a}, x={x})")
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    dd = 1.0 / b
    h = dd
    for i in range(1, max_iter + 1):
        an = -i * (i - a)
        b += 2.0
        dd = an * dd + b
        if abs(dd) < tiny:
            dd = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        dd = 1.0 / dd
        delta = dd * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            q = min(1.0, math.exp(log_pref) * h)
            return 1.0 - q, q
    raise ConvergenceError(f"incomplete gamma continued fraction did not converge (a={a}, x={x})")


def reg_lower_inc_gamma(a: float, x: float) -> float:
    """Regularized lower incomplete gamma P(a, x)."""
    return _inc_gamma_pair(a, x)[0]


def reg_upper_inc_gamma(a: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x)."""
    return _inc_gamma_pair(a, x)[1]


# ---------------------------------------------------------------------------
# Composite Gauss-Legendre
# ---------------------------------------------------------------------------

@lru_cache(maxsize=64)
def _leggauss(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre_panels(f: Callable[[np.ndarray], np.ndarray], edges: Sequence[float] | np.ndarray, n: int) -> float:
    """Sum of n-point Gauss-Legendre rules over consecutive ``edges``.

    ``f`` must be vectorized; it is called once on all nodes.
    """
    edges = np.asarray(edges, dtype=float)
    x, w = _leggauss(n)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = mid[:, None] + half[:, None] * x[None, :]
    vals = np.asarray(f(nodes), dtype=float)
    return float(np.sum((vals * w[None, :]).sum(axis=1) * half))


def integrate(f: Callable[[np.ndarray], np.ndarray], a: float, b: float,
              spec: QuadratureSpec = DEFAULT_SPEC, panels: int | None = None) -> tuple[float, float]:
    """Integrate a smooth vectorized ``f`` over [a, b] by uniform panel doubling.

    Returns ``(value, error_estimate)``; raises ConvergenceError when the
    panel cap is reached first.
    """
    if a == b:
        return 0.0, 0.0
    p = max(spec.panel_count, panels or 1)
    prev = gauss_legendre_panels(f, np.linspace(a, b, p + 1), spec.nodes_per_panel)
    while True:
        p *= 2
        cur = gauss_legendre_panels(f, np.linspace(a, b, p + 1), spec.nodes_per_panel)
        err = abs(cur - prev)
        if err <= max(spec.abs_tol, spec.rel_tol * abs(cur)):
            return cur, err
        if 2 * p > spec.max_panels:
            raise ConvergenceError(
                f"quadrature on [{a}, {b}] stalled at {p} panels (error {err:.3e})", err)
        prev = cur


def integrate_edges(f: Callable[[np.ndarray], np.ndarray], edges: Sequence[float] | np.ndarray,
                    spec: QuadratureSpec = DEFAULT_SPEC) -> tuple[float, float]:
    """Like :func:`integrate` but on a caller-supplied (possibly graded) mesh.

    Every panel is bisected until successive sums agree.
    """
    edges = np.asarray(edges, dtype=float)
    prev = gauss_legendre_panels(f, edges, spec.nodes_per_panel)
    while True:
        mids = 0.5 * (edges[1:] + edges[:-1])
        refined = np.empty(2 * edges.size - 1)
        refined[0::2] = edges
        refined[1::2] = mids
        edges = refined
        cur = gauss_legendre_panels(f, edges, spec.nodes_per_panel)
        err = abs(cur - prev)
        if err <= max(spec.abs_tol, spec.rel_tol * abs(cur)):
            return cur, err
        if edges.size - 1 > spec.max_panels:
            raise ConvergenceError(f"graded quadrature stalled (error {err:.3e})", err)
        prev = cur


# ---------------------------------------------------------------------------
# Normalized oscillatory integral with the (1 - s^2)^((d-3)/2) weight
# ---------------------------------------------------------------------------

def log_sphere_normalizer(d: float) -> float:
    """ln of Gamma(d/2) / (Gamma((d-1)/2) sqrt(pi)).

    This is the density normalizer of the first coordinate of a uniform point
    on the unit sphere in R^d, equal to omega_{d-2} / omega_{d-1}.
    """
    if d <= 1:
        raise DomainError(f"normalizer requires d > 1, got {d}")
    return log_gamma_half_ratio(0.5 * (d - 1.0)) - 0.5 * LOG_PI


@dataclass(frozen=True)
class LogWeightIntegrand:
    """``trig(2 pi r s) s^k (1 - s^2)^((d-3)/2)`` with the weight kept in log form."""

    d: float
    oscillation_frequency: float
    moment_power: int = 0

    def __post_init__(self):
        if self.moment_power not in (0, 1):
            raise DomainError(f"moment_power must be 0 or 1, got {self.moment_power}")
        if self.oscillation_frequency < 0:
            raise DomainError("oscillation_frequency must be >= 0")

    def log_weight(self, s):
        s = np.asarray(s, dtype=float)
        # ln(1 - s^2) without cancellation near |s| = 1
        return 0.5 * (self.d - 3.0) * (np.log1p(-s) + np.log1p(s))

    def on_angle(self, theta: np.ndarray, log_scale: float = 0.0) -> np.ndarray:
        """Integrand after s = cos(theta), including the Jacobian sin(theta)."""
        s = np.cos(theta)
        w = np.exp(log_scale + (self.d - 2.0) * np.log(np.sin(theta)))
        if self.moment_power == 0:
            return np.cos(self.oscillation_frequency * s) * w
        return s * np.sin(self.oscillation_frequency * s) * w


def _angle_cutoff(d: float, log_norm: float, abs_tol: float) -> float:
    """Smallest theta whose weight can still matter at tolerance ``abs_tol``."""
    if d <= 2.0:
        return 0.0
    target = (math.log(abs_tol) - 10.0 - log_norm) / (d - 2.0)
    if target >= 0.0:
        return 0.0
    return math.asin(math.exp(target))


def oscillatory_moment(r: float, d: float, moment_power: int,
                       spec: QuadratureSpec = DEFAULT_SPEC, normalized: bool = True) -> tuple[float, float]:
    """``(value, error)`` of ``C * int_{-1}^{1} trig(2 pi r s) s^k (1-s^2)^((d-3)/2) ds``.

    ``C`` is the sphere normalizer when ``normalized`` else 1. ``d`` may be any
    real number >= 2 (real ``d`` is needed when back-solving Bessel values of
    arbitrary order; d = 2 is the circle, whose angular weight is constant).
    """
    r = float(r)
    if not math.isfinite(r) or r < 0:
        raise DomainError(f"r must be finite and >= 0, got {r}")
    if d < 2.0:
        raise DomainError(f"d must be at least 2, got {d}")
    log_norm = log_sphere_normalizer(d)
    log_scale = log_norm if normalized else 0.0
    if moment_power == 1 and r == 0.0:
        return 0.0, 0.0
    integrand = LogWeightIntegrand(d, 2.0 * math.pi * r, moment_power)
    lo = _angle_cutoff(d, log_norm, spec.abs_tol)
    hi = 0.5 * math.pi
    width = hi - lo
    # panel width <= 1/(4 max(r, 1)), and fine enough to resolve the 1/sqrt(d) peak
    p = max(spec.panel_count,
            math.ceil(width * 4.0 * max(r, 1.0)),
            math.ceil(width * math.sqrt(d)))
    val, err = integrate(lambda t: integrand.on_angle(t, log_scale), lo, hi, spec, panels=p)
    # both integrands are symmetric about theta = pi/2
    return 2.0 * val, 2.0 * err


def weighted_oscillatory_integral(r: float, d: int, moment_power: int,
                                  spec: QuadratureSpec = DEFAULT_SPEC, full_output: bool = False):
    """Normalized cosine (k=0) or sine-moment (k=1) integral for integer d >= 3.

    For k = 0 this is the spherical symbol at radius r; for k = 1 it is the
    integral entering the radial derivative of that symbol.
    """
    if int(d) != d or d < 3:
        raise DomainError(f"d must be an integer >= 3, got {d}")
    val, err = oscillatory_moment(r, float(d), moment_power, spec)
    return (val, err) if full_output else val


# ---------------------------------------------------------------------------
# One-dimensional search
# ---------------------------------------------------------------------------

def golden_section_max(f: Callable[[float], float], a: float, b: float, tol: float = 1e-4) -> tuple[float, float]:
    """Maximize a unimodal ``f`` on [a, b].

    The iteration count is fixed by ``tol`` so repeated calls do the same work.
    Returns ``(x, f(x))`` with the best point seen, endpoints included.
    """
    a, b = min(a, b), max(a, b)
    h = b - a
    fa, fb = f(a), f(b)
    best = max([(fa, -a), (fb, -b)])
    if h <= tol:
        return -best[1], best[0]
    n = int(math.ceil(math.log(tol / h) / math.log(INV_PHI)))
    c = b - INV_PHI * h
    dx = a + INV_PHI * h
    fc, fd = f(c), f(dx)
    for _ in range(n):
        if fc >= fd:
            b, dx, fd = dx, c, fc
            h = b - a
            c = b - INV_PHI * h
            fc = f(c)
        else:
            a, c, fc = c, dx, fd
            h = b - a
            dx = a + INV_PHI * h
            fd = f(dx)
    for fx, x in ((fc, c), (fd, dx)):
        if (fx, -x) > best:
            best = (fx, -x)
    return -best[1], best[0]


def bisect_root(f: Callable[[float], float], a: float, b: float, xtol: float = 1e-15, max_iter: int = 200) -> float:
    fa = f(a)
    fb = f(b)
    if fa == 0:
        return a
    if fb == 0:
        return b
    if (fa > 0) == (fb > 0):
        raise DomainError(f"no sign change on [{a}, {b}]")
    for _ in range(max_iter):
        m = 0.5 * (a + b)
        fm = f(m)
        if fm == 0 or (b - a) < xtol:
            return m
        if (fm > 0) == (fa > 0):
            a, fa = m, fm
        else:
            b = m
    return 0.5 * (a + b)
