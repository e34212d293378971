"""Maximal functions of explicit radial inputs, their p-norm ratios, and the
constants attached to the one-dimensional lower bound.

All d-dimensional norms are reduced to one-dimensional radial integrals with
the surface-measure prefactor carried in log form.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .numerics import (
    DomainError,
    QuadratureSpec,
    bisect_root,
    golden_section_max,
    integrate,
    integrate_edges,
    log_gamma,
    log_reg_inc_beta,
    log_sphere_normalizer,
    reg_inc_beta,
    reg_upper_inc_gamma,
)

SQRT2 = math.sqrt(2.0)
RADIAL_SPEC = QuadratureSpec(panel_count=8, nodes_per_panel=12, abs_tol=1e-13, rel_tol=1e-11)
SCAN_NOISE = 1e-10


class InputId(str, enum.Enum):
    GAUSSIAN_1D = "gaussian_1d"
    GAUSSIAN_DD = "gaussian_dd"
    INDICATOR_BALL = "indicator_ball"
    HOMOGENEOUS_1D = "homogeneous_1d"


class BoundKind(str, enum.Enum):
    LOWER = "lower"
    UPPER = "upper"


@dataclass(frozen=True)
class PNormParameter:
    p: float

    def __post_init__(self):
        if not (math.isfinite(self.p) and self.p > 1.0):
            raise DomainError(f"p must be a finite real > 1, got {self.p}")

    @property
    def conjugate_factor(self) -> float:
        return self.p / (self.p - 1.0)


def _as_p(p) -> PNormParameter:
    return p if isinstance(p, PNormParameter) else PNormParameter(float(p))


@dataclass(frozen=True)
class RadialRatioReport:
    input_id: InputId
    p: PNormParameter
    d: int
    ratio: float
    paper_bound: float
    bound_kind: BoundKind
    excess: float
    aux: dict = field(default_factory=dict)

    @property
    def ratio_p(self) -> float:
        return 1.0 + self.excess

    def respects_bound(self, tol: float = 1e-9) -> bool:
        if self.bound_kind is BoundKind.LOWER:
            return self.ratio >= self.paper_bound - tol
        return self.ratio <= self.paper_bound + tol


@dataclass(frozen=True)
class ConstantsReport:
    c_sharp_values: dict
    c_infimum: float
    p_star: float
    x1_root: float
    h_infimum: float
    h_argmin: float


class UnimodalityError(ArithmeticError):
    pass


def _scan_max(f, grid, tol: float = 1e-8, check_unimodal: bool = True) -> tuple[float, float]:
    """Coarse scan plus golden-section refinement around the best grid point.

    Unimodality is checked by counting rises that follow a fall (beyond a
    relative noise floor) along the scan.
    """
    grid = np.asarray(grid, dtype=float)
    vals = np.array([f(x) for x in grid])
    if check_unimodal:
        step = np.diff(vals)
        floor = SCAN_NOISE * max(1.0, float(np.max(np.abs(vals))))
        signs = np.sign(np.where(np.abs(step) > floor, step, 0.0))
        signs = signs[signs != 0]
        if np.any((signs[:-1] < 0) & (signs[1:] > 0)):
            raise UnimodalityError("scan profile has more than one local maximum")
    i = int(np.argmax(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
    x, fx = golden_section_max(f, lo, hi, tol)
    if vals[i] >= fx:
        return float(grid[i]), float(vals[i])
    return x, fx


# ---------------------------------------------------------------------------
# Gaussian input, one dimension
# ---------------------------------------------------------------------------

def gauss_max_gaussian_1d(x: float) -> float:
    """``sup_t G_t gamma(x)`` for ``gamma(x) = (4 pi)^(-1/2) e^(-x^2/4)``."""
    ax = abs(x)
    if ax <= SQRT2:
        return math.exp(-0.25 * ax * ax) / math.sqrt(4.0 * math.pi)
    return math.exp(-0.5) / math.sqrt(2.0 * math.pi * ax * ax)


def gaussian_1d_lower_bound(p) -> float:
    p = _as_p(p).p
    return math.exp((math.log(2.0 * p / math.pi) - p) / (2.0 * p) + math.log(p / (p - 1.0)) / p)


def gauss_max_gaussian_ratio_1d(p) -> RadialRatioReport:
    """Norm ratio from the two pieces of the supremum.

    Inside ``|x| <= sqrt(2)`` the supremum is the input itself, whose share of
    the norm is ``P(1/2, p/2)``; outside it is ``c |x|^(-1)`` and integrates
    in closed form.
    """
    pp = _as_p(p)
    p = pp.p
    log_norm = -0.5 * p * math.log(4.0 * math.pi) + 0.5 * math.log(4.0 * math.pi / p)
    outer = reg_upper_inc_gamma(0.5, 0.5 * p)
    log_tail = (math.log(2.0) - 0.5 * p * math.log(2.0 * math.pi) - 0.5 * p
                + 0.5 * (1.0 - p) * math.log(2.0) - math.log(p - 1.0))
    excess = math.exp(log_tail - log_norm) - outer
    return RadialRatioReport(InputId.GAUSSIAN_1D, pp, 1, math.exp(math.log1p(excess) / p),
                             gaussian_1d_lower_bound(pp), BoundKind.LOWER, excess)


# ---------------------------------------------------------------------------
# Gaussian input, d dimensions
# ---------------------------------------------------------------------------

def gauss_max_gaussian_dd(x_norm: float, d: int) -> float:
    """``sup_t G_t gamma_d(x)`` for ``gamma_d(x) = (4 pi)^(-d/2) e^(-|x|^2/4)``."""
    if x_norm * x_norm <= 2.0 * d:
        return math.exp(-0.5 * d * math.log(4.0 * math.pi) - 0.25 * x_norm * x_norm)
    return math.exp(0.5 * d * math.log(d / (2.0 * math.pi * x_norm * x_norm)) - 0.5 * d)


def log_v(p, d: int) -> float:
    """``ln v(p, d)`` with ``v = e^(-dp/2) (pd/2)^(d/2) 2 / (Gamma(d/2) d (p - 1))``."""
    p = _as_p(p).p
    return (-0.5 * d * p + 0.5 * d * math.log(0.5 * p * d) + math.log(2.0)
            - log_gamma(0.5 * d) - math.log(d * (p - 1.0)))


def gauss_max_gaussian_ratio_d(p, d: int) -> RadialRatioReport:
    """Norm ratio in R^d; the tail piece is integrated radially in log form.

    ``aux["v"]`` carries ``v(p, d)`` from its closed form, and ``aux["tail"]``
    the independently reduced tail share (the two agree).
    """
    pp = _as_p(p)
    p = pp.p
    if int(d) != d or d < 1:
        raise DomainError(f"d must be an integer >= 1, got {d}")
    log_norm = -0.5 * d * p * math.log(4.0 * math.pi) + 0.5 * d * math.log(4.0 * math.pi / p)
    outer = reg_upper_inc_gamma(0.5 * d, 0.5 * p * d)
    # int_{|x| > sqrt(2d)} (d/(2 pi |x|^2))^(dp/2) e^(-dp/2) dx
    log_area = math.log(2.0) + 0.5 * d * math.log(math.pi) - log_gamma(0.5 * d)
    log_radial = 0.5 * d * (1.0 - p) * math.log(2.0 * d) - math.log(d * (p - 1.0))
    log_tail = 0.5 * d * p * (math.log(d / (2.0 * math.pi)) - 1.0) + log_area + log_radial
    tail = math.exp(log_tail - log_norm)
    v = math.exp(log_v(pp, d))
    # ratio^p = P(d/2, pd/2) + tail = 1 + (tail - Q(d/2, pd/2))
    excess = tail - outer
    return RadialRatioReport(InputId.GAUSSIAN_DD, pp, int(d), math.exp(math.log1p(excess) / p),
                             math.exp(math.log1p(v) / p), BoundKind.UPPER, excess, {"v": v, "tail": tail})


# ---------------------------------------------------------------------------
# homogeneous input |y|^(-1/p), one dimension
# ---------------------------------------------------------------------------

def homogeneous_1d_paper_bound(p) -> float:
    p = _as_p(p).p
    return 2.0 ** ((p - 1.0) / p) / math.sqrt(2.0 * math.e * math.pi) * p / (p - 1.0)


def heat_mean_homogeneous(t: float, p, spec: QuadratureSpec = RADIAL_SPEC) -> float:
    """``(4 pi t)^(-1/2) int |1 - y|^(-1/p) e^(-y^2/(4t)) dy``.

    With ``|1 - y| = u^q`` and ``q = p/(p-1)`` the singular factor times the
    Jacobian is the constant ``q``, leaving a smooth integrand in u.
    """
    p = _as_p(p).p
    if not t > 0:
        raise DomainError(f"t must be positive, got {t}")
    q = p / (p - 1.0)
    z_max = 1.0 + 40.0 * math.sqrt(t)
    u_max = z_max ** (1.0 / q)
    inv = 1.0 / (4.0 * t)

    def f(u):
        z = u ** q
        return q * (np.exp(-(1.0 - z) ** 2 * inv) + np.exp(-(1.0 + z) ** 2 * inv))

    # the bump at z = 1 has width ~ sqrt(t) in z
    panels = max(spec.panel_count, int(math.ceil(4.0 / math.sqrt(t))))
    val, _ = integrate(f, 0.0, u_max, spec, panels=min(panels, spec.max_panels // 4))
    return val / math.sqrt(4.0 * math.pi * t)


def homogeneous_lower_bound_1d(p, t_grid=None, spec: QuadratureSpec = RADIAL_SPEC) -> float:
    """Supremum over t of :func:`heat_mean_homogeneous`, refined around the best grid point."""
    pp = _as_p(p)
    grid = np.logspace(-3, 3, 61) if t_grid is None else np.asarray(t_grid, dtype=float)
    log_f = lambda lt: heat_mean_homogeneous(math.exp(lt), pp, spec)
    _, val = _scan_max(log_f, np.log(grid))
    return val


# ---------------------------------------------------------------------------
# indicator of the unit ball
# ---------------------------------------------------------------------------

def spherical_max_indicator(x_norm: float, d: int) -> float:
    """``sup_t S_t chi(x)`` for the indicator of the unit ball in R^d."""
    if int(d) != d or d < 3:
        raise DomainError(f"d must be an integer >= 3, got {d}")
    if x_norm <= 1.0:
        return 1.0
    return 0.5 * reg_inc_beta(1.0 / (x_norm * x_norm + 1.0), 0.5 * (d - 1), 0.5)


def _log_half_cap(rho: float, d: int) -> float:
    return math.log(0.5) + log_reg_inc_beta(1.0 / (rho * rho + 1.0), 0.5 * (d - 1), 0.5)


def indicator_upper_bound_p(p, d: int) -> float:
    """Explicit upper bound for ``ratio^p``, assembled in log form."""
    p = _as_p(p).p
    denom = d * (p - 1.0) - p
    if denom <= 0:
        raise DomainError("the indicator ratio requires d(p-1) > p")
    log_inner = (log_gamma(0.5 * d) + 0.5 * math.log(2.0) - log_gamma(0.5 * (d - 1))
                 - 0.5 * math.log(math.pi) - math.log(d - 1.0))
    log_term = (math.log(2.0) + log_gamma(0.5 * d + 1.0) - log_gamma(0.5 * d)
                + p * log_inner - math.log(denom))
    return 1.0 + math.exp(log_term)


def spherical_indicator_ratio(p, d: int, spec: QuadratureSpec = RADIAL_SPEC) -> RadialRatioReport:
    """``ratio^p = 1 + d int_1^inf (S_* chi(rho))^p rho^(d-1) d rho``.

    Integrated in ``tau = ln rho``; the integrand decays like
    ``exp(-((d-1)(p-1) - 1) tau)``, which fixes the truncation point.
    """
    pp = _as_p(p)
    p = pp.p
    if int(d) != d or d < 3:
        raise DomainError(f"d must be an integer >= 3, got {d}")
    if d * (p - 1.0) <= p:
        raise DomainError("the indicator ratio requires d(p-1) > p")
    rate = (d - 1) * (p - 1.0) - 1.0
    tau_max = 40.0 / rate + 1.0

    def f(tau):
        out = np.empty_like(tau)
        for i, t in enumerate(np.ravel(tau)):
            rho = math.exp(t)
            out.flat[i] = math.exp(p * _log_half_cap(rho, d) + d * t + math.log(d))
        return out

    val, _ = integrate(f, 0.0, tau_max, spec)
    bound_p = indicator_upper_bound_p(pp, d)
    return RadialRatioReport(InputId.INDICATOR_BALL, pp, int(d), math.exp(math.log1p(val) / p),
                             bound_p ** (1.0 / p), BoundKind.UPPER, val, {"bound_p": bound_p})


def spherical_cap_area(r: float, sin_theta: float, d: int) -> float:
    """Log of the area of a cap of angular radius theta on the sphere of radius r in R^d."""
    if not r > 0 or not 0.0 <= sin_theta <= 1.0 or d < 2:
        raise DomainError("need r > 0, sin_theta in [0, 1] and d >= 2")
    if sin_theta == 0.0:
        return -math.inf
    log_full = math.log(2.0) + 0.5 * d * math.log(math.pi) - log_gamma(0.5 * d) + (d - 1) * math.log(r)
    return math.log(0.5) + log_full + log_reg_inc_beta(sin_theta * sin_theta, 0.5 * (d - 1), 0.5)


# ---------------------------------------------------------------------------
# spherical means of |x|^(-d/p) at a unit vector
# ---------------------------------------------------------------------------

SPD_THETA_MIN = 1e-14


def spd_profile(r: float, p, d: int, spec: QuadratureSpec = RADIAL_SPEC) -> float:
    """``N_d int_0^pi (1 - 2 r cos th + r^2)^(-d/(2p)) sin^(d-2) th d th``.

    A geometric mesh resolves the near-singularity at ``(r, th) = (1, 0)``;
    the piece below ``SPD_THETA_MIN`` is added from the local power law.
    """
    p = _as_p(p).p
    if r == 0:
        return 1.0
    k = 0.5 * d / p
    log_n = log_sphere_normalizer(d)

    def f(th):
        q = (1.0 - r) ** 2 + 4.0 * r * np.sin(0.5 * th) ** 2
        with np.errstate(divide="ignore"):
            return np.exp(log_n - k * np.log(q) + (d - 2) * np.log(np.sin(th)))

    n_geo = int(math.ceil(math.log2(1.0 / SPD_THETA_MIN)))
    geo = SPD_THETA_MIN * 2.0 ** np.arange(n_geo + 1)
    geo = geo[geo < 0.5]
    edges = np.concatenate([geo, np.linspace(0.5, math.pi, 8)])
    val, _ = integrate_edges(f, edges, spec)
    # tail on [0, SPD_THETA_MIN] from the local slope
    f1, f0 = float(f(np.array([SPD_THETA_MIN]))[0]), float(f(np.array([0.5 * SPD_THETA_MIN]))[0])
    if f1 > 0 and f0 > 0:
        alpha = math.log(f1 / f0) / math.log(2.0)
        val += f1 * SPD_THETA_MIN / (alpha + 1.0)
    return val


def spd_eigenvalue(p, d: int, r_grid=None, spec: QuadratureSpec = RADIAL_SPEC) -> tuple[float, float]:
    """``(s_{p,d}, maximizing r)``. The default grid contains r = 1 exactly."""
    pp = _as_p(p)
    if int(d) != d or d < 3:
        raise DomainError(f"d must be an integer >= 3, got {d}")
    if pp.p <= d / (d - 1.0):
        raise DomainError(f"the spherical mean of |x|^(-d/p) diverges at r = 1 unless p > d/(d-1) = {d / (d - 1.0):.6g}")
    grid = np.unique(np.concatenate([np.linspace(0.0, 3.0, 151), [1.0]])) if r_grid is None else np.asarray(r_grid, float)
    r, val = _scan_max(lambda x: spd_profile(x, pp, d, spec), grid, tol=1e-6)
    return val, r


def spd_closed_form_d3(r: float, p) -> float:
    """Three-dimensional profile in closed form."""
    p = _as_p(p).p
    if r == 0:
        return 1.0
    e = 2.0 * (1.0 - 1.5 / p)
    return ((1.0 + r) ** e - abs(1.0 - r) ** e) / (2.0 * r * e)


def d_sharp(p) -> int:
    """Smallest integer d >= 3 with p >= d/(d-2)."""
    p = _as_p(p).p
    d = max(3, math.ceil(2.0 * p / (p - 1.0)))
    while d > 3 and p >= (d - 1) / (d - 3.0):
        d -= 1
    while p < d / (d - 2.0):
        d += 1
    return d


# ---------------------------------------------------------------------------
# constants of the one-dimensional lower bound
# ---------------------------------------------------------------------------

def c_sharp(p) -> float:
    p = _as_p(p).p
    return gaussian_1d_lower_bound(p) * (p - 1.0) / p


def h_function(x: float) -> float:
    """``((1-x)/2)(ln(2/pi) - ln(1-x)) + x ln x`` on (0, 1); ``ln c_sharp = h - 1/2``."""
    if not 0.0 < x < 1.0:
        raise DomainError(f"x must lie in (0, 1), got {x}")
    return 0.5 * (1.0 - x) * (math.log(2.0 / math.pi) - math.log1p(-x)) + x * math.log(x)


def x1_root() -> float:
    """Root in (0, 2/3) of ``x sqrt(1-x) = e^(-3/2) sqrt(2/pi)``."""
    target = math.exp(-1.5) * math.sqrt(2.0 / math.pi)
    return bisect_root(lambda x: x * math.sqrt(1.0 - x) - target, 0.0, 2.0 / 3.0)


def compute_constants(p_grid=None) -> ConstantsReport:
    if p_grid is None:
        p_grid = 1.0 + np.logspace(-6, 4, 201)
    p_grid = np.asarray(p_grid, dtype=float)
    log_grid = np.log(p_grid - 1.0)
    # c_sharp also has a local maximum near p = 29 (above its p -> inf limit),
    # so only the bracket around the grid minimum is assumed unimodal
    s_star, neg_c = _scan_max(lambda s: -c_sharp(1.0 + math.exp(s)), log_grid, tol=1e-10, check_unimodal=False)
    x_grid = np.linspace(1e-6, 1.0 - 1e-6, 2001)
    x_min, neg_h = _scan_max(lambda x: -h_function(x), x_grid, tol=1e-12, check_unimodal=False)
    values = {float(p): c_sharp(p) for p in (1.1, 1.25, 1.5, 2.0, 4.0, 10.0, 100.0)}
    return ConstantsReport(values, float(-neg_c), 1.0 + math.exp(s_star), x1_root(), float(-neg_h), float(x_min))
