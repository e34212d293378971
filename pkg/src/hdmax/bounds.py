"""Grid sweeps of the pointwise multiplier estimates, sup-norms and decay fits.

Every implicit constant is reported as the grid maximum of ``|LHS| / RHS``,
which under-estimates the true supremum. Only the near-origin estimate for
the sphere symbol has an explicit constant (``2 pi^2``); exceeding it is
flagged as a violation.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import special

from . import multipliers as mp_
from .multipliers import SymbolPair
from .numerics import (
    DEFAULT_SPEC,
    DomainError,
    QuadratureSpec,
    golden_section_max,
    log_gamma,
    log_sphere_normalizer,
    oscillatory_moment,
)

EXPLICIT_NEAR_CONSTANT = 2.0 * math.pi ** 2
VIOLATION_TOL = 1e-9
R_MIN = 1e-3
POINTS_PER_DECADE = 40
LINEAR_POINTS = 200


class InequalityId(str, enum.Enum):
    MU_NEAR_ONE = "mu_near_one"
    MU_FAR_DECAY = "mu_far_decay"
    MU_DERIVATIVE = "mu_derivative"
    DIFF_NEAR = "diff_near"
    DIFF_FAR = "diff_far"
    DIFF_DERIVATIVE = "diff_derivative"
    OSC_CORE = "osc_core"
    BESSEL_DECAY = "bessel_decay"


@dataclass(frozen=True)
class GridSpec:
    r_min: float
    r_max: float
    count: int
    spacing: str


@dataclass(frozen=True)
class BoundReport:
    inequality_id: InequalityId
    d: int
    r_grid: GridSpec
    worst_ratio: float
    argmax_r: float
    fitted_constant: float
    violated_at_threshold: bool
    pair: SymbolPair | None = None
    declared_constant: float | None = None
    skipped: int = 0


@dataclass(frozen=True)
class DecayFit:
    dims: list
    sup_norms: list
    slope: float
    intercept: float
    residual: float

    def __post_init__(self):
        if len(self.dims) != len(self.sup_norms) or len(self.dims) < 4:
            raise DomainError("a decay fit needs at least four (d, sup) pairs")
        if not math.isfinite(self.slope):
            raise DomainError("decay slope is not finite")

    @property
    def power_law_constant(self) -> float:
        """Smallest C with sup_norm(d) <= C / d on the fitted dimensions."""
        return max(s * d for d, s in zip(self.dims, self.sup_norms))


@dataclass(frozen=True)
class SupNorm:
    value: float
    argmax_r: float
    tail_bound: float


@dataclass(frozen=True)
class DyadicCertificate:
    value: float
    K: float
    sup_norm: float


# ---------------------------------------------------------------------------
# grids and tabulation
# ---------------------------------------------------------------------------

def r_max(d: int) -> float:
    return 8.0 * d


def default_grid(d: int) -> np.ndarray:
    """Log grid on [R_MIN, 8d] plus a linear refinement on (0, 4 sqrt(d)]."""
    top = r_max(d)
    n_log = int(round(POINTS_PER_DECADE * math.log10(top / R_MIN))) + 1
    log_part = np.logspace(math.log10(R_MIN), math.log10(top), n_log)
    log_part[0], log_part[-1] = R_MIN, top
    lin_part = np.linspace(0.0, 4.0 * math.sqrt(d), LINEAR_POINTS + 1)[1:]
    return np.unique(np.concatenate([log_part, lin_part]))


def _grid_spec(r: np.ndarray, spacing: str = "log40+linear200") -> GridSpec:
    return GridSpec(float(r[0]), float(r[-1]), int(r.size), spacing)


@dataclass
class SymbolTable:
    """All three symbols and their radial derivatives on one r-grid."""

    d: int
    r: np.ndarray
    mu: np.ndarray
    mu_err: np.ndarray
    dmu: np.ndarray
    m: np.ndarray
    dm: np.ndarray
    g: np.ndarray = field(init=False)
    dg: np.ndarray = field(init=False)

    def __post_init__(self):
        x = 2.0 * math.pi ** 2 * self.r ** 2 / self.d
        self.g = np.exp(-x)
        self.dg = -2.0 * x * self.g

    def symbol(self, name: str) -> np.ndarray:
        return {"mu": self.mu, "m": self.m, "g": self.g}[name]

    def derivative(self, name: str) -> np.ndarray:
        return {"mu": self.dmu, "m": self.dm, "g": self.dg}[name]

    def pair(self, pair: SymbolPair) -> tuple[np.ndarray, np.ndarray]:
        left, right = SymbolPair(pair).value.split("_minus_")
        return (self.symbol(left) - self.symbol(right),
                self.derivative(left) - self.derivative(right))


def tabulate(d: int, r=None, spec: QuadratureSpec = DEFAULT_SPEC) -> SymbolTable:
    if int(d) != d or d < 3:
        raise DomainError(f"d must be an integer >= 3, got {d}")
    if r is None:
        return _default_table(int(d), spec)
    return _tabulate(int(d), np.asarray(r, dtype=float), spec)


@lru_cache(maxsize=32)
def _default_table(d: int, spec: QuadratureSpec) -> SymbolTable:
    return _tabulate(d, default_grid(d), spec)


def _tabulate(d: int, r: np.ndarray, spec: QuadratureSpec) -> SymbolTable:
    mu, mu_err, dmu, m, dm = (np.empty_like(r) for _ in range(5))
    for i, ri in enumerate(r):
        p = mp_.mu(ri, d, spec)
        mu[i], mu_err[i] = p.value, p.error_estimate
        dmu[i] = mp_.mu_radial_derivative(ri, d, spec)
        m[i] = mp_.ball_multiplier(ri, d, spec).value
        dm[i] = mp_.ball_radial_derivative(ri, d, spec)
    return SymbolTable(d, r, mu, mu_err, dmu, m, dm)


def _argmax_report(ident, d, r, ratio, pair=None, declared=None, spacing="log40+linear200", skipped=0) -> BoundReport:
    ratio = np.where(np.isfinite(ratio), ratio, -np.inf)
    i = int(np.argmax(ratio))  # first index wins ties, i.e. smallest r
    worst = float(ratio[i])
    violated = declared is not None and worst > declared + VIOLATION_TOL
    return BoundReport(InequalityId(ident), int(d), _grid_spec(r, spacing), worst, float(r[i]), worst,
                       bool(violated), None if pair is None else SymbolPair(pair), declared, skipped)


# ---------------------------------------------------------------------------
# pointwise estimates
# ---------------------------------------------------------------------------

def check_mu_estimates(d: int, grid=None, spec: QuadratureSpec = DEFAULT_SPEC) -> list[BoundReport]:
    """Near-origin (explicit 2 pi^2), far-field and derivative estimates for mu."""
    t = tabulate(d, grid, spec)
    sd = math.sqrt(d)
    pos = t.r > 0
    r = t.r[pos]
    near = np.abs(t.mu[pos] - 1.0) / (r / sd)
    far = np.abs(t.mu) * t.r / sd
    der = np.abs(t.dmu)
    return [
        _argmax_report(InequalityId.MU_NEAR_ONE, d, r, near, declared=EXPLICIT_NEAR_CONSTANT,
                       skipped=int((~pos).sum())),
        _argmax_report(InequalityId.MU_FAR_DECAY, d, t.r, far),
        _argmax_report(InequalityId.MU_DERIVATIVE, d, t.r, der),
    ]


def check_difference_estimates(pair: SymbolPair | str, d: int, grid=None,
                               spec: QuadratureSpec = DEFAULT_SPEC) -> list[BoundReport]:
    """``|a| <= C r/sqrt(d)``, ``|a| <= C sqrt(d)/r`` and ``|r a'| <= C`` for a difference symbol."""
    pair = SymbolPair(pair)
    t = tabulate(d, grid, spec)
    a, da = t.pair(pair)
    sd = math.sqrt(d)
    pos = t.r > 0
    return [
        _argmax_report(InequalityId.DIFF_NEAR, d, t.r[pos], np.abs(a[pos]) / (t.r[pos] / sd), pair,
                       skipped=int((~pos).sum())),
        _argmax_report(InequalityId.DIFF_FAR, d, t.r, np.abs(a) * t.r / sd, pair),
        _argmax_report(InequalityId.DIFF_DERIVATIVE, d, t.r, np.abs(da), pair),
    ]


def far_field_constant(symbol: str, d: int, grid=None, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Grid max of ``|symbol(r)| r / sqrt(d)``."""
    t = tabulate(d, grid, spec)
    return float(np.max(np.abs(t.symbol(symbol)) * t.r / math.sqrt(d)))


# ---------------------------------------------------------------------------
# the oscillatory core integral
# ---------------------------------------------------------------------------

def log_abs_oscillatory_core(r: float, d: int, spec: QuadratureSpec = DEFAULT_SPEC) -> tuple[float, str]:
    """ln |int_{-1}^{1} e^{2 pi i r s} s (1 - s^2)^((d-3)/2) ds| and the route used.

    The quadrature is used wherever its value clears its own error estimate by
    a wide margin. Past that point the integral is smaller than the
    cancellation floor of any real-line quadrature, and it is evaluated from
    ``Gamma(nu+1) (x/2)^(-nu) J_{nu+1}(x) / N_d`` (x = 2 pi r, nu = d/2 - 1)
    in log form.
    """
    if r == 0:
        return -math.inf, "closed_form"
    val, err = oscillatory_moment(r, float(d), 1, spec, normalized=False)
    if abs(val) > 1e3 * max(err, 1e-300) and abs(val) > 1e-13:
        return math.log(abs(val)), "quadrature"
    nu = 0.5 * d - 1.0
    x = 2.0 * math.pi * r
    j = float(special.jv(nu + 1.0, x))
    if j == 0.0 or not math.isfinite(j):
        return math.nan, "unverifiable"
    return (log_gamma(nu + 1.0) - nu * math.log(0.5 * x) + math.log(abs(j))
            - log_sphere_normalizer(d)), "bessel"


def oscillatory_core_rhs(r: float, d: int) -> float:
    return math.exp(-2.0 * math.pi * r / math.sqrt(d)) / d + math.exp(-d / 10.0) / math.sqrt(d)


def oscillatory_core_grid(d: int) -> np.ndarray:
    return np.unique(np.concatenate([np.linspace(0.0, float(d), 401),
                                     np.logspace(-3, math.log10(d), 200)]))


def check_oscillatory_core(d: int, grid=None, spec: QuadratureSpec = DEFAULT_SPEC) -> BoundReport:
    """Fitted constant of the sine-moment estimate on r in [0, d]."""
    if int(d) != d or d < 3:
        raise DomainError(f"d must be an integer >= 3, got {d}")
    r = oscillatory_core_grid(d) if grid is None else np.asarray(grid, dtype=float)
    log_ratio = np.full(r.size, -np.inf)
    skipped = 0
    for i, ri in enumerate(r):
        lv, route = log_abs_oscillatory_core(ri, d, spec)
        if route == "unverifiable":
            skipped += 1
            continue
        log_ratio[i] = lv - math.log(oscillatory_core_rhs(ri, d))
    ratio = np.exp(log_ratio)
    return _argmax_report(InequalityId.OSC_CORE, d, r, ratio, spacing="linear401+log200", skipped=skipped)


# ---------------------------------------------------------------------------
# Bessel decay |J_nu(x)| <= x^(-1/2) for x >= 2 nu
# ---------------------------------------------------------------------------

QUADRATURE_FLOOR = 1e-15


def bessel_from_symbol(nu: float, x: float, spec: QuadratureSpec = DEFAULT_SPEC) -> tuple[float, float]:
    """``(J_nu(x), uncertainty)`` back-solved from the sphere symbol in dimension 2 nu + 2.

    ``J_{d/2-1}(2 pi rho) = mu_d(rho) (pi rho)^(d/2-1) / Gamma(d/2)``; the
    prefactor is assembled in log form. The symbol carries an absolute error
    of at least ``QUADRATURE_FLOOR`` (cancellation in the oscillatory sum), so
    the uncertainty is that floor or the quadrature estimate, times the
    prefactor.
    """
    d = 2.0 * nu + 2.0
    rho = x / (2.0 * math.pi)
    val, err = oscillatory_moment(rho, d, 0, spec)
    pref = math.exp(nu * math.log(math.pi * rho) - log_gamma(0.5 * d))
    return val * pref, max(err, QUADRATURE_FLOOR) * pref


def bessel_bound_check(nu: float, r_grid, spec: QuadratureSpec = DEFAULT_SPEC) -> BoundReport:
    """Worst ``|J_nu(r)| sqrt(r)`` over a grid with every r >= 2 nu (declared bound 1).

    Points whose uncertainty, once scaled by the prefactor, is not small
    against the bound are skipped and counted instead of trusted; for large
    orders the prefactor grows like (x/2)^nu / Gamma(nu + 1) and most points
    end up skipped.
    """
    if nu < 0.5:
        raise DomainError(f"the decay bound needs nu >= 1/2, got {nu}")
    r = np.asarray(r_grid, dtype=float)
    if np.any(r < 2.0 * nu):
        raise DomainError("every grid point must satisfy r >= 2 nu")
    ratio = np.full(r.size, -np.inf)
    skipped = 0
    for i, ri in enumerate(r):
        j, err = bessel_from_symbol(nu, ri, spec)
        scale = math.sqrt(ri)
        if not math.isfinite(err * scale) or err * scale > 1e-6:
            skipped += 1
            continue
        ratio[i] = abs(j) * scale
    return _argmax_report(InequalityId.BESSEL_DECAY, int(round(2 * nu + 2)), r, ratio, declared=1.0,
                          spacing="custom", skipped=skipped)


# ---------------------------------------------------------------------------
# sup-norms and decay in d
# ---------------------------------------------------------------------------

def locate_sup(pair: SymbolPair | str, d: int, grid=None, spec: QuadratureSpec = DEFAULT_SPEC,
               bracket_tol: float = 1e-4) -> SupNorm:
    """Grid search for ``max_r |a(r)|`` on [0, 8d] refined by golden-section search.

    ``tail_bound`` bounds ``|a|`` beyond 8d by a far-field constant times
    ``sqrt(d) / (8d)``: the smaller of the difference's own constant and the
    sum of the two symbols' constants.
    """
    pair = SymbolPair(pair)
    t = tabulate(d, grid, spec)
    a, _ = t.pair(pair)
    absa = np.abs(a)
    i = int(np.argmax(absa))
    lo = t.r[max(i - 1, 0)]
    hi = t.r[min(i + 1, t.r.size - 1)]
    x, fx = golden_section_max(lambda r: abs(mp_.difference(pair, r, d, spec)), lo, hi, bracket_tol)
    if absa[i] >= fx:
        x, fx = float(t.r[i]), float(absa[i])
    left, right = pair.value.split("_minus_")
    sd = math.sqrt(d)
    c_sum = sum(float(np.max(np.abs(t.symbol(s)) * t.r / sd)) for s in (left, right))
    c_diff = float(np.max(absa * t.r / sd))
    tail = min(c_sum, c_diff) * sd / r_max(d)
    return SupNorm(float(fx), float(x), tail)


def sup_norm_difference(pair: SymbolPair | str, d: int, grid=None, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    return locate_sup(pair, d, grid, spec).value


def fit_decay(dims, sup_norms) -> DecayFit:
    """Least-squares line through ``(ln d, ln sup)``."""
    dims = [int(d) for d in dims]
    sup_norms = [float(s) for s in sup_norms]
    if any(s <= 0 for s in sup_norms):
        raise DomainError("sup-norms must be positive to fit a power law")
    if len(dims) < 4:
        raise DomainError("a decay fit needs at least four dimensions")
    x = np.log(np.asarray(dims, dtype=float))
    y = np.log(np.asarray(sup_norms))
    (slope, intercept), res, *_ = np.polyfit(x, y, 1, full=True)
    residual = float(math.sqrt(res[0])) if res.size else 0.0
    return DecayFit(dims, sup_norms, float(slope), float(intercept), residual)


def fit_decay_exponent(dims, pair: SymbolPair | str, spec: QuadratureSpec = DEFAULT_SPEC) -> DecayFit:
    dims = list(dims)
    if len(dims) < 4 or min(dims) < 10:
        raise DomainError("decay fits use at least four dimensions, all >= 10")
    return fit_decay(dims, [sup_norm_difference(pair, d, spec=spec) for d in dims])


# ---------------------------------------------------------------------------
# dyadic maximal bound
# ---------------------------------------------------------------------------

def dyadic_min_sum(t: float, n_range: int | None = None) -> float:
    """``sum_{|n| <= n_range} min(2^n t, 1/(2^n t))``.

    The default range puts the truncated tail below 1e-16.
    """
    t = float(t)
    if not (math.isfinite(t) and t > 0):
        raise DomainError(f"t must be finite and positive, got {t}")
    if n_range is None:
        n_range = int(math.ceil(abs(math.log2(t)))) + 60
    n = np.arange(-n_range, n_range + 1, dtype=float)
    x = np.exp2(n) * t
    return float(np.sum(np.minimum(x, 1.0 / x)))


def dyadic_bound(K: float, sup_norm: float) -> float:
    """``2 K^(3/4) ||a||_inf^(1/4)``."""
    if K < 0 or sup_norm < 0:
        raise DomainError("K and the sup-norm must be non-negative")
    return 2.0 * K ** 0.75 * sup_norm ** 0.25


def hypothesis_constant(pair: SymbolPair | str, d: int, grid=None, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Smallest K satisfying all three pointwise hypotheses on the grid."""
    return max(rep.fitted_constant for rep in check_difference_estimates(pair, d, grid, spec))


def dyadic_maximal_certificate(pair: SymbolPair | str, d: int, grid=None,
                               spec: QuadratureSpec = DEFAULT_SPEC) -> DyadicCertificate:
    K = hypothesis_constant(pair, d, grid, spec)
    sup = sup_norm_difference(pair, d, grid, spec)
    return DyadicCertificate(dyadic_bound(K, sup), K, sup)
