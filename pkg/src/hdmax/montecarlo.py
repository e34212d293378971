"""Monte Carlo checks of the Gaussian representations of the symbols.

Samples come from a counter-based generator: block ``b`` of stream ``s`` under
seed ``k`` is a pure function of ``(k, s, b)``, so any partition of the block
range over workers reproduces the same numbers. Normals are obtained by the
inverse normal CDF applied to 53-bit midpoint uniforms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np
from scipy.special import ndtri

from .numerics import DomainError, reg_lower_inc_gamma

BLOCK_SAMPLES = 4096
SEED_MASK = (1 << 64) - 1
MIN_SAMPLES = 100
MIN_CHISQ_SAMPLES = 10_000

STREAM_SPHERE = 0
STREAM_GAUSS = 1
STREAM_CHISQ = 2


@dataclass(frozen=True)
class MCEstimate:
    mean: float
    stderr: float
    n_samples: int
    seed: int

    def agrees_with(self, target: float, k: float = 3.0) -> bool:
        return abs(self.mean - target) <= k * self.stderr

    def at_least(self, target: float, k: float = 3.0) -> bool:
        return self.mean >= target - k * self.stderr


def _check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed <= SEED_MASK:
        raise DomainError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def reseed(seed: int) -> int:
    """Deterministic fresh seed used by the one-retry contract."""
    return int(np.random.SeedSequence(_check_seed(seed)).generate_state(1, np.uint64)[0])


def _block_normals(seed: int, stream: int, block: int, rows: int, d: int) -> np.ndarray:
    bitgen = np.random.Philox(key=np.array([seed, stream], dtype=np.uint64),
                              counter=np.array([0, 0, block, 0], dtype=np.uint64))
    raw = bitgen.random_raw(rows * d)
    u = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0 ** -53
    return ndtri(u).reshape(rows, d)


def gaussian_sampler(d: int, n: int, seed: int, stream: int = 0) -> Iterator[np.ndarray]:
    """Yield ``(rows, d)`` blocks of i.i.d. standard normals, ``n`` rows in total."""
    if d < 1 or n < 0:
        raise DomainError("need d >= 1 and n >= 0")
    seed = _check_seed(seed)
    n_blocks = -(-n // BLOCK_SAMPLES)
    for b in range(n_blocks):
        rows = min(BLOCK_SAMPLES, n - b * BLOCK_SAMPLES)
        yield _block_normals(seed, stream, b, rows, d)


# pairwise (Chan et al.) combination of (count, mean, M2) triples
def _combine(a, b):
    na, ma, sa = a
    nb, mb, sb = b
    n = na + nb
    delta = mb - ma
    return n, ma + delta * nb / n, sa + sb + delta * delta * na * nb / n


def _pairwise(parts):
    while len(parts) > 1:
        nxt = [_combine(parts[i], parts[i + 1]) for i in range(0, len(parts) - 1, 2)]
        if len(parts) % 2:
            nxt.append(parts[-1])
        parts = nxt
    return parts[0]


def _estimate(stat: Callable[[np.ndarray], np.ndarray], d: int, n: int, seed: int, stream: int) -> MCEstimate:
    parts = []
    for block in gaussian_sampler(d, n, seed, stream):
        y = stat(block)
        m = float(np.mean(y))
        parts.append((y.size, m, float(np.sum((y - m) ** 2))))
    count, mean, m2 = _pairwise(parts)
    var = m2 / (count - 1) if count > 1 else 0.0
    return MCEstimate(mean, math.sqrt(var / count), count, seed)


def _check_args(r: float, d: int, n: int, n_min: int = MIN_SAMPLES, d_min: int = 1):
    if n < n_min:
        raise DomainError(f"n must be at least {n_min}, got {n}")
    if int(d) != d or d < d_min:
        raise DomainError(f"d must be an integer >= {d_min}, got {d}")
    if not (math.isfinite(r) and r >= 0):
        raise DomainError(f"r must be finite and >= 0, got {r}")


def mc_sphere_symbol(r: float, d: int, n: int, seed: int, part: str = "real") -> MCEstimate:
    """Mean of ``cos(2 pi r X_1/|X|)`` (or ``sin`` for ``part="imag"``) with X ~ N(0, I_d)."""
    _check_args(r, d, n, d_min=3)
    trig = {"real": np.cos, "imag": np.sin}[part]
    w = 2.0 * math.pi * r
    return _estimate(lambda x: trig(w * x[:, 0] / np.sqrt(np.einsum("ij,ij->i", x, x))),
                     d, n, _check_seed(seed), STREAM_SPHERE)


def mc_gaussian_symbol(r: float, d: int, n: int, seed: int, part: str = "real") -> MCEstimate:
    """Mean of ``cos(2 pi r X_1/sqrt(d))`` with X ~ N(0, I_d).

    Only the first coordinate enters, so only that column is drawn; the
    generator layout still matches :func:`gaussian_sampler` with d = 1.
    """
    _check_args(r, d, n)
    trig = {"real": np.cos, "imag": np.sin}[part]
    w = 2.0 * math.pi * r / math.sqrt(d)
    return _estimate(lambda x: trig(w * x[:, 0]), 1, n, _check_seed(seed), STREAM_GAUSS)


# ---------------------------------------------------------------------------
# chi-square concentration
# ---------------------------------------------------------------------------

def concentration_window(d: int, alpha: float, kind: str = "paper") -> tuple[float, float]:
    """Window for ``|X|^2``.

    ``paper``: [d - 2 d^(1/2+a), d + 2 d^(1/2+a) + 2 d^a];
    ``symmetric``: [d - 2 d^(1/2+a), d + 2 d^(1/2+a)]; ``full``: [0, inf).
    """
    if kind == "full":
        return 0.0, math.inf
    half = 2.0 * d ** (0.5 + alpha)
    if kind == "paper":
        return d - half, d + half + 2.0 * d ** alpha
    if kind == "symmetric":
        return d - half, d + half
    raise DomainError(f"unknown window kind {kind!r}")


def concentration_threshold(d: int, alpha: float) -> float:
    return 1.0 - math.exp(-(d ** alpha))


def chi_square_cdf(x: float, d: int) -> float:
    if x <= 0:
        return 0.0
    if math.isinf(x):
        return 1.0
    return reg_lower_inc_gamma(0.5 * d, 0.5 * x)


def exact_window_probability(d: int, alpha: float, kind: str = "paper") -> float:
    lo, hi = concentration_window(d, alpha, kind)
    return chi_square_cdf(hi, d) - chi_square_cdf(lo, d)


def chi_square_concentration(d: int, alpha: float, n: int, seed: int, kind: str = "paper") -> MCEstimate:
    """Empirical probability that ``|X|^2`` lands in the concentration window."""
    if not 0.0 < alpha < 0.5:
        raise DomainError(f"alpha must lie in (0, 1/2), got {alpha}")
    _check_args(0.0, d, n, n_min=MIN_CHISQ_SAMPLES, d_min=3)
    lo, hi = concentration_window(d, alpha, kind)

    def hit(x):
        s = np.einsum("ij,ij->i", x, x)
        return ((s >= lo) & (s <= hi)).astype(np.float64)

    return _estimate(hit, d, n, _check_seed(seed), STREAM_CHISQ)


def with_one_reseed(run: Callable[[int], MCEstimate], accept: Callable[[MCEstimate], bool],
                    seed: int) -> tuple[MCEstimate, bool, int]:
    """Run once; on a miss, rerun once with :func:`reseed`. Returns (estimate, accepted, attempts)."""
    est = run(seed)
    if accept(est):
        return est, True, 1
    est = run(reseed(seed))
    return est, accept(est), 2
