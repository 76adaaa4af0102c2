"""Divergence between epsilon-corrupted unit-variance Gaussians.

``kl_eps_gauss(x, y, eps)`` is the smallest KL divergence between
``N(x, 1)`` and ``N(y, 1)`` once each may be mixed, with weight ``eps``, with
an arbitrary corruption law.  The minimising pair of corruption laws
(the "Huber pair") tilts the right tail of the left Gaussian toward the
right Gaussian and vice versa; the pair is pinned down by a single
normalisation constant ``c`` solved here by a safeguarded Newton iteration.

Everything in this module is expressed for unit variance.  Arms with a
known standard deviation ``sigma`` are handled by dividing gaps by ``sigma``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import normal
from .errors import DomainError, NumericalError

C_TOL = 1e-12
# Gaps within this distance of delta_min are treated as sitting on the threshold.
THRESHOLD_BAND = 1e-9
MAX_NEWTON_ITER = 200


def check_eps(eps: float) -> float:
    eps = float(eps)
    if not 0.0 <= eps < 0.5:
        raise DomainError(f"corruption level eps must lie in [0, 0.5), got {eps!r}")
    return eps


@lru_cache(maxsize=1024)
def delta_min(eps: float) -> float:
    """Smallest mean gap at which eps-corruption neighbourhoods stop overlapping."""
    eps = check_eps(eps)
    if eps == 0.0:
        return 0.0
    return 2.0 * normal.ppf(0.5 / (1.0 - eps))


@dataclass(frozen=True)
class HuberPairSolution:
    delta: float
    eps: float
    c: float
    delta_plus: float
    delta_minus: float
    residual: float = 0.0
    iterations: int = 0

    @property
    def log_inv_c(self) -> float:
        return -math.log(self.c)


def _c_residual(c: float, delta: float, eps: float) -> tuple[float, float, float, float]:
    """Residual of the normalisation equation and its c-derivative.

    Returns ``(g, g', delta_plus, delta_minus)`` where
    ``g(c) = c Phi(d-/2) + Phi(d+/2) - 1/(1-eps)`` rewritten through the upper
    tail so that it stays accurate when both CDF terms approach one.
    """
    shift = 2.0 * (-math.log(c)) / delta
    d_plus = delta + shift
    d_minus = delta - shift
    phi_minus = normal.cdf(0.5 * d_minus)
    g = c * phi_minus - normal.sf(0.5 * d_plus) - eps / (1.0 - eps)
    return g, phi_minus, d_plus, d_minus


def _solve_c(delta: float, eps: float, tol: float) -> HuberPairSolution:
    if delta - delta_min(eps) <= THRESHOLD_BAND:
        return HuberPairSolution(delta, eps, 1.0, delta, delta, 0.0, 0)
    lo = eps / (1.0 - eps)
    hi = 1.0
    c = 1.0
    # g is increasing and convex in c, so Newton started at c = 1 (where g >= 0)
    # descends monotonically onto the root; the bracket only guards rounding.
    for it in range(1, MAX_NEWTON_ITER + 1):
        g, slope, d_plus, d_minus = _c_residual(c, delta, eps)
        if g > 0.0:
            hi = c
        else:
            lo = c
        if abs(g) <= 0.01 * tol:
            return HuberPairSolution(delta, eps, c, d_plus, d_minus, g, it)
        step = g / slope if slope > 0.0 else math.inf
        c_next = c - step
        if not lo < c_next < hi:
            c_next = 0.5 * (lo + hi)
        if abs(c_next - c) <= 1e-16 * c:
            g, _, d_plus, d_minus = _c_residual(c_next, delta, eps)
            if abs(g) <= tol:
                return HuberPairSolution(delta, eps, c_next, d_plus, d_minus, g, it)
            break
        c = c_next
    raise NumericalError(
        f"normalisation constant did not converge for delta={delta!r}, eps={eps!r}"
    )


@lru_cache(maxsize=1 << 16)
def _solve_c_cached(delta: float, eps: float) -> HuberPairSolution:
    return _solve_c(delta, eps, C_TOL)


def solve_c(delta: float, eps: float, tol: float = C_TOL) -> HuberPairSolution:
    """Solve ``1/(1-eps) = c Phi(delta_minus/2) + Phi(delta_plus/2)`` for c.

    ``delta_plus/minus = delta +/- (2/delta) log(1/c)``.  The root is unique
    in ``(eps/(1-eps), 1]`` and equals 1 exactly at ``delta = delta_min(eps)``.

    Raises:
        DomainError: if ``delta < delta_min(eps)`` or eps is zero (no pair exists).
        NumericalError: if the iteration does not converge.
    """
    eps = check_eps(eps)
    delta = float(delta)
    if eps == 0.0:
        raise DomainError("the normalisation constant is undefined for eps = 0")
    if delta <= 0.0 or delta < delta_min(eps) - THRESHOLD_BAND:
        raise DomainError(
            f"gap below minimum distinction gap: delta={delta!r} < delta_min={delta_min(eps)!r}"
        )
    if tol == C_TOL:
        return _solve_c_cached(delta, eps)
    return _solve_c(delta, eps, tol)


def _kl_from_solution(sol: HuberPairSolution) -> float:
    delta = sol.delta
    half_minus = 0.5 * sol.delta_minus
    half_plus = 0.5 * sol.delta_plus
    value = (
        (1.0 - sol.c) * normal.cdf(half_minus) * sol.log_inv_c
        + 0.5 * delta * delta * normal.mass_between(half_minus, half_plus)
        - delta * (normal.pdf(half_minus) - normal.pdf(half_plus))
    )
    return max((1.0 - sol.eps) * value, 0.0)


def kl_eps_gauss(x: float, y: float, eps: float) -> float:
    """Corrupted Gaussian divergence between means ``x`` and ``y``.

    Zero whenever ``y - x <= delta_min(eps)``, which also covers ``y < x``.
    With ``eps = 0`` this is the plain Gaussian KL ``(y - x)^2 / 2``.
    """
    eps = check_eps(eps)
    delta = y - x
    if eps == 0.0:
        return 0.5 * delta * delta if delta > 0.0 else 0.0
    if delta - delta_min(eps) <= THRESHOLD_BAND:
        return 0.0
    return _kl_from_solution(solve_c(delta, eps))


def kl_eps_gauss_derivative(x: float, delta: float, eps: float) -> float:
    """d/d(delta) of ``kl_eps_gauss(x, x + delta, eps)``; independent of ``x``."""
    eps = check_eps(eps)
    if delta < 0.0:
        raise DomainError(f"delta must be non-negative, got {delta!r}")
    if eps == 0.0:
        return float(delta)
    if delta - delta_min(eps) <= THRESHOLD_BAND:
        return 0.0
    sol = solve_c(delta, eps)
    return (1.0 - eps) * delta * normal.mass_between(0.5 * sol.delta_minus, 0.5 * sol.delta_plus)


def kl_mean_value_gap_bound(m_a: float, m_b: float, m_star: float, eps: float) -> float:
    """Upper bound on ``kl(m_a, m_star) - kl(m_b, m_star)``.

    Valid when both ``m_star - m_a`` and ``m_star - m_b`` exceed delta_min.
    """
    eps = check_eps(eps)
    dmin = delta_min(eps)
    gap_a = m_star - m_a
    gap_b = m_star - m_b
    if not (gap_a > dmin and gap_b > dmin):
        raise DomainError("both gaps to m_star must exceed delta_min")
    return (1.0 - eps) * max(m_b - m_a, 0.0) * max(gap_a, gap_b)


@dataclass(frozen=True)
class KlGeometry:
    """The divergence at a fixed corruption level, as used inside index policies."""

    eps: float
    delta_min: float = field(init=False)
    tolerance: float = C_TOL

    def __post_init__(self):
        object.__setattr__(self, "eps", check_eps(self.eps))
        object.__setattr__(self, "delta_min", delta_min(self.eps))

    def kl(self, x: float, y: float) -> float:
        return kl_eps_gauss(x, y, self.eps)

    def derivative(self, delta: float) -> float:
        return kl_eps_gauss_derivative(0.0, delta, self.eps)

    def solve_c(self, delta: float) -> HuberPairSolution:
        return solve_c(delta, self.eps, self.tolerance)


@dataclass(frozen=True)
class CorruptedDensityPair:
    """Worst-case corrupted densities around ``N(x, 1)`` (left) and ``N(y, 1)`` (right).

    ``left`` equals ``(1-eps) phi(t-x)`` below ``h1_start`` and
    ``c (1-eps) phi(t-y)`` above it; ``right`` mirrors this around the
    midpoint with the corruption living below ``h2_end``.
    """

    x: float
    y: float
    eps: float
    solution: HuberPairSolution

    @property
    def h1_start(self) -> float:
        """Left end of the support of the left arm's corruption law H1."""
        return 0.5 * (self.x + self.y) + self.solution.log_inv_c / (self.y - self.x)

    @property
    def h2_end(self) -> float:
        """Right end of the support of the right arm's corruption law H2."""
        return 0.5 * (self.x + self.y) - self.solution.log_inv_c / (self.y - self.x)

    def left_density(self, t: float) -> float:
        keep = 1.0 - self.eps
        if t < self.h1_start:
            return keep * normal.pdf(t - self.x)
        return self.solution.c * keep * normal.pdf(t - self.y)

    def right_density(self, t: float) -> float:
        keep = 1.0 - self.eps
        if t > self.h2_end:
            return keep * normal.pdf(t - self.y)
        return self.solution.c * keep * normal.pdf(t - self.x)

    def h1_density(self, t: float) -> float:
        if t < self.h1_start:
            return 0.0
        scale = (1.0 - self.eps) / self.eps
        return max(scale * (self.solution.c * normal.pdf(t - self.y) - normal.pdf(t - self.x)), 0.0)

    def h2_density(self, t: float) -> float:
        if t > self.h2_end:
            return 0.0
        scale = (1.0 - self.eps) / self.eps
        return max(scale * (self.solution.c * normal.pdf(t - self.x) - normal.pdf(t - self.y)), 0.0)

    def sample(self, side: str, rng: np.random.Generator, size: int | None = None):
        return sample_huber_corruption(self, side, rng, size)


def huber_pair_densities(x: float, y: float, eps: float) -> CorruptedDensityPair:
    eps = check_eps(eps)
    if eps == 0.0:
        raise DomainError("the Huber pair needs eps > 0")
    if not y - x > delta_min(eps):
        raise DomainError(
            f"gap below minimum distinction gap: {y - x!r} <= delta_min={delta_min(eps)!r}"
        )
    return CorruptedDensityPair(float(x), float(y), eps, solve_c(y - x, eps))


MAX_REJECTIONS = 100_000


def _sample_h1(pair: CorruptedDensityPair, rng: np.random.Generator) -> float:
    # Propose from N(y, 1) truncated to [h1_start, inf) by inverse CDF, then thin
    # by the ratio of H1's density to c * phi(t - y).
    x, y = pair.x, pair.y
    gap = y - x
    start = pair.h1_start
    tail = normal.sf(start - y)
    c = pair.solution.c
    for _ in range(MAX_REJECTIONS):
        u = rng.random()
        z = -normal.ppf(max(u, 1e-300) * tail)
        t = y + z
        if rng.random() * c < c - math.exp(-gap * (t - 0.5 * (x + y))):
            return t
    raise NumericalError("rejection sampler exceeded its iteration cap")


def sample_huber_corruption(pair: CorruptedDensityPair, side: str, rng: np.random.Generator,
                            size: int | None = None):
    """Draw from H1 (``side='left'``) or H2 (``side='right'``) of a Huber pair.

    H2 is the reflection of H1 about ``(x + y) / 2``.
    """
    if side not in ("left", "right"):
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    if size is None:
        t = _sample_h1(pair, rng)
        return t if side == "left" else pair.x + pair.y - t
    draws = np.fromiter((_sample_h1(pair, rng) for _ in range(size)), dtype=float, count=size)
    return draws if side == "left" else pair.x + pair.y - draws
