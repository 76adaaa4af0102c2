"""Streaming medians and the constants governing their concentration under corruption."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass

from . import normal
from .corrupted_kl import check_eps, delta_min
from .errors import DomainError


class MedianAccumulator:
    """Sorted buffer of observations with O(1) median queries.

    For an even count the median is the midpoint of the two central order
    statistics.
    """

    __slots__ = ("_values",)

    def __init__(self, values=()):
        self._values = sorted(float(v) for v in values)

    def insert(self, value: float) -> None:
        bisect.insort(self._values, float(value))

    def __len__(self) -> int:
        return len(self._values)

    @property
    def count(self) -> int:
        return len(self._values)

    @property
    def values(self) -> list[float]:
        return list(self._values)

    def median(self) -> float:
        vals = self._values
        n = len(vals)
        if n == 0:
            raise ValueError("median of an empty accumulator is undefined")
        mid = n // 2
        if n % 2:
            return vals[mid]
        return 0.5 * (vals[mid - 1] + vals[mid])


def s_eps(eps: float) -> float:
    """Scale of the median's deviations beyond its unavoidable bias.

    Tends to ``1 / (2 phi(1))`` as eps -> 0 (slowly, through a
    ``1/sqrt(log(1/eps))`` term) and diverges as eps -> 1/2.
    """
    eps = check_eps(eps)
    if eps == 0.0:
        raise DomainError("s_eps is defined for 0 < eps < 1/2 only")
    first = math.sqrt((eps / 2.0) / -math.log1p(-2.0 * eps))
    second = math.sqrt((1.0 - 2.0 * eps) / (4.0 * math.log((1.0 - eps) / eps)))
    return (first + second) / ((1.0 - eps) * normal.pdf(delta_min(eps) / 2.0 + 1.0))


def n_min(horizon: int, eps: float, variant: str = "squared") -> int:
    """Forced-exploration pulls per arm.

    ``variant="squared"`` squares the iterated logarithm
    ``log(1+log(1+log T))``; ``variant="single"`` uses it to the first power.
    """
    if horizon < 3:
        raise DomainError(f"horizon must be at least 3, got {horizon!r}")
    log_t = math.log(horizon)
    iterated = math.log(1.0 + math.log(1.0 + log_t))
    if variant == "squared":
        inflation = iterated ** 2
    elif variant == "single":
        inflation = iterated
    else:
        raise ValueError(f"unknown n_min variant {variant!r}")
    s = s_eps(eps)
    value = 2.0 * log_t * inflation * s * s / math.log(1.0 + log_t ** 0.99)
    return max(1, math.ceil(value))


def median_concentration_bound(n: int, y: float, eps: float) -> float:
    """Bound on ``P(Med - m >= delta_min/2 + y)`` (and the mirrored lower tail).

    ``min(1, 2 exp(-n y^2 / s_eps^2))``; holds for any, possibly time-varying,
    corruption laws.
    """
    if not 0.0 <= y <= 1.0:
        raise DomainError(f"deviation y must lie in [0, 1], got {y!r}")
    if n < 1:
        raise DomainError(f"sample size must be positive, got {n!r}")
    s = s_eps(eps)
    return min(1.0, 2.0 * math.exp(-n * y * y / (s * s)))


def median_bias(eps: float) -> float:
    """Worst-case shift of the population median of an eps-corrupted standard Gaussian."""
    return delta_min(eps) / 2.0


@dataclass(frozen=True)
class ConcentrationParams:
    eps: float
    horizon: int
    s_eps: float
    n_min: int

    @classmethod
    def build(cls, horizon: int, eps: float, variant: str = "squared") -> ConcentrationParams:
        return cls(check_eps(eps), horizon, s_eps(eps), n_min(horizon, eps, variant))
