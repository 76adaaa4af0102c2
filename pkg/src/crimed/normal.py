"""Standard normal density, CDF, tail and quantile in double precision."""

import math

SQRT2 = math.sqrt(2.0)
INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)

# Acklam's rational approximation coefficients (relative error < 1.15e-9).
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def pdf(x: float) -> float:
    return INV_SQRT_2PI * math.exp(-0.5 * x * x)


def cdf(x: float) -> float:
    """Phi(x), computed through erfc so both tails keep full relative precision."""
    return 0.5 * math.erfc(-x / SQRT2)


def sf(x: float) -> float:
    """Upper tail 1 - Phi(x)."""
    return 0.5 * math.erfc(x / SQRT2)


def mass_between(a: float, b: float) -> float:
    """Phi(b) - Phi(a) without cancellation when both points sit in the same tail."""
    if a >= 0.0:
        return sf(a) - sf(b)
    if b <= 0.0:
        return cdf(b) - cdf(a)
    return 1.0 - cdf(a) - sf(b)


def _acklam(p: float) -> float:
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        return ((((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5])
                / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0))
    if p > 1.0 - _P_LOW:
        q = math.sqrt(-2.0 * math.log1p(-p))
        return -((((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5])
                 / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0))
    q = p - 0.5
    r = q * q
    return ((((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q
            / (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0))


def ppf(p: float) -> float:
    """Quantile function Phi^{-1}(p).

    Acklam's rational approximation followed by one Halley step against
    :func:`cdf`, which brings the result to roughly machine precision.
    """
    if not 0.0 <= p <= 1.0 or math.isnan(p):
        raise ValueError(f"probability must lie in [0, 1], got {p!r}")
    if p == 0.0:
        return -math.inf
    if p == 1.0:
        return math.inf
    if p == 0.5:
        return 0.0
    x = _acklam(p)
    # Work on the smaller tail to keep the residual accurate.
    if p < 0.5:
        err = cdf(x) - p
    else:
        err = (1.0 - p) - sf(x)
    u = err / pdf(x)
    return x - u / (1.0 + 0.5 * x * u)
