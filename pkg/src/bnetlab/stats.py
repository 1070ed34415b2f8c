"""Analytic references and small estimator utilities."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np
from scipy import integrate, special

_SQRT_PI = math.sqrt(math.pi)


@dataclass(frozen=True)
class EstimateReport:
    """Monte Carlo estimate paired with the reference value it targets.

    Attributes
    ----------
    estimate : float
        Point estimate (``nan`` when no samples were available).
    stderr : float
        Standard error, always ``>= 0``.
    n : int
        Number of samples behind the estimate.
    reference : float or None
        Analytic value the estimate should approach.
    ratio : float or None
        ``estimate / reference``, defined only when the reference is non-zero.
    tainted : bool
        True when boundary effects or truncation may bias the estimate.
    error : str or None
        Reason the estimate is unavailable, if any.
    """

    estimate: float
    stderr: float
    n: int
    reference: Optional[float] = None
    ratio: Optional[float] = None
    tainted: bool = False
    error: Optional[str] = None

    def __post_init__(self):
        if not (self.stderr >= 0 or math.isnan(self.stderr)):
            raise ValueError("stderr must be non-negative")

    def with_reference(self, reference: Optional[float]) -> "EstimateReport":
        ratio = None
        if reference is not None and reference != 0 and not math.isnan(self.estimate):
            ratio = self.estimate / reference
        return EstimateReport(self.estimate, self.stderr, self.n, reference, ratio,
                              self.tainted, self.error)

    def to_dict(self) -> dict:
        return asdict(self)


def empty_report(reason: str, reference: Optional[float] = None) -> EstimateReport:
    """Report for an estimator that received no samples."""
    return EstimateReport(math.nan, 0.0, 0, reference, None, False, reason)


def normal_cdf(x: float) -> float:
    """Standard normal distribution function.

    Uses the complementary error function from the C library, which is
    accurate to a few ulp; the complement form avoids cancellation in the
    lower tail.
    """
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def psi(t: float) -> float:
    """Density of the net's point set at elapsed time ``t`` after a full start.

    ``psi(t) = exp(-t)/sqrt(pi t) + 2 Phi(sqrt(2 t))``.  ``t = inf`` returns
    the limit 2.
    """
    if t <= 0:
        raise ValueError("psi is defined for t > 0")
    if math.isinf(t):
        return 2.0
    return math.exp(-t) / (_SQRT_PI * math.sqrt(t)) + 2.0 * normal_cdf(math.sqrt(2.0 * t))


def psi_excess(t: float) -> float:
    """``psi(t) - 2`` without cancellation.

    Uses ``2 Phi(sqrt(2 t)) = 2 - erfc(sqrt(t))`` and the scaled complementary
    error function, so the result stays positive and accurate where ``psi``
    itself has rounded to 2.
    """
    if t <= 0:
        raise ValueError("psi is defined for t > 0")
    if math.isinf(t):
        return 0.0
    r = math.sqrt(t)
    return math.exp(-t) * (1.0 / (_SQRT_PI * r) - float(special.erfcx(r)))


def _psi_times_jacobian(v: float) -> float:
    # 2 v psi(v^2): smooth at v = 0, the form used after substituting t = v^2
    return 2.0 * math.exp(-v * v) / _SQRT_PI + 4.0 * v * normal_cdf(math.sqrt(2.0) * v)


def _relevant_integrand_pieces(S, s, u, U):
    """Split [s, u] at the midpoint and return the two substituted integrals.

    Near ``S`` substitute ``t - S = v**2``, near ``U`` substitute
    ``U - t = w**2``; both integrands are then bounded.
    """
    mid = 0.5 * (s + u)

    def lower(v):
        return _psi_times_jacobian(v) * psi(U - (S + v * v))

    def upper(w):
        return _psi_times_jacobian(w) * psi((U - w * w) - S)

    lower_range = (math.sqrt(s - S), math.sqrt(mid - S))
    upper_range = (math.sqrt(U - u), math.sqrt(U - mid))
    return lower, lower_range, upper, upper_range


def relevant_density_integral(S: float, s: float, u: float, U: float,
                              a: float, b: float) -> float:
    """Expected number of (S, U)-relevant separation points in [a, b] x [s, u].

    Evaluates ``2 (b - a) * integral_s^u psi(t - S) psi(U - t) dt`` by adaptive
    quadrature after substitutions that remove the inverse square-root
    singularities at ``t = S`` and ``t = U``.

    Parameters
    ----------
    S, s, u, U : float
        Times with ``S <= s <= u <= U`` and ``S < U``.
    a, b : float
        Spatial interval, ``a <= b``.
    """
    if not (S <= s <= u <= U) or S == U:
        raise ValueError("need S <= s <= u <= U with S < U")
    if b < a:
        raise ValueError("need a <= b")
    if s == u or a == b:
        return 0.0
    lower, lr, upper, ur = _relevant_integrand_pieces(S, s, u, U)
    opts = dict(epsabs=0.0, epsrel=1e-10, limit=200)
    part_lo, _ = integrate.quad(lower, *lr, **opts)
    part_hi, _ = integrate.quad(upper, *ur, **opts)
    return 2.0 * (b - a) * (part_lo + part_hi)


def relevant_density_midpoint(S, s, u, U, a, b, panels: int = 1_000_000) -> float:
    """Independent midpoint-rule evaluation of :func:`relevant_density_integral`.

    Vectorised over ``panels`` cells in each substituted half; used as a
    regression oracle, not in production paths.
    """
    if s == u or a == b:
        return 0.0
    from scipy.special import ndtr

    def jac(v):
        return 2.0 * np.exp(-v * v) / _SQRT_PI + 4.0 * v * ndtr(math.sqrt(2.0) * v)

    def psi_vec(t):
        return np.exp(-t) / (_SQRT_PI * np.sqrt(t)) + 2.0 * ndtr(np.sqrt(2.0 * t))

    mid = 0.5 * (s + u)
    total = 0.0
    lo, hi = math.sqrt(s - S), math.sqrt(mid - S)
    h = (hi - lo) / panels
    v = lo + h * (np.arange(panels) + 0.5)
    total += h * np.sum(jac(v) * psi_vec(U - (S + v * v)))
    lo, hi = math.sqrt(U - u), math.sqrt(U - mid)
    h = (hi - lo) / panels
    w = lo + h * (np.arange(panels) + 0.5)
    total += h * np.sum(jac(w) * psi_vec((U - w * w) - S))
    return 2.0 * (b - a) * total


def pairwise_sum(values) -> float:
    """Order-independent-in-practice sum (numpy's pairwise reduction)."""
    return float(np.add.reduce(np.asarray(values, dtype=np.float64)))


def mc_mean(values, reference: Optional[float] = None) -> EstimateReport:
    """Sample mean with standard error ``sd / sqrt(n)`` (``ddof=1``)."""
    arr = np.asarray(values, dtype=np.float64).ravel()
    n = arr.size
    if n == 0:
        return empty_report("no samples", reference)
    mean = pairwise_sum(arr) / n
    if n == 1:
        return EstimateReport(mean, 0.0, 1).with_reference(reference)
    var = pairwise_sum((arr - mean) ** 2) / (n - 1)
    return EstimateReport(mean, math.sqrt(var / n), n).with_reference(reference)


def ratio_estimate(numerators, denominators,
                   reference: Optional[float] = None) -> EstimateReport:
    """Ratio of sums with a delta-method standard error.

    Suitable for renewal-reward style estimators such as counts per unit
    local time pooled over independent replicates.
    """
    num = np.asarray(numerators, dtype=np.float64)
    den = np.asarray(denominators, dtype=np.float64)
    n = num.size
    if n == 0 or den.sum() <= 0:
        return empty_report("no samples", reference)
    ratio = num.sum() / den.sum()
    if n == 1:
        return EstimateReport(ratio, 0.0, 1).with_reference(reference)
    resid = num - ratio * den
    se = math.sqrt(n / (n - 1) * np.sum(resid ** 2)) / den.sum()
    return EstimateReport(float(ratio), float(se), n).with_reference(reference)


def excursion_tail(h: float) -> float:
    """``nu([h, inf))`` for ``nu(dh) = dh / sqrt(2 pi h^3)``, i.e. ``sqrt(2/(pi h))``."""
    if h <= 0:
        raise ValueError("h must be positive")
    if math.isinf(h):
        return 0.0
    return math.sqrt(2.0 / (math.pi * h))
