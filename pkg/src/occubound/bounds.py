"""Closed-form occupation-density bounds for box-constrained 1-D Ito processes.

Setting: processes dX = beta dt + sigma dW whose coefficients are only known
to satisfy sigma in [a, b] and |beta| <= k sigma^2.  The worst-case expected
occupation density at a level y, over horizon T, started at x, depends on the
distance r = |x - y| only and equals

    H(r, T) = int_0^T  (b / (a^2 sqrt(t))) phi(w) + (b^2 k / a^2) Phi(w)  dt,
    w(r, t) = k b sqrt(t) - r / (b sqrt(t)),

with phi / Phi the standard normal pdf / cdf.  The rate-lambda resolvent of
the same control problem has the closed form

    Q(r, lambda) = exp(-c r) / (c a^2),   c = sqrt(k^2 + 2 lambda / b^2) - k,

and lambda * LaplaceTransform[H(r, .)](lambda) = Q(r, lambda), which this
module can verify numerically (``laplace_consistency``).

Units: a and b carry length/sqrt(time), k carries 1/length, and the bound
itself carries 1/length.  Units are documented, not enforced.

All functions are pure and reentrant; there is no shared mutable state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .errors import DomainError, ToleranceError
from .quadrature import integrate_adaptive

_SQRT_2PI = math.sqrt(2.0 * math.pi)

DEFAULT_TOL = 1e-10


@dataclass(frozen=True)
class CoefficientBox:
    """Admissible-coefficient box: sigma in [a, b], |beta| <= k sigma^2."""

    a: float
    b: float
    k: float

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b) and math.isfinite(self.k)):
            raise DomainError(f"coefficient box must be finite, got {self}")
        if not 0.0 < self.a <= self.b:
            raise DomainError(f"need 0 < a <= b, got a={self.a}, b={self.b}")
        if self.k < 0.0:
            raise DomainError(f"need k >= 0, got k={self.k}")


@dataclass(frozen=True)
class Query:
    """A bound evaluation point: start x, level y, horizon T >= 0."""

    x: float
    y: float
    T: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.T)):
            raise DomainError(f"query must be finite, got {self}")
        if self.T < 0.0:
            raise DomainError(f"need T >= 0, got T={self.T}")

    @property
    def r(self) -> float:
        """Distance |x - y| between start point and level."""
        return abs(self.x - self.y)


@dataclass(frozen=True)
class BoundReport:
    """A bound value with its quadrature error estimate and eval count."""

    value: float
    abs_error_estimate: float
    evaluations: int

    def __post_init__(self):
        if self.abs_error_estimate < 0.0:
            raise DomainError("abs_error_estimate must be >= 0")


def normal_pdf(z):
    """Standard normal density, vectorized."""
    z = np.asarray(z, dtype=float)
    out = np.exp(-0.5 * z * z) / _SQRT_2PI
    return out if out.ndim else float(out)


def normal_cdf(z):
    """Standard normal cdf via the complementary error function, vectorized.

    ndtr evaluates Phi(z) = erfc(-z / sqrt(2)) / 2, which is accurate in both
    tails (no cancellation for large |z|).
    """
    z = np.asarray(z, dtype=float)
    out = ndtr(z)
    return out if np.ndim(out) else float(out)


def drift_score(box: CoefficientBox, r, t):
    """Standardized drift-vs-distance argument k b sqrt(t) - r / (b sqrt(t)).

    This is the quantity fed to the normal pdf/cdf inside the bound's rate.
    Requires t > 0.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0.0):
        raise DomainError("drift_score requires t > 0")
    st = np.sqrt(t)
    out = box.k * box.b * st - np.asarray(r, dtype=float) / (box.b * st)
    return out if out.ndim else float(out)


def density_rate(box: CoefficientBox, r, t):
    """Time derivative of the occupation bound (the integrand of H in t).

        rate(r, t) = (b / (a^2 sqrt(t))) phi(w) + (b^2 k / a^2) Phi(w)

    with w = drift_score(r, t).  Strictly positive for t > 0.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0.0):
        raise DomainError("density_rate requires t > 0")
    w = drift_score(box, r, t)
    a2 = box.a * box.a
    out = (box.b / (a2 * np.sqrt(t))) * normal_pdf(w) \
        + (box.b * box.b * box.k / a2) * normal_cdf(w)
    return out if out.ndim else float(out)


def _score_sub(box: CoefficientBox, r: float, u):
    """drift_score at t = u**2, safe at u = 0 (returns -inf for r > 0)."""
    u = np.asarray(u, dtype=float)
    kbu = box.k * box.b * u
    if r == 0.0:
        return kbu
    with np.errstate(divide="ignore"):
        ratio = np.where(u > 0.0, r / (box.b * u), np.inf)
    return kbu - ratio


def _layer_cuts(box: CoefficientBox, r: float, u_hi: float):
    """Initial cuts tracking the boundary layer u ~ r / b of the substituted
    integrands.  For small r the layer (and its slowly decaying (r/u)^2
    correction) sits below the node spacing of any coarse panel and would be
    invisible to the error estimator, so the panels are pinned to it with a
    geometric ladder up to the domain end."""
    if r == 0.0:
        return ()
    scale = r / box.b
    if scale >= u_hi:
        return ()
    cuts = [scale / 64.0, scale]
    c = 64.0 * scale
    while c < u_hi:
        cuts.append(c)
        c *= 8.0
    return tuple(cuts)


def _signed_clamp(value: float, err: float, sign: int) -> float:
    """Snap quadrature round-off of a sign-definite integral to zero.

    Values violating the known sign by more than the reported error pass
    through unchanged so downstream sign checks can catch genuine defects.
    """
    if sign > 0 and -(err + 1e-300) <= value < 0.0:
        return 0.0
    if sign < 0 and 0.0 < value <= err + 1e-300:
        return 0.0
    return value


def distance_bound(box: CoefficientBox, r: float, T: float,
                   tol: float = DEFAULT_TOL) -> BoundReport:
    """Occupation bound as a function of the distance r = |x - y|.

    Evaluates H(r, T) by adaptive Gauss-Kronrod after the substitution
    t = u**2, which removes the 1/sqrt(t) endpoint singularity and leaves a
    bounded smooth integrand:

        H(r, T) = int_0^sqrt(T)  (2 b / a^2) phi(w) + 2 u (b^2 k / a^2) Phi(w)  du

    with w = drift_score(r, u**2).  T = 0 returns 0 exactly.
    """
    if r < 0.0:
        raise DomainError(f"need r >= 0, got {r}")
    if T < 0.0:
        raise DomainError(f"need T >= 0, got {T}")
    if T == 0.0:
        return BoundReport(0.0, 0.0, 0)
    a2 = box.a * box.a
    c_pdf = 2.0 * box.b / a2
    c_cdf = 2.0 * box.b * box.b * box.k / a2

    def integrand(u):
        w = _score_sub(box, r, u)
        out = c_pdf * normal_pdf(w)
        if box.k > 0.0:
            out = out + c_cdf * u * normal_cdf(w)
        return out

    u_hi = math.sqrt(T)
    res = integrate_adaptive(integrand, 0.0, u_hi, abs_tol=tol,
                             breakpoints=_layer_cuts(box, r, u_hi))
    return BoundReport(_signed_clamp(res.value, res.abs_error, +1),
                       res.abs_error, res.evaluations)


def occupation_bound(box: CoefficientBox, q: Query,
                     tol: float = DEFAULT_TOL) -> BoundReport:
    """Sharp upper bound on the expected occupation density at q.y.

    Depends on (q.x, q.y) only through the distance q.r; see
    :func:`distance_bound`.
    """
    return distance_bound(box, q.r, q.T, tol=tol)


def zero_drift_bound(box: CoefficientBox, r: float, T: float) -> float:
    """Closed form of the k = 0 bound (driftless case), used as an oracle.

    For k = 0 the time integral has the antiderivative

        H(r, T) = 2 sqrt(T) (b / a^2) phi(r / (b sqrt(T)))
                  - (2 r / a^2) Phi(-r / (b sqrt(T))).
    """
    if r < 0.0 or T < 0.0:
        raise DomainError("need r >= 0 and T >= 0")
    if T == 0.0:
        return 0.0
    s = box.b * math.sqrt(T)
    a2 = box.a * box.a
    return 2.0 * math.sqrt(T) * (box.b / a2) * normal_pdf(r / s) \
        - (2.0 * r / a2) * normal_cdf(-r / s)


def bound_slope(box: CoefficientBox, r: float, T: float,
                tol: float = DEFAULT_TOL) -> BoundReport:
    """Derivative of the bound in the distance, d/dr H(r, T), for r > 0.

    Closed-form integrand (always <= 0):

        d/dr H = int_0^T  -(r / (a^2 b)) t**(-3/2) phi(w(r, t))  dt,

    evaluated after t = u**2.  The Gaussian factor tames the t**(-3/2)
    endpoint for r > 0; the substitution is kept for robustness.
    """
    _require_positive_r(r)
    if T < 0.0:
        raise DomainError(f"need T >= 0, got {T}")
    if T == 0.0:
        return BoundReport(0.0, 0.0, 0)
    coeff = -2.0 * r / (box.a * box.a * box.b)

    def integrand(u):
        u = np.asarray(u, dtype=float)
        w = _score_sub(box, r, u)
        pdf = normal_pdf(w)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(u > 0.0, coeff * pdf / (u * u), 0.0)
        return out

    u_hi = math.sqrt(T)
    res = integrate_adaptive(integrand, 0.0, u_hi, abs_tol=tol,
                             breakpoints=_layer_cuts(box, r, u_hi))
    return BoundReport(_signed_clamp(res.value, res.abs_error, -1),
                       res.abs_error, res.evaluations)


def bound_curvature(box: CoefficientBox, r: float, T: float,
                    tol: float = DEFAULT_TOL) -> BoundReport:
    """Second derivative of the bound in the distance, for r > 0 (always >= 0).

    Closed-form integrand:

        d2/dr2 H = int_0^T  (1 / (a^2 b)) t**(-3/2) phi(w)
                            * (r^2 / (b^2 t) - k r - 1)  dt,

    evaluated after t = u**2.
    """
    _require_positive_r(r)
    if T < 0.0:
        raise DomainError(f"need T >= 0, got {T}")
    if T == 0.0:
        return BoundReport(0.0, 0.0, 0)
    coeff = 2.0 / (box.a * box.a * box.b)
    r2b2 = r * r / (box.b * box.b)

    def integrand(u):
        u = np.asarray(u, dtype=float)
        w = _score_sub(box, r, u)
        pdf = normal_pdf(w)
        with np.errstate(divide="ignore", invalid="ignore"):
            damped = np.where(u > 0.0, pdf / (u * u), 0.0)
            poly = np.where(u > 0.0, r2b2 / (u * u), 0.0) - box.k * r - 1.0
        # pdf underflows to 0 long before 1/u**2 overflows, so the product
        # below is well defined on every refinement level the depth cap allows
        return coeff * np.where(damped == 0.0, 0.0, damped * poly)

    u_hi = math.sqrt(T)
    res = integrate_adaptive(integrand, 0.0, u_hi, abs_tol=tol,
                             breakpoints=_layer_cuts(box, r, u_hi))
    return BoundReport(_signed_clamp(res.value, res.abs_error, +1),
                       res.abs_error, res.evaluations)


def _require_positive_r(r: float):
    if r <= 0.0:
        raise DomainError(f"need r > 0, got {r} (take one-sided limits outside)")


def resolvent_decay(box: CoefficientBox, lam: float) -> float:
    """Decay constant c = sqrt(k^2 + 2 lambda / b^2) - k of the resolvent.

    Computed as 2 lambda / (b^2 (k + sqrt(k^2 + 2 lambda / b^2))) to avoid
    catastrophic cancellation when 2 lambda / b^2 << k^2.
    """
    if lam <= 0.0:
        raise DomainError(f"need lambda > 0, got {lam}")
    b2 = box.b * box.b
    return 2.0 * lam / (b2 * (box.k + math.sqrt(box.k * box.k + 2.0 * lam / b2)))


def resolvent_bound(box: CoefficientBox, r: float, lam: float) -> float:
    """Value of the rate-lambda stopped problem, exp(-c r) / (c a^2).

    Strictly positive and decreasing in r; equals the lambda-weighted Laplace
    transform of the occupation bound in T.
    """
    if r < 0.0:
        raise DomainError(f"need r >= 0, got {r}")
    c = resolvent_decay(box, lam)
    return math.exp(-c * r) / (c * box.a * box.a)


def resolvent_slope(box: CoefficientBox, r: float, lam: float) -> float:
    """d/dr of the resolvent: -(1 / a^2) exp(-c r)."""
    if r < 0.0:
        raise DomainError(f"need r >= 0, got {r}")
    c = resolvent_decay(box, lam)
    return -math.exp(-c * r) / (box.a * box.a)


def resolvent_curvature(box: CoefficientBox, r: float, lam: float) -> float:
    """d2/dr2 of the resolvent: (c / a^2) exp(-c r)."""
    if r < 0.0:
        raise DomainError(f"need r >= 0, got {r}")
    c = resolvent_decay(box, lam)
    return c * math.exp(-c * r) / (box.a * box.a)


def resolvent_pasting_jump(box: CoefficientBox, lam: float) -> float:
    """Jump of the spatial derivative of the resolvent across x = y.

    Built from the analytic one-sided formulas: approaching the level from
    below the x-derivative tends to +1/a^2, from above to -1/a^2, so the
    jump (right minus left) is -2/a^2 for every lambda > 0.
    """
    from_right = resolvent_slope(box, 0.0, lam)       # x > y: d/dx = +d/dr
    from_left = -resolvent_slope(box, 0.0, lam)       # x < y: d/dx = -d/dr
    return from_right - from_left


def laplace_tail_cutoff(box: CoefficientBox, lam: float, tail_tol: float) -> float:
    """Truncation point t* for the Laplace integral of the rate.

    Uses the analytic envelope rate(r, t) <= (b / (a^2 sqrt(t)) + b^2 k / a^2)
    so the discarded tail obeys

        int_t*^inf envelope(t) e^(-lam t) dt
            <= (b / (a^2 sqrt(t*)) + b^2 k / a^2) e^(-lam t*) / lam < tail_tol.

    The cutoff is solved by bisection after doubling to bracket it.
    """
    if lam <= 0.0:
        raise DomainError(f"need lambda > 0, got {lam}")
    if tail_tol <= 0.0:
        raise DomainError("tail tolerance must be > 0")
    a2 = box.a * box.a
    flat = box.b * box.b * box.k / a2

    def tail(t):
        return (box.b / (a2 * math.sqrt(t)) + flat) * math.exp(-lam * t) / lam

    lo, hi = 0.25, 0.5
    while tail(hi) >= tail_tol:
        lo, hi = hi, hi * 2.0
        if hi > 1e9:
            raise ToleranceError("could not bracket the Laplace tail cutoff")
    if tail(lo) < tail_tol:
        return lo
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if tail(mid) < tail_tol:
            hi = mid
        else:
            lo = mid
    return hi


def laplace_consistency(box: CoefficientBox, r: float, lam: float,
                        tol: float = 1e-8) -> float:
    """Residual | int_0^inf e^(-lam t) rate(r, t) dt  -  resolvent(r, lam) |.

    The left side is the lambda-Laplace transform of the bound's rate, which
    equals lambda * L[H](lambda) since H(r, 0) = 0.  The integral is truncated
    at :func:`laplace_tail_cutoff` (envelope contribution below tol/10) and
    evaluated with the same t = u**2 substitution as the bound itself.
    Returns a nonnegative residual; consistency holds when it is below tol.
    """
    if r < 0.0:
        raise DomainError(f"need r >= 0, got {r}")
    t_star = laplace_tail_cutoff(box, lam, tol / 10.0)
    a2 = box.a * box.a
    c_pdf = 2.0 * box.b / a2
    c_cdf = 2.0 * box.b * box.b * box.k / a2

    def integrand(u):
        u = np.asarray(u, dtype=float)
        w = _score_sub(box, r, u)
        damp = np.exp(-lam * u * u)
        out = c_pdf * normal_pdf(w)
        if box.k > 0.0:
            out = out + c_cdf * u * normal_cdf(w)
        return damp * out

    u_hi = math.sqrt(t_star)
    res = integrate_adaptive(integrand, 0.0, u_hi, abs_tol=tol / 10.0,
                             breakpoints=_layer_cuts(box, r, u_hi))
    return abs(res.value - resolvent_bound(box, r, lam))


__all__ = [
    "CoefficientBox", "Query", "BoundReport",
    "normal_pdf", "normal_cdf", "drift_score", "density_rate",
    "distance_bound", "occupation_bound", "zero_drift_bound",
    "bound_slope", "bound_curvature",
    "resolvent_decay", "resolvent_bound", "resolvent_slope",
    "resolvent_curvature", "resolvent_pasting_jump",
    "laplace_tail_cutoff", "laplace_consistency",
    "DEFAULT_TOL",
]
