"""Bounds for expected path integrals E[int_0^T f(X_s) ds] and the MC oracle.

For nonnegative f the expected path integral of any admissible process is
dominated by int G(x, y, T) f(y) dy; when f(t, y) is also nonincreasing in t
the sharper kernel  int int rate(|x - y|, t) f(t, y) dt dy  applies.  Both are
evaluated by nested adaptive quadrature (t innermost, occupation bounds
memoized by distance), with an analytic Gaussian-tail certificate covering
profile mass outside the declared support.
"""

from __future__ import annotations

import math

import numpy as np

from .bounds import (
    BoundReport,
    CoefficientBox,
    _score_sub,
    distance_bound,
    normal_cdf,
    normal_pdf,
)
from .engine import OccupationEstimate, SimConfig, _CallableSum, _estimate, path_weight_sums
from .errors import DomainError, MonotonicityError
from .profiles import ProfileFunction, TimeProfileFunction
from .quadrature import integrate_adaptive

_PROFILE_SAMPLES = 513


def occupation_tail_mass(box: CoefficientBox, T: float, r0: float) -> float:
    """Upper bound on the one-sided tail  int_r0^inf H(r, T) dr.

    For r beyond the drift range s = k b^2 T the bound is dominated by a
    shifted Gaussian envelope

        H(r, T) <= (2 b sqrt(T) / a^2) phi(q) + (b^2 k T / a^2) Phi(-q),
        q = (r - s) / (b sqrt(T)),

    whose r-integral is explicit.  Below s the decreasing bound itself caps
    the integrand.
    """
    if T <= 0.0:
        return 0.0
    if r0 < 0.0:
        raise DomainError(f"need r0 >= 0, got {r0}")
    a2 = box.a * box.a
    w = box.b * math.sqrt(T)
    s = box.k * box.b * box.b * T

    def tail_from(rs):
        q = (rs - s) / w
        gauss = (2.0 * box.b * math.sqrt(T) / a2) * w * normal_cdf(-q)
        drift = (box.b * box.b * box.k * T / a2) * w \
            * (normal_pdf(q) - q * normal_cdf(-q))
        return gauss + drift

    if r0 >= s:
        return float(tail_from(r0))
    # flat stretch [r0, s] capped by the (decreasing) bound at r0
    head = (s - r0) * distance_bound(box, r0, T, tol=1e-9).value
    return float(head + tail_from(s))


def _inner_tolerance(profile, tol: float) -> tuple[float, float]:
    ys = np.linspace(profile.y_lo, profile.y_hi, _PROFILE_SAMPLES)
    if isinstance(profile, TimeProfileFunction):
        f_max = float(profile(0.0, ys).max())
    else:
        f_max = float(profile(ys).max())
    width = profile.y_hi - profile.y_lo
    if f_max <= 0.0:
        return tol / 2.0, 0.0
    return (tol / 2.0) / max(width * f_max, 1.0), f_max


def _outer_breakpoints(profile, x: float):
    pts = list(profile.breakpoints)
    if profile.y_lo < x < profile.y_hi:
        pts.append(x)  # the bound has a kink where the level meets the start
    return pts


def _tail_certificate(box, x, T, profile) -> float:
    if profile.tail_sup <= 0.0:
        return 0.0
    above = occupation_tail_mass(box, T, max(profile.y_hi - x, 0.0))
    below = occupation_tail_mass(box, T, max(x - profile.y_lo, 0.0))
    return profile.tail_sup * (above + below)


def path_integral_bound(box: CoefficientBox, x: float, T: float,
                        profile: ProfileFunction,
                        tol: float = 1e-8) -> BoundReport:
    """Upper bound int G(x, y, T) f(y) dy on E[int_0^T f(X_s) ds].

    Outer adaptive quadrature in y with the occupation bound memoized by
    distance; the reported error combines the outer estimate, the inner
    tolerance budget and the tail certificate for mass outside the support.
    """
    if T < 0.0:
        raise DomainError(f"need T >= 0, got {T}")
    profile.check_nonnegative()
    if T == 0.0:
        return BoundReport(0.0, 0.0, 0)
    inner_tol, f_max = _inner_tolerance(profile, tol)
    cache: dict[float, BoundReport] = {}
    inner_evals = 0

    def bound_at(r: float) -> float:
        nonlocal inner_evals
        rep = cache.get(r)
        if rep is None:
            rep = distance_bound(box, r, T, tol=inner_tol)
            cache[r] = rep
            inner_evals += rep.evaluations
        return rep.value

    def integrand(ys):
        ys = np.atleast_1d(ys)
        h = np.array([bound_at(abs(x - yy)) for yy in ys])
        return h * profile(ys)

    outer = integrate_adaptive(integrand, profile.y_lo, profile.y_hi,
                               abs_tol=tol / 2.0,
                               breakpoints=_outer_breakpoints(profile, x))
    width = profile.y_hi - profile.y_lo
    err = outer.abs_error + inner_tol * width * f_max \
        + _tail_certificate(box, x, T, profile)
    return BoundReport(max(outer.value, 0.0), err, outer.evaluations + inner_evals)


def time_integral_bound(box: CoefficientBox, x: float, T: float,
                        profile: TimeProfileFunction,
                        tol: float = 1e-8) -> BoundReport:
    """Time-refined bound int int rate(|x - y|, t) f(t, y) dt dy.

    Requires f nonincreasing in t (verified on a sample grid; violations
    refuse the computation since the underlying inequality needs it).  For f
    constant in t this reduces to :func:`path_integral_bound`.
    """
    if T < 0.0:
        raise DomainError(f"need T >= 0, got {T}")
    try:
        profile.check_monotone(tol=1e-9)
    except DomainError as exc:
        raise MonotonicityError(str(exc)) from exc
    if T == 0.0:
        return BoundReport(0.0, 0.0, 0)
    inner_tol, f_max = _inner_tolerance(profile, tol)
    a2 = box.a * box.a
    c_pdf = 2.0 * box.b / a2
    c_cdf = 2.0 * box.b * box.b * box.k / a2
    sqrt_T = math.sqrt(T)
    inner_evals = 0
    cache: dict[float, float] = {}

    def kernel_at(y: float) -> float:
        nonlocal inner_evals
        r = abs(x - y)

        def integrand(u):
            u = np.asarray(u, dtype=float)
            w = _score_sub(box, r, u)
            out = c_pdf * normal_pdf(w)
            if box.k > 0.0:
                out = out + c_cdf * u * normal_cdf(w)
            return out * profile(u * u, y)

        res = integrate_adaptive(integrand, 0.0, sqrt_T, abs_tol=inner_tol)
        inner_evals += res.evaluations
        return res.value

    def outer_integrand(ys):
        ys = np.atleast_1d(ys)
        out = np.empty(ys.shape)
        for i, yy in enumerate(ys):
            key = float(yy)
            val = cache.get(key)
            if val is None:
                val = kernel_at(key)
                cache[key] = val
            out[i] = val
        return out

    outer = integrate_adaptive(outer_integrand, profile.y_lo, profile.y_hi,
                               abs_tol=tol / 2.0,
                               breakpoints=_outer_breakpoints(profile, x))
    width = profile.y_hi - profile.y_lo
    err = outer.abs_error + inner_tol * width
    # time profiles carry no tail declaration; their support is exact
    return BoundReport(max(outer.value, 0.0), err, outer.evaluations + inner_evals)


def mc_path_integral(ctrl, cfg: SimConfig, profile,
                     threads: int = 1, noise_factory=None) -> OccupationEstimate:
    """Monte Carlo estimate of E[int_0^T f(X_s) ds] along simulated paths.

    Accepts either profile kind; used for <=-comparisons against the bounds.
    """
    if cfg.n_steps == 0:
        return OccupationEstimate(0.0, 0.0, cfg.n_paths, "path_integral")
    if isinstance(profile, TimeProfileFunction):
        weight = _CallableSum(lambda t, xs: profile(t, xs), time_dependent=True)
    else:
        weight = _CallableSum(lambda xs: profile(xs), time_dependent=False)
    (sums,), _ = path_weight_sums(ctrl, cfg, [weight], threads=threads,
                                  noise_factory=noise_factory)
    return _estimate(sums, "path_integral")
