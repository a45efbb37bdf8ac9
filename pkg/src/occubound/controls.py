"""Feedback controls: the near-optimal ramp control and adversarial presets.

A control is a pair of feedback maps (t, x) -> drift and (t, x) -> diffusion,
vectorized in x.  Admissibility against a :class:`CoefficientBox` means
sigma(t, x) in [a, b] and |beta(t, x)| <= k sigma(t, x)^2 wherever sampled.

The near-optimal control pulls toward the level y with the largest admissible
drift while running the diffusion at its floor ``a`` in a ramp of width 2/M
around y and at its cap ``b`` outside:

    sigma(x) = a + (b - a) * ramp(M * |x - y|),  ramp 0 on [0, 1], 1 on [2, inf)
    beta(x)  = -k * sigma(x)^2 * signum(x - y)

with signum(0) = -1 by convention.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .bounds import CoefficientBox
from .errors import DomainError

ADMISSIBILITY_TOL = 1e-12


def signum(x):
    """Sign function with signum(0) = -1, vectorized."""
    x = np.asarray(x, dtype=float)
    out = np.where(x > 0.0, 1.0, -1.0)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class MollificationParams:
    """Ramp-width parameter: the diffusion climbs from a to b over
    distances [1/M, 2/M] from the level."""

    M: int

    def __post_init__(self):
        if self.M < 1:
            raise DomainError(f"need M >= 1, got {self.M}")


@dataclass(frozen=True)
class FeedbackControl:
    """A candidate admissible control given as state-and-time feedback maps.

    ``drift`` and ``diffusion`` take (t, x) with scalar t and vectorized x
    and return anything broadcastable against x (plain scalars are fine for
    constant maps and skip per-step fills in the engine).  ``sigma_max`` is
    an optional declared cap used for resolution warnings.
    """

    drift: Callable
    diffusion: Callable
    label: str
    sigma_max: float | None = None


@dataclass(frozen=True)
class AdmissibilityReport:
    ok: bool
    worst_sigma_violation: float
    worst_drift_violation: float
    n_points: int
    violations: tuple = field(default=())


def make_extremal_control(box: CoefficientBox, y: float,
                          m: MollificationParams) -> FeedbackControl:
    """Near-optimal feedback control centered on the level y.

    The linear ramp g(s) = clip(M s - 1, 0, 1) is the simplest Lipschitz
    choice meeting the two plateau requirements, so the SDE coefficients stay
    Lipschitz and Euler-Maruyama converges strongly.
    """
    a, b, k = box.a, box.b, box.k
    M = float(m.M)

    def sigma(t, x):
        dist = np.abs(np.asarray(x, dtype=float) - y)
        return a + (b - a) * np.clip(M * dist - 1.0, 0.0, 1.0)

    def beta(t, x):
        s = sigma(t, x)
        return -k * s * s * signum(np.asarray(x, dtype=float) - y)

    return FeedbackControl(drift=beta, diffusion=sigma,
                           label=f"extremal-M{m.M}", sigma_max=b)


def validate_admissible(box: CoefficientBox, ctrl: FeedbackControl,
                        t_grid, x_grid,
                        tol: float = ADMISSIBILITY_TOL) -> AdmissibilityReport:
    """Check the box constraints on every (t, x) grid point.

    Reports (never raises) the worst violation of each constraint together
    with the offending points (capped at 20 entries).
    """
    t_grid = np.atleast_1d(np.asarray(t_grid, dtype=float))
    x_grid = np.atleast_1d(np.asarray(x_grid, dtype=float))
    if t_grid.size == 0 or x_grid.size == 0:
        raise DomainError("admissibility grid must be nonempty")

    worst_sigma = 0.0
    worst_drift = 0.0
    bad = []
    for t in t_grid:
        sig = np.asarray(ctrl.diffusion(float(t), x_grid), dtype=float)
        bet = np.asarray(ctrl.drift(float(t), x_grid), dtype=float)
        sig = np.broadcast_to(sig, x_grid.shape)
        bet = np.broadcast_to(bet, x_grid.shape)
        sig_viol = np.maximum(box.a - sig, sig - box.b)
        drift_viol = np.abs(bet) - box.k * sig * sig
        worst_sigma = max(worst_sigma, float(sig_viol.max()))
        worst_drift = max(worst_drift, float(drift_viol.max()))
        mask = (sig_viol > tol) | (drift_viol > tol)
        for i in np.flatnonzero(mask)[:20]:
            if len(bad) < 20:
                bad.append((float(t), float(x_grid[i]),
                            float(sig_viol[i]), float(drift_viol[i])))
    ok = worst_sigma <= tol and worst_drift <= tol
    return AdmissibilityReport(ok, max(worst_sigma, 0.0), max(worst_drift, 0.0),
                               t_grid.size * x_grid.size, tuple(bad))


def _constant_control(box, direction, label):
    b, k = box.b, box.k
    beta0 = direction * k * b * b
    # constant maps return scalars; the engine broadcasts without per-step fills
    return FeedbackControl(lambda t, x: beta0, lambda t, x: b, label,
                           sigma_max=b)


def preset_control(name: str, box: CoefficientBox, *, level: float = 0.0,
                   m: MollificationParams | None = None) -> FeedbackControl:
    """Built-in admissible controls for the adversarial suite.

    brownian    sigma = a, beta = 0
    drift-up    sigma = b, beta = +k b^2
    drift-down  sigma = b, beta = -k b^2
    sine        sigma = b, beta = k b^2 sin(2 pi x), clipped to the box
    bang-bang   sigma = b, beta alternating +-k b^2 with period 0.1
    extremal    the near-optimal ramp control around ``level``
    """
    a, b, k = box.a, box.b, box.k
    if name == "brownian":
        return FeedbackControl(lambda t, x: 0.0, lambda t, x: a,
                               "brownian", sigma_max=a)
    if name == "drift-up":
        return _constant_control(box, +1.0, "drift-up")
    if name == "drift-down":
        return _constant_control(box, -1.0, "drift-down")
    if name == "sine":
        cap = k * b * b

        def beta(t, x):
            raw = cap * np.sin(2.0 * math.pi * np.asarray(x, dtype=float))
            return np.clip(raw, -cap, cap)

        return FeedbackControl(beta, lambda t, x: b, "sine", sigma_max=b)
    if name == "bang-bang":
        cap = k * b * b
        period = 0.1

        def beta(t, x):
            return cap if int(t / period) % 2 == 0 else -cap

        return FeedbackControl(beta, lambda t, x: b, "bang-bang", sigma_max=b)
    if name == "extremal":
        return make_extremal_control(box, level, m or MollificationParams(50))
    raise DomainError(f"unknown preset control {name!r}; "
                      f"choose from {', '.join(PRESET_NAMES)}")


PRESET_NAMES = ("brownian", "drift-up", "drift-down", "sine", "bang-bang", "extremal")

# the adversarial suite used by the validity experiment (extremal is tested
# separately by the sharpness experiment)
ADVERSARIAL_PRESETS = ("brownian", "drift-up", "drift-down", "sine", "bang-bang")


def _interp_map(table: dict, what: str):
    try:
        xs = np.asarray(table["x"], dtype=float)
        vals = np.asarray(table["value"], dtype=float)
    except (KeyError, TypeError) as exc:
        raise DomainError(f"control {what} table needs 'x' and 'value' "
                          f"arrays") from exc
    if xs.ndim != 1 or xs.shape != vals.shape or xs.size < 1:
        raise DomainError(f"control {what} table is malformed")
    if xs.size > 1 and not np.all(np.diff(xs) > 0):
        raise DomainError(f"control {what} knots must be strictly increasing")

    def fn(t, x):
        return np.interp(np.asarray(x, dtype=float), xs, vals,
                         left=vals[0], right=vals[-1])

    return fn, float(vals.max())


def control_from_table(spec: dict) -> FeedbackControl:
    """Feedback control from a serialized piecewise-linear description.

    Expected shape (e.g. parsed from a scenario JSON file):

        {"label": "custom",
         "sigma": {"x": [-1, 0, 1], "value": [2.0, 1.0, 2.0]},
         "drift": {"x": [-1, 1], "value": [0.5, -0.5]}}

    Maps are linear between knots, constant beyond them and independent of
    time.  ``drift`` may be omitted (zero drift).  Admissibility against a
    coefficient box is checked by the caller, not here.
    """
    if not isinstance(spec, dict) or "sigma" not in spec:
        raise DomainError("control description needs at least a 'sigma' table")
    sigma_fn, sigma_max = _interp_map(spec["sigma"], "sigma")
    if "drift" in spec:
        drift_fn, _ = _interp_map(spec["drift"], "drift")
    else:
        def drift_fn(t, x):
            return np.zeros_like(np.asarray(x, dtype=float))
    return FeedbackControl(drift_fn, sigma_fn,
                           str(spec.get("label", "custom")),
                           sigma_max=sigma_max)
