"""Adaptive Gauss-Kronrod quadrature with error estimates and eval accounting.

A 15-point Kronrod rule with embedded 7-point Gauss rule is applied on a
worklist of subintervals; the subinterval with the largest error estimate is
bisected until the summed error estimate drops below the requested absolute
tolerance.  Integrands must be vectorized (ndarray in, ndarray out) so each
panel costs a single call.

The error estimate per panel follows the QUADPACK recipe:
    err = resasc * min(1, (200 * |K15 - G7| / resasc)**1.5)
scaled by the half-length of the panel.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ToleranceError

# Kronrod-15 abscissae on [-1, 1] (positive half; symmetric).
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
# Kronrod-15 weights matching _XGK.
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
# Gauss-7 weights; the Gauss nodes are _XGK[1], _XGK[3], _XGK[5], _XGK[7].
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

# Full node vector on [-1, 1], ordered.
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_WEIGHTS_K = np.concatenate([_WGK[:-1], _WGK[::-1]])
_WEIGHTS_G = np.zeros_like(_WEIGHTS_K)
_WEIGHTS_G[1:-1:2] = np.concatenate([_WG[:-1], _WG[::-1]])

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    abs_error: float
    evaluations: int


def _panel(f, lo: float, hi: float) -> tuple[float, float, float]:
    """One GK15/G7 panel on [lo, hi]: (K15 value, error estimate, floor).

    The floor is the round-off level below which further bisection cannot
    drive this panel's error (it scales with the L1 mass of the panel, which
    is what limits accuracy when positive and negative parts cancel).
    """
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    fx = np.asarray(f(mid + half * _NODES), dtype=float)
    resk = half * float(_WEIGHTS_K @ fx)
    resg = half * float(_WEIGHTS_G @ fx)
    resabs = half * float(_WEIGHTS_K @ np.abs(fx))
    mean = resk / (hi - lo) if hi > lo else 0.0
    resasc = half * float(_WEIGHTS_K @ np.abs(fx - mean))
    err = abs(resk - resg)
    if resasc != 0.0 and err != 0.0:
        err = resasc * min(1.0, (200.0 * err / resasc) ** 1.5)
    floor = 50.0 * _EPS * resabs
    return resk, max(err, floor), floor


def integrate_adaptive(
    f: Callable[[np.ndarray], np.ndarray],
    lo: float,
    hi: float,
    abs_tol: float = 1e-10,
    max_depth: int = 60,
    breakpoints: Sequence[float] = (),
) -> QuadratureResult:
    """Integrate a vectorized ``f`` over [lo, hi] to absolute tolerance.

    ``breakpoints`` are interior abscissae (kinks, jumps) at which the initial
    partition is split so the error estimates stay honest.  Panels whose error
    estimate has reached the round-off floor are frozen (bisection cannot
    improve them); if only frozen panels remain the achieved error is reported
    as is.  Raises :class:`ToleranceError` when refinement would exceed
    ``max_depth`` bisections of a panel that is still above its floor.
    """
    if hi < lo:
        raise ValueError(f"empty orientation: [{lo}, {hi}]")
    if hi == lo:
        return QuadratureResult(0.0, 0.0, 0)

    heap = []            # splittable panels: (-err, tiebreak, lo, hi, value, depth)
    frozen = []          # panels at their round-off floor: (value, err)
    n_eval = 0
    tiebreak = 0
    frozen_err = 0.0
    split_err = 0.0

    def push(a, b, depth):
        nonlocal n_eval, tiebreak, frozen_err, split_err
        val, err, floor = _panel(f, a, b)
        n_eval += _NODES.size
        # freeze only once a few bisections have confirmed the panel is at
        # its round-off floor; a coarse panel can alias oscillations to a
        # coincidentally tiny estimate
        if err <= 1e-300 or (err <= floor and depth >= 3):
            frozen.append((val, err))
            frozen_err += err
        else:
            heapq.heappush(heap, (-err, tiebreak, a, b, val, depth))
            tiebreak += 1
            split_err += err

    cuts = sorted({lo, hi, *(p for p in breakpoints if lo < p < hi)})
    for a, b in zip(cuts[:-1], cuts[1:]):
        push(a, b, 0)

    # Refine while the target is unmet and splitting can still help: once the
    # frozen (round-off limited) part dominates, push the splittable part one
    # percent below it and accept the achievable error.
    while heap and frozen_err + split_err > abs_tol \
            and split_err > 0.01 * max(frozen_err, abs_tol):
        neg_err, _, a, b, _, depth = heapq.heappop(heap)
        if depth >= max_depth:
            raise ToleranceError(
                f"quadrature on [{lo}, {hi}] hit depth {max_depth} with "
                f"error estimate {frozen_err + split_err:.3e} > "
                f"tolerance {abs_tol:.3e}"
            )
        split_err += neg_err  # remove the parent's error
        mid = 0.5 * (a + b)
        push(a, mid, depth + 1)
        push(mid, b, depth + 1)

    value = sum(item[4] for item in heap) + sum(v for v, _ in frozen)
    # re-sum the error exactly; the incremental accumulators drift
    abs_error = -sum(item[0] for item in heap) + sum(e for _, e in frozen)
    return QuadratureResult(float(value), float(abs_error), n_eval)
