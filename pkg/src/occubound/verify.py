"""Property suites checking every computable claim behind the bound.

``run_analytic_suite`` covers the closed-form side: boundary condition,
time-domain and resolvent-domain HJB residuals, the derivative pasting jump,
sign/convexity/limit behaviour of the distance derivatives, Laplace
consistency, the driftless closed-form reduction, translation invariance,
supremum attainment on the control box, budget scaling and admissibility of
the near-optimal control.

``run_validity_experiment`` and ``run_sharpness_experiment`` do the Monte
Carlo side: no admissible preset may beat the bound, and the ramp control
must approach it from below within its budgets.
"""

from __future__ import annotations

import json
import time
import warnings
from dataclasses import asdict, dataclass

import numpy as np

from .bounds import (
    CoefficientBox,
    Query,
    bound_curvature,
    bound_slope,
    density_rate,
    distance_bound,
    laplace_consistency,
    occupation_bound,
    resolvent_bound,
    resolvent_curvature,
    resolvent_pasting_jump,
    resolvent_slope,
    zero_drift_bound,
)
from .controls import (
    ADVERSARIAL_PRESETS,
    MollificationParams,
    make_extremal_control,
    preset_control,
    validate_admissible,
)
from .engine import (
    SimConfig,
    UnderResolvedWindowWarning,
    bias_budget,
    estimate_occupation_density,
    suboptimality_budget,
)
from .integrals import path_integral_bound, time_integral_bound
from .profiles import ProfileFunction, TimeProfileFunction, indicator_profile

DEFAULT_BOXES = (
    CoefficientBox(1.0, 1.0, 0.0),
    CoefficientBox(1.0, 2.0, 0.0),
    CoefficientBox(1.0, 2.0, 1.0),
    CoefficientBox(0.5, 1.5, 2.0),
)
# "0+" is represented by r = 1e-6; one-sided limits get Richardson treatment
DEFAULT_RS = (1e-6, 0.1, 1.0, 5.0)
DEFAULT_TS = (0.1, 1.0, 4.0)
DEFAULT_LAMBDAS = (0.5, 1.0, 3.0)

_FD_QUAD_TOL = 1e-12


@dataclass(frozen=True)
class CheckReport:
    """Outcome of one check at one parameter point.

    ``mode`` is "residual" (pass iff residual <= tolerance) or "margin"
    (the residual field holds a margin; pass iff margin >= -tolerance).
    """

    name: str
    point: dict
    residual: float
    tolerance: float
    passed: bool
    runtime: float
    mode: str = "residual"

    def to_json(self) -> str:
        return json.dumps(asdict(self))


def _residual_check(name, point, residual, tol, t0) -> CheckReport:
    return CheckReport(name, point, float(residual), float(tol),
                       bool(residual <= tol), time.perf_counter() - t0)


def _margin_check(name, point, margin, tol, t0) -> CheckReport:
    return CheckReport(name, point, float(margin), float(tol),
                       bool(margin >= -tol), time.perf_counter() - t0,
                       mode="margin")


def _run(name, point, tol, thunk, mode="residual") -> CheckReport:
    """Evaluate one check; an exception becomes a failed report, so a broken
    point never aborts the rest of the suite."""
    t0 = time.perf_counter()
    try:
        value = float(thunk())
    except Exception as exc:  # noqa: BLE001 - recorded, not raised
        return CheckReport(name, {**point, "error": str(exc)},
                           float("inf") if mode == "residual" else float("-inf"),
                           float(tol), False, time.perf_counter() - t0, mode)
    if mode == "margin":
        return _margin_check(name, point, value, tol, t0)
    return _residual_check(name, point, value, tol, t0)


def _box_point(box, **extra):
    return {"a": box.a, "b": box.b, "k": box.k, **extra}


def run_analytic_suite(boxes=DEFAULT_BOXES, rs=DEFAULT_RS, Ts=DEFAULT_TS,
                       lambdas=DEFAULT_LAMBDAS, *,
                       hjb_tol: float = 1e-5,
                       fd_tol: float = 1e-5,
                       laplace_tol: float = 1e-8,
                       resolvent_tol: float = 1e-10,
                       pasting_tol: float = 1e-12,
                       sign_tol: float = 1e-12,
                       limit_tol: float = 1e-4,
                       reduction_tol: float = 1e-9) -> list[CheckReport]:
    """Run every closed-form check over the parameter grids.

    Individual failures are recorded, never raised; an empty grid yields an
    empty (vacuously passing) report list.
    """
    reports: list[CheckReport] = []
    boxes = tuple(boxes)
    rs = tuple(rs)
    Ts = tuple(Ts)
    lambdas = tuple(lambdas)

    for box in boxes:
        for r in rs:
            reports.append(_run(
                "boundary-zero", _box_point(box, r=r), 0.0,
                lambda box=box, r=r: abs(distance_bound(box, r, 0.0).value)))

        for r in rs:
            for T in Ts:
                pt = _box_point(box, r=r, T=T)
                try:
                    rate = density_rate(box, r, T)
                    slope = bound_slope(box, r, T).value
                    curv = bound_curvature(box, r, T).value
                except Exception as exc:  # noqa: BLE001
                    reports.append(CheckReport(
                        "hjb-time-closed", {**pt, "error": str(exc)},
                        float("inf"), hjb_tol, False, 0.0))
                    continue

                reports.append(_run("rate-positive", pt, 0.0,
                                    lambda v=rate: v, mode="margin"))
                reports.append(_run(
                    "hjb-time-closed", pt, hjb_tol,
                    lambda: abs(rate + box.k * box.b ** 2 * slope
                                - 0.5 * box.b ** 2 * curv)))
                reports.append(_run("mono-slope-nonpositive", pt, sign_tol,
                                    lambda: max(slope, 0.0)))
                reports.append(_run("mono-curvature-nonnegative", pt, sign_tol,
                                    lambda: max(-curv, 0.0)))

                h_r = 1e-4 * max(1.0, r)
                h_T = 1e-4 * T
                H = lambda rr, TT, box=box: distance_bound(
                    box, rr, TT, tol=_FD_QUAD_TOL).value
                reports.append(_run(
                    "fd-rate-consistency", pt, fd_tol,
                    lambda: abs((H(r, T + h_T) - H(r, T - h_T)) / (2 * h_T)
                                - rate)))
                if r > h_r:
                    reports.append(_run(
                        "fd-slope-consistency", pt, fd_tol,
                        lambda: abs((H(r + h_r, T) - H(r - h_r, T)) / (2 * h_r)
                                    - slope)))
                h2 = 1e-3 * max(1.0, r)
                if r > h2:
                    # a straddling stencil would pick up the -2/a^2 kink at 0
                    reports.append(_run(
                        "fd-convexity", pt, fd_tol,
                        lambda: (H(r + h2, T) - 2 * H(r, T) + H(r - h2, T))
                        / (h2 * h2), mode="margin"))

                def sup_gap(box=box, slope=slope, curv=curv):
                    grid_max, corner = _control_box_supremum(box, slope, curv)
                    return max(grid_max - corner, 0.0)

                reports.append(_run("sup-attainment", pt, 1e-12, sup_gap))

        for T in Ts:
            def limit_residual(box=box, T=T):
                return abs(_limit_slope_richardson(box, T) + 1.0 / box.a ** 2)

            reports.append(_run("derivative-limit", _box_point(box, T=T),
                                limit_tol, limit_residual))

        for r in rs:
            for lam in lambdas:
                pt = _box_point(box, r=r, lam=lam)
                reports.append(_run(
                    "laplace-consistency", pt, laplace_tol,
                    lambda box=box, r=r, lam=lam: laplace_consistency(
                        box, r, lam, tol=max(laplace_tol, 1e-9))))

                def resolvent_residual(box=box, r=r, lam=lam):
                    q = resolvent_bound(box, r, lam)
                    qs = resolvent_slope(box, r, lam)
                    qc = resolvent_curvature(box, r, lam)
                    return abs(-lam * q + box.k * box.b ** 2 * abs(qs)
                               + 0.5 * box.b ** 2 * qc)

                reports.append(_run("laplace-hjb", pt, resolvent_tol,
                                    resolvent_residual))

        for lam in lambdas:
            reports.append(_run(
                "pasting-jump", _box_point(box, lam=lam), pasting_tol,
                lambda box=box, lam=lam: abs(resolvent_pasting_jump(box, lam)
                                             + 2.0 / box.a ** 2)))

        driftless = CoefficientBox(box.a, box.b, 0.0)
        for r in rs:
            for T in Ts:
                reports.append(_run(
                    "reduction-zero-drift", _box_point(driftless, r=r, T=T),
                    reduction_tol,
                    lambda b=driftless, r=r, T=T: abs(
                        distance_bound(b, r, T).value - zero_drift_bound(b, r, T))))

        for T in Ts:
            # dyadic points keep the translated differences bit-identical
            reports.append(_run(
                "translation-invariance", _box_point(box, T=T), 0.0,
                lambda box=box, T=T: abs(
                    occupation_bound(box, Query(0.5, 1.25, T)).value
                    - occupation_bound(box, Query(2.5, 3.25, T)).value)))

        reports.append(_run(
            "budget-scaling", _box_point(box), 1e-12,
            lambda box=box: abs(
                suboptimality_budget(box, 1.0, MollificationParams(40))
                - 0.5 * suboptimality_budget(box, 1.0, MollificationParams(5)))
            / suboptimality_budget(box, 1.0, MollificationParams(5))))

        def extremal_worst(box=box):
            ctrl = make_extremal_control(box, 0.3, MollificationParams(7))
            adm = validate_admissible(box, ctrl, [0.0, 1.0],
                                      np.linspace(-2.0, 2.0, 801))
            return max(adm.worst_sigma_violation, adm.worst_drift_violation)

        reports.append(_run("extremal-admissible", _box_point(box), 1e-12,
                            extremal_worst))

    if boxes:
        reports.extend(_integral_reduction_checks(boxes[min(1, len(boxes) - 1)]))
    return reports


def _limit_slope_richardson(box, T: float) -> float:
    """Distance-derivative of the bound at 0+ by Richardson extrapolation.

    One-sided differences (H(2h) - H(0)) / (2h) at h in {1e-2, 1e-3, 1e-4},
    with two elimination stages (the error expansion has both h and h^2
    terms); the limit is -1/a^2 for every admissible box.
    """
    H = lambda rr: distance_bound(box, rr, T, tol=_FD_QUAD_TOL).value
    h0 = H(0.0)
    d = [(H(2.0 * h) - h0) / (2.0 * h) for h in (1e-2, 1e-3, 1e-4)]
    first = [(10.0 * d[i + 1] - d[i]) / 9.0 for i in range(2)]
    return (100.0 * first[1] - first[0]) / 99.0


def _control_box_supremum(box, slope, curv, n_beta=9, n_sigma=9):
    """Grid maximum of the HJB hamiltonian over the control box vs its corner.

    On the branch where the start lies above the level the hamiltonian is
    beta * slope + sigma^2 / 2 * curv; since slope <= 0 <= curv it is
    maximized at (-k b^2, b).
    """
    sigmas = np.linspace(box.a, box.b, n_sigma)
    grid_max = -np.inf
    for sig in sigmas:
        cap = box.k * sig * sig
        betas = np.linspace(-cap, cap, n_beta) if cap > 0 else np.array([0.0])
        vals = betas * slope + 0.5 * sig * sig * curv
        grid_max = max(grid_max, float(vals.max()))
    corner = -box.k * box.b ** 2 * slope + 0.5 * box.b ** 2 * curv
    return grid_max, corner


def _integral_reduction_checks(box) -> list[CheckReport]:
    """Disintegration bound coherence: time-constant reduction and f = 1."""
    reports = []
    x, T = 0.1, 1.0
    prof = indicator_profile(-0.8, 1.2)

    t0 = time.perf_counter()
    flat = TimeProfileFunction(
        lambda t, y: ((y >= -0.8) & (y <= 1.2)).astype(float) * np.ones_like(t),
        t_hi=T, y_lo=-0.8, y_hi=1.2, breakpoints=(-0.8, 1.2),
        label="indicator-flat")
    lhs = time_integral_bound(box, x, T, flat, tol=1e-9).value
    rhs = path_integral_bound(box, x, T, prof, tol=1e-9).value
    reports.append(_residual_check(
        "time-integral-reduction", _box_point(box, x=x, T=T),
        abs(lhs - rhs), 1e-8, t0))

    t0 = time.perf_counter()
    reach = 8.0 * box.b * (1.0 + box.k * box.b) * max(T, 1.0)
    wide = ProfileFunction(lambda y: np.ones_like(y), -reach, reach, label="one")
    total = path_integral_bound(box, x, T, wide, tol=1e-8).value
    reports.append(_margin_check(
        "path-bound-dominates-horizon", _box_point(box, x=x, T=T),
        total - T, 1e-8, t0))
    return reports


def _strict_guard(reports, name, point, caught, strict, t0):
    """In strict mode an under-resolution warning fails the suite."""
    if strict and caught:
        reports.append(CheckReport(
            name + "-resolution", {**point, "warning": str(caught[0].message)},
            1.0, 0.0, False, time.perf_counter() - t0))


def run_validity_experiment(box: CoefficientBox, cfg: SimConfig, queries,
                            control_names=ADVERSARIAL_PRESETS, *,
                            level_m: int = 50, strict: bool = False,
                            threads: int = 1) -> list[CheckReport]:
    """Window estimates must stay below bound + 3 SE + discretization budget.

    ``queries`` is an iterable of (x0, y, T) triples; the config's x0/T fields
    are overridden per query.
    """
    reports = []
    budget = bias_budget(box, cfg.dt, cfg.n_window)
    for name in control_names:
        ctrl = preset_control(name, box, m=MollificationParams(level_m))
        for (x0, y, T) in queries:
            t0 = time.perf_counter()
            cfg_q = SimConfig(cfg.dt, cfg.n_paths, cfg.seed, cfg.n_window, T, x0)
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always", UnderResolvedWindowWarning)
                est = estimate_occupation_density(ctrl, cfg_q, y, threads=threads)
            g = distance_bound(box, abs(x0 - y), T).value
            margin = g + 3.0 * est.std_error + budget - est.mean
            point = _box_point(box, control=name, x0=x0, y=y, T=T,
                               mean=est.mean, std_error=est.std_error, bound=g)
            reports.append(_margin_check("validity", point, margin, 0.0, t0))
            _strict_guard(reports, "validity", point, caught, strict, t0)
    return reports


def run_sharpness_experiment(box: CoefficientBox, x: float, y: float, T: float,
                             Ms, cfg: SimConfig, *, strict: bool = False,
                             threads: int = 1) -> list[CheckReport]:
    """The ramp control must approach the bound within its stated budgets."""
    reports = []
    budget = bias_budget(box, cfg.dt, cfg.n_window)
    g = distance_bound(box, abs(x - y), T).value
    for M in Ms:
        t0 = time.perf_counter()
        m = MollificationParams(M)
        ctrl = make_extremal_control(box, y, m)
        cfg_q = SimConfig(cfg.dt, cfg.n_paths, cfg.seed, cfg.n_window, T, x)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", UnderResolvedWindowWarning)
            est = estimate_occupation_density(ctrl, cfg_q, y, threads=threads)
        slack = 3.0 * est.std_error + budget + suboptimality_budget(box, T, m)
        margin = est.mean - (g - slack)
        point = _box_point(box, M=M, x=x, y=y, T=T, mean=est.mean,
                           std_error=est.std_error, bound=g,
                           raw_gap=g - est.mean,
                           attained_fraction=est.mean / g if g > 0 else 1.0)
        reports.append(_margin_check("sharpness", point, margin, 0.0, t0))
        _strict_guard(reports, "sharpness", point, caught, strict, t0)
    return reports


def to_json_lines(reports) -> str:
    return "\n".join(r.to_json() for r in reports) + "\n"


def summarize(reports) -> str:
    """Human-readable pass/fail table, one line per check name."""
    if not reports:
        return "no checks run (empty grid): vacuous pass\n"
    by_name: dict[str, list[CheckReport]] = {}
    for r in reports:
        by_name.setdefault(r.name, []).append(r)
    width = max(len(n) for n in by_name) + 2
    lines = [f"{'check':<{width}} {'pass':>6} {'fail':>6}  worst"]
    for name, group in by_name.items():
        n_pass = sum(r.passed for r in group)
        n_fail = len(group) - n_pass
        if group[0].mode == "margin":
            worst = min(r.residual for r in group)
            desc = f"margin {worst:+.3e}"
        else:
            worst = max(r.residual for r in group)
            desc = f"residual {worst:.3e} (tol {group[0].tolerance:.1e})"
        lines.append(f"{name:<{width}} {n_pass:>6} {n_fail:>6}  {desc}")
    total_fail = sum(not r.passed for r in reports)
    lines.append(f"{'TOTAL':<{width}} {len(reports) - total_fail:>6} {total_fail:>6}")
    return "\n".join(lines) + "\n"
