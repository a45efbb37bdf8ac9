"""Euler-Maruyama path engine and occupation estimators.

Paths are streamed: the engine folds per-step weights into per-path
accumulators and never materializes trajectories (use :func:`simulate_paths`
for that, at debug scale).  Noise comes from counter-based Philox substreams,
one per path, keyed by (seed, path_index):

    generator(path i) = Philox(key=seed, counter=i << 128)

The normal stream of a generator does not depend on how draws are partitioned
into calls, so estimates depend only on (seed, config), not on the internal
chunk/block sizes or on how many worker threads are used.  Paths are processed
in fixed-size chunks; workers write into disjoint slices of preallocated
per-path arrays and the reduction over paths happens afterwards in index
order, which makes the result bit-identical for any worker count.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .bounds import CoefficientBox, distance_bound
from .controls import FeedbackControl, MollificationParams
from .errors import DomainError

CHUNK_PATHS = 8192      # paths simulated in lockstep per worker task
BLOCK_STEPS = 2048      # time steps per pregenerated noise block

# bias_budget calibration constant, fitted against the driftless analytic
# case during development (window-crossing error ~ per-step displacement
# b sqrt(dt) relative to the window width 1/N)
BIAS_CALIBRATION = 2.0


class UnderResolvedWindowWarning(UserWarning):
    """The step displacement is large relative to the indicator window."""


@dataclass(frozen=True)
class SimConfig:
    """Monte Carlo settings.

    ``n_window`` is the window parameter N: the occupation indicator fires on
    [y - 1/N, y + 1/N].  T = 0 is allowed as a degenerate empty horizon.
    """

    dt: float
    n_paths: int
    seed: int
    n_window: float
    T: float
    x0: float

    def __post_init__(self):
        if self.dt <= 0.0:
            raise DomainError(f"need dt > 0, got {self.dt}")
        if self.n_paths < 1:
            raise DomainError(f"need n_paths >= 1, got {self.n_paths}")
        if self.n_window <= 0.0:
            raise DomainError(f"need n_window > 0, got {self.n_window}")
        if self.T != 0.0 and self.T < self.dt:
            raise DomainError(f"need T >= dt (or T = 0), got T={self.T}, dt={self.dt}")

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.dt))


@dataclass(frozen=True)
class OccupationEstimate:
    mean: float
    std_error: float
    n_paths: int
    estimator_kind: str


def path_generator(seed: int, path_index: int) -> np.random.Generator:
    """The Philox substream owned by one path."""
    return np.random.Generator(np.random.Philox(key=seed, counter=path_index << 128))


class _ZeroNoise:
    """Test hook: injects Z = 0 so the scheme degenerates to the drift ODE."""

    def standard_normal(self, size=None, out=None):
        if out is not None:
            out.fill(0.0)
            return out
        return np.zeros(size)


def zero_noise_factory(path_index: int) -> _ZeroNoise:
    return _ZeroNoise()


class _WindowSum:
    """Per-path sum of dt * 1{|x - y| <= 1/N}, left-endpoint convention."""

    def __init__(self, y: float, n_window: float):
        self.y = y
        self.half_width = 1.0 / n_window

    def make_state(self, n):
        return np.zeros(n), np.empty(n, dtype=bool)

    def accumulate(self, state, t, x, sig, scratch):
        acc, hits = state
        np.subtract(x, self.y, out=scratch)
        np.abs(scratch, out=scratch)
        np.less_equal(scratch, self.half_width, out=hits)
        np.add(acc, hits, out=acc, casting="unsafe")


class _SigmaWindowSum(_WindowSum):
    """Per-path sum of dt * 1{|x - y| <= 1/N} * sigma(t, x)^2."""

    def accumulate(self, state, t, x, sig, scratch):
        acc, hits = state
        np.subtract(x, self.y, out=scratch)
        np.abs(scratch, out=scratch)
        np.less_equal(scratch, self.half_width, out=hits)
        if np.ndim(sig):
            np.multiply(sig, sig, out=scratch)
            np.multiply(scratch, hits, out=scratch)
        else:
            np.multiply(hits, sig * sig, out=scratch)
        np.add(acc, scratch, out=acc)


class _CallableSum:
    """Per-path sum of dt * f(x) or dt * f(t, x)."""

    def __init__(self, fn, time_dependent: bool):
        self.fn = fn
        self.time_dependent = time_dependent

    def make_state(self, n):
        return (np.zeros(n),)

    def accumulate(self, state, t, x, sig, scratch):
        (acc,) = state
        vals = self.fn(t, x) if self.time_dependent else self.fn(x)
        np.add(acc, vals, out=acc)


def _run_chunk(ctrl, cfg, weights, start, stop, noise_factory):
    """Simulate paths [start, stop) and return their weight sums."""
    n = stop - start
    n_steps = cfg.n_steps
    sqrt_dt = math.sqrt(cfg.dt)
    make_gen = noise_factory or (lambda i: path_generator(cfg.seed, i))
    gens = [make_gen(i) for i in range(start, stop)]

    x = np.full(n, float(cfg.x0))
    scratch = np.empty(n)
    states = [w.make_state(n) for w in weights]
    width = min(BLOCK_STEPS, max(n_steps, 1))
    stage = np.empty((n, width))        # per-path rows: contiguous for filling
    block = np.empty((width, n))        # per-step rows: contiguous for stepping
    alive = np.ones(n, dtype=bool)
    aborted = []

    step = 0
    while step < n_steps:
        nb = min(BLOCK_STEPS, n_steps - step)
        for i, g in enumerate(gens):
            g.standard_normal(out=stage[i, :nb])
        np.multiply(stage[:, :nb].T, sqrt_dt, out=block[:nb])
        for j in range(nb):
            t = step * cfg.dt
            sig = np.asarray(ctrl.diffusion(t, x), dtype=float)
            if sig.ndim == 0:
                sig = float(sig)  # scalar stays scalar: no per-step fill
            for w, st in zip(weights, states):
                w.accumulate(st, t, x, sig, scratch)
            beta = np.asarray(ctrl.drift(t, x), dtype=float)
            if beta.ndim:
                np.multiply(beta, cfg.dt, out=scratch)
                x += scratch
            elif beta:
                x += float(beta) * cfg.dt
            np.multiply(sig, block[j], out=scratch)
            x += scratch
            step += 1
        finite = np.isfinite(x)
        if not finite.all():
            newly = alive & ~finite
            if newly.any():
                aborted.extend((start + i) for i in np.flatnonzero(newly))
                alive &= finite
                x[~alive] = np.nan

    sums = [st[0] * cfg.dt for st in states]
    for s in sums:
        s[~alive] = np.nan
    return sums, aborted


def path_weight_sums(ctrl: FeedbackControl, cfg: SimConfig, weights,
                     threads: int = 1, noise_factory=None):
    """Per-path integrals sum_i weight(t_i, X_{t_i}) dt for each weight.

    Returns (arrays, aborted_indices): one (n_paths,) array per weight, with
    NaN entries for paths that left the finite range.  The result is
    independent of ``threads``.
    """
    n = cfg.n_paths
    outs = [np.empty(n) for _ in weights]
    chunks = [(s, min(s + CHUNK_PATHS, n)) for s in range(0, n, CHUNK_PATHS)]
    aborted: list[int] = []

    def run(bounds):
        return bounds, _run_chunk(ctrl, cfg, weights, bounds[0], bounds[1],
                                  noise_factory)

    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(run, chunks))
    else:
        results = [run(c) for c in chunks]

    for (start, stop), (sums, bad) in results:
        for out, s in zip(outs, sums):
            out[start:stop] = s
        aborted.extend(bad)
    aborted.sort()
    if aborted:
        warnings.warn(f"{len(aborted)} of {n} paths hit a non-finite state "
                      f"and were aborted", RuntimeWarning)
    return outs, aborted


def simulate_paths(ctrl: FeedbackControl, cfg: SimConfig, noise_factory=None):
    """Yield (times, states) per path; debug-scale trajectory materialization.

    Uses the same substreams and block sizes as the estimators, so the
    trajectories match the streamed runs exactly.
    """
    n_steps = cfg.n_steps
    times = np.arange(n_steps + 1) * cfg.dt
    sqrt_dt = math.sqrt(cfg.dt)
    make_gen = noise_factory or (lambda i: path_generator(cfg.seed, i))
    for p in range(cfg.n_paths):
        g = make_gen(p)
        xs = np.empty(n_steps + 1)
        xs[0] = cfg.x0
        step = 0
        ok = True
        while step < n_steps and ok:
            nb = min(BLOCK_STEPS, n_steps - step)
            z = g.standard_normal(nb)
            for j in range(nb):
                t = step * cfg.dt
                xi = xs[step]
                # same op order as the chunked engine, so paths match bit for bit
                xn = xi + float(ctrl.drift(t, xi)) * cfg.dt \
                    + float(ctrl.diffusion(t, xi)) * (sqrt_dt * z[j])
                xs[step + 1] = xn
                step += 1
                if not math.isfinite(xn):
                    warnings.warn(f"path {p} aborted at step {step}: "
                                  f"non-finite state", RuntimeWarning)
                    xs[step:] = np.nan
                    ok = False
                    break
        yield times, xs


def _window_resolution_check(ctrl, cfg):
    sig = ctrl.sigma_max
    if sig is None:
        return
    badness = cfg.dt * cfg.n_window ** 2 * sig * sig
    if badness > 0.1:
        warnings.warn(
            f"window under-resolved: dt * N^2 * sigma_max^2 = {badness:.3g} > 0.1; "
            f"decrease dt or N", UnderResolvedWindowWarning)


def _estimate(values: np.ndarray, kind: str) -> OccupationEstimate:
    values = values[np.isfinite(values)]
    n = values.size
    if n == 0:
        raise DomainError("no completed paths to average")
    mean = float(values.mean())
    se = float(values.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return OccupationEstimate(mean, se, n, kind)


def estimate_occupation_density(ctrl: FeedbackControl, cfg: SimConfig, y: float,
                                threads: int = 1,
                                noise_factory=None) -> OccupationEstimate:
    """Window estimator of the expected occupation density at the level y.

    Per path: (N / 2) * sum_i 1{|X_{t_i} - y| <= 1/N} dt over the left
    endpoints of the Euler grid; mean and standard error across paths.
    """
    _window_resolution_check(ctrl, cfg)
    if cfg.n_steps == 0:
        return OccupationEstimate(0.0, 0.0, cfg.n_paths, "window")
    (sums,), _ = path_weight_sums(ctrl, cfg, [_WindowSum(y, cfg.n_window)],
                                  threads=threads, noise_factory=noise_factory)
    return _estimate(0.5 * cfg.n_window * sums, "window")


def estimate_local_time(ctrl: FeedbackControl, cfg: SimConfig, y: float,
                        threads: int = 1,
                        noise_factory=None) -> OccupationEstimate:
    """Local-time estimator of the occupation density at y.

    Accumulates the sigma^2-weighted window sum, which estimates the local
    time at y, then divides by sigma(y)^2.  Requires a state-continuous
    diffusion map; agrees with the window estimator as N grows.
    """
    _window_resolution_check(ctrl, cfg)
    sig_y = float(np.asarray(ctrl.diffusion(0.0, np.asarray([y]))).reshape(-1)[0])
    if sig_y <= 0.0:
        raise DomainError(f"diffusion at the level must be positive, got {sig_y}")
    if cfg.n_steps == 0:
        return OccupationEstimate(0.0, 0.0, cfg.n_paths, "local_time")
    (sums,), _ = path_weight_sums(ctrl, cfg, [_SigmaWindowSum(y, cfg.n_window)],
                                  threads=threads, noise_factory=noise_factory)
    vals = 0.5 * cfg.n_window * sums / (sig_y * sig_y)
    return _estimate(vals, "local_time")


def bias_budget(box: CoefficientBox, dt: float, n_window: float) -> float:
    """Discretization allowance for window estimates vs the exact bound.

    c * (N b sqrt(dt) + b^2 k dt N): the first term covers window crossings
    missed between grid points, the second the drift displacement per step.
    """
    return BIAS_CALIBRATION * (n_window * box.b * math.sqrt(dt)
                               + box.b * box.b * box.k * dt * n_window)


def suboptimality_budget(box: CoefficientBox, T: float,
                         m: MollificationParams) -> float:
    """Worst-case gap of the ramp control below the bound, ~ M^(-1/3).

    The constant is 2 * max(2^(5/2) b T^(1/6) H(0,T)^(1/3) / (a^2 sqrt(pi)),
    8 b^2 k H(0,T) / a^2); it is valid but conservative.
    """
    if T <= 0.0:
        raise DomainError(f"need T > 0, got {T}")
    h0 = distance_bound(box, 0.0, T).value
    a2 = box.a * box.a
    first = 2.0 ** 2.5 * box.b * T ** (1.0 / 6.0) * h0 ** (1.0 / 3.0) \
        / (a2 * math.sqrt(math.pi))
    second = 8.0 * box.b * box.b * box.k * h0 / a2
    return 2.0 * max(first, second) / m.M ** (1.0 / 3.0)
