"""Nonnegative profile functions f(y) and f(t, y) for path-integral bounds.

Profiles declare a finite support so the y-integrals stay honest: outside
[y_lo, y_hi] the profile is either exactly zero or dominated by a declared
``tail_sup``, for which an analytic tail certificate is added to the error
budget.  Profiles are serializable as piecewise-linear tables:

    y,f            one knot per row, linear in between, zero outside
    t,y,f          rectangular (t, y) grid, bilinear in between
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainError, SupportError


@dataclass(frozen=True)
class ProfileFunction:
    """Map y -> f(y) >= 0 supported (up to ``tail_sup``) on [y_lo, y_hi].

    ``breakpoints`` are known kinks or jumps inside the support; the outer
    quadrature splits there.
    """

    fn: Callable
    y_lo: float
    y_hi: float
    tail_sup: float = 0.0
    breakpoints: tuple = field(default=())
    label: str = "profile"

    def __post_init__(self):
        if not (math.isfinite(self.y_lo) and math.isfinite(self.y_hi)):
            raise SupportError("profile support must be a finite interval; "
                               "declare [y_lo, y_hi] plus a tail bound")
        if self.y_lo >= self.y_hi:
            raise DomainError(f"empty support [{self.y_lo}, {self.y_hi}]")
        if self.tail_sup < 0.0:
            raise DomainError("tail_sup must be >= 0")

    def __call__(self, y):
        return np.asarray(self.fn(np.asarray(y, dtype=float)), dtype=float)

    def check_nonnegative(self, n_samples: int = 257, tol: float = 1e-12):
        ys = np.linspace(self.y_lo, self.y_hi, n_samples)
        vals = self(ys)
        if vals.min() < -tol:
            raise DomainError(f"profile {self.label!r} is negative at "
                              f"y={ys[int(vals.argmin())]:.6g}: {vals.min():.3g}")


@dataclass(frozen=True)
class TimeProfileFunction:
    """Map (t, y) -> f(t, y) >= 0 on [0, t_hi] x [y_lo, y_hi].

    ``nonincreasing_in_t`` declares the monotonicity required by the
    time-refined bound; it is re-verified on a sample grid before use.
    """

    fn: Callable
    t_hi: float
    y_lo: float
    y_hi: float
    nonincreasing_in_t: bool = True
    breakpoints: tuple = field(default=())
    label: str = "time-profile"

    def __post_init__(self):
        if not (math.isfinite(self.y_lo) and math.isfinite(self.y_hi)):
            raise SupportError("time profile needs a finite y support")
        if self.y_lo >= self.y_hi:
            raise DomainError(f"empty support [{self.y_lo}, {self.y_hi}]")
        if self.t_hi <= 0.0:
            raise DomainError(f"need t_hi > 0, got {self.t_hi}")

    def __call__(self, t, y):
        t = np.asarray(t, dtype=float)
        y = np.asarray(y, dtype=float)
        return np.asarray(self.fn(t, y), dtype=float)

    def check_monotone(self, n_t: int = 33, n_y: int = 65, tol: float = 1e-9):
        """Verify f is nonincreasing in t on a sample grid."""
        if not self.nonincreasing_in_t:
            raise DomainError(f"time profile {self.label!r} does not declare "
                              f"monotonicity in t")
        ts = np.linspace(0.0, self.t_hi, n_t)
        ys = np.linspace(self.y_lo, self.y_hi, n_y)
        prev = self(float(ts[0]), ys)
        for t in ts[1:]:
            cur = self(float(t), ys)
            rise = float((cur - prev).max())
            if rise > tol:
                j = int((cur - prev).argmax())
                raise DomainError(
                    f"time profile {self.label!r} increases in t near "
                    f"(t={t:.6g}, y={ys[j]:.6g}) by {rise:.3g}")
            prev = cur


def indicator_profile(lo: float, hi: float) -> ProfileFunction:
    """Indicator of [lo, hi]."""
    def fn(y):
        return ((y >= lo) & (y <= hi)).astype(float)
    return ProfileFunction(fn, lo, hi, breakpoints=(lo, hi),
                           label=f"indicator[{lo},{hi}]")


def tent_profile(lo: float, peak: float, hi: float,
                 height: float = 1.0) -> ProfileFunction:
    """Piecewise-linear tent rising to ``height`` at ``peak``."""
    if not lo < peak < hi:
        raise DomainError("need lo < peak < hi")
    return piecewise_linear_profile([lo, peak, hi], [0.0, height, 0.0],
                                    label=f"tent[{lo},{peak},{hi}]")


def gaussian_profile(center: float, width: float,
                     support_radius: float = 8.0) -> ProfileFunction:
    """Gaussian bump with declared support +- support_radius * width.

    The mass outside the declared support is covered by ``tail_sup``.
    """
    if width <= 0.0:
        raise DomainError("need width > 0")

    def fn(y):
        z = (y - center) / width
        return np.exp(-0.5 * z * z)

    edge = math.exp(-0.5 * support_radius ** 2)
    return ProfileFunction(fn, center - support_radius * width,
                           center + support_radius * width,
                           tail_sup=edge, label="gaussian")


def piecewise_linear_profile(ys, fs, label: str = "table") -> ProfileFunction:
    """Linear interpolation through (y, f) knots, zero outside the knots."""
    ys = np.asarray(ys, dtype=float)
    fs = np.asarray(fs, dtype=float)
    if ys.ndim != 1 or ys.size < 2 or ys.shape != fs.shape:
        raise DomainError("need matching 1-D knot arrays with >= 2 entries")
    if not np.all(np.diff(ys) > 0):
        raise DomainError("knot positions must be strictly increasing")
    if fs.min() < 0.0:
        raise DomainError("profile values must be >= 0")

    def fn(y):
        return np.interp(y, ys, fs, left=0.0, right=0.0)

    return ProfileFunction(fn, float(ys[0]), float(ys[-1]),
                           breakpoints=tuple(float(v) for v in ys[1:-1]),
                           label=label)


def time_table_profile(ts, ys, grid, label: str = "time-table") -> TimeProfileFunction:
    """Bilinear interpolation of f over a rectangular (t, y) grid.

    ``grid`` has shape (len(ts), len(ys)); values are clamped to zero outside
    the y-knots and held constant beyond the t-knots.
    """
    ts = np.asarray(ts, dtype=float)
    ys = np.asarray(ys, dtype=float)
    grid = np.asarray(grid, dtype=float)
    if grid.shape != (ts.size, ys.size):
        raise DomainError(f"grid shape {grid.shape} does not match "
                          f"({ts.size}, {ys.size})")
    if not (np.all(np.diff(ts) > 0) and np.all(np.diff(ys) > 0)):
        raise DomainError("knot positions must be strictly increasing")
    if grid.min() < 0.0:
        raise DomainError("profile values must be >= 0")

    def fn(t, y):
        t = np.clip(np.asarray(t, dtype=float), ts[0], ts[-1])
        y = np.asarray(y, dtype=float)
        if y.ndim == 0:
            # y fixed: reduce the grid to a t-series once, then interp in t
            series = np.array([np.interp(float(y), ys, row, left=0.0, right=0.0)
                               for row in grid])
            return np.interp(t, ts, series)
        # t fixed (or broadcastable scalar): blend the two bracketing rows
        tval = float(t) if t.ndim == 0 else None
        if tval is None:
            raise DomainError("time table profile expects scalar t or scalar y")
        i = min(int(np.searchsorted(ts, tval, side="right")) - 1, ts.size - 2)
        i = max(i, 0)
        w = (tval - ts[i]) / (ts[i + 1] - ts[i])
        lo = np.interp(y, ys, grid[i], left=0.0, right=0.0)
        hi = np.interp(y, ys, grid[i + 1], left=0.0, right=0.0)
        return (1.0 - w) * lo + w * hi

    return TimeProfileFunction(fn, float(ts[-1]), float(ys[0]), float(ys[-1]),
                               breakpoints=tuple(float(v) for v in ys[1:-1]),
                               label=label)


def load_profile_csv(path):
    """Load a profile table; header decides the kind (``y,f`` or ``t,y,f``)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DomainError(f"{path}: empty profile file")
        header = [h.strip().lower() for h in header]
        rows = [[float(v) for v in row] for row in reader if row]
    if header == ["y", "f"]:
        if len(rows) < 2:
            raise DomainError(f"{path}: need at least 2 knots")
        data = np.asarray(rows)
        order = np.argsort(data[:, 0])
        return piecewise_linear_profile(data[order, 0], data[order, 1],
                                        label=str(path))
    if header == ["t", "y", "f"]:
        data = np.asarray(rows)
        ts = np.unique(data[:, 0])
        ys = np.unique(data[:, 1])
        if ts.size * ys.size != data.shape[0]:
            raise DomainError(f"{path}: (t, y) rows do not form a full "
                              f"rectangular grid")
        grid = np.full((ts.size, ys.size), np.nan)
        ti = np.searchsorted(ts, data[:, 0])
        yi = np.searchsorted(ys, data[:, 1])
        grid[ti, yi] = data[:, 2]
        if np.isnan(grid).any():
            raise DomainError(f"{path}: duplicate or missing grid entries")
        return time_table_profile(ts, ys, grid, label=str(path))
    raise DomainError(f"{path}: header must be 'y,f' or 't,y,f', got {header}")
