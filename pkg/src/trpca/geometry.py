"""Angles, the flat torus metric and circular/Frechet summaries.

All angles are radians in ``[-pi, pi)``. Samples of torus points are
``(n, 2)`` arrays whose columns are ``theta1`` and ``theta2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DomainError, InsufficientDataError, UndefinedMeanError

TWO_PI = 2.0 * np.pi

_FRECHET_GRID = 1000
_TIE_TOL = 1e-12
_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


class TorusPoint(NamedTuple):
    theta1: float
    theta2: float

    @classmethod
    def of(cls, theta1, theta2):
        """Build a point, wrapping both coordinates into ``[-pi, pi)``."""
        return cls(float(cmod(theta1)), float(cmod(theta2)))


@dataclass(frozen=True)
class FrechetSummary:
    """Frechet (intrinsic) mean and unnormalized variance of a torus sample.

    ``unique`` is False when a marginal objective had two minimizers within
    ``1e-12``; the smaller angle is reported in that case.
    """

    mean: TorusPoint
    total_variance: float
    marginal_variances: tuple
    unique: bool = True


def cmod(x):
    """Wrap angles into ``[-pi, pi)`` via ``(x + pi) mod 2pi - pi``.

    Works on scalars and arrays. Raises :class:`DomainError` on non-finite input.

    >>> float(cmod(3 * np.pi / 2))
    -1.5707963267948966
    """
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("cmod requires finite input")
    out = np.mod(arr + np.pi, TWO_PI) - np.pi
    # mod can round up to exactly 2pi for tiny negative arguments
    out = np.where(out >= np.pi, -np.pi, out)
    if out.ndim == 0:
        return float(out)
    return out


def as_points(sample):
    """Coerce a sample to a wrapped ``(n, 2)`` float array."""
    pts = np.asarray(sample, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(1, 2)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise DomainError(f"expected an (n, 2) array of angles, got shape {pts.shape}")
    return cmod(pts).reshape(-1, 2)


def circ_dist(a, b):
    """Geodesic distance on the circle, ``min(|a - b|, 2pi - |a - b|)``."""
    d = np.abs(np.mod(np.asarray(a, float) - np.asarray(b, float), TWO_PI))
    return np.minimum(d, TWO_PI - d)


def torus_dist(a, b):
    """Flat-torus distance between points (broadcasts over leading axes)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    d1 = circ_dist(a[..., 0], b[..., 0])
    d2 = circ_dist(a[..., 1], b[..., 1])
    out = np.sqrt(d1 * d1 + d2 * d2)
    return float(out) if out.ndim == 0 else out


def circular_mean(sample):
    """Extrinsic circular mean ``atan2(mean sin, mean cos)`` wrapped to ``[-pi, pi)``."""
    x = np.asarray(sample, dtype=float).ravel()
    if x.size == 0:
        raise InsufficientDataError("circular mean of an empty sample")
    s = np.mean(np.sin(x))
    c = np.mean(np.cos(x))
    if np.hypot(s, c) <= 1e-12:
        raise UndefinedMeanError("resultant length is zero; circular mean undefined")
    return cmod(np.arctan2(s, c))


def mean_resultant_length(sample):
    x = np.asarray(sample, dtype=float).ravel()
    return float(np.hypot(np.mean(np.sin(x)), np.mean(np.cos(x))))


def golden_minimize(fun, lo, hi, tol=1e-10, max_iter=200):
    """Vectorized golden-section search of ``fun`` on the brackets ``[lo, hi]``.

    ``fun`` maps an array of abscissas to an array of values of the same
    shape; each entry is an independent 1-D problem. Returns the abscissas
    and the attained values.
    """
    a = np.array(lo, dtype=float, copy=True)
    b = np.array(hi, dtype=float, copy=True)
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc = fun(c)
    fd = fun(d)
    for _ in range(max_iter):
        if np.all(np.abs(b - a) <= tol):
            break
        left = fc < fd
        a, b = np.where(left, a, c), np.where(left, d, b)
        new_c = np.where(left, b - _GOLDEN * (b - a), d)
        new_d = np.where(left, c, a + _GOLDEN * (b - a))
        f_new = fun(np.where(left, new_c, new_d))
        fc, fd = np.where(left, f_new, fd), np.where(left, fc, f_new)
        c, d = new_c, new_d
    x = 0.5 * (a + b)
    return x, fun(x)


def _frechet_objective(candidates, x):
    """Sum of squared circular distances from each candidate to the sample."""
    out = np.empty(candidates.shape, dtype=float)
    flat = candidates.ravel()
    res = out.ravel()
    chunk = max(1, 2_000_000 // max(x.size, 1))
    for start in range(0, flat.size, chunk):
        d = circ_dist(flat[start:start + chunk, None], x[None, :])
        res[start:start + chunk] = np.sum(d * d, axis=1)
    return out


def frechet_circle(sample):
    """Frechet mean and variance of a circular sample.

    The objective is scanned at every observation and on a uniform
    1000-point grid; each grid/observation local minimum whose value is
    competitive is refined by golden-section search. Returns
    ``(mean, variance, unique)``.
    """
    x = cmod(np.asarray(sample, dtype=float).ravel())
    x = np.atleast_1d(x)
    if x.size == 0:
        raise InsufficientDataError("Frechet mean of an empty sample")
    grid = -np.pi + TWO_PI * np.arange(_FRECHET_GRID) / _FRECHET_GRID
    cand = np.unique(np.concatenate([x, grid]))
    vals = _frechet_objective(cand, x)
    # local minima of the periodic candidate sequence
    prev = np.roll(vals, 1)
    nxt = np.roll(vals, -1)
    is_min = (vals <= prev) & (vals <= nxt)
    best = vals.min()
    step = TWO_PI / _FRECHET_GRID
    # a local minimum can only beat the best scanned value by O(n step^2)
    slack = x.size * step * step + _TIE_TOL
    idx = np.flatnonzero(is_min & (vals <= best + slack))
    lo = cand[idx] - step
    hi = cand[idx] + step
    xs, fs = golden_minimize(lambda t: _frechet_objective(t, x), lo, hi, tol=1e-12)
    # the objective is quadratic between kinks: one fixed-point step is exact
    polished = xs - np.mean(cmod(xs[:, None] - x[None, :]), axis=1)
    fp = _frechet_objective(polished, x)
    take = fp <= fs
    xs = np.where(take, polished, xs)
    fs = np.where(take, fp, fs)
    # golden search may land on a worse point than the seed at a kink
    seed_better = vals[idx] < fs
    xs = np.where(seed_better, cand[idx], xs)
    fs = np.where(seed_better, vals[idx], fs)
    xs = cmod(np.atleast_1d(xs))
    mean, unique = _pick_minimizer(xs, fs, step)
    polished = cmod(mean - np.mean(cmod(mean - x)))
    f_pol, f_mean = _frechet_objective(np.array([polished, mean]), x)
    if f_pol <= f_mean + _TIE_TOL * max(1.0, f_mean):
        mean = polished
    return mean, float(_frechet_objective(np.array([mean]), x)[0]), unique


def _pick_minimizer(xs, fs, step):
    """Best refined minimum; ties within 1e-12 go to the smallest angle.

    Refined minima closer than ``step`` on the circle are the same basin and
    only the best of them is kept.
    """
    order = np.argsort(fs, kind="stable")
    reps, rep_vals = [], []
    for i in order:
        if all(circ_dist(xs[i], r) > step for r in reps):
            reps.append(xs[i])
            rep_vals.append(fs[i])
    reps = np.array(reps)
    rep_vals = np.array(rep_vals)
    tied = reps[rep_vals <= rep_vals[0] + _TIE_TOL]
    return float(tied.min()), bool(tied.size == 1)


def frechet_summary(sample):
    """Frechet mean and (unnormalized) variance of a sample on the torus.

    By the product structure the minimization splits into the two marginals,
    and the total variance is the sum of the marginal ones.
    """
    pts = as_points(sample)
    if pts.shape[0] == 0:
        raise InsufficientDataError("Frechet summary of an empty sample")
    m1, v1, u1 = frechet_circle(pts[:, 0])
    m2, v2, u2 = frechet_circle(pts[:, 1])
    return FrechetSummary(
        mean=TorusPoint(m1, m2),
        total_variance=v1 + v2,
        marginal_variances=(v1, v2),
        unique=u1 and u2,
    )
