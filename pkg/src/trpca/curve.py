"""Fourier parametrization of a connected ridge and projections onto it.

A connected ridge that is a graph over its index coordinate ``j`` is
written, relative to its location ``mu``, as ``theta_l = R(theta_j)``. The
curve keeps the truncated cosine series of ``cos R`` and sine series of
``sin R`` and evaluates

    r(phi) = cmod(mu_l + rho(phi - mu_j) - rho(0)),  rho = atan2(S, C).

It is then reparametrized by arc length, rescaled to a period of ``2 pi``
and centered so that ``alpha = 0`` is ``mu``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.interpolate import CubicSpline, PchipInterpolator
from scipy.spatial import cKDTree

from .errors import DomainError, InsufficientDataError, NumericError, ParametrizationError
from .geometry import TWO_PI, TorusPoint, cmod, golden_minimize

DEFAULT_M = 15
ARCLEN_NODES = 1024
PROJECTION_GRID = 1024
PROJECTION_TOL = 1e-11
TIE_TOL = 1e-9

_GL_COEF = 8     # Gauss-Legendre nodes per interpolation interval (coefficients)
_GL_ARC = 16     # Gauss-Legendre nodes per arc-length table interval
_GL_PARTIAL = 6  # nodes for the sub-interval piece used by the Newton step
_FOLD_JUMP = np.pi / 8
_MAX_GAP = np.pi / 4


@dataclass(frozen=True)
class FourierRidge:
    """Truncated Fourier curve ``r(phi)`` plus its arc-length table.

    ``a`` holds ``a_0..a_m`` and ``b`` holds ``b_1..b_m``. ``arclen_t`` and
    ``arclen_L`` tabulate ``L(t)``, the length from ``phi = mu_j`` to
    ``mu_j + t``; both are empty until :func:`arclength_param` runs.
    """

    a: np.ndarray
    b: np.ndarray
    m: int
    index_coord: int
    mu: TorusPoint
    total_length_R: float = float("nan")
    arclen_t: np.ndarray = field(default_factory=lambda: np.empty(0))
    arclen_L: np.ndarray = field(default_factory=lambda: np.empty(0))
    _inverse: object = field(default=None, repr=False, compare=False)
    _table: object = field(default=None, repr=False, compare=False)

    @property
    def has_arclength(self):
        return self.arclen_t.size > 0

    @property
    def mu_j(self):
        return self.mu[self.index_coord - 1]

    @property
    def table(self):
        """``(alphas, points)`` on the 1024-point projection grid."""
        _require_arclength(self)
        return self._table

    def scaled(self, alpha):
        return eval_scaled(self, alpha)

    def scaled_tangent(self, alpha):
        return tangent(self, alpha)

    @property
    def mu_l(self):
        return self.mu[2 - self.index_coord]


# ---------------------------------------------------------------------------
# Fourier series pieces


def _series(fr, theta):
    """``C_m``, ``S_m`` and their derivatives at ``theta``."""
    theta = np.asarray(theta, dtype=float)
    k = np.arange(1, fr.m + 1)
    kt = theta[..., None] * k
    cos_kt, sin_kt = np.cos(kt), np.sin(kt)
    a, b = fr.a[1:], fr.b
    c = 0.5 * fr.a[0] + cos_kt @ a
    s = sin_kt @ b
    dc = -(sin_kt @ (k * a))
    ds = cos_kt @ (k * b)
    return c, s, dc, ds


def rho(fr, theta):
    """``atan2(S_m, C_m)`` at ``theta``."""
    c, s, _, _ = _series(fr, theta)
    return np.arctan2(s, c)


def rho_prime(fr, theta):
    """Derivative of :func:`rho`, ``(S' C - S C') / (S^2 + C^2)``."""
    c, s, dc, ds = _series(fr, theta)
    den = s * s + c * c
    if np.any(den <= 1e-300):
        raise NumericError("Fourier curve passes through the origin of (C, S)")
    return (ds * c - s * dc) / den


def _to_points(fr, idx, other):
    if fr.index_coord == 1:
        return np.stack([idx, other], axis=-1)
    return np.stack([other, idx], axis=-1)


def eval_curve(fr, phi):
    """Torus point(s) ``(phi, r(phi))`` in ``(theta1, theta2)`` order.

    ``phi`` is the value of the index coordinate.
    """
    phi = np.asarray(phi, dtype=float)
    other = cmod(fr.mu_l + rho(fr, phi - fr.mu_j) - rho(fr, 0.0))
    pts = _to_points(fr, cmod(phi), other)
    return pts


# ---------------------------------------------------------------------------
# fitting


def _zero_centered_graph(ridge):
    """Sorted index values in ``[0, 2pi)``, unwrapped other values and the
    winding number of the zero-centered ridge."""
    pts = np.asarray(ridge.ordered_points, dtype=float)
    rel = cmod(pts - np.array(ridge.mu)).reshape(-1, 2)
    j = ridge.index_coord - 1
    x = np.mod(rel[:, j], TWO_PI)
    x = np.where(x >= TWO_PI, 0.0, x)
    y = rel[:, 1 - j]
    order = np.argsort(x, kind="stable")
    x, y = x[order], y[order]
    y = np.unwrap(y)
    y = y - y[0] + cmod(y[0])
    # merge points sharing an index value (both scan directions can hit them)
    keep = np.concatenate([[True], np.diff(x) > 1e-12])
    if not keep.all():
        groups = np.cumsum(keep) - 1
        spread = np.zeros(groups[-1] + 1)
        np.maximum.at(spread, groups, np.abs(y - y[keep][groups]))
        if spread.max() > _FOLD_JUMP:
            raise ParametrizationError("ridge is multivalued in the index coordinate")
        x, y = x[keep], y[keep]
    if np.any(np.abs(np.diff(y)) > _FOLD_JUMP):
        raise ParametrizationError("ridge is multivalued in the index coordinate")
    # closing the loop decides the winding around the other coordinate
    winding = int(np.round((y[-1] + cmod(y[0] - y[-1]) - y[0]) / TWO_PI))
    closing = y[0] + TWO_PI * winding - y[-1]
    gaps = np.diff(np.concatenate([x, [x[0] + TWO_PI]]))
    if abs(closing) > _FOLD_JUMP or gaps.max() > _MAX_GAP:
        raise ParametrizationError("ridge does not close up over the index coordinate")
    return x, y, winding


def _periodic_pchip(x, y, winding):
    """Monotone cubic interpolant of the zero-centered ridge over one period,
    with neighbouring periods attached so the ends join smoothly."""
    shift = TWO_PI * winding
    xx = np.concatenate([x[-3:] - TWO_PI, x, x[:3] + TWO_PI])
    yy = np.concatenate([y[-3:] - shift, y, y[:3] + shift])
    return PchipInterpolator(xx, yy, extrapolate=False)


def fourier_fit(ridge, m=DEFAULT_M):
    """Fourier coefficients of a connected ridge.

    The zero-centered ridge ``R`` is interpolated by a periodic monotone
    cubic over the index coordinate; ``a_k`` and ``b_k`` are the Fourier
    integrals of ``cos R`` and ``sin R``, evaluated by Gauss-Legendre
    quadrature on every interpolation interval.
    """
    if m < 1:
        raise DomainError("m must be at least 1")
    n_pts = np.asarray(ridge.ordered_points).shape[0]
    if n_pts < 2 * m + 2:
        raise InsufficientDataError(f"need at least {2 * m + 2} ridge points, got {n_pts}")
    x, y, winding = _zero_centered_graph(ridge)
    if x.size < 2 * m + 2:
        raise InsufficientDataError(f"need at least {2 * m + 2} distinct ridge points")
    interp = _periodic_pchip(x, y, winding)
    knots = np.concatenate([[0.0], x[(x > 0) & (x < TWO_PI)], [TWO_PI]])
    knots = np.unique(knots)
    gx, gw = np.polynomial.legendre.leggauss(_GL_COEF)
    lo, hi = knots[:-1, None], knots[1:, None]
    nodes = (0.5 * (hi - lo) * gx + 0.5 * (hi + lo)).ravel()
    weights = (0.5 * (hi - lo) * gw).ravel()
    r = interp(nodes)
    k = np.arange(m + 1)
    theta = np.where(nodes > np.pi, nodes - TWO_PI, nodes)
    cos_r = np.cos(r) * weights
    sin_r = np.sin(r) * weights
    a = np.cos(np.outer(k, theta)) @ cos_r / np.pi
    b = np.sin(np.outer(k[1:], theta)) @ sin_r / np.pi
    return FourierRidge(a=a, b=b, m=m, index_coord=ridge.index_coord, mu=TorusPoint.of(*ridge.mu))


def fourier_from_coefficients(a, b, index_coord, mu):
    """Rebuild a curve from stored coefficients and attach its arc length."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size != b.size + 1:
        raise DomainError("expected m + 1 cosine and m sine coefficients")
    fr = FourierRidge(a=a, b=b, m=b.size, index_coord=index_coord, mu=TorusPoint.of(*mu))
    return arclength_param(fr)


# ---------------------------------------------------------------------------
# arc length


def _speed(fr, t):
    rp = rho_prime(fr, t)
    return np.sqrt(1.0 + rp * rp)


def _segment_lengths(fr, lo, hi, nodes=_GL_ARC):
    gx, gw = np.polynomial.legendre.leggauss(nodes)
    lo = np.asarray(lo, dtype=float)[..., None]
    hi = np.asarray(hi, dtype=float)[..., None]
    nodes = 0.5 * (hi - lo) * gx + 0.5 * (hi + lo)
    return np.sum(0.5 * (hi - lo) * gw * _speed(fr, nodes), axis=-1)


def arclength_param(fr, nodes=ARCLEN_NODES):
    """Tabulate ``L(t)`` on ``nodes`` equispaced ``t`` in ``[0, 2pi]``.

    Each table interval is integrated with 16-point Gauss-Legendre
    quadrature. The inverse ``L^-1`` is served by a monotone cubic
    interpolant of the table followed by one Newton step.
    """
    t = TWO_PI * np.arange(nodes + 1) / nodes
    seg = _segment_lengths(fr, t[:-1], t[1:])
    L = np.concatenate([[0.0], np.cumsum(seg)])
    if not np.all(np.diff(L) > 0):
        raise NumericError("arc-length table is not strictly increasing")
    inverse = PchipInterpolator(L, t, extrapolate=False)
    out = replace(fr, total_length_R=float(L[-1]), arclen_t=t, arclen_L=L, _inverse=inverse)
    alphas = -np.pi + TWO_PI * np.arange(PROJECTION_GRID) / PROJECTION_GRID
    table = eval_scaled(out, alphas)
    return replace(out, _table=(alphas, table))


def arclength(fr, t):
    """``L(t)`` for ``t`` in ``[0, 2pi]`` (table lookup plus quadrature)."""
    _require_arclength(fr)
    t = np.asarray(t, dtype=float)
    n = fr.arclen_t.size - 1
    k = np.clip(np.floor(t / TWO_PI * n).astype(int), 0, n - 1)
    return fr.arclen_L[k] + _segment_lengths(fr, fr.arclen_t[k], t, _GL_PARTIAL)


def inverse_arclength(fr, s):
    """``t`` with ``L(t) = s`` for ``s`` in ``[0, R]``."""
    _require_arclength(fr)
    s = np.clip(np.asarray(s, dtype=float), 0.0, fr.total_length_R)
    t = fr._inverse(s)
    t = t - (arclength(fr, t) - s) / _speed(fr, t)
    return np.clip(t, 0.0, TWO_PI)


def _require_arclength(fr):
    if not fr.has_arclength:
        raise DomainError("arc-length table missing; call arclength_param first")


def eval_scaled(fr, alpha):
    """Scaled-centered arc-length curve ``r~(alpha)``; ``r~(0) = mu``."""
    _require_arclength(fr)
    alpha = cmod(alpha)
    R = fr.total_length_R
    s = np.mod(R / TWO_PI * np.asarray(alpha, dtype=float), R)
    t = inverse_arclength(fr, s)
    return eval_curve(fr, fr.mu_j + t)


def tangent(fr, alpha):
    """Derivative of ``r~`` with respect to ``alpha``, in ``(theta1, theta2)`` order."""
    _require_arclength(fr)
    alpha = cmod(alpha)
    R = fr.total_length_R
    s = np.mod(R / TWO_PI * np.asarray(alpha, dtype=float), R)
    t = inverse_arclength(fr, s)
    rp = rho_prime(fr, t)
    norm = R / TWO_PI / np.sqrt(1.0 + rp * rp)
    return _to_points(fr, norm, norm * rp)


# ---------------------------------------------------------------------------
# projection


@dataclass(frozen=True)
class Projection:
    """Projection arguments, feet, distances and near-tie flags."""

    alpha: np.ndarray
    foot: np.ndarray
    dist: np.ndarray
    tie: np.ndarray


def _dist_to(points, curve_pts):
    d = np.abs(np.mod(curve_pts - points + np.pi, TWO_PI) - np.pi)
    return np.sqrt(np.sum(d * d, axis=-1))


def _periodic_box(points):
    v = np.mod(np.asarray(points, dtype=float) + np.pi, TWO_PI)
    return np.where(v >= TWO_PI, 0.0, v)


def grid_distances(fr, points):
    """Minimum distance from each point to the 1024-point curve table."""
    tree = cKDTree(_periodic_box(fr.table[1]), boxsize=TWO_PI)
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    return tree.query(_periodic_box(pts))[0]


def project(fr, points, chunk=2048):
    """Project points onto ``r~`` (a :class:`FourierRidge` or :class:`TabulatedRidge`).

    The 1024-point table is scanned, the two best local minima are
    refined by golden-section search to ``1e-11`` in ``alpha``, and the
    better one is kept. When the two refined distances are within
    ``1e-9`` the smaller ``alpha`` is chosen and ``tie`` is set.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    alphas, table = fr.table
    n_grid = alphas.size
    step = TWO_PI / n_grid
    cands = np.empty((pts.shape[0], 2), dtype=int)
    for start in range(0, pts.shape[0], chunk):
        blk = pts[start:start + chunk]
        d = _dist_to(blk[:, None, :], table[None, :, :])
        local = (d <= np.roll(d, 1, axis=1)) & (d <= np.roll(d, -1, axis=1))
        masked = np.where(local, d, np.inf)
        best2 = np.argsort(masked, axis=1, kind="stable")[:, :2]
        # a single local minimum: refine it twice
        second_ok = np.isfinite(np.take_along_axis(masked, best2[:, 1:], axis=1))[:, 0]
        best2[:, 1] = np.where(second_ok, best2[:, 1], best2[:, 0])
        cands[start:start + chunk] = best2

    rows = np.repeat(pts, 2, axis=0)
    centers = alphas[cands.ravel()]

    def objective(a):
        return _dist_to(rows, fr.scaled(a))

    a_ref, d_ref = golden_minimize(objective, centers - step, centers + step, tol=PROJECTION_TOL)
    # the grid node itself can beat a refinement that slid into a kink
    d_node = objective(centers)
    better = d_node < d_ref
    a_ref = np.where(better, centers, a_ref)
    d_ref = np.where(better, d_node, d_ref)
    a_ref = cmod(a_ref).reshape(-1, 2)
    d_ref = d_ref.reshape(-1, 2)

    tie = np.abs(d_ref[:, 0] - d_ref[:, 1]) < TIE_TOL
    distinct = np.abs(cmod(a_ref[:, 0] - a_ref[:, 1])) > step
    tie &= distinct
    pick = np.where(d_ref[:, 1] < d_ref[:, 0], 1, 0)
    pick = np.where(tie, np.argmin(a_ref, axis=1), pick)
    alpha = np.take_along_axis(a_ref, pick[:, None], axis=1)[:, 0]
    dist = np.take_along_axis(d_ref, pick[:, None], axis=1)[:, 0]
    foot = fr.scaled(alpha).reshape(-1, 2)
    return Projection(alpha=alpha, foot=foot, dist=dist, tie=tie)


# ---------------------------------------------------------------------------
# export


def ridge_table(fr):
    """``(alpha, theta1, theta2)`` rows of the scaled curve on the projection grid."""
    alphas, pts = fr.table
    return np.column_stack([alphas, pts])


class TabulatedRidge:
    """Scaled curve rebuilt from an exported ``(alpha, theta1, theta2)`` table.

    Both coordinates are unwrapped along the table, their winding trend is
    removed, and the remainder is interpolated by a periodic cubic spline
    in ``alpha``. The table rows themselves serve as the projection grid,
    so projections onto a re-read table are reproducible exactly.
    """

    def __init__(self, rows):
        rows = np.asarray(rows, dtype=float)
        if rows.ndim != 2 or rows.shape[1] != 3 or rows.shape[0] < 8:
            raise DomainError("expected at least 8 rows of (alpha, theta1, theta2)")
        order = np.argsort(rows[:, 0], kind="stable")
        rows = rows[order]
        alphas, pts = rows[:, 0], rows[:, 1:]
        if np.any(np.diff(alphas) <= 0) or alphas[-1] - alphas[0] >= TWO_PI:
            raise DomainError("alpha column must be strictly increasing within one period")
        y = np.unwrap(pts, axis=0)
        closing = y[-1] + cmod(y[0] - y[-1])
        self.winding = np.round((closing - y[0]) / TWO_PI)
        knots = np.append(alphas, alphas[0] + TWO_PI)
        yy = np.vstack([y, y[0] + TWO_PI * self.winding])
        self._slope = self.winding.astype(float)
        self._a0 = alphas[0]
        self._spline = CubicSpline(knots, yy - np.outer(knots - self._a0, self._slope),
                                   bc_type="periodic", axis=0)
        self._table = (alphas, pts)
        self.mu = TorusPoint.of(*self.scaled(0.0))

    @property
    def table(self):
        return self._table

    def _shift(self, alpha):
        a = cmod(alpha)
        return self._a0 + np.mod(np.asarray(a, dtype=float) - self._a0, TWO_PI)

    def scaled(self, alpha):
        x = self._shift(alpha)
        return cmod(self._spline(x) + np.multiply.outer(x - self._a0, self._slope))

    def scaled_tangent(self, alpha):
        x = self._shift(alpha)
        return self._spline(x, 1) + self._slope


def polyline_length(points):
    """Length of a torus polyline, each step taken along the shortest arc."""
    pts = np.asarray(points, dtype=float)
    d = cmod(np.diff(pts, axis=0)).reshape(-1, 2)
    return float(np.sum(np.hypot(d[:, 0], d[:, 1])))
