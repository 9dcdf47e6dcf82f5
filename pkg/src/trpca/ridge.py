"""Density ridges of bivariate densities.

Two solvers are provided: the implicit-equation scan (sign changes of the
projected-gradient equation along a grid of columns, refined by bisection)
and the Euler integral-curve iteration. Both work from a
:class:`DensityOracle`, so the same code handles periodic (torus) and planar
densities. :func:`connected_component` extracts the ridge piece through a
given location and :func:`explicit_edge_ridge` returns the closed-form ridges
of the axis-aligned and diagonal limit cases.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.spatial import cKDTree

from .errors import ConvergenceError, DomainError, SeedError
from .geometry import TWO_PI, TorusPoint, as_points, circ_dist, cmod, torus_dist
from .models import BsvmParams, BwcParams, DensityDerivatives, derivatives

DEFAULT_GRID_N = 500
DEFAULT_TOL = 1e-10
DEFAULT_H = 0.2
DEFAULT_CONV_TOL = 1e-5
DEFAULT_MAX_ITER = 10_000
EXPLICIT_POINTS = 512

_DEGENERATE_TOL = 1e-12
_GENUINE_TOL = 1e-6
_MAX_BISECT = 200
_MAX_SEEDS = 8
_TURN_PENALTY = 2.0


def default_delta(grid_n=DEFAULT_GRID_N):
    """Chaining radius: three grid steps."""
    return 3.0 * TWO_PI / grid_n


@dataclass(frozen=True)
class DensityOracle:
    """Derivative evaluator for a bivariate density.

    ``evaluate`` maps an ``(n, 2)`` array of points to
    :class:`~trpca.models.DensityDerivatives`. ``domain`` is ``"periodic"``
    for the torus or ``"planar"``, in which case ``bounds`` gives the box
    ``((lo1, hi1), (lo2, hi2))`` scanned by the solvers.
    """

    evaluate: Callable[[np.ndarray], DensityDerivatives]
    domain: str = "periodic"
    bounds: tuple = ((-np.pi, np.pi), (-np.pi, np.pi))
    evaluate_offset: Callable | None = None

    @property
    def periodic(self):
        return self.domain == "periodic"

    def at(self, origin, offsets):
        """Derivatives at ``origin + offsets``.

        Oracles that know their location evaluate ``offsets`` against
        ``origin - location`` directly, so a scan anchored at the location
        sees the same numbers wherever the location is.
        """
        if self.evaluate_offset is not None:
            return self.evaluate_offset(origin, offsets)
        pts = np.asarray(origin, dtype=float) + offsets
        return self.evaluate(cmod(pts) if self.periodic else pts)


def model_oracle(params):
    """Oracle for a BSvM or BWC parameter record."""
    located = np.array(params.mu, dtype=float)
    centered = replace(params, mu1=0.0, mu2=0.0)

    def evaluate_offset(origin, offsets):
        base = cmod(np.asarray(origin, dtype=float) - located)
        return derivatives(cmod(offsets + base), centered)

    return DensityOracle(lambda pts: derivatives(pts, params), evaluate_offset=evaluate_offset)


def gaussian_oracle(mean, cov, bounds=((-4.0, 4.0), (-4.0, 4.0))):
    """Planar normal density oracle; ``(d1, d2)`` is the gradient of ``log f``."""
    mean = np.asarray(mean, dtype=float)
    prec = np.linalg.inv(np.asarray(cov, dtype=float))
    norm = 1.0 / (TWO_PI * np.sqrt(np.linalg.det(cov)))

    def evaluate(pts):
        x = np.asarray(pts, dtype=float) - mean
        g = -x @ prec.T
        q = np.einsum("...i,ij,...j->...", x, prec, x)
        f = norm * np.exp(-0.5 * q)
        d1, d2 = g[..., 0], g[..., 1]
        return DensityDerivatives(f=f, d1=d1, d2=d2, u=d1 * d1 - prec[0, 0],
                                  v=d1 * d2 - prec[0, 1], w=d2 * d2 - prec[1, 1],
                                  scale=np.ones_like(f))

    return DensityOracle(evaluate, domain="planar", bounds=tuple(map(tuple, bounds)))


@dataclass(frozen=True)
class RidgeSet:
    """Unordered ridge points with solver metadata."""

    points: np.ndarray
    residuals: np.ndarray
    method: str
    index_coord: int = 1
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return self.points.shape[0]


@dataclass(frozen=True)
class ConnectedRidge:
    """Ridge component through ``mu``, ordered along the index coordinate.

    The first point is ``mu``; ``quadrant_sign`` records the quadrant
    filter applied (0 for none). ``extended`` is set when a diagonal ridge
    was imposed beyond the region where it is guaranteed to solve the
    ridge equations.
    """

    ordered_points: np.ndarray
    mu: TorusPoint
    quadrant_sign: int
    index_coord: int = 1
    extended: bool = False
    method: str = "implicit"


# ---------------------------------------------------------------------------
# closed-form 2x2 eigensystem and the ridge equations


def hessian_eig2(u, v, w):
    """Eigenvalues and unit eigenvectors of ``[[u, v], [v, w]]``.

    Returns ``(lam1, lam2, u1, u2, degenerate)`` with ``lam1 >= lam2``;
    eigenvectors are stacked on the last axis. ``u2`` comes from the closed
    form ``(2u - 2w + 2v - 2s, w - u + 4v - s)``, ``s = sqrt((w-u)^2 + 4v^2)``,
    which vanishes on a curve of non-isotropic Hessians; there the parallel
    vector ``(lam2 - w, v)`` or ``(v, lam2 - u)`` is used instead.
    ``degenerate`` flags isotropic Hessians, where ``u2`` is undefined.
    """
    u, v, w = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (u, v, w)))
    s = np.sqrt((w - u) ** 2 + 4.0 * v * v)
    lam1 = 0.5 * (u + w + s)
    lam2 = 0.5 * (u + w - s)
    vec = np.stack([2 * u - 2 * w + 2 * v - 2 * s, w - u + 4 * v - s], axis=-1)
    norm = np.linalg.norm(vec, axis=-1)
    scale = np.abs(u) + np.abs(v) + np.abs(w)
    ea = np.stack([lam2 - w, v], axis=-1)
    eb = np.stack([v, lam2 - u], axis=-1)
    na = np.linalg.norm(ea, axis=-1)
    nb = np.linalg.norm(eb, axis=-1)
    alt = np.where((na >= nb)[..., None], ea, eb)
    alt_norm = np.maximum(na, nb)
    weak = norm <= 1e-8 * np.maximum(scale, 1e-300)
    vec = np.where(weak[..., None], alt, vec)
    norm = np.where(weak, alt_norm, norm)
    degenerate = (np.abs(w - u) < _DEGENERATE_TOL) & (np.abs(v) < _DEGENERATE_TOL)
    safe = np.where(norm > 0, norm, 1.0)
    u2 = np.where(degenerate[..., None], 0.0, vec / safe[..., None])
    u1 = np.stack([-u2[..., 1], u2[..., 0]], axis=-1)
    return lam1, lam2, u1, u2, degenerate


def implicit_expr(d):
    """Left-hand side of the implicit ridge equation.

    ``D1 (2u - 2w + 2v - 2s) + D2 (w - u + 4v - s)``, i.e. the gradient dotted
    with the unnormalized second Hessian eigenvector.
    """
    s = np.sqrt((d.w - d.u) ** 2 + 4.0 * d.v * d.v)
    return d.d1 * (2 * d.u - 2 * d.w + 2 * d.v - 2 * s) + d.d2 * (d.w - d.u + 4 * d.v - s)


def eigvec_alignment(d):
    """``v (D1^2 - D2^2) + (w - u) D1 D2``: zero exactly where the gradient is
    an eigenvector of the Hessian (of either eigenvalue) or vanishes.

    Unlike :func:`implicit_expr` it involves no eigenvector, so it keeps its
    sign changes where the closed-form eigenvector degenerates.
    """
    return d.v * (d.d1 * d.d1 - d.d2 * d.d2) + (d.w - d.u) * d.d1 * d.d2


def eigenvalue_condition(d):
    """True where the second Hessian eigenvalue is negative."""
    s = np.sqrt((d.u - d.w) ** 2 + 4.0 * d.v * d.v)
    return 0.5 * (d.u + d.w - s) < 0


def projected_gradient(d):
    """Gradient of ``log f`` projected on the second Hessian eigenvector."""
    _, _, _, u2, degenerate = hessian_eig2(d.u, d.v, d.w)
    dot = d.d1 * u2[..., 0] + d.d2 * u2[..., 1]
    eta = (np.asarray(d.scale) * dot)[..., None] * u2
    return eta, dot, degenerate


def _is_ridge_point(d):
    """Eigenvalue condition, non-degenerate Hessian, and a genuine zero of the
    normalized projected gradient (the closed-form eigenvector can vanish and
    fake a sign change of the implicit expression)."""
    _, dot, degenerate = projected_gradient(d)
    grad = np.hypot(d.d1, d.d2)
    genuine = np.abs(dot) <= _GENUINE_TOL * grad + 1e-300
    critical = grad < 1e-12
    return eigenvalue_condition(d) & ~degenerate & (genuine | critical)


# ---------------------------------------------------------------------------
# implicit-equation solver


def _assemble(index_vals, other_vals, index_coord):
    if index_coord == 1:
        return np.stack([index_vals, other_vals], axis=-1)
    return np.stack([other_vals, index_vals], axis=-1)


def _axis_values(oracle, coord, n):
    """Scan nodes of one coordinate: offsets from the origin on the torus,
    absolute values across the box otherwise."""
    if oracle.periodic:
        return TWO_PI * np.arange(n) / n
    lo, hi = oracle.bounds[coord - 1]
    return np.linspace(lo, hi, n)


def ridge_implicit(oracle, index_coord=1, grid_n=DEFAULT_GRID_N, tol=DEFAULT_TOL,
                   origin=(0.0, 0.0), both=False):
    """Ridge points from sign changes of :func:`implicit_expr` along columns.

    For each of ``grid_n`` values of the index coordinate the other
    coordinate is scanned on ``grid_n`` nodes (cyclically on the torus).
    Each bracketing pair is bisected until ``|expr| < tol`` or the bracket
    reaches machine resolution (200 halvings at most); roots failing the
    eigenvalue condition, at isotropic Hessians, or produced by a vanishing
    eigenvector rather than a vanishing projected gradient are discarded.
    ``origin`` shifts both scan grids.

    Where the closed-form eigenvector vanishes on the ridge, the zero set
    of :func:`implicit_expr` crosses itself and the two roots can share one
    grid bracket, leaving no sign change. The columns are therefore also
    scanned for sign changes of :func:`eigvec_alignment` and the verified
    roots of both scans are merged.

    With ``both=True`` the scan is repeated with the roles of the
    coordinates swapped and the two root sets are merged. A single scan
    spaces roots far apart where the ridge is steep relative to the scan
    direction and misses pieces parallel to it; the merged set is dense
    along every piece, which is what chaining needs.
    """
    if both:
        first = ridge_implicit(oracle, index_coord, grid_n, tol, origin)
        second = ridge_implicit(oracle, 3 - index_coord, grid_n, tol, origin)
        pts = np.vstack([first.points, second.points])
        resid = np.concatenate([first.residuals, second.residuals])
        _, keep = np.unique(np.round(pts, 12), axis=0, return_index=True)
        keep = np.sort(keep)
        meta = {"grid_n": grid_n, "tol": tol, "both": True,
                "brackets": first.meta["brackets"] + second.meta["brackets"],
                "discarded": first.meta["discarded"] + second.meta["discarded"]}
        return RidgeSet(points=pts[keep], residuals=resid[keep], method="implicit",
                        index_coord=index_coord, meta=meta)
    if index_coord not in (1, 2):
        raise DomainError("index_coord must be 1 or 2")
    if grid_n < 64:
        raise DomainError("grid_n must be at least 64")
    if not tol > 0:
        raise DomainError("tol must be positive")
    other = 3 - index_coord
    idx_vals = _axis_values(oracle, index_coord, grid_n)
    oth_vals = _axis_values(oracle, other, grid_n)
    base = np.asarray(origin, dtype=float) if oracle.periodic else np.zeros(2)
    wrap = cmod if oracle.periodic else (lambda a: a)

    def evaluate(cols, vals):
        return oracle.at(base, _assemble(cols, vals, index_coord))

    ii, oo = np.meshgrid(idx_vals, oth_vals, indexing="ij")
    d_grid = evaluate(ii, oo)
    step = oth_vals[1] - oth_vals[0]
    # the alignment expression is cubic in the gradient and can drop below
    # tol away from a root, so its brackets are bisected to full resolution
    found = [_scan_columns(expr_fn, expr_fn(d_grid), ii, oo, step, evaluate, stop, oracle.periodic)
             for expr_fn, stop in ((implicit_expr, tol), (eigvec_alignment, 0.0))]
    cols = np.concatenate([f[0] for f in found])
    vals = np.concatenate([f[1] for f in found])

    # roots stay relative to the origin until they are verified
    offs = wrap(_assemble(cols, vals, index_coord)).reshape(-1, 2)
    _, first = np.unique(np.round(offs, 12), axis=0, return_index=True)
    offs = offs[np.sort(first)]
    d = oracle.at(base, offs)
    keep = _is_ridge_point(d)
    resid = np.abs(implicit_expr(d))
    pts, resid = wrap(base + offs[keep]).reshape(-1, 2), resid[keep]
    if pts.shape[0] == 0:
        warnings.warn("implicit-equation scan found no ridge points", RuntimeWarning)
    meta = {"grid_n": grid_n, "tol": tol, "brackets": int(sum(f[2] for f in found)),
            "discarded": int(np.count_nonzero(~keep))}
    return RidgeSet(points=pts, residuals=resid, method="implicit",
                    index_coord=index_coord, meta=meta)


def _scan_columns(expr_fn, expr, ii, oo, step, evaluate, tol, periodic):
    """Roots of ``expr_fn`` along each grid column: exact zeros at nodes plus
    bisected sign changes. Returns ``(columns, values, n_brackets)``."""
    nxt = np.roll(expr, -1, axis=1)
    if not periodic:
        nxt[:, -1] = expr[:, -1]
    ci, ck = np.nonzero(expr * nxt < 0)
    zi, zk = np.nonzero(expr == 0)
    lo = oo[ci, ck]
    hi = lo + step
    col = ii[ci, ck]
    f_lo = expr[ci, ck]
    active = np.ones(lo.shape, dtype=bool)
    eps = 4 * np.finfo(float).eps
    for _ in range(_MAX_BISECT):
        if not active.any():
            break
        k = np.flatnonzero(active)
        mid = 0.5 * (lo[k] + hi[k])
        f_mid = expr_fn(evaluate(col[k], mid))
        same = np.sign(f_mid) == np.sign(f_lo[k])
        lo[k] = np.where(same, mid, lo[k])
        f_lo[k] = np.where(same, f_mid, f_lo[k])
        hi[k] = np.where(same, hi[k], mid)
        hit = np.abs(f_mid) < tol
        lo[k[hit]] = hi[k[hit]] = mid[hit]
        narrow = hi[k] - lo[k] <= eps * np.maximum(1.0, np.abs(mid))
        active[k[hit | narrow]] = False
    roots = 0.5 * (lo + hi)
    return (np.concatenate([col, ii[zi, zk]]), np.concatenate([roots, oo[zi, zk]]), ci.size)


# ---------------------------------------------------------------------------
# Euler integral curves


def lattice_starts(n):
    """``n`` uniformly spread starting points on the torus.

    A rank-1 lattice with golden-ratio generator: unlike a tensor grid, no
    two points share a coordinate value, so flows that run close to one
    coordinate direction do not merge whole columns of starts.
    """
    if n < 1:
        raise DomainError("n must be positive")
    k = np.arange(n)
    phi = (np.sqrt(5.0) - 1.0) / 2.0
    return np.stack([-np.pi + TWO_PI * (k + 0.5) / n,
                     -np.pi + TWO_PI * np.mod(0.5 + k * phi, 1.0)], axis=1)


def ridge_euler(oracle, starts, h=DEFAULT_H, conv_tol=DEFAULT_CONV_TOL, max_iter=DEFAULT_MAX_ITER,
                stiff_limit=False):
    """Follow ``x <- x + h * eta(x)`` from every start, ``eta`` being the
    normalized projected gradient, until ``|eta| < conv_tol``.

    Converged endpoints satisfying the eigenvalue condition form the ridge
    set; on a planar domain endpoints outside the oracle's box are dropped.
    The number of starts that did not converge is kept in ``meta``.

    Explicit Euler overshoots across ridges whose normal curvature ``c``
    (of ``log f`` along the second eigenvector) exceeds ``2 / h``. With
    ``stiff_limit=True`` each point's step is capped at ``1 / |c|``; the
    fixed points of the iteration, and hence the ridge, are unchanged.
    """
    if not h > 0:
        raise DomainError("h must be positive")
    x = np.array(starts, dtype=float).reshape(-1, 2)
    if x.shape[0] == 0:
        raise DomainError("at least one start is required")
    wrap = cmod if oracle.periodic else (lambda a: a)
    x = wrap(x).reshape(-1, 2)
    active = np.ones(x.shape[0], dtype=bool)
    converged = np.zeros(x.shape[0], dtype=bool)
    iters = 0
    for iters in range(1, max_iter + 1):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        d = oracle.evaluate(x[idx])
        _, lam2, _, u2, _ = hessian_eig2(d.u, d.v, d.w)
        scale = np.broadcast_to(np.asarray(d.scale, dtype=float), lam2.shape)
        dot = d.d1 * u2[:, 0] + d.d2 * u2[:, 1]
        eta = (scale * dot)[:, None] * u2
        small = np.hypot(eta[:, 0], eta[:, 1]) < conv_tol
        converged[idx[small]] = True
        active[idx[small]] = False
        step = np.full(idx.size, h)
        if stiff_limit:
            curv = np.abs(scale * lam2) + (scale * dot) ** 2
            step = np.minimum(h, 1.0 / np.maximum(curv, 1e-300))
        move = ~small
        x[idx[move]] = wrap(x[idx[move]] + step[move, None] * eta[move]).reshape(-1, 2)
    if not converged.any():
        raise ConvergenceError(f"no Euler trajectory converged in {max_iter} iterations")
    ends = x[converged]
    d = oracle.evaluate(ends)
    keep = eigenvalue_condition(d)
    outside = np.zeros(ends.shape[0], dtype=bool)
    if not oracle.periodic:
        for j, (lo, hi) in enumerate(oracle.bounds):
            outside |= (ends[:, j] < lo) | (ends[:, j] > hi)
        keep &= ~outside
    meta = {"h": h, "conv_tol": conv_tol, "iterations": iters, "stiff_limit": stiff_limit,
            "non_converged": int(np.count_nonzero(~converged)),
            "outside_domain": int(np.count_nonzero(outside)),
            "discarded": int(np.count_nonzero(~keep))}
    return RidgeSet(points=ends[keep], residuals=np.abs(implicit_expr(d))[keep],
                    method="euler", meta=meta)


# ---------------------------------------------------------------------------
# connected component


def _in_quadrant(rel, sign, band):
    near_axis = np.any((np.abs(rel) < band) | (np.abs(rel) > np.pi - band), axis=1)
    return near_axis | (np.sign(rel[:, 0] * rel[:, 1]) == sign)


def connected_component(ridge, mu, dependence_sign=0, delta=None):
    """Greedy chaining of ridge points from ``mu``.

    Starting at ``mu``, an unused ridge point within ``delta`` of the last
    added point is appended repeatedly, and a second walk leaves ``mu`` in
    the opposite direction. Candidates behind the walk are ignored and the
    rest are ranked by ``length / delta + 2 (1 - cos(turn))``, where the
    turn is measured against the walk's recent heading, so the walk keeps
    straight through crossings instead of switching branch. Every point within
    ``delta`` of ``mu`` (at most the 8 nearest) is tried as the first step
    and the longest walk is kept.

    With a non-zero ``dependence_sign`` only points whose offsets from
    ``mu`` have that sign of ``theta1 * theta2``, or that lie within
    ``delta`` of an axis or of the antipodal lines, are eligible.
    Raises :class:`SeedError` when no ridge point lies within ``delta`` of
    ``mu``.
    """
    if delta is None:
        delta = default_delta(ridge.meta.get("grid_n", DEFAULT_GRID_N))
    if not delta > 0:
        raise DomainError("delta must be positive")
    mu = TorusPoint.of(*mu)
    mu_arr = np.array(mu)
    pts = as_points(ridge.points) if len(ridge) else np.empty((0, 2))
    rel = cmod(pts - mu_arr).reshape(-1, 2)
    if dependence_sign:
        rel = rel[_in_quadrant(rel, np.sign(dependence_sign), delta)]
    dist0 = np.hypot(rel[:, 0], rel[:, 1])
    seeds = np.flatnonzero((dist0 <= delta) & (dist0 > 1e-12))
    seeds = seeds[np.argsort(dist0[seeds], kind="stable")][:_MAX_SEEDS]
    if seeds.size == 0:
        raise SeedError("no ridge point within delta of mu; the ridge may be mis-centered")
    tree = cKDTree(_box(rel), boxsize=TWO_PI)

    def walk(first, used):
        chain = [first]
        used[first] = True
        while True:
            current = rel[chain[-1]]
            back = rel[chain[-4]] if len(chain) >= 4 else np.zeros(2)
            heading = cmod(current - back)
            cand = np.array([i for i in tree.query_ball_point(_box(current), delta)
                             if not used[i]], dtype=int)
            if cand.size == 0:
                return chain
            steps = cmod(rel[cand] - current).reshape(-1, 2)
            lengths = np.hypot(steps[:, 0], steps[:, 1])
            cosang = steps @ heading / np.maximum(lengths * np.linalg.norm(heading), 1e-300)
            ahead = cosang > 0
            if not ahead.any():
                return chain
            cost = lengths / delta + _TURN_PENALTY * (1.0 - cosang)
            nxt = cand[ahead][np.argmin(cost[ahead])]
            used[nxt] = True
            chain.append(nxt)

    def longest(candidates, used):
        best, best_used = [], used
        for first in candidates:
            trial_used = used.copy()
            chain = walk(first, trial_used)
            if len(chain) > len(best):
                best, best_used = chain, trial_used
        return best, best_used

    used = np.zeros(rel.shape[0], dtype=bool)
    fwd, used = longest(seeds, used)
    heading = rel[fwd[0]]
    opposite = [i for i in seeds if not used[i] and np.dot(rel[i], heading) < 0]
    bwd, used = longest(opposite, used)
    members = rel[fwd + bwd]
    members = members[np.hypot(members[:, 0], members[:, 1]) > 1e-12]

    j = ridge.index_coord - 1
    order = np.argsort(np.mod(members[:, j], TWO_PI), kind="stable")
    ordered = np.vstack([np.zeros((1, 2)), members[order]])
    return ConnectedRidge(ordered_points=cmod(ordered + mu_arr).reshape(-1, 2), mu=mu,
                          quadrant_sign=int(np.sign(dependence_sign)),
                          index_coord=ridge.index_coord, method=ridge.method)


# ---------------------------------------------------------------------------
# explicit limit cases

EDGE_CASES = ("axis_horizontal", "axis_vertical", "diagonal_pos", "diagonal_neg")


def diagonal_ridge_mask(params, t, sign):
    """Where the diagonal ``theta2 - mu2 = sign (theta1 - mu1)`` solves the
    ridge equations, for equal marginal concentrations.

    Along the diagonal the gradient is parallel to ``(1, sign)``, so the
    diagonal is ridge exactly where the Hessian eigenvector of the smaller
    eigenvalue is ``(1, -sign)`` and that eigenvalue is negative.
    """
    t = np.asarray(t, dtype=float)
    pts = np.stack([params.mu1 + t, params.mu2 + sign * t], axis=-1)
    d = derivatives(pts, params)
    return (sign * d.v > 0) & (0.5 * (d.u + d.w) - np.abs(d.v) < 0)


def diagonal_is_extended(params, sign, n=4096):
    """True when the full diagonal is not guaranteed to be ridge."""
    t = -np.pi + TWO_PI * np.arange(n) / n
    return not bool(np.all(diagonal_ridge_mask(params, t, sign)))


def explicit_edge_ridge(params, case, n_points=EXPLICIT_POINTS):
    """Closed-form ridge of an axis-aligned or diagonal limit case.

    ``axis_horizontal`` is ``{theta2 = mu2}``, ``axis_vertical`` is
    ``{theta1 = mu1}``, and the diagonal cases are
    ``{theta2 - mu2 = +-(theta1 - mu1)}`` taken over the full circle.
    """
    if case not in EDGE_CASES:
        raise DomainError(f"unknown edge case {case!r}")
    if not isinstance(params, (BsvmParams, BwcParams)):
        raise DomainError("explicit ridges need BSvM or BWC parameters")
    c1, c2 = params.concentrations
    dep = params.dependence
    if case.startswith("axis") and dep != 0:
        raise DomainError(f"{case} requires zero dependence, got {dep}")
    sign = 0
    if case.startswith("diagonal"):
        if not np.isclose(c1, c2, rtol=1e-12, atol=1e-12):
            raise DomainError(f"{case} requires equal concentrations, got {c1} and {c2}")
        sign = 1 if case == "diagonal_pos" else -1
        if dep * sign < 0:
            raise DomainError(f"{case} contradicts the dependence sign ({dep})")
    t = TWO_PI * np.arange(n_points) / n_points
    t = cmod(t)
    t = t[np.argsort(np.mod(t, TWO_PI), kind="stable")]
    if case == "axis_horizontal":
        rel = np.stack([t, np.zeros_like(t)], axis=1)
        index = 1
    elif case == "axis_vertical":
        rel = np.stack([np.zeros_like(t), t], axis=1)
        index = 2
    else:
        rel = np.stack([t, sign * t], axis=1)
        index = 1
    pts = cmod(rel + np.array(params.mu)).reshape(-1, 2)
    extended = bool(sign) and diagonal_is_extended(params, sign)
    return ConnectedRidge(ordered_points=pts, mu=params.mu, quadrant_sign=sign,
                          index_coord=index, extended=extended, method="explicit_edge_case")


# ---------------------------------------------------------------------------
# helpers


def _box(x):
    """Coordinates in ``[0, 2pi)`` for periodic k-d trees."""
    out = np.mod(np.asarray(x, dtype=float), TWO_PI)
    return np.where(out >= TWO_PI, 0.0, out)


def hausdorff(a, b, periodic=True):
    """Hausdorff distance between two finite point sets (torus metric by default)."""
    a = np.asarray(a, dtype=float).reshape(-1, 2)
    b = np.asarray(b, dtype=float).reshape(-1, 2)
    if periodic:
        a, b = _box(a), _box(b)
        ta = cKDTree(a, boxsize=TWO_PI)
        tb = cKDTree(b, boxsize=TWO_PI)
    else:
        ta, tb = cKDTree(a), cKDTree(b)
    return max(tb.query(a)[0].max(), ta.query(b)[0].max())


def lower_concentration_index(params):
    """Index coordinate for scanning: the less concentrated variable (ties: 1)."""
    c1, c2 = params.concentrations
    return 1 if c1 <= c2 else 2


__all__ = [
    "DensityOracle", "RidgeSet", "ConnectedRidge", "model_oracle", "gaussian_oracle",
    "hessian_eig2", "implicit_expr", "eigvec_alignment", "eigenvalue_condition", "projected_gradient",
    "ridge_implicit", "ridge_euler", "lattice_starts", "connected_component", "explicit_edge_ridge",
    "diagonal_ridge_mask", "diagonal_is_extended", "hausdorff", "lower_concentration_index",
    "circ_dist",
]
