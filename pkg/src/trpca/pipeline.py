"""End-to-end toroidal ridge PCA and the angular PCA baseline.

The pipeline has three stages:

1. fit BSvM and/or BWC by maximum likelihood, keep the smaller BIC, test
   homogeneity and independence, and refit under the accepted restrictions;
2. build the density ridge through the fitted location (explicit lines for
   the limit cases, the implicit-equation solver otherwise) and turn it into
   a Fourier curve parametrized by scaled arc length;
3. project the sample onto the curve to obtain the two scores and their
   proportion of variance explained.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .curve import DEFAULT_M, arclength_param, fourier_fit, grid_distances, project
from .errors import (DomainError, InsufficientDataError, NumericError,
                     PipelineError, UndefinedPveError)
from .fitting import MIN_N, MODELS, fit_mle, fit_nested, lrt
from .geometry import TWO_PI, TorusPoint, as_points, circular_mean, cmod, frechet_circle
from .geometry import mean_resultant_length
from .models import BwcParams, BwnParams, make_rng, params_from_dict, sample as model_sample
from .ridge import (DEFAULT_GRID_N, ConnectedRidge, connected_component, explicit_edge_ridge,
                    lower_concentration_index, model_oracle, ridge_implicit)

M2_GRID = 128
M2_REFINE = 8
ON_RIDGE_TOL = 1e-9


def worker_count():
    """Threads allowed by ``TRPCA_THREADS`` (0 or unset means one per CPU)."""
    raw = os.environ.get("TRPCA_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError as exc:
        raise DomainError(f"TRPCA_THREADS must be an integer, got {raw!r}") from exc
    if n < 0:
        raise DomainError("TRPCA_THREADS must be non-negative")
    return n if n > 0 else (os.cpu_count() or 1)


# ---------------------------------------------------------------------------
# scores


@dataclass(frozen=True)
class Scores:
    """First and second scores of each observation and the distance scale ``m2``."""

    s1: np.ndarray
    s2: np.ndarray
    m2: float
    dist: np.ndarray = field(default=None, repr=False)
    tie: np.ndarray = field(default=None, repr=False)

    def swapped(self):
        return replace(self, s1=self.s2, s2=self.s1)

    def as_array(self):
        return np.column_stack([self.s1, self.s2])


def max_projection_distance(curve, n=M2_GRID, refine=M2_REFINE):
    """Largest distance to the curve over the torus.

    An ``n x n`` grid centered at ``mu`` is scanned against the curve's
    1024-point table, and the ``refine`` farthest nodes are polished by a
    compass search on the same table distance: the maximum sits on a kink
    of the distance field, where grid values converge only linearly in
    the grid step. The exact projection distance at the polished points is
    returned.
    """
    g = -np.pi + TWO_PI * np.arange(n) / n
    t1, t2 = np.meshgrid(curve.mu[0] + g, curve.mu[1] + g, indexing="ij")
    grid = cmod(np.column_stack([t1.ravel(), t2.ravel()]))
    d = grid_distances(curve, grid)
    top = np.argsort(d, kind="stable")[::-1][:refine]
    centers, best = grid[top], d[top]
    k = top.size
    h = np.full(k, TWO_PI / n)
    stencil = np.array([[i, j] for i in (-1, 0, 1) for j in (-1, 0, 1) if i or j], dtype=float)
    for _ in range(200):
        if np.all(h < 1e-10):
            break
        trial = cmod(centers[:, None, :] + h[:, None, None] * stencil[None])
        dt = grid_distances(curve, trial.reshape(-1, 2)).reshape(k, -1)
        j = np.argmax(dt, axis=1)
        val = dt[np.arange(k), j]
        gain = val > best
        centers = np.where(gain[:, None], trial[np.arange(k), j], centers)
        best = np.where(gain, val, best)
        h = np.where(gain, h, 0.5 * h)
    return float(project(curve, centers).dist.max())


def compute_scores(curve, sample, m2=None):
    """Scores of ``sample`` with respect to ``curve``.

    ``s1`` is the projection argument. ``|s2|`` is the distance to the
    projection scaled by ``pi / m2`` (clipped at ``pi``), signed by the
    wrapped angle from the normal ``cmod(foot - point)`` to the curve
    tangent. Points closer than ``1e-9`` to the curve get ``s2 = 0``.
    """
    pts = as_points(sample)
    if pts.shape[0] == 0:
        raise InsufficientDataError("cannot score an empty sample")
    if m2 is None:
        m2 = max_projection_distance(curve)
    if not m2 >= 1e-9:
        raise NumericError(f"maximum projection distance {m2} is degenerate")
    proj = project(curve, pts)
    tan = np.asarray(curve.scaled_tangent(proj.alpha)).reshape(-1, 2)
    normal = cmod(proj.foot - pts).reshape(-1, 2)
    turn = cmod(np.arctan2(tan[:, 1], tan[:, 0]) - np.arctan2(normal[:, 1], normal[:, 0]))
    sign = np.where(np.asarray(turn) < 0, -1.0, 1.0)
    s2 = sign * np.minimum(np.pi / m2 * proj.dist, np.pi)
    s2 = np.where(proj.dist < ON_RIDGE_TOL, 0.0, s2)
    return Scores(s1=np.asarray(proj.alpha, dtype=float), s2=s2, m2=float(m2),
                  dist=proj.dist, tie=proj.tie)


def pve(scores):
    """Share of the total Frechet variance carried by the first score."""
    s1 = np.asarray(scores.s1, dtype=float)
    s2 = np.asarray(scores.s2, dtype=float)
    if s1.size < 2:
        raise InsufficientDataError("PVE needs at least two scores")
    v1 = frechet_circle(s1)[1]
    v2 = frechet_circle(s2)[1]
    total = v1 + v2
    if total <= 0:
        raise UndefinedPveError("both score variances are zero")
    return float(v1 / total)


# ---------------------------------------------------------------------------
# angular PCA baseline


@dataclass(frozen=True)
class ApcaResult:
    """Angular PCA: circular-mean centering then classical PCA.

    ``scores`` are coordinates in the eigenbasis and are not wrapped.
    """

    scores: np.ndarray
    pve: float
    center: TorusPoint
    components: np.ndarray
    variances: np.ndarray


def apca(sample):
    pts = as_points(sample)
    if pts.shape[0] < 3:
        raise InsufficientDataError("angular PCA needs at least three points")
    center = TorusPoint(circular_mean(pts[:, 0]), circular_mean(pts[:, 1]))
    x = cmod(pts - np.array(center)).reshape(-1, 2)
    cov = np.cov(x, rowvar=False)
    if not np.all(np.isfinite(cov)) or np.trace(cov) <= 0:
        raise NumericError("angular PCA covariance is degenerate")
    vals, vecs = np.linalg.eigh(cov)
    order = np.argsort(vals)[::-1]
    vals, vecs = vals[order], vecs[:, order]
    # fix the eigenvector signs so the largest entry is positive
    flip = np.sign(vecs[np.argmax(np.abs(vecs), axis=0), np.arange(2)])
    vecs = vecs * np.where(flip == 0, 1.0, flip)
    scores = x @ vecs
    wrapped = cmod(scores).reshape(-1, 2)
    share = pve(Scores(s1=wrapped[:, 0], s2=wrapped[:, 1], m2=np.pi))
    return ApcaResult(scores=scores, pve=share, center=center, components=vecs, variances=vals)


# ---------------------------------------------------------------------------
# pipeline


@dataclass(frozen=True)
class PipelineConfig:
    model: str = "auto"
    alpha: float = 0.05
    fourier_m: int = DEFAULT_M
    grid_n: int = DEFAULT_GRID_N
    seed: int = 0

    def __post_init__(self):
        if self.model not in ("auto",) + MODELS:
            raise DomainError(f"model must be auto, bsvm or bwc, got {self.model!r}")
        if not 0 < self.alpha < 0.5:
            raise DomainError("alpha must lie in (0, 0.5)")
        if self.fourier_m < 1:
            raise DomainError("fourier_m must be at least 1")
        if self.grid_n < 16:
            raise DomainError("grid_n must be at least 16")


@dataclass(frozen=True)
class TrpcaFit:
    selected: object
    rejected_candidates: list
    edge_flags: frozenset
    curve: object
    ridge: ConnectedRidge
    scores: Scores
    pve: float
    lrts: dict
    diagnostics: dict

    def to_dict(self):
        return {
            "model": self.selected.model,
            "fit": self.selected.to_dict(),
            "candidates": [c.to_dict() for c in self.rejected_candidates],
            "lrt": {k: v.to_dict() for k, v in self.lrts.items()},
            "edge_flags": sorted(self.edge_flags),
            "pve": self.pve,
            "m2": self.scores.m2,
            "curve": {
                "index_coord": self.curve.index_coord,
                "mu": list(self.curve.mu),
                "m": self.curve.m,
                "a": [float(v) for v in self.curve.a],
                "b": [float(v) for v in self.curve.b],
                "total_length_R": self.curve.total_length_R,
            },
            "diagnostics": self.diagnostics,
        }


def _fit_families(pts, families, restrictions, seed):
    def one(model):
        return fit_mle(pts, model, restrictions, seed=seed)

    if len(families) > 1 and worker_count() > 1:
        with ThreadPoolExecutor(max_workers=min(len(families), worker_count())) as pool:
            return list(pool.map(one, families))
    return [one(m) for m in families]


def _by_bic(fits):
    order = sorted(range(len(fits)), key=lambda i: fits[i].bic)
    return fits[order[0]], [fits[i] for i in order[1:]]


def _stage(step, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except PipelineError:
        raise
    except Exception as exc:  # noqa: BLE001 - re-raised with the failing step named
        raise PipelineError(step, exc) from exc


def select_model(pts, config, diagnostics):
    """Stage (i): BIC selection, the two LRTs and the restricted refit.

    Returns ``(selected, others, lrts, restrictions)``.
    """
    families = list(MODELS) if config.model == "auto" else [config.model]
    fits = _stage("i.a", _fit_families, pts, families, frozenset(), config.seed)
    best, others = _by_bic(fits)
    diagnostics["bic"] = {f.model: f.bic for f in fits}
    diagnostics["selected_unrestricted"] = best.model

    lrts = {}
    for name, hyp in (("homogeneity", "homogeneous"), ("independence", "independent")):
        base, restricted = _stage("i.b", fit_nested, pts, best.model, {hyp}, base=best,
                                  seed=config.seed)
        best = base
        lrts[name] = _stage("i.b", lrt, base, restricted, config.alpha)
    accepted = frozenset(
        hyp for name, hyp in (("homogeneity", "homogeneous"), ("independence", "independent"))
        if not lrts[name].rejected)
    diagnostics["accepted_restrictions"] = sorted(accepted)

    if not accepted:
        return best, others, lrts, accepted
    # refit every family under the shared restriction set and compare again
    refits = _stage("i.c", _fit_families, pts, families, accepted, config.seed)
    chosen, rest = _by_bic(refits)
    diagnostics["bic_restricted"] = {f.model: f.bic for f in refits}
    diagnostics["selected_restricted"] = chosen.model
    if chosen.model != best.model:
        diagnostics["family_switched_after_restriction"] = True
    return chosen, rest + [best] + others, lrts, accepted


def _edge_case(params, accepted, pts):
    """Explicit ridge case for the accepted restrictions, or ``None``."""
    if accepted == {"independent"}:
        return "axis_horizontal" if lower_concentration_index(params) == 1 else "axis_vertical"
    if accepted == {"homogeneous"}:
        return "diagonal_neg" if params.dependence < 0 else "diagonal_pos"
    if accepted == {"homogeneous", "independent"}:
        var1 = 1 - mean_resultant_length(pts[:, 0])
        var2 = 1 - mean_resultant_length(pts[:, 1])
        return "axis_horizontal" if var1 >= var2 else "axis_vertical"
    return None


def _zero_centered(params):
    d = params.as_dict()
    d["mu1"] = d["mu2"] = 0.0
    return params_from_dict(params.family, d)


def build_ridge(params, accepted, pts, config, diagnostics, flags):
    """Stage (ii): the connected ridge through ``mu``, shifted from the origin."""
    case = _edge_case(params, accepted, pts)
    if case is not None:
        ridge = explicit_edge_ridge(params, case)
        flags.add(case)
        if accepted == {"homogeneous", "independent"}:
            flags.add("ridge_ambiguous")
        if ridge.extended:
            flags.add("edge_case_extended")
        diagnostics["ridge_branch"] = f"explicit:{case}"
        return ridge
    p0 = _zero_centered(params)
    j = lower_concentration_index(p0)
    sign = int(np.sign(p0.dependence))
    rs = ridge_implicit(model_oracle(p0), index_coord=j, grid_n=config.grid_n, both=True)
    comp = connected_component(rs, TorusPoint(0.0, 0.0), sign)
    diagnostics["ridge_branch"] = "implicit"
    diagnostics["ridge_points"] = int(comp.ordered_points.shape[0])
    mu = np.array(params.mu)
    return replace(comp, ordered_points=cmod(comp.ordered_points + mu).reshape(-1, 2),
                   mu=params.mu)


def ridge_pca(sample, config=None):
    """Toroidal ridge PCA of a sample.

    Parameters
    ----------
    sample : array_like, shape (n, 2)
        Angles in radians; wrapped on entry.
    config : PipelineConfig, optional

    Returns
    -------
    TrpcaFit
        Raises :class:`PipelineError` naming the failing stage.
    """
    config = config or PipelineConfig()
    pts = as_points(sample)
    if pts.shape[0] < MIN_N:
        raise InsufficientDataError(f"need at least {MIN_N} points, got {pts.shape[0]}")
    diagnostics = {"n": int(pts.shape[0])}
    flags = set()
    selected, others, lrts, accepted = select_model(pts, config, diagnostics)
    ridge = _stage("ii", build_ridge, selected.params, accepted, pts, config, diagnostics, flags)
    curve = _stage("ii", lambda: arclength_param(fourier_fit(ridge, config.fourier_m)))
    scores = _stage("iii", compute_scores, curve, pts)
    share = _stage("iii", pve, scores)
    if np.any(scores.tie):
        diagnostics["projection_ties"] = int(np.sum(scores.tie))
    return TrpcaFit(selected=selected, rejected_candidates=others, edge_flags=frozenset(flags),
                    curve=curve, ridge=ridge, scores=scores, pve=share, lrts=lrts,
                    diagnostics=diagnostics)


# ---------------------------------------------------------------------------
# simulation scenarios


SCENARIOS = {
    1: [BwnParams(-np.pi, 0.0, 0.2, 0.8, 0.35)],
    2: [BwnParams(np.pi / 2, 0.0, 3.0, 1.5, 0.85)],
    3: [BwcParams(1.0, 2.0, 0.5, 0.1, -0.75)],
    4: [BwnParams(np.pi / 2, -np.pi / 2, 0.4, 0.16, 0.35),
        BwnParams(-np.pi / 2, np.pi / 2, 0.16, 0.4, 0.35)],
}


def scenario_sample(scenario, n, seed):
    """Sample of the four benchmark scenarios and the component labels.

    Scenario 4 is an equal mixture; each point's component is drawn first
    and the components are then sampled from independent streams.
    """
    if scenario not in SCENARIOS:
        raise DomainError(f"scenario must be one of {sorted(SCENARIOS)}")
    comps = SCENARIOS[scenario]
    if len(comps) == 1:
        return model_sample(comps[0], n, seed), np.zeros(n, dtype=int)
    labels = make_rng(seed).integers(0, len(comps), size=n)
    out = np.empty((n, 2))
    for k, comp in enumerate(comps):
        idx = np.flatnonzero(labels == k)
        if idx.size:
            out[idx] = model_sample(comp, idx.size, [seed, k + 1])
    return out, labels
