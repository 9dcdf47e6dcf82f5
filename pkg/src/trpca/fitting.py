"""Maximum-likelihood fitting of BSvM and BWC models, BIC and LRTs.

Parameters are optimized by a Nelder-Mead simplex in unconstrained
coordinates: raw angles for the location, ``log`` for BSvM
concentrations, ``logit`` for BWC concentrations and ``atanh`` for the
BWC dependence. Restrictions are imposed by sharing (``homogeneous``) or
pinning (``independent``) coordinates.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize
from scipy.special import gammaln, ive
from scipy.stats import chi2

from .errors import (ConvergenceError, DomainError, InconsistencyError,
                     InsufficientDataError, NumericError, UndefinedMeanError)
from .geometry import as_points, circular_mean, cmod, mean_resultant_length
from .models import (LOG_4PI2, BsvmParams, BwcParams, bessel_ratio_a1, bsvm_log_norm_const,
                     log_density, make_rng, params_from_dict)

MODELS = ("bsvm", "bwc")
RESTRICTIONS = ("homogeneous", "independent")
MIN_N = 10
KAPPA_CAP = 500.0
XI_CAP = 0.995
R_DEGENERATE = 0.999

_XATOL = 1e-8
_MAXITER = 2000
_RESTARTS = 3
_LOG_KAPPA_BOUNDS = (-20.0, np.log(1e4))
_Z_BOUND = 12.0


@dataclass(frozen=True)
class FitResult:
    """A fitted model, its log-likelihood and BIC."""

    params: object
    loglik: float
    bic: float
    n: int
    converged: bool
    restrictions: frozenset = field(default_factory=frozenset)

    @property
    def model(self):
        return self.params.family

    @property
    def n_free(self):
        return 5 - len(self.restrictions)

    def to_dict(self):
        return {
            "model": self.model,
            "params": self.params.as_dict(),
            "loglik": self.loglik,
            "bic": self.bic,
            "n": self.n,
            "converged": self.converged,
            "restrictions": sorted(self.restrictions),
        }

    @classmethod
    def from_dict(cls, doc):
        return cls(params=params_from_dict(doc["model"], doc["params"]),
                   loglik=float(doc["loglik"]), bic=float(doc["bic"]), n=int(doc["n"]),
                   converged=bool(doc["converged"]),
                   restrictions=frozenset(doc["restrictions"]))


@dataclass(frozen=True)
class LrtResult:
    statistic: float
    critical: float
    rejected: bool
    alpha: float

    def to_dict(self):
        return {"statistic": self.statistic, "critical": self.critical,
                "rejected": self.rejected, "alpha": self.alpha}


def bic(loglik, n, k):
    """Bayesian information criterion ``k ln n - 2 loglik``."""
    return k * np.log(n) - 2.0 * loglik


def sample_loglik(sample, params):
    """Sum of log-densities of the sample under ``params``."""
    return float(np.sum(log_density(as_points(sample), params)))


# ---------------------------------------------------------------------------
# moment starts


def a1_inverse(r):
    """Solve ``I_1(k) / I_0(k) = r`` for ``k`` by bisection, capped at 500."""
    r = float(r)
    if r <= 0:
        return 0.0
    if r >= bessel_ratio_a1(KAPPA_CAP):
        return KAPPA_CAP
    return brentq(lambda k: bessel_ratio_a1(k) - r, 0.0, KAPPA_CAP, xtol=1e-12)


def circular_correlation(sample, mu=None):
    """Sine correlation ``sum s1 s2 / sqrt(sum s1^2 sum s2^2)`` about ``mu``."""
    pts = as_points(sample)
    if mu is None:
        mu = (circular_mean(pts[:, 0]), circular_mean(pts[:, 1]))
    s1 = np.sin(pts[:, 0] - mu[0])
    s2 = np.sin(pts[:, 1] - mu[1])
    den = np.sqrt(np.sum(s1 * s1) * np.sum(s2 * s2))
    return 0.0 if den == 0 else float(np.sum(s1 * s2) / den)


def _safe_mean(x):
    try:
        return circular_mean(x)
    except UndefinedMeanError:
        return 0.0


def moment_start(sample, model):
    """Moment-based starting values for :func:`fit_mle`.

    Locations are the marginal circular means. BSvM concentrations invert
    the mean resultant length through ``A = I_1 / I_0`` with ``lambda = 0``;
    BWC concentrations are the resultant lengths themselves and ``rho``
    starts at ``sign(corr) * min(0.5, |corr|)``.
    """
    pts = as_points(sample)
    if pts.shape[0] < MIN_N:
        raise InsufficientDataError(f"need at least {MIN_N} points, got {pts.shape[0]}")
    _check_model(model)
    mu = (_safe_mean(pts[:, 0]), _safe_mean(pts[:, 1]))
    rbar = [mean_resultant_length(pts[:, j]) for j in range(2)]
    if max(rbar) >= R_DEGENERATE:
        warnings.warn("mean resultant length near 1; starting concentration capped",
                      RuntimeWarning, stacklevel=2)
    if model == "bsvm":
        k1, k2 = (a1_inverse(min(r, 1.0)) for r in rbar)
        return BsvmParams(mu[0], mu[1], k1, k2, 0.0)
    corr = circular_correlation(pts, mu)
    rho = float(np.sign(corr) * min(0.5, abs(corr)))
    xi1, xi2 = (min(r, XI_CAP) for r in rbar)
    return BwcParams(mu[0], mu[1], xi1, xi2, rho)


def _check_model(model):
    if model not in MODELS:
        raise DomainError(f"model must be one of {MODELS}, got {model!r}")


def _check_restrictions(restrictions):
    restrictions = frozenset(restrictions or ())
    unknown = restrictions - set(RESTRICTIONS)
    if unknown:
        raise DomainError(f"unknown restrictions {sorted(unknown)}")
    return restrictions


# ---------------------------------------------------------------------------
# reparametrization


def _logit(x):
    return np.log(x) - np.log1p(-x)


def _expit(z):
    return 1.0 / (1.0 + np.exp(-z))


class _Coords:
    """Map between a parameter record and the free unconstrained vector."""

    def __init__(self, model, restrictions):
        self.model = model
        self.homogeneous = "homogeneous" in restrictions
        self.independent = "independent" in restrictions

    def encode(self, p):
        if self.model == "bsvm":
            c = np.log(np.clip(p.concentrations, 1e-6, KAPPA_CAP))
            dep = p.lam
        else:
            c = _logit(np.clip(p.concentrations, 1e-3, XI_CAP))
            dep = np.arctanh(np.clip(p.rho, -0.99, 0.99))
        x = [p.mu1, p.mu2]
        x += [0.5 * (c[0] + c[1])] if self.homogeneous else list(c)
        if not self.independent:
            x.append(dep)
        return np.array(x, dtype=float)

    def decode(self, x):
        raw = self.natural(x)
        if self.model == "bsvm":
            return BsvmParams(*raw)
        return BwcParams(*raw)

    def natural(self, x):
        """``(mu1, mu2, c1, c2, dependence)`` in the model's own parameters."""
        mu1, mu2 = float(x[0]), float(x[1])
        if self.homogeneous:
            c1 = c2 = x[2]
            rest = x[3:]
        else:
            c1, c2 = x[2], x[3]
            rest = x[4:]
        dep = 0.0 if self.independent else rest[0]
        if self.model == "bsvm":
            lo, hi = _LOG_KAPPA_BOUNDS
            k1 = float(np.exp(min(max(c1, lo), hi)))
            k2 = float(np.exp(min(max(c2, lo), hi)))
            return mu1, mu2, k1, k2, float(dep)
        xi1 = float(min(_expit(min(max(c1, -_Z_BOUND), _Z_BOUND)), 1 - 1e-12))
        xi2 = float(min(_expit(min(max(c2, -_Z_BOUND), _Z_BOUND)), 1 - 1e-12))
        rho = float(np.clip(np.tanh(dep), -1 + 1e-12, 1 - 1e-12))
        return mu1, mu2, xi1, xi2, rho


_FAST_TERMS = 48
_LOG_CENTRAL = gammaln(2 * np.arange(_FAST_TERMS) + 1.0) - 2 * gammaln(np.arange(_FAST_TERMS) + 1.0)
_ORDERS = np.arange(_FAST_TERMS, dtype=float)


def bsvm_log_norm_fast(kappa1, kappa2, lam):
    """BSvM log-normalizer from 48 scaled Bessel terms.

    Used inside the optimizer. Falls back to
    :func:`trpca.models.bsvm_log_norm_const` when a concentration is tiny,
    a Bessel value underflows or the last term is not negligible.
    """
    if kappa1 < 1e-8 or kappa2 < 1e-8:
        return bsvm_log_norm_const(kappa1, kappa2, lam)
    if lam == 0:
        return -(LOG_4PI2 + np.log(ive(0, kappa1)) + kappa1 + np.log(ive(0, kappa2)) + kappa2)
    i1 = ive(_ORDERS, kappa1)
    i2 = ive(_ORDERS, kappa2)
    if i1[-1] <= 0 or i2[-1] <= 0:
        return bsvm_log_norm_const(kappa1, kappa2, lam)
    log_ratio = 2.0 * (np.log(abs(lam)) - np.log(2.0)) - np.log(kappa1 * kappa2)
    terms = _LOG_CENTRAL + _ORDERS * log_ratio + np.log(i1) + np.log(i2)
    top = terms.max()
    if terms[-1] - top > -40.0:
        return bsvm_log_norm_const(kappa1, kappa2, lam)
    return -(LOG_4PI2 + top + np.log(np.sum(np.exp(terms - top))) + kappa1 + kappa2)


def _bsvm_negloglik_factory(pts):
    """Negative BSvM log-likelihood from sufficient statistics."""
    n = pts.shape[0]
    c1, s1 = np.cos(pts[:, 0]), np.sin(pts[:, 0])
    c2, s2 = np.cos(pts[:, 1]), np.sin(pts[:, 1])
    C1, S1, C2, S2 = c1.sum(), s1.sum(), c2.sum(), s2.sum()
    ss, sc, cs, cc = (s1 * s2).sum(), (s1 * c2).sum(), (c1 * s2).sum(), (c1 * c2).sum()

    def negloglik(raw):
        mu1, mu2, k1, k2, lam = raw
        a1, b1 = np.cos(mu1), np.sin(mu1)
        a2, b2 = np.cos(mu2), np.sin(mu2)
        cos1 = C1 * a1 + S1 * b1
        cos2 = C2 * a2 + S2 * b2
        # sin(t1 - mu1) sin(t2 - mu2) expanded over the four product sums
        sinsin = a1 * a2 * ss - a1 * b2 * sc - b1 * a2 * cs + b1 * b2 * cc
        log_t = bsvm_log_norm_fast(k1, k2, lam)
        return -(n * log_t + k1 * cos1 + k2 * cos2 + lam * sinsin)

    return negloglik


def _bwc_negloglik_factory(pts):
    """Negative BWC log-likelihood with the data's sines and cosines cached."""
    n = pts.shape[0]
    c1, s1 = np.cos(pts[:, 0]), np.sin(pts[:, 0])
    c2, s2 = np.cos(pts[:, 1]), np.sin(pts[:, 1])

    def negloglik(raw):
        mu1, mu2 = raw[0], raw[1]
        c, k0, k1, k2, k3, k4 = BwcParams(*raw).consts
        a1, b1 = np.cos(mu1), np.sin(mu1)
        a2, b2 = np.cos(mu2), np.sin(mu2)
        cos1 = c1 * a1 + s1 * b1
        sin1 = s1 * a1 - c1 * b1
        cos2 = c2 * a2 + s2 * b2
        sin2 = s2 * a2 - c2 * b2
        den = k0 - k1 * cos1 - k2 * cos2 - k3 * cos1 * cos2 - k4 * sin1 * sin2
        if np.any(den <= 0):
            return np.inf
        return -(n * np.log(c) - np.sum(np.log(den)))

    return negloglik


def _objective(pts, coords):
    if coords.model == "bsvm":
        nll = _bsvm_negloglik_factory(pts)
    else:
        nll = _bwc_negloglik_factory(pts)

    def f(x):
        try:
            val = nll(coords.natural(x))
        except (NumericError, DomainError, FloatingPointError):
            return np.inf
        return val if np.isfinite(val) else np.inf

    return f


def fit_mle(sample, model, restrictions=(), start=None, restarts=_RESTARTS, seed=0):
    """Maximum-likelihood fit of a BSvM or BWC model.

    Parameters
    ----------
    sample : array_like, shape (n, 2)
    model : {"bsvm", "bwc"}
    restrictions : iterable of {"homogeneous", "independent"}
        ``homogeneous`` ties the two concentrations, ``independent`` pins
        the dependence parameter at zero.
    start : parameter record, optional
        Starting point; defaults to :func:`moment_start`.
    restarts : int
        Number of extra simplex runs from perturbations of the incumbent.
    seed : int
        Seed for the restart perturbations.

    Returns
    -------
    FitResult
        Best result over all runs. Raises :class:`ConvergenceError` (with
        the best result attached) when no run converged.
    """
    _check_model(model)
    restrictions = _check_restrictions(restrictions)
    pts = as_points(sample)
    n = pts.shape[0]
    if n < MIN_N:
        raise InsufficientDataError(f"need at least {MIN_N} points, got {n}")
    if start is None:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            start = moment_start(pts, model)
    elif start.family != model:
        raise DomainError("start parameters belong to a different model")
    coords = _Coords(model, restrictions)
    f = _objective(pts, coords)
    rng = make_rng(seed)
    opts = {"xatol": _XATOL, "fatol": np.inf, "maxiter": _MAXITER}

    x0 = coords.encode(start)
    best_x, best_f, any_conv = x0, f(x0), False
    for run in range(restarts + 1):
        if run == 0:
            x_init = x0
        else:
            x_init = best_x + rng.normal(0.0, 0.1, size=best_x.size)
        res = minimize(f, x_init, method="Nelder-Mead", options=opts)
        if res.success:
            any_conv = True
        if res.fun <= best_f:
            best_x, best_f = res.x, res.fun

    params = coords.decode(best_x)
    params = _wrap_location(params)
    loglik = sample_loglik(pts, params)
    result = FitResult(params=params, loglik=loglik,
                       bic=float(bic(loglik, n, 5 - len(restrictions))),
                       n=n, converged=any_conv, restrictions=restrictions)
    if not any_conv:
        raise ConvergenceError(f"no {model} simplex run converged in {_MAXITER} iterations",
                               result=result)
    return result


def _wrap_location(p):
    d = p.as_dict()
    d["mu1"], d["mu2"] = cmod(d["mu1"]), cmod(d["mu2"])
    return params_from_dict(p.family, d)


def fit_nested(sample, model, restrictions, base=None, seed=0):
    """Fit under ``restrictions`` and make sure the less restricted ``base``
    fit is not beaten; when it is, ``base`` is refitted from the restricted
    optimum. Returns ``(base, restricted)``."""
    restrictions = _check_restrictions(restrictions)
    if base is None:
        base = fit_mle(sample, model, seed=seed)
    start = _restrict_params(base.params, restrictions)
    restricted = fit_mle(sample, model, restrictions | base.restrictions, start=start, seed=seed)
    if restricted.loglik > base.loglik:
        refit = fit_mle(sample, model, base.restrictions, start=restricted.params, seed=seed)
        if refit.loglik >= restricted.loglik:
            base = refit
        else:
            # the restricted optimum is feasible for the larger model
            base = FitResult(params=restricted.params, loglik=restricted.loglik,
                             bic=float(bic(restricted.loglik, base.n, base.n_free)),
                             n=base.n, converged=refit.converged,
                             restrictions=base.restrictions)
    return base, restricted


def _restrict_params(p, restrictions):
    d = p.as_dict()
    conc = [k for k in d if k.startswith(("kappa", "xi"))]
    dep = "lambda" if p.family == "bsvm" else "rho"
    if "homogeneous" in restrictions:
        shared = 0.5 * (d[conc[0]] + d[conc[1]])
        d[conc[0]] = d[conc[1]] = shared
    if "independent" in restrictions:
        d[dep] = 0.0
    return params_from_dict(p.family, d)


# ---------------------------------------------------------------------------
# likelihood-ratio test

CHI2_1_95 = 3.841459


def lrt(unrestricted, restricted, alpha=0.05):
    """Likelihood-ratio test of one extra restriction.

    The statistic is ``2 (l - l0)``; values below ``-1e-6`` mean the
    restricted optimum beat the unrestricted one and raise
    :class:`InconsistencyError`.
    """
    if not 0 < alpha < 1:
        raise DomainError("alpha must lie in (0, 1)")
    extra = restricted.restrictions - unrestricted.restrictions
    if not unrestricted.restrictions <= restricted.restrictions or len(extra) != 1:
        raise DomainError("restricted fit must add exactly one restriction")
    if restricted.model != unrestricted.model:
        raise DomainError("both fits must use the same model")
    stat = 2.0 * (unrestricted.loglik - restricted.loglik)
    if stat < -1e-6:
        raise InconsistencyError(
            f"restricted log-likelihood exceeds unrestricted by {-stat / 2:.3g}")
    stat = max(0.0, stat)
    critical = float(chi2.isf(alpha, 1))
    return LrtResult(statistic=stat, critical=critical, rejected=bool(stat > critical),
                     alpha=float(alpha))
