"""Bivariate sine von Mises, bivariate wrapped Cauchy and wrapped normal models.

Densities, log-densities, the derivative components used by the ridge
equations, and seeded samplers. Points are ``(n, 2)`` arrays (or a single
pair); every function broadcasts over the leading axis.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, ive

from .errors import ConcentrationError, DomainError, NumericError
from .geometry import TWO_PI, TorusPoint, cmod

LOG_4PI2 = np.log(4.0 * np.pi**2)

_SERIES_MAX_TERMS = 200
_SERIES_REL_TOL = 1e-14
_POWER_SERIES_CUTOFF = 15.0


# ---------------------------------------------------------------------------
# parameter records


@dataclass(frozen=True)
class BsvmParams:
    """Bivariate sine von Mises parameters ``(mu1, mu2, kappa1, kappa2, lambda)``."""

    mu1: float
    mu2: float
    kappa1: float
    kappa2: float
    lam: float

    def __post_init__(self):
        vals = (self.mu1, self.mu2, self.kappa1, self.kappa2, self.lam)
        if not all(np.isfinite(vals)):
            raise DomainError("BSvM parameters must be finite")
        if self.kappa1 < 0 or self.kappa2 < 0:
            raise DomainError("BSvM concentrations must be non-negative")
        object.__setattr__(self, "mu1", cmod(self.mu1))
        object.__setattr__(self, "mu2", cmod(self.mu2))

    family = "bsvm"

    @property
    def mu(self):
        return TorusPoint(self.mu1, self.mu2)

    @property
    def concentrations(self):
        return (self.kappa1, self.kappa2)

    @property
    def dependence(self):
        return self.lam

    @property
    def unimodal(self):
        """Sufficient unimodality condition ``kappa1 * kappa2 > lambda**2``."""
        return self.kappa1 * self.kappa2 > self.lam**2

    def as_dict(self):
        return {"mu1": self.mu1, "mu2": self.mu2, "kappa1": self.kappa1,
                "kappa2": self.kappa2, "lambda": self.lam}


@dataclass(frozen=True)
class BwcParams:
    """Bivariate wrapped Cauchy parameters ``(mu1, mu2, xi1, xi2, rho)``.

    The density constants ``c, c0, ..., c4`` are computed once on construction.
    ``c0``-``c3`` use ``|rho|`` while ``c4`` uses the signed ``rho``.
    """

    mu1: float
    mu2: float
    xi1: float
    xi2: float
    rho: float
    consts: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        vals = (self.mu1, self.mu2, self.xi1, self.xi2, self.rho)
        if not all(np.isfinite(vals)):
            raise DomainError("BWC parameters must be finite")
        if not (0 <= self.xi1 < 1 and 0 <= self.xi2 < 1):
            raise DomainError("BWC concentrations must lie in [0, 1)")
        if not -1 < self.rho < 1:
            raise DomainError("BWC dependence must lie in (-1, 1)")
        object.__setattr__(self, "mu1", cmod(self.mu1))
        object.__setattr__(self, "mu2", cmod(self.mu2))
        x1, x2, r = self.xi1, self.xi2, self.rho
        a = abs(r)
        c = (1 - r * r) * (1 - x1 * x1) * (1 - x2 * x2) / (4 * np.pi**2)
        c0 = (1 + r * r) * (1 + x1 * x1) * (1 + x2 * x2) - 8 * a * x1 * x2
        c1 = 2 * (1 + r * r) * x1 * (1 + x2 * x2) - 4 * a * (1 + x1 * x1) * x2
        c2 = 2 * (1 + r * r) * (1 + x1 * x1) * x2 - 4 * a * x1 * (1 + x2 * x2)
        c3 = -4 * (1 + r * r) * x1 * x2 + 2 * a * (1 + x1 * x1) * (1 + x2 * x2)
        c4 = 2 * r * (1 - x1 * x1) * (1 - x2 * x2)
        if not c > 0:
            raise DomainError("BWC normalizing constant must be positive")
        object.__setattr__(self, "consts", (c, c0, c1, c2, c3, c4))

    family = "bwc"

    @property
    def mu(self):
        return TorusPoint(self.mu1, self.mu2)

    @property
    def concentrations(self):
        return (self.xi1, self.xi2)

    @property
    def dependence(self):
        return self.rho

    @property
    def unimodal(self):
        return True

    def as_dict(self):
        return {"mu1": self.mu1, "mu2": self.mu2, "xi1": self.xi1,
                "xi2": self.xi2, "rho": self.rho}


@dataclass(frozen=True)
class BwnParams:
    """Bivariate wrapped normal: a planar Gaussian wrapped coordinatewise."""

    mu1: float
    mu2: float
    sigma1_sq: float
    sigma2_sq: float
    rho: float

    def __post_init__(self):
        if not (self.sigma1_sq > 0 and self.sigma2_sq > 0):
            raise DomainError("BWN variances must be positive")
        if not -1 < self.rho < 1:
            raise DomainError("BWN correlation must lie in (-1, 1)")
        object.__setattr__(self, "mu1", cmod(self.mu1))
        object.__setattr__(self, "mu2", cmod(self.mu2))

    family = "bwn"

    @property
    def mu(self):
        return TorusPoint(self.mu1, self.mu2)

    @property
    def cov(self):
        off = self.rho * np.sqrt(self.sigma1_sq * self.sigma2_sq)
        return np.array([[self.sigma1_sq, off], [off, self.sigma2_sq]])

    def as_dict(self):
        return {"mu1": self.mu1, "mu2": self.mu2, "sigma1_sq": self.sigma1_sq,
                "sigma2_sq": self.sigma2_sq, "rho": self.rho}


def params_from_dict(family, values):
    """Rebuild a parameter record from its ``as_dict`` form."""
    if family == "bsvm":
        return BsvmParams(values["mu1"], values["mu2"], values["kappa1"],
                          values["kappa2"], values["lambda"])
    if family == "bwc":
        return BwcParams(values["mu1"], values["mu2"], values["xi1"],
                         values["xi2"], values["rho"])
    if family == "bwn":
        return BwnParams(values["mu1"], values["mu2"], values["sigma1_sq"],
                         values["sigma2_sq"], values["rho"])
    raise DomainError(f"unknown model family {family!r}")


@dataclass(frozen=True)
class DensityDerivatives:
    """Gradient and Hessian components of a density, up to a positive factor.

    ``d1, d2`` are proportional to the gradient and ``u, v, w`` to the
    Hessian entries, all with the *same* positive factor, which is what the
    ridge equations need. ``scale`` converts ``(d1, d2)`` into the gradient
    of ``log f``; ``f`` is the density itself.
    """

    f: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray
    scale: np.ndarray = 1.0


# ---------------------------------------------------------------------------
# Bessel series


def logsumexp(a, axis=None):
    a = np.asarray(a, dtype=float)
    top = np.max(a, axis=axis, keepdims=True)
    top = np.where(np.isfinite(top), top, 0.0)
    out = np.log(np.sum(np.exp(a - top), axis=axis, keepdims=True)) + top
    return out.item() if axis is None else np.squeeze(out, axis=axis)


def log_scaled_bessel_power(m, kappa):
    """``log(kappa**-m * I_m(kappa)) - kappa`` for integer orders ``m``.

    Power series (in log space) below ``kappa = 15``, where it also handles
    ``kappa = 0``; exponentially scaled Bessel values above.
    """
    m = np.asarray(m, dtype=float)
    if kappa < 0:
        raise DomainError("kappa must be non-negative")
    if kappa >= _POWER_SERIES_CUTOFF:
        with np.errstate(divide="ignore"):
            return np.log(ive(m, kappa)) - m * np.log(kappa)
    if kappa == 0:
        return -m * np.log(2.0) - gammaln(m + 1.0)
    k = np.arange(int(3 * kappa) + 40, dtype=float)
    terms = (k * 2.0 * np.log(kappa / 2.0) - gammaln(k + 1.0))[None, :] \
        - gammaln(k[None, :] + m.reshape(-1, 1) + 1.0)
    out = -m.ravel() * np.log(2.0) + logsumexp(terms, axis=1) - kappa
    return out.reshape(m.shape)


def bessel_ratio_a1(kappa):
    """``A(kappa) = I_1(kappa) / I_0(kappa)``, the von Mises mean resultant length."""
    kappa = np.asarray(kappa, dtype=float)
    return ive(1, kappa) / ive(0, kappa)


_BLOCK = 16


def bsvm_log_norm_const(kappa1, kappa2, lam):
    """Log of the BSvM normalizing constant (the reciprocal of the kernel integral).

    The integral of ``exp{k1 cos t1 + k2 cos t2 + lam sin t1 sin t2}`` over the
    torus is ``4 pi^2 sum_m C(2m, m) (lam/2)^(2m) k1^-m I_m(k1) k2^-m I_m(k2)``.
    Terms are added in blocks until one past the peak falls below ``1e-14``
    of the running sum; :class:`NumericError` if 200 terms are not enough.
    """
    if kappa1 < 0 or kappa2 < 0:
        raise DomainError("BSvM concentrations must be non-negative")
    if lam == 0:
        zero = np.zeros(1)
        log_z = LOG_4PI2 + log_scaled_bessel_power(zero, kappa1)[0] \
            + log_scaled_bessel_power(zero, kappa2)[0] + kappa1 + kappa2
        return -float(log_z)
    log_lam = 2.0 * (np.log(abs(lam)) - np.log(2.0))
    blocks = []
    for start in range(0, _SERIES_MAX_TERMS + 1, _BLOCK):
        m = np.arange(start, min(start + _BLOCK, _SERIES_MAX_TERMS + 1), dtype=float)
        blocks.append(gammaln(2 * m + 1.0) - 2 * gammaln(m + 1.0) + m * log_lam
                      + log_scaled_bessel_power(m, kappa1)
                      + log_scaled_bessel_power(m, kappa2))
        terms = np.concatenate(blocks)
        total = logsumexp(terms)
        peak = int(np.argmax(terms))
        rel = terms[peak:] - total
        small = np.flatnonzero(rel < np.log(_SERIES_REL_TOL))
        if small.size:
            stop = peak + small[0] + 1
            return -float(LOG_4PI2 + logsumexp(terms[:stop]) + kappa1 + kappa2)
    raise NumericError(
        f"BSvM normalizing series did not converge in {_SERIES_MAX_TERMS} terms "
        f"(kappa1={kappa1}, kappa2={kappa2}, lambda={lam})")


def bsvm_norm_const(kappa1, kappa2, lam):
    """BSvM normalizing constant ``T`` such that the density integrates to one."""
    return float(np.exp(bsvm_log_norm_const(kappa1, kappa2, lam)))


# ---------------------------------------------------------------------------
# densities


def _centered(points, params):
    pts = np.asarray(points, dtype=float)
    t1 = cmod(pts[..., 0] - params.mu1)
    t2 = cmod(pts[..., 1] - params.mu2)
    return np.asarray(t1), np.asarray(t2)


def _bwc_denominator(t1, t2, consts):
    _, c0, c1, c2, c3, c4 = consts
    c_1, c_2 = np.cos(t1), np.cos(t2)
    return c0 - c1 * c_1 - c2 * c_2 - c3 * c_1 * c_2 - c4 * np.sin(t1) * np.sin(t2)


def log_density(points, params, log_norm=None):
    """Log-density of a BSvM, BWC or BWN model at ``points``.

    ``log_norm`` lets callers pass a precomputed BSvM log-normalizer.
    """
    if isinstance(params, BsvmParams):
        t1, t2 = _centered(points, params)
        if log_norm is None:
            log_norm = bsvm_log_norm_const(params.kappa1, params.kappa2, params.lam)
        return log_norm + params.kappa1 * np.cos(t1) + params.kappa2 * np.cos(t2) \
            + params.lam * np.sin(t1) * np.sin(t2)
    if isinstance(params, BwcParams):
        t1, t2 = _centered(points, params)
        return np.log(params.consts[0]) - np.log(_bwc_denominator(t1, t2, params.consts))
    if isinstance(params, BwnParams):
        return np.log(_bwn_density(points, params))
    raise DomainError(f"unsupported parameter record {type(params).__name__}")


def density(points, params):
    """Density of a BSvM, BWC or BWN model at ``points`` (strictly positive)."""
    return np.exp(log_density(points, params))


def _bwn_density(points, params, wraps=4):
    t1, t2 = _centered(points, params)
    cov = params.cov
    prec = np.linalg.inv(cov)
    norm = 1.0 / (TWO_PI * np.sqrt(np.linalg.det(cov)))
    out = np.zeros(np.broadcast(t1, t2).shape)
    for k1 in range(-wraps, wraps + 1):
        for k2 in range(-wraps, wraps + 1):
            x1 = t1 + TWO_PI * k1
            x2 = t2 + TWO_PI * k2
            q = prec[0, 0] * x1 * x1 + 2 * prec[0, 1] * x1 * x2 + prec[1, 1] * x2 * x2
            out = out + np.exp(-0.5 * q)
    return norm * out


def bsvm_derivatives(points, params):
    """Derivative components of the BSvM density.

    ``(d1, d2)`` is the gradient of ``log f`` and ``(u, v, w)`` the Hessian
    of ``f`` divided by ``f``; the common positive factor ``1/f`` does not
    change the ridge equations.
    """
    t1, t2 = _centered(points, params)
    k1, k2, lam = params.kappa1, params.kappa2, params.lam
    s1, c1, s2, c2 = np.sin(t1), np.cos(t1), np.sin(t2), np.cos(t2)
    d1 = -k1 * s1 + lam * s2 * c1
    d2 = -k2 * s2 + lam * s1 * c2
    u = d1 * d1 - k1 * c1 - lam * s1 * s2
    v = lam * c1 * c2 + d1 * d2
    w = d2 * d2 - k2 * c2 - lam * s1 * s2
    f = np.exp(log_density(points, params))
    return DensityDerivatives(f=f, d1=d1, d2=d2, u=u, v=v, w=w, scale=np.ones_like(f))


def bwc_derivatives(points, params):
    """Derivative components of the BWC density.

    With ``f* = f / c = 1 / g`` the components are ``g**2`` times the
    gradient and Hessian of ``f*``. ``scale = f*`` maps ``(d1, d2)`` to the
    gradient of ``log f``.
    """
    t1, t2 = _centered(points, params)
    c, _, k1, k2, k3, k4 = params.consts
    s1, c1, s2, c2 = np.sin(t1), np.cos(t1), np.sin(t2), np.cos(t2)
    fstar = 1.0 / _bwc_denominator(t1, t2, params.consts)
    d1 = -k1 * s1 - k3 * s1 * c2 + k4 * s2 * c1
    d2 = -k2 * s2 - k3 * s2 * c1 + k4 * s1 * c2
    u = 2 * d1 * d1 * fstar - k1 * c1 - k3 * c1 * c2 - k4 * s1 * s2
    v = 2 * d1 * d2 * fstar + k3 * s1 * s2 + k4 * c1 * c2
    w = 2 * d2 * d2 * fstar - k2 * c2 - k3 * c1 * c2 - k4 * s1 * s2
    return DensityDerivatives(f=c * fstar, d1=d1, d2=d2, u=u, v=v, w=w, scale=fstar)


def derivatives(points, params):
    """Dispatch to :func:`bsvm_derivatives` or :func:`bwc_derivatives`."""
    if isinstance(params, BsvmParams):
        return bsvm_derivatives(points, params)
    if isinstance(params, BwcParams):
        return bwc_derivatives(points, params)
    raise DomainError(f"no ridge derivatives for {type(params).__name__}")


# ---------------------------------------------------------------------------
# sampling


def make_rng(seed):
    """Counter-based generator; independent streams come from ``spawn``."""
    return np.random.Generator(np.random.Philox(seed))


_ENVELOPE_GRID = 256
_ENVELOPE_FACTOR = 1.1
_MIN_ACCEPTANCE = 1e-4


def envelope_constant(params):
    """``1.1`` times the largest density value on a 256 x 256 grid about ``mu``."""
    g = TWO_PI * np.arange(_ENVELOPE_GRID) / _ENVELOPE_GRID
    t1, t2 = np.meshgrid(params.mu1 + g, params.mu2 + g, indexing="ij")
    pts = np.stack([t1.ravel(), t2.ravel()], axis=1)
    return _ENVELOPE_FACTOR * float(np.max(density(pts, params)))


def sample(params, n, seed):
    """Draw ``n`` wrapped points from a BSvM, BWC or BWN model.

    BSvM and BWC use rejection from the uniform distribution on the torus;
    BWN maps correlated normal deviates through the Cholesky factor, shifts
    by ``mu`` and wraps. Deterministic for a given seed.
    """
    n = int(n)
    if n < 1:
        raise DomainError("sample size must be at least 1")
    rng = make_rng(seed)
    if isinstance(params, BwnParams):
        z = rng.standard_normal((n, 2))
        chol = np.linalg.cholesky(params.cov)
        x = z @ chol.T + np.array([params.mu1, params.mu2])
        return cmod(x)
    if not isinstance(params, (BsvmParams, BwcParams)):
        raise DomainError(f"cannot sample from {type(params).__name__}")
    env = envelope_constant(params)
    # proposal density is 1 / (4 pi^2), so the acceptance rate is known exactly
    rate = 1.0 / (env * 4 * np.pi**2)
    if rate < _MIN_ACCEPTANCE:
        raise ConcentrationError(
            f"rejection acceptance rate {rate:.2e} is below {_MIN_ACCEPTANCE:g}; "
            "reduce the concentration parameters or rescale the data")
    out = np.empty((0, 2))
    batch = int(min(max(2 * n / rate, 1024), 5_000_000))
    while out.shape[0] < n:
        prop = rng.uniform(-np.pi, np.pi, size=(batch, 2))
        accept = rng.uniform(0.0, env, size=batch) < density(prop, params)
        out = np.concatenate([out, prop[accept]])
    return cmod(out[:n])
