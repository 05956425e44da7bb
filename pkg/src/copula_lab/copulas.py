"""Parametric copula families.

Every family exposes a vectorized log-density together with its gradient and
Hessian with respect to ``u``.  Elliptical families (Gaussian, Student-t) use
closed-form derivatives; Archimedean families fall back to central finite
differences.

Points near the upper edge of the unit cube lose precision when written as
``1 - eps``.  All density routines therefore accept an optional ``upper``
array holding ``1 - u`` computed exactly by the caller (e.g. from a survival
function).  When omitted it is taken to be ``1 - u``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import integrate, optimize, special

from .errors import DomainError, ParameterError

__all__ = [
    "FAMILIES",
    "CopulaSpec",
    "StationaryPoint",
    "StationaryPoints",
    "copula_log_density",
    "copula_log_density_grad",
    "copula_log_density_hessian",
    "sample_copula",
    "classify_stationary_points",
    "rho_to_tau",
    "tau_to_rho",
    "archimedean_param_to_tau",
    "archimedean_tau_to_param",
]

logger = logging.getLogger(__name__)

FAMILIES = ("independence", "gaussian", "student_t", "clayton", "gumbel", "frank")
_ELLIPTICAL = ("gaussian", "student_t")
_ARCHIMEDEAN = ("clayton", "gumbel", "frank")

_LOG_2PI = np.log(2.0 * np.pi)


def _as_corr(corr, dim: int) -> tuple[tuple[float, ...], ...]:
    r = np.array(corr, dtype=float)
    if r.ndim == 0:
        if dim != 2:
            raise ParameterError("a scalar correlation is only valid for dim=2")
        rho = float(r)
        r = np.array([[1.0, rho], [rho, 1.0]])
    if r.shape != (dim, dim):
        raise ParameterError(f"correlation matrix must be {dim}x{dim}, got {r.shape}")
    if not np.all(np.isfinite(r)):
        raise ParameterError("correlation matrix has non-finite entries")
    if not np.allclose(r, r.T, atol=1e-12, rtol=0):
        raise ParameterError("correlation matrix is not symmetric")
    if not np.allclose(np.diag(r), 1.0, atol=1e-12, rtol=0):
        raise ParameterError("correlation matrix must have a unit diagonal")
    try:
        np.linalg.cholesky(r)
    except np.linalg.LinAlgError as exc:
        raise ParameterError("correlation matrix is not positive definite") from exc
    r = 0.5 * (r + r.T)
    return tuple(tuple(float(v) for v in row) for row in r)


@dataclass(frozen=True)
class CopulaSpec:
    """An immutable, parameterized copula.

    Parameters
    ----------
    family : str
        One of ``independence``, ``gaussian``, ``student_t``, ``clayton``,
        ``gumbel`` or ``frank``.
    dim : int
        Dimension ``d``.
    corr : tuple of tuples, optional
        Correlation matrix for the elliptical families.
    df : float, optional
        Degrees of freedom for ``student_t``.
    theta : float, optional
        Generator parameter for the Archimedean families.

    Notes
    -----
    Prefer the named constructors (:meth:`gaussian`, :meth:`student_t`, ...)
    which validate and normalize parameters.  Gumbel and Frank densities are
    implemented for ``d = 2``; Clayton for any ``d``.
    """

    family: str
    dim: int = 2
    corr: tuple[tuple[float, ...], ...] | None = None
    df: float | None = None
    theta: float | None = None
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        fam = str(self.family).lower().replace("-", "_")
        if fam in ("t", "studentt", "student"):
            fam = "student_t"
        if fam not in FAMILIES:
            raise ParameterError(f"unknown copula family {self.family!r}")
        object.__setattr__(self, "family", fam)
        if int(self.dim) != self.dim or self.dim < 1:
            raise ParameterError("dim must be a positive integer")
        object.__setattr__(self, "dim", int(self.dim))

        if fam in _ELLIPTICAL:
            if self.corr is None:
                raise ParameterError(f"{fam} copula needs a correlation matrix")
            object.__setattr__(self, "corr", _as_corr(self.corr, self.dim))
        elif self.corr is not None:
            raise ParameterError(f"{fam} copula takes no correlation matrix")

        if fam == "student_t":
            if self.df is None or not np.isfinite(self.df) or self.df <= 0:
                raise ParameterError("student_t copula needs df > 0")
            object.__setattr__(self, "df", float(self.df))
        elif self.df is not None:
            raise ParameterError(f"{fam} copula takes no degrees of freedom")

        if fam in _ARCHIMEDEAN:
            if self.theta is None or not np.isfinite(self.theta):
                raise ParameterError(f"{fam} copula needs a finite theta")
            th = float(self.theta)
            if fam == "clayton" and th < 0:
                raise ParameterError("clayton theta must be >= 0")
            if fam == "gumbel" and th < 1:
                raise ParameterError("gumbel theta must be >= 1")
            if fam == "frank" and th == 0:
                raise ParameterError("frank theta must be non-zero")
            if fam == "frank" and th < 0 and self.dim != 2:
                raise ParameterError("negative frank theta is only valid for dim=2")
            if fam in ("gumbel", "frank") and self.dim != 2:
                raise ParameterError(f"{fam} density is implemented for dim=2 only")
            object.__setattr__(self, "theta", th)
        elif self.theta is not None:
            raise ParameterError(f"{fam} copula takes no theta")

    # constructors ---------------------------------------------------------
    @classmethod
    def independence(cls, dim: int = 2) -> "CopulaSpec":
        return cls("independence", dim)

    @classmethod
    def gaussian(cls, corr, dim: int | None = None) -> "CopulaSpec":
        """Gaussian copula from a correlation matrix or, for ``d = 2``, a scalar rho."""
        dim = dim if dim is not None else (2 if np.ndim(corr) == 0 else len(corr))
        return cls("gaussian", dim, corr=corr)

    @classmethod
    def student_t(cls, corr, df: float, dim: int | None = None) -> "CopulaSpec":
        dim = dim if dim is not None else (2 if np.ndim(corr) == 0 else len(corr))
        return cls("student_t", dim, corr=corr, df=df)

    @classmethod
    def clayton(cls, theta: float, dim: int = 2) -> "CopulaSpec":
        return cls("clayton", dim, theta=theta)

    @classmethod
    def gumbel(cls, theta: float) -> "CopulaSpec":
        return cls("gumbel", 2, theta=theta)

    @classmethod
    def frank(cls, theta: float) -> "CopulaSpec":
        return cls("frank", 2, theta=theta)

    # cached linear algebra ----------------------------------------------------
    def _linalg(self):
        if "linalg" not in self._cache:
            r = np.array(self.corr)
            chol = np.linalg.cholesky(r)
            inv = np.linalg.inv(r)
            inv = 0.5 * (inv + inv.T)
            logdet = 2.0 * np.sum(np.log(np.diag(chol)))
            self._cache["linalg"] = (r, chol, inv, logdet)
        return self._cache["linalg"]

    @property
    def corr_matrix(self) -> np.ndarray | None:
        return None if self.corr is None else np.array(self.corr)

    @property
    def is_independence(self) -> bool:
        if self.family == "independence":
            return True
        if self.family == "gaussian":
            return bool(np.all(np.array(self.corr) == np.eye(self.dim)))
        if self.family == "clayton":
            return self.theta == 0.0
        if self.family == "gumbel":
            return self.theta == 1.0
        return False

    def kendall_tau(self) -> float:
        """Population Kendall's tau of a bivariate copula."""
        if self.dim != 2:
            raise ParameterError("Kendall's tau is defined here for dim=2 only")
        if self.family == "independence":
            return 0.0
        if self.family in _ELLIPTICAL:
            return rho_to_tau(self.corr[0][1])
        return archimedean_param_to_tau(self.family, self.theta)

    def to_dict(self) -> dict:
        out: dict = {"family": self.family, "dim": self.dim}
        if self.corr is not None:
            if self.dim == 2:
                out["rho"] = self.corr[0][1]
            else:
                out["corr"] = [list(r) for r in self.corr]
        if self.df is not None:
            out["df"] = self.df
        if self.theta is not None:
            out["theta"] = self.theta
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "CopulaSpec":
        data = dict(data)
        family = data.pop("family")
        dim = int(data.pop("dim", 2))
        corr = data.pop("corr", None)
        if "rho" in data:
            rho = float(data.pop("rho"))
            if not -1.0 < rho < 1.0:
                raise ParameterError(f"rho must lie in (-1, 1), got {rho}")
            corr = rho
        spec = cls(family, dim, corr=corr, df=data.pop("df", None), theta=data.pop("theta", None))
        if data:
            raise ParameterError(f"unknown copula keys: {sorted(data)}")
        return spec

    # evaluation ----------------------------------------------------------
    def log_density(self, u, upper=None) -> np.ndarray:
        """Log copula density at ``u`` (shape ``(..., d)``)."""
        u, upper = _check_u(u, upper, self.dim)
        fam = self.family
        if fam == "independence":
            return np.zeros(u.shape[:-1])
        if fam in _ELLIPTICAL:
            return self._elliptical(u, upper, order=0)
        if fam == "clayton":
            return _clayton_logpdf(u, self.theta)
        if fam == "gumbel":
            return _gumbel_logpdf(u, upper, self.theta)
        return _frank_logpdf(u, self.theta)

    def grad_log_density(self, u, upper=None) -> np.ndarray:
        u, upper = _check_u(u, upper, self.dim)
        if self.family == "independence":
            return np.zeros(u.shape)
        if self.family in _ELLIPTICAL:
            return self._elliptical(u, upper, order=1)
        return _fd_grad(self, u, upper)

    def hess_log_density(self, u, upper=None) -> np.ndarray:
        u, upper = _check_u(u, upper, self.dim)
        if self.family == "independence":
            return np.zeros(u.shape + (self.dim,))
        if self.family in _ELLIPTICAL:
            return self._elliptical(u, upper, order=2)
        return _fd_hess(self, u, upper)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return sample_copula(self, n, rng)

    # elliptical core -------------------------------------------------------
    def _elliptical(self, u, upper, order):
        _, _, inv, logdet = self._linalg()
        d = self.dim
        if self.family == "gaussian":
            x = _ndtri_tail(u, upper)
            ax = inv @ x[..., None]
            ax = ax[..., 0]
            if order == 0:
                q = np.einsum("...i,...i->...", x, ax)
                return -0.5 * logdet - 0.5 * (q - np.einsum("...i,...i->...", x, x))
            gx = x - ax
            logf = -0.5 * _LOG_2PI - 0.5 * x * x
            dx = np.exp(-logf)  # du -> dx
            if order == 1:
                return gx * dx
            hx = np.eye(d) - inv
            hess = hx * dx[..., :, None] * dx[..., None, :]
            idx = np.arange(d)
            hess[..., idx, idx] += gx * x * dx * dx
            return hess

        nu = self.df
        x = _stdtrit_tail(nu, u, upper)
        ax = (inv @ x[..., None])[..., 0]
        q = np.einsum("...i,...i->...", x, ax)
        s = 1.0 + q / nu
        s1 = 1.0 + x * x / nu
        if order == 0:
            log_joint = (special.gammaln((nu + d) / 2) - special.gammaln(nu / 2)
                         - 0.5 * d * np.log(nu * np.pi) - 0.5 * logdet
                         - 0.5 * (nu + d) * np.log(s))
            log_marg = (special.gammaln((nu + 1) / 2) - special.gammaln(nu / 2)
                        - 0.5 * np.log(nu * np.pi) - 0.5 * (nu + 1) * np.log1p(x * x / nu))
            return log_joint - log_marg.sum(axis=-1)
        gx = -(nu + d) / nu * ax / s[..., None] + (nu + 1) / nu * x / s1
        log_t1 = (special.gammaln((nu + 1) / 2) - special.gammaln(nu / 2)
                  - 0.5 * np.log(nu * np.pi) - 0.5 * (nu + 1) * np.log1p(x * x / nu))
        dx = np.exp(-log_t1)
        if order == 1:
            return gx * dx
        ss = s[..., None, None]
        hx = -(nu + d) / nu * (inv / ss - (2.0 / nu) * ax[..., :, None] * ax[..., None, :] / ss**2)
        idx = np.arange(d)
        hx[..., idx, idx] += (nu + 1) / nu * (1.0 - x * x / nu) / s1**2
        hess = hx * dx[..., :, None] * dx[..., None, :]
        hess[..., idx, idx] += gx * (nu + 1) / nu * x / s1 * dx * dx
        return hess


# ---------------------------------------------------------------------------
# helpers


def _check_u(u, upper, dim):
    u = np.asarray(u, dtype=float)
    if u.shape[-1:] != (dim,):
        raise DomainError(f"u must have trailing dimension {dim}, got shape {u.shape}")
    if upper is None:
        upper = 1.0 - u
    else:
        upper = np.broadcast_to(np.asarray(upper, dtype=float), u.shape)
    # u may round to 1.0 when an exact upper tail is supplied
    if not (np.all(u > 0) and np.all(upper > 0) and np.all(u <= 1)):
        raise DomainError("u must lie strictly inside (0, 1)^d")
    return u, upper


def _ndtri_tail(u, upper):
    """Normal quantile using whichever tail is more precise."""
    lo = u <= 0.5
    return np.where(lo, special.ndtri(np.where(lo, u, 0.5)), -special.ndtri(np.where(lo, 0.5, upper)))


def _t_lower_quantile(nu, p):
    """Quantile of Student-t at lower-tail probability ``p <= 0.5``.

    Closed forms for nu in {1, 2, 4}; the nu = 4 case writes the cubic
    solution in angle form so neither tail nor the median loses precision.
    """
    if nu == 1.0:
        return -1.0 / np.tan(np.pi * p)
    if nu == 2.0:
        return -(1.0 - 2.0 * p) / np.sqrt(2.0 * p * (1.0 - p))
    if nu == 4.0:
        c = 2.0 * np.sqrt(p * (1.0 - p))
        th = np.arctan2(1.0 - 2.0 * p, c)
        return -2.0 * np.sqrt(2.0 * np.sin(2.0 * th / 3.0) * np.sin(th / 3.0) / c)
    return special.stdtrit(nu, p)


def _stdtrit_tail(nu, u, upper):
    lo = u <= 0.5
    p = np.where(lo, u, upper)
    x = _t_lower_quantile(nu, p)
    return np.where(lo, x, -x)


def _clayton_logpdf(u, theta):
    d = u.shape[-1]
    if theta == 0.0:
        return np.zeros(u.shape[:-1])
    logu = np.log(u)
    # u^-theta - 1 summed, computed as expm1 for accuracy near u = 1
    s = np.sum(np.expm1(-theta * logu), axis=-1)
    k = np.arange(d)
    return (np.sum(np.log1p(k * theta)) - (theta + 1.0) * logu.sum(axis=-1)
            - (d + 1.0 / theta) * np.log1p(s))


def _gumbel_logpdf(u, upper, theta):
    t = -np.log(u)
    # -log(u) for u near 1 is better computed from the upper tail
    t = np.where(u > 0.5, -np.log1p(-upper), t)
    logt = np.log(t)
    a = np.exp(theta * logt).sum(axis=-1)
    la = np.log(a)
    a1 = np.exp(la / theta)
    return (-a1 + t.sum(axis=-1) + (2.0 / theta - 2.0) * la
            + (theta - 1.0) * logt.sum(axis=-1) + np.log1p((theta - 1.0) / a1))


def _frank_logpdf(u, theta):
    a, b = u[..., 0], u[..., 1]
    em = -np.expm1(-theta)
    den = em - np.expm1(-theta * a) * np.expm1(-theta * b)
    return np.log(np.abs(theta * em)) - theta * (a + b) - 2.0 * np.log(np.abs(den))


def _fd_steps(u, upper):
    return np.maximum(1e-6, 1e-6 * np.minimum(u, upper))


def _fd_grad(spec, u, upper):
    h = np.minimum(_fd_steps(u, upper), 0.5 * np.minimum(u, upper))
    g = np.empty(u.shape)
    for j in range(spec.dim):
        e = np.zeros(spec.dim)
        e[j] = 1.0
        hj = h[..., j:j + 1]
        fp = spec.log_density(u + hj * e, upper - hj * e)
        fm = spec.log_density(u - hj * e, upper + hj * e)
        g[..., j] = (fp - fm) / (2.0 * h[..., j])
    return g


def _fd_hess(spec, u, upper):
    d = spec.dim
    h = np.minimum(_fd_steps(u, upper), 0.5 * np.minimum(u, upper))
    hess = np.empty(u.shape + (d,))
    f0 = spec.log_density(u, upper)
    eye = np.eye(d)
    for j in range(d):
        hj = h[..., j:j + 1] * eye[j]
        fp = spec.log_density(u + hj, upper - hj)
        fm = spec.log_density(u - hj, upper + hj)
        hess[..., j, j] = (fp - 2.0 * f0 + fm) / h[..., j] ** 2
        for k in range(j + 1, d):
            hk = h[..., k:k + 1] * eye[k]
            fpp = spec.log_density(u + hj + hk, upper - hj - hk)
            fpm = spec.log_density(u + hj - hk, upper - hj + hk)
            fmp = spec.log_density(u - hj + hk, upper + hj - hk)
            fmm = spec.log_density(u - hj - hk, upper + hj + hk)
            val = (fpp - fpm - fmp + fmm) / (4.0 * h[..., j] * h[..., k])
            hess[..., j, k] = hess[..., k, j] = val
    return hess


# ---------------------------------------------------------------------------
# functional API


def copula_log_density(spec: CopulaSpec, u, upper=None):
    """Log density ``log c(u)``.

    Parameters
    ----------
    spec : CopulaSpec
    u : array_like, shape (..., d)
        Points strictly inside the unit cube.
    upper : array_like, optional
        Exact values of ``1 - u``; supply these for points in the upper tail.

    Returns
    -------
    float or ndarray
        Scalar for a single point, otherwise an array of shape ``u.shape[:-1]``.

    Raises
    ------
    DomainError
        If any coordinate is not strictly inside ``(0, 1)``.
    """
    out = spec.log_density(u, upper)
    return float(out) if np.ndim(out) == 0 else out


def copula_log_density_grad(spec: CopulaSpec, u, upper=None) -> np.ndarray:
    """Gradient of ``log c`` with respect to ``u``."""
    return spec.grad_log_density(u, upper)


def copula_log_density_hessian(spec: CopulaSpec, u, upper=None) -> np.ndarray:
    """Hessian of ``log c`` with respect to ``u``."""
    return spec.hess_log_density(u, upper)


def sample_copula(spec: CopulaSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` i.i.d. points from the copula.

    Parameters
    ----------
    spec : CopulaSpec
    n : int
        Number of draws, at least 1.
    rng : numpy.random.Generator

    Returns
    -------
    ndarray, shape (n, d)
    """
    if int(n) != n or n < 1:
        raise ValueError("n must be a positive integer")
    n = int(n)
    d = spec.dim
    fam = spec.family
    if fam == "independence" or spec.is_independence:
        return rng.random((n, d))
    if fam in _ELLIPTICAL:
        _, chol, _, _ = spec._linalg()
        z = rng.standard_normal((n, d)) @ chol.T
        if fam == "gaussian":
            return special.ndtr(z)
        w = rng.chisquare(spec.df, size=n) / spec.df
        return special.stdtr(spec.df, z / np.sqrt(w)[:, None])
    th = spec.theta
    if fam == "clayton":
        v = rng.gamma(1.0 / th, 1.0, size=n)
        e = rng.standard_exponential((n, d))
        return np.exp(-np.log1p(e / v[:, None]) / th)
    if fam == "gumbel":
        alpha = 1.0 / th
        w = rng.uniform(0.0, np.pi, size=n)
        ex = rng.standard_exponential(n)
        # Chambers-Mallows-Stuck positive stable variate
        v = (np.sin(alpha * w) / np.sin(w) ** (1.0 / alpha)
             * (np.sin((1.0 - alpha) * w) / ex) ** ((1.0 - alpha) / alpha))
        e = rng.standard_exponential((n, d))
        return np.exp(-((e / v[:, None]) ** alpha))
    # frank, d = 2: conditional inversion
    a = rng.random(n)
    p = rng.random(n)
    g = np.expm1(-th)
    ea = np.exp(-th * a)
    b = -np.log1p(p * g / (ea * (1.0 - p) + p)) / th
    return np.column_stack([a, b])


# ---------------------------------------------------------------------------
# rank-correlation conversions


def rho_to_tau(rho):
    """Kendall's tau of an elliptical copula with correlation ``rho``."""
    r = np.asarray(rho, dtype=float)
    if np.any(~(np.abs(r) < 1.0)):
        raise DomainError("rho must lie in (-1, 1)")
    out = 2.0 * np.arcsin(r) / np.pi
    return float(out) if out.ndim == 0 else out


def tau_to_rho(tau):
    """Inverse of :func:`rho_to_tau`."""
    t = np.asarray(tau, dtype=float)
    if np.any(~(np.abs(t) < 1.0)):
        raise DomainError("tau must lie in (-1, 1)")
    out = np.sin(0.5 * np.pi * t)
    return float(out) if out.ndim == 0 else out


def _debye1(x: float) -> float:
    if x == 0.0:
        return 1.0
    val, _ = integrate.quad(lambda t: t / np.expm1(t) if t != 0.0 else 1.0, 0.0, x,
                            epsabs=1e-14, epsrel=1e-13, limit=200)
    return val / x


def archimedean_param_to_tau(family: str, param: float) -> float:
    """Kendall's tau for an Archimedean generator parameter.

    Clayton ``theta/(theta+2)``, Gumbel ``1 - 1/theta`` and Frank
    ``1 - 4/theta + 4 D_1(theta)/theta`` with ``D_1`` the Debye function.
    """
    fam = family.lower()
    p = float(param)
    if fam == "clayton":
        if p < 0 or not np.isfinite(p):
            raise DomainError("clayton parameter must be >= 0")
        return p / (p + 2.0)
    if fam == "gumbel":
        if p < 1 or not np.isfinite(p):
            raise DomainError("gumbel parameter must be >= 1")
        return 1.0 - 1.0 / p
    if fam == "frank":
        if p == 0 or not np.isfinite(p):
            raise DomainError("frank parameter must be finite and non-zero")
        return 1.0 - 4.0 / p + 4.0 * _debye1(p) / p
    raise DomainError(f"{family!r} is not an Archimedean family")


def archimedean_tau_to_param(family: str, tau: float) -> float:
    """Generator parameter giving Kendall's tau ``tau``."""
    fam = family.lower()
    t = float(tau)
    if fam == "clayton":
        if not 0 <= t < 1:
            raise DomainError("clayton tau must lie in [0, 1)")
        return 2.0 * t / (1.0 - t)
    if fam == "gumbel":
        if not 0 <= t < 1:
            raise DomainError("gumbel tau must lie in [0, 1)")
        return 1.0 / (1.0 - t)
    if fam == "frank":
        if not -1 < t < 1 or t == 0:
            raise DomainError("frank tau must lie in (-1, 1) and be non-zero")
        lo, hi = (1e-8, 1.0) if t > 0 else (-1.0, -1e-8)
        while archimedean_param_to_tau("frank", hi if t > 0 else lo) * np.sign(t) < abs(t):
            if t > 0:
                hi *= 2.0
            else:
                lo *= 2.0
        return optimize.brentq(lambda p: archimedean_param_to_tau("frank", p) - t, lo, hi, xtol=1e-14)
    raise DomainError(f"{family!r} is not an Archimedean family")


# ---------------------------------------------------------------------------
# stationary points of log c2 - log c1


@dataclass(frozen=True)
class StationaryPoint:
    u: tuple[float, float]
    kind: str  # "max", "min" or "saddle"
    eigenvalues: tuple[float, float]


@dataclass(frozen=True)
class StationaryPoints:
    """Result of :func:`classify_stationary_points`."""

    points: tuple[StationaryPoint, ...]
    degenerate: bool
    seeds: int
    skipped: int

    def __iter__(self):
        return iter(self.points)

    def __len__(self):
        return len(self.points)

    def nearest(self, u: Sequence[float]) -> StationaryPoint:
        u = np.asarray(u, dtype=float)
        return min(self.points, key=lambda p: float(np.linalg.norm(np.asarray(p.u) - u)))


def classify_stationary_points(c1: CopulaSpec, c2: CopulaSpec, grid: int = 101,
                               max_iter: int = 60, tol: float = 1e-10) -> StationaryPoints:
    """Locate and classify stationary points of ``log c2(u) - log c1(u)``.

    Newton's method on the gradient is started from every node of a
    ``grid x grid`` lattice of interior seeds; converged roots are merged
    when within ``1e-6`` of each other and classified by the signs of the
    Hessian eigenvalues.

    Parameters
    ----------
    c1, c2 : CopulaSpec
        Bivariate copulas.
    grid : int
        Seeds per axis.

    Returns
    -------
    StationaryPoints
        ``degenerate`` is set when the two copulas coincide, in which case
        every point is stationary and no list is returned.
    """
    if c1.dim != 2 or c2.dim != 2:
        raise DomainError("stationary-point search is implemented for d=2 only")
    axis = np.linspace(0.0, 1.0, grid + 2)[1:-1]
    seeds = np.stack(np.meshgrid(axis, axis, indexing="ij"), axis=-1).reshape(-1, 2)
    if c1 == c2 or (c1.is_independence and c2.is_independence):
        return StationaryPoints((), True, len(seeds), 0)

    def grad(u):
        return c2.grad_log_density(u) - c1.grad_log_density(u)

    def hess(u):
        return c2.hess_log_density(u) - c1.hess_log_density(u)

    u = seeds.copy()
    active = np.ones(len(u), dtype=bool)
    done = np.zeros(len(u), dtype=bool)
    for _ in range(max_iter):
        idx = np.flatnonzero(active & ~done)
        if idx.size == 0:
            break
        uu = u[idx]
        g = grad(uu)
        h = hess(uu)
        det = h[:, 0, 0] * h[:, 1, 1] - h[:, 0, 1] * h[:, 1, 0]
        ok = np.isfinite(det) & (np.abs(det) > 1e-300) & np.all(np.isfinite(g), axis=1)
        step = np.zeros_like(uu)
        step[ok, 0] = -(h[ok, 1, 1] * g[ok, 0] - h[ok, 0, 1] * g[ok, 1]) / det[ok]
        step[ok, 1] = -(-h[ok, 1, 0] * g[ok, 0] + h[ok, 0, 0] * g[ok, 1]) / det[ok]
        active[idx[~ok]] = False
        # keep iterates inside the open square by halving offending steps
        t = np.ones(len(idx))
        for _h in range(60):
            nxt = uu + t[:, None] * step
            bad = ~np.all((nxt > 1e-12) & (nxt < 1.0 - 1e-12), axis=1)
            if not bad.any():
                break
            t[bad] *= 0.5
        u[idx] = uu + t[:, None] * step
        small = np.max(np.abs(t[:, None] * step), axis=1) < tol
        done[idx[ok & small]] = True
    skipped = int(np.sum(~done))
    if skipped:
        logger.debug("stationary-point search: %d of %d seeds did not converge", skipped, len(u))
    roots = u[done]
    if roots.size:
        roots = roots[np.max(np.abs(grad(roots)), axis=1) < 1e-6 * (1 + np.max(np.abs(hess(roots)).reshape(len(roots), -1), axis=1))]
    # deduplicate within 1e-6 (greedy, deterministic order)
    keep: list[np.ndarray] = []
    for r in roots[np.lexsort((roots[:, 1], roots[:, 0]))] if len(roots) else []:
        if not any(np.max(np.abs(r - k)) < 1e-6 for k in keep):
            keep.append(r)
    points = []
    for r in keep:
        ev = np.linalg.eigvalsh(hess(r[None, :])[0])
        if np.all(ev < 0):
            kind = "max"
        elif np.all(ev > 0):
            kind = "min"
        else:
            kind = "saddle"
        points.append(StationaryPoint((float(r[0]), float(r[1])), kind, (float(ev[0]), float(ev[1]))))
    return StationaryPoints(tuple(points), False, len(seeds), skipped)
