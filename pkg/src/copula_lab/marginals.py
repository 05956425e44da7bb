"""Marginal priors and copula-joined priors.

A :class:`CopulaPrior` has density ``prod_j f_j(theta_j) * c(F_1(theta_1), ...)``.
Upper-tail probabilities are carried alongside ``F_j`` so that the copula sees
accurate values of ``1 - F_j`` far into the right tail.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import optimize, special

from .copulas import CopulaSpec
from .errors import FitError, ParameterError

__all__ = [
    "MarginalPrior",
    "CopulaPrior",
    "QuartileFit",
    "prior_log_pdf",
    "prior_sample",
    "fit_beta_from_quartiles",
]

logger = logging.getLogger(__name__)

_LOG_2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True)
class MarginalPrior:
    """A univariate prior: ``beta(a, b)``, ``gamma(shape, rate)`` or ``normal(mean, variance)``.

    The two parameters are stored positionally in ``a`` and ``b``.
    """

    family: str
    a: float
    b: float

    def __post_init__(self):
        fam = self.family.lower()
        if fam not in ("beta", "gamma", "normal"):
            raise ParameterError(f"unknown marginal family {self.family!r}")
        a, b = float(self.a), float(self.b)
        if not (np.isfinite(a) and np.isfinite(b)):
            raise ParameterError("marginal parameters must be finite")
        if fam in ("beta", "gamma") and (a <= 0 or b <= 0):
            raise ParameterError(f"{fam} parameters must be positive")
        if fam == "normal" and b <= 0:
            raise ParameterError("normal variance must be positive")
        object.__setattr__(self, "family", fam)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @classmethod
    def beta(cls, a: float, b: float) -> "MarginalPrior":
        return cls("beta", a, b)

    @classmethod
    def gamma(cls, shape: float, rate: float) -> "MarginalPrior":
        return cls("gamma", shape, rate)

    @classmethod
    def normal(cls, mean: float = 0.0, variance: float = 1.0) -> "MarginalPrior":
        return cls("normal", mean, variance)

    # -- support -------------------------------------------------------
    @property
    def support(self) -> tuple[float, float]:
        return {"beta": (0.0, 1.0), "gamma": (0.0, np.inf), "normal": (-np.inf, np.inf)}[self.family]

    def in_support(self, x) -> np.ndarray:
        lo, hi = self.support
        x = np.asarray(x, dtype=float)
        if self.family == "normal":
            return np.isfinite(x)
        return (x > lo) & (x < hi)

    @property
    def mean(self) -> float:
        if self.family == "beta":
            return self.a / (self.a + self.b)
        if self.family == "gamma":
            return self.a / self.b
        return self.a

    @property
    def variance(self) -> float:
        if self.family == "beta":
            s = self.a + self.b
            return self.a * self.b / (s * s * (s + 1.0))
        if self.family == "gamma":
            return self.a / self.b**2
        return self.b

    # -- densities -------------------------------------------------------
    def logpdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        ok = self.in_support(x)
        xs = np.where(ok, x, self.mean)
        a, b = self.a, self.b
        with np.errstate(divide="ignore"):
            if self.family == "beta":
                val = (special.xlogy(a - 1.0, xs) + special.xlog1py(b - 1.0, -xs) - special.betaln(a, b))
            elif self.family == "gamma":
                val = a * np.log(b) + special.xlogy(a - 1.0, xs) - b * xs - special.gammaln(a)
            else:
                val = -0.5 * (_LOG_2PI + np.log(b)) - 0.5 * (xs - a) ** 2 / b
        return np.where(ok, val, -np.inf)

    def pdf(self, x) -> np.ndarray:
        return np.exp(self.logpdf(x))

    def dlogpdf(self, x) -> np.ndarray:
        """First derivative of the log density."""
        x = np.asarray(x, dtype=float)
        a, b = self.a, self.b
        if self.family == "beta":
            return (a - 1.0) / x - (b - 1.0) / (1.0 - x)
        if self.family == "gamma":
            return (a - 1.0) / x - b
        return -(x - a) / b

    def d2logpdf(self, x) -> np.ndarray:
        """Second derivative of the log density."""
        x = np.asarray(x, dtype=float)
        a, b = self.a, self.b
        if self.family == "beta":
            return -(a - 1.0) / x**2 - (b - 1.0) / (1.0 - x) ** 2
        if self.family == "gamma":
            return -(a - 1.0) / x**2
        return np.full_like(x, -1.0 / b)

    def cdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.family == "beta":
            return special.betainc(self.a, self.b, np.clip(x, 0.0, 1.0))
        if self.family == "gamma":
            return special.gammainc(self.a, self.b * np.maximum(x, 0.0))
        return special.ndtr((x - self.a) / np.sqrt(self.b))

    def sf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.family == "beta":
            return special.betainc(self.b, self.a, 1.0 - np.clip(x, 0.0, 1.0))
        if self.family == "gamma":
            return special.gammaincc(self.a, self.b * np.maximum(x, 0.0))
        return special.ndtr(-(x - self.a) / np.sqrt(self.b))

    def cdf_sf(self, x) -> tuple[np.ndarray, np.ndarray]:
        """``(cdf, sf)`` with each tail evaluated directly only where it is the smaller one."""
        x = np.asarray(x, dtype=float)
        c = np.array(self.cdf(x), dtype=float)
        s = np.array(1.0 - c)
        hi = c > 0.5
        if np.any(hi):
            xh = x[hi]
            if self.family == "beta":
                # I_x(a, b) = 1 - I_{1-x}(b, a); 1 - x is exact for x > 1/2
                s[hi] = special.betainc(self.b, self.a, 1.0 - np.clip(xh, 0.0, 1.0))
            else:
                s[hi] = self.sf(xh)
        return c, s

    def ppf(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        if self.family == "beta":
            return special.betaincinv(self.a, self.b, q)
        if self.family == "gamma":
            return special.gammaincinv(self.a, q) / self.b
        return self.a + np.sqrt(self.b) * special.ndtri(q)

    def isf(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        if self.family == "beta":
            return special.betainccinv(self.a, self.b, q)
        if self.family == "gamma":
            return special.gammainccinv(self.a, q) / self.b
        return self.a - np.sqrt(self.b) * special.ndtri(q)

    def quantile(self, u, upper=None) -> np.ndarray:
        """Quantile using the lower tail below the median and ``upper`` above it."""
        u = np.asarray(u, dtype=float)
        upper = 1.0 - u if upper is None else np.asarray(upper, dtype=float)
        lo = u <= 0.5
        return np.where(lo, self.ppf(np.where(lo, u, 0.5)), self.isf(np.where(lo, 0.5, upper)))

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if self.family == "beta":
            return rng.beta(self.a, self.b, size=n)
        if self.family == "gamma":
            return rng.gamma(self.a, 1.0 / self.b, size=n)
        return rng.normal(self.a, np.sqrt(self.b), size=n)

    def to_dict(self) -> dict:
        keys = {"beta": ("a", "b"), "gamma": ("shape", "rate"), "normal": ("mean", "variance")}[self.family]
        return {"family": self.family, keys[0]: self.a, keys[1]: self.b}

    @classmethod
    def from_dict(cls, data: dict) -> "MarginalPrior":
        data = dict(data)
        fam = str(data.pop("family")).lower()
        keys = {"beta": ("a", "b"), "gamma": ("shape", "rate"), "normal": ("mean", "variance")}.get(fam)
        if keys is None:
            raise ParameterError(f"unknown marginal family {fam!r}")
        missing = [k for k in keys if k not in data]
        if missing:
            raise ParameterError(f"{fam} marginal is missing {missing}")
        out = cls(fam, float(data.pop(keys[0])), float(data.pop(keys[1])))
        if data:
            raise ParameterError(f"unknown keys for {fam} marginal: {sorted(data)}")
        return out


@dataclass(frozen=True)
class CopulaPrior:
    """Marginals joined by a copula.

    Parameters
    ----------
    marginals : sequence of MarginalPrior
    copula : CopulaSpec
        Must have ``dim == len(marginals)``.
    """

    marginals: tuple[MarginalPrior, ...]
    copula: CopulaSpec

    def __post_init__(self):
        object.__setattr__(self, "marginals", tuple(self.marginals))
        if self.copula.dim != len(self.marginals):
            raise ParameterError("copula dimension must match the number of marginals")

    @property
    def dim(self) -> int:
        return len(self.marginals)

    def with_copula(self, copula: CopulaSpec) -> "CopulaPrior":
        return CopulaPrior(self.marginals, copula)

    def independence(self) -> "CopulaPrior":
        return CopulaPrior(self.marginals, CopulaSpec.independence(self.dim))

    @property
    def mean(self) -> np.ndarray:
        return np.array([m.mean for m in self.marginals])

    def in_support(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        ok = np.ones(theta.shape[:-1], dtype=bool)
        for j, m in enumerate(self.marginals):
            ok &= m.in_support(theta[..., j])
        return ok

    def to_uniform(self, theta) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(F(theta), 1 - F(theta))`` with both tails computed directly."""
        theta = np.asarray(theta, dtype=float)
        u = np.empty(theta.shape)
        up = np.empty(theta.shape)
        for j, m in enumerate(self.marginals):
            u[..., j], up[..., j] = m.cdf_sf(theta[..., j])
        return u, up

    def _copula_ok(self, u, up):
        return np.all((u > 0) & (up > 0), axis=-1)

    def log_pdf(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        out = np.zeros(theta.shape[:-1])
        for j, m in enumerate(self.marginals):
            out = out + m.logpdf(theta[..., j])
        if self.copula.is_independence:
            return out
        ok = np.isfinite(out)
        if np.any(ok):
            u, up = self.to_uniform(theta[ok])
            inside = self._copula_ok(u, up)
            lc = np.full(u.shape[:-1], -np.inf)
            if np.any(inside):
                lc[inside] = self.copula.log_density(u[inside], up[inside])
            out = out.copy() if np.ndim(out) else np.array(out)
            out[ok] = out[ok] + lc
        return out

    def _pieces(self, theta):
        u, up = self.to_uniform(theta)
        f = np.stack([m.pdf(theta[..., j]) for j, m in enumerate(self.marginals)], axis=-1)
        dl = np.stack([m.dlogpdf(theta[..., j]) for j, m in enumerate(self.marginals)], axis=-1)
        d2l = np.stack([m.d2logpdf(theta[..., j]) for j, m in enumerate(self.marginals)], axis=-1)
        return u, up, f, dl, d2l

    def copula_grad_theta(self, theta) -> np.ndarray:
        """Gradient of ``log c(F(theta))`` in ``theta`` via the chain rule."""
        theta = np.asarray(theta, dtype=float)
        u, up = self.to_uniform(theta)
        f = np.stack([m.pdf(theta[..., j]) for j, m in enumerate(self.marginals)], axis=-1)
        return f * self.copula.grad_log_density(u, up)

    def grad_log_pdf(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        u, up, f, dl, _ = self._pieces(theta)
        return dl + f * self.copula.grad_log_density(u, up)

    def hess_log_pdf(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        u, up, f, dl, d2l = self._pieces(theta)
        gu = self.copula.grad_log_density(u, up)
        hu = self.copula.hess_log_density(u, up)
        h = hu * f[..., :, None] * f[..., None, :]
        idx = np.arange(self.dim)
        h[..., idx, idx] += d2l + f * dl * gu
        return h

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        u = self.copula.sample(n, rng)
        out = np.empty(u.shape)
        for j, m in enumerate(self.marginals):
            out[:, j] = m.quantile(u[:, j])
        return out

    def to_dict(self) -> dict:
        return {"marginals": [m.to_dict() for m in self.marginals], "copula": self.copula.to_dict()}

    @classmethod
    def from_dict(cls, data: dict) -> "CopulaPrior":
        margs = tuple(MarginalPrior.from_dict(m) for m in data["marginals"])
        cop = data.get("copula", {"family": "independence"})
        cop = dict(cop)
        cop.setdefault("dim", len(margs))
        return cls(margs, CopulaSpec.from_dict(cop))


def prior_log_pdf(prior: CopulaPrior, theta):
    """Log prior density; ``-inf`` outside the product of marginal supports."""
    out = prior.log_pdf(theta)
    return float(out) if np.ndim(out) == 0 else out


def prior_sample(prior: CopulaPrior, n: int, rng: np.random.Generator) -> np.ndarray:
    """Copula draw followed by componentwise quantile transforms."""
    if int(n) != n or n < 1:
        raise ValueError("n must be a positive integer")
    return prior.sample(int(n), rng)


# ---------------------------------------------------------------------------
# quartile elicitation


@dataclass(frozen=True)
class QuartileFit:
    prior: MarginalPrior
    residual: float
    nfev: int


def fit_beta_from_quartiles(q25: float, q50: float, q75: float) -> QuartileFit:
    """Least-squares beta fit to elicited quartiles.

    Minimizes ``sum_k (F(q_k; a, b) - k/4)^2`` with equal weights, starting
    from a moment match (median as mean, IQR/1.349 as standard deviation).
    The search runs on ``log a, log b`` with box bounds.

    Returns
    -------
    QuartileFit
        The fitted prior and the final sum of squared residuals.
    """
    q = np.array([q25, q50, q75], dtype=float)
    if not (0.0 < q[0] < q[1] < q[2] < 1.0):
        raise ValueError("quartiles must satisfy 0 < q25 < q50 < q75 < 1")
    target = np.array([0.25, 0.5, 0.75])
    m = q[1]
    sd = (q[2] - q[0]) / 1.349
    kappa = m * (1.0 - m) / sd**2 - 1.0
    if not np.isfinite(kappa) or kappa <= 0.5:
        kappa = 2.0
    x0 = np.log([m * kappa, (1.0 - m) * kappa])

    def resid(x):
        a, b = np.exp(x)
        return special.betainc(a, b, q) - target

    lo, hi = np.log(1e-4), np.log(1e6)
    try:
        res = optimize.least_squares(resid, np.clip(x0, lo + 1, hi - 1), bounds=(lo, hi),
                                     method="trf", xtol=1e-15, ftol=1e-15, gtol=1e-12, max_nfev=2000)
    except Exception as exc:  # pragma: no cover - scipy internal failure
        raise FitError(f"beta quartile fit failed: {exc}", best=np.exp(x0)) from exc
    a, b = np.exp(res.x)
    if not res.success:
        raise FitError(f"beta quartile fit did not converge: {res.message}", best=(a, b))
    ssr = float(np.sum(res.fun**2))
    logger.debug("beta quartile fit a=%.6g b=%.6g ssr=%.3g", a, b, ssr)
    return QuartileFit(MarginalPrior.beta(a, b), ssr, int(res.nfev))
