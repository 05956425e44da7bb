"""Statistical models: likelihoods, data generators and Fisher information.

Each model reduces data to sufficient statistics where they exist, which keeps
studies at ``n = 10^5`` as cheap as those at ``n = 10``.  Parameter arrays may
carry leading batch dimensions, ``theta.shape == (..., d)``, except for the
exponential-pair model whose likelihood does not factor.
"""
from __future__ import annotations

import abc
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy import special

from .copulas import CopulaSpec
from .errors import DomainError, ParameterError, SingularInformationError
from .marginals import CopulaPrior

__all__ = [
    "Model",
    "MultinomialConditional",
    "NormalMeanVar",
    "GammaShapeRate",
    "LinRegKnownVar",
    "ExpPairCopula",
    "MultinomialData",
    "NormalData",
    "GammaData",
    "RegressionData",
    "ExpPairData",
    "FisherEstimate",
    "z_from_p",
    "p_from_z",
    "log_likelihood",
    "log_likelihood_grad",
    "log_likelihood_hessian",
    "inverse_fisher",
    "numeric_fisher_oracle",
    "generate_data",
    "prior_predictive_generate",
    "gamma_implied_correlation",
    "model_from_dict",
]

_LOG_2PI = np.log(2.0 * np.pi)


# ---------------------------------------------------------------------------
# conditional multinomial reparameterization


def z_from_p(p) -> np.ndarray:
    """Conditional probabilities ``Z_v = p_v / (1 - sum_{t<v} p_t)`` for ``v < w``.

    Examples
    --------
    >>> z_from_p([0.2, 0.3, 0.5])
    array([0.2  , 0.375])
    """
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size < 2:
        raise DomainError("p must be a vector with at least two entries")
    if np.any(~(p > 0)):
        raise DomainError("probabilities must be strictly positive")
    if abs(p.sum() - 1.0) > 1e-12:
        raise DomainError("probabilities must sum to 1")
    # remaining mass from a reverse cumulative sum avoids 1 - (sum) cancellation
    remaining = np.cumsum(p[::-1])[::-1]
    return p[:-1] / remaining[:-1]


def p_from_z(z) -> np.ndarray:
    """Inverse of :func:`z_from_p`: ``p_v = Z_v prod_{t<v} (1 - Z_t)``."""
    z = np.asarray(z, dtype=float)
    if z.ndim != 1 or z.size < 1:
        raise DomainError("Z must be a non-empty vector")
    if np.any(~((z > 0) & (z < 1))):
        raise DomainError("Z components must lie strictly inside (0, 1)")
    stay = np.concatenate([[1.0], np.cumprod(1.0 - z)])
    return np.append(z * stay[:-1], stay[-1])


# ---------------------------------------------------------------------------
# datasets


@dataclass(frozen=True)
class MultinomialData:
    counts: tuple[int, ...]

    def __post_init__(self):
        c = tuple(int(v) for v in self.counts)
        if any(v < 0 for v in c):
            raise DomainError("counts must be non-negative")
        object.__setattr__(self, "counts", c)

    @property
    def n(self) -> int:
        return sum(self.counts)


@dataclass(frozen=True)
class NormalData:
    n: int
    sum_y: float
    sum_y2: float


@dataclass(frozen=True)
class GammaData:
    n: int
    sum_y: float
    sum_log_y: float


@dataclass(frozen=True, eq=False)
class RegressionData:
    n: int
    xtx: np.ndarray
    xty: np.ndarray
    yty: float

    def __post_init__(self):
        xtx = np.asarray(self.xtx, dtype=float)
        if not np.allclose(xtx, xtx.T, rtol=1e-12, atol=1e-12 * max(1.0, np.abs(xtx).max())):
            raise DomainError("XtX must be symmetric")
        object.__setattr__(self, "xtx", 0.5 * (xtx + xtx.T))
        object.__setattr__(self, "xty", np.asarray(self.xty, dtype=float))

    @classmethod
    def from_raw(cls, x, y) -> "RegressionData":
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return cls(len(y), x.T @ x, x.T @ y, float(y @ y))


@dataclass(frozen=True, eq=False)
class ExpPairData:
    y: np.ndarray
    y_star: np.ndarray

    @property
    def n(self) -> int:
        return len(self.y)


# ---------------------------------------------------------------------------
# models


class Model(abc.ABC):
    """Common interface for the statistical models."""

    name: str = "model"

    @property
    @abc.abstractmethod
    def dim(self) -> int: ...

    @property
    def param_names(self) -> tuple[str, ...]:
        return tuple(f"theta{j + 1}" for j in range(self.dim))

    @abc.abstractmethod
    def in_interior(self, theta) -> np.ndarray: ...

    def check_interior(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if theta.shape[-1:] != (self.dim,):
            raise DomainError(f"parameter must have {self.dim} components")
        if not np.all(self.in_interior(theta)):
            raise DomainError(f"{self.name}: parameter {theta} is not in the interior of the parameter space")
        return theta

    @abc.abstractmethod
    def log_likelihood(self, theta, data) -> np.ndarray: ...

    @abc.abstractmethod
    def grad(self, theta, data) -> np.ndarray: ...

    @abc.abstractmethod
    def hessian(self, theta, data) -> np.ndarray: ...

    @abc.abstractmethod
    def generate(self, theta, n: int, rng: np.random.Generator): ...

    @abc.abstractmethod
    def simulate_raw(self, theta, n: int, rng: np.random.Generator) -> Any:
        """Raw per-observation draws for the numeric Fisher oracle."""

    @abc.abstractmethod
    def score_obs(self, theta, raw) -> np.ndarray:
        """Per-observation score, shape ``(n, d)``."""

    def hessian_obs_mean(self, theta, raw) -> np.ndarray:
        """Average per-observation Hessian by central differences of the score."""
        theta = np.asarray(theta, dtype=float)
        d = self.dim
        out = np.empty((d, d))
        for k in range(d):
            h = 1e-5 * max(1.0, abs(theta[k]))
            e = np.zeros(d)
            e[k] = h
            out[:, k] = (self.score_obs(theta + e, raw).mean(0) - self.score_obs(theta - e, raw).mean(0)) / (2 * h)
        return 0.5 * (out + out.T)

    def inverse_fisher(self, theta) -> np.ndarray:
        raise NotImplementedError

    def to_dict(self) -> dict:
        return {"kind": self.name}


def _mask(theta, ok, val):
    return np.where(ok, val, -np.inf)


@dataclass(frozen=True)
class MultinomialConditional(Model):
    """Multinomial with ``w`` categories parameterized by conditional probabilities ``Z``."""

    categories: int = 3
    name: str = field(default="multinomial", init=False)

    def __post_init__(self):
        if self.categories < 2:
            raise ParameterError("need at least two categories")

    @property
    def dim(self) -> int:
        return self.categories - 1

    @property
    def param_names(self):
        return tuple(f"Z{j + 1}" for j in range(self.dim))

    def in_interior(self, theta):
        theta = np.asarray(theta, dtype=float)
        return np.all((theta > 0) & (theta < 1), axis=-1)

    def _split(self, data: MultinomialData):
        c = np.asarray(data.counts, dtype=float)
        if c.size != self.categories:
            raise DomainError(f"expected {self.categories} counts, got {c.size}")
        later = np.cumsum(c[::-1])[::-1][1:]  # sum_{t>v} n_t
        return c[:-1], later

    def log_likelihood(self, theta, data):
        theta = np.asarray(theta, dtype=float)
        nv, mv = self._split(data)
        ok = self.in_interior(theta)
        z = np.where(ok[..., None], theta, 0.5)
        val = np.sum(special.xlogy(nv, z) + special.xlog1py(mv, -z), axis=-1)
        return _mask(ok, ok, val)

    def grad(self, theta, data):
        z = np.asarray(theta, dtype=float)
        nv, mv = self._split(data)
        return nv / z - mv / (1.0 - z)

    def hessian(self, theta, data):
        z = np.asarray(theta, dtype=float)
        nv, mv = self._split(data)
        diag = -nv / z**2 - mv / (1.0 - z) ** 2
        return diag[..., :, None] * np.eye(self.dim)

    def mle(self, data: MultinomialData) -> np.ndarray:
        c = np.asarray(data.counts, dtype=float)
        remaining = np.cumsum(c[::-1])[::-1]
        return c[:-1] / remaining[:-1]

    def inverse_fisher(self, theta):
        z = self.check_interior(theta)
        reach = np.concatenate([[1.0], np.cumprod(1.0 - z)[:-1]])
        return np.diag(z * (1.0 - z) / reach)

    def generate(self, theta, n, rng):
        z = self.check_interior(theta)
        return MultinomialData(tuple(rng.multinomial(int(n), p_from_z(z))))

    def simulate_raw(self, theta, n, rng):
        z = self.check_interior(theta)
        return rng.choice(self.categories, size=int(n), p=p_from_z(z))

    def score_obs(self, theta, raw):
        z = np.asarray(theta, dtype=float)
        cat = np.asarray(raw)[:, None]
        v = np.arange(self.dim)[None, :]
        return np.where(cat == v, 1.0 / z, np.where(cat > v, -1.0 / (1.0 - z), 0.0))

    def to_dict(self):
        return {"kind": self.name, "categories": self.categories}


@dataclass(frozen=True)
class NormalMeanVar(Model):
    """Normal model with parameters ``(mu, sigma^2)``."""

    name: str = field(default="normal", init=False)

    @property
    def dim(self):
        return 2

    @property
    def param_names(self):
        return ("mu", "sigma2")

    def in_interior(self, theta):
        theta = np.asarray(theta, dtype=float)
        return np.isfinite(theta[..., 0]) & (theta[..., 1] > 0) & np.isfinite(theta[..., 1])

    def log_likelihood(self, theta, data: NormalData):
        theta = np.asarray(theta, dtype=float)
        ok = self.in_interior(theta)
        mu = theta[..., 0]
        s2 = np.where(ok, theta[..., 1], 1.0)
        ss = data.sum_y2 - 2.0 * mu * data.sum_y + data.n * mu * mu
        return _mask(ok, ok, -0.5 * data.n * (_LOG_2PI + np.log(s2)) - 0.5 * ss / s2)

    def grad(self, theta, data):
        theta = np.asarray(theta, dtype=float)
        mu, s2 = theta[..., 0], theta[..., 1]
        ss = data.sum_y2 - 2.0 * mu * data.sum_y + data.n * mu * mu
        return np.stack([(data.sum_y - data.n * mu) / s2, -0.5 * data.n / s2 + 0.5 * ss / s2**2], axis=-1)

    def hessian(self, theta, data):
        theta = np.asarray(theta, dtype=float)
        mu, s2 = theta[..., 0], theta[..., 1]
        ss = data.sum_y2 - 2.0 * mu * data.sum_y + data.n * mu * mu
        hmm = -data.n / s2
        hms = -(data.sum_y - data.n * mu) / s2**2
        hss = 0.5 * data.n / s2**2 - ss / s2**3
        return np.stack([np.stack([hmm * np.ones_like(hss), hms], -1), np.stack([hms, hss], -1)], -2)

    def inverse_fisher(self, theta):
        theta = self.check_interior(theta)
        s2 = theta[1]
        return np.diag([s2, 2.0 * s2**2])

    def generate(self, theta, n, rng):
        y = self.simulate_raw(theta, n, rng)
        return NormalData(int(n), float(y.sum()), float(y @ y))

    def simulate_raw(self, theta, n, rng):
        mu, s2 = self.check_interior(theta)
        return rng.normal(mu, np.sqrt(s2), size=int(n))

    def score_obs(self, theta, raw):
        mu, s2 = np.asarray(theta, dtype=float)
        r = np.asarray(raw) - mu
        return np.column_stack([r / s2, -0.5 / s2 + 0.5 * r * r / s2**2])


def gamma_implied_correlation(alpha) -> np.ndarray:
    """Correlation ``1/sqrt(alpha * trigamma(alpha))`` of the gamma inverse Fisher information."""
    a = np.asarray(alpha, dtype=float)
    return 1.0 / np.sqrt(a * special.polygamma(1, a))


@dataclass(frozen=True)
class GammaShapeRate(Model):
    """Gamma model with shape ``alpha`` and rate ``beta``."""

    name: str = field(default="gamma", init=False)

    @property
    def dim(self):
        return 2

    @property
    def param_names(self):
        return ("alpha", "beta")

    def in_interior(self, theta):
        theta = np.asarray(theta, dtype=float)
        return np.all((theta > 0) & np.isfinite(theta), axis=-1)

    def log_likelihood(self, theta, data: GammaData):
        theta = np.asarray(theta, dtype=float)
        ok = self.in_interior(theta)
        a = np.where(ok, theta[..., 0], 1.0)
        b = np.where(ok, theta[..., 1], 1.0)
        val = data.n * (a * np.log(b) - special.gammaln(a)) + (a - 1.0) * data.sum_log_y - b * data.sum_y
        return _mask(ok, ok, val)

    def grad(self, theta, data):
        theta = np.asarray(theta, dtype=float)
        a, b = theta[..., 0], theta[..., 1]
        return np.stack([data.n * (np.log(b) - special.digamma(a)) + data.sum_log_y,
                         data.n * a / b - data.sum_y], axis=-1)

    def hessian(self, theta, data):
        theta = np.asarray(theta, dtype=float)
        a, b = theta[..., 0], theta[..., 1]
        haa = -data.n * special.polygamma(1, a)
        hab = data.n / b
        hbb = -data.n * a / b**2
        return np.stack([np.stack([haa, hab], -1), np.stack([hab, hbb], -1)], -2)

    def fisher(self, theta) -> np.ndarray:
        a, b = self.check_interior(theta)
        return np.array([[special.polygamma(1, a), -1.0 / b], [-1.0 / b, a / b**2]])

    def inverse_fisher(self, theta):
        info = self.fisher(theta)
        return np.linalg.inv(info)

    def generate(self, theta, n, rng):
        y = self.simulate_raw(theta, n, rng)
        return GammaData(int(n), float(y.sum()), float(np.log(y).sum()))

    def simulate_raw(self, theta, n, rng):
        a, b = self.check_interior(theta)
        y = rng.gamma(a, 1.0 / b, size=int(n))
        return y

    def score_obs(self, theta, raw):
        a, b = np.asarray(theta, dtype=float)
        y = np.asarray(raw)
        return np.column_stack([np.log(b) - special.digamma(a) + np.log(y), a / b - y])


@dataclass(frozen=True, eq=False)
class LinRegKnownVar(Model):
    """Linear regression ``y = x^T beta + eps`` with known noise variance.

    Covariates are drawn as ``x ~ N(0, design_cov)``.
    """

    noise_variance: float = 5.0
    num_covariates: int = 2
    design_cov: np.ndarray | None = None
    name: str = field(default="regression", init=False)

    def __post_init__(self):
        if not self.noise_variance > 0:
            raise ParameterError("noise variance must be positive")
        cov = np.eye(self.num_covariates) if self.design_cov is None else np.asarray(self.design_cov, float)
        if cov.shape != (self.num_covariates, self.num_covariates):
            raise ParameterError("design covariance has the wrong shape")
        object.__setattr__(self, "design_cov", cov)
        object.__setattr__(self, "_chol", np.linalg.cholesky(cov))

    @property
    def dim(self):
        return self.num_covariates

    @property
    def param_names(self):
        return tuple(f"beta{j + 1}" for j in range(self.dim))

    def in_interior(self, theta):
        return np.all(np.isfinite(np.asarray(theta, dtype=float)), axis=-1)

    def log_likelihood(self, theta, data: RegressionData):
        b = np.asarray(theta, dtype=float)
        s2 = self.noise_variance
        quad = data.yty - 2.0 * (b @ data.xty) + np.einsum("...i,ij,...j->...", b, data.xtx, b)
        return -0.5 * data.n * (_LOG_2PI + np.log(s2)) - 0.5 * quad / s2

    def grad(self, theta, data):
        b = np.asarray(theta, dtype=float)
        return (data.xty - b @ data.xtx) / self.noise_variance

    def hessian(self, theta, data):
        b = np.asarray(theta, dtype=float)
        return np.broadcast_to(-data.xtx / self.noise_variance, b.shape + (self.dim,)).copy()

    def mle(self, data: RegressionData) -> np.ndarray:
        return np.linalg.solve(data.xtx, data.xty)

    def inverse_fisher(self, theta):
        self.check_interior(theta)
        return self.noise_variance * np.linalg.inv(self.design_cov)

    def generate(self, theta, n, rng):
        """Sufficient statistics drawn from their exact joint distribution.

        ``XtX`` is Wishart (Bartlett decomposition), ``Xt eps | X`` is normal
        with covariance ``sigma^2 XtX`` and the residual sum of squares is
        ``sigma^2 chi^2_{n-p}`` independently.
        """
        beta = self.check_interior(theta)
        n = int(n)
        p = self.dim
        s2 = self.noise_variance
        if n < p:
            x = self._chol @ rng.standard_normal((p, n))
            y = x.T @ beta + rng.normal(0.0, np.sqrt(s2), size=n)
            return RegressionData.from_raw(x.T, y)
        a = np.zeros((p, p))
        a[np.diag_indices(p)] = np.sqrt(rng.chisquare(n - np.arange(p)))
        low = np.tril_indices(p, -1)
        a[low] = rng.standard_normal(len(low[0]))
        la = self._chol @ a
        xtx = la @ la.T
        xte = np.sqrt(s2) * (la @ rng.standard_normal(p))
        rss = s2 * rng.chisquare(n - p) if n > p else 0.0
        xtx_b = xtx @ beta
        fitted = xte @ np.linalg.solve(xtx, xte)
        yty = float(beta @ xtx_b + 2.0 * beta @ xte + fitted + rss)
        return RegressionData(n, xtx, xtx_b + xte, yty)

    def simulate_raw(self, theta, n, rng):
        beta = self.check_interior(theta)
        x = rng.standard_normal((int(n), self.dim)) @ self._chol.T
        y = x @ beta + rng.normal(0.0, np.sqrt(self.noise_variance), size=int(n))
        return x, y

    def score_obs(self, theta, raw):
        x, y = raw
        r = y - x @ np.asarray(theta, dtype=float)
        return x * (r / self.noise_variance)[:, None]

    def to_dict(self):
        return {"kind": self.name, "noise_variance": self.noise_variance,
                "num_covariates": self.num_covariates}


@dataclass(frozen=True)
class ExpPairCopula(Model):
    """Paired exponential lifetimes with rates ``(lambda, kappa)`` joined by a copula.

    ``theta = (lambda, kappa[, copula parameter])``.  The copula parameter is
    ``rho`` for the Gaussian family and the generator parameter for the
    Archimedean families; the independence family has none.
    """

    copula_family: str = "independence"
    name: str = field(default="exp_pair", init=False)

    def __post_init__(self):
        if self.copula_family not in ("independence", "gaussian", "clayton", "gumbel", "frank"):
            raise ParameterError(f"unsupported copula family {self.copula_family!r}")

    @property
    def dim(self):
        return 2 if self.copula_family == "independence" else 3

    @property
    def param_names(self):
        return ("lambda", "kappa") + (() if self.dim == 2 else ("upsilon",))

    def in_interior(self, theta):
        theta = np.asarray(theta, dtype=float)
        ok = (theta[..., 0] > 0) & (theta[..., 1] > 0) & np.all(np.isfinite(theta), axis=-1)
        if self.dim == 3:
            v = theta[..., 2]
            ok &= {"gaussian": (np.abs(v) < 1), "clayton": v > 0, "gumbel": v > 1,
                   "frank": v != 0}[self.copula_family]
        return ok

    def copula(self, theta) -> CopulaSpec:
        if self.dim == 2:
            return CopulaSpec.independence()
        v = float(theta[2])
        if self.copula_family == "gaussian":
            return CopulaSpec.gaussian(v)
        return CopulaSpec(self.copula_family, 2, theta=v)

    def _u(self, theta, y, ys):
        lam, kap = theta[0], theta[1]
        u = np.column_stack([-np.expm1(-lam * y), -np.expm1(-kap * ys)])
        up = np.column_stack([np.exp(-lam * y), np.exp(-kap * ys)])
        return u, up

    def loglik_obs(self, theta, raw) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        y, ys = raw
        lam, kap = theta[0], theta[1]
        base = np.log(lam) - lam * y + np.log(kap) - kap * ys
        if self.dim == 2:
            return base
        u, up = self._u(theta, y, ys)
        return base + self.copula(theta).log_density(u, up)

    def log_likelihood(self, theta, data: ExpPairData):
        theta = np.asarray(theta, dtype=float)
        if not self.in_interior(theta):
            return -np.inf
        return float(np.sum(self.loglik_obs(theta, (data.y, data.y_star))))

    def score_obs(self, theta, raw):
        theta = np.asarray(theta, dtype=float)
        y, ys = raw
        lam, kap = theta[0], theta[1]
        out = np.empty((len(y), self.dim))
        out[:, 0] = 1.0 / lam - y
        out[:, 1] = 1.0 / kap - ys
        if self.dim == 2:
            return out
        cop = self.copula(theta)
        u, up = self._u(theta, y, ys)
        gu = cop.grad_log_density(u, up)
        out[:, 0] += gu[:, 0] * y * up[:, 0]
        out[:, 1] += gu[:, 1] * ys * up[:, 1]
        h = 1e-6 * max(1.0, abs(theta[2]))
        e = np.array([0.0, 0.0, h])
        out[:, 2] = (self.loglik_obs(theta + e, raw) - self.loglik_obs(theta - e, raw)) / (2 * h)
        return out

    def grad(self, theta, data):
        return self.score_obs(theta, (data.y, data.y_star)).sum(0)

    def hessian(self, theta, data):
        return self.hessian_obs_mean(theta, (data.y, data.y_star)) * data.n

    def inverse_fisher(self, theta, n_draws: int = 200_000, seed: int = 0):
        """Monte Carlo inverse Fisher information (no closed form exists)."""
        est = numeric_fisher_oracle(self, theta, n_draws=n_draws, rng=np.random.default_rng(seed))
        return est.inverse

    def posterior_correlation(self, theta, **kw) -> float:
        """Limiting correlation of ``(lambda, kappa)`` implied by the inverse Fisher information."""
        inv = self.inverse_fisher(theta, **kw)
        return float(inv[0, 1] / np.sqrt(inv[0, 0] * inv[1, 1]))

    def simulate_raw(self, theta, n, rng):
        theta = self.check_interior(theta)
        u = self.copula(theta).sample(int(n), rng)
        # inverse exponential CDF through the upper tail keeps precision
        return -np.log1p(-u[:, 0]) / theta[0], -np.log1p(-u[:, 1]) / theta[1]

    def generate(self, theta, n, rng):
        y, ys = self.simulate_raw(theta, n, rng)
        return ExpPairData(y, ys)

    def to_dict(self):
        return {"kind": self.name, "copula_family": self.copula_family}


# ---------------------------------------------------------------------------
# functional API


def log_likelihood(model: Model, theta, data):
    """Log-likelihood; ``-inf`` for parameters outside the interior."""
    out = model.log_likelihood(theta, data)
    return float(out) if np.ndim(out) == 0 else out


def log_likelihood_grad(model: Model, theta, data) -> np.ndarray:
    return model.grad(model.check_interior(theta), data)


def log_likelihood_hessian(model: Model, theta, data) -> np.ndarray:
    return model.hessian(model.check_interior(theta), data)


def inverse_fisher(model: Model, theta0) -> np.ndarray:
    """Per-observation inverse Fisher information at ``theta0``."""
    inv = model.inverse_fisher(model.check_interior(theta0))
    if not np.all(np.isfinite(inv)):
        raise SingularInformationError("inverse Fisher information is not finite")
    return inv


@dataclass(frozen=True, eq=False)
class FisherEstimate:
    """Monte Carlo Fisher information per unit observation."""

    info: np.ndarray
    info_se: np.ndarray
    inverse: np.ndarray
    inverse_se: np.ndarray
    condition_number: float
    n_draws: int
    method: str


def numeric_fisher_oracle(model: Model, theta0, method: str = "score", n_draws: int = 100_000,
                          rng: np.random.Generator | None = None, batches: int = 20,
                          max_condition: float = 1e12) -> FisherEstimate:
    """Monte Carlo estimate of the per-observation Fisher information.

    Parameters
    ----------
    method : {"score", "hessian"}
        ``score`` averages outer products of per-observation scores;
        ``hessian`` averages finite-difference Hessians of the log density.
    batches : int
        Independent batches used for standard errors of the information and
        its inverse.

    Raises
    ------
    SingularInformationError
        If the estimated information has condition number above
        ``max_condition``.
    """
    theta0 = model.check_interior(theta0)
    if method not in ("score", "hessian"):
        raise ValueError("method must be 'score' or 'hessian'")
    rng = np.random.default_rng() if rng is None else rng
    per = max(1, int(n_draws) // batches)
    infos = []
    for _ in range(batches):
        raw = model.simulate_raw(theta0, per, rng)
        if method == "score":
            s = model.score_obs(theta0, raw)
            infos.append(s.T @ s / per)
        else:
            infos.append(-model.hessian_obs_mean(theta0, raw))
    infos = np.array(infos)
    info = infos.mean(0)
    info_se = infos.std(0, ddof=1) / np.sqrt(batches)
    cond = float(np.linalg.cond(info))
    if not np.isfinite(cond) or cond > max_condition:
        raise SingularInformationError(f"numeric information is near-singular (condition number {cond:.3g})", cond)
    inverse = np.linalg.inv(info)
    # delta-method SE of the inverse through batch jackknife
    jack = np.array([np.linalg.inv((info * batches - infos[k]) / (batches - 1)) for k in range(batches)])
    inverse_se = np.sqrt((batches - 1) / batches * np.sum((jack - jack.mean(0)) ** 2, axis=0))
    return FisherEstimate(info, info_se, inverse, inverse_se, cond, per * batches, method)


def generate_data(model: Model, theta0, n: int, rng: np.random.Generator):
    """Draw ``n`` observations at ``theta0`` reduced to sufficient statistics."""
    if int(n) != n or n < 1:
        raise ValueError("n must be a positive integer")
    return model.generate(np.asarray(theta0, dtype=float), int(n), rng)


def prior_predictive_generate(model: Model, design_prior: CopulaPrior, n: int, rng: np.random.Generator):
    """Draw ``theta0`` from the design prior, then data given ``theta0``."""
    theta0 = design_prior.sample(1, rng)[0]
    return theta0, generate_data(model, theta0, n, rng)


def model_from_dict(data: dict) -> Model:
    data = dict(data)
    kind = data.pop("kind")
    builders = {
        "multinomial": lambda: MultinomialConditional(int(data.pop("categories", 3))),
        "normal": NormalMeanVar,
        "gamma": GammaShapeRate,
        "regression": lambda: LinRegKnownVar(float(data.pop("noise_variance", 5.0)),
                                             int(data.pop("num_covariates", 2))),
        "exp_pair": lambda: ExpPairCopula(str(data.pop("copula_family", "independence"))),
    }
    if kind not in builders:
        raise ParameterError(f"unknown model kind {kind!r}")
    model = builders[kind]()
    if data:
        raise ParameterError(f"unknown keys for {kind} model: {sorted(data)}")
    return model
