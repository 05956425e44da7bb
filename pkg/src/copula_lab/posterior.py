"""Posterior computation: sampling-importance-resampling and mode finding."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Protocol

import numpy as np
from scipy import special

from .copulas import CopulaSpec
from .errors import ConvergenceError, DomainError, ParameterError, SamplingError, SingularInformationError
from .kendall import kendall_tau_empirical
from .marginals import CopulaPrior
from .models import GammaShapeRate, LinRegKnownVar, Model, MultinomialConditional

__all__ = [
    "LogPosterior",
    "PosteriorSample",
    "BetaProductProposal",
    "GaussianProposal",
    "MultivariateTProposal",
    "ModePair",
    "sir_posterior",
    "conjugate_proposal",
    "laplace_t_proposal",
    "posterior_mode",
    "mode_pair",
    "one_step_newton_mode",
    "posterior_kendall_tau",
]

logger = logging.getLogger(__name__)

DEFAULT_RESAMPLE = 5000
DEFAULT_PROPOSAL_FACTOR = 10


# ---------------------------------------------------------------------------
# log posterior


@dataclass(frozen=True, eq=False)
class LogPosterior:
    """``log L(theta; y) + log p(theta)`` with analytic derivatives."""

    model: Model
    prior: CopulaPrior
    data: object

    def __call__(self, theta):
        return self.value(theta)

    def value(self, theta):
        theta = np.asarray(theta, dtype=float)
        ll = self.model.log_likelihood(theta, self.data)
        lp = self.prior.log_pdf(theta)
        with np.errstate(invalid="ignore"):
            out = ll + lp
        return np.where(np.isnan(out), -np.inf, out)

    def grad(self, theta):
        theta = np.asarray(theta, dtype=float)
        return self.model.grad(theta, self.data) + self.prior.grad_log_pdf(theta)

    def hess(self, theta):
        theta = np.asarray(theta, dtype=float)
        return self.model.hessian(theta, self.data) + self.prior.hess_log_pdf(theta)


class _Objective(Protocol):
    def value(self, theta): ...

    def grad(self, theta): ...

    def hess(self, theta): ...


# ---------------------------------------------------------------------------
# proposals


@dataclass(frozen=True)
class BetaProductProposal:
    a: tuple[float, ...]
    b: tuple[float, ...]

    @property
    def description(self) -> str:
        return "beta-product(" + ", ".join(f"Beta({a:g},{b:g})" for a, b in zip(self.a, self.b)) + ")"

    def sample(self, n, rng):
        return rng.beta(np.asarray(self.a), np.asarray(self.b), size=(n, len(self.a)))

    def log_pdf(self, x):
        a, b = np.asarray(self.a), np.asarray(self.b)
        x = np.asarray(x, dtype=float)
        inside = np.all((x > 0) & (x < 1), axis=-1)
        xs = np.where((x > 0) & (x < 1), x, 0.5)
        val = np.sum(special.xlogy(a - 1, xs) + special.xlog1py(b - 1, -xs) - special.betaln(a, b), axis=-1)
        return np.where(inside, val, -np.inf)


@dataclass(frozen=True, eq=False)
class GaussianProposal:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        chol = np.linalg.cholesky(np.asarray(self.cov, dtype=float))
        object.__setattr__(self, "_chol", chol)
        object.__setattr__(self, "_logdet", 2.0 * np.sum(np.log(np.diag(chol))))

    @property
    def description(self) -> str:
        return f"normal(mean={np.round(self.mean, 6).tolist()})"

    def sample(self, n, rng):
        z = rng.standard_normal((n, len(self.mean)))
        return self.mean + z @ self._chol.T

    def log_pdf(self, x):
        r = np.asarray(x, dtype=float) - self.mean
        sol = np.linalg.solve(self._chol, r.T if r.ndim > 1 else r)
        q = np.sum(sol * sol, axis=0)
        d = len(self.mean)
        return -0.5 * (d * np.log(2 * np.pi) + self._logdet + q)


@dataclass(frozen=True, eq=False)
class MultivariateTProposal:
    loc: np.ndarray
    scale: np.ndarray
    df: float = 5.0

    def __post_init__(self):
        chol = np.linalg.cholesky(np.asarray(self.scale, dtype=float))
        object.__setattr__(self, "_chol", chol)
        object.__setattr__(self, "_logdet", 2.0 * np.sum(np.log(np.diag(chol))))

    @property
    def description(self) -> str:
        return f"t{self.df:g}(loc={np.round(self.loc, 6).tolist()})"

    def sample(self, n, rng):
        d = len(self.loc)
        z = rng.standard_normal((n, d)) @ self._chol.T
        w = rng.chisquare(self.df, size=n) / self.df
        return self.loc + z / np.sqrt(w)[:, None]

    def log_pdf(self, x):
        r = np.asarray(x, dtype=float) - self.loc
        sol = np.linalg.solve(self._chol, r.T if r.ndim > 1 else r)
        q = np.sum(sol * sol, axis=0)
        d, nu = len(self.loc), self.df
        return (special.gammaln((nu + d) / 2) - special.gammaln(nu / 2) - 0.5 * d * np.log(nu * np.pi)
                - 0.5 * self._logdet - 0.5 * (nu + d) * np.log1p(q / nu))


def conjugate_proposal(model: Model, independence_prior: CopulaPrior, data):
    """Posterior under independently joined marginals, used as an SIR proposal.

    Conjugate for the multinomial model with beta marginals and for the
    regression model with normal marginals.  For the gamma model the
    Laplace-approximation multivariate-t proposal of
    :func:`laplace_t_proposal` is returned instead.
    """
    margs = independence_prior.marginals
    if isinstance(model, MultinomialConditional):
        if any(m.family != "beta" for m in margs):
            raise ParameterError("the multinomial conjugate proposal needs beta marginals")
        c = np.asarray(data.counts, dtype=float)
        later = np.cumsum(c[::-1])[::-1][1:]
        a = tuple(m.a + nv for m, nv in zip(margs, c[:-1]))
        b = tuple(m.b + mv for m, mv in zip(margs, later))
        return BetaProductProposal(a, b)
    if isinstance(model, LinRegKnownVar):
        if any(m.family != "normal" for m in margs):
            raise ParameterError("the regression conjugate proposal needs normal marginals")
        m0 = np.array([m.a for m in margs])
        v0 = np.array([m.b for m in margs])
        prec = np.diag(1.0 / v0) + data.xtx / model.noise_variance
        cov = np.linalg.inv(prec)
        cov = 0.5 * (cov + cov.T)
        mean = cov @ (m0 / v0 + data.xty / model.noise_variance)
        return GaussianProposal(mean, cov)
    if isinstance(model, GammaShapeRate):
        return laplace_t_proposal(model, independence_prior, data)
    raise ParameterError(f"no conjugate proposal for model {model.name!r}")


def laplace_t_proposal(model: Model, independence_prior: CopulaPrior, data, df: float = 5.0,
                       inflation: float = 1.5, start=None) -> MultivariateTProposal:
    """Multivariate-t centred at the independence-prior posterior mode.

    The scale matrix is ``inflation`` times the inverse negative Hessian at
    the mode.
    """
    lp = LogPosterior(model, independence_prior.independence(), data)
    start = independence_prior.mean if start is None else start
    mode = posterior_mode(lp, start)
    scale = inflation * np.linalg.inv(-lp.hess(mode))
    return MultivariateTProposal(mode, 0.5 * (scale + scale.T), df)


# ---------------------------------------------------------------------------
# sampling-importance-resampling


@dataclass(frozen=True, eq=False)
class PosteriorSample:
    """Resampled posterior draws with provenance."""

    draws: np.ndarray
    ess: float
    n_proposal: int
    n_resample: int
    proposal: str
    seed: object = None
    low_ess: bool = False

    @property
    def meta(self) -> dict:
        return {"seed": self.seed, "proposal": self.proposal, "n_proposal": self.n_proposal,
                "n_resample": self.n_resample, "ess": self.ess, "low_ess": self.low_ess}

    def mean(self) -> np.ndarray:
        return self.draws.mean(axis=0)


def _systematic(weights, m, rng):
    cdf = np.cumsum(weights)
    cdf /= cdf[-1]
    pos = (rng.random() + np.arange(m)) / m
    return np.minimum(np.searchsorted(cdf, pos, side="right"), len(weights) - 1)


def sir_posterior(target_log_pdf: Callable, proposal, n_proposal: int | None = None,
                  n_resample: int = DEFAULT_RESAMPLE, rng: np.random.Generator | None = None,
                  resampling: str = "multinomial", seed=None) -> PosteriorSample:
    """Sampling-importance-resampling.

    Parameters
    ----------
    target_log_pdf : callable
        Unnormalized log target, vectorized over rows.
    proposal : object
        Provides ``sample(n, rng)``, ``log_pdf(x)`` and ``description``.
    n_proposal : int, optional
        Proposal size ``N``; defaults to ``10 * n_resample``.
    n_resample : int
        Resample size ``M <= N``.
    resampling : {"multinomial", "systematic"}

    Returns
    -------
    PosteriorSample

    Raises
    ------
    SamplingError
        If every importance weight is zero or non-finite.
    """
    m = int(n_resample)
    n = DEFAULT_PROPOSAL_FACTOR * m if n_proposal is None else int(n_proposal)
    if not (n >= m >= 1):
        raise ValueError("need N >= M >= 1")
    if resampling not in ("multinomial", "systematic"):
        raise ValueError("resampling must be 'multinomial' or 'systematic'")
    rng = np.random.default_rng() if rng is None else rng
    x = proposal.sample(n, rng)
    with np.errstate(invalid="ignore", over="ignore"):
        lw = np.asarray(target_log_pdf(x), dtype=float) - np.asarray(proposal.log_pdf(x), dtype=float)
    lw[~np.isfinite(lw)] = -np.inf
    top = lw.max()
    if not np.isfinite(top):
        raise SamplingError("all importance weights are zero or non-finite")
    w = np.exp(lw - top)
    ess = float(w.sum() ** 2 / np.sum(w * w))
    if resampling == "multinomial":
        idx = rng.choice(n, size=m, replace=True, p=w / w.sum())
    else:
        idx = _systematic(w, m, rng)
    low = ess < 0.01 * n
    if low:
        logger.debug("SIR effective sample size %.1f is below 1%% of N=%d", ess, n)
    return PosteriorSample(x[idx], ess, n, m, proposal.description, seed, low)


def posterior_kendall_tau(sample: PosteriorSample | np.ndarray, i: int = 0, j: int = 1) -> float:
    draws = sample.draws if isinstance(sample, PosteriorSample) else np.asarray(sample)
    return kendall_tau_empirical(draws[:, i], draws[:, j])


# ---------------------------------------------------------------------------
# mode finding


def posterior_mode(log_posterior: _Objective, start, tol: float = 1e-10, max_iter: int = 200) -> np.ndarray:
    """Damped Newton ascent to a local maximum.

    Each step solves with the Hessian (flipped to negative definite by
    eigenvalue reflection when needed) and is halved until the objective
    stops decreasing.  Convergence is declared when the gradient's max-norm
    falls below ``tol`` times the Hessian's largest diagonal magnitude (at
    least one), or when the step stalls at round-off level.

    Raises
    ------
    ConvergenceError
        On failure within ``max_iter`` iterations (with the iterate trace) or
        when the stationary point found is not a maximum.
    """
    theta = np.array(start, dtype=float)
    f = float(log_posterior.value(theta))
    if not np.isfinite(f):
        raise DomainError("the starting point has zero posterior density")
    trace = [theta.copy()]
    for _ in range(max_iter):
        g = np.asarray(log_posterior.grad(theta), dtype=float)
        h = np.asarray(log_posterior.hess(theta), dtype=float)
        scale = max(1.0, float(np.max(np.abs(np.diag(h)))))
        if np.max(np.abs(g)) <= tol * scale:
            break
        ev, vec = np.linalg.eigh(0.5 * (h + h.T))
        if np.all(ev < 0):
            step = -np.linalg.solve(h, g)
        else:
            mag = np.maximum(np.abs(ev), 1e-8 * max(1.0, np.max(np.abs(ev))))
            step = vec @ ((vec.T @ g) / mag)
        t = 1.0
        accepted = False
        for _h in range(60):
            cand = theta + t * step
            fc = float(log_posterior.value(cand))
            if np.isfinite(fc) and fc >= f - 1e-12 * abs(f):
                accepted = True
                break
            t *= 0.5
        if not accepted:
            if np.max(np.abs(step)) <= 1e-10 * (1.0 + np.max(np.abs(theta))):
                break
            raise ConvergenceError("line search failed to find an ascent step", trace)
        moved = np.max(np.abs(cand - theta))
        theta, f = cand, fc
        trace.append(theta.copy())
        if moved <= 1e-15 * (1.0 + np.max(np.abs(theta))):
            break
    else:
        raise ConvergenceError(f"no convergence in {max_iter} iterations", trace)
    ev = np.linalg.eigvalsh(np.asarray(log_posterior.hess(theta), dtype=float))
    if not np.all(ev < 0):
        raise ConvergenceError("stationary point is not a local maximum", trace)
    return theta


@dataclass(frozen=True, eq=False)
class ModePair:
    """Posterior modes under two priors and their distances to ``theta0``."""

    theta1: np.ndarray
    theta2: np.ndarray
    theta0: np.ndarray

    @property
    def d1(self) -> float:
        return float(np.linalg.norm(self.theta1 - self.theta0))

    @property
    def d2(self) -> float:
        return float(np.linalg.norm(self.theta2 - self.theta0))


def mode_pair(model: Model, prior1: CopulaPrior, prior2: CopulaPrior, data, theta0, start=None) -> ModePair:
    """Modes under ``prior1`` and ``prior2``; the second search starts from the first mode."""
    lp1 = LogPosterior(model, prior1, data)
    lp2 = LogPosterior(model, prior2, data)
    start = prior1.mean if start is None else start
    t1 = posterior_mode(lp1, start)
    t2 = posterior_mode(lp2, t1)
    return ModePair(t1, t2, np.asarray(theta0, dtype=float))


def one_step_newton_mode(theta1, observed_info, c1: CopulaSpec, c2: CopulaSpec,
                         marginals) -> np.ndarray:
    """One Newton step from the prior-1 mode toward the prior-2 mode.

    ``theta2 ~= theta1 - J^{-1} grad_theta[log c1(u) - log c2(u)]`` with
    ``u = F(theta1)`` and the chain-rule factor ``f_j(theta_j)``.

    Parameters
    ----------
    theta1 : array_like
        Posterior mode under prior 1.
    observed_info : array_like
        Positive-definite ``J``, the negative Hessian of the prior-1 log
        posterior at ``theta1``.
    c1, c2 : CopulaSpec
    marginals : sequence of MarginalPrior or CopulaPrior
    """
    theta1 = np.asarray(theta1, dtype=float)
    j = np.asarray(observed_info, dtype=float)
    if isinstance(marginals, CopulaPrior):
        marginals = marginals.marginals
    try:
        chol = np.linalg.cholesky(0.5 * (j + j.T))
    except np.linalg.LinAlgError as exc:
        raise SingularInformationError("observed information is not positive definite") from exc
    if c1 == c2:
        return theta1.copy()
    p1 = CopulaPrior(tuple(marginals), c1)
    p2 = CopulaPrior(tuple(marginals), c2)
    g = p1.copula_grad_theta(theta1) - p2.copula_grad_theta(theta1)
    step = np.linalg.solve(chol.T, np.linalg.solve(chol, g))
    return theta1 - step
