"""Study configuration and the fixed study designs."""
from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass

import numpy as np
from scipy import special

from ..copulas import CopulaSpec
from ..errors import ConfigError
from ..marginals import CopulaPrior, MarginalPrior
from ..models import GammaShapeRate, LinRegKnownVar, MultinomialConditional

__all__ = [
    "STUDIES",
    "STUDY_IDS",
    "StudyConfig",
    "default_config",
    "regression_case_theta",
    "tau_design_prior",
    "multinomial_analysis_prior",
    "gamma_design_prior",
    "gamma_analysis_prior",
    "regression_priors",
    "REGRESSION_MODEL",
    "MULTINOMIAL_MODEL",
    "GAMMA_MODEL",
]

STUDIES = ("tau_retention", "multinomial_coverage", "gamma_coverage", "mode_convergence", "regression_coverage")
STUDY_IDS = {name: k + 1 for k, name in enumerate(STUDIES)}

DEFAULT_SIZES = (10, 100, 1000, 10_000, 100_000)
MODE_SIZES = (5, 10, 20, 50, 100, 200, 500, 1000, 2000, 5000, 10_000, 20_000, 50_000, 100_000)
MULTINOMIAL_RHOS = tuple(round(-0.95 + 0.05 * k, 2) for k in range(39))
GAMMA_RHOS = tuple(round(0.05 * k, 2) for k in range(20))

MULTINOMIAL_MODEL = MultinomialConditional(3)
GAMMA_MODEL = GammaShapeRate()
REGRESSION_MODEL = LinRegKnownVar(noise_variance=5.0, num_covariates=2)

NATURE_RHO_MULTINOMIAL = -0.9
NATURE_RHO_GAMMA = 0.4
T_DF = 4.0


def _beta_marginals():
    return (MarginalPrior.beta(20, 40), MarginalPrior.beta(30, 30))


def _gamma_marginals():
    return (MarginalPrior.gamma(1000, 5000), MarginalPrior.gamma(1000, 800))


def tau_design_prior() -> CopulaPrior:
    return CopulaPrior(_beta_marginals(), CopulaSpec.gaussian(NATURE_RHO_MULTINOMIAL))


def multinomial_analysis_prior(rho: float) -> CopulaPrior:
    cop = CopulaSpec.independence() if rho == 0 else CopulaSpec.gaussian(rho)
    return CopulaPrior(_beta_marginals(), cop)


def gamma_design_prior() -> CopulaPrior:
    return CopulaPrior(_gamma_marginals(), CopulaSpec.gaussian(NATURE_RHO_GAMMA))


def gamma_analysis_prior(rho: float) -> CopulaPrior:
    cop = CopulaSpec.independence() if rho == 0 else CopulaSpec.gaussian(rho)
    return CopulaPrior(_gamma_marginals(), cop)


def regression_priors() -> dict[str, CopulaPrior]:
    margs = (MarginalPrior.normal(0.0, 1.0), MarginalPrior.normal(0.0, 1.0))
    return {
        "independence": CopulaPrior(margs, CopulaSpec.independence()),
        "t": CopulaPrior(margs, CopulaSpec.student_t(0.0, T_DF)),
    }


def regression_case_theta(case: int) -> np.ndarray:
    """True coefficients for the six regression cases.

    Cases 1 to 5 are given on the copula scale and mapped through the
    standard normal quantile; case 6 is given directly.
    """
    t1 = float(special.stdtr(T_DF, 1.0))
    u0 = {1: (0.5, 0.5), 2: (0.495, 0.495), 3: (t1, t1), 4: (0.5, 0.99), 5: (0.85, 0.9)}
    if case == 6:
        return np.array([-5.0, 8.0])
    if case not in u0:
        raise ConfigError(f"unknown regression case {case}", "study.cases")
    return special.ndtri(np.array(u0[case]))


@dataclass(frozen=True)
class StudyConfig:
    """Grid and Monte Carlo settings for one study.

    Parameters
    ----------
    study : str
        One of :data:`STUDIES`.
    repetitions : int
        Repetitions per cell.
    sample_sizes : tuple of int
    rhos : tuple of float
        Analysis-prior copula correlations (coverage studies).
    cases : tuple of int
        Regression cases (mode and regression studies).
    priors : tuple of str
        Regression priors to evaluate.
    seed : int
        Master seed.
    n_resample, n_proposal : int
        SIR sizes; ``n_proposal`` of 0 means ``10 * n_resample``.
    """

    study: str
    repetitions: int = 1000
    sample_sizes: tuple[int, ...] = DEFAULT_SIZES
    rhos: tuple[float, ...] = ()
    cases: tuple[int, ...] = ()
    priors: tuple[str, ...] = ("independence", "t")
    seed: int = 0
    n_resample: int = 5000
    n_proposal: int = 0
    resampling: str = "multinomial"
    level: float = 0.95
    grid: int = 150
    qmc_points: int = 4096
    qmc_replicates: int = 8
    threads: int = 1
    output: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "sample_sizes", tuple(int(v) for v in self.sample_sizes))
        object.__setattr__(self, "rhos", tuple(float(v) for v in self.rhos))
        object.__setattr__(self, "cases", tuple(int(v) for v in self.cases))
        object.__setattr__(self, "priors", tuple(str(v) for v in self.priors))
        self.validate()

    def validate(self) -> None:
        if self.study not in STUDIES:
            raise ConfigError(f"unknown study {self.study!r}", "study")
        if int(self.repetitions) != self.repetitions or self.repetitions < 1:
            raise ConfigError("repetitions must be a positive integer", "repetitions")
        if not self.sample_sizes or any(n < 1 for n in self.sample_sizes):
            raise ConfigError("sample sizes must be a non-empty list of positive integers", "study.sample_sizes")
        if self.study in ("multinomial_coverage", "gamma_coverage"):
            if not self.rhos:
                raise ConfigError("the rho grid must not be empty", "study.rhos")
            for r in self.rhos:
                if not -1.0 < r < 1.0:
                    raise ConfigError(f"rho must lie in (-1, 1), got {r}", "study.rhos")
        if self.study in ("mode_convergence", "regression_coverage"):
            if not self.cases:
                raise ConfigError("the case list must not be empty", "study.cases")
            for c in self.cases:
                if c not in range(1, 7):
                    raise ConfigError(f"cases are numbered 1 to 6, got {c}", "study.cases")
        if self.study == "regression_coverage":
            bad = set(self.priors) - {"independence", "t"}
            if bad or not self.priors:
                raise ConfigError(f"priors must be drawn from ['independence', 't'], got {list(self.priors)}",
                                  "study.priors")
        if self.n_resample < 1:
            raise ConfigError("n_resample must be positive", "sir.n_resample")
        if self.n_proposal and self.n_proposal < self.n_resample:
            raise ConfigError("n_proposal must be at least n_resample", "sir.n_proposal")
        if self.resampling not in ("multinomial", "systematic"):
            raise ConfigError("resampling must be 'multinomial' or 'systematic'", "sir.resampling")
        if not 0.0 < self.level < 1.0:
            raise ConfigError("level must lie in (0, 1)", "hpd.level")
        if self.grid < 10:
            raise ConfigError("grid must be at least 10", "hpd.grid")
        if self.qmc_points < 2 or self.qmc_points & (self.qmc_points - 1):
            raise ConfigError("qmc_points must be a power of two", "hpd.qmc_points")
        if self.qmc_replicates < 2:
            raise ConfigError("qmc_replicates must be at least 2", "hpd.qmc_replicates")
        if self.threads < 1:
            raise ConfigError("threads must be positive", "threads")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer", "seed")

    @property
    def proposal_size(self) -> int:
        return self.n_proposal or 10 * self.n_resample

    def replace(self, **kw) -> "StudyConfig":
        return dataclasses.replace(self, **kw)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = list(v)
        return d

    def digest(self) -> str:
        """Hash of every setting that affects results (threads and output excluded)."""
        d = self.to_dict()
        d.pop("threads")
        d.pop("output")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()


def default_config(study: str, **kw) -> StudyConfig:
    """Configuration with the documented defaults for ``study``."""
    base: dict = {"study": study}
    if study == "multinomial_coverage":
        base["rhos"] = MULTINOMIAL_RHOS
    elif study == "gamma_coverage":
        base["rhos"] = GAMMA_RHOS
    elif study == "mode_convergence":
        base["cases"] = (1, 2, 3, 4, 5, 6)
        base["sample_sizes"] = MODE_SIZES
    elif study == "regression_coverage":
        base["cases"] = (1, 2, 3, 4, 5, 6)
    base.update(kw)
    return StudyConfig(**base)
