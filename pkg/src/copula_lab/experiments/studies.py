"""Seeded simulation studies.

Every repetition draws from its own stream,
``SeedSequence(seed, spawn_key=(study id, *cell key, repetition))``, so a
repetition's result does not depend on which worker runs it or in which
order.  Results are reduced in repetition order.
"""
from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ..density import hpd_region, kde2d
from ..models import generate_data, prior_predictive_generate
from ..posterior import LogPosterior, conjugate_proposal, mode_pair, posterior_kendall_tau, sir_posterior
from .config import (
    GAMMA_MODEL,
    MULTINOMIAL_MODEL,
    REGRESSION_MODEL,
    STUDY_IDS,
    StudyConfig,
    gamma_analysis_prior,
    gamma_design_prior,
    multinomial_analysis_prior,
    regression_case_theta,
    regression_priors,
    tau_design_prior,
)

__all__ = [
    "CellRecord",
    "StudyResult",
    "rep_rng",
    "run_study",
    "run_tau_retention",
    "run_coverage",
    "run_mode_convergence",
    "run_regression_coverage",
]

logger = logging.getLogger(__name__)


def _rho_key(rho: float) -> int:
    return int(round((rho + 1.0) * 1_000_000))


def rep_rng(cfg: StudyConfig, *key: int) -> np.random.Generator:
    """Generator for one repetition keyed by study and cell."""
    ss = np.random.SeedSequence(cfg.seed, spawn_key=(STUDY_IDS[cfg.study], *[int(k) for k in key]))
    return np.random.default_rng(ss)


@dataclass(frozen=True)
class CellRecord:
    """Reduced results for one grid cell."""

    key: dict
    values: dict
    repetitions: int
    failures: int

    def row(self) -> dict:
        return {**self.key, **self.values, "repetitions": self.repetitions, "failures": self.failures}


@dataclass
class StudyResult:
    config: StudyConfig
    cells: list[CellRecord]
    wall_time: float = 0.0
    failure_log: list[dict] = field(default_factory=list)

    def manifest(self) -> dict:
        return {
            "study": self.config.study,
            "seed": self.config.seed,
            "config": self.config.to_dict(),
            "config_sha256": self.config.digest(),
            "wall_time_seconds": round(self.wall_time, 3),
            "cells": len(self.cells),
            "failures": sum(c.failures for c in self.cells),
        }


# ---------------------------------------------------------------------------
# execution


def _call(task):
    fn, cfg, key = task
    try:
        return True, fn(cfg, *key)
    except Exception as exc:  # failures are recorded, never retried
        return False, f"{type(exc).__name__}: {exc}"


def _map(fn: Callable, cfg: StudyConfig, keys: Sequence[tuple]) -> list:
    tasks = [(fn, cfg, k) for k in keys]
    if cfg.threads <= 1 or len(tasks) < 2:
        return [_call(t) for t in tasks]
    chunk = max(1, len(tasks) // (8 * cfg.threads))
    with ProcessPoolExecutor(max_workers=cfg.threads) as pool:
        return list(pool.map(_call, tasks, chunksize=chunk))


def _sir_hpd(cfg, model, prior, data, proposal, theta0, rng):
    post = sir_posterior(LogPosterior(model, prior, data), proposal, cfg.proposal_size, cfg.n_resample,
                         rng, cfg.resampling)
    surf = kde2d(post.draws, cfg.grid, cfg.grid)
    seed = int(rng.integers(2**63))
    hpd = hpd_region(surf, cfg.level, theta0, cfg.qmc_points, cfg.qmc_replicates, seed)
    return float(hpd.contains_target), hpd.area


def _median_se(x: np.ndarray) -> float:
    # normal-approximation standard error of a sample median
    return float(1.2533 * np.std(x, ddof=1) / np.sqrt(len(x))) if len(x) > 1 else float("nan")


def _binomial_se(p: float, r: int) -> float:
    return float(np.sqrt(p * (1.0 - p) / r)) if r > 0 else float("nan")


def _log_failures(result_log: list, cell: dict, outs: list):
    for rep, (ok, val) in enumerate(outs):
        if not ok:
            result_log.append({**cell, "repetition": rep, "error": val})
            logger.warning("repetition %d of %s failed: %s", rep, cell, val)


# ---------------------------------------------------------------------------
# tau retention


def _tau_rep(cfg: StudyConfig, n: int, rep: int) -> float:
    rng = rep_rng(cfg, n, rep)
    prior = tau_design_prior()
    _, data = prior_predictive_generate(MULTINOMIAL_MODEL, prior, n, rng)
    proposal = conjugate_proposal(MULTINOMIAL_MODEL, prior.independence(), data)
    post = sir_posterior(LogPosterior(MULTINOMIAL_MODEL, prior, data), proposal, cfg.proposal_size,
                         cfg.n_resample, rng, cfg.resampling)
    return posterior_kendall_tau(post)


def run_tau_retention(cfg: StudyConfig) -> StudyResult:
    """Posterior Kendall's tau under a Gaussian-copula beta prior across sample sizes.

    For each repetition the true ``Z`` comes from the prior, multinomial data
    are generated, and the posterior is approximated by SIR with the
    independence-prior conjugate proposal.
    """
    if cfg.study != "tau_retention":
        raise ValueError("configuration is not for the tau_retention study")
    t0 = time.perf_counter()
    keys = [(n, r) for n in cfg.sample_sizes for r in range(cfg.repetitions)]
    outs = _map(_tau_rep, cfg, keys)
    cells, log = [], []
    for i, n in enumerate(cfg.sample_sizes):
        chunk = outs[i * cfg.repetitions:(i + 1) * cfg.repetitions]
        _log_failures(log, {"n": n}, chunk)
        vals = np.array([v for ok, v in chunk if ok])
        if len(vals):
            stats = {"min": float(vals.min()), "median": float(np.median(vals)), "max": float(vals.max()),
                     "median_se": _median_se(vals)}
        else:
            stats = {"min": float("nan"), "median": float("nan"), "max": float("nan"), "median_se": float("nan")}
        cells.append(CellRecord({"n": n}, stats, len(vals), cfg.repetitions - len(vals)))
    return StudyResult(cfg, cells, time.perf_counter() - t0, log)


# ---------------------------------------------------------------------------
# coverage


def _coverage_rep(cfg: StudyConfig, rho_key: int, n: int, rep: int):
    rho = rho_key / 1_000_000 - 1.0
    if cfg.study == "multinomial_coverage":
        model, design, analysis = MULTINOMIAL_MODEL, tau_design_prior(), multinomial_analysis_prior(rho)
    else:
        model, design, analysis = GAMMA_MODEL, gamma_design_prior(), gamma_analysis_prior(rho)
    # data depend on (n, rep) only, so every rho cell sees the same data sets
    theta0, data = prior_predictive_generate(model, design, n, rep_rng(cfg, n, rep))
    rng = rep_rng(cfg, n, rep, rho_key)
    proposal = conjugate_proposal(model, analysis.independence(), data)
    return _sir_hpd(cfg, model, analysis, data, proposal, theta0, rng)


def run_coverage(cfg: StudyConfig) -> StudyResult:
    """Empirical HPD coverage over a grid of analysis-prior copula correlations.

    ``cfg.study`` selects the multinomial (design rho = -0.9) or gamma
    (design rho = 0.4) version.  The gamma version uses the Laplace
    multivariate-t proposal.
    """
    if cfg.study not in ("multinomial_coverage", "gamma_coverage"):
        raise ValueError("configuration is not for a coverage study")
    t0 = time.perf_counter()
    cells_spec = [(rho, n) for rho in cfg.rhos for n in cfg.sample_sizes]
    keys = [(_rho_key(rho), n, r) for rho, n in cells_spec for r in range(cfg.repetitions)]
    outs = _map(_coverage_rep, cfg, keys)
    cells, log = [], []
    for i, (rho, n) in enumerate(cells_spec):
        chunk = outs[i * cfg.repetitions:(i + 1) * cfg.repetitions]
        key = {"rho": rho, "n": n}
        _log_failures(log, key, chunk)
        good = np.array([v for ok, v in chunk if ok]).reshape(-1, 2)
        r = len(good)
        cov = float(good[:, 0].mean()) if r else float("nan")
        area = float(np.median(good[:, 1])) if r else float("nan")
        cells.append(CellRecord(key, {"coverage": cov, "coverage_se": _binomial_se(cov, r), "median_area": area},
                                r, cfg.repetitions - r))
    return StudyResult(cfg, cells, time.perf_counter() - t0, log)


# ---------------------------------------------------------------------------
# mode convergence


def _mode_rep(cfg: StudyConfig, case: int, n: int, rep: int):
    rng = rep_rng(cfg, case, n, rep)
    theta0 = regression_case_theta(case)
    data = generate_data(REGRESSION_MODEL, theta0, n, rng)
    priors = regression_priors()
    mp = mode_pair(REGRESSION_MODEL, priors["independence"], priors["t"], data, theta0)
    return mp.d1, mp.d2


def run_mode_convergence(cfg: StudyConfig) -> StudyResult:
    """Distances of the two posterior modes to the truth in the regression cases."""
    if cfg.study != "mode_convergence":
        raise ValueError("configuration is not for the mode_convergence study")
    t0 = time.perf_counter()
    cells_spec = [(c, n) for c in cfg.cases for n in cfg.sample_sizes]
    keys = [(c, n, r) for c, n in cells_spec for r in range(cfg.repetitions)]
    outs = _map(_mode_rep, cfg, keys)
    cells, log = [], []
    for i, (case, n) in enumerate(cells_spec):
        chunk = outs[i * cfg.repetitions:(i + 1) * cfg.repetitions]
        key = {"case": case, "n": n}
        _log_failures(log, key, chunk)
        d = np.array([v for ok, v in chunk if ok]).reshape(-1, 2)
        r = len(d)
        if r:
            pr = float(np.mean(d[:, 1] <= d[:, 0]))
            diff = np.abs(d[:, 1] - d[:, 0])
            vals = {"prob_d2_le_d1": pr, "prob_se": _binomial_se(pr, r), "mean_abs_diff": float(diff.mean()),
                    "mean_abs_diff_se": float(diff.std(ddof=1) / np.sqrt(r)) if r > 1 else float("nan")}
        else:
            vals = {k: float("nan") for k in ("prob_d2_le_d1", "prob_se", "mean_abs_diff", "mean_abs_diff_se")}
        cells.append(CellRecord(key, vals, r, cfg.repetitions - r))
    return StudyResult(cfg, cells, time.perf_counter() - t0, log)


# ---------------------------------------------------------------------------
# regression coverage


def _regression_rep(cfg: StudyConfig, case: int, n: int, rep: int):
    theta0 = regression_case_theta(case)
    data = generate_data(REGRESSION_MODEL, theta0, n, rep_rng(cfg, case, n, rep))
    priors = regression_priors()
    proposal = conjugate_proposal(REGRESSION_MODEL, priors["independence"], data)
    out = {}
    for k, name in enumerate(("independence", "t")):
        if name not in cfg.priors:
            continue
        rng = rep_rng(cfg, case, n, rep, k)
        try:
            out[name] = _sir_hpd(cfg, REGRESSION_MODEL, priors[name], data, proposal, theta0, rng)
        except Exception as exc:
            out[name] = f"{type(exc).__name__}: {exc}"
    return out


def run_regression_coverage(cfg: StudyConfig) -> StudyResult:
    """HPD coverage and median area for the regression cases under both priors."""
    if cfg.study != "regression_coverage":
        raise ValueError("configuration is not for the regression_coverage study")
    t0 = time.perf_counter()
    cells_spec = [(c, n) for c in cfg.cases for n in cfg.sample_sizes]
    keys = [(c, n, r) for c, n in cells_spec for r in range(cfg.repetitions)]
    outs = _map(_regression_rep, cfg, keys)
    cells, log = [], []
    for i, (case, n) in enumerate(cells_spec):
        chunk = outs[i * cfg.repetitions:(i + 1) * cfg.repetitions]
        for prior in cfg.priors:
            key = {"case": case, "prior": prior, "n": n}
            per = [(ok, v[prior] if ok else v) for ok, v in chunk]
            per = [(ok and not isinstance(v, str), v) for ok, v in per]
            _log_failures(log, key, per)
            good = np.array([v for ok, v in per if ok]).reshape(-1, 2)
            r = len(good)
            cov = float(good[:, 0].mean()) if r else float("nan")
            area = float(np.median(good[:, 1])) if r else float("nan")
            cells.append(CellRecord(key, {"coverage": cov, "coverage_se": _binomial_se(cov, r),
                                          "median_area": area}, r, cfg.repetitions - r))
    return StudyResult(cfg, cells, time.perf_counter() - t0, log)


RUNNERS = {
    "tau_retention": run_tau_retention,
    "multinomial_coverage": run_coverage,
    "gamma_coverage": run_coverage,
    "mode_convergence": run_mode_convergence,
    "regression_coverage": run_regression_coverage,
}


def run_study(cfg: StudyConfig) -> StudyResult:
    return RUNNERS[cfg.study](cfg)
