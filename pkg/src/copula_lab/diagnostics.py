"""Chronic-rejection diagnostic for prior dependence structures.

As ``n`` grows the posterior approaches a normal distribution with covariance
proportional to the inverse Fisher information, so its D-vine edge taus tend
to those of a Gaussian copula with that correlation.  A prior whose edge taus
cannot be matched by any ``theta0`` in the design prior's support is
chronically rejected.  Exact equality is replaced by a tolerance, and the
support is explored with a finite probe set.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .copulas import rho_to_tau
from .errors import DomainError
from .marginals import CopulaPrior
from .models import Model, inverse_fisher
from .vines import DVine, enumerate_dvine_edges

__all__ = ["InducedTauStructure", "RejectionVerdict", "SupportProbe", "induced_tau", "chronic_rejection_check"]


@dataclass(frozen=True)
class InducedTauStructure:
    labels: tuple[str, ...]
    taus: tuple[float, ...]

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.labels, self.taus))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.taus, dtype=dtype)


def induced_tau(sigma, vine: DVine | int) -> InducedTauStructure:
    """Edge taus of the Gaussian copula with covariance ``sigma``.

    For each edge ``e1,e2|D`` the partial correlation is read off the inverse
    of the covariance submatrix on ``{e1, e2} ∪ D`` and mapped to tau with
    ``2 asin(rho) / pi``.

    Parameters
    ----------
    sigma : array_like, shape (d, d)
        Symmetric positive-definite covariance.
    vine : DVine or int
        Structure (only its edges are used) or the dimension.
    """
    s = np.asarray(sigma, dtype=float)
    dim = vine if isinstance(vine, (int, np.integer)) else vine.dim
    if s.shape != (dim, dim):
        raise DomainError(f"covariance must be {dim}x{dim}")
    if not np.allclose(s, s.T, rtol=1e-10, atol=0):
        raise DomainError("covariance must be symmetric")
    try:
        np.linalg.cholesky(s)
    except np.linalg.LinAlgError as exc:
        raise DomainError("covariance must be positive definite") from exc
    labels, taus = [], []
    for e in enumerate_dvine_edges(dim):
        idx = [e.e1 - 1, e.e2 - 1] + [c - 1 for c in e.conditioning]
        prec = np.linalg.inv(s[np.ix_(idx, idx)])
        rho = -prec[0, 1] / np.sqrt(prec[0, 0] * prec[1, 1])
        labels.append(e.label)
        taus.append(rho_to_tau(float(np.clip(rho, -1 + 1e-16, 1 - 1e-16))) + 0.0)
    return InducedTauStructure(tuple(labels), tuple(taus))


@dataclass(frozen=True)
class SupportProbe:
    """How to explore the design prior's support.

    Exactly one source is used: explicit ``points``, ``count`` draws from
    ``prior`` (seeded by ``seed``), or a ``grid`` with ``per_axis`` nodes
    spanning the marginal quantile range ``[q, 1 - q]`` of ``prior``.
    """

    kind: str = "sample"
    points: tuple[tuple[float, ...], ...] = ()
    prior: CopulaPrior | None = None
    count: int = 512
    per_axis: int = 25
    quantile: float = 0.001
    seed: int = 0

    @classmethod
    def explicit(cls, points: Iterable[Sequence[float]]) -> "SupportProbe":
        return cls("points", points=tuple(tuple(float(v) for v in p) for p in points))

    @classmethod
    def sample(cls, prior: CopulaPrior, count: int = 512, seed: int = 0) -> "SupportProbe":
        return cls("sample", prior=prior, count=count, seed=seed)

    @classmethod
    def grid(cls, prior: CopulaPrior, per_axis: int = 25, quantile: float = 0.001) -> "SupportProbe":
        return cls("grid", prior=prior, per_axis=per_axis, quantile=quantile)

    def points_array(self) -> np.ndarray:
        if self.kind == "points":
            return np.asarray(self.points, dtype=float).reshape(len(self.points), -1)
        if self.prior is None:
            raise ValueError(f"{self.kind} probe needs a design prior")
        if self.kind == "sample":
            if self.count < 1:
                return np.empty((0, self.prior.dim))
            return self.prior.sample(self.count, np.random.default_rng(self.seed))
        if self.kind == "grid":
            q = np.linspace(self.quantile, 1.0 - self.quantile, self.per_axis)
            axes = [m.quantile(q) for m in self.prior.marginals]
            mesh = np.meshgrid(*axes, indexing="ij")
            return np.stack([m.ravel() for m in mesh], axis=-1)
        raise ValueError(f"unknown probe kind {self.kind!r}")


@dataclass(frozen=True)
class RejectionVerdict:
    """Outcome of :func:`chronic_rejection_check`.

    ``gap`` is the smallest, over probes, of the largest edge discrepancy
    ``|tau_prior - tau(theta0)|``; the probe attaining it is ``nearest_theta``.
    """

    chronically_rejected: bool
    gap: float
    nearest_theta: tuple[float, ...]
    nearest_taus: dict
    prior_taus: dict
    probes: int
    skipped: int
    tolerance: float

    def to_dict(self) -> dict:
        return {
            "chronically_rejected": self.chronically_rejected,
            "gap": self.gap,
            "nearest_theta": list(self.nearest_theta),
            "nearest_taus": self.nearest_taus,
            "prior_taus": self.prior_taus,
            "probes": self.probes,
            "skipped": self.skipped,
            "tolerance": self.tolerance,
        }


def chronic_rejection_check(prior_vine: DVine, model: Model, support_probe: SupportProbe | Sequence,
                            tol_tau: float = 0.01) -> RejectionVerdict:
    """Decide whether a prior D-vine tau structure is chronically rejected.

    Parameters
    ----------
    prior_vine : DVine
        Elicited edge taus.
    model : Model
        Supplies the inverse Fisher information at each probe.
    support_probe : SupportProbe or sequence of points
        Probe points in the interior of the parameter space.
    tol_tau : float
        Largest edge discrepancy still counted as a match.

    Returns
    -------
    RejectionVerdict
    """
    if not tol_tau > 0:
        raise ValueError("tol_tau must be positive")
    if not isinstance(support_probe, SupportProbe):
        support_probe = SupportProbe.explicit(support_probe)
    pts = support_probe.points_array()
    if len(pts) == 0:
        raise ValueError("the probe set is empty")
    if prior_vine.dim != model.dim:
        raise DomainError("vine dimension must match the model's parameter dimension")
    target = np.asarray(prior_vine.taus)
    best_gap, best_k, best_taus, skipped = np.inf, -1, None, 0
    for k, theta0 in enumerate(pts):
        if not model.in_interior(theta0):
            skipped += 1
            continue
        ind = induced_tau(inverse_fisher(model, theta0), prior_vine)
        gap = float(np.max(np.abs(target - np.asarray(ind.taus))))
        if gap < best_gap:
            best_gap, best_k, best_taus = gap, k, ind
    if best_k < 0:
        raise DomainError("no probe point lies in the interior of the parameter space")
    labels = [e.label for e in prior_vine.edges]
    return RejectionVerdict(
        chronically_rejected=bool(best_gap > tol_tau),
        gap=best_gap,
        nearest_theta=tuple(float(v) for v in pts[best_k]),
        nearest_taus=best_taus.as_dict(),
        prior_taus=dict(zip(labels, prior_vine.taus)),
        probes=len(pts),
        skipped=skipped,
        tolerance=float(tol_tau),
    )
