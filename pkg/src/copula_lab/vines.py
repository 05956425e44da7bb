"""D-vine structure with per-edge Kendall's tau."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .errors import DomainError, ParameterError

__all__ = ["VineEdge", "DVine", "enumerate_dvine_edges"]


@dataclass(frozen=True)
class VineEdge:
    """Edge ``e1,e2|D`` of tree ``tree`` (1-based variable labels)."""

    tree: int
    e1: int
    e2: int
    conditioning: tuple[int, ...]

    @property
    def label(self) -> str:
        cond = ",".join(str(v) for v in self.conditioning) if self.conditioning else "∅"
        return f"{self.e1},{self.e2}|{cond}"

    @property
    def variables(self) -> frozenset[int]:
        return frozenset((self.e1, self.e2, *self.conditioning))


def enumerate_dvine_edges(d: int) -> list[VineEdge]:
    """Edges of a ``d``-dimensional D-vine, ordered by tree then position.

    Tree ``j`` joins variables ``i`` and ``i + j`` given ``i+1, ..., i+j-1``.

    >>> [e.label for e in enumerate_dvine_edges(3)]
    ['1,2|∅', '2,3|∅', '1,3|2']
    """
    if int(d) != d or d < 2:
        raise ValueError("a D-vine needs d >= 2")
    d = int(d)
    return [VineEdge(j, i, i + j, tuple(range(i + 1, i + j)))
            for j in range(1, d) for i in range(1, d - j + 1)]


@dataclass(frozen=True)
class DVine:
    """D-vine structure carrying one Kendall's tau per edge.

    Parameters
    ----------
    dim : int
    taus : tuple of float
        Edge values in :func:`enumerate_dvine_edges` order, each in ``(-1, 1)``.
    families : tuple of str or None, optional
        Optional bivariate family tag per edge.
    """

    dim: int
    taus: tuple[float, ...]
    families: tuple[str | None, ...] | None = None

    def __post_init__(self):
        edges = enumerate_dvine_edges(self.dim)
        taus = tuple(float(t) for t in self.taus)
        if len(taus) != len(edges):
            raise ParameterError(f"expected {len(edges)} edge taus, got {len(taus)}")
        for e, t in zip(edges, taus):
            if not -1.0 < t < 1.0:
                raise DomainError(f"edge {e.label}: tau must lie strictly inside (-1, 1), got {t}")
        object.__setattr__(self, "taus", taus)
        if self.families is not None:
            fams = tuple(self.families)
            if len(fams) != len(edges):
                raise ParameterError("one family tag per edge is required")
            object.__setattr__(self, "families", fams)

    @classmethod
    def from_mapping(cls, dim: int, taus: Mapping[str, float]) -> "DVine":
        edges = enumerate_dvine_edges(dim)
        unknown = set(taus) - {e.label for e in edges}
        if unknown:
            raise ParameterError(f"unknown edge labels {sorted(unknown)}")
        missing = [e.label for e in edges if e.label not in taus]
        if missing:
            raise ParameterError(f"missing taus for edges {missing}")
        return cls(dim, tuple(taus[e.label] for e in edges))

    @property
    def edges(self) -> list[VineEdge]:
        return enumerate_dvine_edges(self.dim)

    def items(self) -> list[tuple[VineEdge, float]]:
        return list(zip(self.edges, self.taus))

    def tree(self, j: int) -> tuple[list, list[VineEdge]]:
        """Nodes and edges of tree ``T_j``.

        Nodes of ``T_1`` are the variables; nodes of ``T_j`` for ``j > 1`` are
        the edges of ``T_{j-1}``.
        """
        if not 1 <= j < self.dim:
            raise ValueError(f"tree index must lie in [1, {self.dim - 1}]")
        edges = [e for e in self.edges if e.tree == j]
        nodes = list(range(1, self.dim + 1)) if j == 1 else [e for e in self.edges if e.tree == j - 1]
        return nodes, edges
