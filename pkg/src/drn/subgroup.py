"""Cohesive subgroups: maximal cliques, n-cliques, co-membership and tier votes."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np

from .errors import InsufficientEvidence, PreconditionError
from .graph import Graph

__all__ = [
    "CliqueSet",
    "CoMembership",
    "TierAssignment",
    "maximal_cliques",
    "n_cliques",
    "power_adjacency",
    "co_membership",
    "predict_tier",
    "select_clusters",
]


@dataclass(frozen=True)
class CliqueSet:
    """Canonically ordered subgroups; ``n`` is 1 for plain maximal cliques."""

    cliques: tuple[tuple, ...]
    n: int = 1

    @property
    def kind(self) -> str:
        return "maximal-clique" if self.n == 1 else "n-clique"

    def __len__(self) -> int:
        return len(self.cliques)

    def __iter__(self):
        return iter(self.cliques)

    def min_size(self, size: int) -> "CliqueSet":
        return CliqueSet(tuple(c for c in self.cliques if len(c) >= size), self.n)


def _bron_kerbosch(adj: Mapping[Hashable, set], limit: int | None) -> list[tuple]:
    """Bron-Kerbosch with Tomita pivoting, iterative to keep the stack flat."""
    found: list[tuple] = []
    if not adj:
        return found
    stack = [((), set(adj), set())]
    while stack:
        r, p, x = stack.pop()
        if not p:
            if not x:
                found.append(r)
                if limit is not None and len(found) > limit:
                    raise PreconditionError(f"subgroup census exceeded the limit of {limit} sets")
            continue
        pivot = max(p | x, key=lambda u: len(p & adj[u]))
        for v in list(p - adj[pivot]):
            nbrs = adj[v]
            stack.append((r + (v,), p & nbrs, x & nbrs))
            p.remove(v)
            x.add(v)
    return found


def _canonical(cliques: Iterable[tuple], n: int) -> CliqueSet:
    return CliqueSet(tuple(sorted(tuple(sorted(c)) for c in cliques)), n)


def maximal_cliques(g: Graph, *, limit: int | None = None) -> CliqueSet:
    """Every maximal clique of ``g``, members sorted, list sorted lexicographically.

    Isolated nodes form singleton cliques.  ``limit`` aborts with
    :class:`PreconditionError` once more than that many cliques are found.
    """
    return _canonical(_bron_kerbosch(g.adjacency(), limit), 1)


def power_adjacency(g: Graph, n: int) -> dict:
    """Adjacency of the n-th power of ``g``: u ~ v iff their hop distance is 1..n."""
    adj = g.adjacency()
    power = {}
    for s in adj:
        seen = {s}
        frontier = [s]
        for _ in range(n):
            nxt = []
            for u in frontier:
                for v in adj[u]:
                    if v not in seen:
                        seen.add(v)
                        nxt.append(v)
            frontier = nxt
            if not frontier:
                break
        seen.discard(s)
        power[s] = seen
    return power


def n_cliques(g: Graph, n: int, *, limit: int | None = None) -> CliqueSet:
    """Maximal node sets whose pairwise distance in the full graph ``g`` is at most ``n``.

    These are exactly the maximal cliques of the n-th graph power.
    """
    if n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    return _canonical(_bron_kerbosch(power_adjacency(g, n), limit), n)


@dataclass(frozen=True)
class CoMembership:
    """Counts of subgroups containing each pair of nodes (diagonal: each node)."""

    nodes: tuple
    matrix: np.ndarray
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_index", {n: i for i, n in enumerate(self.nodes)})

    def __contains__(self, node) -> bool:
        return node in self._index

    def count(self, u, v) -> int:
        return self.matrix[self._index[u], self._index[v]].item()

    def diag(self, u) -> int:
        return self.count(u, u)

    def scaled(self, factor: float) -> "CoMembership":
        return CoMembership(self.nodes, self.matrix * factor)


def co_membership(cs: CliqueSet | Iterable[Sequence], nodes: Iterable | None = None) -> CoMembership:
    """Build the co-membership matrix of a clique collection.

    ``nodes`` fixes the row/column index (sorted); members outside it are
    ignored.  By default the index is every node appearing in some clique.
    """
    cliques = [tuple(c) for c in cs]
    if nodes is None:
        index = sorted({m for c in cliques for m in c})
    else:
        index = sorted(set(nodes))
    pos = {n: i for i, n in enumerate(index)}
    mat = np.zeros((len(index), len(index)), dtype=np.int64)
    for c in cliques:
        idx = sorted({pos[m] for m in c if m in pos})
        if idx:
            mat[np.ix_(idx, idx)] += 1
    return CoMembership(tuple(index), mat)


@dataclass(frozen=True)
class TierAssignment:
    org: Hashable
    predicted_tier: int
    evidence: dict  # tier -> summed co-membership with labeled orgs of that tier


def predict_tier(org, cm: CoMembership, known: Mapping[Hashable, int | None], *,
                 prefer_lower_tier: bool = True) -> TierAssignment:
    """Co-membership-weighted vote over organizations with a known tier.

    Each labeled organization ``v != org`` adds ``cm(org, v)`` to its tier's
    tally.  Ties go to the smaller tier number unless ``prefer_lower_tier`` is
    false, in which case they go to the larger one.
    """
    if org not in cm:
        raise KeyError(f"{org!r} is not indexed by the co-membership matrix")
    evidence: dict[int, float] = {}
    for v in cm.nodes:
        tier = known.get(v)
        if v == org or tier is None:
            continue
        evidence[tier] = evidence.get(tier, 0) + cm.count(org, v)
    evidence = {t: evidence[t] for t in sorted(evidence)}
    if not evidence or max(evidence.values()) <= 0:
        raise InsufficientEvidence(f"insufficient subgroup evidence for {org}")
    best = max(evidence.values())
    winners = [t for t, votes in evidence.items() if votes == best]
    tier = min(winners) if prefer_lower_tier else max(winners)
    return TierAssignment(org, tier, evidence)


def select_clusters(cs: CliqueSet | Sequence[Sequence], membership: Mapping[Hashable, str],
                    groups_required: Iterable[str], k: int, seed: int) -> list[tuple]:
    """Draw ``k`` distinct clusters uniformly, without replacement, among eligible ones.

    A cluster is eligible when its members cover every group in
    ``groups_required`` according to ``membership`` (node -> group).
    """
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    required = set(groups_required)
    eligible = sorted(
        tuple(c) for c in cs
        if required <= {membership[m] for m in c if m in membership}
    )
    if len(eligible) < k:
        raise PreconditionError(f"only {len(eligible)} eligible clusters, {k} requested")
    return random.Random(seed).sample(eligible, k)
