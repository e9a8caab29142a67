"""Rank-based tests: midranks, Kruskal-Wallis H and Spearman's rho."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from ..errors import PreconditionError
from .special import chi_square_sf, student_t_sf

__all__ = [
    "RankedSample",
    "KWResult",
    "SpearmanResult",
    "significance_stars",
    "drop_missing",
    "midranks",
    "kruskal_wallis",
    "spearman",
    "EXACT_MAX_N",
]

#: Largest sample for which exact permutation p-values are enumerated (10! orderings).
EXACT_MAX_N = 10


def significance_stars(p: float | None) -> str:
    """``"**"`` below 0.01, ``"*"`` below 0.05, otherwise empty (two-tailed p)."""
    if p is None:
        return ""
    if p < 0.01:
        return "**"
    if p < 0.05:
        return "*"
    return ""


def _is_missing(v) -> bool:
    return v is None or (isinstance(v, float) and math.isnan(v))


def drop_missing(values: Sequence) -> list[float]:
    return [float(v) for v in values if not _is_missing(v)]


@dataclass(frozen=True)
class RankedSample:
    values: tuple[float, ...]
    ranks: tuple[float, ...]
    tie_groups: tuple[int, ...]  # multiplicity of each distinct value, ascending by value

    @property
    def tie_correction_sum(self) -> int:
        return sum(t ** 3 - t for t in self.tie_groups)


def midranks(values: Sequence[float]) -> RankedSample:
    """Rank ``values`` from 1, giving tied values the mean of the ranks they span."""
    vals = tuple(float(v) for v in values)
    if not vals:
        raise PreconditionError("cannot rank an empty sample")
    if any(math.isnan(v) for v in vals):
        raise PreconditionError("missing values must be removed before ranking")
    order = sorted(range(len(vals)), key=vals.__getitem__)
    ranks = [0.0] * len(vals)
    ties = []
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and vals[order[j + 1]] == vals[order[i]]:
            j += 1
        # positions i..j (0-based) hold ranks i+1..j+1
        r = (i + j + 2) / 2.0
        for k in range(i, j + 1):
            ranks[order[k]] = r
        ties.append(j - i + 1)
        i = j + 1
    return RankedSample(vals, tuple(ranks), tuple(ties))


@dataclass(frozen=True)
class KWResult:
    h: float
    h_corrected: float
    df: int
    p: float
    mean_ranks: tuple[float, ...]
    sizes: tuple[int, ...]

    @property
    def stars(self) -> str:
        return significance_stars(self.p)

    @property
    def p_uncorrected(self) -> float:
        return chi_square_sf(self.h, self.df)


def kruskal_wallis(groups: Sequence[Sequence[float]]) -> KWResult:
    """Kruskal-Wallis H test on pooled midranks, with tie correction.

    Missing values (``None``/NaN) are dropped within each group before ranking.
    The p-value is the chi-square upper tail at the tie-corrected statistic
    with ``k - 1`` degrees of freedom.
    """
    cleaned = [drop_missing(g) for g in groups]
    if len(cleaned) < 2:
        raise PreconditionError(f"Kruskal-Wallis needs at least 2 groups, got {len(cleaned)}")
    for idx, g in enumerate(cleaned):
        if not g:
            raise PreconditionError(f"group {idx} is empty after dropping missing values")
    pooled = [v for g in cleaned for v in g]
    ranked = midranks(pooled)
    n_total = len(pooled)
    correction = 1.0 - ranked.tie_correction_sum / (n_total ** 3 - n_total)
    if correction <= 0:
        raise PreconditionError("all pooled values are identical; H is undefined")

    rank_sums = []
    start = 0
    for g in cleaned:
        rank_sums.append(math.fsum(ranked.ranks[start:start + len(g)]))
        start += len(g)
    sizes = tuple(len(g) for g in cleaned)
    h = (12.0 / (n_total * (n_total + 1)) * math.fsum(r * r / n for r, n in zip(rank_sums, sizes))
         - 3.0 * (n_total + 1))
    h = max(h, 0.0)
    h_corr = h / correction
    df = len(cleaned) - 1
    return KWResult(
        h=h,
        h_corrected=h_corr,
        df=df,
        p=chi_square_sf(h_corr, df),
        mean_ranks=tuple(r / n for r, n in zip(rank_sums, sizes)),
        sizes=sizes,
    )


@dataclass(frozen=True)
class SpearmanResult:
    rho: float
    n: int
    p: float
    exact: bool = field(default=False)

    @property
    def stars(self) -> str:
        return significance_stars(self.p)


@lru_cache(maxsize=4)
def _permutations(n: int) -> np.ndarray:
    """All orderings of ``range(n)`` as an ``(n!, n)`` int8 array, built by insertion."""
    perms = np.zeros((1, 0), dtype=np.int8)
    for k in range(n):
        m = perms.shape[0]
        out = np.empty((m * (k + 1), k + 1), dtype=np.int8)
        for pos in range(k + 1):
            block = out[pos * m:(pos + 1) * m]
            block[:, :pos] = perms[:, :pos]
            block[:, pos] = k
            block[:, pos + 1:] = perms[:, pos:]
        perms = out
    perms.setflags(write=False)
    return perms


def _exact_p(rx: np.ndarray, ry: np.ndarray, rho: float) -> float:
    """Two-tailed permutation p-value: share of y-orderings with |rho| at least as large."""
    n = len(rx)
    cx = rx - rx.mean()
    cy = ry - ry.mean()
    denom = math.sqrt(float(cx @ cx) * float(cy @ cy))
    target = abs(rho) * denom - 1e-9 * denom
    perms = _permutations(n)
    hits = 0
    chunk = 400_000
    for start in range(0, perms.shape[0], chunk):
        stat = cy[perms[start:start + chunk]] @ cx
        hits += int(np.count_nonzero(np.abs(stat) >= target))
    return hits / perms.shape[0]


def spearman(x: Sequence[float], y: Sequence[float], *, exact: bool = False) -> SpearmanResult:
    """Spearman's rank correlation with a two-tailed p-value.

    rho is the Pearson correlation of midranks, so ties are handled without the
    ``1 - 6 sum d^2`` shortcut.  Pairs with a missing value on either side are
    dropped first.  The default p-value uses ``t = rho sqrt((n-2)/(1-rho^2))`` on
    ``n - 2`` degrees of freedom; ``exact=True`` enumerates every permutation of
    ``y`` instead and is limited to ``n <= 10``.
    """
    if len(x) != len(y):
        raise PreconditionError(f"length mismatch: {len(x)} vs {len(y)}")
    pairs = [(float(a), float(b)) for a, b in zip(x, y) if not (_is_missing(a) or _is_missing(b))]
    n = len(pairs)
    if n < 3:
        raise PreconditionError(f"Spearman needs at least 3 complete pairs, got {n}")
    rx = np.array(midranks([a for a, _ in pairs]).ranks)
    ry = np.array(midranks([b for _, b in pairs]).ranks)
    cx = rx - rx.mean()
    cy = ry - ry.mean()
    sxx = float(cx @ cx)
    syy = float(cy @ cy)
    if sxx == 0 or syy == 0:
        raise PreconditionError("Spearman is undefined for a constant variable")
    rho = float(cx @ cy) / math.sqrt(sxx * syy)
    rho = min(1.0, max(-1.0, rho))

    if exact:
        if n > EXACT_MAX_N:
            raise PreconditionError(f"exact permutation p-values are limited to n <= {EXACT_MAX_N}")
        return SpearmanResult(rho, n, _exact_p(rx, ry, rho), exact=True)

    if abs(rho) >= 1.0:
        p = 0.0
    else:
        t = rho * math.sqrt((n - 2) / (1.0 - rho * rho))
        p = min(1.0, 2.0 * student_t_sf(abs(t), n - 2))
    return SpearmanResult(rho, n, p)
