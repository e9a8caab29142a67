"""Seeded synthetic survey records with planted tiers and planted coupling.

Stand-in for the restricted survey extract.  Each respondent draws a focal
tier and selects organizations mostly from that tier's pool (tier
homophily), so organizations of one tier are co-selected with each other.
Every ordinal answer is a thresholded latent score

    y = (coupling * s + noise) / sqrt(1 + coupling**2)

where ``s`` is the respondent's standardized selection count, so
``coupling = 0`` makes the answers independent of the network by
construction and ``coupling > 0`` makes more connected respondents answer
better.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, fields
from pathlib import Path
from statistics import NormalDist

import numpy as np

from .errors import InputError
from .survey import GROUPS, Codebook, SurveyRecord, default_codebook

__all__ = ["GeneratorConfig", "load_generator_config", "generate_synthetic", "codebook_for"]

DEFAULT_POOLS = {
    1: ("FBI", "Department of Energy", "FAA", "Department of State", "United States Secret Service",
        "Department of Transportation", "United States Customs Service", "DEA", "Border Patrol"),
    2: ("State Law Enforcement", "State Emergency Services", "Local Law Enforcement",
        "Other State Agencies", "State Agencies (in state)", "State Agencies (out of state)",
        "State or Local Transportation Agencies"),
    3: ("Professional Associations", "Private Businesses", "International Agencies",
        "Media Organizations", "Volunteer Organizations", "Utility Companies"),
}

# latent cut points, as cumulative shares of a standard normal
_FREQUENCY_CUTS = (1 / 6, 2 / 6, 3 / 6, 4 / 6, 5 / 6)  # strength 0..5
_USEFULNESS_CUTS = (0.35, 0.6, 0.8)  # code 1..4, 1 = never used
_READINESS_CUTS = (0.25, 0.5, 0.75)  # readiness 1..4


@dataclass(frozen=True)
class GeneratorConfig:
    sizes: dict = field(default_factory=lambda: {"SLE": 39, "SES": 37, "LLE": 148})
    pools: dict = field(default_factory=lambda: dict(DEFAULT_POOLS))
    selection_p: dict = field(default_factory=lambda: {1: 0.3, 2: 0.3, 3: 0.3})
    homophily: float = 0.95
    scale: dict = field(default_factory=lambda: {g: 1.0 for g in GROUPS})
    coupling: float = 1.0
    missing: float = 0.02

    def __post_init__(self):
        for g, n in self.sizes.items():
            if g not in GROUPS or int(n) != n or n < 0:
                raise InputError(f"invalid group size {g}={n}")
        if set(self.pools) != {1, 2, 3} or set(self.selection_p) != {1, 2, 3}:
            raise InputError("pools and selection probabilities are needed for tiers 1, 2 and 3")
        labels = [lab for t in (1, 2, 3) for lab in self.pools[t]]
        if len(labels) != len(set(labels)):
            raise InputError("an organization appears in more than one tier pool")
        for name, p in [*((f"p.tier{t}", v) for t, v in self.selection_p.items()),
                        ("homophily", self.homophily), ("missing", self.missing)]:
            if not 0.0 <= p <= 1.0:
                raise InputError(f"{name}={p} is not a probability in [0, 1]")
        for g, s in self.scale.items():
            if g not in GROUPS or s < 0:
                raise InputError(f"invalid selection scale {g}={s}")
            for t, p in self.selection_p.items():
                if p * s > 1.0:
                    raise InputError(f"p.tier{t} * scale.{g} = {p * s} exceeds 1")

    @property
    def tiers(self) -> dict:
        return {lab: t for t in (1, 2, 3) for lab in self.pools[t]}


def load_generator_config(path: str | Path) -> GeneratorConfig:
    """Read a ``key = value`` file; ``#`` starts a comment, lists are ``;``-separated.

    Keys: ``size.<GROUP>``, ``tier1``/``tier2``/``tier3`` (organization lists),
    ``p.tier<N>``, ``scale.<GROUP>``, ``homophily``, ``coupling``, ``missing``.
    """
    kw: dict = {f.name: f.default_factory() if callable(f.default_factory) else f.default
                for f in fields(GeneratorConfig)}
    kw = {k: dict(v) if isinstance(v, dict) else v for k, v in kw.items()}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read generator config {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        try:
            if m := re.fullmatch(r"size\.(\w+)", key):
                kw["sizes"][m.group(1)] = int(value)
            elif m := re.fullmatch(r"tier([123])", key):
                kw["pools"][int(m.group(1))] = tuple(s.strip() for s in value.split(";") if s.strip())
            elif m := re.fullmatch(r"p\.tier([123])", key):
                kw["selection_p"][int(m.group(1))] = float(value)
            elif m := re.fullmatch(r"scale\.(\w+)", key):
                kw["scale"][m.group(1)] = float(value)
            elif key in ("homophily", "coupling", "missing"):
                kw[key] = float(value)
            else:
                raise InputError(f"{path}:{lineno}: unknown key {key!r}")
        except ValueError as exc:
            if isinstance(exc, InputError):
                raise
            raise InputError(f"{path}:{lineno}: bad value for {key}: {value!r}") from exc
    return GeneratorConfig(**kw)


def _column_name(label: str) -> str:
    return re.sub(r"[^A-Z0-9]", "", label.upper()) or "ORG"


def codebook_for(config: GeneratorConfig) -> Codebook:
    """Codebook matching :func:`generate_synthetic` output for ``config``.

    Organizations known to the default survey codebook keep its column name;
    any other pool member gets a column derived from its label.
    """
    base = default_codebook()
    relational = {}
    for label, tier in config.tiers.items():
        col = base.column_for(label) or _column_name(label)
        while col in relational:
            col += "X"
        relational[col] = (label, tier)
    return Codebook(
        relational_vars=relational,
        frequency_vars=base.frequency_vars,
        usefulness_vars=base.usefulness_vars,
        preparedness_var=base.preparedness_var,
        group_var=base.group_var,
        id_var=base.id_var,
        groups={g: (label, config.tiers.get(label, 2)) for g, (label, _) in base.groups.items()},
    )


def _level(y: float, cuts: tuple) -> int:
    return sum(1 for c in cuts if y > c)


def generate_synthetic(config: GeneratorConfig, seed: int) -> list[SurveyRecord]:
    """Deterministic record list for ``(config, seed)``; groups in SLE, SES, LLE order."""
    cb = default_codebook()
    rng = np.random.default_rng(seed)
    z = NormalDist()
    freq_cuts = tuple(z.inv_cdf(q) for q in _FREQUENCY_CUTS)
    use_cuts = tuple(z.inv_cdf(q) for q in _USEFULNESS_CUTS)
    ready_cuts = tuple(z.inv_cdf(q) for q in _READINESS_CUTS)

    people = []
    for g in GROUPS:
        for i in range(config.sizes.get(g, 0)):
            focal = int(rng.integers(1, 4))
            chosen = []
            for t in (1, 2, 3):
                p = config.selection_p[t] * config.scale.get(g, 1.0)
                if t != focal:
                    p *= 1.0 - config.homophily
                draws = rng.random(len(config.pools[t]))
                chosen.extend(lab for lab, u in zip(config.pools[t], draws) if u < p)
            people.append((f"{g}{i + 1:03d}", g, frozenset(chosen)))

    degrees = np.array([len(sel) for _, _, sel in people], dtype=float)
    sd = degrees.std()
    standardized = (degrees - degrees.mean()) / sd if sd > 0 else np.zeros_like(degrees)
    c = config.coupling
    norm = math.sqrt(1.0 + c * c)

    def latent(s):
        return (c * s + rng.standard_normal()) / norm

    def maybe_missing(value):
        return None if rng.random() < config.missing else value

    records = []
    for (resp_id, g, sel), s in zip(people, standardized):
        freq = {col: maybe_missing(6 - _level(latent(s), freq_cuts)) for col in cb.frequency_vars}
        useful = {col: maybe_missing(1 + _level(latent(s), use_cuts)) for col in cb.usefulness_vars}
        prepared = maybe_missing(5 - (1 + _level(latent(s), ready_cuts)))
        records.append(SurveyRecord(resp_id, g, sel, freq, useful, prepared))
    return records
