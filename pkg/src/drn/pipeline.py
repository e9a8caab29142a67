"""Assessment pipeline stages: ingest, H1 (subgroups/tiers), H2 (Kruskal-Wallis),
H3 (Spearman) and the consolidated report.

Each stage reads and writes plain files in the output directory, so stages
can be rerun independently and every output byte is determined by the
inputs, codebook and :class:`RunConfig`.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .errors import InputError, InsufficientEvidence, PreconditionError
from .graph import org_node, respondent_node, write_edge_list
from .measures import (
    CONNECTEDNESS,
    COORDINATION,
    Profile,
    compute_profiles,
    read_profiles_csv,
    write_profiles_csv,
)
from .report import (
    clique_lines,
    comembership_rows,
    csv_text,
    kw_rows,
    markdown_table,
    render_markdown_report,
    spearman_rows,
    count_rows,
    tier_rows,
)
from .stats import kruskal_wallis, spearman
from .subgroup import co_membership, maximal_cliques, n_cliques, predict_tier, select_clusters
from .survey import (
    GROUPS,
    Codebook,
    SurveyRecord,
    build_organization_network,
    build_respondent_network,
    default_codebook,
    group_counts,
    load_codebook,
    parse_survey_csv,
    write_survey_csv,
)
from .synthetic import GeneratorConfig, codebook_for, generate_synthetic, load_generator_config

log = logging.getLogger(__name__)

__all__ = [
    "RunConfig",
    "FORMATS",
    "TEST_MATRIX",
    "cmd_generate",
    "cmd_ingest",
    "cmd_h1",
    "cmd_h2",
    "cmd_h3",
    "cmd_report",
    "spearman_matrix",
]

FORMATS = ("csv", "json", "markdown")
MIN_SUBGROUP = 2
CLUSTER_DISTANCE = 2
SPEARMAN_ORDER = (*CONNECTEDNESS, *COORDINATION)

#: Which test each variable pair receives; pairs absent here are not tested ('x').
TEST_MATRIX = {
    **{(m, "tier"): "kruskal-wallis" for m in CONNECTEDNESS},
    **{(c, m): "spearman" for c in COORDINATION for m in CONNECTEDNESS},
}


@dataclass(frozen=True)
class RunConfig:
    out: Path
    inputs: tuple = ()
    codebook: Path | None = None
    mode: str = "aggregate"
    clusters: int = 3
    seed: int = 0
    formats: tuple = FORMATS
    clique_limit: int = 200_000

    def __post_init__(self):
        object.__setattr__(self, "out", Path(self.out))
        object.__setattr__(self, "inputs", tuple(Path(p) for p in self.inputs))
        if self.mode not in ("star", "aggregate"):
            raise InputError(f"mode must be 'star' or 'aggregate', got {self.mode!r}")
        if self.clusters < 1:
            raise InputError(f"cluster count must be at least 1, got {self.clusters}")
        if not self.formats:
            raise InputError("at least one output format is required")
        bad = [f for f in self.formats if f not in FORMATS]
        if bad:
            raise InputError(f"unknown output formats {bad}; choose from {FORMATS}")


# --------------------------------------------------------------------------- files

def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_json(path: Path, data: dict) -> None:
    path.write_text(json.dumps(data, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


def _read_stage(out: Path, name: str, stage: str) -> dict:
    path = out / name
    if not path.exists():
        raise InputError(f"missing stage output {path}; run `drn {stage}` first")
    return json.loads(path.read_text(encoding="utf-8"))


def _emit(cfg: RunConfig, stem: str, rows: list[list[str]], title: str) -> None:
    if "csv" in cfg.formats:
        (cfg.out / f"{stem}.csv").write_text(csv_text(rows), encoding="utf-8")
    if "markdown" in cfg.formats:
        (cfg.out / f"{stem}.md").write_text(f"# {title}\n\n" + markdown_table(rows), encoding="utf-8")


def _load_stage_records(cfg: RunConfig) -> tuple[list[SurveyRecord], Codebook]:
    _read_stage(cfg.out, "ingest.json", "ingest")
    codebook = load_codebook(cfg.out / "codebook.json")
    return parse_survey_csv(cfg.out / "records.csv", codebook), codebook


# --------------------------------------------------------------------------- generate

def cmd_generate(out: Path, seed: int, config_path: Path | None = None) -> dict:
    """Write ``survey.csv`` and ``codebook.json`` from the synthetic generator."""
    config = load_generator_config(config_path) if config_path else GeneratorConfig()
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    records = generate_synthetic(config, seed)
    codebook = codebook_for(config)
    write_survey_csv(records, codebook, out / "survey.csv")
    codebook.save(out / "codebook.json")
    return {"records": len(records), "counts": group_counts(records)}


# --------------------------------------------------------------------------- ingest

def cmd_ingest(cfg: RunConfig) -> dict:
    """Parse inputs, compute profiles, persist records/profiles and print response counts."""
    if not cfg.inputs:
        raise InputError("no input survey files given")
    codebook = load_codebook(cfg.codebook) if cfg.codebook else default_codebook()
    records: list[SurveyRecord] = []
    seen: dict[str, Path] = {}
    for path in cfg.inputs:
        batch = parse_survey_csv(path, codebook)
        if not batch:
            raise InputError(f"{path}: no survey records")
        for rec in batch:
            if rec.resp_id in seen:
                raise InputError(f"duplicate respondent id {rec.resp_id!r} in {path} and {seen[rec.resp_id]}")
            seen[rec.resp_id] = path
        records.extend(batch)

    cfg.out.mkdir(parents=True, exist_ok=True)
    codebook.save(cfg.out / "codebook.json")
    write_survey_csv(records, codebook, cfg.out / "records.csv")
    profiles = compute_profiles(records, cfg.mode, group_labels=codebook.group_labels)
    write_profiles_csv(profiles, cfg.out / "profiles.csv")

    summary = {
        "provenance": {
            "mode": cfg.mode,
            "seed": cfg.seed,
            "clusters": cfg.clusters,
            "formats": ",".join(cfg.formats),
            "codebook_sha256": _sha256(cfg.out / "codebook.json"),
            "inputs": [{"file": p.name, "sha256": _sha256(p)} for p in cfg.inputs],
        },
        "n_records": len(records),
        "counts": group_counts(records),
        "group_labels": codebook.group_labels,
    }
    _write_json(cfg.out / "ingest.json", summary)
    _emit(cfg, "response_counts", count_rows(summary), "Response counts")
    return summary


# --------------------------------------------------------------------------- H1

def cmd_h1(cfg: RunConfig) -> dict:
    """Cliques and co-membership of the organization network, tier votes, 2-clique clusters."""
    records, codebook = _load_stage_records(cfg)
    org_net = build_organization_network(records, "combined", codebook.group_labels)
    write_edge_list(org_net, cfg.out / "org_network.tsv")
    orgs = org_net.sorted_nodes()

    macro = maximal_cliques(org_net, limit=cfg.clique_limit).min_size(MIN_SUBGROUP)
    if not len(macro):
        log.warning("organization network has no cliques with %d or more members", MIN_SUBGROUP)
    macro_cm = co_membership(macro, orgs)
    macro_json = {
        "cliques": [[n.label for n in c] for c in macro],
        "comembership": {"labels": [n.label for n in orgs], "matrix": macro_cm.matrix.tolist()},
    }

    # micro level: respondents tied to the organizations they named
    micro = build_respondent_network(records)
    census = n_cliques(micro, CLUSTER_DISTANCE, limit=cfg.clique_limit).min_size(MIN_SUBGROUP)
    membership = {respondent_node(r.resp_id): r.agency_group for r in records}
    named = [n for n in micro.sorted_nodes() if n not in membership]
    tiers_json = _tier_predictions(co_membership(census, named), codebook)

    eligible = sum(1 for c in census if set(GROUPS) <= {membership.get(m) for m in c})
    clusters_json = {"n": CLUSTER_DISTANCE, "size": len(census), "eligible": eligible,
                     "selected": None, "selection_error": None}
    try:
        picked = select_clusters(census, membership, GROUPS, cfg.clusters, cfg.seed)
    except PreconditionError as exc:
        log.warning("cluster selection: %s", exc)
        clusters_json["selection_error"] = str(exc)
    else:
        clusters_json["selected"] = [_describe_cluster(i, c, membership) for i, c in enumerate(picked, 1)]

    result = {"config": {"seed": cfg.seed, "clusters": cfg.clusters},
              "cliques": macro_json, "tiers": tiers_json, "clusters": clusters_json}
    _write_json(cfg.out / "h1.json", result)
    (cfg.out / "h1_cliques.txt").write_text(clique_lines(macro_json["cliques"]), encoding="utf-8")
    _emit(cfg, "h1_comembership", comembership_rows(macro_json["comembership"]), "Clique co-membership")
    _emit(cfg, "h1_tiers", tier_rows(result), "Tier predictions")
    return result


def _describe_cluster(index: int, cluster: Sequence, membership: dict) -> dict:
    respondents = [m.label for m in cluster if m in membership]
    counts = {g: sum(1 for m in cluster if membership.get(m) == g) for g in GROUPS}
    return {
        "index": index,
        "respondents": respondents,
        "organizations": [m.label for m in cluster if m not in membership],
        "group_counts": counts,
    }


def _tier_predictions(cm, codebook: Codebook) -> dict:
    """Predict unlabeled organizations; leave each labeled one out in turn to score the vote."""
    known = {org_node(label): tier for label, tier in codebook.tiers.items() if tier is not None}
    rows = []
    correct = total = 0
    for org in cm.nodes:
        row = {"org": org.label, "known_tier": known.get(org), "predicted_tier": None,
               "holdout_tier": None, "evidence": None, "note": None}
        votes = known if org not in known else {n: t for n, t in known.items() if n != org}
        try:
            assignment = predict_tier(org, cm, votes)
        except InsufficientEvidence as exc:
            row["note"] = str(exc)
        else:
            row["evidence"] = {str(t): v for t, v in assignment.evidence.items()}
            if org in known:
                row["holdout_tier"] = assignment.predicted_tier
            else:
                row["predicted_tier"] = assignment.predicted_tier
        if org in known:
            total += 1
            correct += row["holdout_tier"] == known[org]
        rows.append(row)
    return {
        "organizations": rows,
        "holdout": {"correct": correct, "total": total, "accuracy": correct / total if total else None},
    }


# --------------------------------------------------------------------------- H2 / H3 helpers

def _load_profiles(cfg: RunConfig) -> list[Profile]:
    path = cfg.out / "profiles.csv"
    if not path.exists():
        raise InputError(f"missing stage output {path}; run `drn ingest` first")
    return read_profiles_csv(path)


def _cluster_samples(cfg: RunConfig, profiles: list[Profile]) -> list[list[Profile]] | None:
    """Profiles of the selected clusters; a respondent in several clusters stays in the first."""
    h1 = _read_stage(cfg.out, "h1.json", "h1")
    selected = h1["clusters"]["selected"]
    if selected is None:
        log.warning("no selected clusters (%s); cluster-level tests skipped", h1["clusters"]["selection_error"])
        return None
    by_id = {p.resp_id: p for p in profiles}
    taken: set[str] = set()
    samples = []
    for c in selected:
        ids = [r for r in c["respondents"] if r not in taken]
        taken.update(ids)
        samples.append([by_id[r] for r in ids])
    return samples


def _kw_table(groups: list[str], samples: list[list[Profile]], measures: Sequence[str]) -> dict:
    results = {}
    for m in measures:
        values = [[p.value(m) for p in s] for s in samples]
        present = [v for v in values if any(x is not None for x in v)]
        if len(present) < 2:
            reason = "fewer than 2 groups with nonmissing values"
            log.warning("Kruskal-Wallis on %s skipped: %s", m, reason)
            results[m] = {"status": "skipped", "reason": reason}
            continue
        try:
            kw = kruskal_wallis(values)
        except PreconditionError as exc:
            log.warning("Kruskal-Wallis on %s skipped: %s", m, exc)
            results[m] = {"status": "skipped", "reason": str(exc)}
            continue
        results[m] = {
            "status": "tested", "h": kw.h, "h_corrected": kw.h_corrected, "df": kw.df,
            "p": kw.p, "stars": kw.stars, "mean_ranks": list(kw.mean_ranks), "sizes": list(kw.sizes),
        }
    return {"groups": groups, "measures": list(measures), "results": results}


def spearman_matrix(profiles: Sequence[Profile]) -> dict:
    """Lower-triangle Spearman matrix; only coordination x connectedness cells are tested."""
    cells = []
    for i, row_var in enumerate(SPEARMAN_ORDER):
        row = []
        for col_var in SPEARMAN_ORDER[:i + 1]:
            xs = [p.value(row_var) for p in profiles]
            ys = [p.value(col_var) for p in profiles]
            n = sum(1 for a, b in zip(xs, ys) if a is not None and b is not None)
            if row_var == col_var:
                row.append({"status": "diagonal", "n": n})
            elif TEST_MATRIX.get((row_var, col_var)) != "spearman":
                row.append({"status": "x", "n": n})
            else:
                try:
                    res = spearman(xs, ys)
                except PreconditionError as exc:
                    log.warning("Spearman %s x %s skipped: %s", row_var, col_var, exc)
                    row.append({"status": "skipped", "n": n, "reason": str(exc)})
                else:
                    row.append({"status": "tested", "n": res.n, "rho": res.rho, "p": res.p, "stars": res.stars})
        cells.append(row)
    return {"variables": list(SPEARMAN_ORDER), "n_respondents": len(profiles), "cells": cells}


def _tested(tables) -> int:
    count = 0
    for t in tables:
        if t is None:
            continue
        if "results" in t:
            count += sum(1 for r in t["results"].values() if r["status"] == "tested")
        else:
            count += sum(1 for row in t["cells"] for c in row if c["status"] == "tested")
    return count


# --------------------------------------------------------------------------- H2

def cmd_h2(cfg: RunConfig) -> dict:
    """Kruskal-Wallis mean-rank comparisons across agency groups and across selected clusters."""
    profiles = _load_profiles(cfg)
    labels = _read_stage(cfg.out, "ingest.json", "ingest")["group_labels"]
    by_group = [[p for p in profiles if p.agency_group == g] for g in GROUPS]
    agency = _kw_table([labels[g] for g in GROUPS], by_group, CONNECTEDNESS)

    samples = _cluster_samples(cfg, profiles)
    cluster = readiness = None
    if samples is not None:
        names = [f"Cluster {i}" for i in range(1, len(samples) + 1)]
        cluster = _kw_table(names, samples, CONNECTEDNESS)
        readiness = _kw_table(names, samples, ("readiness",))

    result = {"agency": agency, "cluster": cluster, "readiness": readiness}
    _write_json(cfg.out / "h2.json", result)
    _emit(cfg, "kw_agency", kw_rows(agency), "Kruskal-Wallis interconnectedness comparison (agency groups)")
    if cluster is not None:
        _emit(cfg, "kw_clusters", kw_rows(cluster), "Kruskal-Wallis interconnectedness comparison (clusters)")
        _emit(cfg, "kw_readiness", kw_rows(readiness), "Kruskal-Wallis comparison of readiness (clusters)")
    if not _tested([agency, cluster, readiness]):
        raise PreconditionError("no Kruskal-Wallis comparison could be computed")
    return result


# --------------------------------------------------------------------------- H3

def cmd_h3(cfg: RunConfig) -> dict:
    """Spearman matrices for all respondents and for the merged selected clusters."""
    profiles = _load_profiles(cfg)
    combined = spearman_matrix(profiles)
    samples = _cluster_samples(cfg, profiles)
    clusters = None if samples is None else spearman_matrix([p for s in samples for p in s])
    result = {"combined": combined, "clusters": clusters}
    _write_json(cfg.out / "h3.json", result)
    _emit(cfg, "spearman_combined", spearman_rows(combined), "Spearman correlations (combined agency network data)")
    if clusters is not None:
        _emit(cfg, "spearman_clusters", spearman_rows(clusters), "Spearman correlations (combined cluster network data)")
    if not _tested([combined, clusters]):
        raise PreconditionError("no Spearman correlation could be computed")
    return result


# --------------------------------------------------------------------------- report

def cmd_report(cfg: RunConfig) -> dict:
    """Consolidate stage outputs into ``report.json`` and/or ``report.md``."""
    stages = {"ingest": "ingest.json", "h1": "h1.json", "h2": "h2.json", "h3": "h3.json"}
    missing = [name for name in stages.values() if not (cfg.out / name).exists()]
    if missing:
        raise InputError(f"missing stage outputs in {cfg.out}: {', '.join(missing)}")
    data = {stage: json.loads((cfg.out / name).read_text(encoding="utf-8")) for stage, name in stages.items()}
    report = {"provenance": data["ingest"]["provenance"], **data}
    report["provenance"] = {**report["provenance"], "seed": cfg.seed, "clusters": cfg.clusters,
                            "formats": ",".join(cfg.formats)}
    if "json" in cfg.formats:
        _write_json(cfg.out / "report.json", report)
    if "markdown" in cfg.formats:
        (cfg.out / "report.md").write_text(render_markdown_report(report), encoding="utf-8")
    if not {"json", "markdown"} & set(cfg.formats):
        log.warning("report formats are json and markdown; nothing written for %s", cfg.formats)
    return report
