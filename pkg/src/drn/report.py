"""Rendering of stage results as CSV and markdown tables.

Renderers take the JSON-ready dictionaries produced by :mod:`drn.pipeline`,
so stage tables and the consolidated report are drawn from the same data.
"""

from __future__ import annotations

import csv
import io

from .measures import MEASURE_NAMES

__all__ = [
    "fmt",
    "markdown_table",
    "csv_text",
    "count_rows",
    "clique_lines",
    "comembership_rows",
    "tier_rows",
    "kw_rows",
    "spearman_rows",
    "render_markdown_report",
]


def fmt(x, places: int = 4) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return f"{x:.{places}f}"
    return str(x)


def markdown_table(rows: list[list[str]]) -> str:
    header, *body = rows
    lines = ["| " + " | ".join(header) + " |", "|" + "|".join("---" for _ in header) + "|"]
    lines += ["| " + " | ".join(r) + " |" for r in body]
    return "\n".join(lines) + "\n"


def csv_text(rows: list[list[str]]) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def count_rows(ingest: dict) -> list[list[str]]:
    rows = [["Agency Group", "No. agencies Participated"]]
    for code, n in ingest["counts"].items():
        rows.append([ingest["group_labels"][code], str(n)])
    rows.append(["Total", str(ingest["n_records"])])
    return rows


def clique_lines(cliques: list[list[str]]) -> str:
    """One clique per line, members comma-separated."""
    return "".join(",".join(c) + "\n" for c in cliques)


def comembership_rows(cm: dict) -> list[list[str]]:
    labels = cm["labels"]
    rows = [[""] + labels]
    for label, counts in zip(labels, cm["matrix"]):
        rows.append([label] + [str(c) for c in counts])
    return rows


def tier_rows(h1: dict) -> list[list[str]]:
    rows = [["Organization", "Known tier", "Predicted tier", "Held-out prediction",
             "Tier 1 votes", "Tier 2 votes", "Tier 3 votes", "Note"]]
    for t in h1["tiers"]["organizations"]:
        ev = t.get("evidence") or {}
        rows.append([
            t["org"], fmt(t["known_tier"]), fmt(t["predicted_tier"]), fmt(t["holdout_tier"]),
            *(fmt(ev.get(str(k))) for k in (1, 2, 3)), t.get("note") or "",
        ])
    return rows


def kw_rows(table: dict) -> list[list[str]]:
    """Mean-rank table: one row per group, then the ``Asymp. Sig.`` row."""
    measures = table["measures"]
    rows = [[""] + [MEASURE_NAMES[m] for m in measures]]
    for i, group in enumerate(table["groups"]):
        row = [group]
        for m in measures:
            res = table["results"][m]
            row.append(fmt(res["mean_ranks"][i]) if res["status"] == "tested" else "")
        rows.append(row)
    sig = ["Asymp. Sig."]
    for m in measures:
        res = table["results"][m]
        sig.append(fmt(res["p"]) + res["stars"] if res["status"] == "tested" else "skipped")
    rows.append(sig)
    return rows


def spearman_rows(matrix: dict) -> list[list[str]]:
    """Lower-triangle correlation matrix; untested cells are ``x``."""
    names = matrix["variables"]
    rows = [[""] + [MEASURE_NAMES[v] for v in names]]
    for i, v in enumerate(names):
        row = [MEASURE_NAMES[v]]
        for cell in matrix["cells"][i]:
            status = cell["status"]
            if status == "diagonal":
                row.append("1")
            elif status == "x":
                row.append("x")
            elif status == "tested":
                row.append(fmt(cell["rho"], 3) + cell["stars"])
            else:
                row.append("n/a")
        row += [""] * (len(names) - len(row) + 1)
        rows.append(row)
    return rows


_NOTES_KW = ("Note. Significant difference in rank mean at the 0.01 level are denoted **. "
             "Significant difference in rank mean at the 0.05 level are denoted *.")
_NOTES_SP = ("Note. Correlations significant at the 0.01 level (2-tailed) are denoted **. "
             "Correlations significant at the 0.05 level (2-tailed) are denoted *. "
             "'x' signifies correlations not tested.")


def _kw_section(title: str, table: dict | None) -> str:
    if table is None:
        return f"## {title}\n\nNot computed.\n\n"
    out = f"## {title}\n\n" + markdown_table(kw_rows(table))
    for m, res in table["results"].items():
        if res["status"] == "tested":
            out += (f"\n{MEASURE_NAMES[m]}: H = {fmt(res['h'])}, corrected H = {fmt(res['h_corrected'])}, "
                    f"df = {res['df']}, n = {sum(res['sizes'])}")
        else:
            out += f"\n{MEASURE_NAMES[m]}: skipped ({res['reason']})"
    return out + "\n\n" + _NOTES_KW + "\n\n"


def _spearman_section(title: str, matrix: dict | None) -> str:
    if matrix is None:
        return f"## {title}\n\nNot computed.\n\n"
    out = f"## {title}\n\n" + markdown_table(spearman_rows(matrix))
    out += f"\nRespondents: {matrix['n_respondents']}. Cell sample sizes:\n\n"
    for i, v in enumerate(matrix["variables"]):
        for j, cell in enumerate(matrix["cells"][i]):
            if cell["status"] in ("tested", "skipped"):
                w = matrix["variables"][j]
                detail = (f"rho = {fmt(cell['rho'])}, p = {fmt(cell['p'])}" if cell["status"] == "tested"
                          else f"skipped ({cell['reason']})")
                out += f"- {MEASURE_NAMES[v]} x {MEASURE_NAMES[w]}: n = {cell['n']}, {detail}\n"
    return out + "\n" + _NOTES_SP + "\n\n"


def render_markdown_report(report: dict) -> str:
    prov = report["provenance"]
    ingest, h1, h2, h3 = report["ingest"], report["h1"], report["h2"], report["h3"]
    out = ["# Disaster response network assessment\n\n"]
    out.append("## Provenance\n\n")
    for key in ("mode", "seed", "clusters", "formats", "codebook_sha256"):
        out.append(f"- {key}: {prov[key]}\n")
    for item in prov["inputs"]:
        out.append(f"- input {item['file']}: sha256 {item['sha256']}\n")
    out.append("\n## Response counts\n\n" + markdown_table(count_rows(ingest)) + "\n")

    macro = h1["cliques"]
    out.append(f"## Clique analysis\n\n{len(macro['cliques'])} cliques found.\n\n")
    out += [f"{i}: {', '.join(c)}\n" for i, c in enumerate(macro["cliques"], start=1)]
    out.append("\n## Clique co-membership matrix\n\n" + markdown_table(comembership_rows(macro["comembership"])))
    census = h1["clusters"]
    out.append(f"\n## Tier assignment\n\n2-clique census: {census['size']} clusters "
               f"({census['eligible']} contain respondents of every agency group).\n")
    hold = h1["tiers"]["holdout"]
    out.append(f"Held-out tier accuracy: {hold['correct']}/{hold['total']}"
               f" ({fmt(hold['accuracy'])}).\n\n" if hold["total"] else "No labeled organizations to hold out.\n\n")
    out.append(markdown_table(tier_rows(h1)) + "\n")
    if census["selected"] is None:
        out.append(f"Cluster selection failed: {census['selection_error']}\n\n")
    else:
        out.append("Selected clusters:\n\n")
        for c in census["selected"]:
            counts = ", ".join(f"{g} {n}" for g, n in c["group_counts"].items())
            out.append(f"- Cluster {c['index']}: {len(c['respondents'])} respondents ({counts}), "
                       f"{len(c['organizations'])} organizations\n")
        out.append("\n")

    out.append(_kw_section("Kruskal-Wallis interconnectedness comparison of mean ranks (agency groups)",
                           h2["agency"]))
    out.append(_kw_section("Kruskal-Wallis interconnectedness comparison of mean ranks (clusters)",
                           h2["cluster"]))
    out.append(_kw_section("Kruskal-Wallis comparison of readiness between clusters", h2["readiness"]))
    out.append(_spearman_section("Spearman correlations matrix (combined agency network data)",
                                 h3["combined"]))
    out.append(_spearman_section("Spearman correlations matrix (combined cluster network data)",
                                 h3["clusters"]))
    return "".join(out)
