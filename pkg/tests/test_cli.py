import json
import os
import subprocess
import sys
from dataclasses import replace
from pathlib import Path

import pytest

from conftest import ACCEPTANCE_SEED, REFERENCE_SETS, run_pipeline
from drn.cli import main
from drn.measures import CONNECTEDNESS, read_profiles_csv
from drn.stats import kruskal_wallis, spearman
from drn.synthetic import GeneratorConfig
from drn.survey import GROUP_LABELS, GROUPS, SurveyRecord, default_codebook, write_survey_csv

STAGES = ("ingest", "h1", "h2", "h3", "report")


def run_all(survey, out, *extra):
    codes = []
    for stage in STAGES:
        codes.append(main([stage, "--input", str(survey), "--out", str(out), *extra]))
    return codes


@pytest.fixture()
def survey(tmp_path):
    assert main(["generate", "--out", str(tmp_path / "gen"), "--seed", "11"]) == 0
    return tmp_path / "gen" / "survey.csv"


def args(survey):
    return ["--codebook", str(survey.parent / "codebook.json"), "--seed", "11"]


def test_ingest_prints_counts(survey, tmp_path, capsys):
    assert main(["ingest", "--input", str(survey), "--out", str(tmp_path / "o"), *args(survey)]) == 0
    out = capsys.readouterr().out
    assert "State Law Enforcement (SLE): 39" in out
    assert "State Emergency Services (SES): 37" in out
    assert "Local Law Enforcement (LLE): 148" in out
    assert "Total: 224" in out
    assert (tmp_path / "o" / "response_counts.md").exists()


def test_empty_input_exit_2(tmp_path, capsys):
    empty = tmp_path / "empty.csv"
    empty.write_text("", encoding="utf-8")
    assert main(["ingest", "--input", str(empty), "--out", str(tmp_path / "o")]) == 2
    header_only = tmp_path / "header.csv"
    header_only.write_text(",".join(default_codebook().columns()) + "\n", encoding="utf-8")
    assert main(["ingest", "--input", str(header_only), "--out", str(tmp_path / "o")]) == 2
    assert "no survey records" in capsys.readouterr().err


def test_missing_input_and_no_input(tmp_path):
    assert main(["ingest", "--input", str(tmp_path / "nope.csv"), "--out", str(tmp_path / "o")]) == 2
    assert main(["ingest", "--out", str(tmp_path / "o")]) == 2


def test_bad_cell_reports_row_and_column(survey, tmp_path, capsys):
    lines = survey.read_text().splitlines()
    header = lines[0].split(",")
    row = lines[3].split(",")
    row[header.index("PREPARED")] = "9"
    lines[3] = ",".join(row)
    bad = tmp_path / "bad.csv"
    bad.write_text("\n".join(lines) + "\n")
    assert main(["ingest", "--input", str(bad), "--out", str(tmp_path / "o"), *args(survey)]) == 2
    err = capsys.readouterr().err
    assert "row 3" in err and "PREPARED" in err and "bad.csv" in err


def test_duplicate_ids_across_inputs(survey, tmp_path):
    assert main(["ingest", "--input", str(survey), "--input", str(survey),
                 "--out", str(tmp_path / "o"), *args(survey)]) == 2


def test_full_run_and_rerun_identical(survey, tmp_path):
    out = tmp_path / "o"
    assert run_all(survey, out, *args(survey)) == [0] * 5
    first = {p.name: p.read_bytes() for p in out.iterdir()}
    assert run_all(survey, out, *args(survey)) == [0] * 5
    assert {p.name: p.read_bytes() for p in out.iterdir()} == first
    for name in ("response_counts.csv", "kw_agency.csv", "kw_clusters.csv", "spearman_combined.csv", "spearman_clusters.csv", "kw_readiness.csv",
                 "h1_comembership.csv", "h1_cliques.txt", "report.md", "report.json"):
        assert name in first


def test_report_has_every_table_shape(survey, tmp_path):
    out = tmp_path / "o"
    run_all(survey, out, *args(survey))
    md = (out / "report.md").read_text()
    for title in ("Response counts", "Clique analysis", "Clique co-membership matrix",
                  "mean ranks (agency groups)", "mean ranks (clusters)", "readiness between clusters",
                  "combined agency network data", "combined cluster network data"):
        assert title in md
    report = json.loads((out / "report.json").read_text())
    assert set(report) == {"provenance", "ingest", "h1", "h2", "h3"}
    assert report["provenance"]["inputs"][0]["file"] == "survey.csv"
    assert str(tmp_path) not in (out / "report.json").read_text()


def test_kw_agency_layout(survey, tmp_path):
    out = tmp_path / "o"
    run_all(survey, out, *args(survey))
    rows = (out / "kw_agency.csv").read_text().splitlines()
    assert rows[0] == ",Degree,EgoBetweenness,Tie Strength"
    assert [r.split(",")[0] for r in rows[1:]] == [GROUP_LABELS[g] for g in GROUPS] + ["Asymp. Sig."]


def test_spearman_masks(survey, tmp_path):
    out = tmp_path / "o"
    run_all(survey, out, *args(survey))
    h3 = json.loads((out / "h3.json").read_text())
    cells = h3["combined"]["cells"]
    names = h3["combined"]["variables"]
    assert cells[names.index("ego_betweenness")][names.index("degree")]["status"] == "x"
    assert cells[names.index("accessibility")][names.index("readiness")]["status"] == "x"
    assert sum(c["status"] == "tested" for row in cells for c in row) == 9
    assert all("n" in c for row in cells for c in row)
    row = (out / "spearman_combined.csv").read_text().splitlines()[2].split(",")
    assert row[:3] == ["EgoBetweenness", "x", "1"]


def test_format_json_only(survey, tmp_path):
    out = tmp_path / "o"
    assert run_all(survey, out, *args(survey), "--format", "json") == [0] * 5
    names = {p.name for p in out.iterdir()}
    assert "report.json" in names and "report.md" not in names
    assert not any(n.endswith(".md") for n in names)
    assert not any(n.startswith("table") for n in names)
    assert {"ingest.json", "h1.json", "h2.json", "h3.json"} <= names


def test_bad_format_rejected(tmp_path):
    with pytest.raises(SystemExit) as err:
        main(["ingest", "--format", "pdf", "--out", str(tmp_path)])
    assert err.value.code == 2


def test_stage_order_enforced(survey, tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["h1", "--out", str(out)]) == 2
    assert "ingest.json" in capsys.readouterr().err
    assert main(["ingest", "--input", str(survey), "--out", str(out), *args(survey)]) == 0
    assert main(["h2", "--out", str(out)]) == 2
    assert "h1.json" in capsys.readouterr().err
    assert main(["report", "--out", str(out)]) == 2
    err = capsys.readouterr().err
    assert "h1.json" in err and "h2.json" in err and "h3.json" in err


def test_star_mode_changes_only_betweenness(survey, tmp_path):
    main(["ingest", "--input", str(survey), "--out", str(tmp_path / "a"), *args(survey)])
    main(["ingest", "--input", str(survey), "--out", str(tmp_path / "s"), "--mode", "star", *args(survey)])
    agg = read_profiles_csv(tmp_path / "a" / "profiles.csv")
    star = read_profiles_csv(tmp_path / "s" / "profiles.csv")
    for a, s in zip(agg, star):
        assert a.degree == s.degree and a.readiness == s.readiness
        assert s.ego_betweenness == s.degree * (s.degree - 1) / 2


def test_report_p_values_match_stats_on_profiles(survey, tmp_path):
    out = tmp_path / "o"
    run_all(survey, out, *args(survey))
    profiles = read_profiles_csv(out / "profiles.csv")
    report = json.loads((out / "report.json").read_text())
    agency = report["h2"]["agency"]["results"]
    for m in CONNECTEDNESS:
        kw = kruskal_wallis([[getattr(p, m) for p in profiles if p.agency_group == g] for g in GROUPS])
        assert agency[m]["p"] == kw.p and agency[m]["h_corrected"] == kw.h_corrected
    combined = report["h3"]["combined"]
    names = combined["variables"]
    for i, row in enumerate(combined["cells"]):
        for j, cell in enumerate(row):
            if cell["status"] == "tested":
                res = spearman([getattr(p, names[i]) for p in profiles], [getattr(p, names[j]) for p in profiles])
                assert (cell["rho"], cell["p"], cell["n"]) == (res.rho, res.p, res.n)
    # cluster-level numbers from the first-cluster-wins sample
    by_id = {p.resp_id: p for p in profiles}
    taken, samples = set(), []
    for c in report["h1"]["clusters"]["selected"]:
        ids = [r for r in c["respondents"] if r not in taken]
        taken.update(ids)
        samples.append([by_id[r] for r in ids])
    kw = kruskal_wallis([[p.readiness for p in s] for s in samples])
    assert report["h2"]["readiness"]["results"]["readiness"]["p"] == kw.p
    merged = [p for s in samples for p in s]
    res = spearman([p.readiness for p in merged], [p.degree for p in merged])
    cell = report["h3"]["clusters"]["cells"][names.index("readiness")][names.index("degree")]
    assert cell["rho"] == res.rho and cell["p"] == res.p


def _records_file(tmp_path, records, codebook=None, name="s.csv"):
    path = tmp_path / name
    write_survey_csv(records, codebook or default_codebook(), path)
    return path


def test_reference_fixture_through_h1(tmp_path):
    labels = {m for s in REFERENCE_SETS for m in s} - set(GROUP_LABELS.values())
    records = [SurveyRecord(g, g, (labels | set(GROUP_LABELS.values())) - {GROUP_LABELS[g]}) for g in GROUPS]
    # the bundled layout has no "State Emergency Services" checkbox; add one for the fixture
    base = default_codebook()
    codebook = replace(base, relational_vars={**base.relational_vars, "STEMERG": ("State Emergency Services", 2)})
    assert all(codebook.column_for(lab) for lab in labels)
    codebook.save(tmp_path / "cb.json")
    path = _records_file(tmp_path, records, codebook)
    out = tmp_path / "o"
    assert main(["ingest", "--input", str(path), "--codebook", str(tmp_path / "cb.json"), "--out", str(out)]) == 0
    assert main(["h1", "--out", str(out)]) == 0
    h1 = json.loads((out / "h1.json").read_text())
    cliques = [set(c) for c in h1["cliques"]["cliques"]]
    for s in REFERENCE_SETS:
        assert any(set(s) <= c for c in cliques)
    # the listed group triangle is not maximal, so the graph has 14 maximal cliques
    assert len(cliques) == 14
    cm = h1["cliques"]["comembership"]
    i, j = cm["labels"].index("Local Law Enforcement"), cm["labels"].index("State Emergency Services")
    assert cm["matrix"][i][j] == 14
    lines = (out / "h1_cliques.txt").read_text().splitlines()
    assert lines[0] == "Border Patrol,Local Law Enforcement,State Emergency Services,State Law Enforcement"
    header = (out / "h1_comembership.csv").read_text().splitlines()[0]
    assert header.startswith(",Border Patrol,")


def test_single_respondent_network(tmp_path, capsys):
    path = _records_file(tmp_path, [SurveyRecord("R1", "LLE", {"FBI", "DEA"}, {}, {}, 2)])
    out = tmp_path / "o"
    assert main(["ingest", "--input", str(path), "--out", str(out)]) == 0
    assert main(["h1", "--out", str(out)]) == 0
    h1 = json.loads((out / "h1.json").read_text())
    assert all(len(c) <= 2 for c in h1["cliques"]["cliques"])
    assert all(o["note"] for o in h1["tiers"]["organizations"] if o["predicted_tier"] is None
               and o["holdout_tier"] is None)
    assert h1["clusters"]["selected"] is None
    assert "eligible" in h1["clusters"]["selection_error"]


def test_nothing_testable_exit_3(tmp_path):
    records = [SurveyRecord(f"R{g}", g, frozenset(), {}, {}, 2) for g in GROUPS]
    path = _records_file(tmp_path, records)
    out = tmp_path / "o"
    assert main(["ingest", "--input", str(path), "--out", str(out)]) == 0
    assert main(["h1", "--out", str(out)]) == 0
    assert main(["h2", "--out", str(out)]) == 3
    assert main(["h3", "--out", str(out)]) == 3
    h2 = json.loads((out / "h2.json").read_text())
    assert all(r["status"] == "skipped" for r in h2["agency"]["results"].values())


def test_clique_limit_exit_3(survey, tmp_path):
    out = tmp_path / "o"
    main(["ingest", "--input", str(survey), "--out", str(out), *args(survey)])
    assert main(["h1", "--out", str(out), "--clique-limit", "50"]) == 3


def test_cluster_selection_failure_is_not_fatal(survey, tmp_path):
    out = tmp_path / "o"
    main(["ingest", "--input", str(survey), "--out", str(out), *args(survey)])
    assert main(["h1", "--out", str(out), "--clusters", "100000"]) == 0
    assert main(["h2", "--out", str(out)]) == 0
    h2 = json.loads((out / "h2.json").read_text())
    assert h2["cluster"] is None and h2["readiness"] is None


def test_generate_with_config(tmp_path):
    cfg = tmp_path / "g.cfg"
    cfg.write_text("size.SLE = 3\nsize.SES = 3\nsize.LLE = 3\n", encoding="utf-8")
    assert main(["generate", "--out", str(tmp_path / "g"), "--config", str(cfg), "--seed", "2"]) == 0
    assert len((tmp_path / "g" / "survey.csv").read_text().splitlines()) == 10
    cfg.write_text("homophily = 3\n", encoding="utf-8")
    assert main(["generate", "--out", str(tmp_path / "g"), "--config", str(cfg)]) == 2


def _subprocess_run(out: Path, hashseed: str):
    env = {**os.environ, "PYTHONHASHSEED": hashseed}
    seed = str(ACCEPTANCE_SEED)
    cmds = [["generate", "--out", str(out), "--seed", seed]]
    cmds += [[stage, "--input", str(out / "survey.csv"), "--codebook", str(out / "codebook.json"),
              "--out", str(out / "run"), "--seed", seed] for stage in STAGES]
    for cmd in cmds:
        subprocess.run([sys.executable, "-m", "drn.cli", *cmd], check=True, env=env, capture_output=True)
    return {p.name: p.read_bytes() for p in sorted((out / "run").iterdir())}


def test_outputs_identical_across_processes_and_hash_seeds(tmp_path):
    a = _subprocess_run(tmp_path / "a", "1")
    b = _subprocess_run(tmp_path / "b", "4242")
    assert a == b


def test_h2_planted_null_and_shift(tmp_path):
    null = run_pipeline(tmp_path / "null", ACCEPTANCE_SEED)
    assert all(r["p"] > 0.05 for r in null["h2"]["agency"]["results"].values())
    shifted = run_pipeline(tmp_path / "shift", ACCEPTANCE_SEED,
                           GeneratorConfig(scale={"SLE": 2.5, "SES": 1.0, "LLE": 1.0}))
    degree = shifted["h2"]["agency"]["results"]["degree"]
    assert degree["stars"] == "**"
    assert degree["mean_ranks"][0] == max(degree["mean_ranks"])
    assert "**" in (tmp_path / "shift" / "run" / "kw_agency.csv").read_text().splitlines()[-1]


def test_h3_planted_null_has_no_double_stars(tmp_path):
    null = run_pipeline(tmp_path, ACCEPTANCE_SEED, GeneratorConfig(coupling=0.0))
    for matrix in (null["h3"]["combined"], null["h3"]["clusters"]):
        assert not any(c.get("stars") == "**" for row in matrix["cells"] for c in row)
