import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

from drn import pipeline  # noqa: E402
from drn.synthetic import GeneratorConfig  # noqa: E402

ACCEPTANCE_SEED = 1996

# Member sets of the 15-clique reference listing for the combined state/local network.
REFERENCE_SETS = [
    ["Department of State", "Local Law Enforcement", "State Emergency Services", "State Law Enforcement"],
    ["Department of Transportation", "Local Law Enforcement", "State Emergency Services", "State Law Enforcement"],
    ["FAA", "Local Law Enforcement", "State Emergency Services", "State Law Enforcement"],
    ["FBI", "Local Law Enforcement", "State Emergency Services", "State Law Enforcement"],
    ["International Agencies", "Local Law Enforcement", "State Emergency Services", "State Law Enforcement"],
    ["Border Patrol", "Local Law Enforcement", "State Emergency Services", "State Law Enforcement"],
    ["Local Law Enforcement", "Other State Agencies", "State Emergency Services", "State Law Enforcement"],
    ["Local Law Enforcement", "Private Businesses", "State Emergency Services", "State Law Enforcement"],
    ["Local Law Enforcement", "Professional Associations", "State Emergency Services", "State Law Enforcement"],
    ["Local Law Enforcement", "State Agencies (in state)", "State Emergency Services", "State Law Enforcement"],
    ["Local Law Enforcement", "State Agencies (out of state)", "State Emergency Services", "State Law Enforcement"],
    ["Local Law Enforcement", "State Emergency Services", "State Law Enforcement"],
    ["Local Law Enforcement", "State Emergency Services", "State Law Enforcement",
     "State or Local Transportation Agencies"],
    ["Local Law Enforcement", "State Emergency Services", "State Law Enforcement", "United States Customs Service"],
    ["Local Law Enforcement", "State Emergency Services", "State Law Enforcement", "United States Secret Service"],
]


def run_pipeline(out: Path, seed: int, config: GeneratorConfig | None = None, *, mode="aggregate",
                 formats=pipeline.FORMATS) -> dict:
    """Generate a synthetic survey and run every stage on it; returns the stage results."""
    out.mkdir(parents=True, exist_ok=True)
    cfg_path = None
    if config is not None:
        cfg_path = out / "generator.cfg"
        cfg_path.write_text(_config_text(config), encoding="utf-8")
    pipeline.cmd_generate(out / "in", seed, cfg_path)
    cfg = pipeline.RunConfig(out=out / "run", inputs=[out / "in" / "survey.csv"],
                             codebook=out / "in" / "codebook.json", mode=mode, seed=seed, formats=formats)
    return {
        "cfg": cfg,
        "ingest": pipeline.cmd_ingest(cfg),
        "h1": pipeline.cmd_h1(cfg),
        "h2": pipeline.cmd_h2(cfg),
        "h3": pipeline.cmd_h3(cfg),
        "report": pipeline.cmd_report(cfg),
    }


def _config_text(c: GeneratorConfig) -> str:
    lines = [f"size.{g} = {n}" for g, n in c.sizes.items()]
    lines += [f"tier{t} = {';'.join(c.pools[t])}" for t in (1, 2, 3)]
    lines += [f"p.tier{t} = {c.selection_p[t]!r}" for t in (1, 2, 3)]
    lines += [f"scale.{g} = {s!r}" for g, s in c.scale.items()]
    lines += [f"homophily = {c.homophily!r}", f"coupling = {c.coupling!r}", f"missing = {c.missing!r}"]
    return "\n".join(lines) + "\n"


ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, title: str, ok: bool, detail: str = "") -> None:
    """Log one acceptance criterion outcome; printed again in the terminal summary."""
    line = f"criterion {number} {'PASS' if ok else 'FAIL'}: {title}" + (f" ({detail})" if detail else "")
    print(line)
    ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
