import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
BENCH = ROOT / "benchmarks" / "images"
sys.path.insert(0, str(Path(__file__).parent))

# Acceptance criteria report: test_acceptance.py tests are named
# test_criterion_<n>_<slug>; each may stash a detail string in DETAILS[n].
DETAILS: dict[int, str] = {}
_OUTCOMES: dict[int, tuple[str, str]] = {}


def _criterion(nodeid: str):
    name = nodeid.rsplit("::", 1)[-1]
    if "test_acceptance.py" not in nodeid or not name.startswith("test_criterion_"):
        return None
    num, slug = name[len("test_criterion_"):].split("_", 1)
    return int(num), slug


def pytest_runtest_logreport(report):
    c = _criterion(report.nodeid)
    if c is None:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        _OUTCOMES[c[0]] = (c[1], "PASS" if report.passed else
                           "SKIP" if report.skipped else "FAIL")


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_OUTCOMES):
        slug, outcome = _OUTCOMES[num]
        line = f"criterion {num} [{slug}]: {outcome}"
        if num in DETAILS:
            line += f"  ({DETAILS[num]})"
        terminalreporter.write_line(line)
