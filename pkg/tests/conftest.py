import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from bundle_helpers import build_bundle


@pytest.fixture
def bundle(tmp_path):
    return build_bundle(tmp_path)


def pytest_terminal_summary(terminalreporter):
    """One pass/fail line per acceptance criterion at the end of a run."""
    reports = []
    for outcome in ("passed", "failed", "error"):
        reports.extend(terminalreporter.stats.get(outcome, []))
    acceptance = {}
    for report in reports:
        if getattr(report, "when", "call") != "call":
            continue
        path, _, name = report.location
        if not path.endswith("test_acceptance.py"):
            continue
        base = name.split("[")[0]
        acceptance[base] = report.outcome.upper()
    if not acceptance:
        return
    try:
        from test_acceptance import CRITERIA
    except ImportError:
        CRITERIA = {}
    terminalreporter.write_sep("-", "acceptance criteria")
    for name, outcome in acceptance.items():
        label = CRITERIA.get(name, name)
        terminalreporter.write_line(f"{outcome:>6}  {label}")
