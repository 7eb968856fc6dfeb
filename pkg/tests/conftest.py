from __future__ import annotations

import shutil
from pathlib import Path

import pytest

FIXTURE_REPOS = Path(__file__).parent / "fixtures" / "repos"
GOLDEN_DIR = Path(__file__).parent / "fixtures" / "golden"

ALL_FIXTURES = sorted(p.name for p in FIXTURE_REPOS.iterdir() if p.is_dir())


@pytest.fixture
def fixture_repo(tmp_path):
    """Copy a named fixture repository into tmp_path and return its path."""

    def _copy(name: str) -> Path:
        destination = tmp_path / name
        shutil.copytree(FIXTURE_REPOS / name, destination)
        return destination

    return _copy


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    reports = []
    for status in ("passed", "failed", "skipped"):
        reports.extend(
            r
            for r in terminalreporter.stats.get(status, [])
            if r.when == "call" and "test_acceptance" in r.nodeid
        )
    if not reports:
        return
    terminalreporter.section("acceptance criteria")
    for report in sorted(reports, key=lambda r: r.nodeid):
        if report.passed:
            outcome = "PASS"
        elif report.skipped:
            outcome = "SKIP"
        else:
            outcome = "FAIL"
        terminalreporter.write_line(f"{outcome}  {report.nodeid.split('::', 1)[-1]}")
