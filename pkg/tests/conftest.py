from __future__ import annotations

import json
import shutil
from pathlib import Path

import pytest

from taskforge.analyzer import analyze_repo
from taskforge.hollowing import CoverageMap
from taskforge.sandbox import SandboxPool
from taskforge.templates import TemplateRegistry
from taskforge.verification import VerifierSpec

FIXTURE_REPO = Path(__file__).parent / "fixtures" / "repo"

# test module -> implementation module, used to synthesize coverage maps
FIXTURE_COVERAGE_MODULES = {
    "tests_py/test_casing.py": "textlib/casing.py",
    "tests_py/test_metrics.py": "textlib/metrics.py",
    "tests_py/test_records.py": "textlib/records.py",
    "tests_py/test_parsing.py": "textlib/parsing.py",
    "tests_py/test_windows.py": "textlib/windows.py",
}


@pytest.fixture(scope="session")
def registry() -> TemplateRegistry:
    return TemplateRegistry.builtin()


@pytest.fixture(scope="session")
def fixture_repo() -> Path:
    return FIXTURE_REPO


@pytest.fixture(scope="session")
def fixture_report(registry):
    return analyze_repo(FIXTURE_REPO, registry)


@pytest.fixture(scope="session")
def fixture_verifier() -> VerifierSpec:
    return VerifierSpec.load(FIXTURE_REPO / "verifier.json")


@pytest.fixture()
def pool():
    p = SandboxPool(max_size=4)
    yield p
    p.shutdown()


def copy_repo(dest: Path, source: Path = FIXTURE_REPO) -> Path:
    """Clean working copy of the fixture repo (no caches, no dot state)."""
    shutil.copytree(source, dest,
                    ignore=shutil.ignore_patterns(".*", "__pycache__"))
    return dest


@pytest.fixture()
def repo_copy(tmp_path) -> Path:
    return copy_repo(tmp_path / "repo")


def fixture_coverage(report) -> CoverageMap:
    """Coverage map pairing each fixture test with its module's entities."""
    coverage = CoverageMap()
    for record in report.entities:
        module = FIXTURE_COVERAGE_MODULES.get(record.file_path)
        if record.is_test and module:
            test_id = f"{record.file_path}::{record.name}"
            coverage.edges[test_id] = {
                e.entity_id for e in report.entities if e.file_path == module}
    return coverage


def write_coverage_file(path: Path, report) -> Path:
    coverage = fixture_coverage(report)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for test in sorted(coverage.edges):
            fh.write(json.dumps({"test": test,
                                 "covers": sorted(coverage.edges[test])}) + "\n")
    return path
