#!/usr/bin/env python3
"""Mine cohesive scopes from coverage and build construction tasks.

A scope is a connected component of the test-to-entity coverage graph;
hollowing empties the target bodies while keeping signatures and all
surrounding code, and the golden patch is the certified inverse.
"""

import shutil
import tempfile
from pathlib import Path

from taskforge import CoverageMap, SandboxPool, TemplateRegistry, analyze_repo, mine_scope
from taskforge.hollowing import emit_patches, plan_hollow, verify_solvability
from taskforge.patching import apply_patch, tree_hash
from taskforge.verification import VerifierSpec

REPO = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "repo"

COVERED_MODULES = {
    "tests_py/test_casing.py": "textlib/casing.py",
    "tests_py/test_metrics.py": "textlib/metrics.py",
    "tests_py/test_records.py": "textlib/records.py",
    "tests_py/test_windows.py": "textlib/windows.py",
}


def main():
    registry = TemplateRegistry.builtin()
    report = analyze_repo(REPO, registry)
    verifier = VerifierSpec.load(REPO / "verifier.json")

    # coverage would normally come from instrumentation; here we map each
    # fixture test module onto the entities of the module it exercises
    coverage = CoverageMap()
    for record in report.entities:
        module = COVERED_MODULES.get(record.file_path)
        if record.is_test and module:
            coverage.edges[f"{record.file_path}::{record.name}"] = {
                e.entity_id for e in report.entities if e.file_path == module}

    scopes = mine_scope(coverage, report)
    print(f"mined {len(scopes)} scopes")
    for scope in scopes:
        print(f"  {len(scope.target_entities):>2} entities, "
              f"{len(scope.mapped_tests)} tests, "
              f"cohesion={scope.cohesion:.2f} isolation={scope.isolation:.2f}")
    print()

    scope = scopes[0]
    plan = plan_hollow(scope, report, registry, REPO)
    print(f"hollowing {len(plan.entries)} bodies for the largest scope")
    patches = emit_patches(REPO, plan)
    hollow, golden = patches["hollow_patch"], patches["golden_patch"]
    print("hollow patch touches:", hollow.files)

    work = Path(tempfile.mkdtemp(prefix="taskforge-hollow-demo-"))
    stage = work / "hollowed"
    shutil.copytree(REPO, stage, ignore=shutil.ignore_patterns(".*", "__pycache__"))
    pristine = tree_hash(stage)
    apply_patch(stage, hollow)
    print("hollowed tree written; a stubbed body now reads:")
    text = (stage / hollow.files[0]).read_text().splitlines()
    for line in text[:12]:
        print("   ", line)

    pool = SandboxPool(max_size=2)
    try:
        spec = pool.register_substrate(stage, wall_timeout=30.0)
        solvable = verify_solvability(pool, spec, golden, scope.mapped_tests, verifier)
        print("\ngolden patch certifies solvability:", solvable)
    finally:
        pool.shutdown()

    restored = apply_patch(stage, golden)
    print("golden restores pristine bytes:", restored.tree_hash == pristine)
    shutil.rmtree(work, ignore_errors=True)


if __name__ == "__main__":
    main()
