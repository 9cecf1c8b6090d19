#!/usr/bin/env python3
"""Execute a candidate bug against the test suite in an isolated sandbox.

Shows the whole verification contract: readiness gate, double-run baseline
with flaky exclusion, candidate execution, and the pass-to-fail partition
that decides acceptance.
"""

from pathlib import Path

from taskforge import (
    MutationEngine,
    SandboxPool,
    TemplateRegistry,
    VerifierSpec,
    accept_candidate,
    analyze_repo,
    partition_outcomes,
    readiness_gate,
    run_baseline,
)
from taskforge.mutation import apply_edits
from taskforge.patching import patch_from_contents
from taskforge.taxonomy import ModifierId
from taskforge.verification import run_candidate

REPO = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "repo"


def main():
    registry = TemplateRegistry.builtin()
    report = analyze_repo(REPO, registry)
    verifier = VerifierSpec.load(REPO / "verifier.json")

    pool = SandboxPool(max_size=2)
    try:
        spec = pool.register_substrate(REPO, wall_timeout=30.0)
        print("substrate:", spec.substrate_ref)
        print("snapshot :", spec.repo_snapshot[:16])

        readiness = readiness_gate(pool, spec, verifier)
        print("readiness:", readiness.classification, "-", readiness.evidence)

        baseline = run_baseline(pool, spec, verifier)
        print(f"baseline : {len(baseline.outcomes)} tests, "
              f"flaky excluded: {baseline.run_meta['flaky_excluded']}")
        print()

        engine = MutationEngine(registry)
        planned = engine.plan_all(report, [ModifierId.OP_FLIP], seed=3, root=REPO)
        candidate = next(p for p in planned if "clamp" in p.spec.target)
        print("candidate:", candidate.candidate_id, "->", candidate.spec.target)

        source = (REPO / candidate.edit_set.file_path).read_bytes()
        mutated = apply_edits(source, candidate.edit_set)
        patch = patch_from_contents(REPO, {candidate.edit_set.file_path: mutated})
        print("patch:")
        for line in patch.diff_text.decode().splitlines():
            print("   ", line)
        print()

        vector, result = run_candidate(pool, spec, patch, verifier)
        partition = partition_outcomes(baseline, vector)
        print("p2f:", sorted(partition.p2f))
        print("p2p:", len(partition.p2p), "tests still passing")
        print("accepted as a valid bug:", accept_candidate(partition))
        print("verifier exit code:", result.exit_code,
              f"({result.duration:.2f}s)")
    finally:
        pool.shutdown()


if __name__ == "__main__":
    main()
