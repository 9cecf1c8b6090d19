#!/usr/bin/env python3
"""Plan taxonomy-driven bug candidates and look at the edits they make.

Every candidate is a (modifier, target entity) pair realized as byte-offset
edits; the planner guarantees everything except statement shuffles still
parses after the edit.
"""

from collections import Counter
from pathlib import Path

from taskforge import ALL_MODIFIERS, MutationEngine, TemplateRegistry, analyze_repo
from taskforge.mutation import apply_edits

REPO = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "repo"


def main():
    registry = TemplateRegistry.builtin()
    report = analyze_repo(REPO, registry)
    engine = MutationEngine(registry)

    planned = engine.plan_all(report, ALL_MODIFIERS, seed=7, root=REPO)
    print(f"planned {len(planned)} candidates from "
          f"{sum(1 for r in report.entities if not r.is_test)} non-test entities")
    print(dict(Counter(p.spec.modifier.value for p in planned)))
    print()

    # show one candidate per family of interest
    for modifier in ("op_flip", "const_mod", "branch_swap", "wrapper_unwrap",
                     "base_drop", "method_drop"):
        candidate = next(p for p in planned if p.spec.modifier.value == modifier)
        path = candidate.edit_set.file_path
        source = (REPO / path).read_bytes()
        mutated = apply_edits(source, candidate.edit_set)
        print(f"== {candidate.candidate_id} on {candidate.spec.target}")
        before_lines = source.decode().splitlines()
        after_lines = mutated.decode().splitlines()
        for i, (a, b) in enumerate(zip(before_lines, after_lines)):
            if a != b:
                print(f"   {path}:{i + 1}")
                print(f"   - {a}")
                print(f"   + {b}")
                break
        else:
            # line counts differ (deletions/insertions): show the sizes
            print(f"   {path}: {len(before_lines)} -> {len(after_lines)} lines")
        print()


if __name__ == "__main__":
    main()
