#!/usr/bin/env python3
"""Walk through entity analysis on the bundled two-language demo repo.

Loads the built-in language templates, analyzes every resolvable file, and
prints the resulting inventory: functions, methods, and classes with their
spans, complexity signals, and test-file flags.
"""

from collections import Counter
from pathlib import Path

from taskforge import TemplateRegistry, analyze_repo

REPO = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "repo"


def main():
    registry = TemplateRegistry.builtin()
    print("Loaded templates:", ", ".join(t.language_id for t in registry))
    print("Analyzing", REPO)
    print()

    report = analyze_repo(REPO, registry)
    print(f"snapshot_id : {report.snapshot_id}")
    print(f"files       : {len(report.file_status)}")
    print(f"entities    : {len(report.entities)}")
    print()

    print("By kind:", dict(Counter(r.kind for r in report.entities)))
    print("By language:", dict(Counter(r.language_id for r in report.entities)))
    print("Test entities:", sum(1 for r in report.entities if r.is_test))
    print()

    print("A few records:")
    for record in report.entities[:8]:
        flags = ",".join(sorted(record.complexity)) or "-"
        print(f"  {record.entity_id}")
        print(f"      kind={record.kind} span={record.byte_span} "
              f"stmts={record.statement_count} signals={flags}")

    print()
    print("File statuses:")
    for path, status in sorted(report.file_status.items()):
        print(f"  {status:<22} {path}")


if __name__ == "__main__":
    main()
