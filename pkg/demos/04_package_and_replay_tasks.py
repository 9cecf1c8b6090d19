#!/usr/bin/env python3
"""Run the full repair-task pipeline end to end, then replay a record.

Equivalent to:

    taskforge analyze --repo <repo> --out <out>
    taskforge forge   --repo <repo> --out <out> --seed 11 --modifiers op_flip,const_mod
    taskforge verify  --repo <repo> --out <out> --jobs 4
    taskforge package --repo <repo> --out <out>
    taskforge replay  --repo <repo> --out <out>
"""

import json
import shutil
import tempfile
from pathlib import Path

from taskforge.pipeline import PipelineConfig, run_pipeline
from taskforge.taxonomy import ModifierId

REPO = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "repo"


def main():
    out = Path(tempfile.mkdtemp(prefix="taskforge-demo-"))
    print("writing artifacts to", out)
    config = PipelineConfig(
        repo_path=REPO, out_dir=out, seed=11, jobs=4, wall_timeout=15.0,
        modifiers=(ModifierId.OP_FLIP, ModifierId.CONST_MOD),
    )
    for stage in ("analyze", "gate", "forge", "verify", "package"):
        print(f"\n== taskforge {stage}")
        run_pipeline(config, stage)

    records = [json.loads(line)
               for line in (out / "tasks.jsonl").read_text().splitlines()]
    print(f"\npackaged {len(records)} task records; first record:")
    record = records[0]
    print("  family     :", record["family"])
    print("  p2f        :", record["validation"]["p2f"])
    print("  statement  :")
    for line in record["problem_statement"]["text"].splitlines()[:8]:
        print("     ", line)

    # replay just a couple of records to keep the demo snappy
    subset = out / "subset.jsonl"
    subset.write_text("".join(json.dumps(r) + "\n" for r in records[:2]))
    config.tasks_path = subset
    print("\n== taskforge replay")
    run_pipeline(config, "replay")

    shutil.rmtree(out, ignore_errors=True)


if __name__ == "__main__":
    main()
