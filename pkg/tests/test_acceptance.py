"""Acceptance suite: one test per release criterion.

Each test prints a single PASS line (visible with `pytest -s`) and enforces
its own wall-clock budget. Criteria are exact unless stated otherwise.
"""

import hashlib
import json
import random
import shutil
import sys
import time
from pathlib import Path

import pytest

from taskforge.analyzer import analyze_repo
from taskforge.cst import get_grammar
from taskforge.hollowing import emit_patches, mine_scope, plan_hollow, verify_solvability
from taskforge.mutation import MutationEngine, apply_edits
from taskforge.packaging import leakage_filter
from taskforge.patching import CausalFingerprint, apply_patch, diff_snapshot, tree_hash
from taskforge.pipeline import PipelineConfig, run_pipeline
from taskforge.sandbox import ARTIFACT_ENV_VAR, SandboxPool
from taskforge.taxonomy import ALL_MODIFIERS, PARSE_GUARANTEED, ModifierId
from taskforge.verification import (
    OutcomeVector,
    VerifierSpec,
    accept_candidate,
    partition_outcomes,
    readiness_gate,
    run_baseline,
    run_candidate,
)

from conftest import copy_repo, fixture_coverage

PY = sys.executable


class Budget:
    def __init__(self, seconds: float):
        self.seconds = seconds
        self.started = time.monotonic()

    def check(self):
        elapsed = time.monotonic() - self.started
        assert elapsed < self.seconds, f"budget exceeded: {elapsed:.1f}s >= {self.seconds}s"
        return elapsed


def report_line(number: int, name: str, elapsed: float):
    print(f"ACCEPTANCE {number:>2} PASS {name} ({elapsed:.1f}s)")


# -- 1: modifier validity ------------------------------------------------------


def test_01_modifier_validity(registry, fixture_report, fixture_repo):
    budget = Budget(30.0)
    languages = {r.language_id for r in fixture_report.entities}
    assert len(languages) >= 2
    assert len(fixture_report.entities) >= 30

    engine = MutationEngine(registry)
    planned = engine.plan_all(fixture_report, PARSE_GUARANTEED, 11, fixture_repo)
    assert planned
    covered = {c.spec.modifier for c in planned}
    assert covered == set(PARSE_GUARANTEED)

    sources: dict[str, bytes] = {}
    for candidate in planned:
        path = candidate.edit_set.file_path
        if path not in sources:
            sources[path] = (fixture_repo / path).read_bytes()
        mutated = apply_edits(sources[path], candidate.edit_set)  # applies cleanly
        tpl = registry.resolve(path)
        tree = get_grammar(tpl.grammar_ref).parse(mutated)
        assert not tree.has_root_error, \
            f"{candidate.candidate_id} broke the parse: {tree.error_detail}"
    report_line(1, f"modifier validity ({len(planned)} edit sets, "
                   f"{len(languages)} languages)", budget.check())


# -- 2 + 3: partition oracle and acceptance rule --------------------------------


def _oracle_partition(base: dict, cand: dict) -> dict:
    """Brute-force set computation, independent of the implementation."""
    out = {"p2f": set(), "p2p": set(), "f2p": set(), "f2f": set()}
    for test_id in base:
        b = base[test_id]
        if b == "skip":
            continue
        c = cand[test_id] if test_id in cand else "error"
        if c == "skip":
            c = "error"
        if b == "pass":
            out["p2p" if c == "pass" else "p2f"].add(test_id)
        elif b in ("fail", "error"):
            out["f2p" if c == "pass" else "f2f"].add(test_id)
    return out


@pytest.fixture(scope="module")
def vector_pairs():
    rng = random.Random(987654321)
    statuses = ("pass", "fail", "error", "skip")
    pairs = []
    for _ in range(10_000):
        ids = [f"s::t{i}" for i in range(rng.randrange(0, 21))]
        base = {t: rng.choice(statuses) for t in ids}
        cand = {t: rng.choice(statuses) for t in ids if rng.random() > 0.1}
        pairs.append((base, cand))
    return pairs


def test_02_partition_oracle_equivalence(vector_pairs):
    budget = Budget(10.0)
    for base, cand in vector_pairs:
        got = partition_outcomes(OutcomeVector(base), OutcomeVector(cand))
        want = _oracle_partition(base, cand)
        assert got.p2f == want["p2f"] and got.p2p == want["p2p"] \
            and got.f2p == want["f2p"] and got.f2f == want["f2f"]
    report_line(2, "partition oracle equivalence (10,000 pairs)", budget.check())


def test_03_acceptance_rule(vector_pairs):
    budget = Budget(1.0)
    partitions = []
    for base, cand in vector_pairs:
        oracle = _oracle_partition(base, cand)
        from taskforge.verification import TestPartition
        partitions.append((TestPartition(**{k: set(v) for k, v in oracle.items()}),
                           len(oracle["p2f"]) > 0))
    for partition, expected in partitions:
        assert accept_candidate(partition) is expected
    report_line(3, "acceptance rule |p2f| > 0 (10,000 cases)", budget.check())


# -- 4: patch round-trips ---------------------------------------------------------


def test_04_patch_round_trips(registry, fixture_report, fixture_repo, tmp_path):
    budget = Budget(60.0)
    engine = MutationEngine(registry)
    planned = engine.plan_all(fixture_report, ALL_MODIFIERS, 29, fixture_repo)
    assert len(planned) >= 200, f"only {len(planned)} candidates generated"
    planned = planned[:200]

    work = copy_repo(tmp_path / "work")
    pristine = tree_hash(work)
    sources: dict[str, bytes] = {}
    from taskforge.patching import patch_from_contents, revert_patch
    for candidate in planned:
        path = candidate.edit_set.file_path
        if path not in sources:
            sources[path] = (work / path).read_bytes()
        mutated = apply_edits(sources[path], candidate.edit_set)
        patch = patch_from_contents(work, {path: mutated})
        expected_after = tree_hash(work, overrides={path: mutated})
        result = apply_patch(work, patch)               # diff -> apply reproduces
        assert result.tree_hash == expected_after, candidate.candidate_id
        result = revert_patch(work, patch)              # revert restores
        assert result.tree_hash == pristine, candidate.candidate_id
    report_line(4, "patch round-trips (200 candidates)", budget.check())


# -- 5: hollow/golden inverse -------------------------------------------------------


def test_05_hollow_golden_inverse(registry, fixture_report, fixture_repo,
                                  fixture_verifier, tmp_path):
    budget = Budget(60.0)
    scopes = mine_scope(fixture_coverage(fixture_report), fixture_report)
    assert scopes
    pool = SandboxPool(max_size=2)
    try:
        for i, scope in enumerate(scopes):
            plan = plan_hollow(scope, fixture_report, registry, fixture_repo)
            patches = emit_patches(fixture_repo, plan)
            hollow, golden = patches["hollow_patch"], patches["golden_patch"]

            stage = tmp_path / f"scope{i}"
            copy_repo(stage)
            pristine = tree_hash(stage)
            apply_patch(stage, hollow)
            for rel in hollow.files:                     # hollowed files re-parse
                tpl = registry.resolve(rel)
                tree = get_grammar(tpl.grammar_ref).parse((stage / rel).read_bytes())
                assert not tree.has_root_error, rel
            spec = pool.register_substrate(stage, wall_timeout=30.0)
            assert verify_solvability(pool, spec, golden, scope.mapped_tests,
                                      fixture_verifier), f"scope {i} not solvable"
            result = apply_patch(stage, golden)          # byte-identity
            assert result.tree_hash == pristine, f"scope {i} not inverse"
    finally:
        pool.shutdown()
    report_line(5, f"hollow/golden inverse ({len(scopes)} scopes)", budget.check())


# -- 6: end-to-end replay determinism --------------------------------------------


def test_06_end_to_end_determinism(tmp_path):
    budget = Budget(300.0)
    repo = copy_repo(tmp_path / "repo")
    observations = []
    for run in range(3):
        out = tmp_path / f"run{run}"
        config = PipelineConfig(repo_path=repo, out_dir=out, seed=1234, jobs=4,
                                wall_timeout=10.0)
        assert run_pipeline(config, "analyze") == 0
        assert run_pipeline(config, "forge") == 0
        assert run_pipeline(config, "verify") == 0
        assert run_pipeline(config, "package") == 0
        records = [json.loads(line)
                   for line in (out / "tasks.jsonl").read_text().splitlines()]
        observations.append({
            record["metadata"]["candidate_id"]: tuple(record["validation"]["p2f"])
            for record in records})
    assert observations[0] == observations[1] == observations[2]
    assert observations[0], "pipeline accepted no candidates"
    report_line(6, f"end-to-end determinism ({len(observations[0])} records x 3 runs)",
                budget.check())


# -- 7: statelessness under parallelism -------------------------------------------


def test_07_statelessness_under_parallelism(tmp_path):
    budget = Budget(300.0)
    repo = copy_repo(tmp_path / "repo")
    modifiers = (ModifierId.OP_FLIP, ModifierId.CONST_MOD, ModifierId.BLOCK_DROP)
    accepted = {}
    for jobs in (1, 4):
        out = tmp_path / f"jobs{jobs}"
        config = PipelineConfig(repo_path=repo, out_dir=out, seed=5, jobs=jobs,
                                wall_timeout=10.0, modifiers=modifiers)
        run_pipeline(config, "analyze")
        run_pipeline(config, "forge")
        run_pipeline(config, "verify")
        rows = [json.loads(line) for line in
                (out / "candidates-verified.jsonl").read_text().splitlines()]
        accepted[jobs] = {(r["candidate_id"], tuple(r["partition"]["p2f"]))
                          for r in rows if r["accepted"]}
    assert accepted[1] == accepted[4]
    assert accepted[1]

    # concurrent with_candidate: hash-audited isolation
    import threading
    pool = SandboxPool(max_size=4)
    try:
        spec = pool.register_substrate(repo, wall_timeout=30.0)
        variants = {}
        for tag in ("alpha", "beta", "gamma", "delta"):
            edited = tmp_path / f"variant-{tag}"
            copy_repo(edited)
            marker = edited / "textlib" / "marker.py"
            marker.write_text(f'TAG = "{tag}"\n')
            variants[tag] = {
                "patch": diff_snapshot(repo, edited),
                "expected": tree_hash(edited),
            }
        hash_script = (
            "import hashlib, os, pathlib, json\n"
            "root = pathlib.Path('.')\n"
            "h = hashlib.sha256()\n"
            "files = sorted(p for p in root.rglob('*') if p.is_file()\n"
            "               and not any(part.startswith('.') or part == '__pycache__'\n"
            "                           for part in p.parts))\n"
            "for p in files:\n"
            "    h.update(p.as_posix().encode()); h.update(b'\\0')\n"
            "    h.update(hashlib.sha256(p.read_bytes()).digest())\n"
            f"out = pathlib.Path(os.environ['{ARTIFACT_ENV_VAR}'])\n"
            "(out / 'tree.json').write_text(json.dumps({'hash': h.hexdigest()}))\n")
        results = {}

        def audit(tag):
            result = pool.with_candidate(spec, variants[tag]["patch"],
                                         [PY, "-c", hash_script])
            results[tag] = json.loads(result.artifacts["tree.json"])["hash"]

        threads = [threading.Thread(target=audit, args=(tag,)) for tag in variants]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        for tag, variant in variants.items():
            assert results[tag] == variant["expected"], \
                f"sandbox for {tag} saw foreign state"
    finally:
        pool.shutdown()
    report_line(7, "statelessness under parallelism (jobs 1 vs 4, hash audit)",
                budget.check())


# -- 8: readiness classification ---------------------------------------------------


def test_08_readiness_classification(tmp_path, fixture_repo, fixture_verifier):
    budget = Budget(60.0)
    pool = SandboxPool(max_size=2)
    expected = {
        "clean": "ready",
        "failing": "ready",
        "missing_dep": "env_failure",
        "missing_tool": "env_failure",
        "malformed": "harness_failure",
        "timeout": "harness_failure",
    }

    def build(name):
        root = copy_repo(tmp_path / name)
        verifier = fixture_verifier
        runner = root / "run_tests.py"
        if name == "failing":
            (root / "tests_py" / "test_red.py").write_text(
                "def test_red():\n    assert 1 == 2\n")
        elif name == "missing_dep":
            runner.write_text("import missing_package_xyz\n" + runner.read_text())
        elif name == "missing_tool":
            verifier = VerifierSpec(command=["no-such-verifier-tool-xyz"],
                                    artifact_path="standard_result.json",
                                    format="standard_result")
        elif name == "malformed":
            body = runner.read_text().replace(
                'out_path.write_text(json.dumps(document, indent=2) + "\\n", encoding="utf-8")',
                'out_path.write_text("{truncated", encoding="utf-8")')
            runner.write_text(body)
        elif name == "timeout":
            runner.write_text("import time\ntime.sleep(60)\n" + runner.read_text())
        return root, verifier

    got = {}
    try:
        for name in expected:
            root, verifier = build(name)
            spec = pool.register_substrate(root, wall_timeout=3.0)
            got[name] = readiness_gate(pool, spec, verifier).classification
    finally:
        pool.shutdown()
    assert got == expected
    report_line(8, "readiness classification (6-scenario matrix)", budget.check())


# -- 9: leakage filter soundness -----------------------------------------------------


LEAK_FINGERPRINT = CausalFingerprint(
    files={"textlib/metrics.py", "textlib/records.py"},
    identifiers={"clamp", "weighted_score", "RecordStore", "TimedRecord"},
)
LEAK_ALLOWED = [
    "tests_py/test_metrics.py::test_clamp_bounds",
    "tests_py/test_records.py::test_store_roundtrip",
]

VIOLATING_STATEMENTS = [
    "The clamp function returns the wrong bound.",
    "Something broke inside weighted_score recently.",
    "RecordStore drops entries on lookup.",
    "TimedRecord no longer stamps creation ticks.",
    "Look at textlib/metrics.py, the math is off.",
    "textlib/records.py misbehaves under load.",
    "The file metrics.py has a regression.",
    "records.py seems corrupted after the last change.",
    "You should change < to >= in the comparison.",
    "A quick fix: replace the minimum with the maximum.",
    "The bug is in the bounds check.",
    "The fix is to invert the comparison operator.",
    "Please modify the return statement at the bottom.",
    "I believe the comparison should be changed to >=.",
    "The root cause is an inverted conditional.",
    "clamp(5, 0, 10) returns 0 now.",
    "After calling clamp with negatives the result explodes.",
    "Scores from weighted_score are negative sometimes.",
    "Constructing a TimedRecord raises TypeError.",
    "RecordStore.get returns None for present keys.",
    "Both clamp and weighted_score produce nonsense.",
    "Error raised from textlib/records.py line 40.",
    "Stack trace points at textlib/metrics.py::clamp.",
    "The regression lives in metrics.py near the top.",
    "Revert the change to the bounds logic; the bug is in there.",
]

CLEAN_STATEMENTS = [
    "Running the suite shows three tests failing that passed before.",
    "tests_py/test_metrics.py::test_clamp_bounds fails with AssertionError.",
    "tests_py/test_records.py::test_store_roundtrip now errors out.",
    "Expected 0 but received -3 when pinning values to a range.",
    "Lookup of a stored key returns the fallback value instead.",
    "The score calculation returns a negative number for valid input.",
    "Re-running the tests reproduces the failure every time.",
    "The failure appeared after updating to the latest snapshot.",
    "AssertionError: assert -3 == 0 is the observed message.",
    "Retrieving an item right after storing it gives None.",
    "The revision counter does not advance on updates.",
    "Storage reports size 0 even after adding two entries.",
    "A value pinned to the range [0, 10] comes back as -3.",
    "Creating a stamped entry with a logical tick raises TypeError.",
    "The observed behavior differs from the documented contract.",
    "Steps to reproduce: run the bundled suite, observe two failures.",
    "The error message mentions an unexpected None value.",
    "Outputs are shifted by one compared to the previous release.",
    "Sorting the results no longer matches the golden output.",
    "The suite prints '21 tests, 3 failing' after the change.",
    "An exception surfaces when aggregating the collected values.",
    "Values above the upper bound are no longer truncated.",
    "The regression is deterministic across reruns and machines.",
    "Only the storage-related checks fail; parsing checks still pass.",
    "Behavior changed between the two most recent snapshots.",
]


def test_09_leakage_filter_soundness():
    budget = Budget(5.0)
    assert len(VIOLATING_STATEMENTS) == 25 and len(CLEAN_STATEMENTS) == 25
    false_accepts = [s for s in VIOLATING_STATEMENTS
                     if leakage_filter(s, LEAK_FINGERPRINT, LEAK_ALLOWED).accepted]
    false_rejects = [s for s in CLEAN_STATEMENTS
                     if not leakage_filter(s, LEAK_FINGERPRINT, LEAK_ALLOWED).accepted]
    assert not false_accepts, false_accepts
    assert not false_rejects, [
        (s, leakage_filter(s, LEAK_FINGERPRINT, LEAK_ALLOWED).violations)
        for s in false_rejects]
    report_line(9, "leakage filter soundness (25 + 25 statements)", budget.check())


# -- 10: flaky exclusion ---------------------------------------------------------------


def test_10_flaky_exclusion(tmp_path, registry, fixture_verifier):
    budget = Budget(60.0)
    repo = copy_repo(tmp_path / "repo")
    (repo / "tests_py" / "test_flaky.py").write_text(
        "import pathlib\n"
        "\n"
        "def test_wobbly():\n"
        "    state = pathlib.Path('.flaky_state')\n"
        "    first = not state.exists()\n"
        "    state.write_text('seen')\n"
        "    assert first\n")
    flaky_id = "tests_py/test_flaky.py::test_wobbly"

    report = analyze_repo(repo, registry)
    engine = MutationEngine(registry)
    planned = engine.plan_all(report, [ModifierId.OP_FLIP], 2, repo)
    candidate = next(p for p in planned if "clamp" in p.spec.target)
    source = (repo / candidate.edit_set.file_path).read_bytes()
    mutated = apply_edits(source, candidate.edit_set)
    from taskforge.patching import patch_from_contents
    patch = patch_from_contents(repo, {candidate.edit_set.file_path: mutated})

    pool = SandboxPool(max_size=2)
    try:
        spec = pool.register_substrate(repo, wall_timeout=30.0)
        for seed in range(20):
            baseline = run_baseline(pool, spec, fixture_verifier)
            assert flaky_id in baseline.run_meta["flaky_excluded"]
            vector, _ = run_candidate(pool, spec, patch, fixture_verifier)
            partition = partition_outcomes(baseline, vector)
            for group in (partition.p2f, partition.p2p,
                          partition.f2p, partition.f2f):
                assert flaky_id not in group, f"seed {seed}"
    finally:
        pool.shutdown()
    report_line(10, "flaky exclusion (20 seeded runs)", budget.check())
