"""Unified task records: assembly, validation, leakage control, replay.

A record carries everything a consumer needs to reproduce the task: the
pinned base snapshot, the problem patch, a symptom-only problem statement,
the oracle patch, the validation partition (or hidden tests), and execution
metadata. Records are line-delimited JSON with a fixed field order.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .errors import SchemaViolation
from .patching import CausalFingerprint, Patch, apply_patch, revert_patch
from .sandbox import SandboxPool, SandboxSpec
from .verification import (
    OutcomeVector,
    VerifierSpec,
    partition_outcomes,
    run_baseline,
    run_candidate,
)

FAMILIES = ("swe_scale", "bug_agent", "swe_architect")
REPAIR_FAMILIES = ("swe_scale", "bug_agent")

DEFAULT_FIX_SUGGESTION_PATTERNS = (
    r"\bthe bug is in\b",
    r"\bthe fix is\b",
    r"\bchange\b.{0,40}\bto\b",
    r"\breplace\b.{0,40}\bwith\b",
    r"\bmodify the\b",
    r"\bshould be changed\b",
    r"\broot cause is\b",
    r"\brevert\b",
)


@dataclass
class TaskRecord:
    family: str
    repo: dict            # {"path": ..., "base_snapshot": ...}
    problem_patch: Patch
    problem_statement: dict  # {"text": ..., "generated_by": "template"|"external"}
    oracle_patch: Patch
    validation: dict      # {"p2f": [...], "p2p": [...]} | {"hidden_tests": [...]}
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        # field order mirrors the seven-tuple and is part of the format
        return {
            "family": self.family,
            "repo": self.repo,
            "problem_patch": self.problem_patch.to_dict(),
            "problem_statement": self.problem_statement,
            "oracle_patch": self.oracle_patch.to_dict(),
            "validation": self.validation,
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TaskRecord":
        return cls(
            family=d["family"],
            repo=dict(d["repo"]),
            problem_patch=Patch.from_dict(d["problem_patch"]),
            problem_statement=dict(d["problem_statement"]),
            oracle_patch=Patch.from_dict(d["oracle_patch"]),
            validation=dict(d["validation"]),
            metadata=dict(d.get("metadata", {})),
        )


@dataclass
class LeakageVerdict:
    accepted: bool
    violations: list[dict] = field(default_factory=list)


@dataclass
class ReplayReport:
    bug_reproduced: bool
    oracle_restores: bool
    detail: str = ""


# ---------------------------------------------------------------------------
# building and schema validation
# ---------------------------------------------------------------------------


def build_record(family: str, repo_spec: dict, problem_patch: Patch,
                 problem_statement: dict, oracle_patch: Patch,
                 validation: dict, metadata: dict) -> TaskRecord:
    """Assemble a record, enforcing the family-specific schema invariants."""
    record = TaskRecord(family, dict(repo_spec), problem_patch,
                        dict(problem_statement), oracle_patch,
                        dict(validation), dict(metadata))
    issues = schema_issues(record)
    if issues:
        raise SchemaViolation(issues[0]["field"], issues[0]["detail"])
    return record


def schema_issues(record: TaskRecord) -> list[dict]:
    issues = []

    def issue(field_name: str, detail: str):
        issues.append({"field": field_name, "detail": detail})

    if record.family not in FAMILIES:
        issue("family", f"unknown family {record.family!r}")
    if not record.repo.get("path") or not record.repo.get("base_snapshot"):
        issue("repo", "needs path and base_snapshot")
    if record.family in REPAIR_FAMILIES:
        if not record.validation.get("p2f"):
            issue("validation.p2f", "repair records need a nonempty pass-to-fail set")
    elif record.family == "swe_architect":
        if not record.validation.get("hidden_tests"):
            issue("validation.hidden_tests", "construction records need hidden tests")
    if record.problem_patch.base_snapshot != record.repo.get("base_snapshot"):
        issue("problem_patch", "base_snapshot does not match the repo snapshot")
    if "text" not in record.problem_statement:
        issue("problem_statement", "missing text")
    if record.problem_statement.get("generated_by") not in ("template", "external"):
        issue("problem_statement", "generated_by must be template or external")
    if not record.oracle_patch.diff_text:
        issue("oracle_patch", "empty oracle")
    return issues


def validate_record(record: TaskRecord, pool: SandboxPool) -> list[dict]:
    """Deep validation against the execution substrate.

    Checks schema invariants, that the problem patch applies cleanly to the
    pristine snapshot, and that the oracle restores a consistent state.
    Issues are data; an empty list means publishable.
    """
    issues = schema_issues(record)
    if issues:
        return issues

    baseline = record.metadata.get("baseline_outcomes")
    if baseline is not None:
        known = set(baseline)
        for key in ("p2f", "p2p"):
            for test_id in record.validation.get(key, ()):
                if test_id not in known:
                    issues.append({"field": f"validation.{key}",
                                   "detail": f"unknown-test-id: {test_id}"})
    if issues:
        return issues

    spec = SandboxSpec(substrate_ref=record.repo["path"],
                       repo_snapshot=record.repo["base_snapshot"])
    sandbox = pool.lease(spec)
    try:
        try:
            apply_patch(sandbox.root, record.problem_patch)
        except Exception as exc:
            issues.append({"field": "problem_patch",
                           "detail": f"patch-unappliable: {exc}"})
            return issues
        convention = record.metadata.get("oracle_convention", "reverse_of_problem")
        try:
            if convention == "reverse_of_problem":
                result = apply_patch(sandbox.root, record.oracle_patch)
                if result.tree_hash != record.repo["base_snapshot"]:
                    issues.append({"field": "oracle_patch",
                                   "detail": "oracle does not restore the baseline"})
            else:  # golden patch over a hollowed state
                apply_patch(sandbox.root, record.oracle_patch)
        except Exception as exc:
            issues.append({"field": "oracle_patch",
                           "detail": f"oracle-unappliable: {exc}"})
    finally:
        pool.release(sandbox)
    return issues


# ---------------------------------------------------------------------------
# leakage filter
# ---------------------------------------------------------------------------


def leakage_filter(statement: str, fingerprint: CausalFingerprint,
                   allowed: Optional[Iterable[str]] = None,
                   fix_patterns: Iterable[str] = DEFAULT_FIX_SUGGESTION_PATTERNS,
                   ) -> LeakageVerdict:
    """Reject statements that reveal the cause instead of the symptom.

    A statement fails when it names a modified entity or file as a
    word-boundary token (unless the token lies inside an allowed failing
    test id) or matches a fix-suggestion pattern. An empty statement
    describes no symptoms and is rejected outright.
    """
    violations: list[dict] = []
    if not statement or not statement.strip():
        return LeakageVerdict(accepted=False, violations=[
            {"kind": "empty_statement", "excerpt": ""}])

    allowed_spans = []
    for token in allowed or ():
        for m in re.finditer(re.escape(token), statement):
            allowed_spans.append(m.span())

    def is_allowed(span: tuple[int, int]) -> bool:
        return any(a <= span[0] and span[1] <= b for a, b in allowed_spans)

    def excerpt(span: tuple[int, int]) -> str:
        lo = max(0, span[0] - 30)
        return statement[lo:span[1] + 30].replace("\n", " ")

    for name in sorted(fingerprint.identifiers):
        for m in re.finditer(rf"(?<![\w]){re.escape(name)}(?![\w])", statement):
            if not is_allowed(m.span()):
                violations.append({"kind": "identifier", "excerpt": excerpt(m.span())})
    for path in sorted(fingerprint.files):
        tokens = {path, path.rsplit("/", 1)[-1]}
        for token in tokens:
            pattern = rf"(?<![\w/.-]){re.escape(token)}(?![\w/.-])"
            for m in re.finditer(pattern, statement):
                if not is_allowed(m.span()):
                    violations.append({"kind": "file", "excerpt": excerpt(m.span())})
    for pattern in fix_patterns:
        m = re.search(pattern, statement, flags=re.IGNORECASE)
        if m:
            violations.append({"kind": "fix_suggestion", "excerpt": excerpt(m.span())})
    return LeakageVerdict(accepted=not violations, violations=violations)


def render_problem_statement(p2f: list[str], messages: dict[str, str],
                             fingerprint: CausalFingerprint) -> str:
    """Deterministic symptom-only statement from execution evidence.

    Failing test ids are quoted verbatim; message excerpts are scrubbed of
    causal identifiers and file names so the result passes the leakage
    filter by construction.
    """
    lines = [
        "Some functionality that used to work is now broken.",
        "",
        "The following tests, which previously passed, now fail:",
    ]
    for test_id in sorted(p2f):
        lines.append(f"- {test_id}")
        message = messages.get(test_id, "").strip()
        if message:
            excerpt = _scrub(_last_lines(message, 2), fingerprint)
            lines.append(f"  {excerpt}")
    lines += [
        "",
        "Expected: these tests pass as they did before.",
        "Observed: they fail with the errors quoted above.",
        "Re-running the suite reproduces the failures deterministically.",
    ]
    return "\n".join(lines)


def _last_lines(text: str, n: int) -> str:
    lines = [line.strip() for line in text.strip().splitlines() if line.strip()]
    return " | ".join(lines[-n:])[:400]


def _scrub(text: str, fingerprint: CausalFingerprint) -> str:
    for name in sorted(fingerprint.identifiers, key=len, reverse=True):
        text = re.sub(rf"(?<![\w]){re.escape(name)}(?![\w])", "<redacted>", text)
    for path in sorted(fingerprint.files, key=len, reverse=True):
        for token in (path, path.rsplit("/", 1)[-1], path.rsplit("/", 1)[-1].rsplit(".", 1)[0]):
            text = re.sub(rf"(?<![\w/.-]){re.escape(token)}(?![\w/.-])", "<redacted>", text)
    return text


# ---------------------------------------------------------------------------
# replay
# ---------------------------------------------------------------------------


def replay_record(record: TaskRecord, pool: SandboxPool,
                  verifier: Optional[VerifierSpec] = None) -> ReplayReport:
    """Re-derive the record's evidence from scratch.

    bug_reproduced: the problem patch flips exactly the recorded p2f set
    (after excluding currently flaky tests). oracle_restores: with the
    oracle applied on top, every recorded p2f and p2p test passes.
    """
    if verifier is None:
        verifier = VerifierSpec(**record.metadata["verifier"])
    spec = SandboxSpec(substrate_ref=record.repo["path"],
                       repo_snapshot=record.repo["base_snapshot"])
    baseline = run_baseline(pool, spec, verifier)
    flaky = set(baseline.run_meta.get("flaky_excluded", ()))

    cand_vector, _ = run_candidate(pool, spec, record.problem_patch, verifier)
    partition = partition_outcomes(baseline, cand_vector)
    recorded_p2f = set(record.validation.get("p2f", ())) - flaky
    bug_reproduced = partition.p2f == recorded_p2f

    oracle_ok = True
    sandbox = pool.lease(spec)
    try:
        apply_patch(sandbox.root, record.problem_patch)
        apply_patch(sandbox.root, record.oracle_patch)
        result = sandbox.run(verifier.command)
        vector = _vector(result, verifier)
        wanted = (set(record.validation.get("p2f", ()))
                  | set(record.validation.get("p2p", ()))) - flaky
        oracle_ok = all(vector.outcomes.get(t) == "pass" for t in wanted)
    except Exception as exc:
        return ReplayReport(bug_reproduced, False, detail=str(exc))
    finally:
        pool.release(sandbox)
    detail = "" if bug_reproduced else (
        f"derived p2f {sorted(partition.p2f)} != recorded {sorted(recorded_p2f)}")
    return ReplayReport(bug_reproduced, oracle_ok, detail=detail)


def _vector(result, verifier) -> OutcomeVector:
    from .verification import vector_from_result
    return vector_from_result(result, verifier)


# ---------------------------------------------------------------------------
# archive
# ---------------------------------------------------------------------------


def records_to_jsonl(records: Iterable[TaskRecord]) -> str:
    return "".join(json.dumps(r.to_dict(), ensure_ascii=False) + "\n" for r in records)


def records_from_jsonl(text: str) -> list[TaskRecord]:
    return [TaskRecord.from_dict(json.loads(line))
            for line in text.splitlines() if line.strip()]


def log_digest(result_meta: dict, stdout: bytes, stderr: bytes) -> dict:
    return {
        **result_meta,
        "stdout_sha256": hashlib.sha256(stdout).hexdigest(),
        "stderr_sha256": hashlib.sha256(stderr).hexdigest(),
    }
