"""Result normalization, outcome differencing, and gates.

Heterogeneous test reports (JUnit XML, line-delimited events, or the
standard result document) are normalized into canonical per-test outcomes.
Baselines are stabilized with a double run that excludes flaky tests, and
candidates are judged purely on the pass-to-fail partition against that
baseline.
"""

from __future__ import annotations

import json
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .errors import DuplicateTestId, MalformedArtifact, NotReady
from .sandbox import ExecutionResult, SandboxPool, SandboxSpec
from .patching import Patch

MESSAGE_LIMIT = 64 * 1024
VALID_STATUSES = ("pass", "fail", "error", "skip")

CLASS_ENV = "env_failure"
CLASS_TEST = "test_failure"
CLASS_UNKNOWN = "unknown"

READY = "ready"
HARNESS_FAILURE = "harness_failure"


@dataclass
class TestOutcome:
    __test__ = False  # not a pytest class

    test_id: str
    status: str
    duration: float = 0.0
    message: str = ""


@dataclass
class OutcomeVector:
    outcomes: dict[str, str]
    run_meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"outcomes": dict(sorted(self.outcomes.items())),
                "run_meta": self.run_meta}

    @classmethod
    def from_dict(cls, d: dict) -> "OutcomeVector":
        return cls(outcomes=dict(d["outcomes"]), run_meta=dict(d.get("run_meta", {})))


@dataclass
class TestPartition:
    __test__ = False  # not a pytest class

    p2f: set[str] = field(default_factory=set)
    p2p: set[str] = field(default_factory=set)
    f2p: set[str] = field(default_factory=set)
    f2f: set[str] = field(default_factory=set)

    def to_dict(self) -> dict:
        return {"p2f": sorted(self.p2f), "p2p": sorted(self.p2p),
                "f2p": sorted(self.f2p), "f2f": sorted(self.f2f)}


@dataclass
class ReadinessReport:
    classification: str  # ready | env_failure | harness_failure
    evidence: str
    artifact_valid: bool


@dataclass
class VerifierSpec:
    """Per-substrate verifier metadata: how to run it, where its report
    lands (relative to the artifact directory), and the report format."""
    command: list[str]
    artifact_path: str
    format: str

    @classmethod
    def load(cls, path: Path) -> "VerifierSpec":
        with open(path, "r", encoding="utf-8") as fh:
            d = json.load(fh)
        return cls(command=list(d["command"]),
                   artifact_path=d["artifact_path"],
                   format=d["format"])

    def to_dict(self) -> dict:
        return {"command": self.command, "artifact_path": self.artifact_path,
                "format": self.format}


# ---------------------------------------------------------------------------
# report parsing
# ---------------------------------------------------------------------------


def parse_test_report(artifact: bytes, format: str) -> list[TestOutcome]:
    """Normalize a raw report into canonical outcomes.

    Unknown status strings map to error; duplicate ids and structural
    damage raise.
    """
    if format == "junit_xml":
        outcomes = _parse_junit(artifact)
    elif format == "jsonl_stream":
        outcomes = _parse_jsonl(artifact)
    elif format == "standard_result":
        outcomes = _parse_standard(artifact)
    else:
        raise MalformedArtifact(f"unsupported report format {format!r}")
    seen = set()
    for outcome in outcomes:
        if not outcome.test_id:
            raise MalformedArtifact("empty test id")
        if outcome.test_id in seen:
            raise DuplicateTestId(outcome.test_id)
        seen.add(outcome.test_id)
        if outcome.status not in VALID_STATUSES:
            outcome.status = "error"
        outcome.message = outcome.message[:MESSAGE_LIMIT]
    return outcomes


def _parse_junit(artifact: bytes) -> list[TestOutcome]:
    try:
        root = ET.fromstring(artifact.decode("utf-8"))
    except (ET.ParseError, UnicodeDecodeError) as exc:
        raise MalformedArtifact(f"junit xml: {exc}") from exc
    if root.tag == "testsuites":
        suites = list(root.iter("testsuite"))
    elif root.tag == "testsuite":
        suites = [root]
    else:
        raise MalformedArtifact(f"unexpected junit root {root.tag!r}")
    outcomes = []
    for suite in suites:
        suite_name = suite.get("name", "suite")
        for case in suite.iter("testcase"):
            prefix = case.get("classname") or suite_name
            name = case.get("name", "")
            status, message = "pass", ""
            for child in case:
                if child.tag == "failure":
                    status = "fail"
                elif child.tag == "error":
                    status = "error"
                elif child.tag == "skipped":
                    status = "skip"
                else:
                    continue
                message = (child.get("message") or "") + (child.text or "")
            outcomes.append(TestOutcome(
                test_id=f"{prefix}::{name}",
                status=status,
                duration=float(case.get("time") or 0.0),
                message=message))
    return outcomes


def _parse_jsonl(artifact: bytes) -> list[TestOutcome]:
    outcomes = []
    for lineno, raw in enumerate(artifact.decode("utf-8", "replace").splitlines(), 1):
        if not raw.strip():
            continue
        try:
            event = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise MalformedArtifact(f"jsonl line {lineno}: {exc}") from exc
        if not isinstance(event, dict) or "id" not in event:
            raise MalformedArtifact(f"jsonl line {lineno}: missing id")
        test_id = str(event["id"])
        if "::" not in test_id and event.get("suite"):
            test_id = f"{event['suite']}::{test_id}"
        outcomes.append(TestOutcome(
            test_id=test_id,
            status=str(event.get("status", "error")),
            duration=float(event.get("duration_s") or 0.0),
            message=str(event.get("message", ""))))
    return outcomes


def _parse_standard(artifact: bytes) -> list[TestOutcome]:
    try:
        document = json.loads(artifact.decode("utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise MalformedArtifact(f"standard result: {exc}") from exc
    if not isinstance(document, dict) or document.get("schema_version") != 1:
        raise MalformedArtifact("standard result: missing schema_version 1")
    tests = document.get("tests")
    if not isinstance(tests, list):
        raise MalformedArtifact("standard result: 'tests' must be a list")
    outcomes = []
    for i, entry in enumerate(tests):
        if not isinstance(entry, dict) or "id" not in entry or "status" not in entry:
            raise MalformedArtifact(f"standard result: bad test entry {i}")
        outcomes.append(TestOutcome(
            test_id=str(entry["id"]),
            status=str(entry["status"]),
            duration=float(entry.get("duration_s") or 0.0),
            message=str(entry.get("message", ""))))
    return outcomes


# ---------------------------------------------------------------------------
# vectors and partitions
# ---------------------------------------------------------------------------


def outcomes_from_result(result: ExecutionResult,
                         verifier: VerifierSpec) -> Optional[list[TestOutcome]]:
    """Parsed outcomes from one run, or None when the artifact is unusable."""
    artifact = result.artifacts.get(verifier.artifact_path)
    if artifact is None:
        return None
    try:
        return parse_test_report(artifact, verifier.format)
    except (MalformedArtifact, DuplicateTestId):
        return None


def vector_from_result(result: ExecutionResult, verifier: VerifierSpec) -> OutcomeVector:
    """Build an outcome vector from one verifier run.

    A missing or unparseable artifact yields an empty vector (every baseline
    test then counts as error when partitioning), with the reason recorded.
    """
    meta = result.to_meta()
    artifact = result.artifacts.get(verifier.artifact_path)
    if artifact is None:
        meta["artifact_error"] = "missing artifact"
        return OutcomeVector(outcomes={}, run_meta=meta)
    try:
        outcomes = parse_test_report(artifact, verifier.format)
    except (MalformedArtifact, DuplicateTestId) as exc:
        meta["artifact_error"] = str(exc)
        return OutcomeVector(outcomes={}, run_meta=meta)
    return OutcomeVector(
        outcomes={o.test_id: o.status for o in outcomes}, run_meta=meta)


def run_baseline(pool: SandboxPool, spec: SandboxSpec,
                 verifier: VerifierSpec) -> OutcomeVector:
    """Baseline with a two-run stability pass.

    Tests whose status differs between the runs are excluded as flaky and
    recorded in run_meta; pre-existing failures stay in the baseline.
    """
    sandbox = pool.lease(spec)
    try:
        first = sandbox.run(verifier.command)
        second = sandbox.run(verifier.command)
    finally:
        pool.release(sandbox)
    v1 = vector_from_result(first, verifier)
    v2 = vector_from_result(second, verifier)
    if "artifact_error" in v1.run_meta or "artifact_error" in v2.run_meta:
        raise NotReady(
            v1.run_meta.get("artifact_error") or v2.run_meta.get("artifact_error"))
    flaky = sorted(
        t for t in set(v1.outcomes) | set(v2.outcomes)
        if v1.outcomes.get(t) != v2.outcomes.get(t))
    outcomes = {t: s for t, s in v1.outcomes.items() if t not in flaky}
    meta = {
        "substrate_ref": spec.substrate_ref,
        "exit_code": second.exit_code,
        "duration_s": round(first.duration + second.duration, 6),
        "flaky_excluded": flaky,
    }
    return OutcomeVector(outcomes=outcomes, run_meta=meta)


def run_candidate(pool: SandboxPool, spec: SandboxSpec, patch: Optional[Patch],
                  verifier: VerifierSpec) -> tuple[OutcomeVector, ExecutionResult]:
    result = pool.with_candidate(spec, patch, verifier.command)
    return vector_from_result(result, verifier), result


def partition_outcomes(base: OutcomeVector, cand: OutcomeVector) -> TestPartition:
    """The P2F/P2P/F2P/F2F partition over baseline test ids.

    Error is fail-like; tests absent from the candidate (or skipped there)
    count as error; tests skipped in the baseline are excluded entirely.
    """
    partition = TestPartition()
    for test_id, base_status in base.outcomes.items():
        if base_status == "skip":
            continue
        cand_status = cand.outcomes.get(test_id, "error")
        if cand_status == "skip":
            cand_status = "error"
        cand_pass = cand_status == "pass"
        if base_status == "pass":
            (partition.p2p if cand_pass else partition.p2f).add(test_id)
        else:
            (partition.f2p if cand_pass else partition.f2f).add(test_id)
    return partition


def accept_candidate(partition: TestPartition) -> bool:
    """A candidate is a valid bug iff it flips at least one passing test."""
    return len(partition.p2f) > 0


# ---------------------------------------------------------------------------
# failure classification and readiness
# ---------------------------------------------------------------------------


@dataclass
class FailureSignature:
    pattern: str
    failure_class: str


DEFAULT_SIGNATURES = [
    FailureSignature("ModuleNotFoundError", CLASS_ENV),
    FailureSignature("No module named", CLASS_ENV),
    FailureSignature("ImportError", CLASS_ENV),
    FailureSignature("command not found", CLASS_ENV),
    FailureSignature("No such file or directory", CLASS_ENV),
    FailureSignature("permission denied", CLASS_ENV),
    FailureSignature("Cannot find module", CLASS_ENV),
    FailureSignature("AssertionError", CLASS_TEST),
    FailureSignature("assertion failed", CLASS_TEST),
    FailureSignature("FAILED", CLASS_TEST),
    FailureSignature("tests, ", CLASS_TEST),
]


def classify_failure(result: ExecutionResult,
                     signatures: Optional[list[FailureSignature]] = None) -> str:
    """First matching signature (over stdout+stderr) wins."""
    return _classify(result, signatures)[0]


def _classify(result: ExecutionResult,
              signatures: Optional[list[FailureSignature]] = None
              ) -> tuple[str, Optional[FailureSignature]]:
    streams = (result.stdout + b"\n" + result.stderr).decode("utf-8", "replace")
    for signature in signatures if signatures is not None else DEFAULT_SIGNATURES:
        if signature.pattern in streams:
            return signature.failure_class, signature
    return CLASS_UNKNOWN, None


def readiness_gate(pool: SandboxPool, spec: SandboxSpec, verifier: VerifierSpec,
                   signatures: Optional[list[FailureSignature]] = None) -> ReadinessReport:
    """Run the verifier in a fresh sandbox and judge the substrate.

    Ready means: the run completed (exit code irrelevant), a parseable
    artifact came out, and nothing looks like an environment failure.
    """
    result = pool.with_candidate(spec, None, verifier.command)
    failure_class, matched = _classify(result, signatures)
    if failure_class == CLASS_ENV:
        evidence = f"signature {matched.pattern!r}: {_evidence(result)}"
        return ReadinessReport(CLASS_ENV, evidence=evidence, artifact_valid=False)
    if result.timed_out:
        return ReadinessReport(
            HARNESS_FAILURE,
            evidence=f"verifier exceeded wall timeout ({spec.wall_timeout}s)",
            artifact_valid=False)
    artifact = result.artifacts.get(verifier.artifact_path)
    if artifact is None:
        return ReadinessReport(HARNESS_FAILURE, evidence="no artifact produced",
                               artifact_valid=False)
    try:
        parse_test_report(artifact, verifier.format)
    except (MalformedArtifact, DuplicateTestId) as exc:
        return ReadinessReport(HARNESS_FAILURE, evidence=str(exc), artifact_valid=False)
    return ReadinessReport(READY, evidence="verifier invocable, artifact parseable",
                           artifact_valid=True)


def _evidence(result: ExecutionResult) -> str:
    text = (result.stderr or result.stdout).decode("utf-8", "replace")
    lines = [line for line in text.splitlines() if line.strip()]
    return lines[-1][:500] if lines else f"exit={result.exit_code}"
