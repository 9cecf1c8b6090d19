"""Stage driver: analyze, gate, forge, verify, package, hollow, replay.

Stages communicate only through files in the output directory, so every
stage is independently rerunnable. Artifacts are written atomically
(temp file + rename) and per-candidate logs are retained with full
stdout/stderr for offline diagnosis.
"""

from __future__ import annotations

import json
import os
import shutil
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .analyzer import (
    AnalysisReport,
    analyze_repo,
    report_from_files,
    report_meta,
    report_to_jsonl,
    verify_snapshot,
)
from .errors import ConfigError, MissingPrerequisite, NotReady, SnapshotMismatch
from .hollowing import (
    CoverageMap,
    emit_patches,
    mine_scope,
    plan_hollow,
    verify_solvability,
)
from .mutation import (
    ExternalEditSource,
    MutationEngine,
    PlannedCandidate,
    ProceduralSource,
    apply_edits,
)
from .packaging import (
    TaskRecord,
    build_record,
    leakage_filter,
    log_digest,
    records_from_jsonl,
    records_to_jsonl,
    render_problem_statement,
    replay_record,
    schema_issues,
    validate_record,
)
from .patching import (
    Patch,
    extract_identifiers,
    patch_from_contents,
    post_state_hash,
    reverse_of,
    tree_hash,
)
from .sandbox import SandboxPool, SandboxSpec
from .taxonomy import ALL_MODIFIERS, ModifierId
from .templates import TemplateRegistry, default_templates_dir
from .verification import (
    VerifierSpec,
    outcomes_from_result,
    OutcomeVector,
    accept_candidate,
    partition_outcomes,
    readiness_gate,
    run_baseline,
)

STAGES = ("analyze", "gate", "forge", "verify", "package", "hollow", "replay")

ANALYSIS_FILE = "analysis.jsonl"
ANALYSIS_META_FILE = "analysis.meta.json"
READINESS_FILE = "readiness.json"
CANDIDATES_FILE = "candidates.jsonl"
BASELINE_FILE = "baseline.json"
VERIFIED_FILE = "candidates-verified.jsonl"
TASKS_FILE = "tasks.jsonl"
ARCHITECT_TASKS_FILE = "architect-tasks.jsonl"
REPLAY_FILE = "replay.json"


@dataclass
class PipelineConfig:
    repo_path: Path
    out_dir: Path
    templates_dir: Optional[Path] = None
    seed: int = 0
    jobs: int = 1
    modifiers: tuple[ModifierId, ...] = ALL_MODIFIERS
    verifier_path: Optional[Path] = None
    coverage_path: Optional[Path] = None
    min_isolation: float = 0.8
    min_entities: int = 3
    external_candidates: Optional[Path] = None
    wall_timeout: float = 120.0
    cpu_time_limit: float = 300.0
    memory_limit: int = 2 * 1024 * 1024 * 1024
    package_input: Optional[Path] = None
    package_output: Optional[Path] = None
    tasks_path: Optional[Path] = None

    def __post_init__(self):
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        self.repo_path = Path(self.repo_path)
        self.out_dir = Path(self.out_dir)

    def registry(self) -> TemplateRegistry:
        directory = self.templates_dir
        if directory is None:
            local = Path("templates")
            directory = local if local.is_dir() else default_templates_dir()
        return TemplateRegistry.load_dir(Path(directory))

    def verifier(self) -> VerifierSpec:
        path = self.verifier_path or (self.repo_path / "verifier.json")
        if not Path(path).is_file():
            raise ConfigError(f"verifier metadata not found: {path}")
        return VerifierSpec.load(Path(path))

    def make_pool(self) -> SandboxPool:
        return SandboxPool(max_size=self.jobs)

    def substrate(self, pool: SandboxPool, root: Optional[Path] = None) -> SandboxSpec:
        return pool.register_substrate(
            root or self.repo_path,
            wall_timeout=self.wall_timeout,
            cpu_time_limit=self.cpu_time_limit,
            memory_limit=self.memory_limit,
        )


def write_atomic(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=str(path.parent), prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def run_pipeline(config: PipelineConfig, stage: str) -> int:
    """Run one stage; returns the process exit status.

    Exit 0 means the stage completed (artifacts written), not that every
    candidate was accepted.
    """
    if stage not in STAGES:
        raise ConfigError(f"unknown stage {stage!r} (expected one of {STAGES})")
    runner = {
        "analyze": stage_analyze,
        "gate": stage_gate,
        "forge": stage_forge,
        "verify": stage_verify,
        "package": stage_package,
        "hollow": stage_hollow,
        "replay": stage_replay,
    }[stage]
    return runner(config)


# ---------------------------------------------------------------------------
# stages
# ---------------------------------------------------------------------------


def stage_analyze(config: PipelineConfig) -> int:
    registry = config.registry()
    report = analyze_repo(config.repo_path, registry)
    write_atomic(config.out_dir / ANALYSIS_FILE, report_to_jsonl(report))
    write_atomic(config.out_dir / ANALYSIS_META_FILE,
                 json.dumps(report_meta(report), indent=2) + "\n")
    print(f"analyzed {len(report.file_status)} files, "
          f"{len(report.entities)} entities, snapshot {report.snapshot_id[:12]}")
    return 0


def load_analysis(config: PipelineConfig) -> AnalysisReport:
    jsonl = config.out_dir / ANALYSIS_FILE
    meta = config.out_dir / ANALYSIS_META_FILE
    if not jsonl.is_file() or not meta.is_file():
        raise MissingPrerequisite("run `taskforge analyze` first")
    return report_from_files(jsonl.read_text(encoding="utf-8"),
                             json.loads(meta.read_text(encoding="utf-8")))


def stage_gate(config: PipelineConfig) -> int:
    verifier = config.verifier()
    pool = config.make_pool()
    try:
        spec = config.substrate(pool)
        report = readiness_gate(pool, spec, verifier)
    finally:
        pool.shutdown()
    payload = {
        "classification": report.classification,
        "evidence": report.evidence,
        "artifact_valid": report.artifact_valid,
        "substrate_ref": spec.substrate_ref,
        "repo_snapshot": spec.repo_snapshot,
    }
    write_atomic(config.out_dir / READINESS_FILE, json.dumps(payload, indent=2) + "\n")
    print(f"readiness: {report.classification} ({report.evidence})")
    return 0


def stage_forge(config: PipelineConfig) -> int:
    if not config.modifiers:
        raise ConfigError("forge needs at least one modifier")
    registry = config.registry()
    report = load_analysis(config)
    if not verify_snapshot(report, config.repo_path):
        raise SnapshotMismatch("repository changed since analyze; rerun analyze")
    engine = MutationEngine(registry)
    sources = [ProceduralSource(engine, config.modifiers, config.repo_path)]
    if config.external_candidates:
        sources.append(ExternalEditSource(config.external_candidates))
    candidates: list[PlannedCandidate] = []
    for source in sources:
        candidates.extend(source.candidates(report, config.seed))
    lines = "".join(json.dumps(c.to_dict(), ensure_ascii=False) + "\n"
                    for c in candidates)
    write_atomic(config.out_dir / CANDIDATES_FILE, lines)
    print(f"forged {len(candidates)} candidates (seed {config.seed})")
    return 0


def load_candidates(config: PipelineConfig) -> list[PlannedCandidate]:
    path = config.out_dir / CANDIDATES_FILE
    if not path.is_file():
        raise MissingPrerequisite("run `taskforge forge` first")
    return [PlannedCandidate.from_dict(json.loads(line))
            for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]


def stage_verify(config: PipelineConfig) -> int:
    candidates = load_candidates(config)
    verifier = config.verifier()
    pool = config.make_pool()
    logs_dir = config.out_dir / "logs"
    try:
        spec = config.substrate(pool)
        readiness = readiness_gate(pool, spec, verifier)
        if readiness.classification != "ready":
            raise NotReady(f"{readiness.classification}: {readiness.evidence}")
        baseline = run_baseline(pool, spec, verifier)
        write_atomic(config.out_dir / BASELINE_FILE,
                     json.dumps(baseline.to_dict(), indent=2) + "\n")

        def work(candidate: PlannedCandidate) -> dict:
            return _verify_one(config, pool, spec, verifier, baseline,
                               candidate, logs_dir)

        if config.jobs > 1:
            with ThreadPoolExecutor(max_workers=config.jobs) as pool_exec:
                rows = list(pool_exec.map(work, candidates))
        else:
            rows = [work(c) for c in candidates]
    finally:
        pool.shutdown()
    rows.sort(key=lambda r: r["candidate_id"])
    lines = "".join(json.dumps(r, ensure_ascii=False) + "\n" for r in rows)
    write_atomic(config.out_dir / VERIFIED_FILE, lines)
    accepted = sum(1 for r in rows if r["accepted"])
    print(f"verified {len(rows)} candidates: {accepted} accepted")
    return 0


def _verify_one(config: PipelineConfig, pool: SandboxPool, spec: SandboxSpec,
                verifier: VerifierSpec, baseline: OutcomeVector,
                candidate: PlannedCandidate, logs_dir: Path) -> dict:
    source = (config.repo_path / candidate.edit_set.file_path).read_bytes()
    row: dict = {"candidate_id": candidate.candidate_id, "origin": candidate.origin}
    if candidate.spec is not None:
        row["spec"] = candidate.spec.to_dict()
    row["edit_set"] = candidate.edit_set.to_dict()
    try:
        mutated = apply_edits(source, candidate.edit_set)
        patch = patch_from_contents(config.repo_path,
                                    {candidate.edit_set.file_path: mutated})
    except Exception as exc:
        row.update(accepted=False, error=f"materialization: {exc}")
        return row
    result = pool.with_candidate(spec, patch, verifier.command)
    outcomes = outcomes_from_result(result, verifier)
    vector = OutcomeVector(
        outcomes={o.test_id: o.status for o in outcomes} if outcomes else {},
        run_meta=result.to_meta())
    partition = partition_outcomes(baseline, vector)
    accepted = accept_candidate(partition)
    messages = {}
    if outcomes:
        messages = {o.test_id: o.message[:1000] for o in outcomes
                    if o.test_id in partition.p2f}
    row.update(
        patch=patch.to_dict(),
        partition=partition.to_dict(),
        accepted=accepted,
        failure_messages=messages,
        metadata=log_digest(result.to_meta(), result.stdout, result.stderr),
    )
    log_dir = logs_dir / candidate.candidate_id
    log_dir.mkdir(parents=True, exist_ok=True)
    (log_dir / "stdout.txt").write_bytes(result.stdout)
    (log_dir / "stderr.txt").write_bytes(result.stderr)
    (log_dir / "result.json").write_text(
        json.dumps({"meta": result.to_meta(), "partition": partition.to_dict(),
                    "accepted": accepted}, indent=2) + "\n", encoding="utf-8")
    return row


def stage_package(config: PipelineConfig) -> int:
    in_path = config.package_input or (config.out_dir / VERIFIED_FILE)
    out_path = config.package_output or (config.out_dir / TASKS_FILE)
    if not Path(in_path).is_file():
        raise MissingPrerequisite("run `taskforge verify` first")
    baseline_path = config.out_dir / BASELINE_FILE
    baseline = (json.loads(baseline_path.read_text(encoding="utf-8"))
                if baseline_path.is_file() else None)
    registry = config.registry()
    verifier = config.verifier()

    base_hash = tree_hash(config.repo_path)
    repo_spec = {"path": str(config.repo_path), "base_snapshot": base_hash}

    records: list[TaskRecord] = []
    failures: list[str] = []
    rows = [json.loads(line) for line
            in Path(in_path).read_text(encoding="utf-8").splitlines() if line.strip()]
    for row in rows:
        if not row.get("accepted"):
            continue
        patch = Patch.from_dict(row["patch"])
        if patch.base_snapshot != base_hash:
            failures.append(f"{row['candidate_id']}: repository drifted since verify")
            continue
        oracle = reverse_of(patch, post_state_hash(config.repo_path, patch))
        fingerprint = extract_identifiers(patch, registry, config.repo_path)
        p2f = row["partition"]["p2f"]
        statement = render_problem_statement(
            p2f, row.get("failure_messages", {}), fingerprint)
        verdict = leakage_filter(statement, fingerprint, allowed=p2f)
        if not verdict.accepted:
            statement = render_problem_statement(p2f, {}, fingerprint)
            verdict = leakage_filter(statement, fingerprint, allowed=p2f)
        if not verdict.accepted:
            failures.append(f"{row['candidate_id']}: leakage filter rejected statement")
            continue
        metadata = {
            "candidate_id": row["candidate_id"],
            "origin": row.get("origin", "procedural"),
            "modifier": (row.get("spec") or {}).get("modifier"),
            "oracle_convention": "reverse_of_problem",
            "verifier": verifier.to_dict(),
            "execution": row.get("metadata", {}),
        }
        if baseline is not None:
            metadata["baseline_outcomes"] = baseline["outcomes"]
            metadata["flaky_excluded"] = baseline["run_meta"].get("flaky_excluded", [])
        record = build_record(
            family="swe_scale",
            repo_spec=repo_spec,
            problem_patch=patch,
            problem_statement={"text": statement, "generated_by": "template"},
            oracle_patch=oracle,
            validation={"p2f": p2f, "p2p": row["partition"]["p2p"]},
            metadata=metadata,
        )
        records.append(record)

    pool = config.make_pool()
    try:
        config.substrate(pool)
        for record in records:
            issues = validate_record(record, pool)
            if issues:
                failures.append(
                    f"{record.metadata['candidate_id']}: " +
                    "; ".join(f"{i['field']}: {i['detail']}" for i in issues))
    finally:
        pool.shutdown()

    write_atomic(Path(out_path), records_to_jsonl(records))
    print(f"packaged {len(records)} records -> {out_path}")
    if failures:
        for failure in failures:
            print(f"INVALID: {failure}")
        return 1
    return 0


def stage_hollow(config: PipelineConfig) -> int:
    if not config.coverage_path or not Path(config.coverage_path).is_file():
        raise ConfigError("hollow needs --coverage pointing at a coverage file")
    registry = config.registry()
    verifier = config.verifier()
    report = analyze_repo(config.repo_path, registry)
    coverage = CoverageMap.load(Path(config.coverage_path))
    scopes = mine_scope(coverage, report, min_entities=config.min_entities,
                        min_isolation=config.min_isolation)
    print(f"mined {len(scopes)} scopes")
    base_hash = tree_hash(config.repo_path)
    repo_spec = {"path": str(config.repo_path), "base_snapshot": base_hash}

    records = []
    skipped = []
    pool = config.make_pool()
    staging = Path(tempfile.mkdtemp(prefix="taskforge-architect-"))
    try:
        config.substrate(pool)
        for i, scope in enumerate(scopes):
            plan = plan_hollow(scope, report, registry, config.repo_path)
            if not plan.entries:
                skipped.append((i, "empty hollow plan"))
                continue
            patches = emit_patches(config.repo_path, plan)
            hollow, golden = patches["hollow_patch"], patches["golden_patch"]
            hollow_dir = staging / f"scope-{i}"
            shutil.copytree(config.repo_path, hollow_dir,
                            ignore=shutil.ignore_patterns(".*", "__pycache__"))
            from .patching import apply_patch
            apply_patch(hollow_dir, hollow)
            hollow_spec = config.substrate(pool, root=hollow_dir)
            if not verify_solvability(pool, hollow_spec, golden,
                                      scope.mapped_tests, verifier):
                skipped.append((i, "golden patch does not satisfy hidden tests"))
                continue
            statement = _architect_statement(scope, report)
            records.append(build_record(
                family="swe_architect",
                repo_spec=repo_spec,
                problem_patch=hollow,
                problem_statement={"text": statement, "generated_by": "template"},
                oracle_patch=golden,
                validation={"hidden_tests": scope.mapped_tests},
                metadata={
                    "scope": scope.to_dict(),
                    "oracle_convention": "golden_over_hollowed",
                    "hollowed_snapshot": golden.base_snapshot,
                    "verifier": verifier.to_dict(),
                },
            ))
    finally:
        pool.shutdown()
        shutil.rmtree(staging, ignore_errors=True)
    write_atomic(config.out_dir / ARCHITECT_TASKS_FILE, records_to_jsonl(records))
    print(f"packaged {len(records)} construction records")
    for index, reason in skipped:
        print(f"skipped scope {index}: {reason}")
    return 0


def _architect_statement(scope, report: AnalysisReport) -> str:
    by_id = {r.entity_id: r for r in report.entities}
    lines = ["Implement the missing functionality so the hidden test suite passes.",
             "", "Entities to implement:"]
    for entity_id in scope.target_entities:
        record = by_id[entity_id]
        lines.append(f"- {record.file_path}: {record.kind} "
                     f"{record.name} ({record.signature_text})")
    return "\n".join(lines)


def stage_replay(config: PipelineConfig) -> int:
    tasks_path = config.tasks_path or (config.out_dir / TASKS_FILE)
    if not Path(tasks_path).is_file():
        raise MissingPrerequisite(f"no task archive at {tasks_path}")
    records = records_from_jsonl(Path(tasks_path).read_text(encoding="utf-8"))
    pool = config.make_pool()
    results = []
    try:
        config.substrate(pool)
        for record in records:
            report = replay_record(record, pool)
            results.append({
                "candidate_id": record.metadata.get("candidate_id", "<unknown>"),
                "bug_reproduced": report.bug_reproduced,
                "oracle_restores": report.oracle_restores,
                "detail": report.detail,
            })
    finally:
        pool.shutdown()
    write_atomic(config.out_dir / REPLAY_FILE, json.dumps(results, indent=2) + "\n")
    bad = [r for r in results if not (r["bug_reproduced"] and r["oracle_restores"])]
    for r in results:
        status = "ok" if r["bug_reproduced"] and r["oracle_restores"] else "FAILED"
        print(f"{r['candidate_id']}: {status} {r['detail']}")
    print(f"replayed {len(results)} records, {len(bad)} failing")
    return 1 if bad else 0
