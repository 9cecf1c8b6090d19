"""taskforge: a deterministic factory for executable SWE task records.

Converts repository snapshots into verified bug-repair and construction
tasks: taxonomy-driven procedural fault injection, sandboxed verification
with pass-to-fail evidence, coverage-based scope mining with code
hollowing, and packaging into a unified, replayable record format.
"""

from .analyzer import AnalysisReport, EntityRecord, analyze_repo
from .hollowing import CoverageMap, ScopePackage, mine_scope
from .mutation import EditSet, MutationEngine, MutationSpec, apply_edits
from .packaging import TaskRecord, build_record, leakage_filter, replay_record
from .patching import Patch, apply_patch, diff_snapshot, revert_patch, tree_hash
from .sandbox import ExecutionResult, Sandbox, SandboxPool, SandboxSpec
from .taxonomy import ALL_MODIFIERS, ModifierId
from .templates import LanguageTemplate, TemplateRegistry, load_template, validate_template
from .verification import (
    OutcomeVector,
    TestPartition,
    VerifierSpec,
    accept_candidate,
    parse_test_report,
    partition_outcomes,
    readiness_gate,
    run_baseline,
)

__version__ = "0.1.0"

__all__ = [
    "AnalysisReport", "EntityRecord", "analyze_repo",
    "CoverageMap", "ScopePackage", "mine_scope",
    "EditSet", "MutationEngine", "MutationSpec", "apply_edits",
    "TaskRecord", "build_record", "leakage_filter", "replay_record",
    "Patch", "apply_patch", "diff_snapshot", "revert_patch", "tree_hash",
    "ExecutionResult", "Sandbox", "SandboxPool", "SandboxSpec",
    "ALL_MODIFIERS", "ModifierId",
    "LanguageTemplate", "TemplateRegistry", "load_template", "validate_template",
    "OutcomeVector", "TestPartition", "VerifierSpec",
    "accept_candidate", "parse_test_report", "partition_outcomes",
    "readiness_gate", "run_baseline",
    "__version__",
]
