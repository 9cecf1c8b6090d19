"""Scope mining and code hollowing for construction tasks.

Scopes are connected components of the test-to-entity coverage graph,
scored by cohesion (internal edge density) and isolation (how few of the
cluster's edges point at excluded test-file entities). Hollowing removes
target entity bodies while preserving signatures and all surrounding code,
and pairs every hollow patch with its exact inverse golden patch.
"""

from __future__ import annotations

import json
import shutil
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .analyzer import AnalysisReport, find_entity_node, parse_source
from .cst import SyntaxTree
from .errors import DanglingEntityId, MissingTemplate
from .mutation import Edit, EditSet, apply_edits, render_stub
from .patching import Patch, diff_snapshot, post_state_hash, reverse_of, tree_hash
from .sandbox import SandboxPool, SandboxSpec
from .templates import TemplateRegistry
from .verification import VerifierSpec, run_candidate


@dataclass
class CoverageMap:
    edges: dict[str, set[str]] = field(default_factory=dict)  # test -> entities

    @classmethod
    def load(cls, path: Path) -> "CoverageMap":
        edges: dict[str, set[str]] = {}
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                d = json.loads(line)
                edges.setdefault(d["test"], set()).update(d["covers"])
        return cls(edges=edges)

    def dump(self, path: Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for test in sorted(self.edges):
                fh.write(json.dumps(
                    {"test": test, "covers": sorted(self.edges[test])}) + "\n")


@dataclass
class ScopePackage:
    target_entities: list[str]
    mapped_tests: list[str]
    cohesion: float
    isolation: float

    def to_dict(self) -> dict:
        return {
            "target_entities": self.target_entities,
            "mapped_tests": self.mapped_tests,
            "cohesion": round(self.cohesion, 6),
            "isolation": round(self.isolation, 6),
        }


@dataclass
class HollowEntry:
    entity_id: str
    body_span: tuple[int, int]
    stub_text: str


@dataclass
class HollowPlan:
    entries: list[HollowEntry] = field(default_factory=list)


DEFAULT_MIN_ENTITIES = 3
DEFAULT_MIN_ISOLATION = 0.8


def mine_scope(coverage: CoverageMap, report: AnalysisReport,
               min_entities: int = DEFAULT_MIN_ENTITIES,
               min_isolation: float = DEFAULT_MIN_ISOLATION) -> list[ScopePackage]:
    """Connected components of the coverage graph, scored and filtered.

    Test-file entities never become targets; edges pointing at them count
    against isolation. Output order is deterministic: descending isolation,
    then size, then first entity id.
    """
    known = {r.entity_id: r for r in report.entities}
    for test, entities in coverage.edges.items():
        for entity_id in entities:
            if entity_id not in known:
                raise DanglingEntityId(f"{entity_id} (covered by {test})")

    parent: dict[str, str] = {}

    def find(x: str) -> str:
        while parent.setdefault(x, x) != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a: str, b: str):
        parent[find(a)] = find(b)

    for test, entities in coverage.edges.items():
        for entity_id in entities:
            union(f"t:{test}", f"e:{entity_id}")

    components: dict[str, dict[str, set[str]]] = {}
    for test in coverage.edges:
        root = find(f"t:{test}")
        components.setdefault(root, {"tests": set(), "entities": set()})
        components[root]["tests"].add(test)
    for entities in coverage.edges.values():
        for entity_id in entities:
            root = find(f"e:{entity_id}")
            components.setdefault(root, {"tests": set(), "entities": set()})
            components[root]["entities"].add(entity_id)

    packages = []
    for component in components.values():
        targets = sorted(e for e in component["entities"] if not known[e].is_test)
        if not targets:
            continue
        target_set = set(targets)
        mapped = sorted(t for t in component["tests"]
                        if coverage.edges[t] & target_set)
        if not mapped:
            continue
        internal = sum(len(coverage.edges[t] & target_set) for t in mapped)
        leaving = sum(len(coverage.edges[t] - target_set) for t in mapped)
        total = internal + leaving
        cohesion = internal / (len(mapped) * len(targets))
        isolation = 1.0 - (leaving / total) if total else 0.0
        if len(targets) < min_entities or isolation < min_isolation:
            continue
        packages.append(ScopePackage(
            target_entities=targets, mapped_tests=mapped,
            cohesion=cohesion, isolation=isolation))
    packages.sort(key=lambda p: (-p.isolation, -len(p.target_entities),
                                 p.target_entities[0]))
    return packages


def plan_hollow(scope: ScopePackage, report: AnalysisReport,
                registry: TemplateRegistry, root: Path) -> HollowPlan:
    """Stub entries for every target entity body.

    Class targets hollow each method body, keeping the declaration and
    fields; entries nested inside an already-hollowed span are dropped so
    spans never overlap.
    """
    root = Path(root)
    by_id = {r.entity_id: r for r in report.entities}
    expanded: list[str] = []
    for entity_id in scope.target_entities:
        record = by_id.get(entity_id)
        if record is None:
            raise DanglingEntityId(entity_id)
        if record.kind == "class":
            methods = [r.entity_id for r in report.entities
                       if r.parent_id == entity_id and r.kind == "method"]
            expanded.extend(methods)
        else:
            expanded.append(entity_id)

    trees: dict[str, SyntaxTree] = {}
    entries: list[HollowEntry] = []
    for entity_id in sorted(set(expanded), key=lambda e: (by_id[e].file_path,
                                                          by_id[e].byte_span[0])):
        record = by_id[entity_id]
        tpl = registry.resolve(record.file_path)
        if tpl is None:
            raise MissingTemplate(record.file_path)
        if record.file_path not in trees:
            source = (root / record.file_path).read_bytes()
            trees[record.file_path] = parse_source(source, tpl)
        tree = trees[record.file_path]
        node = find_entity_node(tree, record)
        if node is None:
            raise DanglingEntityId(f"{entity_id}: span not found in current tree")
        body = node.field("body")
        if body is None:
            continue
        if any(e.entity_id.split("::")[0] == record.file_path
               and e.body_span[0] <= body.start and body.end <= e.body_span[1]
               for e in entries):
            continue  # already inside a hollowed span
        entries.append(HollowEntry(
            entity_id=entity_id,
            body_span=body.span,
            stub_text=render_stub(tpl, tree, body, node)))
    return HollowPlan(entries=entries)


def hollowed_contents(plan: HollowPlan, root: Path) -> dict[str, bytes]:
    """File path -> hollowed bytes for every file the plan touches."""
    root = Path(root)
    per_file: dict[str, list[HollowEntry]] = {}
    for entry in plan.entries:
        per_file.setdefault(entry.entity_id.split("::")[0], []).append(entry)
    out = {}
    for path, entries in sorted(per_file.items()):
        edits = [Edit(e.body_span[0], e.body_span[1], e.stub_text.encode())
                 for e in entries]
        out[path] = apply_edits((root / path).read_bytes(),
                                EditSet(file_path=path, edits=edits))
    return out


def emit_patches(workdir: Path, plan: HollowPlan) -> dict[str, Patch]:
    """The hollow patch and its exact inverse golden patch.

    The workdir is read, never written; patches are derived from a staged
    hollowed copy.
    """
    workdir = Path(workdir)
    staging = Path(tempfile.mkdtemp(prefix="taskforge-hollow-"))
    try:
        hollow_tree = staging / "hollowed"
        shutil.copytree(workdir, hollow_tree,
                        ignore=shutil.ignore_patterns(".*", "__pycache__"))
        for path, content in hollowed_contents(plan, workdir).items():
            (hollow_tree / path).write_bytes(content)
        hollow_patch = diff_snapshot(workdir, hollow_tree)
        golden_patch = reverse_of(
            hollow_patch, post_snapshot=post_state_hash(workdir, hollow_patch))
        return {"hollow_patch": hollow_patch, "golden_patch": golden_patch}
    finally:
        shutil.rmtree(staging, ignore_errors=True)


def verify_solvability(pool: SandboxPool, spec: SandboxSpec, golden_patch: Patch,
                       hidden_tests: list[str], verifier: VerifierSpec) -> bool:
    """True iff the golden patch makes every hidden test pass.

    ``spec`` must point at the hollowed snapshot. A hidden test missing
    from the results counts as failing.
    """
    vector, _ = run_candidate(pool, spec, golden_patch, verifier)
    return all(vector.outcomes.get(t) == "pass" for t in hidden_tests)
