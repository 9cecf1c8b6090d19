"""Entity analysis: the inventory of modification targets in a repository.

Walks a repository in lexicographic path order, parses each resolvable file
through its template's grammar, and records every function, method, and
class with exact byte spans, complexity signals, and test-file flags. The
resulting report is the planning substrate for every downstream stage.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .cst import SyntaxNode, SyntaxTree, get_grammar
from .errors import IoError
from .templates import LanguageTemplate, TemplateRegistry

DEFAULT_MAX_FILE_BYTES = 2 * 1024 * 1024

STATUS_PARSED = "parsed"
STATUS_PARSE_ERROR = "parse_error"
STATUS_SKIPPED_NO_TEMPLATE = "skipped_no_template"
STATUS_SKIPPED_TOO_LARGE = "skipped_too_large"

_ENTITY_KINDS = ("function", "method", "class")


@dataclass
class EntityRecord:
    entity_id: str
    kind: str
    name: str
    file_path: str
    byte_span: tuple[int, int]
    body_span: tuple[int, int]
    signature_text: str
    nesting_depth: int
    complexity: set[str]
    statement_count: int
    is_test: bool
    parent_id: Optional[str] = None
    language_id: str = ""

    def to_dict(self) -> dict:
        return {
            "entity_id": self.entity_id,
            "kind": self.kind,
            "name": self.name,
            "file_path": self.file_path,
            "byte_span": list(self.byte_span),
            "body_span": list(self.body_span),
            "signature_text": self.signature_text,
            "nesting_depth": self.nesting_depth,
            "complexity": sorted(self.complexity),
            "statement_count": self.statement_count,
            "is_test": self.is_test,
            "parent_id": self.parent_id,
            "language_id": self.language_id,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EntityRecord":
        return cls(
            entity_id=d["entity_id"],
            kind=d["kind"],
            name=d["name"],
            file_path=d["file_path"],
            byte_span=tuple(d["byte_span"]),
            body_span=tuple(d["body_span"]),
            signature_text=d["signature_text"],
            nesting_depth=d["nesting_depth"],
            complexity=set(d["complexity"]),
            statement_count=d["statement_count"],
            is_test=d["is_test"],
            parent_id=d.get("parent_id"),
            language_id=d.get("language_id", ""),
        )


@dataclass
class AnalysisReport:
    snapshot_id: str
    entities: list[EntityRecord] = field(default_factory=list)
    file_status: dict[str, str] = field(default_factory=dict)

    def by_id(self, entity_id: str) -> Optional[EntityRecord]:
        for record in self.entities:
            if record.entity_id == entity_id:
                return record
        return None

    def entities_in(self, file_path: str) -> list[EntityRecord]:
        return [r for r in self.entities if r.file_path == file_path]


def parse_source(source: bytes, tpl: LanguageTemplate) -> SyntaxTree:
    """Parse file contents with the template's pinned grammar."""
    return get_grammar(tpl.grammar_ref).parse(source)


def extract_entities(tree: SyntaxTree, tpl: LanguageTemplate,
                     path: str) -> list[EntityRecord]:
    """One record per entity-query match, methods linked to their class."""
    if tree.has_root_error:
        return []
    queries = {name: tpl.entity_query(name) for name in _ENTITY_KINDS}
    is_test = tpl.is_test_path(path)

    candidates: dict[int, SyntaxNode] = {}
    for query in queries.values():
        if query is None:
            continue
        for node in query.matches(tree):
            candidates.setdefault(id(node), node)

    def _classify(node: SyntaxNode) -> Optional[str]:
        # one query text may serve both function and method (Python uses
        # function_definition for either); ancestry decides which one
        names = {name for name, q in queries.items()
                 if q is not None and node.kind in q.kinds}
        if "class" in names:
            return "class"
        if "method" in names and _enclosing_class(node) is not None:
            return "method"
        if "function" in names:
            return "function"
        return None

    matched = [(node, kind) for node, kind in
               ((n, _classify(n)) for n in candidates.values()) if kind]
    matched.sort(key=lambda pair: (pair[0].start, -(pair[0].end - pair[0].start)))

    records: list[EntityRecord] = []
    node_to_record: dict[int, EntityRecord] = {}
    for node, kind in matched:
        name_node = node.field("name")
        if name_node is None:
            continue  # anonymous definitions are not entities
        body = node.field("body")
        body_span = body.span if body is not None else (node.end, node.end)
        record = EntityRecord(
            entity_id="",
            kind=kind,
            name=tree.text(name_node),
            file_path=path,
            byte_span=node.span,
            body_span=body_span,
            signature_text=_signature_text(tree, node, body),
            nesting_depth=_nesting_depth(node),
            complexity=set(),
            statement_count=len(body.children) if body is not None else 0,
            is_test=is_test,
            parent_id=None,
            language_id=tpl.language_id,
        )
        parent = _enclosing_entity(node, node_to_record)
        qualified = record.name if parent is None \
            else f"{parent.entity_id.split('::', 1)[1].rsplit('@', 1)[0]}.{record.name}"
        record.entity_id = f"{path}::{qualified}@{node.start}"
        if parent is not None:
            record.parent_id = parent.entity_id
        node_to_record[id(node)] = record
        records.append(record)
    return records


def compute_complexity_signals(record: EntityRecord, tree: SyntaxTree,
                               tpl: LanguageTemplate) -> EntityRecord:
    """Fill has_* flags from the template's complexity queries."""
    flags = set()
    for signal, text in tpl.complexity_queries.items():
        if tpl.query(text).matches_in(tree, record.body_span):
            flags.add(f"has_{signal}")
    record.complexity = flags
    return record


def find_entity_node(tree: SyntaxTree, record: EntityRecord) -> Optional[SyntaxNode]:
    """Re-locate a record's node in a (re)parsed tree by kind and span."""
    for node in tree.walk():
        if node.span == record.byte_span and node.field("name") is not None:
            return node
    return None


def analyze_repo(root: Path, registry: TemplateRegistry,
                 max_file_bytes: int = DEFAULT_MAX_FILE_BYTES) -> AnalysisReport:
    """Deterministic whole-repository analysis.

    Files are visited in lexicographic path order; dot-directories are
    skipped; files above the size cap are skipped with a distinct status.
    """
    root = Path(root)
    if not root.is_dir():
        raise IoError(f"not a directory: {root}")
    report = AnalysisReport(snapshot_id="")
    hasher = hashlib.sha256()
    trees: dict[str, SyntaxTree] = {}

    for path in iter_source_files(root):
        rel = path.relative_to(root).as_posix()
        tpl = registry.resolve(rel)
        if tpl is None:
            report.file_status[rel] = STATUS_SKIPPED_NO_TEMPLATE
            continue
        try:
            if path.stat().st_size > max_file_bytes:
                report.file_status[rel] = STATUS_SKIPPED_TOO_LARGE
                continue
            source = path.read_bytes()
        except OSError as exc:
            raise IoError(f"{rel}: {exc}") from exc
        hasher.update(rel.encode())
        hasher.update(b"\0")
        hasher.update(hashlib.sha256(source).digest())
        tree = parse_source(source, tpl)
        if tree.has_root_error:
            report.file_status[rel] = STATUS_PARSE_ERROR
            continue
        report.file_status[rel] = STATUS_PARSED
        trees[rel] = tree
        for record in extract_entities(tree, tpl, rel):
            compute_complexity_signals(record, tree, tpl)
            report.entities.append(record)

    report.snapshot_id = hasher.hexdigest()
    return report


def iter_source_files(root: Path):
    """Regular files under root, lexicographic by relative posix path,
    skipping dot-directories, dot-files, and bytecode caches."""
    paths = []
    for path in root.rglob("*"):
        if not path.is_file() or path.is_symlink():
            continue
        rel_parts = path.relative_to(root).parts
        if any(part.startswith(".") or part == "__pycache__" for part in rel_parts):
            continue
        paths.append(path)
    paths.sort(key=lambda p: p.relative_to(root).as_posix())
    return paths


def _nesting_depth(node: SyntaxNode) -> int:
    depth = 0
    for anc in node.ancestors():
        if anc.field("name") is not None and anc.field("body") is not None:
            depth += 1
    return depth


def _enclosing_class(node: SyntaxNode) -> Optional[SyntaxNode]:
    for anc in node.ancestors():
        if anc.kind in ("class_definition", "class_declaration"):
            return anc
    return None


def _enclosing_entity(node: SyntaxNode, node_to_record: dict) -> Optional[EntityRecord]:
    for anc in node.ancestors():
        record = node_to_record.get(id(anc))
        if record is not None:
            return record
    return None


def _signature_text(tree: SyntaxTree, node: SyntaxNode, body) -> str:
    header_start = node.fields.get("header_start", node.start)
    end = body.start if body is not None else node.end
    text = tree.slice(header_start, end).strip()
    return text.rstrip("{").strip()


def verify_snapshot(report: AnalysisReport, root: Path) -> bool:
    """True iff the analyzed files on disk still hash to the report's
    snapshot (guards against planning edits over a drifted tree)."""
    root = Path(root)
    hasher = hashlib.sha256()
    analyzed = [p for p, status in sorted(report.file_status.items())
                if status in (STATUS_PARSED, STATUS_PARSE_ERROR)]
    for rel in analyzed:
        path = root / rel
        if not path.is_file():
            return False
        hasher.update(rel.encode())
        hasher.update(b"\0")
        hasher.update(hashlib.sha256(path.read_bytes()).digest())
    return hasher.hexdigest() == report.snapshot_id


# -- serialization -----------------------------------------------------------


def report_to_jsonl(report: AnalysisReport) -> str:
    lines = [json.dumps(r.to_dict(), ensure_ascii=False) for r in report.entities]
    return "\n".join(lines) + ("\n" if lines else "")


def report_meta(report: AnalysisReport) -> dict:
    return {
        "snapshot_id": report.snapshot_id,
        "file_status": dict(sorted(report.file_status.items())),
        "entity_count": len(report.entities),
    }


def report_from_files(jsonl_text: str, meta: dict) -> AnalysisReport:
    entities = [EntityRecord.from_dict(json.loads(line))
                for line in jsonl_text.splitlines() if line.strip()]
    return AnalysisReport(snapshot_id=meta["snapshot_id"], entities=entities,
                          file_status=dict(meta["file_status"]))
