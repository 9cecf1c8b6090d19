"""Procedural fault injection.

Implements the thirteen-modifier taxonomy through the localize ->
precondition -> atomic-edit workflow: injection queries from the language
template locate candidate nodes, structural preconditions filter them, and
planners emit non-overlapping byte-offset edits. Every planned edit set is
re-parsed before being emitted, so all modifiers except statement shuffling
are parse-safe by construction.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from .analyzer import AnalysisReport, EntityRecord
from .cst import SyntaxNode, SyntaxTree, get_grammar, indent_at, line_start_of
from .errors import (
    InvalidEditSet,
    NoVariantAvailable,
    OverlappingEdits,
    SnapshotMismatch,
    SpanOutOfBounds,
    TargetVanished,
)
from .taxonomy import ALL_MODIFIERS, ModifierId
from .templates import LanguageTemplate, TemplateRegistry


@dataclass
class MutationSpec:
    candidate_id: str
    modifier: ModifierId
    target: str                      # entity_id
    node_spans: list[tuple[int, int]]
    seed: int                        # per-candidate sub-seed, u64
    snapshot_id: str

    def to_dict(self) -> dict:
        return {
            "candidate_id": self.candidate_id,
            "modifier": self.modifier.value,
            "target": self.target,
            "node_spans": [list(s) for s in self.node_spans],
            "seed": self.seed,
            "snapshot_id": self.snapshot_id,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MutationSpec":
        return cls(
            candidate_id=d["candidate_id"],
            modifier=ModifierId(d["modifier"]),
            target=d["target"],
            node_spans=[tuple(s) for s in d["node_spans"]],
            seed=d["seed"],
            snapshot_id=d["snapshot_id"],
        )


@dataclass
class Edit:
    start: int
    end: int
    replacement: bytes

    def to_dict(self) -> dict:
        return {"start": self.start, "end": self.end,
                "replacement": self.replacement.decode("utf-8")}

    @classmethod
    def from_dict(cls, d: dict) -> "Edit":
        return cls(d["start"], d["end"], d["replacement"].encode("utf-8"))


@dataclass
class EditSet:
    file_path: str
    edits: list[Edit] = field(default_factory=list)

    def sorted_edits(self) -> list[Edit]:
        return sorted(self.edits, key=lambda e: (e.start, e.end))

    def to_dict(self) -> dict:
        return {"file_path": self.file_path,
                "edits": [e.to_dict() for e in self.sorted_edits()]}

    @classmethod
    def from_dict(cls, d: dict) -> "EditSet":
        return cls(d["file_path"], [Edit.from_dict(e) for e in d["edits"]])


@dataclass
class PlannedCandidate:
    """A candidate ready for materialization: spec plus its edit set.

    ``spec`` is None for externally supplied candidates (the pluggable
    boundary for generators outside the procedural taxonomy).
    """
    candidate_id: str
    edit_set: EditSet
    spec: Optional[MutationSpec] = None
    origin: str = "procedural"

    def to_dict(self) -> dict:
        out = {"candidate_id": self.candidate_id, "origin": self.origin,
               "edit_set": self.edit_set.to_dict()}
        if self.spec is not None:
            out["spec"] = self.spec.to_dict()
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "PlannedCandidate":
        return cls(
            candidate_id=d["candidate_id"],
            edit_set=EditSet.from_dict(d["edit_set"]),
            spec=MutationSpec.from_dict(d["spec"]) if d.get("spec") else None,
            origin=d.get("origin", "procedural"),
        )


def derive_seed(seed: int, index: int) -> int:
    """Per-candidate sub-seed: stable hash of (pipeline seed, index)."""
    digest = hashlib.sha256(f"{seed}:{index}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def apply_edits(source: bytes, edit_set: EditSet) -> bytes:
    """Apply byte edits right-to-left. Pure; rejects no-op and overlapping
    edit sets."""
    edits = edit_set.sorted_edits()
    if not edits:
        raise InvalidEditSet("empty edit set")
    prev_end = 0
    changes = False
    for e in edits:
        if e.start < 0 or e.end > len(source) or e.start > e.end:
            raise SpanOutOfBounds(f"[{e.start},{e.end}) outside 0..{len(source)}")
        if e.start < prev_end:
            raise OverlappingEdits(f"edit at {e.start} overlaps previous end {prev_end}")
        prev_end = e.end
        if source[e.start:e.end] != e.replacement:
            changes = True
    if not changes:
        raise InvalidEditSet("edit set does not change any bytes")
    out = bytearray(source)
    for e in reversed(edits):
        out[e.start:e.end] = e.replacement
    return bytes(out)


# ---------------------------------------------------------------------------
# engine
# ---------------------------------------------------------------------------


class MutationEngine:
    """Plans and applies the procedural modifiers over an analyzed repo."""

    def __init__(self, registry: TemplateRegistry):
        self.registry = registry

    # -- enumeration -----------------------------------------------------

    def enumerate_candidates(self, report: AnalysisReport,
                             modifiers: Iterable[ModifierId],
                             seed: int, root: Path) -> list[MutationSpec]:
        """One spec per (non-test entity, modifier) whose injection rule
        matches and whose preconditions hold. Deterministic: entity order
        times modifier enum order, sub-seeds derived from (seed, index)."""
        wanted = [m for m in ALL_MODIFIERS if m in set(modifiers)]
        trees = self._parse_files(report, Path(root))
        specs: list[MutationSpec] = []
        index = 0
        for record in report.entities:
            if record.is_test:
                continue
            tree = trees.get(record.file_path)
            if tree is None:
                continue
            tpl = self.registry.get(record.language_id)
            owned = self._owned_spans(report, record)
            for modifier in wanted:
                nodes = self._eligible_nodes(modifier, record, tree, tpl, owned)
                if not nodes:
                    continue
                sub_seed = derive_seed(seed, index)
                rng = random.Random(sub_seed)
                node = nodes[rng.randrange(len(nodes))]
                digest = hashlib.sha256(
                    f"{report.snapshot_id}|{record.entity_id}|{modifier.value}|{index}"
                    .encode()).hexdigest()[:12]
                specs.append(MutationSpec(
                    candidate_id=f"{modifier.value}-{digest}",
                    modifier=modifier,
                    target=record.entity_id,
                    node_spans=[node.span],
                    seed=sub_seed,
                    snapshot_id=report.snapshot_id,
                ))
                index += 1
        return specs

    def plan_all(self, report: AnalysisReport, modifiers: Iterable[ModifierId],
                 seed: int, root: Path) -> list[PlannedCandidate]:
        """Enumerate then plan, dropping candidates with no viable edit."""
        root = Path(root)
        trees = self._parse_files(report, root)
        planned = []
        for spec in self.enumerate_candidates(report, modifiers, seed, root):
            record = report.by_id(spec.target)
            tree = trees[record.file_path]
            tpl = self.registry.get(record.language_id)
            try:
                edit_set = self.plan_edits(spec, tree, tpl)
            except (NoVariantAvailable, TargetVanished):
                continue
            planned.append(PlannedCandidate(spec.candidate_id, edit_set, spec))
        return planned

    def _parse_files(self, report: AnalysisReport, root: Path) -> dict[str, SyntaxTree]:
        trees: dict[str, SyntaxTree] = {}
        for path in sorted({r.file_path for r in report.entities}):
            tpl = self.registry.resolve(path)
            if tpl is None:
                continue
            source = (root / path).read_bytes()
            tree = get_grammar(tpl.grammar_ref).parse(source)
            if not tree.has_root_error:
                trees[path] = tree
        return trees

    def _owned_spans(self, report: AnalysisReport,
                     record: EntityRecord) -> list[tuple[int, int]]:
        """Spans of entities nested inside this one (their matches are owned
        by the inner entity, not this one)."""
        lo, hi = record.byte_span
        return [r.byte_span for r in report.entities_in(record.file_path)
                if r.entity_id != record.entity_id
                and r.byte_span[0] >= lo and r.byte_span[1] <= hi]

    def _eligible_nodes(self, modifier: ModifierId, record: EntityRecord,
                        tree: SyntaxTree, tpl: LanguageTemplate,
                        nested_spans: list[tuple[int, int]]) -> list[SyntaxNode]:
        query = tpl.injection_query(modifier)
        rule = tpl.injection_rules.get(modifier)
        if query is None or rule is None:
            return []
        nodes = []
        for node in query.matches_in(tree, record.byte_span):
            if node.span != record.byte_span and any(
                    node.start >= lo and node.end <= hi
                    for lo, hi in nested_spans):
                continue  # belongs to a nested entity
            if not _statement_position_ok(modifier, node):
                continue
            if all(_check_precondition(name, node, tree, tpl)
                   for name in rule.preconditions):
                if _planner_feasible(modifier, node, tree, tpl):
                    nodes.append(node)
        return nodes

    # -- precondition gate -------------------------------------------------

    def check_preconditions(self, spec: MutationSpec, report: AnalysisReport,
                            tree: Optional[SyntaxTree] = None) -> bool:
        """Re-validate a spec against the report (and tree when available).

        Record-level requirements are always checked; structural ones need
        the tree. Raises SnapshotMismatch for stale specs.
        """
        if spec.snapshot_id != report.snapshot_id:
            raise SnapshotMismatch(
                f"spec {spec.candidate_id} planned on {spec.snapshot_id[:12]}, "
                f"report is {report.snapshot_id[:12]}")
        record = report.by_id(spec.target)
        if record is None or record.is_test:
            return False
        lo, hi = record.byte_span
        if not all(lo <= s and e <= hi for s, e in spec.node_spans):
            return False
        if spec.modifier in (ModifierId.STMT_SHUFFLE,) and record.statement_count < 2:
            return False
        if tree is None:
            return True
        tpl = self.registry.get(record.language_id)
        rule = tpl.injection_rules.get(spec.modifier)
        if rule is None:
            return False
        node = _locate(tree, spec.node_spans[0], tpl.injection_query(spec.modifier))
        if node is None:
            return False
        return all(_check_precondition(name, node, tree, tpl)
                   for name in rule.preconditions)

    # -- planning ----------------------------------------------------------

    def plan_edits(self, spec: MutationSpec, tree: SyntaxTree,
                   tpl: LanguageTemplate) -> EditSet:
        """Realize the modifier as an edit set.

        Pure in (spec, tree, tpl); raises TargetVanished when the recorded
        span no longer matches and NoVariantAvailable when the transformation
        cannot apply (including edits that would break the parse).
        """
        node = _locate(tree, spec.node_spans[0], tpl.injection_query(spec.modifier))
        if node is None:
            raise TargetVanished(f"{spec.candidate_id}: no node at {spec.node_spans[0]}")
        planner = _PLANNERS[spec.modifier]
        rng = random.Random(spec.seed)
        edits = planner(node, tree, tpl, rng, spec)
        # entity ids are "<path>::<qualified-name>@<start>"
        edit_set = EditSet(file_path=spec.target.split("::", 1)[0], edits=edits)
        self._require_change(tree.source, edit_set, spec)
        if spec.modifier is not ModifierId.STMT_SHUFFLE:
            mutated = apply_edits(tree.source, edit_set)
            if get_grammar(tpl.grammar_ref).parse(mutated).has_root_error:
                raise NoVariantAvailable(
                    f"{spec.candidate_id}: edit would break the parse")
        return edit_set

    @staticmethod
    def _require_change(source: bytes, edit_set: EditSet, spec: MutationSpec):
        if not edit_set.edits or all(
                source[e.start:e.end] == e.replacement for e in edit_set.edits):
            raise NoVariantAvailable(f"{spec.candidate_id}: no byte change")


# ---------------------------------------------------------------------------
# structural predicates
# ---------------------------------------------------------------------------

_STATEMENT_MODIFIERS = (ModifierId.BLOCK_DROP, ModifierId.WRAPPER_DROP,
                        ModifierId.WRAPPER_UNWRAP)


def _statement_position_ok(modifier: ModifierId, node: SyntaxNode) -> bool:
    if modifier not in _STATEMENT_MODIFIERS:
        return True
    return node.parent is not None and node.parent.kind == "block"


def _check_precondition(name: str, node: SyntaxNode, tree: SyntaxTree,
                        tpl: LanguageTemplate) -> bool:
    pred = _PRECONDITIONS.get(name)
    return bool(pred and pred(node, tree, tpl))


def _pre_has_group_sibling(node, tree, tpl):
    op_text = node.fields.get("op_text")
    if not op_text or node.field("operator") is None:
        return False
    if node.fields.get("ops_count", 1) != 1:
        return False
    group = tpl.operator_group_of(op_text)
    return group is not None and any(s != op_text for s in group)


def _pre_has_flippable_operator(node, tree, tpl):
    op_text = node.fields.get("op_text")
    return (op_text in tpl.operator_flips
            and node.field("operator") is not None
            and node.fields.get("ops_count", 1) == 1)


def _pre_has_distinct_operands(node, tree, tpl):
    left, right = node.field("left"), node.field("right")
    if left is None or right is None or node.fields.get("ops_count", 1) != 1:
        return False
    return tree.text(left) != tree.text(right)


def _pre_has_else_branch(node, tree, tpl):
    alt = node.field("alternative")
    if alt is None or node.fields.get("alternative_is_chained"):
        return False
    if tree.text(alt).lstrip().startswith("elif"):
        return False
    body = node.field("body")
    if body is None or tree.text(body) == tree.text(alt):
        return False
    return _same_body_style(body, alt, tree)


def _pre_min_two_statements(node, tree, tpl):
    body = node.field("body")
    return body is not None and len(body.children) >= 2


def _pre_has_base_class(node, tree, tpl):
    if node.fields.get("base_count", 0) < 1:
        return False
    return node.field("superclasses") is not None or node.field("heritage") is not None


def _class_members(node) -> list[SyntaxNode]:
    body = node.field("body")
    if body is None:
        return []
    members = list(body.children)
    if members and _is_docstring(members[0]):
        members = members[1:]
    return members


def _class_methods(node) -> list[SyntaxNode]:
    return [m for m in _class_members(node)
            if m.kind in ("function_definition", "method_definition")]


def _pre_min_two_members(node, tree, tpl):
    return len(_class_members(node)) >= 2


def _pre_min_two_methods(node, tree, tpl):
    return len(_class_methods(node)) >= 2


_PRECONDITIONS = {
    "has_group_sibling": _pre_has_group_sibling,
    "has_flippable_operator": _pre_has_flippable_operator,
    "has_distinct_operands": _pre_has_distinct_operands,
    "has_else_branch": _pre_has_else_branch,
    "min_two_statements": _pre_min_two_statements,
    "has_base_class": _pre_has_base_class,
    "min_two_members": _pre_min_two_members,
    "min_two_methods": _pre_min_two_methods,
}


def _planner_feasible(modifier: ModifierId, node: SyntaxNode, tree: SyntaxTree,
                      tpl: LanguageTemplate) -> bool:
    """Cheap structural screens beyond named preconditions."""
    if modifier is ModifierId.CONST_MOD:
        return "value" in node.fields
    if modifier is ModifierId.CHAIN_BREAK:
        return node.field("left") is not None
    if modifier in (ModifierId.MEMBER_SHUFFLE,):
        members = _class_members(node)
        texts = {tree.text(m) for m in members}
        return len(members) >= 2 and len(texts) >= 2
    return True


def _is_docstring(node: SyntaxNode) -> bool:
    return (node.kind == "expression_statement"
            and len(node.children) == 1
            and node.children[0].kind == "string")


def _same_body_style(a: SyntaxNode, b: SyntaxNode, tree: SyntaxTree) -> bool:
    """Bodies are exchangeable only when both are laid out the same way:
    both brace interiors, both own-line blocks, or both inline."""
    return _body_style(a, tree) == _body_style(b, tree)


def _body_style(body: SyntaxNode, tree: SyntaxTree) -> str:
    src = tree.source
    if body.start > 0 and src[body.start - 1:body.start] == b"{":
        return "braced"
    if body.start == line_start_of(src, body.start):
        return "block"
    if len(body.children) == 1 and body.span == body.children[0].span:
        return "single"
    return "inline"


# ---------------------------------------------------------------------------
# planners
# ---------------------------------------------------------------------------


def _locate(tree: SyntaxTree, span: tuple[int, int], query) -> Optional[SyntaxNode]:
    span = tuple(span)
    for node in tree.walk():
        if node.span == span and (query is None or node.kind in query.kinds):
            return node
    return None


def _plan_op_change(node, tree, tpl, rng, spec):
    op = node.field("operator")
    op_text = node.fields.get("op_text")
    group = tpl.operator_group_of(op_text) if op_text else None
    if op is None or group is None:
        raise NoVariantAvailable(f"{spec.candidate_id}: operator has no group")
    siblings = [s for s in group if s != op_text]
    if not siblings:
        raise NoVariantAvailable(f"{spec.candidate_id}: group exhausted")
    choice = siblings[rng.randrange(len(siblings))]
    return [Edit(op.start, op.end, choice.encode())]


def _plan_op_flip(node, tree, tpl, rng, spec):
    op = node.field("operator")
    op_text = node.fields.get("op_text")
    flipped = tpl.operator_flips.get(op_text or "")
    if op is None or flipped is None:
        raise NoVariantAvailable(f"{spec.candidate_id}: operator not flippable")
    return [Edit(op.start, op.end, flipped.encode())]


def _plan_operand_swap(node, tree, tpl, rng, spec):
    left, right = node.field("left"), node.field("right")
    if left is None or right is None:
        raise TargetVanished(spec.candidate_id)
    left_text = tree.source[left.start:left.end]
    right_text = tree.source[right.start:right.end]
    if left_text == right_text:
        raise NoVariantAvailable(f"{spec.candidate_id}: operands identical")
    return [Edit(left.start, left.end, right_text),
            Edit(right.start, right.end, left_text)]


def _plan_chain_break(node, tree, tpl, rng, spec):
    left = node.field("left")
    if left is None:
        raise NoVariantAvailable(f"{spec.candidate_id}: no sub-operand")
    return [Edit(node.start, node.end, tree.source[left.start:left.end])]


def _plan_const_mod(node, tree, tpl, rng, spec):
    value = node.fields.get("value")
    if not isinstance(value, int):
        raise TargetVanished(spec.candidate_id)
    delta = 1 if spec.seed % 2 == 0 else -1
    return [Edit(node.start, node.end, str(value + delta).encode())]


def _plan_branch_swap(node, tree, tpl, rng, spec):
    body, alt = node.field("body"), node.field("alternative")
    if body is None or alt is None:
        raise TargetVanished(spec.candidate_id)
    if not _pre_has_else_branch(node, tree, tpl):
        raise NoVariantAvailable(f"{spec.candidate_id}: bodies not swappable")
    return [Edit(body.start, body.end, tree.source[alt.start:alt.end]),
            Edit(alt.start, alt.end, tree.source[body.start:body.end])]


def _derangement(n: int, rng: random.Random) -> list[int]:
    idx = list(range(n))
    for _ in range(512):
        rng.shuffle(idx)
        if all(i != v for i, v in enumerate(idx)):
            return idx
    return [(i + 1) % n for i in range(n)]


def _plan_permutation(nodes: list[SyntaxNode], tree, rng, spec) -> list[Edit]:
    perm = _derangement(len(nodes), rng)
    edits = []
    changed = False
    for i, node in enumerate(nodes):
        replacement = tree.source[nodes[perm[i]].start:nodes[perm[i]].end]
        if replacement != tree.source[node.start:node.end]:
            changed = True
        edits.append(Edit(node.start, node.end, replacement))
    if not changed:
        raise NoVariantAvailable(f"{spec.candidate_id}: permutation is a no-op")
    return edits


def _plan_stmt_shuffle(node, tree, tpl, rng, spec):
    body = node.field("body")
    if body is None or len(body.children) < 2:
        raise NoVariantAvailable(f"{spec.candidate_id}: fewer than two statements")
    return _plan_permutation(list(body.children), tree, rng, spec)


def _plan_member_shuffle(node, tree, tpl, rng, spec):
    members = _class_members(node)
    if len(members) < 2:
        raise NoVariantAvailable(f"{spec.candidate_id}: fewer than two members")
    return _plan_permutation(members, tree, rng, spec)


def _plan_method_drop(node, tree, tpl, rng, spec):
    methods = _class_methods(node)
    if len(methods) < 2:
        raise NoVariantAvailable(f"{spec.candidate_id}: would remove the last method")
    victim = methods[rng.randrange(len(methods))]
    start, end = _statement_deletion_span(tree.source, victim)
    return [Edit(start, end, b"")]


def _plan_block_drop(node, tree, tpl, rng, spec):
    return _drop_statement(node, tree, tpl, spec)


def _plan_wrapper_drop(node, tree, tpl, rng, spec):
    return _drop_statement(node, tree, tpl, spec)


def _drop_statement(node, tree, tpl, spec):
    block = node.parent
    if block is None or block.kind != "block":
        raise NoVariantAvailable(f"{spec.candidate_id}: not in statement position")
    if len(block.children) == 1:
        # deleting the only statement would empty the body: stub it instead
        owner = block.parent if block.parent is not None else node
        stub = render_stub(tpl, tree, block, owner)
        return [Edit(block.start, block.end, stub.encode())]
    start, end = _statement_deletion_span(tree.source, node)
    return [Edit(start, end, b"")]


def _plan_wrapper_unwrap(node, tree, tpl, rng, spec):
    body = node.field("body")
    block = node.parent
    if body is None or block is None or block.kind != "block":
        raise NoVariantAvailable(f"{spec.candidate_id}: not unwrappable")
    src = tree.source
    wrapper_indent = indent_at(src, node.start)
    style = _body_style(body, tree)
    content = src[body.start:body.end].decode("utf-8")
    if style in ("inline", "single"):
        replacement = wrapper_indent + content.strip()
    else:
        lines = content.split("\n")
        if style == "braced":
            if lines and lines[0].strip() == "":
                lines = lines[1:]
            if lines and lines[-1].strip() == "":
                lines = lines[:-1]
        unit = tpl.indent_unit
        lines = [line[len(unit):] if line.startswith(unit) else line
                 for line in lines]
        replacement = "\n".join(lines)
    start, end = _statement_deletion_span(src, node)
    if end > start and src[end - 1:end] == b"\n":
        replacement += "\n"
    return [Edit(start, end, replacement.encode())]


def _plan_base_drop(node, tree, tpl, rng, spec):
    src = tree.source
    bases = node.field("superclasses")
    if bases is not None:
        return [Edit(bases.start, bases.end, b"")]
    heritage = node.field("heritage")
    if heritage is not None:
        start = heritage.start
        while start > 0 and src[start - 1:start] in (b" ", b"\t"):
            start -= 1
        return [Edit(start, heritage.end, b"")]
    raise NoVariantAvailable(f"{spec.candidate_id}: no bases to drop")


_PLANNERS = {
    ModifierId.OP_CHANGE: _plan_op_change,
    ModifierId.OP_FLIP: _plan_op_flip,
    ModifierId.OPERAND_SWAP: _plan_operand_swap,
    ModifierId.CHAIN_BREAK: _plan_chain_break,
    ModifierId.CONST_MOD: _plan_const_mod,
    ModifierId.BRANCH_SWAP: _plan_branch_swap,
    ModifierId.STMT_SHUFFLE: _plan_stmt_shuffle,
    ModifierId.BLOCK_DROP: _plan_block_drop,
    ModifierId.WRAPPER_DROP: _plan_wrapper_drop,
    ModifierId.WRAPPER_UNWRAP: _plan_wrapper_unwrap,
    ModifierId.BASE_DROP: _plan_base_drop,
    ModifierId.MEMBER_SHUFFLE: _plan_member_shuffle,
    ModifierId.METHOD_DROP: _plan_method_drop,
}


def _statement_deletion_span(src: bytes, node: SyntaxNode) -> tuple[int, int]:
    """Extend a statement span to whole lines when nothing else shares them."""
    ls = line_start_of(src, node.start)
    le = src.find(b"\n", node.end)
    le = len(src) if le == -1 else le + 1
    prefix = src[ls:node.start]
    suffix = src[node.end:le].strip()
    comment_only = suffix.startswith(b"#") or suffix.startswith(b"//")
    if prefix.strip() == b"" and (suffix == b"" or comment_only):
        return (ls, le)
    return (node.start, node.end)


def render_stub(tpl: LanguageTemplate, tree: SyntaxTree, body: SyntaxNode,
                owner: SyntaxNode) -> str:
    """Fill the template's stub body for a block being emptied/hollowed."""
    src = tree.source
    outer_indent = indent_at(src, owner.start)
    style = _body_style(body, tree)
    if style == "block":
        indent = indent_at(src, body.children[0].start) if body.children \
            else outer_indent + tpl.indent_unit
    elif style == "braced":
        indent = outer_indent + tpl.indent_unit
    else:
        indent = ""
    return tpl.stub_body_template.format(indent=indent, outer_indent=outer_indent)


# ---------------------------------------------------------------------------
# candidate sources
# ---------------------------------------------------------------------------


class ProceduralSource:
    """CandidateSource backed by the thirteen-modifier engine."""

    def __init__(self, engine: MutationEngine, modifiers: Iterable[ModifierId],
                 root: Path):
        self.engine = engine
        self.modifiers = tuple(modifiers)
        self.root = Path(root)

    def candidates(self, report: AnalysisReport, seed: int) -> list[PlannedCandidate]:
        return self.engine.plan_all(report, self.modifiers, seed, self.root)


class ExternalEditSource:
    """CandidateSource reading externally authored edit sets (one JSON per
    line: {candidate_id, edit_set}). This is the plug-in point for
    generators outside the procedural taxonomy."""

    def __init__(self, manifest_path: Path):
        self.manifest_path = Path(manifest_path)

    def candidates(self, report: AnalysisReport, seed: int) -> list[PlannedCandidate]:
        out = []
        with open(self.manifest_path, "r", encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                d = json.loads(line)
                out.append(PlannedCandidate(
                    candidate_id=d["candidate_id"],
                    edit_set=EditSet.from_dict(d["edit_set"]),
                    origin="external",
                ))
        return out
