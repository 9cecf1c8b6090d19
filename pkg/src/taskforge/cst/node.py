"""Uniform concrete-syntax-tree node model shared by all grammars.

Every grammar produces the same node shape: a ``kind`` string, a half-open
byte span into the original source, ordered children, and named fields
(``name``, ``body``, ``operator``, ...). The engine above never touches
language-specific structure directly; it works through kinds, spans, and
fields only.
"""

from __future__ import annotations

from typing import Iterator, Optional


class SyntaxNode:
    """One node of a concrete syntax tree. Spans are byte offsets."""

    __slots__ = ("kind", "start", "end", "children", "fields", "parent")

    def __init__(self, kind: str, start: int, end: int,
                 children: Optional[list["SyntaxNode"]] = None,
                 fields: Optional[dict] = None):
        self.kind = kind
        self.start = start
        self.end = end
        self.children: list[SyntaxNode] = children if children is not None else []
        self.fields: dict[str, object] = fields if fields is not None else {}
        self.parent: Optional[SyntaxNode] = None

    @property
    def span(self) -> tuple[int, int]:
        return (self.start, self.end)

    def field(self, name: str):
        """Return a named field (a SyntaxNode, a list of them, or None)."""
        return self.fields.get(name)

    def walk(self) -> Iterator["SyntaxNode"]:
        """Yield this node and every descendant, pre-order."""
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def ancestors(self) -> Iterator["SyntaxNode"]:
        node = self.parent
        while node is not None:
            yield node
            node = node.parent

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"<{self.kind} [{self.start},{self.end})>"


class SyntaxTree:
    """A parsed file: root node, original bytes, and error state.

    ``has_root_error`` is true when the source could not be parsed as a
    whole; such trees carry no nodes and must not be analyzed further.
    """

    def __init__(self, root: SyntaxNode, source: bytes, language_id: str,
                 has_root_error: bool = False, error_detail: str = ""):
        self.root = root
        self.source = source
        self.language_id = language_id
        self.has_root_error = has_root_error
        self.error_detail = error_detail
        _link_parents(root)

    def text(self, node: SyntaxNode) -> str:
        return self.source[node.start:node.end].decode("utf-8")

    def slice(self, start: int, end: int) -> str:
        return self.source[start:end].decode("utf-8")

    def walk(self) -> Iterator[SyntaxNode]:
        return self.root.walk()


def _link_parents(root: SyntaxNode) -> None:
    stack = [root]
    while stack:
        node = stack.pop()
        for child in node.children:
            child.parent = node
            stack.append(child)


def line_starts(source: bytes) -> list[int]:
    """Byte offsets at which each line begins (0-based line index)."""
    starts = [0]
    for i, b in enumerate(source):
        if b == 0x0A:
            starts.append(i + 1)
    return starts


def line_start_of(source: bytes, offset: int) -> int:
    """Byte offset of the start of the line containing ``offset``."""
    nl = source.rfind(b"\n", 0, offset)
    return nl + 1


def indent_at(source: bytes, offset: int) -> str:
    """Leading whitespace of the line containing ``offset``."""
    start = line_start_of(source, offset)
    end = start
    while end < len(source) and source[end:end + 1] in (b" ", b"\t"):
        end += 1
    return source[start:end].decode("utf-8")
