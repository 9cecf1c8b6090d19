"""Pattern queries over syntax trees.

A query is an alternation of node kinds, e.g. ``for_statement |
while_statement``. Compilation validates the syntax and checks every kind
against the grammar's node inventory, so a template referencing an unknown
kind fails at validation time rather than silently matching nothing.
"""

from __future__ import annotations

import re

from ..errors import QueryError
from .node import SyntaxNode, SyntaxTree

_KIND_RE = re.compile(r"^[a-z][a-z0-9_]*$")


class Query:
    """A compiled kind-alternation pattern."""

    def __init__(self, text: str, kinds: frozenset[str]):
        self.text = text
        self.kinds = kinds

    def matches(self, tree: SyntaxTree) -> list[SyntaxNode]:
        """All matching nodes in document order (by start, then size)."""
        found = [n for n in tree.walk() if n.kind in self.kinds]
        found.sort(key=lambda n: (n.start, -(n.end - n.start)))
        return found

    def matches_in(self, tree: SyntaxTree, span: tuple[int, int]) -> list[SyntaxNode]:
        """Matching nodes fully contained in the byte span."""
        lo, hi = span
        return [n for n in self.matches(tree) if n.start >= lo and n.end <= hi]

    def __repr__(self) -> str:  # pragma: no cover
        return f"Query({self.text!r})"


def compile_query(text: str, known_kinds: frozenset[str]) -> Query:
    """Compile an alternation query, verifying kinds against the grammar.

    Raises QueryError for empty patterns, malformed kind names, or kinds
    absent from the grammar inventory.
    """
    if not isinstance(text, str) or not text.strip():
        raise QueryError("empty query")
    parts = [p.strip() for p in text.split("|")]
    kinds = []
    for part in parts:
        if not part or not _KIND_RE.match(part):
            raise QueryError(f"malformed kind pattern {part!r} in query {text!r}")
        if part not in known_kinds:
            raise QueryError(f"unknown node kind {part!r} for this grammar")
        kinds.append(part)
    return Query(text, frozenset(kinds))
