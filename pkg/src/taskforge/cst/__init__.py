"""Shared concrete-syntax-tree backbone: grammars, nodes, and queries."""

from __future__ import annotations

from ..errors import GrammarUnavailable
from .javascript_lang import JavaScriptGrammar
from .node import SyntaxNode, SyntaxTree, indent_at, line_start_of
from .python_lang import PythonGrammar
from .query import Query, compile_query

_GRAMMARS = {
    PythonGrammar.ref: PythonGrammar(),
    JavaScriptGrammar.ref: JavaScriptGrammar(),
}


def get_grammar(grammar_ref: str):
    """Resolve a pinned grammar reference. Raises GrammarUnavailable."""
    try:
        return _GRAMMARS[grammar_ref]
    except KeyError:
        raise GrammarUnavailable(grammar_ref) from None


def available_grammars() -> list[str]:
    return sorted(_GRAMMARS)


__all__ = [
    "SyntaxNode", "SyntaxTree", "Query", "compile_query",
    "get_grammar", "available_grammars", "indent_at", "line_start_of",
    "PythonGrammar", "JavaScriptGrammar",
]
